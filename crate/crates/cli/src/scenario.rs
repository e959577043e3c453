//! Scenario files: JSON with named matrices and scalars.
//!
//! ```json
//! {
//!   "kind": "point_to_point",
//!   "matrices": { "H": [[1, 0], [0, [0.5, -0.5]]], "S_x": [[1, 0], [0, 1]] },
//!   "scalars": {},
//!   "metadata": "free text"
//! }
//! ```
//!
//! Entries are either a plain number or a `[re, im]` pair.

use std::collections::BTreeMap;
use std::path::Path;

use mimo_diag_core::optim::{CrScenario, IcScenario};
use mimo_diag_core::{Complex64, ComplexMatrix, MimoChannel, TransmitCovariance};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bundled;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("`{0}` is neither a readable file nor a bundled scenario ({list})", list = bundled::NAMES.join(", "))]
    NotFound(String),
    #[error("malformed scenario: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{kind} scenario is missing {what} `{name}`")]
    Missing {
        kind: ScenarioKind,
        what: &'static str,
        name: String,
    },
    #[error("{kind} scenario does not accept {what} `{name}`")]
    Unexpected {
        kind: ScenarioKind,
        what: &'static str,
        name: String,
    },
    #[error("matrix `{name}`: {detail}")]
    Malformed { name: String, detail: String },
    #[error("`{name}` is {rows}x{cols} but must be {expected}")]
    Shape {
        name: String,
        rows: usize,
        cols: usize,
        expected: String,
    },
    #[error("`{name}` is invalid: {source}")]
    Invalid {
        name: String,
        source: mimo_diag_core::Error,
    },
    #[error("scalar `{name}` = {value} is invalid: {detail}")]
    Scalar {
        name: String,
        value: f64,
        detail: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    PointToPoint,
    InterferenceChannel,
    CognitiveRadio,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PointToPoint => "point_to_point",
            Self::InterferenceChannel => "interference_channel",
            Self::CognitiveRadio => "cognitive_radio",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

/// Row-major nested arrays of entries, as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixLiteral(Vec<Vec<Entry>>);

impl MatrixLiteral {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = (0..m.rows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .map(|z| {
                        if z.im == 0.0 {
                            Entry::Real(z.re)
                        } else {
                            Entry::Complex([z.re, z.im])
                        }
                    })
                    .collect()
            })
            .collect();
        Self(rows)
    }

    fn to_matrix(&self, name: &str) -> Result<ComplexMatrix, ScenarioError> {
        let malformed = |detail: String| ScenarioError::Malformed {
            name: name.to_string(),
            detail,
        };
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(malformed("matrix is empty".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for (i, row) in self.0.iter().enumerate() {
            if row.len() != cols {
                return Err(malformed(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (j, e) in row.iter().enumerate() {
                let z = match *e {
                    Entry::Real(re) => Complex64::new(re, 0.0),
                    Entry::Complex([re, im]) => Complex64::new(re, im),
                };
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(malformed(format!("entry ({i}, {j}) is not finite")));
                }
                data.push(z);
            }
        }
        ComplexMatrix::new(rows, cols, data).map_err(|e| malformed(e.to_string()))
    }
}

/// A scenario as it appears on disk. Parsed files are validated; see
/// [`ScenarioFile::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub kind: ScenarioKind,
    pub matrices: BTreeMap<String, MatrixLiteral>,
    #[serde(default)]
    pub scalars: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_precoders: Option<BTreeMap<String, MatrixLiteral>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<String>,
}

/// Validated problem data.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    PointToPoint {
        channel: MimoChannel,
        s_x: TransmitCovariance,
        power_budget: Option<f64>,
    },
    Interference {
        ic: IcScenario,
        fixed_precoders: Option<[ComplexMatrix; 2]>,
    },
    CognitiveRadio(CrScenario),
}

struct Names {
    required_matrices: &'static [&'static str],
    optional_matrices: &'static [&'static str],
    required_scalars: &'static [&'static str],
    optional_scalars: &'static [&'static str],
}

fn names(kind: ScenarioKind) -> Names {
    match kind {
        ScenarioKind::PointToPoint => Names {
            required_matrices: &["H", "S_x"],
            optional_matrices: &["S_z"],
            required_scalars: &[],
            optional_scalars: &["power_budget", "tol"],
        },
        ScenarioKind::InterferenceChannel => Names {
            required_matrices: &["H11", "H12", "H21", "H22"],
            optional_matrices: &["S_z1", "S_z2"],
            required_scalars: &["power_budget"],
            optional_scalars: &["tol"],
        },
        ScenarioKind::CognitiveRadio => Names {
            required_matrices: &["H", "G"],
            optional_matrices: &[],
            required_scalars: &["power_budget", "it_limit"],
            optional_scalars: &["tol"],
        },
    }
}

fn shape(name: &str, m: &ComplexMatrix, rows: usize, cols: usize) -> Result<(), ScenarioError> {
    if m.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(ScenarioError::Shape {
            name: name.to_string(),
            rows: m.rows(),
            cols: m.cols(),
            expected: format!("{rows}x{cols}"),
        })
    }
}

fn invalid(name: &str) -> impl FnOnce(mimo_diag_core::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Invalid {
        name: name.to_string(),
        source,
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: Self = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        hex_digest(canonical.as_bytes())
    }

    /// Checks names, shapes and matrix properties, and builds the problem.
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        let kind = self.kind;
        let n = names(kind);
        for name in n.required_matrices {
            if !self.matrices.contains_key(*name) {
                return Err(ScenarioError::Missing {
                    kind,
                    what: "matrix",
                    name: name.to_string(),
                });
            }
        }
        for name in n.required_scalars {
            if !self.scalars.contains_key(*name) {
                return Err(ScenarioError::Missing {
                    kind,
                    what: "scalar",
                    name: name.to_string(),
                });
            }
        }
        for name in self.matrices.keys() {
            if !n.required_matrices.contains(&name.as_str())
                && !n.optional_matrices.contains(&name.as_str())
            {
                return Err(ScenarioError::Unexpected {
                    kind,
                    what: "matrix",
                    name: name.clone(),
                });
            }
        }
        for (name, &value) in &self.scalars {
            if !n.required_scalars.contains(&name.as_str())
                && !n.optional_scalars.contains(&name.as_str())
            {
                return Err(ScenarioError::Unexpected {
                    kind,
                    what: "scalar",
                    name: name.clone(),
                });
            }
            if !(value.is_finite() && value > 0.0) {
                return Err(ScenarioError::Scalar {
                    name: name.clone(),
                    value,
                    detail: "must be positive and finite",
                });
            }
        }
        if self.fixed_precoders.is_some() && kind != ScenarioKind::InterferenceChannel {
            return Err(ScenarioError::Unexpected {
                kind,
                what: "field",
                name: "fixed_precoders".into(),
            });
        }

        let m = |name: &str| -> Result<ComplexMatrix, ScenarioError> {
            self.matrices[name].to_matrix(name)
        };
        let opt = |name: &str| -> Result<Option<ComplexMatrix>, ScenarioError> {
            self.matrices.get(name).map(|l| l.to_matrix(name)).transpose()
        };
        let scalar = |name: &str| self.scalars.get(name).copied();

        match kind {
            ScenarioKind::PointToPoint => {
                let h = m("H")?;
                let s = m("S_x")?;
                shape("S_x", &s, h.cols(), h.cols())?;
                let s_x = TransmitCovariance::new(s).map_err(invalid("S_x"))?;
                let channel = match opt("S_z")? {
                    Some(sz) => {
                        shape("S_z", &sz, h.rows(), h.rows())?;
                        MimoChannel::new(h, sz).map_err(invalid("S_z"))?
                    }
                    None => MimoChannel::white(h).map_err(invalid("H"))?,
                };
                Ok(Scenario::PointToPoint {
                    channel,
                    s_x,
                    power_budget: scalar("power_budget"),
                })
            }
            ScenarioKind::InterferenceChannel => {
                let h = [[m("H11")?, m("H12")?], [m("H21")?, m("H22")?]];
                let tx = [h[0][0].cols(), h[1][1].cols()];
                let rx = [h[0][0].rows(), h[1][1].rows()];
                shape("H12", &h[0][1], rx[0], tx[1])?;
                shape("H21", &h[1][0], rx[1], tx[0])?;
                let mut noise = Vec::with_capacity(2);
                for (k, name) in ["S_z1", "S_z2"].into_iter().enumerate() {
                    let sz = opt(name)?.unwrap_or_else(|| ComplexMatrix::identity(rx[k]));
                    shape(name, &sz, rx[k], rx[k])?;
                    MimoChannel::new(h[k][k].clone(), sz.clone()).map_err(invalid(name))?;
                    noise.push(sz);
                }
                let noise: [ComplexMatrix; 2] = noise.try_into().expect("two users");
                let p = scalar("power_budget").expect("checked above");
                let ic = IcScenario::new(h, [p, p], noise).map_err(invalid("H11"))?;
                let fixed_precoders = match &self.fixed_precoders {
                    None => None,
                    Some(map) => {
                        for name in map.keys() {
                            if name != "V1" && name != "V2" {
                                return Err(ScenarioError::Unexpected {
                                    kind,
                                    what: "fixed precoder",
                                    name: name.clone(),
                                });
                            }
                        }
                        let get = |name: &str, k: usize| -> Result<ComplexMatrix, ScenarioError> {
                            let lit = map.get(name).ok_or_else(|| ScenarioError::Missing {
                                kind,
                                what: "fixed precoder",
                                name: name.to_string(),
                            })?;
                            let v = lit.to_matrix(name)?;
                            if v.rows() != tx[k] {
                                return Err(ScenarioError::Shape {
                                    name: name.to_string(),
                                    rows: v.rows(),
                                    cols: v.cols(),
                                    expected: format!("{}xd", tx[k]),
                                });
                            }
                            Ok(v)
                        };
                        Some([get("V1", 0)?, get("V2", 1)?])
                    }
                };
                Ok(Scenario::Interference { ic, fixed_precoders })
            }
            ScenarioKind::CognitiveRadio => {
                let h = m("H")?;
                let g = m("G")?;
                if g.cols() != h.cols() {
                    return Err(ScenarioError::Shape {
                        name: "G".into(),
                        rows: g.rows(),
                        cols: g.cols(),
                        expected: format!("Nx{}", h.cols()),
                    });
                }
                let p = scalar("power_budget").expect("checked above");
                let gamma = scalar("it_limit").expect("checked above");
                Ok(Scenario::CognitiveRadio(
                    CrScenario::new(h, g, p, gamma).map_err(invalid("G"))?,
                ))
            }
        }
    }

    /// Tolerance given in the file, if any.
    pub fn tolerance(&self) -> Option<f64> {
        self.scalars.get("tol").copied()
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioFile::from_json(&text)
}

/// A path to a scenario file, or the name of a bundled scenario.
pub fn load_scenario(arg: &str) -> Result<(String, ScenarioFile), ScenarioError> {
    let path = Path::new(arg);
    if path.is_file() {
        let label = path
            .file_stem()
            .map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned());
        return Ok((label, parse_scenario(path)?));
    }
    let name = arg.strip_suffix(".json").unwrap_or(arg);
    match bundled::get(name) {
        Some(text) => Ok((name.to_string(), ScenarioFile::from_json(text)?)),
        None => Err(ScenarioError::NotFound(arg.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2p(h: &str, s: &str) -> String {
        format!(r#"{{"kind":"point_to_point","matrices":{{"H":{h},"S_x":{s}}}}}"#)
    }

    #[test]
    fn real_and_complex_entries() {
        let f = ScenarioFile::from_json(&p2p("[[1, [0, 2]], [3, 4]]", "[[1, 0], [0, 1]]")).unwrap();
        let h = f.matrices["H"].to_matrix("H").unwrap();
        assert_eq!(h[(0, 1)], Complex64::new(0.0, 2.0));
        assert_eq!(h[(1, 0)], Complex64::new(3.0, 0.0));
    }

    #[test]
    fn ragged_rows_name_the_matrix() {
        let e = ScenarioFile::from_json(&p2p("[[1, 2], [3]]", "[[1, 0], [0, 1]]")).unwrap_err();
        assert!(e.to_string().contains("`H`"), "{e}");
    }

    #[test]
    fn missing_and_unknown_names() {
        let e = ScenarioFile::from_json(r#"{"kind":"point_to_point","matrices":{"H":[[1]]}}"#)
            .unwrap_err();
        assert!(matches!(e, ScenarioError::Missing { ref name, .. } if name == "S_x"), "{e}");
        let e = ScenarioFile::from_json(
            r#"{"kind":"point_to_point","matrices":{"H":[[1]],"S_x":[[1]],"Sx":[[1]]}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("`Sx`"), "{e}");
    }

    #[test]
    fn non_positive_scalar_rejected() {
        let e = ScenarioFile::from_json(
            r#"{"kind":"cognitive_radio","matrices":{"H":[[1]],"G":[[1]]},
                "scalars":{"power_budget":1,"it_limit":0}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("it_limit"), "{e}");
    }

    #[test]
    fn bundled_names_resolve() {
        for name in bundled::NAMES {
            let (label, _) = load_scenario(name).unwrap();
            assert_eq!(&label, name);
        }
        assert!(matches!(load_scenario("nope"), Err(ScenarioError::NotFound(_))));
    }
}
