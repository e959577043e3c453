use std::collections::BTreeMap;
use std::fmt::Write as _;

use mimo_diag_core::optim::SolverTrace;
use mimo_diag_core::{ComplexMatrix, ConditionReport, LinearTransceiver};
use serde::{Deserialize, Serialize};

/// One residual compared against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

/// A transceiver design and its evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEntry {
    pub label: String,
    pub method: String,
    pub streams: usize,
    pub conditions: ConditionReport,
    pub mmse_sic_rate: f64,
    pub precoder: ComplexMatrix,
    pub decoder: ComplexMatrix,
    pub stream_gains: Vec<f64>,
}

impl DesignEntry {
    pub fn new(
        label: impl Into<String>,
        method: impl Into<String>,
        t: &LinearTransceiver,
        conditions: ConditionReport,
        mmse_sic_rate: f64,
    ) -> Self {
        Self {
            label: label.into(),
            method: method.into(),
            streams: t.streams(),
            conditions,
            mmse_sic_rate,
            precoder: t.precoder.clone(),
            decoder: t.decoder.clone(),
            stream_gains: t.stream_gains.clone(),
        }
    }

    fn checks(&self) -> [Check; 3] {
        let c = &self.conditions;
        [
            Check::new(format!("{}: |R - C|", self.label), c.cap_gap, c.tolerance),
            Check::new(format!("{}: off-diagonal", self.label), c.diag_residual, c.tolerance),
            Check::new(format!("{}: covariance", self.label), c.cov_residual, c.tolerance),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub scenario: String,
    pub scenario_digest: String,
    pub designs: Vec<DesignEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<SolverTrace>,
    /// Named scalar results (rates, multipliers, slacks).
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn new(command: &str, scenario: &str, digest: String) -> Self {
        Self {
            command: command.to_string(),
            scenario: scenario.to_string(),
            scenario_digest: digest,
            designs: Vec::new(),
            optimizer: None,
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            pass: true,
            wall_clock_seconds: 0.0,
        }
    }

    /// Adds a design together with its three condition checks.
    pub fn push_design(&mut self, d: DesignEntry) {
        self.checks.extend(d.checks());
        self.designs.push(d);
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    /// Sets the overall verdict from the checks.
    pub fn finish(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the wall-clock field; identical inputs give identical
    /// payloads.
    pub fn payload(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_seconds = 0.0;
        r.to_json()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} on {} [{}]", self.command, self.scenario, &self.scenario_digest[..12]);

        if !self.designs.is_empty() {
            let label_w = self.designs.iter().map(|d| d.label.len()).max().unwrap_or(0).max(6);
            let _ = writeln!(
                out,
                "\n{:<label_w$}  {:<13}  {:>7}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}",
                "design", "method", "streams", "R", "C", "MMSE-SIC", "|R-C|", "offdiag", "cov"
            );
            for d in &self.designs {
                let c = &d.conditions;
                let _ = writeln!(
                    out,
                    "{:<label_w$}  {:<13}  {:>7}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.2e}  {:>9.2e}  {:>9.2e}",
                    d.label,
                    d.method,
                    d.streams,
                    c.rate_r,
                    c.capacity_c,
                    d.mmse_sic_rate,
                    c.cap_gap,
                    c.diag_residual,
                    c.cov_residual
                );
            }
            for d in &self.designs {
                if d.precoder.rows() <= 4 && d.precoder.cols() <= 4 {
                    let _ = writeln!(out, "\n{} precoder V:\n{}", d.label, matrix_text(&d.precoder));
                    let _ = writeln!(out, "{} decoder U:\n{}", d.label, matrix_text(&d.decoder));
                }
            }
        }

        if let Some(t) = &self.optimizer {
            let _ = writeln!(
                out,
                "\noptimizer: {} iterations, converged {}, final change {:.2e}",
                t.iterations, t.converged, t.final_residual
            );
        }

        if !self.metrics.is_empty() {
            let w = self.metrics.keys().map(String::len).max().unwrap_or(0);
            let _ = writeln!(out);
            for (k, v) in &self.metrics {
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    let _ = writeln!(out, "{k:<w$}  {v:.0}");
                } else {
                    let _ = writeln!(out, "{k:<w$}  {v:.4}");
                }
            }
        }

        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let _ = writeln!(out, "\n{:<w$}  {:>9}  {:>9}  verdict", "check", "value", "tol");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<w$}  {:>9.2e}  {:>9.1e}  {}",
                c.name,
                c.value,
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            out,
            "\nverdict: {} ({:.3} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.wall_clock_seconds
        );
        out
    }
}

fn matrix_text(m: &ComplexMatrix) -> String {
    let real = m.as_slice().iter().all(|z| z.im == 0.0);
    let mut out = String::new();
    for i in 0..m.rows() {
        out.push_str("  ");
        for z in m.row(i) {
            if real {
                let _ = write!(out, "{:>9.4}", z.re);
            } else {
                let _ = write!(out, "{:>9.4}{:+.4}i", z.re, z.im);
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_requires_every_check() {
        let mut r = RunReport::new("design", "x", "0".repeat(64));
        r.checks.push(Check::new("a", 1e-12, 1e-8));
        r.finish();
        assert!(r.pass);
        r.checks.push(Check::new("b", 0.3, 1e-8));
        r.finish();
        assert!(!r.pass);
    }

    #[test]
    fn payload_ignores_wall_clock() {
        let mut a = RunReport::new("verify", "x", "0".repeat(64));
        let mut b = a.clone();
        a.wall_clock_seconds = 1.0;
        b.wall_clock_seconds = 2.5;
        assert_eq!(a.payload(), b.payload());
        assert_ne!(a.to_json(), b.to_json());
    }
}
