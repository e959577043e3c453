use std::time::Instant;

use mimo_diag_core::ensemble::random_instance;
use mimo_diag_core::optim::{cr_capacity_opt, ic_effective_channel, wmmse_ic, WmmseOptions, DEFAULT_CR_TOL};
use mimo_diag_core::transceiver::DEFAULT_CONDITION_TOL;
use mimo_diag_core::{
    capacity, check_conditions, evd_zf_design, mmse_sic_rate, rank_reduce, svd_waterfill_design,
    theorem1_design, whiten, TransmitCovariance,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::report::{Check, DesignEntry, RunReport};
use crate::scenario::{hex_digest, Scenario, ScenarioError, ScenarioFile};

/// Feasibility slack allowed on power and interference constraints.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("`{command}` needs a {expected} scenario, got {got}")]
    WrongKind {
        command: &'static str,
        expected: &'static str,
        got: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] mimo_diag_core::Error),
}

pub type Result<T> = std::result::Result<T, CommandError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Theorem1,
    SvdWaterfill,
    EvdZf,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Theorem1 => "theorem1",
            Self::SvdWaterfill => "svd_waterfill",
            Self::EvdZf => "evd_zf",
        }
    }
}

fn check_tol(tol: f64) -> Result<f64> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(CommandError::Invalid(format!("tolerance must be positive, got {tol}")))
    }
}

fn wrong_kind(command: &'static str, expected: &'static str, file: &ScenarioFile) -> CommandError {
    CommandError::WrongKind {
        command,
        expected,
        got: file.kind.to_string(),
    }
}

/// Point-to-point design: builds the transceiver with `method` on the
/// whitened channel and checks it against the covariance it targets.
pub fn cmd_design(name: &str, file: &ScenarioFile, method: Method, tol: Option<f64>) -> Result<RunReport> {
    let start = Instant::now();
    let tol = check_tol(tol.or(file.tolerance()).unwrap_or(DEFAULT_CONDITION_TOL))?;
    let Scenario::PointToPoint { channel, s_x, power_budget } = file.validate()? else {
        return Err(wrong_kind("design", "point_to_point", file));
    };
    let h = whiten(&channel)?;
    let (t, target) = match method {
        // streams beyond rank(H) carry nothing; the design realizes the
        // reduced covariance, which has the same capacity
        Method::Theorem1 => (theorem1_design(&h, &s_x)?, rank_reduce(&h, &s_x)?),
        Method::SvdWaterfill => {
            let p = power_budget.unwrap_or_else(|| s_x.trace());
            let t = svd_waterfill_design(&h, p)?;
            let cov = TransmitCovariance::from_precoder(&t.precoder)?;
            (t, cov)
        }
        Method::EvdZf => (evd_zf_design(&h, &s_x)?, s_x.clone()),
    };
    let conditions = check_conditions(&h, &target, &t, tol)?;
    let sic = mmse_sic_rate(&h, &t.precoder)?;

    let mut report = RunReport::new("design", name, file.digest());
    report.metric("capacity_of_s_x", capacity(&h, &s_x)?);
    report.metric("rate", conditions.rate_r);
    report.metric("mmse_sic_rate", sic);
    report.push_design(DesignEntry::new("link", method.name(), &t, conditions, sic));
    report.finish();
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Two-user interference channel: WMMSE covariances (or the fixed precoders
/// in the file), then a diagonalizing design per user on the effective
/// channel that treats the other user as noise.
pub fn cmd_ic(name: &str, file: &ScenarioFile, seed: Option<u64>, max_iters: Option<usize>) -> Result<RunReport> {
    let start = Instant::now();
    let tol = check_tol(file.tolerance().unwrap_or(DEFAULT_CONDITION_TOL))?;
    let Scenario::Interference { ic, fixed_precoders } = file.validate()? else {
        return Err(wrong_kind("ic", "interference_channel", file));
    };
    let mut report = RunReport::new("ic", name, file.digest());
    let precoders = match fixed_precoders {
        Some(v) => v,
        None => {
            let mut opts = WmmseOptions {
                seed,
                ..Default::default()
            };
            if let Some(n) = max_iters {
                opts.max_iters = n;
            }
            let out = wmmse_ic(&ic, &opts)?;
            let drop = out
                .trace
                .objective_history
                .windows(2)
                .map(|w| w[0] - w[1])
                .fold(0.0, f64::max);
            report.checks.push(Check::new("WMMSE sum-rate decrease", drop, 1e-10));
            for (k, v) in out.precoders.iter().enumerate() {
                let excess = (v.frobenius_norm().powi(2) - ic.power_budget[k]).max(0.0);
                report
                    .checks
                    .push(Check::new(format!("user {} power excess", k + 1), excess, FEASIBILITY_TOL));
            }
            report.optimizer = Some(out.trace);
            out.precoders
        }
    };

    let mut sum = 0.0;
    for k in 0..2 {
        let h_eff = ic_effective_channel(&ic, k, &precoders[1 - k])?;
        let s = TransmitCovariance::from_precoder(&precoders[k])?;
        let t = theorem1_design(&h_eff, &s)?;
        let conditions = check_conditions(&h_eff, &rank_reduce(&h_eff, &s)?, &t, tol)?;
        let sic = mmse_sic_rate(&h_eff, &t.precoder)?;
        sum += conditions.capacity_c;
        report.metric(&format!("user{}_capacity", k + 1), conditions.capacity_c);
        report.metric(&format!("user{}_rate", k + 1), conditions.rate_r);
        report.metric(&format!("user{}_power", k + 1), s.trace());
        report.push_design(DesignEntry::new(format!("user {}", k + 1), "theorem1", &t, conditions, sic));
    }
    report.metric("sum_rate", sum);
    report.finish();
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Cognitive radio: optimal covariance under power and interference limits,
/// then the diagonalizing design realizing it.
pub fn cmd_cr(name: &str, file: &ScenarioFile, tol: Option<f64>) -> Result<RunReport> {
    let start = Instant::now();
    let tol = check_tol(tol.unwrap_or(DEFAULT_CR_TOL))?;
    let cond_tol = check_tol(file.tolerance().unwrap_or(DEFAULT_CONDITION_TOL))?;
    let Scenario::CognitiveRadio(sc) = file.validate()? else {
        return Err(wrong_kind("cr", "cognitive_radio", file));
    };
    let sol = cr_capacity_opt(&sc, tol)?;
    let h = &sc.h_secondary;
    let t = theorem1_design(h, &sol.covariance)?;
    let conditions = check_conditions(h, &rank_reduce(h, &sol.covariance)?, &t, cond_tol)?;
    let sic = mmse_sic_rate(h, &t.precoder)?;

    let mut report = RunReport::new("cr", name, file.digest());
    report.metric("capacity", sol.capacity);
    report.metric("power_used", sol.power_used);
    report.metric("interference", sol.interference);
    report.metric("it_slack", sc.it_limit - sol.interference);
    report.metric("power_multiplier", sol.power_multiplier);
    report.metric("it_multiplier", sol.it_multiplier);
    for i in 0..sol.covariance.dim() {
        for j in 0..sol.covariance.dim() {
            let z = sol.covariance.matrix()[(i, j)];
            report.metric(&format!("s_x[{i}][{j}].re"), z.re);
            if z.im != 0.0 {
                report.metric(&format!("s_x[{i}][{j}].im"), z.im);
            }
        }
    }
    report.checks.push(Check::new("KKT residual", sol.kkt_residual, tol));
    report.checks.push(Check::new(
        "power excess",
        (sol.power_used - sc.power_budget).max(0.0),
        FEASIBILITY_TOL,
    ));
    report.checks.push(Check::new(
        "interference excess",
        (sol.interference - sc.it_limit).max(0.0),
        FEASIBILITY_TOL,
    ));
    report.push_design(DesignEntry::new("secondary", "theorem1", &t, conditions, sic));
    report.finish();
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Seeded random ensemble of channels and covariances, including rank
/// deficient ones; reports the worst residuals of the diagonalizing design.
pub fn cmd_verify(ensemble_size: usize, max_dim: usize, seed: u64) -> Result<RunReport> {
    let start = Instant::now();
    if ensemble_size == 0 || max_dim == 0 {
        return Err(CommandError::Invalid(format!(
            "ensemble size and maximum dimension must be positive, got {ensemble_size} and {max_dim}"
        )));
    }
    let tol = DEFAULT_CONDITION_TOL;
    let label = format!("ensemble n={ensemble_size} max_dim={max_dim} seed={seed}");
    let mut report = RunReport::new("verify", &label, hex_digest(label.as_bytes()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut gap, mut diag, mut cov) = (0.0_f64, 0.0_f64, 0.0_f64);
    let (mut reduced, mut failures) = (0usize, 0usize);
    for i in 0..ensemble_size {
        let inst = random_instance(&mut rng, max_dim);
        let s = TransmitCovariance::new(inst.s_x)?;
        let t = theorem1_design(&inst.h, &s)?;
        let target = rank_reduce(&inst.h, &s)?;
        if target.rank() < s.rank() {
            reduced += 1;
        }
        let c = check_conditions(&inst.h, &target, &t, tol)?;
        if !c.all_ok() {
            failures += 1;
        }
        gap = gap.max(c.cap_gap);
        diag = diag.max(c.diag_residual);
        cov = cov.max(c.cov_residual);
        if ensemble_size == 1 {
            let sic = mmse_sic_rate(&inst.h, &t.precoder)?;
            report.metric("rate", c.rate_r);
            report.metric("capacity", c.capacity_c);
            report.push_design(DesignEntry::new(format!("instance {i}"), "theorem1", &t, c, sic));
        }
    }
    report.metric("instances", ensemble_size as f64);
    report.metric("rank_reduced_instances", reduced as f64);
    report.metric("failed_instances", failures as f64);
    if ensemble_size > 1 {
        report.checks.push(Check::new("worst |R - C|", gap, tol));
        report.checks.push(Check::new("worst off-diagonal", diag, tol));
        report.checks.push(Check::new("worst covariance", cov, tol));
    }
    report.finish();
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
