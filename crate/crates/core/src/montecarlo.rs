//! Seeded Monte Carlo averaging of rate reports over independent channel
//! realizations, and one-parameter sweeps that pair every simulated point
//! with its closed-form bounds.
//!
//! Reproducibility contract: a (config, master seed, trial count) triple
//! fully determines every number produced, independent of thread count or
//! scheduling. Each trial derives its own RNG seed from the master seed and
//! the trial index through a fixed integer mix, trials land in an indexed
//! buffer, and aggregation walks that buffer in index order with compensated
//! summation — so no reduction order ever depends on the scheduler.

use rayon::prelude::*;

use crate::an_design::design_data_and_filter;
use crate::asymptotics::BoundReport;
use crate::ofdm::{build_time_ops, draw_channel, SystemConfig};
use crate::rates::{fast_secrecy_report, EveStrategy, RateReport};
use crate::{Error, Result};

/// Trial count used by acceptance-style runs when the caller does not say
/// otherwise: small enough to keep full sweeps interactive, large enough that
/// the standard error is well inside the tolerances those runs assert.
pub const DEFAULT_TRIALS: usize = 200;

/// A parameter a sweep can vary. `GammaDb` sets both links' SNRs from a dB
/// value; the others overwrite one config field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    NE,
    NA,
    Theta,
    Alpha,
    GammaDb,
}

impl SweepParam {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "n_e" => Ok(SweepParam::NE),
            "n_a" => Ok(SweepParam::NA),
            "theta" => Ok(SweepParam::Theta),
            "alpha" => Ok(SweepParam::Alpha),
            "gamma_db" => Ok(SweepParam::GammaDb),
            _ => Err(Error::Plan(format!(
                "unknown sweep parameter `{name}` (expected n_e, n_a, theta, alpha, or gamma_db)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::NE => "n_e",
            SweepParam::NA => "n_a",
            SweepParam::Theta => "theta",
            SweepParam::Alpha => "alpha",
            SweepParam::GammaDb => "gamma_db",
        }
    }

    /// The base config with this parameter set to `value`, re-validated.
    /// Antenna counts must arrive as exact positive integers.
    pub fn apply(&self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = base.clone();
        match self {
            SweepParam::NE => c.n_e = as_count(self.name(), value)?,
            SweepParam::NA => c.n_a = as_count(self.name(), value)?,
            SweepParam::Theta => c.theta = value,
            SweepParam::Alpha => c.alpha = value,
            SweepParam::GammaDb => {
                let g = 10f64.powf(value / 10.0);
                c.gamma_bob = g;
                c.gamma_eve = g;
            }
        }
        c.validate()
    }
}

fn as_count(name: &str, value: f64) -> Result<usize> {
    if value.fract() == 0.0 && value >= 1.0 && value <= 4096.0 {
        Ok(value as usize)
    } else {
        Err(Error::Plan(format!("{name} must be a positive integer, got {value}")))
    }
}

/// Everything a sweep needs: the base configuration, how many trials per
/// point, the master seed shared by all points (common random numbers, so
/// curves are smooth functions of the parameter), the swept parameter with
/// its grid, and the eavesdropper strategy.
#[derive(Clone, Debug)]
pub struct TrialPlan {
    pub base: SystemConfig,
    pub n_trials: usize,
    pub master_seed: u64,
    pub sweep_param: Option<SweepParam>,
    pub grid: Vec<f64>,
    pub strategy: EveStrategy,
}

impl TrialPlan {
    fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Plan("at least one trial required".to_string()));
        }
        match (self.sweep_param, self.grid.is_empty()) {
            (Some(p), true) => {
                Err(Error::Plan(format!("sweep over {} has an empty grid", p.name())))
            }
            (None, false) => {
                Err(Error::Plan("grid values given without a sweep parameter".to_string()))
            }
            _ => Ok(()),
        }
    }
}

/// Mean and standard error of every rate field over the trials of one
/// configuration, plus that configuration's closed-form bounds. Rates are in
/// bits/block ([`RateReport::per_shz`] converts).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSummary {
    pub mean: RateReport,
    pub stderr: RateReport,
    pub bounds: BoundReport,
    pub n_trials: usize,
    pub master_seed: u64,
}

/// One sweep row: the grid value (absent for a no-sweep single point), the
/// fully resolved configuration it produced, and the aggregate.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: Option<f64>,
    pub config: SystemConfig,
    pub summary: PointSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub param: Option<SweepParam>,
    pub rows: Vec<SweepRow>,
}

/// Per-trial RNG seed: a counter-mixed finalizer over (master, trial), so the
/// assignment of random streams to trials is a pure function of the index.
fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut z = master.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw one coherence interval and evaluate its rate report: channel,
/// per-subcarrier data precoders and filters, then the projector-based rate
/// path (numerically identical to designing the full null-space precoder).
fn one_trial(cfg: &SystemConfig, seed: u64, strategy: EveStrategy) -> Result<RateReport> {
    let r = draw_channel(cfg, seed);
    let ops = build_time_ops(&r, cfg);
    let (a, c, sv) = design_data_and_filter(&r, cfg.n_s)?;
    fast_secrecy_report(&r, &ops, &a, &c, &sv, cfg, strategy)
}

fn kahan_mean(rows: &[[f64; 9]], field: usize) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for row in rows {
        let y = row[field] - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum / rows.len() as f64
}

fn kahan_stderr(rows: &[[f64; 9]], field: usize, mean: f64) -> f64 {
    let n = rows.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    for row in rows {
        let d = row[field] - mean;
        let y = d * d - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    (sum / (n - 1) as f64 / n as f64).sqrt()
}

/// Run `n_trials` independent realizations of one configuration and
/// aggregate. The first failing trial (in index order) aborts the point,
/// wrapped with its trial index.
pub fn run_point(
    cfg: &SystemConfig,
    n_trials: usize,
    master_seed: u64,
    strategy: EveStrategy,
) -> Result<PointSummary> {
    if n_trials == 0 {
        return Err(Error::Plan("at least one trial required".to_string()));
    }
    let outcomes: Vec<Result<[f64; 9]>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            one_trial(cfg, trial_seed(master_seed, t), strategy)
                .map(|rep| rep.to_array())
                .map_err(|e| Error::Trial { trial: t, source: Box::new(e) })
        })
        .collect();
    let mut rows = Vec::with_capacity(n_trials);
    for outcome in outcomes {
        rows.push(outcome?);
    }
    let mut mean = [0.0; 9];
    let mut stderr = [0.0; 9];
    for f in 0..9 {
        mean[f] = kahan_mean(&rows, f);
        stderr[f] = kahan_stderr(&rows, f, mean[f]);
    }
    Ok(PointSummary {
        mean: RateReport::from_array(mean),
        stderr: RateReport::from_array(stderr),
        bounds: BoundReport::compute(cfg),
        n_trials,
        master_seed,
    })
}

/// Run every grid point of a plan (or the bare base config when no parameter
/// is swept), sharing the master seed across points.
pub fn run_sweep(plan: &TrialPlan) -> Result<SweepResult> {
    plan.validate()?;
    let mut rows = Vec::new();
    match plan.sweep_param {
        None => {
            let cfg = plan.base.clone().validate()?;
            let summary = run_point(&cfg, plan.n_trials, plan.master_seed, plan.strategy)?;
            rows.push(SweepRow { value: None, config: cfg, summary });
        }
        Some(param) => {
            for &v in &plan.grid {
                let cfg = param.apply(&plan.base, v)?;
                let summary = run_point(&cfg, plan.n_trials, plan.master_seed, plan.strategy)?;
                rows.push(SweepRow { value: Some(v), config: cfg, summary });
            }
        }
    }
    Ok(SweepResult { param: plan.sweep_param, rows })
}
