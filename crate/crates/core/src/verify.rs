//! Named end-to-end self-checks behind the command-line `verify` subcommand.
//!
//! Each check exercises one cross-module contract on a live configuration —
//! transform round trips, precoder geometry, cancellation at the legitimate
//! receiver, agreement between the explicit and projector-based rate paths,
//! the realized transmit power — and reports pass/fail with a measured
//! detail string instead of panicking, so a caller can print every failure
//! by name and exit nonzero. [`run_suite`] runs the whole list over a small
//! built-in grid of shapes (general MIMO, the square-filter case the banded
//! solver handles, scalar links, exact block power accounting).

use crate::an_design::{
    cancellation_constraint, design_data_and_filter, design_precoders, design_spatial_an,
    design_temporal_an_generic, design_temporal_an_toeplitz, power_split, simulate_block,
    PrecoderSet, TemporalRoute,
};
use crate::asymptotics::BoundReport;
use crate::matops::{logdet_rate, logdet_rate_fast, mul, Op, ToeplitzMode};
use crate::montecarlo::run_point;
use crate::ofdm::{
    build_time_ops, diagonalize, dft_blocks_in_place, draw_channel, perm_matrix,
    perm_to_antenna_major, ChannelRealization, Link, SystemConfig, TimeDomainOps,
};
use crate::rates::{fast_secrecy_report, secrecy_report, EveStrategy, RateReport};
use crate::{CMat, Complex64};

/// Result of one named check.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

/// Pass/fail plumbing: a check returns `Ok(measurement)` or `Err(reason)`,
/// and any library error along the way converts into a failure reason.
type Check = std::result::Result<String, String>;

fn run(name: String, f: impl FnOnce() -> Check) -> CheckOutcome {
    match f() {
        Ok(detail) => CheckOutcome { name, passed: true, detail },
        Err(detail) => CheckOutcome { name, passed: false, detail },
    }
}

fn err_str(e: crate::Error) -> String {
    format!("library error: {e}")
}

/// Everything the checks share for one configuration, derived once.
struct Ctx {
    cfg: SystemConfig,
    seed: u64,
    r: ChannelRealization,
    ops: TimeDomainOps,
}

impl Ctx {
    fn new(cfg: &SystemConfig, seed: u64) -> Ctx {
        let r = draw_channel(cfg, seed);
        let ops = build_time_ops(&r, cfg);
        Ctx { cfg: cfg.clone(), seed, r, ops }
    }

    fn precoders(&self) -> std::result::Result<PrecoderSet, String> {
        design_precoders(&self.r, &self.ops, &self.cfg, TemporalRoute::Generic, self.seed)
            .map_err(err_str)
    }
}

// ── individual checks ──

fn dft_roundtrip(ctx: &Ctx) -> Check {
    let n = ctx.cfg.n;
    let mut m = CMat::from_fn(2 * n, 3, |i, j| {
        Complex64::new((i * 7 + j) as f64 * 0.13 - 1.0, (i + 3 * j) as f64 * 0.07 - 0.5)
    });
    let orig = m.clone();
    dft_blocks_in_place(&mut m, n, false);
    dft_blocks_in_place(&mut m, n, true);
    let rel = (&m - &orig).norm() / orig.norm();
    if rel <= 1e-12 {
        Ok(format!("forward+inverse residual {rel:.2e}"))
    } else {
        Err(format!("forward+inverse residual {rel:.2e} exceeds 1e-12"))
    }
}

fn perm_bijection(ctx: &Ctx) -> Check {
    let (n_a, n) = (ctx.cfg.n_a, ctx.cfg.n);
    let map = perm_to_antenna_major(n_a, n);
    let mut sorted = map.clone();
    sorted.sort_unstable();
    if sorted != (0..n_a * n).collect::<Vec<_>>() {
        return Err("index map is not a bijection".to_string());
    }
    let p = perm_matrix(n_a, n);
    let gram = mul(&p, Op::H, &p, Op::N) - CMat::identity(n_a * n, n_a * n);
    let dev = gram.norm();
    if dev <= 1e-14 {
        Ok(format!("bijective; PᴴP−I deviation {dev:.2e}"))
    } else {
        Err(format!("matrix not orthogonal: PᴴP−I deviation {dev:.2e}"))
    }
}

fn chain_diagonalizes(ctx: &Ctx) -> Check {
    let mut worst = 0.0f64;
    for (link, freq) in [(Link::AB, &ctx.r.freq_ab), (Link::AE, &ctx.r.freq_ae)] {
        let blocks = diagonalize(&ctx.ops, link).map_err(err_str)?;
        let total: f64 = freq.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt();
        let dev: f64 = blocks
            .iter()
            .zip(freq)
            .map(|(got, want)| (got - want).norm_squared())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dev / total);
    }
    if worst <= 1e-9 {
        Ok(format!("both links match tap-sum responses, worst residual {worst:.2e}"))
    } else {
        Err(format!("chain blocks deviate from tap-sum responses by {worst:.2e}"))
    }
}

fn stream_filters(ctx: &Ctx) -> Check {
    let (a, c, sv) = design_data_and_filter(&ctx.r, ctx.cfg.n_s).map_err(err_str)?;
    let n_s = ctx.cfg.n_s;
    let mut worst = 0.0f64;
    for k in 0..ctx.cfg.n {
        let eff = mul(&c[k], Op::H, &(&ctx.r.freq_ab[k] * &a[k]), Op::N);
        let mut want = CMat::zeros(n_s, n_s);
        for m in 0..n_s {
            want[(m, m)] = Complex64::new(sv[k][m], 0.0);
        }
        worst = worst.max((eff - want).norm());
        let ortho_a = (mul(&a[k], Op::H, &a[k], Op::N) - CMat::identity(n_s, n_s)).norm();
        let ortho_c = (mul(&c[k], Op::H, &c[k], Op::N) - CMat::identity(n_s, n_s)).norm();
        worst = worst.max(ortho_a).max(ortho_c);
    }
    if worst <= 1e-9 {
        Ok(format!("filtered channel is the singular-value diagonal, worst dev {worst:.2e}"))
    } else {
        Err(format!("filter/precoder geometry off by {worst:.2e}"))
    }
}

fn spatial_completion(ctx: &Ctx) -> Check {
    if ctx.cfg.spatial_dim() == 0 {
        return Ok("not applicable: no spatial null dimensions".to_string());
    }
    let (a, _, _) = design_data_and_filter(&ctx.r, ctx.cfg.n_s).map_err(err_str)?;
    let b = design_spatial_an(&a);
    let sd = ctx.cfg.spatial_dim();
    let mut worst = 0.0f64;
    for k in 0..ctx.cfg.n {
        worst = worst.max(mul(&a[k], Op::H, &b[k], Op::N).norm());
        worst = worst.max((mul(&b[k], Op::H, &b[k], Op::N) - CMat::identity(sd, sd)).norm());
    }
    if worst <= 1e-10 {
        Ok(format!("noise precoders complete the data basis, worst dev {worst:.2e}"))
    } else {
        Err(format!("completion geometry off by {worst:.2e}"))
    }
}

fn generic_null_space(ctx: &Ctx) -> Check {
    let (_, c, _) = design_data_and_filter(&ctx.r, ctx.cfg.n_s).map_err(err_str)?;
    let x = cancellation_constraint(&ctx.ops, &c);
    let q = design_temporal_an_generic(&ctx.ops, &c, &ctx.cfg).map_err(err_str)?;
    if q.ncols() != ctx.cfg.temporal_dim() {
        return Err(format!(
            "null-space dimension {} differs from the expected {}",
            q.ncols(),
            ctx.cfg.temporal_dim()
        ));
    }
    let resid = mul(&x, Op::N, &q, Op::N).norm() / x.norm().max(1.0);
    let ortho = (mul(&q, Op::H, &q, Op::N) - CMat::identity(q.ncols(), q.ncols())).norm();
    if resid <= 1e-9 && ortho <= 1e-9 {
        Ok(format!("dimension {}, cancellation residual {resid:.2e}, orthonormality {ortho:.2e}", q.ncols()))
    } else {
        Err(format!("cancellation residual {resid:.2e} / orthonormality {ortho:.2e} exceed 1e-9"))
    }
}

fn banded_route_projector(ctx: &Ctx) -> Check {
    let c = &ctx.cfg;
    if c.n_b != c.n_s || c.n_s > 2 || c.nu != c.n_cp {
        return Ok("not applicable: needs n_b = n_s ≤ 2 and a band filling the CP".to_string());
    }
    let (_, filt, _) = design_data_and_filter(&ctx.r, c.n_s).map_err(err_str)?;
    let qg = design_temporal_an_generic(&ctx.ops, &filt, c).map_err(err_str)?;
    let qt = design_temporal_an_toeplitz(&ctx.ops, c, ctx.seed, ToeplitzMode::Exact)
        .map_err(err_str)?;
    let pg = mul(&qg, Op::N, &qg, Op::H);
    let pt = mul(&qt, Op::N, &qt, Op::H);
    let rel = (&pg - &pt).norm() / pg.norm();
    if rel <= 1e-8 {
        Ok(format!("banded and generic routes span the same null space, projector gap {rel:.2e}"))
    } else {
        Err(format!("projector gap {rel:.2e} exceeds 1e-8"))
    }
}

fn noiseless_cancellation(ctx: &Ctx) -> Check {
    let pre = ctx.precoders()?;
    let split = power_split(&ctx.cfg, 1.0);
    let sim = simulate_block(&ctx.ops, &pre, &split, &ctx.cfg, ctx.seed ^ 0xA5A5, false);
    let mut resid = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..ctx.cfg.n {
        for m in 0..ctx.cfg.n_s {
            let idx = k * ctx.cfg.n_s + m;
            let want = sim.data[idx] * Complex64::new(pre.sv[k][m], 0.0);
            resid += (sim.bob_filtered[idx] - want).norm_sqr();
            scale += want.norm_sqr();
        }
    }
    let rel = (resid / scale.max(f64::MIN_POSITIVE)).sqrt();
    if rel <= 1e-9 {
        Ok(format!("both noise families vanish at the filter output, residual {rel:.2e}"))
    } else {
        Err(format!("noise leaks through the legitimate filter: residual {rel:.2e}"))
    }
}

fn eavesdropper_decomposition(ctx: &Ctx) -> Check {
    let c = &ctx.cfg;
    let pre = ctx.precoders()?;
    let split = power_split(c, 1.0);
    let sim = simulate_block(&ctx.ops, &pre, &split, c, ctx.seed ^ 0x5A5A, false);
    let n = c.n;

    // Observed: eavesdropper time block → frequency, subcarrier-major.
    let mut obs = CMat::from_column_slice(c.n_e * n, 1, sim.eve_time_rx.as_slice());
    dft_blocks_in_place(&mut obs, n, false);
    let perm = perm_to_antenna_major(c.n_e, n);
    let obs_sub = CMat::from_fn(c.n_e * n, 1, |s, _| obs[(perm[s], 0)]);

    // Expected: per-subcarrier channel times precoded symbols, plus the
    // frequency image of the temporal injection.
    let mut eq = ctx.ops.conv_ae.apply(&pre.q);
    dft_blocks_in_place(&mut eq, n, false);
    let eq_sub = CMat::from_fn(c.n_e * n, eq.ncols(), |s, j| eq[(perm[s], j)]);
    let t = CMat::from_column_slice(c.temporal_dim(), 1, sim.temporal_noise.as_slice());
    let mut want = &eq_sub * &t;
    for k in 0..n {
        let xk = CMat::from_column_slice(c.n_s, 1, &sim.data.as_slice()[k * c.n_s..(k + 1) * c.n_s]);
        let mut uk = &pre.a[k] * &xk;
        if c.spatial_dim() > 0 {
            let dk = CMat::from_column_slice(
                c.spatial_dim(),
                1,
                &sim.spatial_noise.as_slice()[k * c.spatial_dim()..(k + 1) * c.spatial_dim()],
            );
            uk += &pre.b[k] * &dk;
        }
        let mut rows = want.rows_mut(k * c.n_e, c.n_e);
        rows += &ctx.r.freq_ae[k] * &uk;
    }
    let rel = (&obs_sub - &want).norm() / obs_sub.norm().max(f64::MIN_POSITIVE);
    if rel <= 1e-9 {
        Ok(format!("per-subcarrier signal + temporal image reproduce the observation, residual {rel:.2e}"))
    } else {
        Err(format!("eavesdropper observation decomposition residual {rel:.2e}"))
    }
}

fn fast_rate_path(ctx: &Ctx) -> Check {
    let pre = ctx.precoders()?;
    let slow = secrecy_report(&ctx.r, &ctx.ops, &pre, &ctx.cfg, EveStrategy::Worst)
        .map_err(err_str)?;
    let fast = fast_secrecy_report(
        &ctx.r,
        &ctx.ops,
        &pre.a,
        &pre.c,
        &pre.sv,
        &ctx.cfg,
        EveStrategy::Worst,
    )
    .map_err(err_str)?;
    let mut worst = 0.0f64;
    let mut worst_name = "";
    for (name, (a, b)) in RateReport::FIELD_NAMES
        .iter()
        .zip(slow.to_array().into_iter().zip(fast.to_array()))
    {
        let rel = (a - b).abs() / a.abs().max(1.0);
        if rel > worst {
            worst = rel;
            worst_name = name;
        }
    }
    if worst <= 1e-9 {
        Ok(format!("projector path matches the explicit path, worst field gap {worst:.2e}"))
    } else {
        Err(format!("paths disagree on {worst_name} by {worst:.2e}"))
    }
}

fn transmit_power_budget(ctx: &Ctx) -> Check {
    let c = &ctx.cfg;
    let pre = ctx.precoders()?;
    let split = power_split(c, 1.0);
    let theta_bar = 1.0 - c.theta;
    let expected = if c.exact_cp_power {
        1.0
    } else {
        (c.theta + c.alpha * theta_bar) * c.block_len() as f64 / c.n as f64
            + (1.0 - c.alpha) * theta_bar
    };
    let draws = 400;
    let mut samples = Vec::with_capacity(draws);
    for i in 0..draws {
        let sim = simulate_block(&ctx.ops, &pre, &split, c, ctx.seed ^ (0x1000 + i as u64), false);
        samples.push(sim.tx_time.norm_squared());
    }
    let mean = samples.iter().sum::<f64>() / draws as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    let se = (var / draws as f64).sqrt();
    let dev = (mean - expected).abs();
    if dev <= 3.0 * se {
        Ok(format!("block energy {mean:.4} vs budget {expected:.4} (3se {:.4})", 3.0 * se))
    } else {
        Err(format!("block energy {mean:.4} misses budget {expected:.4} by more than 3se ({:.4})", 3.0 * se))
    }
}

fn logdet_consistency(ctx: &Ctx) -> Check {
    // Small synthetic signal/noise pair: the Cholesky-whitened form and the
    // determinant-ratio form must agree.
    let n = 6;
    let base = CMat::from_fn(n, n, |i, j| {
        Complex64::new(
            ((i * 5 + j * 3 + ctx.seed as usize % 7) as f64).sin(),
            ((i + 2 * j) as f64).cos() * 0.5,
        )
    });
    let s = mul(&base, Op::N, &base, Op::H);
    let shift = CMat::from_fn(n, n, |i, j| base[(j, i)].conj() * Complex64::new(0.3, 0.0));
    let sigma = mul(&shift, Op::N, &shift, Op::H);
    let a = logdet_rate(&s, &sigma).map_err(err_str)?;
    let b = logdet_rate_fast(&s, &sigma).map_err(err_str)?;
    let gap = (a - b).abs() / a.abs().max(1.0);
    if gap <= 1e-10 {
        Ok(format!("whitened and ratio log-dets agree to {gap:.2e}"))
    } else {
        Err(format!("log-det evaluation paths disagree by {gap:.2e}"))
    }
}

fn bounds_defined(ctx: &Ctx) -> Check {
    let rep = BoundReport::compute(&ctx.cfg);
    let spatial = ctx.cfg.spatial_dim() > 0;
    for (name, v) in BoundReport::FIELD_NAMES.iter().zip(rep.to_array()) {
        let may_be_nan = matches!(*name, "lb_avg_secrecy" | "lambda_alpha" | "p_alpha") && !spatial;
        if !v.is_finite() && !may_be_nan {
            return Err(format!("bound field {name} is not finite: {v}"));
        }
    }
    if spatial && !(rep.p_alpha >= 1.0) {
        return Err(format!("p_alpha {} below its floor of 1", rep.p_alpha));
    }
    let k_lo = ctx.cfg.n as f64 / ctx.cfg.block_len() as f64;
    if !(rep.k_alpha >= k_lo - 1e-15 && rep.k_alpha <= 1.0 + 1e-15) {
        return Err(format!("k_alpha {} outside [{k_lo}, 1]", rep.k_alpha));
    }
    if !(rep.theta_star > 0.0 && rep.theta_star <= 1.0) {
        return Err(format!("theta_star {} outside (0, 1]", rep.theta_star));
    }
    Ok("all bound fields defined and in range".to_string())
}

fn mc_reproducible(ctx: &Ctx) -> Check {
    let a = run_point(&ctx.cfg, 4, ctx.seed, EveStrategy::Worst).map_err(err_str)?;
    let b = run_point(&ctx.cfg, 4, ctx.seed, EveStrategy::Worst).map_err(err_str)?;
    let same = a
        .mean
        .to_array()
        .into_iter()
        .zip(b.mean.to_array())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    if same {
        Ok("repeated runs are bit-identical".to_string())
    } else {
        Err("repeated runs differ".to_string())
    }
}

// ── suite assembly ──

/// Run every check against one configuration. `label` prefixes the check
/// names so grid runs stay distinguishable.
pub fn run_all(label: &str, cfg: &SystemConfig, seed: u64) -> Vec<CheckOutcome> {
    let ctx = Ctx::new(cfg, seed);
    let checks: [(&str, fn(&Ctx) -> Check); 13] = [
        ("dft_roundtrip", dft_roundtrip),
        ("perm_bijection", perm_bijection),
        ("chain_diagonalizes", chain_diagonalizes),
        ("stream_filters", stream_filters),
        ("spatial_completion", spatial_completion),
        ("generic_null_space", generic_null_space),
        ("banded_route_projector", banded_route_projector),
        ("noiseless_cancellation", noiseless_cancellation),
        ("eavesdropper_decomposition", eavesdropper_decomposition),
        ("fast_rate_path", fast_rate_path),
        ("transmit_power_budget", transmit_power_budget),
        ("logdet_consistency", logdet_consistency),
        ("bounds_defined", bounds_defined),
    ];
    let mut out: Vec<CheckOutcome> = checks
        .iter()
        .map(|(name, f)| run(format!("{label}::{name}"), || f(&ctx)))
        .collect();
    out.push(run(format!("{label}::mc_reproducible"), || mc_reproducible(&ctx)));
    out
}

/// The built-in verification grid: small shapes chosen so every code path
/// has a config it applies to.
pub fn small_grid() -> Vec<(&'static str, SystemConfig)> {
    let mimo = SystemConfig {
        n: 8,
        n_cp: 2,
        nu: 2,
        n_a: 4,
        n_b: 2,
        n_e: 3,
        n_s: 2,
        gamma_bob: 100.0,
        gamma_eve: 100.0,
        var_ab: 1.0,
        var_ae: 1.0,
        theta: 0.6,
        alpha: 0.4,
        exact_cp_power: false,
    };
    let stacked = SystemConfig { n_a: 3, n_e: 2, alpha: 0.5, ..mimo.clone() };
    let scalar = SystemConfig { n_a: 1, n_b: 1, n_e: 1, n_s: 1, alpha: 0.0, ..mimo.clone() };
    let exact = SystemConfig { exact_cp_power: true, ..mimo.clone() };
    vec![("mimo", mimo), ("stacked", stacked), ("scalar", scalar), ("exact_cp", exact)]
}

/// Run the full suite over [`small_grid`].
pub fn run_suite(seed: u64) -> Vec<CheckOutcome> {
    small_grid()
        .iter()
        .flat_map(|(label, cfg)| run_all(label, cfg, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_full_suite_passes_on_the_builtin_grid() {
        let outcomes = run_suite(17);
        let failures: Vec<String> = outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| format!("{}: {}", o.name, o.detail))
            .collect();
        assert!(failures.is_empty(), "failed checks:\n{}", failures.join("\n"));
        assert!(all_passed(&outcomes));
        // The grid exercises the banded route at least once for real.
        assert!(outcomes
            .iter()
            .any(|o| o.name.ends_with("banded_route_projector") && !o.detail.starts_with("not applicable")));
    }

    #[test]
    fn a_broken_config_fails_loudly_with_named_checks() {
        // Dead legitimate channel: stream selection cannot proceed, and every
        // check that needs precoders must fail rather than pass vacuously.
        let (_, mut cfg) = small_grid().remove(0);
        cfg.var_ab = 0.0;
        let outcomes = run_all("dead", &cfg, 3);
        let failed: Vec<&str> =
            outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
        assert!(failed.contains(&"dead::stream_filters"), "got {failed:?}");
        assert!(failed.contains(&"dead::fast_rate_path"));
        assert!(failed.contains(&"dead::mc_reproducible"));
    }
}
