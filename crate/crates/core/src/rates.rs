//! Instantaneous rate and secrecy metrics for one channel realization: the
//! legitimate link's rate, the eavesdropper's rate under joint or
//! per-subcarrier processing, and the secrecy rate / secrecy loss assembled
//! from them.
//!
//! Two evaluation paths produce identical numbers:
//!
//! * the **reference path** ([`secrecy_report`]) takes a full [`PrecoderSet`]
//!   and materializes the eavesdropper's noise covariance from the explicit
//!   temporal precoder `Q`;
//! * the **fast path** ([`fast_secrecy_report`]) never forms `Q`. All rates
//!   depend on the temporal precoder only through the orthogonal projector
//!   `Q·Q^H = I − X^H(X·X^H)^{-1}X` onto the null space of the cancellation
//!   constraint `X`, and that projector — sandwiched by the eavesdropper's
//!   frequency-domain channel — reduces to small Gram matrices of the two
//!   banded convolutions. The Gram blocks are Toeplitz (computed from tap
//!   cross-correlations and transformed per antenna pair by FFT), so the whole
//!   per-realization cost collapses from one large SVD to a handful of
//!   `O((N_E·N)²)` products. An equivalence test pins the two paths together.

use crate::an_design::{power_split, PrecoderSet};
use crate::matops::{
    cholesky_lower_in_place, logdet_rate, logdet_rate_auto, logdet_rate_factored, mul,
    parallel_stream_rate, solve_adjoint_right_in_place, Op,
};
use crate::ofdm::{
    dft_blocks_in_place, perm_to_antenna_major, BandedConv, ChannelRealization, SystemConfig,
    TimeDomainOps,
};
use crate::{CMat, Error, Result};

/// Which decoding strategy the eavesdropper is credited with when computing
/// the secrecy rate. `Worst` (the default everywhere) grants her the better of
/// the two.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EveStrategy {
    Joint,
    Persub,
    Worst,
}

impl EveStrategy {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "joint" => Ok(EveStrategy::Joint),
            "persub" => Ok(EveStrategy::Persub),
            "worst" => Ok(EveStrategy::Worst),
            _ => Err(Error::Plan(format!(
                "unknown eavesdropper strategy `{name}` (expected joint, persub, or worst)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EveStrategy::Joint => "joint",
            EveStrategy::Persub => "persub",
            EveStrategy::Worst => "worst",
        }
    }
}

/// All rate metrics for one realization, in bits per OFDM block. Divide by
/// `N + N_cp` (see [`RateReport::per_shz`]) for bits/s/Hz.
///
/// Two conventions for the eavesdropper-free reference rate are carried side
/// by side: `r_no_eve` spends the same power split as the secure scheme
/// (fraction θ on data), while `r_no_eve_theta1` gives the data all the power,
/// which is how a system with nothing to hide would actually transmit. The
/// corresponding losses `s_loss` and `s_loss_theta1` use the matching
/// reference; closed-form loss bounds compare against the θ = 1 variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport {
    pub r_bob: f64,
    pub r_eve_joint: f64,
    pub r_eve_persub: f64,
    pub r_sec_clipped: f64,
    pub r_sec_raw: f64,
    pub r_no_eve: f64,
    pub s_loss: f64,
    pub r_no_eve_theta1: f64,
    pub s_loss_theta1: f64,
}

impl RateReport {
    /// Field names, in [`RateReport::to_array`] order. Used for aggregation
    /// and CSV headers so the column order is defined in exactly one place.
    pub const FIELD_NAMES: [&'static str; 9] = [
        "r_bob",
        "r_eve_joint",
        "r_eve_persub",
        "r_sec_clipped",
        "r_sec_raw",
        "r_no_eve",
        "s_loss",
        "r_no_eve_theta1",
        "s_loss_theta1",
    ];

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.r_bob,
            self.r_eve_joint,
            self.r_eve_persub,
            self.r_sec_clipped,
            self.r_sec_raw,
            self.r_no_eve,
            self.s_loss,
            self.r_no_eve_theta1,
            self.s_loss_theta1,
        ]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        RateReport {
            r_bob: a[0],
            r_eve_joint: a[1],
            r_eve_persub: a[2],
            r_sec_clipped: a[3],
            r_sec_raw: a[4],
            r_no_eve: a[5],
            s_loss: a[6],
            r_no_eve_theta1: a[7],
            s_loss_theta1: a[8],
        }
    }

    /// The same report in bits/s/Hz: every field divided by the block length
    /// `n + n_cp`.
    pub fn per_shz(&self, cfg: &SystemConfig) -> RateReport {
        let mut a = self.to_array();
        let blk = cfg.block_len() as f64;
        for v in &mut a {
            *v /= blk;
        }
        RateReport::from_array(a)
    }
}

// ── legitimate link ──

/// Per-data-symbol SNR factor at the given receiver gain: `Γ·θ/(N_s·span)`.
fn data_gain(cfg: &SystemConfig, gamma: f64, theta: f64) -> f64 {
    let mut c = cfg.clone();
    c.theta = theta;
    gamma * power_split(&c, 1.0).per_data_symbol
}

/// Rate of the legitimate link in bits/block. The SVD precoding turns the
/// filtered channel into parallel scalar streams with gains equal to the kept
/// singular values, so the log-det collapses to a scalar sum.
pub fn bob_rate(pre: &PrecoderSet, cfg: &SystemConfig) -> f64 {
    bob_rate_from_gains(&pre.sv, cfg, cfg.theta)
}

/// [`bob_rate`] from the singular values alone, at an arbitrary data-power
/// fraction (the θ = 1 variant feeds the no-eavesdropper reference rate).
pub fn bob_rate_from_gains(sv: &[Vec<f64>], cfg: &SystemConfig, theta: f64) -> f64 {
    let g = data_gain(cfg, cfg.gamma_bob, theta);
    sv.iter().map(|gains| parallel_stream_rate(gains, g)).sum()
}

// ── eavesdropper noise covariance ──

/// The eavesdropper's artificial-noise covariance over all subcarriers
/// (`N_E·N × N_E·N`, frequency domain, subcarrier-major): a block-diagonal
/// spatial part `G_k B_k B_k^H G_k^H` and a full temporal part `E·E^H` from
/// the frequency-domain image `E` of the temporal precoder, each scaled by
/// its per-symbol transmit power and the eavesdropper's gain.
pub fn eve_covariance_joint(
    r: &ChannelRealization,
    ops: &TimeDomainOps,
    pre: &PrecoderSet,
    cfg: &SystemConfig,
) -> Result<CMat> {
    let n = cfg.n;
    let dim = cfg.n_e * n;
    let split = power_split(cfg, 1.0);
    let mut sigma = CMat::zeros(dim, dim);

    if split.per_spatial_symbol > 0.0 && cfg.spatial_dim() > 0 {
        let w = cfg.gamma_eve * split.per_spatial_symbol;
        for k in 0..n {
            let gb = &r.freq_ae[k] * &pre.b[k];
            let block = mul(&gb, Op::N, &gb, Op::H) * crate::Complex64::new(w, 0.0);
            sigma.view_mut((k * cfg.n_e, k * cfg.n_e), (cfg.n_e, cfg.n_e)).copy_from(&block);
        }
    }

    if split.per_temporal_symbol > 0.0 && cfg.temporal_dim() > 0 {
        // E = P^T · F · conv_ae · Q in subcarrier-major row order.
        let mut e = ops.conv_ae.apply(&pre.q);
        dft_blocks_in_place(&mut e, n, false);
        let perm = perm_to_antenna_major(cfg.n_e, n);
        let e_sub = CMat::from_fn(dim, e.ncols(), |s, c| e[(perm[s], c)]);
        let w = cfg.gamma_eve * split.per_temporal_symbol;
        sigma += mul(&e_sub, Op::N, &e_sub, Op::H) * crate::Complex64::new(w, 0.0);
    }

    symmetrize_cov(&mut sigma)?;
    Ok(sigma)
}

/// Hermitian-symmetrize a covariance and reject one whose diagonal has gone
/// negative beyond rounding — a Gram sum can only do that through a numerical
/// fault upstream.
fn symmetrize_cov(sigma: &mut CMat) -> Result<()> {
    let n = sigma.nrows();
    let mut trace = 0.0;
    for p in 0..n {
        trace += sigma[(p, p)].re;
    }
    let floor = -1e-10 * trace.abs().max(1.0);
    for p in 0..n {
        if sigma[(p, p)].re < floor {
            return Err(Error::NotPsd {
                detail: format!(
                    "noise covariance diagonal entry {:.3e} is negative",
                    sigma[(p, p)].re
                ),
            });
        }
        for q in p..n {
            let avg = (sigma[(p, q)] + sigma[(q, p)].conj()) * 0.5;
            sigma[(p, q)] = avg;
            sigma[(q, p)] = avg.conj();
        }
    }
    Ok(())
}

// ── fast covariance path ──

/// Gram matrix `W_a · W_b^H` of two frequency-domain channel images
/// `W = P^T F conv`, in subcarrier-major ordering, without forming either `W`.
/// Each antenna-pair block of `conv_a · conv_b^H` is Toeplitz in the tap
/// cross-correlations (band never clips because ν ≤ n_cp), and the per-antenna
/// DFTs transform each block independently.
fn freq_gram(a: &BandedConv, b: &BandedConv) -> CMat {
    let n = a.nrows() / a.n_rx();
    assert_eq!(a.nu(), b.nu(), "mismatched delay spreads");
    let nu = a.nu();
    let corr = a.cross_correlation(b);
    let (ra, rb) = (a.n_rx(), b.n_rx());
    let mut m = CMat::zeros(ra * n, rb * n);
    for i in 0..ra {
        for j in 0..rb {
            let mut t = CMat::zeros(n, n);
            for p in 0..n {
                let qlo = p.saturating_sub(nu);
                let qhi = (p + nu).min(n - 1);
                for q in qlo..=qhi {
                    t[(p, q)] = corr[p + nu - q][(i, j)];
                }
            }
            // F·T·F^H via two unitary column transforms: A = F·T, then
            // (F·A^H)^H = A·F^H.
            dft_blocks_in_place(&mut t, n, false);
            let mut th = t.adjoint();
            dft_blocks_in_place(&mut th, n, false);
            let block = th.adjoint();
            for k1 in 0..n {
                for k2 in 0..n {
                    m[(k1 * ra + i, k2 * rb + j)] = block[(k1, k2)];
                }
            }
        }
    }
    m
}

/// `out` block-row `k` = `filters[k]^H ·` block-row `k` of `m`.
fn filter_rows(filters: &[CMat], m: &CMat) -> CMat {
    let n = filters.len();
    let rb = m.nrows() / n;
    let rs = filters[0].ncols();
    let mut out = CMat::zeros(rs * n, m.ncols());
    for k in 0..n {
        let strip = m.rows(k * rb, rb).into_owned();
        out.rows_mut(k * rs, rs).copy_from(&mul(&filters[k], Op::H, &strip, Op::N));
    }
    out
}

/// `out` block-column `k` = block-column `k` of `m` `· filters[k]`.
fn filter_cols(m: &CMat, filters: &[CMat]) -> CMat {
    let n = filters.len();
    let cb = m.ncols() / n;
    let cs = filters[0].ncols();
    let mut out = CMat::zeros(m.nrows(), cs * n);
    for k in 0..n {
        let strip = m.columns(k * cb, cb).into_owned();
        out.columns_mut(k * cs, cs).copy_from(&(strip * &filters[k]));
    }
    out
}

/// The eavesdropper's noise covariance computed through the null-space
/// projector identity instead of an explicit temporal precoder. Needs only
/// the per-subcarrier data precoders and receive filters.
pub fn eve_covariance_fast(
    r: &ChannelRealization,
    ops: &TimeDomainOps,
    data_precoders: &[CMat],
    filters: &[CMat],
    cfg: &SystemConfig,
) -> Result<CMat> {
    let n = cfg.n;
    let dim = cfg.n_e * n;
    let split = power_split(cfg, 1.0);
    let mut sigma = CMat::zeros(dim, dim);

    if split.per_spatial_symbol > 0.0 && cfg.spatial_dim() > 0 {
        // G_k B_k B_k^H G_k^H = G_k G_k^H − (G_k A_k)(G_k A_k)^H: the spatial
        // precoder enters only through its completeness with A_k.
        let w = cfg.gamma_eve * split.per_spatial_symbol;
        for k in 0..n {
            let g = &r.freq_ae[k];
            let ga = g * &data_precoders[k];
            let block =
                (mul(g, Op::N, g, Op::H) - mul(&ga, Op::N, &ga, Op::H)) * crate::Complex64::new(w, 0.0);
            sigma.view_mut((k * cfg.n_e, k * cfg.n_e), (cfg.n_e, cfg.n_e)).copy_from(&block);
        }
    }

    if split.per_temporal_symbol > 0.0 && cfg.temporal_dim() > 0 {
        // E·E^H = W_E QQ^H W_E^H with QQ^H = I − X^H(XX^H)^{-1}X, X = C^H W_B:
        //   = M_GG − Y·Y^H,  Y = (X W_E^H)^H L^{-H},  X X^H = L L^H.
        let m_gg = freq_gram(&ops.conv_ae, &ops.conv_ae);
        let m_hh = freq_gram(&ops.conv_ab, &ops.conv_ab);
        let m_hg = freq_gram(&ops.conv_ab, &ops.conv_ae);
        let mut xxh = filter_cols(&filter_rows(filters, &m_hh), filters);
        symmetrize_cov(&mut xxh)?;
        let z = filter_rows(filters, &m_hg); // X · W_E^H
        cholesky_lower_in_place(&mut xxh).map_err(|_| Error::SingularSystem {
            context: "cancellation-constraint Gram (constraint matrix lost row rank)".to_string(),
        })?;
        let mut y = z.adjoint();
        solve_adjoint_right_in_place(&xxh, &mut y);
        let eeh = m_gg - mul(&y, Op::N, &y, Op::H);
        let w = cfg.gamma_eve * split.per_temporal_symbol;
        sigma += eeh * crate::Complex64::new(w, 0.0);
    }

    symmetrize_cov(&mut sigma)?;
    Ok(sigma)
}

// ── eavesdropper rates ──

/// Per-subcarrier signal images `G_k · A_k` at the eavesdropper.
fn eve_signal_blocks(r: &ChannelRealization, data_precoders: &[CMat]) -> Vec<CMat> {
    r.freq_ae.iter().zip(data_precoders).map(|(g, a)| g * a).collect()
}

/// Joint-processing rate from signal blocks and a full noise covariance.
/// Evaluated in whichever of the two log-det forms has the smaller dimension:
/// the noise dimension `N_E·N` directly, or the signal rank `N_s·N` through
/// the factored identity.
fn joint_rate(ga: &[CMat], sigma: &CMat, gd: f64, cfg: &SystemConfig) -> Result<f64> {
    if gd == 0.0 {
        return Ok(0.0);
    }
    let n = cfg.n;
    let scale = crate::Complex64::new(gd.sqrt(), 0.0);
    if cfg.n_s < cfg.n_e {
        let mut f = CMat::zeros(cfg.n_e * n, cfg.n_s * n);
        for (k, b) in ga.iter().enumerate() {
            f.view_mut((k * cfg.n_e, k * cfg.n_s), (cfg.n_e, cfg.n_s)).copy_from(&(b * scale));
        }
        logdet_rate_factored(&f, sigma)
    } else {
        let dim = cfg.n_e * n;
        let mut s = CMat::zeros(dim, dim);
        for (k, b) in ga.iter().enumerate() {
            let blk = mul(b, Op::N, b, Op::H) * crate::Complex64::new(gd, 0.0);
            s.view_mut((k * cfg.n_e, k * cfg.n_e), (cfg.n_e, cfg.n_e)).copy_from(&blk);
        }
        logdet_rate_auto(&s, sigma)
    }
}

/// Per-subcarrier-processing rate: each subcarrier whitened only by its own
/// diagonal noise block.
fn persub_rate(ga: &[CMat], sigma: &CMat, gd: f64, cfg: &SystemConfig) -> Result<f64> {
    if gd == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (k, b) in ga.iter().enumerate() {
        let s = mul(b, Op::N, b, Op::H) * crate::Complex64::new(gd, 0.0);
        let nb = sigma.view((k * cfg.n_e, k * cfg.n_e), (cfg.n_e, cfg.n_e)).into_owned();
        total += logdet_rate(&s, &nb)?;
    }
    Ok(total)
}

/// Eavesdropper's rate with joint processing across all subcarriers,
/// bits/block (explicit-precoder path).
pub fn eve_rate_joint(
    r: &ChannelRealization,
    ops: &TimeDomainOps,
    pre: &PrecoderSet,
    cfg: &SystemConfig,
) -> Result<f64> {
    let sigma = eve_covariance_joint(r, ops, pre, cfg)?;
    joint_rate(&eve_signal_blocks(r, &pre.a), &sigma, data_gain(cfg, cfg.gamma_eve, cfg.theta), cfg)
}

/// Eavesdropper's rate with independent per-subcarrier processing,
/// bits/block (explicit-precoder path).
pub fn eve_rate_persub(
    r: &ChannelRealization,
    ops: &TimeDomainOps,
    pre: &PrecoderSet,
    cfg: &SystemConfig,
) -> Result<f64> {
    let sigma = eve_covariance_joint(r, ops, pre, cfg)?;
    persub_rate(&eve_signal_blocks(r, &pre.a), &sigma, data_gain(cfg, cfg.gamma_eve, cfg.theta), cfg)
}

// ── report assembly ──

fn assemble_report(
    sv: &[Vec<f64>],
    ga: &[CMat],
    sigma: &CMat,
    cfg: &SystemConfig,
    strategy: EveStrategy,
) -> Result<RateReport> {
    let gd = data_gain(cfg, cfg.gamma_eve, cfg.theta);
    let r_bob = bob_rate_from_gains(sv, cfg, cfg.theta);
    let r_eve_joint = joint_rate(ga, sigma, gd, cfg)?;
    let r_eve_persub = persub_rate(ga, sigma, gd, cfg)?;
    let r_eve = match strategy {
        EveStrategy::Joint => r_eve_joint,
        EveStrategy::Persub => r_eve_persub,
        EveStrategy::Worst => r_eve_joint.max(r_eve_persub),
    };
    let r_sec_raw = r_bob - r_eve;
    let r_sec_clipped = r_sec_raw.max(0.0);
    let r_no_eve = r_bob;
    let r_no_eve_theta1 = bob_rate_from_gains(sv, cfg, 1.0);
    Ok(RateReport {
        r_bob,
        r_eve_joint,
        r_eve_persub,
        r_sec_clipped,
        r_sec_raw,
        r_no_eve,
        s_loss: r_no_eve - r_sec_clipped,
        r_no_eve_theta1,
        s_loss_theta1: r_no_eve_theta1 - r_sec_clipped,
    })
}

/// Full rate report from an explicit precoder set.
pub fn secrecy_report(
    r: &ChannelRealization,
    ops: &TimeDomainOps,
    pre: &PrecoderSet,
    cfg: &SystemConfig,
    strategy: EveStrategy,
) -> Result<RateReport> {
    let sigma = eve_covariance_joint(r, ops, pre, cfg)?;
    assemble_report(&pre.sv, &eve_signal_blocks(r, &pre.a), &sigma, cfg, strategy)
}

/// Full rate report without ever materializing the spatial or temporal noise
/// precoders — the Monte Carlo workhorse. Produces the same numbers as
/// [`secrecy_report`] on the same realization because every rate depends on
/// the noise precoders only through `B_k B_k^H` (fixed by completeness with
/// `A_k`) and `Q Q^H` (the unique null-space projector).
pub fn fast_secrecy_report(
    r: &ChannelRealization,
    ops: &TimeDomainOps,
    data_precoders: &[CMat],
    filters: &[CMat],
    sv: &[Vec<f64>],
    cfg: &SystemConfig,
    strategy: EveStrategy,
) -> Result<RateReport> {
    let sigma = eve_covariance_fast(r, ops, data_precoders, filters, cfg)?;
    assemble_report(sv, &eve_signal_blocks(r, data_precoders), &sigma, cfg, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::an_design::{design_data_and_filter, design_precoders, TemporalRoute};
    use crate::ofdm::{build_time_ops, draw_channel, freq_from_taps};
    use crate::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cfg_small() -> SystemConfig {
        SystemConfig {
            n: 8,
            n_cp: 2,
            nu: 2,
            n_a: 4,
            n_b: 2,
            n_e: 2,
            n_s: 2,
            gamma_bob: 100.0,
            gamma_eve: 100.0,
            var_ab: 1.0,
            var_ae: 1.0,
            theta: 0.6,
            alpha: 0.4,
            exact_cp_power: false,
        }
    }

    fn full_setup(cfg: &SystemConfig, seed: u64) -> (ChannelRealization, TimeDomainOps, PrecoderSet) {
        let r = draw_channel(cfg, seed);
        let ops = build_time_ops(&r, cfg);
        let pre = design_precoders(&r, &ops, cfg, TemporalRoute::Generic, 0).unwrap();
        (r, ops, pre)
    }

    #[test]
    fn theta_zero_silences_everything() {
        let cfg = SystemConfig { theta: 0.0, ..cfg_small() };
        let (r, ops, pre) = full_setup(&cfg, 3);
        let rep = secrecy_report(&r, &ops, &pre, &cfg, EveStrategy::Worst).unwrap();
        assert_eq!(rep.r_bob, 0.0);
        assert_eq!(rep.r_eve_joint, 0.0);
        assert_eq!(rep.r_eve_persub, 0.0);
        assert_eq!(rep.r_sec_clipped, 0.0);
        assert!(rep.r_no_eve_theta1 > 0.0);
    }

    #[test]
    fn scalar_chain_rate_is_the_textbook_log() {
        let cfg = SystemConfig { n_a: 1, n_b: 1, n_e: 1, n_s: 1, alpha: 0.0, ..cfg_small() };
        let r = draw_channel(&cfg, 5);
        let (a, c, sv) = design_data_and_filter(&r, 1).unwrap();
        let pre = PrecoderSet {
            b: crate::an_design::design_spatial_an(&a),
            q: CMat::zeros(cfg.n_a * cfg.block_len(), 0),
            a,
            c,
            sv,
        };
        let got = bob_rate(&pre, &cfg);
        let want: f64 = (0..cfg.n)
            .map(|k| {
                let h2 = r.freq_ab[k][(0, 0)].norm_sqr();
                (1.0 + cfg.theta * cfg.gamma_bob * h2 / cfg.n as f64).log2()
            })
            .sum();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn bob_rate_matches_block_diagonal_logdet() {
        let cfg = cfg_small();
        let (r, _ops, pre) = full_setup(&cfg, 7);
        let g = data_gain(&cfg, cfg.gamma_bob, cfg.theta);
        let dim = cfg.n_s * cfg.n;
        let mut s = CMat::zeros(dim, dim);
        for k in 0..cfg.n {
            let eff = mul(&pre.c[k], Op::H, &(&r.freq_ab[k] * &pre.a[k]), Op::N);
            let blk = mul(&eff, Op::N, &eff, Op::H) * Complex64::new(g, 0.0);
            s.view_mut((k * cfg.n_s, k * cfg.n_s), (cfg.n_s, cfg.n_s)).copy_from(&blk);
        }
        let direct = logdet_rate(&s, &CMat::zeros(dim, dim)).unwrap();
        let fast = bob_rate(&pre, &cfg);
        assert!((direct - fast).abs() <= 1e-9 * direct.abs(), "{direct} vs {fast}");
    }

    #[test]
    fn covariance_boundaries_theta_one_and_alpha_one() {
        let base = cfg_small();
        let (r, ops, _) = full_setup(&base, 11);

        let cfg1 = SystemConfig { theta: 1.0, ..base.clone() };
        let pre1 = design_precoders(&r, &ops, &cfg1, TemporalRoute::Generic, 0).unwrap();
        let sigma = eve_covariance_joint(&r, &ops, &pre1, &cfg1).unwrap();
        assert_eq!(sigma.norm(), 0.0);

        // α = 1: spatial-only noise is exactly block diagonal, so joint and
        // per-subcarrier processing coincide.
        let cfg2 = SystemConfig { alpha: 1.0, ..base };
        let pre2 = design_precoders(&r, &ops, &cfg2, TemporalRoute::Generic, 0).unwrap();
        let sigma2 = eve_covariance_joint(&r, &ops, &pre2, &cfg2).unwrap();
        for k1 in 0..cfg2.n {
            for k2 in 0..cfg2.n {
                if k1 != k2 {
                    let off = sigma2
                        .view((k1 * cfg2.n_e, k2 * cfg2.n_e), (cfg2.n_e, cfg2.n_e))
                        .norm();
                    assert!(off == 0.0, "off-diagonal block ({k1},{k2}) = {off}");
                }
            }
        }
        let rep = secrecy_report(&r, &ops, &pre2, &cfg2, EveStrategy::Worst).unwrap();
        assert!(
            (rep.r_eve_joint - rep.r_eve_persub).abs() <= 1e-9 * rep.r_eve_joint.max(1.0),
            "joint {} vs persub {}",
            rep.r_eve_joint,
            rep.r_eve_persub
        );
    }

    /// Redraw only the eavesdropper channel against a fixed legitimate design
    /// and check the covariance trace against exact expectations: the spatial
    /// part contributes `θ̄Γα·ν̃σ²/N` per diagonal entry on average, and the
    /// temporal part `θ̄Γᾱ/dim_t · Σ_c taps(c)·σ²·[QQ^H]_cc / (N_E·N)` where
    /// `taps(c)` counts the band rows covering transmit sample `c`.
    #[test]
    fn covariance_trace_matches_exact_expectations() {
        let cfg = cfg_small();
        let (r0, ops0, pre) = full_setup(&cfg, 13);
        let nu_t = cfg.nu_tilde() as f64;
        let dim = (cfg.n_e * cfg.n) as f64;
        let theta_bar = 1.0 - cfg.theta;

        // Deterministic per-column tap counts of the CP-removed convolution.
        let blk = cfg.block_len();
        let mut count = vec![0usize; blk];
        for p in 0..cfg.n {
            for l in 0..=cfg.nu {
                count[cfg.n_cp + p - l] += 1;
            }
        }
        let qqh = mul(&pre.q, Op::N, &pre.q, Op::H);
        let mut temporal_exact = 0.0;
        for j in 0..cfg.n_a {
            for t in 0..blk {
                let c = j * blk + t;
                temporal_exact += count[t] as f64 * cfg.n_e as f64 * cfg.var_ae * qqh[(c, c)].re;
            }
        }
        temporal_exact *= (1.0 - cfg.alpha) * theta_bar * cfg.gamma_eve
            / (cfg.temporal_dim() as f64 * dim);
        let spatial_exact = cfg.alpha * theta_bar * cfg.gamma_eve * nu_t * cfg.var_ae / cfg.n as f64;
        let want = spatial_exact + temporal_exact;

        let trials = 300;
        let mut rng = ChaCha8Rng::seed_from_u64(999);
        let scale = (cfg.var_ae / 2.0).sqrt();
        let mut samples = Vec::with_capacity(trials);
        for _ in 0..trials {
            let mut taps_ae = Vec::with_capacity(cfg.nu_tilde());
            for _ in 0..cfg.nu_tilde() {
                let mut tap = CMat::zeros(cfg.n_e, cfg.n_a);
                for i in 0..cfg.n_e {
                    for j in 0..cfg.n_a {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        tap[(i, j)] = Complex64::new(re * scale, im * scale);
                    }
                }
                taps_ae.push(tap);
            }
            let freq_ae = freq_from_taps(&taps_ae, cfg.n);
            let r = ChannelRealization { taps_ab: r0.taps_ab.clone(), taps_ae, freq_ab: r0.freq_ab.clone(), freq_ae };
            let ops = build_time_ops(&r, &cfg);
            let sigma = eve_covariance_joint(&r, &ops, &pre, &cfg).unwrap();
            let tr: f64 = sigma.diagonal().iter().map(|z| z.re).sum();
            samples.push(tr / dim);
        }
        let _ = ops0;
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!(
            (mean - want).abs() <= 3.0 * se,
            "trace mean {mean:.6} vs exact {want:.6} (3se = {:.6})",
            3.0 * se
        );
    }

    #[test]
    fn persub_terms_match_direct_two_by_two_determinants() {
        let cfg = SystemConfig { n: 4, ..cfg_small() };
        let (r, ops, pre) = full_setup(&cfg, 17);
        let sigma = eve_covariance_joint(&r, &ops, &pre, &cfg).unwrap();
        let gd = data_gain(&cfg, cfg.gamma_eve, cfg.theta);
        let ga = eve_signal_blocks(&r, &pre.a);

        let det2 = |m: &CMat| -> Complex64 { m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] };
        let mut want = 0.0;
        for k in 0..cfg.n {
            let s = mul(&ga[k], Op::N, &ga[k], Op::H) * Complex64::new(gd, 0.0);
            let nb = sigma.view((k * 2, k * 2), (2, 2)).into_owned();
            let eye = CMat::identity(2, 2);
            let num = det2(&(&s + &nb + &eye)).norm();
            let den = det2(&(&nb + &eye)).norm();
            want += (num / den).log2();
        }
        let got = persub_rate(&ga, &sigma, gd, &cfg).unwrap();
        assert!((got - want).abs() <= 1e-9 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn single_subcarrier_joint_equals_persub() {
        let cfg = SystemConfig {
            n: 1,
            n_cp: 0,
            nu: 0,
            n_a: 3,
            n_b: 2,
            n_e: 2,
            n_s: 2,
            ..cfg_small()
        };
        let (r, ops, pre) = full_setup(&cfg, 19);
        let joint = eve_rate_joint(&r, &ops, &pre, &cfg).unwrap();
        let persub = eve_rate_persub(&r, &ops, &pre, &cfg).unwrap();
        assert!((joint - persub).abs() <= 1e-12 * joint.max(1.0));
    }

    #[test]
    fn deaf_eavesdropper_gives_bob_everything() {
        let cfg = SystemConfig { var_ae: 0.0, ..cfg_small() };
        let (r, ops, pre) = full_setup(&cfg, 23);
        let rep = secrecy_report(&r, &ops, &pre, &cfg, EveStrategy::Worst).unwrap();
        assert_eq!(rep.r_eve_joint, 0.0);
        assert_eq!(rep.r_eve_persub, 0.0);
        assert_eq!(rep.r_sec_clipped, rep.r_bob);
        assert_eq!(rep.s_loss, 0.0);
        assert!((rep.s_loss_theta1 - (rep.r_no_eve_theta1 - rep.r_bob)).abs() < 1e-12);
    }

    #[test]
    fn clipping_floors_negative_raw_secrecy() {
        let cfg = SystemConfig { gamma_bob: 0.01, gamma_eve: 1e4, ..cfg_small() };
        let (r, ops, pre) = full_setup(&cfg, 29);
        let rep = secrecy_report(&r, &ops, &pre, &cfg, EveStrategy::Worst).unwrap();
        assert!(rep.r_sec_raw < 0.0);
        assert_eq!(rep.r_sec_clipped, 0.0);
        assert!(rep.s_loss >= 0.0);
    }

    #[test]
    fn fast_path_reproduces_the_explicit_path() {
        for (seed, n_e) in [(31u64, 2usize), (37, 3), (41, 1)] {
            let cfg = SystemConfig { n_e, ..cfg_small() };
            let (r, ops, pre) = full_setup(&cfg, seed);
            let slow = secrecy_report(&r, &ops, &pre, &cfg, EveStrategy::Worst).unwrap();
            let fast =
                fast_secrecy_report(&r, &ops, &pre.a, &pre.c, &pre.sv, &cfg, EveStrategy::Worst)
                    .unwrap();
            for (name, (a, b)) in RateReport::FIELD_NAMES
                .iter()
                .zip(slow.to_array().into_iter().zip(fast.to_array()))
            {
                assert!(
                    (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                    "n_e={n_e} field {name}: explicit {a} vs fast {b}"
                );
            }
        }
    }

    #[test]
    fn fast_covariance_matches_explicit_matrix() {
        let cfg = cfg_small();
        let (r, ops, pre) = full_setup(&cfg, 43);
        let explicit = eve_covariance_joint(&r, &ops, &pre, &cfg).unwrap();
        let fast = eve_covariance_fast(&r, &ops, &pre.a, &pre.c, &cfg).unwrap();
        let rel = (&explicit - &fast).norm() / explicit.norm();
        assert!(rel <= 1e-10, "covariance mismatch {rel:.3e}");
    }

    #[test]
    fn joint_rate_branches_agree() {
        // n_s < n_e exercises the factored branch; compare against the direct
        // outer-product evaluation it replaces.
        let cfg = SystemConfig { n_e: 3, n_s: 1, n_b: 1, ..cfg_small() };
        let (r, ops, pre) = full_setup(&cfg, 47);
        let sigma = eve_covariance_joint(&r, &ops, &pre, &cfg).unwrap();
        let gd = data_gain(&cfg, cfg.gamma_eve, cfg.theta);
        let ga = eve_signal_blocks(&r, &pre.a);
        let fast = joint_rate(&ga, &sigma, gd, &cfg).unwrap();
        let dim = cfg.n_e * cfg.n;
        let mut s = CMat::zeros(dim, dim);
        for (k, b) in ga.iter().enumerate() {
            let blk = mul(b, Op::N, b, Op::H) * Complex64::new(gd, 0.0);
            s.view_mut((k * cfg.n_e, k * cfg.n_e), (cfg.n_e, cfg.n_e)).copy_from(&blk);
        }
        let direct = logdet_rate(&s, &sigma).unwrap();
        assert!((fast - direct).abs() <= 1e-9 * direct.abs(), "{fast} vs {direct}");
    }

    #[test]
    fn per_shz_divides_by_block_length() {
        let cfg = cfg_small();
        let (r, ops, pre) = full_setup(&cfg, 53);
        let rep = secrecy_report(&r, &ops, &pre, &cfg, EveStrategy::Worst).unwrap();
        let norm = rep.per_shz(&cfg);
        let blk = cfg.block_len() as f64;
        for (a, b) in rep.to_array().into_iter().zip(norm.to_array()) {
            assert!((a / blk - b).abs() < 1e-15);
        }
    }

    #[test]
    fn strategy_selection_and_worst_case() {
        let cfg = cfg_small();
        let (r, ops, pre) = full_setup(&cfg, 59);
        let joint = secrecy_report(&r, &ops, &pre, &cfg, EveStrategy::Joint).unwrap();
        let persub = secrecy_report(&r, &ops, &pre, &cfg, EveStrategy::Persub).unwrap();
        let worst = secrecy_report(&r, &ops, &pre, &cfg, EveStrategy::Worst).unwrap();
        assert!(worst.r_sec_clipped <= joint.r_sec_clipped + 1e-12);
        assert!(worst.r_sec_clipped <= persub.r_sec_clipped + 1e-12);
        assert!(
            (worst.r_sec_raw - (worst.r_bob - worst.r_eve_joint.max(worst.r_eve_persub))).abs()
                < 1e-12
        );
    }
}
