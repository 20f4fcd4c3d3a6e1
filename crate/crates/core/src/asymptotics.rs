//! Closed-form behavior of the secrecy scheme when the transmit array is
//! large: a lower bound on the average secrecy rate, an upper bound on the
//! eavesdropper's average rate, the optimal data-power fraction at high SNR,
//! and upper bounds on the secrecy-rate *loss* relative to a system that
//! ignores the eavesdropper. Everything here is a deterministic function of
//! [`SystemConfig`] — no channel draws — so sweep output can overlay the
//! analytic curves against Monte Carlo columns one-for-one.
//!
//! Conventions shared by every bound:
//!
//! * results are in bits/s/Hz, i.e. already divided by the block length
//!   `n + n_cp` (block-unit variants are obtained by multiplying back, never
//!   re-derived);
//! * `ν̃ = ν + 1` is the total tap count, so `ν̃·σ²` is the average per-entry
//!   channel energy summed over delays;
//! * a config with `exact_cp_power` set moves every per-symbol power from a
//!   `1/n` to a `1/(n + n_cp)` normalization, and the bounds follow the same
//!   convention so they keep tracking what the simulator actually transmits.

use crate::an_design::{power_split, PrecoderSet};
use crate::matops::{logdet_rate, logdet_rate_auto, mul, parallel_stream_rate, Op};
use crate::ofdm::{ChannelRealization, SystemConfig};
use crate::{CMat, Complex64, Error, Result};

/// Every closed-form quantity the sweep output reports, bundled so a CSV row
/// can carry the analytic columns next to the simulated ones. Entries whose
/// formula is undefined for the given shape (no spatial null dimensions) are
/// `NaN` rather than an error, so one degenerate sweep point cannot poison a
/// whole run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    /// Lower bound on the average secrecy rate at the configured θ, α.
    pub lb_avg_secrecy: f64,
    /// Upper bound on the eavesdropper's average rate at the configured θ, α.
    pub ub_eve_avg: f64,
    /// High-SNR secrecy lower bound at the optimal data-power fraction.
    pub hi_snr_lb: f64,
    /// Data-power fraction maximizing the high-SNR secrecy bound.
    pub theta_star: f64,
    /// High-SNR upper bound on the secrecy loss at `theta_star`.
    pub loss_ub_hi_snr: f64,
    /// The same loss bound specialized to an eavesdropper with as many
    /// antennas as there are streams: `2·n_e·n/(n + n_cp)`.
    pub loss_ub_ne_eq_ns: f64,
    /// Low-SNR upper bound on the secrecy loss (at θ = 1).
    pub loss_ub_lo_snr: f64,
    /// Ratio of the temporal-noise power normalization to the data one; 1
    /// exactly when per-symbol powers are normalized by the full block.
    pub k_alpha: f64,
    /// Average noise-injection power per temporal/spatial dimension, per unit
    /// of injected power.
    pub lambda_alpha: f64,
    /// One plus the average per-entry noise-injection power seen by the
    /// eavesdropper, scaled by the array size.
    pub p_alpha: f64,
}

impl BoundReport {
    /// Field names, in [`BoundReport::to_array`] order — single source of
    /// truth for CSV headers.
    pub const FIELD_NAMES: [&'static str; 10] = [
        "lb_avg_secrecy",
        "ub_eve_avg",
        "hi_snr_lb",
        "theta_star",
        "loss_ub_hi_snr",
        "loss_ub_ne_eq_ns",
        "loss_ub_lo_snr",
        "k_alpha",
        "lambda_alpha",
        "p_alpha",
    ];

    pub fn to_array(&self) -> [f64; 10] {
        [
            self.lb_avg_secrecy,
            self.ub_eve_avg,
            self.hi_snr_lb,
            self.theta_star,
            self.loss_ub_hi_snr,
            self.loss_ub_ne_eq_ns,
            self.loss_ub_lo_snr,
            self.k_alpha,
            self.lambda_alpha,
            self.p_alpha,
        ]
    }

    pub fn compute(c: &SystemConfig) -> BoundReport {
        let nan = f64::NAN;
        let (loss_ub_lo_snr, _) = lo_snr_bounds(c);
        BoundReport {
            lb_avg_secrecy: lb_avg_secrecy(c).unwrap_or(nan),
            ub_eve_avg: ub_eve_avg(c),
            hi_snr_lb: hi_snr_lb(c),
            theta_star: theta_star(c),
            loss_ub_hi_snr: loss_ub_hi_snr(c),
            loss_ub_ne_eq_ns: loss_ub_ne_eq_ns(c),
            loss_ub_lo_snr,
            k_alpha: k_alpha(c, false),
            lambda_alpha: lambda_alpha(c).unwrap_or(nan),
            p_alpha: p_alpha(c).unwrap_or(nan),
        }
    }
}

// ── shared pieces ──

/// Bits/s/Hz prefactor for a term counting `dims` dimensions per subcarrier.
fn per_shz(c: &SystemConfig, dims: usize) -> f64 {
    (dims * c.n) as f64 / c.block_len() as f64
}

/// The span dividing per-symbol data power: `n`, or the full block under the
/// exact power normalization.
fn data_span(c: &SystemConfig) -> f64 {
    if c.exact_cp_power { c.block_len() as f64 } else { c.n as f64 }
}

/// Large-array per-entry noise-power combination `α/n + ᾱ/(n + n_cp)` (both
/// terms `1/(n + n_cp)` under the exact normalization).
fn an_power_combo(c: &SystemConfig) -> f64 {
    let blk = c.block_len() as f64;
    if c.exact_cp_power {
        1.0 / blk
    } else {
        c.alpha / c.n as f64 + (1.0 - c.alpha) / blk
    }
}

/// The argument of the eavesdropper log at data fraction `theta`: signal
/// power per entry over noise-injection power per entry plus the unit AWGN
/// floor, plus one.
fn eve_log_arg(c: &SystemConfig, theta: f64) -> f64 {
    let energy = c.gamma_eve * c.nu_tilde() as f64 * c.var_ae;
    let signal = theta * energy / data_span(c);
    let noise = (1.0 - theta) * energy * an_power_combo(c) + 1.0;
    signal / noise + 1.0
}

/// Bob's average-rate term at data fraction `theta`: the large-array channel
/// hardening `‖column‖² → n_a·ν̃·σ²` turned into a log.
fn bob_term(c: &SystemConfig, theta: f64) -> f64 {
    let g = theta * c.gamma_bob * (c.n_a * c.nu_tilde()) as f64 * c.var_ab
        / (c.n_s as f64 * data_span(c));
    per_shz(c, c.n_s) * (g + 1.0).log2()
}

// ── bounds ──

/// Lower bound on the average secrecy rate at the configured θ and α,
/// bits/s/Hz. Undefined when the array has no spatial null dimensions — the
/// derivation divides by `n_a − n_s`.
pub fn lb_avg_secrecy(c: &SystemConfig) -> Result<f64> {
    if c.spatial_dim() == 0 {
        return Err(Error::UnsupportedShape(
            "secrecy lower bound needs spatial null dimensions (n_a > n_s)".to_string(),
        ));
    }
    Ok(bob_term(c, c.theta) - per_shz(c, c.n_e) * eve_log_arg(c, c.theta).log2())
}

/// Upper bound on the eavesdropper's average rate at the configured θ and α,
/// bits/s/Hz.
pub fn ub_eve_avg(c: &SystemConfig) -> f64 {
    per_shz(c, c.n_e) * eve_log_arg(c, c.theta).log2()
}

/// The data-power fraction maximizing the high-SNR secrecy bound.
pub fn theta_star(c: &SystemConfig) -> f64 {
    c.n_e as f64 / (c.n_e + c.n_s) as f64
}

/// High-SNR lower bound on the average secrecy rate, already evaluated at
/// [`theta_star`], bits/s/Hz. Additive-one terms are dropped, so this is
/// meaningful only when both links' SNRs are high.
pub fn hi_snr_lb(c: &SystemConfig) -> f64 {
    let (ne, ns) = (c.n_e as f64, c.n_s as f64);
    let g = c.gamma_bob * (c.n_a * c.nu_tilde()) as f64 * c.var_ab / (ns * data_span(c));
    let penalty = (ne / (ne + ns)).powf(ns / ne) * (ns / (ne + ns));
    per_shz(c, c.n_s) * g.log2() + per_shz(c, c.n_e) * penalty.log2()
}

/// High-SNR upper bound on the secrecy loss against a θ = 1 transmitter,
/// evaluated at [`theta_star`], bits/s/Hz.
pub fn loss_ub_hi_snr(c: &SystemConfig) -> f64 {
    let (ne, ns) = (c.n_e as f64, c.n_s as f64);
    per_shz(c, c.n_s) * ((ne + ns) / ne).log2() + per_shz(c, c.n_e) * ((ne + ns) / ns).log2()
}

/// The part of [`loss_ub_hi_snr`] that survives when the eavesdropper has far
/// more antennas than there are streams (the stream term's log tends to 0).
pub fn loss_ub_ne_gg_ns(c: &SystemConfig) -> f64 {
    let (ne, ns) = (c.n_e as f64, c.n_s as f64);
    per_shz(c, c.n_e) * ((ne + ns) / ns).log2()
}

/// [`loss_ub_hi_snr`] specialized to `n_e = n_s`, where both logs become 1:
/// `2·n_e·n/(n + n_cp)` bits/s/Hz. Total in `n_e` so the report always
/// carries it; it upper-bounds the loss only where that equality holds.
pub fn loss_ub_ne_eq_ns(c: &SystemConfig) -> f64 {
    2.0 * per_shz(c, c.n_e)
}

/// Low-SNR bounds at θ = 1 (injecting noise is pointless when the
/// eavesdropper is noise-limited already): upper bound on the secrecy loss
/// and lower bound on the average secrecy rate, both bits/s/Hz.
pub fn lo_snr_bounds(c: &SystemConfig) -> (f64, f64) {
    let loss_ub = per_shz(c, c.n_e) * eve_log_arg(c, 1.0).log2();
    let lb_secrecy = bob_term(c, 1.0) - loss_ub;
    (loss_ub, lb_secrecy)
}

// ── power-accounting scalars ──

/// Average injected power per noise dimension, per unit of total injected
/// power: the spatial per-symbol share plus the temporal per-symbol share.
pub fn lambda_alpha(c: &SystemConfig) -> Result<f64> {
    let mut lambda = 0.0;
    if c.alpha > 0.0 {
        if c.spatial_dim() == 0 {
            return Err(Error::NoSpatialDimensions);
        }
        lambda += c.alpha / (data_span(c) * c.spatial_dim() as f64);
    }
    let abar = 1.0 - c.alpha;
    if abar > 0.0 {
        if c.temporal_dim() == 0 {
            return Err(Error::UnsupportedShape(
                "temporal noise power assigned but the block has no temporal null dimensions"
                    .to_string(),
            ));
        }
        lambda += abar / c.temporal_dim() as f64;
    }
    Ok(lambda)
}

/// One plus the eavesdropper's average per-entry noise-injection power scaled
/// by the array size: `θ̄·Γ_E·n_a·ν̃·σ²·λ_α + 1`.
pub fn p_alpha(c: &SystemConfig) -> Result<f64> {
    let lambda = lambda_alpha(c)?;
    Ok((1.0 - c.theta) * c.gamma_eve * (c.n_a * c.nu_tilde()) as f64 * c.var_ae * lambda + 1.0)
}

/// Ratio of the data-power normalization to the effective noise-injection
/// normalization. With per-symbol powers divided by `n`, it is
/// `α + ᾱ·n/(n + n_cp)`; the exact block normalization (or `simplified`)
/// makes it 1.
pub fn k_alpha(c: &SystemConfig, simplified: bool) -> f64 {
    if simplified || c.exact_cp_power {
        1.0
    } else {
        c.alpha + (1.0 - c.alpha) * c.n as f64 / c.block_len() as f64
    }
}

/// The high-SNR tradeoff objective in the data fraction θ whose maximizer
/// motivates [`theta_star`]: `θ^{n_s/n_e} · θ̄·k/(θ + θ̄·k)`.
pub fn f_theta(theta: f64, n_s: usize, n_e: usize, k: f64) -> f64 {
    let tb = 1.0 - theta;
    theta.powf(n_s as f64 / n_e as f64) * tb * k / (theta + tb * k)
}

/// [`f_theta`] with the block-normalization ratio set to 1:
/// `θ^{n_s/n_e}·(1 − θ)`.
pub fn f_theta_simplified(theta: f64, n_s: usize, n_e: usize) -> f64 {
    theta.powf(n_s as f64 / n_e as f64) * (1.0 - theta)
}

// ── large-array matrix forms ──

/// Secrecy rate for one realization under the large-array noise-covariance
/// approximation `Σ_AN ≈ θ̄Γ_E/(n(n_a−n_s))·G·G^H`, in bits/block. `joint`
/// treats the eavesdropper's subcarriers as one matrix; `persub` evaluates
/// the same formula subcarrier by subcarrier. Both noise models are block
/// diagonal, so the two agree to rounding — which is the point: under this
/// approximation joint processing buys the eavesdropper nothing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticSecrecy {
    pub joint: f64,
    pub persub: f64,
}

/// Evaluate the large-array secrecy approximation on one realization. The
/// data-power fraction and spans come from the config; α does not appear —
/// in this regime the two noise families blur together.
pub fn asymptotic_secrecy_matrices(
    r: &ChannelRealization,
    pre: &PrecoderSet,
    c: &SystemConfig,
) -> Result<AsymptoticSecrecy> {
    if c.spatial_dim() == 0 {
        return Err(Error::NoSpatialDimensions);
    }
    let split = power_split(c, 1.0);
    let gd = c.gamma_eve * split.per_data_symbol;
    let w_an = (1.0 - c.theta) * c.gamma_eve / (c.n as f64 * c.spatial_dim() as f64);
    let bob: f64 = pre
        .sv
        .iter()
        .map(|gains| parallel_stream_rate(gains, c.gamma_bob * split.per_data_symbol))
        .sum();

    let dim = c.n_e * c.n;
    let mut s_full = CMat::zeros(dim, dim);
    let mut sigma_full = CMat::zeros(dim, dim);
    let mut persub_eve = 0.0;
    for k in 0..c.n {
        let ga = &r.freq_ae[k] * &pre.a[k];
        let s = mul(&ga, Op::N, &ga, Op::H) * Complex64::new(gd, 0.0);
        let g = &r.freq_ae[k];
        let sig = mul(g, Op::N, g, Op::H) * Complex64::new(w_an, 0.0);
        persub_eve += logdet_rate(&s, &sig)?;
        s_full.view_mut((k * c.n_e, k * c.n_e), (c.n_e, c.n_e)).copy_from(&s);
        sigma_full.view_mut((k * c.n_e, k * c.n_e), (c.n_e, c.n_e)).copy_from(&sig);
    }
    let joint_eve = logdet_rate_auto(&s_full, &sigma_full)?;
    Ok(AsymptoticSecrecy { joint: bob - joint_eve, persub: bob - persub_eve })
}
