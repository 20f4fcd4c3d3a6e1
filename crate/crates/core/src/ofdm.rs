//! The structural layer of the simulator: system configuration, random
//! channel realizations, cyclic-prefix and DFT plumbing, permutations between
//! subcarrier-major and antenna-major stacking, and the banded time-domain
//! convolution operators that tie them together.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * A transmitted OFDM block per antenna is `n + n_cp` samples; the CP is the
//!   last `n_cp` samples copied to the front. CP removal drops the first
//!   `n_cp` received samples.
//! * Multi-antenna time-domain vectors are stacked antenna-major (antenna `a`
//!   owns a contiguous run of samples); frequency-domain vectors are stacked
//!   subcarrier-major (subcarrier `k` owns a contiguous run of antennas). The
//!   permutation `perm_to_antenna_major` maps the latter indexing to the
//!   former.
//! * The DFT is unitary, `F[k, t] = exp(-2πi·kt/n)/√n`. With that scaling the
//!   per-subcarrier frequency response is exactly `H_k = Σ_ℓ h_ℓ·ω^{ℓk}`,
//!   `ω = exp(-2πi/n)` — no residual 1/n factors.
//! * A CP-removed convolution block has entry `(p, m) = h_{n_cp+p-m}` wherever
//!   that tap index is in range, i.e. the impulse response runs backwards along
//!   each row and row `p`'s band covers columns `p + n_cp - ν ..= p + n_cp`.
//!   This is not a convention choice: it is forced by `diagonalize`, which
//!   checks that DFT + CP turns the banded operator into per-subcarrier blocks
//!   equal to the tap-sum `H_k` above.

use crate::matops::{fft_forward, fft_inverse, mul, Op};
use crate::{CMat, Complex64, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

// ── configuration ──

/// Every scalar parameter of the model. `gamma_bob`/`gamma_eve` are *linear*
/// SNRs (noise variance is normalized to 1, so the transmit power budget equals
/// the SNR); the config-file surface speaks dB and converts on load.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemConfig {
    /// Subcarrier count per OFDM symbol.
    pub n: usize,
    /// Cyclic-prefix length in samples.
    pub n_cp: usize,
    /// Delay spread: taps beyond the first, so a channel has `nu + 1` taps.
    pub nu: usize,
    /// Transmit antennas.
    pub n_a: usize,
    /// Legitimate-receiver antennas.
    pub n_b: usize,
    /// Eavesdropper antennas.
    pub n_e: usize,
    /// Spatial data streams.
    pub n_s: usize,
    /// Linear SNR on the legitimate link.
    pub gamma_bob: f64,
    /// Linear SNR on the eavesdropper link.
    pub gamma_eve: f64,
    /// Per-tap variance of legitimate-link channel entries.
    pub var_ab: f64,
    /// Per-tap variance of eavesdropper-link channel entries.
    pub var_ae: f64,
    /// Fraction of the power budget spent on data (the rest is noise injection).
    pub theta: f64,
    /// Fraction of the noise-injection budget spent spatially (rest temporally).
    pub alpha: f64,
    /// When true, per-symbol data and spatial-AN powers are divided by
    /// `n + n_cp` instead of `n`, making the average transmit power exactly
    /// equal to the budget rather than `(n + n_cp)/n` times it.
    pub exact_cp_power: bool,
}

/// On-disk schema: exactly these keys, SNRs in dB.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n: usize,
    n_cp: usize,
    nu: usize,
    n_a: usize,
    n_b: usize,
    n_e: usize,
    n_s: usize,
    gamma_bob_db: f64,
    gamma_eve_db: f64,
    var_ab: f64,
    var_ae: f64,
    theta: f64,
    alpha: f64,
    #[serde(default)]
    exact_cp_power: bool,
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemConfig {
    /// Total taps per channel.
    pub fn nu_tilde(&self) -> usize {
        self.nu + 1
    }

    /// Samples per transmitted OFDM block (symbol plus CP).
    pub fn block_len(&self) -> usize {
        self.n + self.n_cp
    }

    /// Spatial noise-injection dimensions per subcarrier.
    pub fn spatial_dim(&self) -> usize {
        self.n_a - self.n_s
    }

    /// Temporal noise-injection dimensions per block:
    /// `n·(n_a − n_s) + n_cp·n_a`.
    pub fn temporal_dim(&self) -> usize {
        self.n * (self.n_a - self.n_s) + self.n_cp * self.n_a
    }

    /// Check every structural constraint, returning the config on success.
    pub fn validate(self) -> Result<Self> {
        fn bad(field: &str, message: impl Into<String>) -> Error {
            Error::Config { field: field.to_string(), message: message.into() }
        }
        if self.n < 1 {
            return Err(bad("n", "at least one subcarrier required"));
        }
        if self.n_cp < self.nu {
            return Err(bad("n_cp", format!("cp shorter than delay spread ({} < {})", self.n_cp, self.nu)));
        }
        if self.n_cp > self.n {
            return Err(bad("n_cp", format!("cp length {} exceeds symbol length {}", self.n_cp, self.n)));
        }
        if self.n_s < 1 {
            return Err(bad("n_s", "at least one stream required"));
        }
        if self.n_s > self.n_a.min(self.n_b) {
            return Err(bad(
                "n_s",
                format!("streams {} exceed min(n_a, n_b) = {}", self.n_s, self.n_a.min(self.n_b)),
            ));
        }
        if self.n_e < 1 {
            return Err(bad("n_e", "eavesdropper needs at least one antenna"));
        }
        for (name, v) in [("theta", self.theta), ("alpha", self.alpha)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(name, format!("{v} outside [0, 1]")));
            }
        }
        for (name, v) in [
            ("gamma_bob", self.gamma_bob),
            ("gamma_eve", self.gamma_eve),
            ("var_ab", self.var_ab),
            ("var_ae", self.var_ae),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(bad(name, format!("{v} must be finite and nonnegative")));
            }
        }
        if self.n_a == self.n_s && self.alpha > 0.0 {
            return Err(bad(
                "alpha",
                "no spatial dimensions are free when n_a = n_s; alpha must be 0",
            ));
        }
        Ok(self)
    }

    /// Parse from `key = value` text. Keys are exactly the `ConfigFile` set;
    /// unknown or missing keys are errors, `exact_cp_power` defaults to false.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::ConfigFile {
            path: "<inline>".to_string(),
            message: e.to_string(),
        })?;
        SystemConfig {
            n: file.n,
            n_cp: file.n_cp,
            nu: file.nu,
            n_a: file.n_a,
            n_b: file.n_b,
            n_e: file.n_e,
            n_s: file.n_s,
            gamma_bob: db_to_linear(file.gamma_bob_db),
            gamma_eve: db_to_linear(file.gamma_eve_db),
            var_ab: file.var_ab,
            var_ae: file.var_ae,
            theta: file.theta,
            alpha: file.alpha,
            exact_cp_power: file.exact_cp_power,
        }
        .validate()
    }

    /// Read and parse a configuration file.
    pub fn from_config_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_config_str(&text).map_err(|e| match e {
            Error::ConfigFile { message, .. } => {
                Error::ConfigFile { path: path.display().to_string(), message }
            }
            other => other,
        })
    }
}

// ── channel realizations ──

/// One draw of both links: time-domain taps plus the per-subcarrier frequency
/// responses they induce. `taps_ab[l]` is the `n_b × n_a` matrix of tap `l`;
/// `freq_ab[k]` is the `n_b × n_a` response on subcarrier `k`. Same layout for
/// the eavesdropper link with `n_e` rows.
pub struct ChannelRealization {
    pub taps_ab: Vec<CMat>,
    pub taps_ae: Vec<CMat>,
    pub freq_ab: Vec<CMat>,
    pub freq_ae: Vec<CMat>,
}

/// Direct tap-sum evaluation of the frequency response:
/// `H_k = Σ_ℓ taps[ℓ]·exp(-2πi·ℓk/n)`.
///
/// Deliberately *not* FFT-based: this is the reference formula, cheap at the
/// sizes involved, and it double-checks every FFT-backed path that must agree
/// with it.
pub fn freq_from_taps(taps: &[CMat], n: usize) -> Vec<CMat> {
    let (rows, cols) = (taps[0].nrows(), taps[0].ncols());
    (0..n)
        .map(|k| {
            let mut h = CMat::zeros(rows, cols);
            for (l, tap) in taps.iter().enumerate() {
                let w = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (l * k) as f64 / n as f64);
                h += tap * w;
            }
            h
        })
        .collect()
}

fn draw_taps(rng: &mut ChaCha8Rng, nu_tilde: usize, n_rx: usize, n_tx: usize, var: f64) -> Vec<CMat> {
    let scale = (var / 2.0).sqrt();
    (0..nu_tilde)
        .map(|_| {
            let mut m = CMat::zeros(n_rx, n_tx);
            // Row-within-tap draw order (rx outer, tx inner) is part of the
            // determinism contract; don't swap the loops.
            for i in 0..n_rx {
                for j in 0..n_tx {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    m[(i, j)] = Complex64::new(re * scale, im * scale);
                }
            }
            m
        })
        .collect()
}

/// Draw both links i.i.d. circularly-symmetric complex Gaussian, per-tap
/// variance `var_ab` / `var_ae` (real and imaginary parts each `var/2`).
/// Deterministic in `(c, seed)`; the legitimate link consumes its randomness
/// before the eavesdropper link starts.
pub fn draw_channel(c: &SystemConfig, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taps_ab = draw_taps(&mut rng, c.nu_tilde(), c.n_b, c.n_a, c.var_ab);
    let taps_ae = draw_taps(&mut rng, c.nu_tilde(), c.n_e, c.n_a, c.var_ae);
    let freq_ab = freq_from_taps(&taps_ab, c.n);
    let freq_ae = freq_from_taps(&taps_ae, c.n);
    ChannelRealization { taps_ab, taps_ae, freq_ab, freq_ae }
}

// ── banded convolution ──

/// CP-removed block convolution for one link: maps an antenna-major transmit
/// vector of `n_tx·(n + n_cp)` samples to an antenna-major received vector of
/// `n_rx·n` samples. Block `(i, j)` has entry `(p, m) = taps[n_cp + p - m][i, j]`
/// inside the band and zero outside; the operator never stores the zeros.
pub struct BandedConv {
    taps: Vec<CMat>,
    n: usize,
    n_cp: usize,
}

impl BandedConv {
    pub fn new(taps: &[CMat], n: usize, n_cp: usize) -> Self {
        assert!(!taps.is_empty());
        assert!(taps.len() <= n_cp + 1, "band would clip: need nu <= n_cp");
        BandedConv { taps: taps.to_vec(), n, n_cp }
    }

    pub fn n_rx(&self) -> usize {
        self.taps[0].nrows()
    }

    /// The per-delay tap matrices, index = delay.
    pub fn taps(&self) -> &[CMat] {
        &self.taps
    }

    pub fn n_tx(&self) -> usize {
        self.taps[0].ncols()
    }

    pub fn nu(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn nrows(&self) -> usize {
        self.n_rx() * self.n
    }

    pub fn ncols(&self) -> usize {
        self.n_tx() * (self.n + self.n_cp)
    }

    /// `y = conv · x` for antenna-major `x` with `ncols()` rows.
    pub fn apply(&self, x: &CMat) -> CMat {
        assert_eq!(x.nrows(), self.ncols());
        let (n, n_cp, nu) = (self.n, self.n_cp, self.nu());
        let blk = n + n_cp;
        let mut y = CMat::zeros(self.nrows(), x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.n_rx() {
                for p in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    // taps index l = n_cp + p - m ∈ 0..=nu  ⇒  m = n_cp + p - l.
                    for l in 0..=nu {
                        let m = n_cp + p - l;
                        for j in 0..self.n_tx() {
                            acc += self.taps[l][(i, j)] * x[(j * blk + m, c)];
                        }
                    }
                    y[(i * n + p, c)] = acc;
                }
            }
        }
        y
    }

    /// `x = conv^H · y` for antenna-major `y` with `nrows()` rows.
    pub fn apply_adjoint(&self, y: &CMat) -> CMat {
        assert_eq!(y.nrows(), self.nrows());
        let (n, n_cp, nu) = (self.n, self.n_cp, self.nu());
        let blk = n + n_cp;
        let mut x = CMat::zeros(self.ncols(), y.ncols());
        for c in 0..y.ncols() {
            for i in 0..self.n_rx() {
                for p in 0..n {
                    let v = y[(i * n + p, c)];
                    for l in 0..=nu {
                        let m = n_cp + p - l;
                        for j in 0..self.n_tx() {
                            x[(j * blk + m, c)] += self.taps[l][(i, j)].conj() * v;
                        }
                    }
                }
            }
        }
        x
    }

    /// Full dense matrix; for oracles and small sizes only.
    pub fn to_dense(&self) -> CMat {
        let (n, n_cp, nu) = (self.n, self.n_cp, self.nu());
        let blk = n + n_cp;
        let mut d = CMat::zeros(self.nrows(), self.ncols());
        for i in 0..self.n_rx() {
            for j in 0..self.n_tx() {
                for p in 0..n {
                    for l in 0..=nu {
                        let m = n_cp + p - l;
                        d[(i * n + p, j * blk + m)] = self.taps[l][(i, j)];
                    }
                }
            }
        }
        d
    }

    /// Tap cross-correlations `corr[d + nu][i, j] = Σ_a Σ_s taps[s+d][i, a] ·
    /// conj(other.taps[s][j, a])` for lags `d ∈ -nu ..= nu`.
    ///
    /// Because both operators' bands fit strictly inside the CP (`nu ≤ n_cp`),
    /// block `(i, j)` of the product `self · other^H` is *exactly* the n×n
    /// Toeplitz matrix with entry `(p, q) = corr[(p - q) + nu][i, j]` — no
    /// boundary corrections. That identity is what lets covariance code skip
    /// the huge dense product; it is pinned by a test below.
    pub fn cross_correlation(&self, other: &BandedConv) -> Vec<CMat> {
        assert_eq!(self.n_tx(), other.n_tx());
        assert_eq!(self.n, other.n);
        assert_eq!(self.n_cp, other.n_cp);
        let nu_s = self.nu() as isize;
        let nu_o = other.nu() as isize;
        let nu = nu_s.max(nu_o);
        let mut out = Vec::with_capacity((2 * nu + 1) as usize);
        for d in -nu..=nu {
            let mut c = CMat::zeros(self.n_rx(), other.n_rx());
            for s in 0..=nu_o {
                let sd = s + d;
                if sd < 0 || sd > nu_s {
                    continue;
                }
                // c += taps[s + d] · other.taps[s]^H
                c += mul(&self.taps[sd as usize], Op::N, &other.taps[s as usize], Op::H);
            }
            out.push(c);
        }
        out
    }
}

// ── CP, DFT, permutation operators ──

/// The per-link time-domain operators derived from one realization.
pub struct TimeDomainOps {
    pub conv_ab: BandedConv,
    pub conv_ae: BandedConv,
    pub n: usize,
    pub n_cp: usize,
}

/// Assemble both links' CP-removed convolutions.
pub fn build_time_ops(r: &ChannelRealization, c: &SystemConfig) -> TimeDomainOps {
    TimeDomainOps {
        conv_ab: BandedConv::new(&r.taps_ab, c.n, c.n_cp),
        conv_ae: BandedConv::new(&r.taps_ae, c.n, c.n_cp),
        n: c.n,
        n_cp: c.n_cp,
    }
}

impl TimeDomainOps {
    /// Per-antenna CP insertion, `(n + n_cp) × n`: copies the last `n_cp`
    /// samples of a symbol to its head.
    pub fn cp_insert(&self) -> CMat {
        let (n, n_cp) = (self.n, self.n_cp);
        let mut t = CMat::zeros(n + n_cp, n);
        for r in 0..n_cp {
            t[(r, n - n_cp + r)] = Complex64::new(1.0, 0.0);
        }
        for r in 0..n {
            t[(n_cp + r, r)] = Complex64::new(1.0, 0.0);
        }
        t
    }

    /// Per-antenna CP removal, `n × (n + n_cp)`: drops the first `n_cp` samples.
    pub fn cp_remove(&self) -> CMat {
        let (n, n_cp) = (self.n, self.n_cp);
        let mut r = CMat::zeros(n, n + n_cp);
        for p in 0..n {
            r[(p, n_cp + p)] = Complex64::new(1.0, 0.0);
        }
        r
    }
}

/// Index map from subcarrier-major to antenna-major stacking:
/// `map[k·n_ant + a] = a·n + k`. Applying it as `y[map[s]] = x[s]` turns a
/// subcarrier-major vector into an antenna-major one.
pub fn perm_to_antenna_major(n_ant: usize, n: usize) -> Vec<usize> {
    let mut map = vec![0usize; n_ant * n];
    for k in 0..n {
        for a in 0..n_ant {
            map[k * n_ant + a] = a * n + k;
        }
    }
    map
}

/// The permutation above as a dense 0/1 matrix `P` with
/// `P[a·n + k, k·n_ant + a] = 1`, so `P x_submajor = x_antmajor`.
pub fn perm_matrix(n_ant: usize, n: usize) -> CMat {
    let map = perm_to_antenna_major(n_ant, n);
    let mut p = CMat::zeros(n_ant * n, n_ant * n);
    for (s, &t) in map.iter().enumerate() {
        p[(t, s)] = Complex64::new(1.0, 0.0);
    }
    p
}

/// Unitary DFT matrix, `F[k, t] = exp(-2πi·kt/n)/√n`.
pub fn dft_matrix(n: usize) -> CMat {
    let scale = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |k, t| {
        Complex64::from_polar(scale, -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64)
    })
}

/// Apply the unitary DFT (or its inverse) to each length-`n` antenna block of
/// every column of `m` in place. `m.nrows()` must be a multiple of `n`.
pub fn dft_blocks_in_place(m: &mut CMat, n: usize, inverse: bool) {
    assert_eq!(m.nrows() % n, 0);
    let blocks = m.nrows() / n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..m.ncols() {
        for b in 0..blocks {
            for t in 0..n {
                buf[t] = m[(b * n + t, c)];
            }
            if inverse {
                fft_inverse(&mut buf);
            } else {
                fft_forward(&mut buf);
            }
            for t in 0..n {
                m[(b * n + t, c)] = buf[t] * scale;
            }
        }
    }
}

// ── diagonalization check ──

/// Which link's convolution to diagonalize.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Link {
    AB,
    AE,
}

/// Push the CP-removed convolution through the full transmit/receive chain
/// (`P_rx^T · F_rx · conv · T^cp · F_tx^H · P_tx`) and return the `n`
/// per-subcarrier blocks of the result.
///
/// The chain must be block-diagonal in the subcarrier-major ordering; off-block
/// Frobenius mass above `1e-10` of the total is a construction-convention
/// error, meaning the tap placement inside the band disagrees with the CP/DFT
/// conventions. The returned blocks equal the tap-sum frequency responses to
/// the same tolerance — callers use that as the end-to-end consistency oracle.
pub fn diagonalize(ops: &TimeDomainOps, which: Link) -> Result<Vec<CMat>> {
    let conv = match which {
        Link::AB => &ops.conv_ab,
        Link::AE => &ops.conv_ae,
    };
    diagonalize_dense(&conv.to_dense(), ops, conv.n_rx(), conv.n_tx())
}

/// Dense-matrix core of [`diagonalize`]; split out so tests can feed it a
/// deliberately mis-built operator that the banded constructor would refuse.
fn diagonalize_dense(dense: &CMat, ops: &TimeDomainOps, n_rx: usize, n_tx: usize) -> Result<Vec<CMat>> {
    let n = ops.n;

    // conv · T^cp (block-diagonal per tx antenna) — dense throughout; this
    // routine is a correctness check, not a hot path.
    let t_cp = ops.cp_insert();
    let mut conv_t = CMat::zeros(n_rx * n, n_tx * n);
    let blk = n + ops.n_cp;
    for j in 0..n_tx {
        let cols = dense.columns(j * blk, blk);
        let prod = mul(&cols.into_owned(), Op::N, &t_cp, Op::N);
        conv_t.columns_mut(j * n, n).copy_from(&prod);
    }

    // Right: multiply by F^H per tx block; left: multiply by F per rx block.
    let mut m = conv_t.adjoint();
    dft_blocks_in_place(&mut m, n, false); // F applied to m's columns = (conv·Tcp·F^H)^H
    let mut m = m.adjoint();
    dft_blocks_in_place(&mut m, n, false);

    let perm_rx = perm_to_antenna_major(n_rx, n);
    let perm_tx = perm_to_antenna_major(n_tx, n);
    // m is antenna-major on both sides; P^T · m · P re-expresses it subcarrier-major:
    // sub[s1, s2] = ant[perm_rx[s1], perm_tx[s2]].
    let sub = CMat::from_fn(n_rx * n, n_tx * n, |s1, s2| m[(perm_rx[s1], perm_tx[s2])]);

    // Split into blocks and measure off-block mass.
    let total = sub.norm();
    let mut off_sq = 0.0;
    let mut blocks = Vec::with_capacity(n);
    for k in 0..n {
        blocks.push(sub.view((k * n_rx, k * n_tx), (n_rx, n_tx)).into_owned());
    }
    for s1 in 0..n_rx * n {
        for s2 in 0..n_tx * n {
            if s1 / n_rx != s2 / n_tx {
                off_sq += sub[(s1, s2)].norm_sqr();
            }
        }
    }
    let off = off_sq.sqrt();
    if off > 1e-10 * total.max(1e-300) {
        return Err(Error::ConstructionConvention { off_block: off / total.max(1e-300) });
    }
    Ok(blocks)
}
