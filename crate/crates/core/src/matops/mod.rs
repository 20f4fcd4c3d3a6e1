//! Dense complex matrix operations used across the simulator.
//!
//! Kernels (GEMM, Cholesky, QR, FFT plans, Toeplitz solves) live in submodules;
//! this file holds the contract-level operations whose numerical behavior the
//! rest of the library depends on: economy SVD with a fixed phase convention,
//! null-space extraction, modified Gram–Schmidt, and the Hermitian log-det rate
//! evaluations with their PSD guards.

pub mod chol;
pub mod fftcache;
pub mod gemm;
pub mod qr;
pub mod toeplitz;

pub use chol::{cholesky_lower_in_place, logdet2_hpd, solve_adjoint_right_in_place, solve_lower_in_place};
pub use fftcache::{fft_forward, fft_inverse};
pub use gemm::{gemm, mul, Op};
pub use qr::{householder_factor, orthonormal_complement, Householder};
pub use toeplitz::{toeplitz_apply_inverse, toeplitz_dense, ToeplitzMode};

use crate::{CMat, Complex64, Error, Result};

// ── economy SVD ──

/// Economy-size SVD `m = u * diag(sv) * v^H` with `u: r×k`, `v: c×k`,
/// `k = min(r, c)`, singular values descending.
pub struct SvdEcon {
    pub u: CMat,
    pub sv: Vec<f64>,
    pub v: CMat,
}

/// Economy SVD with a deterministic phase convention: in each right-singular
/// column the first entry of magnitude above 1e-12 is rotated to the positive
/// real axis (its compensating phase goes into the matching left column), so
/// precoders derived from the factorization don't flap between equivalent
/// gauge choices across runs or backends.
pub fn svd_econ(m: &CMat) -> Result<SvdEcon> {
    let svd = m
        .clone()
        .try_svd(true, true, 1e-14, 10_000)
        .ok_or(Error::SvdFailed)?;
    let mut u = svd.u.ok_or(Error::SvdFailed)?;
    let mut v_t = svd.v_t.ok_or(Error::SvdFailed)?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();

    // v_t rows are v^H rows; fix the phase per singular triple.
    for j in 0..sv.len() {
        let mut anchor = Complex64::new(0.0, 0.0);
        for q in 0..v_t.ncols() {
            let z = v_t[(j, q)].conj(); // entry of v column j
            if z.norm() > 1e-12 {
                anchor = z;
                break;
            }
        }
        if anchor.norm() <= 1e-12 {
            continue;
        }
        let phase = anchor / anchor.norm(); // e^{iφ}
        // Rotate v_j by e^{-iφ} so the anchor lands on the positive real axis;
        // u_j picks up the same factor, leaving u_j v_j^H untouched.
        // v[:, j] *= conj(phase)  ⇔  v_t[j, :] *= phase.
        for q in 0..v_t.ncols() {
            v_t[(j, q)] *= phase;
        }
        let phase_conj = phase.conj();
        for p in 0..u.nrows() {
            u.column_mut(j)[p] *= phase_conj;
        }
    }
    let v = v_t.adjoint();
    Ok(SvdEcon { u, sv, v })
}

// ── null space ──

/// Orthonormal basis of the (right) null space of `m`, columns spanning
/// `{x : m x = 0}`. Rank is decided by singular values relative to the largest:
/// anything below `rel_tol * sv_max` counts as zero. A zero (or empty) matrix
/// returns the identity; a full-rank matrix returns a basis with zero columns.
pub fn null_space_basis(m: &CMat, rel_tol: f64) -> Result<CMat> {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return Ok(CMat::identity(n, n));
    }
    let SvdEcon { sv, v, .. } = svd_econ(m)?;
    let sv_max = sv.first().copied().unwrap_or(0.0);
    if sv_max == 0.0 {
        return Ok(CMat::identity(n, n));
    }
    let rank = sv.iter().take_while(|&&s| s > rel_tol * sv_max).count();
    // Row space of m = first `rank` columns of v; null space is its complement.
    let row_space = v.columns(0, rank).into_owned();
    Ok(orthonormal_complement(&row_space))
}

// ── modified Gram–Schmidt ──

/// Orthonormalize the columns of `m` in place (modified Gram–Schmidt with one
/// re-orthogonalization pass). Errors with `DegenerateColumn` when a column's
/// remaining norm drops below 1e-12 of the Frobenius norm of the input — the
/// caller is feeding linearly dependent (or catastrophically cancelled) columns
/// and the output would not be a basis.
pub fn gram_schmidt(m: &mut CMat) -> Result<()> {
    let scale = m.norm();
    let ncols = m.ncols();
    for j in 0..ncols {
        for _pass in 0..2 {
            for i in 0..j {
                let qi = m.column(i).into_owned();
                let proj = qi.dotc(&m.column(j).into_owned());
                let mut col = m.column_mut(j);
                for p in 0..qi.nrows() {
                    col[p] -= proj * qi[p];
                }
            }
        }
        let norm = m.column(j).norm();
        if norm < 1e-12 * scale {
            return Err(Error::DegenerateColumn { col: j, norm, scale });
        }
        let mut col = m.column_mut(j);
        col /= Complex64::new(norm, 0.0);
    }
    Ok(())
}

// ── Hermitian guards ──

fn hermitian_asymmetry(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..m.nrows() {
        for q in p..m.ncols() {
            let d = (m[(p, q)] - m[(q, p)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    let scale = m.norm().max(1.0);
    worst / scale
}

fn check_hermitian(m: &CMat) -> Result<()> {
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > 1e-10 {
        return Err(Error::NonHermitian { asymmetry });
    }
    Ok(())
}

/// Hermitian-symmetrize in place: `m := (m + m^H) / 2`.
fn symmetrize(m: &mut CMat) {
    for p in 0..m.nrows() {
        for q in p..m.ncols() {
            let avg = (m[(p, q)] + m[(q, p)].conj()) * 0.5;
            m[(p, q)] = avg;
            m[(q, p)] = avg.conj();
        }
    }
}

// ── log-det rates ──

/// `log2 det(I + (Σ + I)^{-1} S)` for Hermitian PSD `s` (signal) and `sigma`
/// (interference), both `n×n`. This is the fully-guarded reference path:
/// Hermitian checks on both inputs, Cholesky of `Σ + I`, two-sided whitening of
/// `S`, then a Hermitian eigendecomposition. Eigenvalues below
/// `-1e-10 · trace` trip a PSD violation; small negatives inside that band are
/// clamped to zero before the `log2(1 + λ)` sum.
pub fn logdet_rate(s: &CMat, sigma: &CMat) -> Result<f64> {
    check_hermitian(s)?;
    check_hermitian(sigma)?;
    let n = s.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut l = sigma + CMat::identity(n, n);
    cholesky_lower_in_place(&mut l)?;
    // w = L^{-1} S L^{-H}
    let mut w = s.clone();
    solve_lower_in_place(&l, &mut w);
    let mut w = w.adjoint();
    solve_lower_in_place(&l, &mut w);
    let mut w = w.adjoint();
    symmetrize(&mut w);
    let trace = w.diagonal().iter().map(|z| z.re).sum::<f64>().abs().max(1.0);
    let eig = nalgebra::SymmetricEigen::try_new(w, 1e-14, 100_000).ok_or(Error::EigenFailed)?;
    let mut rate = 0.0;
    for &lam in eig.eigenvalues.iter() {
        if lam < -1e-10 * trace {
            return Err(Error::NotPsd {
                detail: format!("whitened signal eigenvalue {lam:.3e} below -1e-10 * trace"),
            });
        }
        rate += (1.0 + lam.max(0.0)).log2();
    }
    Ok(rate)
}

/// Same quantity as [`logdet_rate`] via `log2 det(S + Σ + I) − log2 det(Σ + I)`
/// (two Cholesky factorizations, no eigendecomposition). Cheaper above a few
/// hundred dimensions but with weaker diagnostics: a sum matrix that fails to
/// factor reports `NotPsd` without isolating which input was at fault.
pub fn logdet_rate_fast(s: &CMat, sigma: &CMat) -> Result<f64> {
    check_hermitian(s)?;
    check_hermitian(sigma)?;
    let n = s.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let eye = CMat::identity(n, n);
    let num = logdet2_hpd(&(s + sigma + &eye))?;
    let den = logdet2_hpd(&(sigma + &eye))?;
    Ok(num - den)
}

/// Dimension above which the two-Cholesky path is used by rate evaluations that
/// are free to pick either formula.
pub const LOGDET_FAST_DIM: usize = 160;

/// Dispatch between [`logdet_rate`] (small, fully guarded) and
/// [`logdet_rate_fast`] (large) on [`LOGDET_FAST_DIM`].
pub fn logdet_rate_auto(s: &CMat, sigma: &CMat) -> Result<f64> {
    if s.nrows() > LOGDET_FAST_DIM {
        logdet_rate_fast(s, sigma)
    } else {
        logdet_rate(s, sigma)
    }
}

/// `log2 det(I + F^H (Σ + I)^{-1} F)` — the same rate as
/// `logdet_rate(F·F^H, Σ)` by the determinant lemma, but evaluated in the column
/// dimension of the factor `F`. When the signal has low rank (`F` tall and
/// thin) this replaces an `n×n` eigen/Cholesky pass on the signal with one
/// triangular solve against `F` and a small `r×r` factorization.
pub fn logdet_rate_factored(f: &CMat, sigma: &CMat) -> Result<f64> {
    check_hermitian(sigma)?;
    let (n, r) = (f.nrows(), f.ncols());
    assert_eq!(sigma.nrows(), n, "factor rows must match the noise dimension");
    if r == 0 || n == 0 {
        return Ok(0.0);
    }
    let mut l = sigma + CMat::identity(n, n);
    cholesky_lower_in_place(&mut l)?;
    let mut w = f.clone();
    solve_lower_in_place(&l, &mut w);
    let mut small = mul(&w, Op::H, &w, Op::N);
    symmetrize(&mut small);
    small += CMat::identity(r, r);
    logdet2_hpd(&small)
}

/// `Σ_i log2(1 + g · sv_i²)` — the rate of a set of parallel scalar channels
/// with per-stream gain `g` applied to squared singular values.
pub fn parallel_stream_rate(sv: &[f64], g: f64) -> f64 {
    sv.iter().map(|&s| (1.0 + g * s * s).log2()).sum()
}

#[allow(dead_code)]
fn _assert_send<T: Send>() {}
