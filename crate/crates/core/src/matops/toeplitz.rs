//! Inverse application of banded upper-triangular Toeplitz matrices.
//!
//! The matrix is `T[p, q] = taps[q - p]` for `0 <= q - p < taps.len()`, zero
//! elsewhere: `taps` is the first row, `taps[0]` sits on the diagonal. This is
//! the shape of the leading square block of a CP-removed channel convolution
//! (the impulse response read backwards along each row), which is why the
//! temporal-AN fast route solves against it.
//!
//! Exact mode is plain back-substitution over the band. Circulant mode replaces
//! `T` by the circulant with the same first row and solves it in the Fourier
//! domain — an O(N log N) approximation whose wrap-around error the caller must
//! knowingly accept (exact mode has none).

use super::fftcache::{fft_forward, fft_inverse};
use crate::{CMat, Complex64, Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ToeplitzMode {
    Exact,
    Circulant,
}

/// Solve `T x = rhs` column-wise, returning `x`.
///
/// Errors with `SingularTap` when the diagonal tap magnitude is below 1e-14
/// (the determinant is `taps[0]^N`, so the system is then rank deficient), and
/// with `SingularSpectrum` when a circulant eigenvalue vanishes.
pub fn toeplitz_apply_inverse(taps: &[Complex64], rhs: &CMat, mode: ToeplitzMode) -> Result<CMat> {
    assert!(!taps.is_empty(), "toeplitz_apply_inverse: empty tap vector");
    if taps[0].norm() < 1e-14 {
        return Err(Error::SingularTap { magnitude: taps[0].norm() });
    }
    match mode {
        ToeplitzMode::Exact => Ok(solve_exact(taps, rhs)),
        ToeplitzMode::Circulant => solve_circulant(taps, rhs),
    }
}

fn solve_exact(taps: &[Complex64], rhs: &CMat) -> CMat {
    let n = rhs.nrows();
    let band = taps.len();
    let mut x = rhs.clone();
    for c in 0..x.ncols() {
        let mut col = x.column_mut(c);
        for p in (0..n).rev() {
            let mut s = col[p];
            let hi = (band - 1).min(n - 1 - p);
            for j in 1..=hi {
                s -= taps[j] * col[p + j];
            }
            col[p] = s / taps[0];
        }
    }
    x
}

fn solve_circulant(taps: &[Complex64], rhs: &CMat) -> Result<CMat> {
    let n = rhs.nrows();
    // With first-row taps, (T_circ x)[p] = Σ_d taps[d] x[(p+d) mod n]: a circular
    // correlation, diagonalized by the DFT with multiplier Σ_d taps[d] e^{+2πi dk/n}
    // — the unnormalized inverse transform of the padded tap vector.
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for (d, t) in taps.iter().enumerate() {
        if d < n {
            spec[d] = *t;
        }
    }
    fft_inverse(&mut spec);
    let spec_max = spec.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(bad) = spec.iter().find(|z| z.norm() < 1e-14 * spec_max) {
        return Err(Error::SingularSpectrum { magnitude: bad.norm() });
    }
    let mut x = rhs.clone();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..x.ncols() {
        for (i, z) in x.column(c).iter().enumerate() {
            buf[i] = *z;
        }
        fft_forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(&spec) {
            *b /= s;
        }
        fft_inverse(&mut buf);
        let scale = 1.0 / n as f64;
        for (i, b) in buf.iter().enumerate() {
            x[(i, c)] = b * scale;
        }
    }
    Ok(x)
}

/// Dense materialization of the banded upper-triangular Toeplitz matrix; used by
/// oracles and small-scale checks, never in hot paths.
pub fn toeplitz_dense(taps: &[Complex64], n: usize) -> CMat {
    CMat::from_fn(n, n, |p, q| {
        if q >= p && q - p < taps.len() {
            taps[q - p]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taps_well_conditioned() -> Vec<Complex64> {
        vec![
            Complex64::new(1.9, 0.4),
            Complex64::new(0.3, -0.2),
            Complex64::new(-0.1, 0.05),
        ]
    }

    fn rand_mat(r: usize, c: usize, seed: u64) -> CMat {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(r, c, |_, _| Complex64::new(next(), next()))
    }

    #[test]
    fn exact_solve_matches_dense_lu() {
        let taps = taps_well_conditioned();
        let b = rand_mat(24, 3, 1);
        let x = toeplitz_apply_inverse(&taps, &b, ToeplitzMode::Exact).unwrap();
        let t = toeplitz_dense(&taps, 24);
        let x_lu = t.clone().lu().solve(&b).unwrap();
        assert!((&x - &x_lu).norm() / x_lu.norm() < 1e-12);
        // And the residual itself is tiny.
        assert!((t * &x - &b).norm() / b.norm() < 1e-12);
    }

    #[test]
    fn two_tap_exact_solve_matches_dense_lu() {
        let taps = vec![Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)];
        let n = 4;
        let mut e1 = CMat::zeros(n, 1);
        e1[(0, 0)] = Complex64::new(1.0, 0.0);
        let x = toeplitz_apply_inverse(&taps, &e1, ToeplitzMode::Exact).unwrap();
        let t = toeplitz_dense(&taps, n);
        let x_lu = t.lu().solve(&e1).unwrap();
        assert!((&x - &x_lu).norm() < 1e-12);
    }

    #[test]
    fn circulant_mode_solves_the_wrapped_matrix_exactly() {
        let taps = taps_well_conditioned();
        let n = 16;
        let b = rand_mat(n, 2, 2);
        let x = toeplitz_apply_inverse(&taps, &b, ToeplitzMode::Circulant).unwrap();
        // Build the circulant densely: C[p][q] = taps[(q - p) mod n].
        let c = CMat::from_fn(n, n, |p, q| {
            let d = (q + n - p) % n;
            if d < taps.len() {
                taps[d]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert!((c * &x - &b).norm() / b.norm() < 1e-12);
    }

    #[test]
    fn long_band_exact_residual_is_tiny_and_circulant_close() {
        // 17 taps at N = 64 — the shape the temporal-AN route feeds in.
        let mut taps = vec![Complex64::new(2.5, 0.0)];
        let mut state = 99u64;
        for _ in 0..16 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let re = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let im = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            taps.push(Complex64::new(re, im));
        }
        let n = 64;
        let b = rand_mat(n, 2, 5);
        let t = toeplitz_dense(&taps, n);
        let x = toeplitz_apply_inverse(&taps, &b, ToeplitzMode::Exact).unwrap();
        assert!((&t * &x - &b).norm() / b.norm() < 1e-10);
        // The circulant answer differs from the Toeplitz one by a boundary term
        // only — it should still be in the right ballpark for a dominant diagonal.
        let xc = toeplitz_apply_inverse(&taps, &b, ToeplitzMode::Circulant).unwrap();
        let rel = (&t * &xc - &b).norm() / b.norm();
        assert!(rel < 0.5, "circulant approximation unexpectedly bad: {rel}");
    }

    #[test]
    fn zero_leading_tap_is_singular() {
        let taps = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let b = rand_mat(8, 1, 3);
        assert!(matches!(
            toeplitz_apply_inverse(&taps, &b, ToeplitzMode::Exact),
            Err(Error::SingularTap { .. })
        ));
    }

    #[test]
    fn identity_taps_pass_rhs_through() {
        let taps = vec![Complex64::new(1.0, 0.0)];
        let b = rand_mat(10, 2, 4);
        for mode in [ToeplitzMode::Exact, ToeplitzMode::Circulant] {
            let x = toeplitz_apply_inverse(&taps, &b, mode).unwrap();
            assert!((&x - &b).norm() < 1e-12);
        }
    }
}
