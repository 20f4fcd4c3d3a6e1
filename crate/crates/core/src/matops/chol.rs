//! Blocked Hermitian Cholesky and triangular solves.
//!
//! nalgebra's Cholesky is unblocked; at the joint-processing dimensions used in the
//! Monte Carlo sweeps (up to N_E*N = 512) the trailing update dominates, so it is
//! pushed through the GEMM kernel. Only the lower triangle is ever referenced.

use super::gemm::{gemm, Op};
use crate::{CMat, Complex64, Error, Result};

const BLOCK: usize = 48;

/// In-place lower Cholesky: on success the lower triangle of `a` holds `L` with
/// `a = L L^H`. The strict upper triangle is left untouched (callers must ignore it).
pub fn cholesky_lower_in_place(a: &mut CMat) -> Result<()> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky: matrix must be square");
    let mut j = 0;
    while j < n {
        let jb = BLOCK.min(n - j);
        factor_diag_block(a, j, jb)?;
        if j + jb < n {
            // Panel solve: A[j+jb.., j..j+jb] := A[j+jb.., j..j+jb] * L11^{-H}
            panel_trsm(a, j, jb);
            // Trailing update, one block column at a time so only the lower
            // trapezoid is touched: A[t.., t..t+tb] -= L[t.., j..j+jb] L[t..t+tb, j..j+jb]^H
            let mut t = j + jb;
            while t < n {
                let tb = BLOCK.min(n - t);
                let panel_rows = a.view((t, j), (n - t, jb)).clone_owned();
                let panel_diag = a.view((t, j), (tb, jb)).clone_owned();
                let mut trailing = a.view((t, t), (n - t, tb)).clone_owned();
                gemm(
                    Complex64::new(-1.0, 0.0),
                    &panel_rows,
                    Op::N,
                    &panel_diag,
                    Op::H,
                    Complex64::new(1.0, 0.0),
                    &mut trailing,
                );
                a.view_mut((t, t), (n - t, tb)).copy_from(&trailing);
                t += tb;
            }
        }
        j += jb;
    }
    Ok(())
}

/// Unblocked Cholesky of the `jb x jb` diagonal block starting at `(j, j)`.
fn factor_diag_block(a: &mut CMat, j: usize, jb: usize) -> Result<()> {
    for c in j..j + jb {
        let mut d = a[(c, c)].re;
        for k in j..c {
            d -= a[(c, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPsd {
                detail: format!("Cholesky pivot {d:.3e} at index {c} is not positive"),
            });
        }
        let l = d.sqrt();
        a[(c, c)] = Complex64::new(l, 0.0);
        for r in c + 1..j + jb {
            let mut s = a[(r, c)];
            for k in j..c {
                s -= a[(r, k)] * a[(c, k)].conj();
            }
            a[(r, c)] = s / l;
        }
    }
    Ok(())
}

/// `A[j+jb.., j..j+jb] := A[j+jb.., j..j+jb] * L11^{-H}` where `L11` is the freshly
/// factored diagonal block. Column-by-column forward substitution across the panel.
fn panel_trsm(a: &mut CMat, j: usize, jb: usize) {
    let n = a.nrows();
    for c in j..j + jb {
        let diag = a[(c, c)].re;
        // Subtract contributions of already-solved columns, then scale.
        for k in j..c {
            let f = a[(c, k)].conj();
            if f != Complex64::new(0.0, 0.0) {
                for r in j + jb..n {
                    let sub = a[(r, k)] * f;
                    a[(r, c)] -= sub;
                }
            }
        }
        let inv = 1.0 / diag;
        for r in j + jb..n {
            a[(r, c)] *= inv;
        }
    }
}

/// log2 det(A) for Hermitian positive definite `A`, via Cholesky.
pub fn logdet2_hpd(a: &CMat) -> Result<f64> {
    let mut l = a.clone();
    cholesky_lower_in_place(&mut l)?;
    let mut s = 0.0;
    for i in 0..l.nrows() {
        s += l[(i, i)].re.log2();
    }
    Ok(2.0 * s)
}

/// Solve `L X = B` in place (`L` lower triangular, unit or not — uses stored diagonal).
pub fn solve_lower_in_place(l: &CMat, b: &mut CMat) {
    let n = l.nrows();
    assert_eq!(b.nrows(), n);
    for j in 0..b.ncols() {
        for i in 0..n {
            let mut s = b[(i, j)];
            for k in 0..i {
                s -= l[(i, k)] * b[(k, j)];
            }
            b[(i, j)] = s / l[(i, i)];
        }
    }
}

/// Solve `X L^H = B` in place, i.e. `X := B L^{-H}`, with `L` lower triangular.
/// This is the "whiten from the right" step used when forming `M L^{-H}` products.
pub fn solve_adjoint_right_in_place(l: &CMat, b: &mut CMat) {
    let n = l.nrows();
    assert_eq!(b.ncols(), n, "solve_adjoint_right: dimension mismatch");
    let m = b.nrows();
    // X L^H = B  =>  column j of X depends on columns 0..j:
    // X[:,j] = (B[:,j] - sum_{k<j} X[:,k] * conj(L[j,k])) / conj(L[j,j])
    for j in 0..n {
        for k in 0..j {
            let f = l[(j, k)].conj();
            if f != Complex64::new(0.0, 0.0) {
                for r in 0..m {
                    let sub = b[(r, k)] * f;
                    b[(r, j)] -= sub;
                }
            }
        }
        let inv = 1.0 / l[(j, j)].re;
        for r in 0..m {
            b[(r, j)] *= inv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::mul;

    fn hpd(n: usize, seed: u64) -> CMat {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let m = CMat::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        let mut g = mul(&m, Op::N, &m, Op::H);
        for i in 0..n {
            g[(i, i)] += Complex64::new(n as f64 * 0.05 + 1.0, 0.0);
        }
        g
    }

    #[test]
    fn factorization_reconstructs_matrix() {
        // Sizes straddle the block size to cover both the unblocked and blocked paths.
        for &n in &[1usize, 5, 47, 48, 49, 130] {
            let a = hpd(n, n as u64);
            let mut l = a.clone();
            cholesky_lower_in_place(&mut l).unwrap();
            for i in 0..n {
                for j in i + 1..n {
                    l[(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
            let rec = mul(&l, Op::N, &l, Op::H);
            let rel = (&rec - &a).norm() / a.norm();
            assert!(rel < 1e-13, "n={n}: relative reconstruction error {rel:.3e}");
        }
    }

    #[test]
    fn logdet_matches_nalgebra_cholesky() {
        let a = hpd(60, 7);
        let got = logdet2_hpd(&a).unwrap();
        let chol = nalgebra::Cholesky::new(a).unwrap();
        let want: f64 = 2.0 * chol.l().diagonal().iter().map(|z| z.re.log2()).sum::<f64>();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = hpd(10, 9);
        a[(3, 3)] = Complex64::new(-5.0, 0.0);
        let mut l = a;
        assert!(matches!(cholesky_lower_in_place(&mut l), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn triangular_solves_invert_the_factor() {
        let n = 37;
        let a = hpd(n, 11);
        let mut l = a.clone();
        cholesky_lower_in_place(&mut l).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                l[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        // L X = B
        let b = hpd(n, 13);
        let mut x = b.clone();
        solve_lower_in_place(&l, &mut x);
        assert!((mul(&l, Op::N, &x, Op::N) - &b).norm() / b.norm() < 1e-12);
        // X L^H = B
        let mut y = b.clone();
        solve_adjoint_right_in_place(&l, &mut y);
        assert!((mul(&y, Op::N, &l, Op::H) - &b).norm() / b.norm() < 1e-12);
    }
}
