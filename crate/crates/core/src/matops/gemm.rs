//! Complex GEMM front end. All dense products in hot paths funnel through here so
//! they hit matrixmultiply's SIMD zgemm kernel instead of a naive triple loop.

use crate::{CMat, Complex64};
use matrixmultiply::{zgemm, CGemmOption};

/// How an operand enters a product: as stored, or conjugate-transposed.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Op {
    /// Use the matrix as stored.
    N,
    /// Use the conjugate transpose.
    H,
}

fn op_dims(a: &CMat, op: Op) -> (usize, usize) {
    match op {
        Op::N => (a.nrows(), a.ncols()),
        Op::H => (a.ncols(), a.nrows()),
    }
}

/// `c = alpha * op(a) * op(b) + beta * c`.
///
/// Panics on dimension mismatch. Transposition is folded into strides; the
/// conjugation half of `Op::H` is done by materializing `conj(a)` first, because
/// matrixmultiply 0.3 accepts but ignores its conjugation flags. The O(mk) copy
/// is noise next to the O(mkn) product.
pub fn gemm(alpha: Complex64, a: &CMat, ta: Op, b: &CMat, tb: Op, beta: Complex64, c: &mut CMat) {
    let (m, ka) = op_dims(a, ta);
    let (kb, n) = op_dims(b, tb);
    assert_eq!(ka, kb, "gemm: inner dimensions disagree ({ka} vs {kb})");
    assert_eq!(
        (c.nrows(), c.ncols()),
        (m, n),
        "gemm: output is {}x{}, expected {m}x{n}",
        c.nrows(),
        c.ncols()
    );
    if m == 0 || n == 0 {
        return;
    }
    if ka == 0 {
        // Empty inner dimension: the product contributes nothing.
        c.iter_mut().for_each(|z| *z *= beta);
        return;
    }

    let a_conj;
    let a_eff = match ta {
        Op::N => a,
        Op::H => {
            a_conj = a.conjugate();
            &a_conj
        }
    };
    let b_conj;
    let b_eff = match tb {
        Op::N => b,
        Op::H => {
            b_conj = b.conjugate();
            &b_conj
        }
    };

    // Column-major: element (i, j) lives at i + j*nrows; the transpose of a
    // conjugated operand is expressed by swapping its strides.
    let (rsa, csa) = match ta {
        Op::N => (1isize, a.nrows() as isize),
        Op::H => (a.nrows() as isize, 1isize),
    };
    let (rsb, csb) = match tb {
        Op::N => (1isize, b.nrows() as isize),
        Op::H => (b.nrows() as isize, 1isize),
    };
    let rsc = 1isize;
    let csc = c.nrows() as isize;

    // Complex64 is repr(C) { re: f64, im: f64 }, layout-identical to [f64; 2].
    unsafe {
        zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            ka,
            n,
            [alpha.re, alpha.im],
            a_eff.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            b_eff.as_ptr() as *const [f64; 2],
            rsb,
            csb,
            [beta.re, beta.im],
            c.as_mut_ptr() as *mut [f64; 2],
            rsc,
            csc,
        );
    }
}

/// Allocating convenience wrapper: returns `op(a) * op(b)`.
pub fn mul(a: &CMat, ta: Op, b: &CMat, tb: Op) -> CMat {
    let (m, _) = op_dims(a, ta);
    let (_, n) = op_dims(b, tb);
    let mut c = CMat::zeros(m, n);
    gemm(Complex64::new(1.0, 0.0), a, ta, b, tb, Complex64::new(0.0, 0.0), &mut c);
    c
}
