//! Householder QR with explicit access to the full unitary factor.
//!
//! The main consumers are orthonormal *completions*: the spatial-AN basis is the
//! complement of the data precoder's columns, and the temporal-AN null-space basis
//! is the complement of a row space. Both need `Q[:, k..]` of a tall factorization,
//! which nalgebra's QR does not expose without materializing all of `Q`.

use crate::{CMat, Complex64};

pub struct Householder {
    /// Reflector vectors; column `j` holds `v_j` in rows `j..m` with `v_j[j] == 1`.
    v: CMat,
    tau: Vec<Complex64>,
}

/// Factor `m` (nrows >= ncols) into Householder reflectors.
pub fn householder_factor(m: &CMat) -> Householder {
    let (rows, cols) = (m.nrows(), m.ncols());
    assert!(rows >= cols, "householder_factor: matrix must be tall or square");
    let mut w = m.clone();
    let mut v = CMat::zeros(rows, cols);
    let mut tau = vec![Complex64::new(0.0, 0.0); cols];

    for j in 0..cols {
        // Build the reflector that annihilates rows j+1.. of column j.
        let alpha = w[(j, j)];
        let mut tail_sq = 0.0;
        for r in j + 1..rows {
            tail_sq += w[(r, j)].norm_sqr();
        }
        let xnorm_sq = alpha.norm_sqr() + tail_sq;
        if xnorm_sq == 0.0 || (tail_sq == 0.0 && alpha.im == 0.0) {
            // Column already reduced; identity reflector.
            v[(j, j)] = Complex64::new(1.0, 0.0);
            continue;
        }
        let xnorm = xnorm_sq.sqrt();
        let phase = if alpha.norm() > 0.0 { alpha / alpha.norm() } else { Complex64::new(1.0, 0.0) };
        let beta = -phase * xnorm;
        let t = (beta - alpha) / beta;
        let denom = alpha - beta;
        v[(j, j)] = Complex64::new(1.0, 0.0);
        for r in j + 1..rows {
            v[(r, j)] = w[(r, j)] / denom;
        }
        tau[j] = t;
        // Apply H_j = I - tau v v^H to the remaining columns of the work matrix.
        for c in j..cols {
            let mut s = Complex64::new(0.0, 0.0);
            for r in j..rows {
                s += v[(r, j)].conj() * w[(r, c)];
            }
            let f = t * s;
            for r in j..rows {
                let sub = f * v[(r, j)];
                w[(r, c)] -= sub;
            }
        }
    }
    Householder { v, tau }
}

impl Householder {
    fn rows(&self) -> usize {
        self.v.nrows()
    }
    fn count(&self) -> usize {
        self.tau.len()
    }

    /// Apply one reflector (or its adjoint) to all columns of `b`, rows `j..`.
    fn reflect(&self, j: usize, adjoint: bool, b: &mut CMat) {
        let t = if adjoint { self.tau[j].conj() } else { self.tau[j] };
        if t == Complex64::new(0.0, 0.0) {
            return;
        }
        let rows = self.rows();
        for c in 0..b.ncols() {
            let mut s = Complex64::new(0.0, 0.0);
            for r in j..rows {
                s += self.v[(r, j)].conj() * b[(r, c)];
            }
            let f = t * s;
            for r in j..rows {
                let sub = f * self.v[(r, j)];
                b[(r, c)] -= sub;
            }
        }
    }

    /// `b := Q b` where `Q` is the full unitary factor.
    pub fn apply_q(&self, b: &mut CMat) {
        assert_eq!(b.nrows(), self.rows());
        for j in (0..self.count()).rev() {
            self.reflect(j, true, b);
        }
    }

    /// `b := Q^H b`.
    pub fn apply_qh(&self, b: &mut CMat) {
        assert_eq!(b.nrows(), self.rows());
        for j in 0..self.count() {
            self.reflect(j, false, b);
        }
    }

    /// First `count` columns of `Q`: an orthonormal basis of the factored matrix's
    /// column space (when it has full column rank).
    pub fn q_thin(&self) -> CMat {
        let mut b = CMat::identity(self.rows(), self.count());
        self.apply_q(&mut b);
        b
    }

    /// Columns `count..rows` of `Q`: an orthonormal basis of the orthogonal
    /// complement of the factored matrix's column space.
    pub fn complement(&self) -> CMat {
        let (rows, k) = (self.rows(), self.count());
        let mut b = CMat::zeros(rows, rows - k);
        for j in 0..rows - k {
            b[(k + j, j)] = Complex64::new(1.0, 0.0);
        }
        self.apply_q(&mut b);
        b
    }
}

/// Orthonormal basis of the complement of `basis`'s column space.
/// `basis` must have orthonormal (or at least independent) columns.
pub fn orthonormal_complement(basis: &CMat) -> CMat {
    if basis.ncols() == 0 {
        return CMat::identity(basis.nrows(), basis.nrows());
    }
    householder_factor(basis).complement()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::{mul, Op};

    fn rand_mat(r: usize, c: usize, seed: u64) -> CMat {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(r, c, |_, _| Complex64::new(next(), next()))
    }

    #[test]
    fn thin_q_spans_the_input_and_is_orthonormal() {
        let m = rand_mat(23, 9, 42);
        let f = householder_factor(&m);
        let q = f.q_thin();
        let gram = mul(&q, Op::H, &q, Op::N);
        assert!((gram - CMat::identity(9, 9)).norm() < 1e-13);
        // Projector onto range(q) must fix every column of m.
        let proj = mul(&q, Op::N, &mul(&q, Op::H, &m, Op::N), Op::N);
        assert!((proj - &m).norm() / m.norm() < 1e-13);
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal_to_input() {
        let m = rand_mat(17, 5, 7);
        let f = householder_factor(&m);
        let z = f.complement();
        assert_eq!(z.shape(), (17, 12));
        assert!((mul(&z, Op::H, &z, Op::N) - CMat::identity(12, 12)).norm() < 1e-13);
        assert!(mul(&m, Op::H, &z, Op::N).norm() < 1e-13 * m.norm());
    }

    #[test]
    fn complement_of_empty_basis_is_identity() {
        let z = orthonormal_complement(&CMat::zeros(6, 0));
        assert!((z - CMat::identity(6, 6)).norm() == 0.0);
    }

    #[test]
    fn q_is_unitary_under_both_applications() {
        let m = rand_mat(12, 12, 3);
        let f = householder_factor(&m);
        let mut b = rand_mat(12, 4, 4);
        let b0 = b.clone();
        f.apply_q(&mut b);
        f.apply_qh(&mut b);
        assert!((b - b0).norm() < 1e-13);
    }
}
