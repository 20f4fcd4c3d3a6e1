//! Thread-local FFT plan cache. rustfft plans are cheap to reuse and expensive to
//! rebuild inside per-trial loops.

use crate::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn with_plan(len: usize, inverse: bool, buf: &mut [Complex64]) {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        let plan = cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone();
        plan.process(buf);
    });
}

/// Unnormalized forward DFT in place: `X_k = sum_n x_n e^{-2*pi*i*k*n/N}`.
pub fn fft_forward(buf: &mut [Complex64]) {
    with_plan(buf.len(), false, buf);
}

/// Unnormalized inverse DFT in place (no 1/N factor).
pub fn fft_inverse(buf: &mut [Complex64]) {
    with_plan(buf.len(), true, buf);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_scales_by_length() {
        let n = 12;
        let orig: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(i as f64 * 0.3 - 1.0, (i as f64).sin())).collect();
        let mut buf = orig.clone();
        fft_forward(&mut buf);
        fft_inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_sign_convention_is_negative_exponent() {
        // Input e^{+2*pi*i*n/N} concentrates on bin k=1 under X_k = sum x_n e^{-2*pi*i*k*n/N}.
        let n = 8;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / n as f64))
            .collect();
        fft_forward(&mut buf);
        assert!((buf[1] - Complex64::new(n as f64, 0.0)).norm() < 1e-12);
        assert!(buf[0].norm() < 1e-12);
    }
}
