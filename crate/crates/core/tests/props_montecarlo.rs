//! Statistical behavior of the Monte-Carlo driver: error bars shrink at the
//! root-n rate, and the headline wide-array scaling claim is measured as
//! stated.

use an_sim_core::montecarlo::run_point;
use an_sim_core::ofdm::SystemConfig;
use an_sim_core::rates::EveStrategy;

fn cfg(n_a: usize) -> SystemConfig {
    SystemConfig {
        n: 64,
        n_cp: 16,
        nu: 16,
        n_a,
        n_b: 2,
        n_e: 2,
        n_s: 2,
        gamma_bob: 100.0,
        gamma_eve: 100.0,
        var_ab: 1.0,
        var_ae: 1.0,
        theta: 0.5,
        alpha: 0.5,
        exact_cp_power: false,
    }
    .validate()
    .unwrap()
}

#[test]
fn standard_error_shrinks_at_the_root_n_rate() {
    let c = SystemConfig { n: 8, n_cp: 2, nu: 2, n_a: 4, n_e: 3, ..cfg(4) }.validate().unwrap();
    let narrow = run_point(&c, 100, 17, EveStrategy::Joint).unwrap();
    let wide = run_point(&c, 400, 17, EveStrategy::Joint).unwrap();
    let ratio = narrow.stderr.r_sec_clipped / wide.stderr.r_sec_clipped;
    // Quadrupling the trials should halve the error bar, within 20%.
    assert!(
        (1.6..=2.4).contains(&ratio),
        "stderr ratio {ratio:.3} (expected 2.0 ± 20%)"
    );
}

#[test]
fn doubling_the_array_doubles_the_average_secrecy_rate() {
    let narrow = run_point(&cfg(10), 200, 404, EveStrategy::Joint).unwrap();
    let wide = run_point(&cfg(20), 200, 404, EveStrategy::Joint).unwrap();
    let (lo, hi) = (
        narrow.mean.per_shz(&cfg(10)).r_sec_clipped,
        wide.mean.per_shz(&cfg(20)).r_sec_clipped,
    );
    let ratio = hi / lo;
    assert!(
        (1.6..=2.4).contains(&ratio),
        "secrecy ratio {ratio:.3} (rates {lo:.3} → {hi:.3} bits/s/Hz, difference {:.3})",
        hi - lo
    );
}
