use dstsp_core::rng;
use dstsp_core::stats::{
    azuma_tail, balls_bins_experiment, bernstein_restated_tail, diff_bound, exact_binom_zeta_diff, expected_y,
    martingale_diffs, simulate_y, sum_p_zeta, tail_bound, wvhp_fit, BinExperiment, Regime, StatsError,
};
use rand::Rng;

// Binomial pmf by the multiplicative recurrence pmf(k+1) = pmf(k) (n-k)/(k+1) p/q.
fn pmf(n: u64, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let mut v = vec![q.powi(n as i32)];
    for k in 0..n {
        let next = v[k as usize] * (n - k) as f64 / (k + 1) as f64 * p / q;
        v.push(next);
    }
    v
}

fn powz(k: f64, z: f64) -> f64 {
    if k == 0.0 { 0.0 } else { k.powf(z) }
}

#[test]
fn zeta_differences_stay_below_their_bound() {
    for z in [0.5, 2.0 / 3.0] {
        for n in 1..=200u64 {
            for i in 1..=9 {
                let p = i as f64 / 10.0;
                let w = pmf(n, p);
                let oracle: f64 = w.iter().enumerate().map(|(k, q)| q * (powz(k as f64 + 1.0, z) - powz(k as f64, z))).sum();
                let exact = exact_binom_zeta_diff(n, p, z);
                assert!((oracle - exact).abs() < 1e-10, "n={n} p={p}");
                assert!(exact <= diff_bound(n, p, z).unwrap() + 1e-12, "n={n} p={p} z={z}");
            }
        }
    }
}

#[test]
fn expectation_of_y_below_jensen() {
    let mut r = rng::from_seed(61);
    for _ in 0..50 {
        let m = r.random_range(2..12);
        let raw: Vec<f64> = (0..m).map(|_| r.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let n = r.random_range(1..150u64);
        let z = r.random_range(0.3..0.9);
        let oracle: f64 = p.iter().map(|&q| pmf(n, q).iter().enumerate().map(|(k, w)| w * powz(k as f64, z)).sum::<f64>()).sum();
        let ey = expected_y(&p, n, z);
        assert!((ey - oracle).abs() < 1e-9 * oracle.max(1.0));
        assert!(ey <= (n as f64).powf(z) * sum_p_zeta(&p, z) + 1e-9);
        // concavity of t -> t^z on the simplex
        assert!(sum_p_zeta(&p, z) <= (m as f64).powf(1.0 - z) + 1e-12 && sum_p_zeta(&p, z) >= 1.0 - 1e-12);
    }
}

#[test]
fn azuma_bound_holds_for_simulated_deviations() {
    let trials = 20_000;
    for (p, n, z) in [(vec![0.25; 4], 400u64, 0.5), (vec![0.1, 0.2, 0.3, 0.4], 300, 2.0 / 3.0)] {
        let ey = expected_y(&p, n, z);
        let p1 = p.iter().copied().fold(f64::INFINITY, f64::min);
        let c = martingale_diffs(p1, n, z);
        let ys = simulate_y(&p, n, z, trials, 7).unwrap();
        let mean = ys.iter().sum::<f64>() / trials as f64;
        assert!((mean - ey).abs() < 0.05 * ey);
        for t in [0.5, 1.0, 2.0, 4.0] {
            let freq = ys.iter().filter(|&&y| y - ey >= t).count() as f64 / trials as f64;
            let b = azuma_tail(&c, t);
            assert!(freq <= b + 3.0 * (b * (1.0 - b) / trials as f64).sqrt() + 1e-12, "t={t} {freq} {b}");
        }
    }
}

#[test]
fn bernstein_lower_tail_for_uniform_sums() {
    let mut r = rng::from_seed(62);
    let trials = 20_000;
    let (ey, var) = (0.5, 1.0 / 12.0);
    for n in [5usize, 20, 60] {
        for delta in [0.1, 0.3, 0.5] {
            let hits = (0..trials)
                .filter(|_| (0..n).map(|_| r.random::<f64>()).sum::<f64>() <= (1.0 - delta) * n as f64 * ey)
                .count();
            let b = bernstein_restated_tail(n as f64, ey, var, delta);
            let freq = hits as f64 / trials as f64;
            assert!(freq <= b + 3.0 * (b * (1.0 - b) / trials as f64).sqrt(), "n={n} delta={delta}");
        }
    }
}

#[test]
fn balls_bins_reports() {
    for (m, z) in [(4usize, 0.5), (16, 0.5), (4, 2.0 / 3.0)] {
        let exp = BinExperiment { p: vec![1.0 / m as f64; m], n: 2000, zeta_exp: z, trials: 2000, seed: 3 };
        let rep = balls_bins_experiment(&exp).unwrap();
        assert!(rep.within_bound() && rep.mean_within_bound(), "{rep:?}");
        assert_eq!(rep.empirical_prob, 0.0);
        assert_eq!(rep.empirical_upper, 3.0 / 2000.0);
    }
    let bad = BinExperiment { p: vec![1.0], n: 10, zeta_exp: 0.5, trials: 10, seed: 0 };
    assert!(balls_bins_experiment(&bad).is_err());
}

#[test]
fn regimes_switch_at_the_sample_size_threshold() {
    let p = vec![0.5, 0.5];
    let threshold = 280.0 / 3.0 * 2f64.ln() / 0.5;
    assert_eq!(tail_bound(&p, threshold.floor() as u64, 0.5).0, Regime::AzumaSimple);
    assert_eq!(tail_bound(&p, threshold.ceil() as u64, 0.5).0, Regime::ReduxHalf);
    let big = 10_000;
    assert_eq!(tail_bound(&p, big, 0.6).0, Regime::ReduxGtHalf);
    assert_eq!(tail_bound(&p, big, 0.4).0, Regime::ReduxLtHalf);
    assert_eq!(tail_bound(&p, big, 2.0 / 3.0).0, Regime::AzumaSimple);
    let (_, b) = tail_bound(&p, big, 0.8);
    let expect = (-0.5 * (big as f64).powf(0.6) * sum_p_zeta(&p, 0.8).powi(2)).exp();
    assert!((b - expect).abs() <= 1e-15);
}

#[test]
fn wvhp_fit_recovers_stretched_exponentials() {
    let pts: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0, 1600.0].iter().map(|&n: &f64| (n, (-0.02 * n.powf(0.5)).exp())).collect();
    let fit = wvhp_fit(&pts).unwrap();
    assert!((fit.c2 - 0.02).abs() < 1e-9 && (fit.c3 - 0.5).abs() < 1e-9 && fit.wvhp);
    assert!(fit.r2 > 0.999999);
    let flat: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0].iter().map(|&n| (n, 0.3)).collect();
    assert!(!wvhp_fit(&flat).unwrap().wvhp);
    assert!(matches!(wvhp_fit(&[(1.0, 0.0), (2.0, 0.0)]), Err(StatsError::AllZeroFailures)));
}
