use dstsp_core::bounds::{beta_constant, cost_field, sample_density};
use dstsp_core::cbo::{brute_cbo_small, cbo_bound, cost_length, greedy_orienteering, leg_costs, CboError};
use dstsp_core::dynamics::{DynamicsModel, Point};
use dstsp_core::{rng, Field};
use rand::Rng;

// Most targets reachable by any ordering, trying every permutation prefix.
fn best_prefix(legs: &[Vec<f64>], lambda: f64) -> usize {
    fn go(legs: &[Vec<f64>], used: &mut [bool], cur: usize, left: f64) -> usize {
        let mut best = 0;
        for j in 0..legs.len() {
            if !used[j] && legs[cur][j] <= left {
                used[j] = true;
                best = best.max(1 + go(legs, used, j, left - legs[cur][j]));
                used[j] = false;
            }
        }
        best
    }
    (0..legs.len())
        .map(|s| {
            let mut used = vec![false; legs.len()];
            used[s] = true;
            1 + go(legs, &mut used, s, lambda)
        })
        .max()
        .unwrap_or(0)
}

#[test]
fn cost_across_an_interface_averages_the_sides() {
    let m = DynamicsModel::euclidean2();
    for (c1, c2) in [(1.0, 3.0), (0.2, 5.0)] {
        let cost = Field::unit_square(32, |c| if c[0] < 0.5 { c1 } else { c2 });
        for y in [0.1, 0.5, 0.83] {
            let t = m.steer(&[0.25, y, 0.0], &[0.75, y, 0.0]);
            let got = cost_length(&m, &t, &cost).unwrap();
            assert!((got - (c1 + c2) * 0.5 / 2.0).abs() < 1e-9, "{got}");
        }
    }
}

#[test]
fn flat_field_legs_are_scaled_distances() {
    let mut r = rng::from_seed(51);
    let m = DynamicsModel::euclidean2();
    let cost = Field::unit_square(16, |_| 1.7);
    let pts: Vec<Point> = (0..6).map(|_| [r.random(), r.random(), 0.0]).collect();
    let legs = leg_costs(&m, &pts, &cost).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
            assert!((legs[i][j] - 1.7 * d).abs() < 1e-9);
        }
    }
}

#[test]
fn brute_matches_permutations_and_beats_greedy() {
    let mut r = rng::from_seed(52);
    let m = DynamicsModel::euclidean2();
    let f = Field::unit_square(32, |c| if c[0] < 0.5 { 1.6 } else { 0.4 });
    let g = Field::unit_square(32, |c| if c[0] < 0.5 { 1.0 } else { 4.0 });
    let cost = cost_field(&f, &g, 0.05, 2.0).unwrap();
    for _ in 0..60 {
        let n = r.random_range(1..=7);
        let pts = sample_density(&f, n, &mut r).unwrap();
        let lambda = r.random_range(0.0..0.8);
        let brute = brute_cbo_small(&m, &cost, &pts, lambda).unwrap();
        assert_eq!(brute, best_prefix(&leg_costs(&m, &pts, &cost).unwrap(), lambda));
        let greedy = greedy_orienteering(&m, &cost, &pts, lambda, &mut r).unwrap();
        assert!(greedy >= 1 && greedy <= brute);
    }
}

#[test]
fn counts_respect_the_budget_bound() {
    let mut r = rng::from_seed(53);
    let m = DynamicsModel::euclidean2();
    let f = Field::unit_square(32, |_| 1.0);
    let g = Field::unit_square(32, |_| std::f64::consts::PI);
    let cost = cost_field(&f, &g, 0.05, 2.0).unwrap();
    let (_, beta) = beta_constant(7, 2.0, true);
    for _ in 0..30 {
        let pts = sample_density(&f, 8, &mut r).unwrap();
        let lambda = 0.2;
        let bound = cbo_bound(beta, lambda, 8, 2.0, 0.5);
        let brute = brute_cbo_small(&m, &cost, &pts, lambda).unwrap();
        assert!((brute as f64) <= bound);
    }
}

#[test]
fn limits_and_errors() {
    let m = DynamicsModel::euclidean2();
    let cost = Field::unit_square(8, |_| 1.0);
    let pts: Vec<Point> = (0..9).map(|i| [0.1 * i as f64 + 0.05, 0.5, 0.0]).collect();
    assert!(matches!(brute_cbo_small(&m, &cost, &pts, 1.0), Err(CboError::TooLarge(9))));
    assert!(matches!(brute_cbo_small(&m, &cost, &pts[..2], -1.0), Err(CboError::NegativeBudget(_))));
    assert_eq!(brute_cbo_small(&m, &cost, &[], 1.0).unwrap(), 0);
    // all nine on a line cost 0.8 end to end
    let mut r = rng::from_seed(54);
    assert_eq!(greedy_orienteering(&m, &cost, &pts, 2.0, &mut r).unwrap(), 9);
}
