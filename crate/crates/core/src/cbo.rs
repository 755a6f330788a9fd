//! Cost-balanced orienteering at small scale: cost-length of trajectories in
//! a cost field, a greedy visit heuristic, an exhaustive oracle and the upper
//! bound on the number of targets a budget can buy.

use rand::Rng;
use thiserror::Error;

use crate::dynamics::{Configuration, DynamicsModel, Point, Trajectory};
use crate::field::GridField;

pub const BRUTE_MAX_TARGETS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CboError {
    #[error("trajectory leaves the cost grid near {0:?}")]
    OutOfGrid(Point),
    #[error("{0} targets exceed the exhaustive limit of {BRUTE_MAX_TARGETS}")]
    TooLarge(usize),
    #[error("negative budget {0}")]
    NegativeBudget(f64),
}

#[derive(Debug, Clone)]
pub struct CostTrajectory {
    pub trajectory: Trajectory,
    pub cost_length: f64,
}

/// Composite midpoint rule for `int cost(x(t)) dt` along `traj`. Each segment
/// is cut into an even number of equal substeps no longer than
/// `cell_size / (4 speed_limit)`.
pub fn cost_length(model: &DynamicsModel, traj: &Trajectory, cost: &GridField<f64>) -> Result<f64, CboError> {
    let max_step = cost.cell_size() / (4.0 * model.speed_limit());
    let dim = cost.ndim();
    let mut q = traj.start;
    let mut total = 0.0;
    for seg in &traj.segments {
        if seg.duration > 0.0 {
            let mut k = (seg.duration / max_step).ceil().max(1.0) as usize;
            k += k % 2;
            let dt = seg.duration / k as f64;
            for i in 0..k {
                let x = model.project(&model.advance(&q, &seg.control, (i as f64 + 0.5) * dt));
                let c = cost.value_at(&x[..dim]).ok_or(CboError::OutOfGrid(x))?;
                total += c * dt;
            }
        }
        q = model.advance(&q, &seg.control, seg.duration);
    }
    Ok(total)
}

pub fn cost_trajectory(model: &DynamicsModel, traj: Trajectory, cost: &GridField<f64>) -> Result<CostTrajectory, CboError> {
    let cost_length = cost_length(model, &traj, cost)?;
    Ok(CostTrajectory { trajectory: traj, cost_length })
}

fn configs(model: &DynamicsModel, targets: &[Point]) -> Vec<Configuration> {
    targets.iter().map(|p| model.lift(p, 0.0)).collect()
}

/// Cost-length of the steer from `a` to `b`.
pub fn leg_cost(model: &DynamicsModel, a: &Configuration, b: &Configuration, cost: &GridField<f64>) -> Result<f64, CboError> {
    cost_length(model, &model.steer(a, b), cost)
}

/// Cost-lengths of every ordered pair of legs; row `i` starts at target `i`.
pub fn leg_costs(model: &DynamicsModel, targets: &[Point], cost: &GridField<f64>) -> Result<Vec<Vec<f64>>, CboError> {
    let qs = configs(model, targets);
    qs.iter()
        .enumerate()
        .map(|(i, a)| {
            qs.iter()
                .enumerate()
                .map(|(j, b)| if i == j { Ok(0.0) } else { leg_cost(model, a, b, cost) })
                .collect()
        })
        .collect()
}

/// Targets visited by a greedy chain of steers started at a random target:
/// each step goes to the unvisited target of least leg cost while the budget
/// lasts. Heading models visit every target with heading 0.
pub fn greedy_orienteering<R: Rng + ?Sized>(
    model: &DynamicsModel,
    cost: &GridField<f64>,
    targets: &[Point],
    lambda: f64,
    rng: &mut R,
) -> Result<usize, CboError> {
    if lambda < 0.0 {
        return Err(CboError::NegativeBudget(lambda));
    }
    let n = targets.len();
    if n == 0 {
        return Ok(0);
    }
    let qs = configs(model, targets);
    let floor = cost.min_value().max(0.0);
    let mut visited = vec![false; n];
    let mut cur = rng.random_range(0..n);
    visited[cur] = true;
    let mut left = lambda;
    let mut count = 1;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| !visited[j]) {
            let cap = best.map_or(left, |b| b.1.min(left));
            // cost rate never drops below the field minimum
            if floor * model.distance(&qs[cur], &qs[j]) > cap {
                continue;
            }
            let c = leg_cost(model, &qs[cur], &qs[j], cost)?;
            if c <= cap && best.is_none_or(|b| c < b.1) {
                best = Some((j, c));
            }
        }
        match best {
            Some((j, c)) => {
                visited[j] = true;
                left -= c;
                cur = j;
                count += 1;
            }
            None => return Ok(count),
        }
    }
}

/// Largest number of targets any ordered chain of steers visits within
/// budget `lambda`, by depth-first enumeration.
pub fn brute_cbo_small(model: &DynamicsModel, cost: &GridField<f64>, targets: &[Point], lambda: f64) -> Result<usize, CboError> {
    let n = targets.len();
    if n > BRUTE_MAX_TARGETS {
        return Err(CboError::TooLarge(n));
    }
    if lambda < 0.0 {
        return Err(CboError::NegativeBudget(lambda));
    }
    if n == 0 {
        return Ok(0);
    }
    let legs = leg_costs(model, targets, cost)?;
    let mut best = 1;
    for start in 0..n {
        extend(&legs, 1 << start, start, lambda, 1, &mut best);
    }
    Ok(best)
}

fn extend(legs: &[Vec<f64>], mask: usize, cur: usize, left: f64, count: usize, best: &mut usize) {
    *best = (*best).max(count);
    if *best == legs.len() {
        return;
    }
    for j in 0..legs.len() {
        if mask & (1 << j) == 0 && legs[cur][j] <= left {
            extend(legs, mask | (1 << j), j, left - legs[cur][j], count + 1, best);
        }
    }
}

/// `(1 + delta) beta lambda n^(1/gamma)`.
pub fn cbo_bound(beta: f64, lambda: f64, n: usize, gamma: f64, delta: f64) -> f64 {
    (1.0 + delta) * beta * lambda * (n as f64).powf(1.0 / gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Segment;

    fn flat(c: f64) -> GridField<f64> {
        GridField::unit_square(16, |_| c)
    }

    #[test]
    fn constant_field_scales_duration() {
        let m = DynamicsModel::euclidean2();
        let t = m.steer(&[0.1, 0.1, 0.0], &[0.9, 0.7, 0.0]);
        let c = cost_length(&m, &t, &flat(0.7)).unwrap();
        assert!((c - 0.7 * 1.0).abs() < 1e-12);
        assert_eq!(cost_length(&m, &Trajectory::stationary([0.5; 3]), &flat(2.0)).unwrap(), 0.0);
    }

    #[test]
    fn leaving_the_grid_is_an_error() {
        let m = DynamicsModel::euclidean2();
        let t = Trajectory { start: [0.5, 0.5, 0.0], segments: vec![Segment { control: [1.0, 0.0, 0.0], duration: 1.0 }] };
        assert!(matches!(cost_length(&m, &t, &flat(1.0)), Err(CboError::OutOfGrid(_))));
    }

    #[test]
    fn budget_thresholds() {
        let m = DynamicsModel::euclidean2();
        let f = flat(2.0);
        let pts = [[0.2, 0.5, 0.0], [0.6, 0.5, 0.0]];
        let c = leg_costs(&m, &pts, &f).unwrap()[0][1];
        assert!((c - 0.8).abs() < 1e-12);
        assert_eq!(brute_cbo_small(&m, &f, &pts, 0.0).unwrap(), 1);
        assert_eq!(brute_cbo_small(&m, &f, &pts, c - 1e-9).unwrap(), 1);
        assert_eq!(brute_cbo_small(&m, &f, &pts, c).unwrap(), 2);
        let mut r = crate::rng::from_seed(1);
        assert_eq!(greedy_orienteering(&m, &f, &pts, 0.0, &mut r).unwrap(), 1);
        assert_eq!(greedy_orienteering(&m, &f, &pts, c, &mut r).unwrap(), 2);
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(cbo_bound(10.568, 0.5, 0, 2.0, 0.1), 0.0);
        assert!((cbo_bound(10.568, 0.5, 100, 2.0, 0.1) - 58.124).abs() < 1e-3);
    }
}
