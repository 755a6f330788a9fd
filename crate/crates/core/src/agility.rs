//! Monte-Carlo estimates of the small-time constraint factor and agility from
//! occupancy-grid volumes of sampled reachable sets.
//!
//! Sample points are expressed relative to the anchor (rotated into the
//! heading frame for car-like models) and binned with per-axis resolutions
//! proportional to the model's characteristic extent at each horizon. The
//! same random stream is reused for every horizon, so for homogeneous models
//! the point clouds are exact rescalings of each other.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{Configuration, DynamicsError, DynamicsModel, Point};
use crate::field::{FieldError, GridField};
use crate::rng;

pub const DEFAULT_RESOLUTION_FRAC: f64 = 1.0 / 20.0;
pub const DEFAULT_HEADINGS: usize = 8;

#[derive(Debug, Error)]
pub enum AgilityError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("resolution must be positive")]
    BadResolution,
    #[error("need at least 4 strictly decreasing horizons, got {0:?}")]
    BadLadder(Vec<f64>),
    #[error("log-log fit degenerate (r2 = {0:.3}); increase samples or coarsen resolution")]
    DegenerateFit(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgilityEstimate {
    pub gamma_hat: f64,
    pub g_hat: f64,
    pub epsilons: Vec<f64>,
    pub volumes: Vec<f64>,
    pub fit_r2: f64,
}

/// Occupied boxes times box volume, same resolution on every axis.
pub fn grid_volume(points: &[Point], resolution: f64, dim: usize) -> Result<f64, AgilityError> {
    grid_volume_aniso(points, &vec![resolution; dim])
}

/// Occupied boxes times box volume with per-axis resolution; the workspace
/// dimension is `res.len()`.
pub fn grid_volume_aniso(points: &[Point], res: &[f64]) -> Result<f64, AgilityError> {
    if points.is_empty() {
        return Err(AgilityError::EmptyPointSet);
    }
    if res.is_empty() || res.iter().any(|r| !(*r > 0.0)) {
        return Err(AgilityError::BadResolution);
    }
    let mut occupied = HashSet::with_capacity(points.len() / 4);
    for p in points {
        let mut key = [0i64; 3];
        for (a, r) in res.iter().enumerate() {
            key[a] = (p[a] / r).floor() as i64;
        }
        occupied.insert(key);
    }
    Ok(occupied.len() as f64 * res.iter().product::<f64>())
}

impl DynamicsModel {
    /// Exponent of the workspace reachable-set volume for this model.
    pub fn nominal_gamma(&self) -> u32 {
        match self {
            Self::Euclidean3 { .. } | Self::ReedsShepp { .. } | Self::DiffDrive { .. } => 3,
            _ => 2,
        }
    }

    /// Per-axis extent of the `eps`-reachable set at `q`, in the anchor's
    /// heading frame.
    pub fn reach_scales(&self, q: &Configuration, eps: f64) -> Vec<f64> {
        match *self {
            Self::Euclidean2 { c_pi } => vec![c_pi * eps; 2],
            Self::Euclidean3 { c_pi } => vec![c_pi * eps; 3],
            Self::ScaledEuclidean2 { c_pi, sigma } => vec![c_pi * sigma.at(q[0]) * eps; 2],
            Self::ReedsShepp { c_pi, r_min } => {
                let d = c_pi * eps;
                vec![d, d * d / r_min]
            }
            // heading drifts by at most omega_max * eps, so the lateral
            // extent is second order as for the car
            Self::DiffDrive { c_pi, omega_max } => {
                let d = c_pi * eps;
                vec![d, d * omega_max * eps]
            }
        }
    }
}

fn to_local(model: &DynamicsModel, q: &Configuration, p: &Point) -> Point {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - if model.workspace_dim() == 3 { q[2] } else { 0.0 }];
    if model.has_heading() {
        let (c, s) = (q[2].cos(), q[2].sin());
        [c * d[0] + s * d[1], -s * d[0] + c * d[1], 0.0]
    } else {
        d
    }
}

/// Volume of the sampled `eps`-reachable set at `q` from the stream `seed`.
pub fn reachable_volume(
    model: &DynamicsModel,
    q: &Configuration,
    eps: f64,
    n: usize,
    seed: u64,
    resolution_frac: f64,
) -> Result<f64, AgilityError> {
    let mut r = rng::from_seed(seed);
    let pts: Vec<Point> = model
        .sample_reachable(q, eps, n, &mut r)?
        .iter()
        .map(|p| to_local(model, q, p))
        .collect();
    let res: Vec<f64> = model.reach_scales(q, eps).iter().map(|s| s * resolution_frac).collect();
    grid_volume_aniso(&pts, &res)
}

/// `eps0 * 2^-k` for `k = 0..count`.
pub fn eps_ladder(eps0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| eps0 * 0.5f64.powi(k as i32)).collect()
}

/// Least squares `y = a + b x`; returns `(a, b, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (my - slope * mx, slope, r2)
}

pub fn estimate_gamma<R: Rng + ?Sized>(
    model: &DynamicsModel,
    q: &Configuration,
    eps_list: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<AgilityEstimate, AgilityError> {
    estimate_gamma_with(model, q, eps_list, n, rng.random(), DEFAULT_RESOLUTION_FRAC)
}

pub fn estimate_gamma_with(
    model: &DynamicsModel,
    q: &Configuration,
    eps_list: &[f64],
    n: usize,
    seed: u64,
    resolution_frac: f64,
) -> Result<AgilityEstimate, AgilityError> {
    let decreasing = eps_list.windows(2).all(|w| w[1] < w[0]);
    if eps_list.len() < 4 || !decreasing || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(AgilityError::BadLadder(eps_list.to_vec()));
    }
    let volumes = eps_list
        .iter()
        .map(|&e| reachable_volume(model, q, e, n, seed, resolution_frac))
        .collect::<Result<Vec<_>, _>>()?;
    let lx: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = volumes.iter().map(|v| v.ln()).collect();
    let (_, gamma_hat, fit_r2) = linear_fit(&lx, &ly);
    if !(fit_r2 >= 0.9) || !(gamma_hat > 0.0) {
        return Err(AgilityError::DegenerateFit(fit_r2));
    }
    let k = eps_list.len();
    let g_hat = (k - 2..k).map(|i| volumes[i] / eps_list[i].powf(gamma_hat)).sum::<f64>() / 2.0;
    Ok(AgilityEstimate { gamma_hat, g_hat, epsilons: eps_list.to_vec(), volumes, fit_r2 })
}

#[derive(Debug, Clone, Serialize)]
pub struct CellAgility {
    pub cell: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub estimate: AgilityEstimate,
}

/// Agility per grid cell: the anchor sits at the cell center and, for
/// heading models, the maximum over `DEFAULT_HEADINGS` headings is kept.
/// Returns the field and every per-heading estimate.
pub fn agility_field(
    model: &DynamicsModel,
    grid: &GridField<f64>,
    eps0: f64,
    n: usize,
    seed: u64,
) -> Result<(GridField<f64>, Vec<CellAgility>), AgilityError> {
    let ladder = eps_ladder(eps0, 5);
    let headings = if model.has_heading() { DEFAULT_HEADINGS } else { 1 };
    let per_cell: Vec<Result<Vec<CellAgility>, AgilityError>> = (0..grid.len())
        .into_par_iter()
        .map(|cell| {
            let c = grid.center(cell);
            (0..headings)
                .map(|h| {
                    let theta = std::f64::consts::TAU * h as f64 / headings as f64;
                    let q = model.lift(&c, theta);
                    let est = estimate_gamma_with(
                        model,
                        &q,
                        &ladder,
                        n,
                        rng::mix(seed, (cell * headings + h) as u64),
                        DEFAULT_RESOLUTION_FRAC,
                    )?;
                    Ok(CellAgility { cell, x: c[0], y: c[1], heading: theta, estimate: est })
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut records = Vec::new();
    for cell in per_cell {
        let cell = cell?;
        values.push(cell.iter().map(|e| e.estimate.g_hat).fold(f64::NEG_INFINITY, f64::max));
        records.extend(cell);
    }
    Ok((grid.with_values(values)?, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn single_point_occupies_one_box() {
        let v = grid_volume(&[[0.3, 0.4, 0.0]], 0.1, 2).unwrap();
        assert!((v - 0.01).abs() < 1e-15);
        assert!(matches!(grid_volume(&[], 0.1, 2), Err(AgilityError::EmptyPointSet)));
    }

    #[test]
    fn dense_square_and_disk() {
        let mut r = rng::from_seed(2);
        let sq: Vec<Point> = (0..1_000_000).map(|_| [r.random::<f64>(), r.random::<f64>(), 0.0]).collect();
        let v = grid_volume(&sq, 0.01, 2).unwrap();
        assert!((v - 1.0).abs() < 0.03);
        let disk: Vec<Point> = (0..1_000_000)
            .map(|_| {
                let rad = r.random::<f64>().sqrt();
                let a = r.random_range(0.0..std::f64::consts::TAU);
                [rad * a.cos(), rad * a.sin(), 0.0]
            })
            .collect();
        let v = grid_volume(&disk, 0.01, 2).unwrap();
        assert!((v / std::f64::consts::PI - 1.0).abs() < 0.03);
    }

    #[test]
    fn fit_recovers_line() {
        let (a, b, r2) = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_validation() {
        let m = DynamicsModel::euclidean2();
        assert!(matches!(
            estimate_gamma_with(&m, &[0.0; 3], &[0.1, 0.05, 0.1, 0.01], 10, 1, 0.05),
            Err(AgilityError::BadLadder(_))
        ));
        assert_eq!(eps_ladder(0.2, 3), vec![0.2, 0.1, 0.05]);
    }
}
