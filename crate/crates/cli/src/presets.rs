//! Supports, grids, agility fields, named densities and measured cover
//! constants shared by the subcommands.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dstsp_core::agility::{eps_ladder, estimate_gamma_with};
use dstsp_core::bounds::worst_case_density;
use dstsp_core::dynamics::DynamicsModel;
use dstsp_core::hcs::{estimate_branching, measure_alpha, BoxRegion, HcsCover};
use dstsp_core::{rng, Field};

/// Reachable-set samples behind each alpha and branching measurement.
pub const ALPHA_SAMPLES: usize = 500;
pub const ALPHA_CELLS: usize = 32;
pub const BRANCH_SAMPLES: usize = 4000;
pub const BRANCH_EPS: f64 = 0.05;
/// Horizon of the single-anchor agility estimate for heading models.
pub const HEADING_EPS: f64 = 0.2;

/// Unit cube in the model's workspace.
pub fn support(model: &DynamicsModel) -> BoxRegion {
    let mut hi = [0.0; 3];
    hi.iter_mut().take(model.workspace_dim()).for_each(|h| *h = 1.0);
    BoxRegion { lo: [0.0; 3], hi }
}

/// `k` cells per axis over the unit workspace cube.
pub fn grid(model: &DynamicsModel, k: usize, f: impl Fn(&[f64; 3]) -> f64) -> Result<Field> {
    let d = model.workspace_dim();
    Ok(Field::from_fn(vec![0.0; d], 1.0 / k as f64, vec![k; d], f)?)
}

/// Workspace agility on the grid. Euclidean models use the ball volume in
/// closed form; heading models get a constant field from one Monte-Carlo
/// estimate at the center, since their agility does not depend on position.
pub fn agility_g(model: &DynamicsModel, k: usize, samples: usize, seed: u64) -> Result<Field> {
    match *model {
        DynamicsModel::Euclidean2 { c_pi } => grid(model, k, |_| PI * c_pi * c_pi),
        DynamicsModel::Euclidean3 { c_pi } => grid(model, k, |_| 4.0 / 3.0 * PI * c_pi.powi(3)),
        DynamicsModel::ScaledEuclidean2 { c_pi, sigma } => grid(model, k, |c| PI * (c_pi * sigma.at(c[0])).powi(2)),
        DynamicsModel::ReedsShepp { .. } | DynamicsModel::DiffDrive { .. } => {
            let q = model.lift(&[0.5, 0.5, 0.0], 0.0);
            let est = estimate_gamma_with(model, &q, &eps_ladder(HEADING_EPS, 5), samples, seed, 1.0 / 20.0)?;
            grid(model, k, |_| est.g_hat)
        }
    }
}

/// Named density on the grid of `g`, or a GridField JSON file.
pub fn density(spec: &str, g: &Field) -> Result<Field> {
    let f = match spec {
        "uniform" => g.map(|_| 1.0),
        "linear" => {
            let centers: Vec<f64> = (0..g.len()).map(|i| 2.0 * g.center(i)[0]).collect();
            g.with_values(centers)?
        }
        "worst" => worst_case_density(g, None)?,
        "anti" => g.clone(),
        path => {
            let file = std::fs::File::open(Path::new(path)).with_context(|| format!("density `{path}`"))?;
            let f = Field::read_json(std::io::BufReader::new(file)).with_context(|| format!("density file {path}"))?;
            if !f.same_grid(g) {
                bail!("density file {path} does not match the {:?} grid", g.dims());
            }
            f
        }
    };
    Ok(f.normalized()?)
}

/// Smallest measured alpha over up to `ALPHA_CELLS` evenly spread roots.
pub fn alpha_hat(model: &DynamicsModel, cover: &HcsCover, g: &Field, seed: u64) -> Result<f64> {
    let m = cover.roots.len();
    let step = m.div_ceil(ALPHA_CELLS).max(1);
    let mut r = rng::from_seed(seed);
    let mut best = f64::INFINITY;
    for cell in cover.roots.iter().step_by(step) {
        let x = model.project(&cell.anchor);
        let d = model.workspace_dim();
        let gx = g.value_at(&x[..d]).unwrap_or_else(|| g.max_value());
        best = best.min(measure_alpha(cell, model, gx, ALPHA_SAMPLES, &mut r)?.alpha);
    }
    Ok(best)
}

/// Greedy cover count of a doubled reachable set at the support center.
pub fn branching(model: &DynamicsModel, seed: u64) -> Result<u64> {
    let q = model.lift(&[0.5, 0.5, 0.5], 0.0);
    let mut r = rng::from_seed(seed);
    Ok(estimate_branching(model, &q, BRANCH_EPS, BRANCH_SAMPLES, &mut r)? as u64)
}

