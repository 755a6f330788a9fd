//! Hierarchical cell structures: anchored boxes inside reachable sets that
//! split into `s^gamma` children, and half-open covers of a rectangular
//! support.
//!
//! Boxes are axis aligned in the workspace. Car-like anchors face +x, so the
//! first axis is the along-heading direction and the second is lateral.
//! Axis `i` of a box at radius `eps` has half-width `coeff_i * eps^w_i`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Configuration, DynamicsModel, Point};
use crate::hcp::TargetPath;

/// Headings tried when the final heading of a steer is free.
pub const CONTAINMENT_HEADINGS: usize = 16;
const REACH_TOL: f64 = 1e-9;
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HcsError {
    #[error("point {0:?} outside the covered support")]
    OutOfSupport(Point),
    #[error("only {reachable:.4} of the box is reachable from the anchor")]
    CellNotContained { reachable: f64 },
    #[error("invalid cover parameters: {0}")]
    Invalid(String),
    #[error("no cell shape for {0}: its reachable sets contain no box centered on the anchor")]
    UnsupportedModel(&'static str),
}

/// Per-axis box weights and half-width coefficients of a model's cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellShape {
    pub weights: Vec<u32>,
    pub coeffs: Vec<f64>,
}

impl CellShape {
    /// Conservative shapes: the Euclidean square has side `c eps`, half the
    /// inscribed square, so that children of the same radius stay inscribed.
    pub fn for_model(model: &DynamicsModel) -> Result<Self, HcsError> {
        Ok(match *model {
            DynamicsModel::Euclidean2 { c_pi } => Self { weights: vec![1, 1], coeffs: vec![0.5 * c_pi; 2] },
            DynamicsModel::Euclidean3 { c_pi } => Self { weights: vec![1, 1, 1], coeffs: vec![0.5 * c_pi; 3] },
            DynamicsModel::ScaledEuclidean2 { c_pi, sigma } => {
                Self { weights: vec![1, 1], coeffs: vec![0.5 * c_pi * sigma.min(); 2] }
            }
            DynamicsModel::ReedsShepp { c_pi, r_min } => {
                Self { weights: vec![1, 2], coeffs: vec![RS_ALONG * c_pi, RS_LATERAL * c_pi * c_pi / r_min] }
            }
            // turning in place costs time, so the reachable set pinches to
            // zero width at the anchor
            DynamicsModel::DiffDrive { .. } => return Err(HcsError::UnsupportedModel("diff_drive")),
        })
    }

    pub fn gamma(&self) -> u32 {
        self.weights.iter().sum()
    }

    pub fn half_widths(&self, eps: f64) -> Vec<f64> {
        self.weights.iter().zip(&self.coeffs).map(|(&w, &c)| c * eps.powi(w as i32)).collect()
    }

    /// Number of parts each axis splits into.
    pub fn splits(&self, s: u32) -> Vec<u32> {
        self.weights.iter().map(|&w| s.pow(w)).collect()
    }
}

// Reachability fails beyond a lateral coefficient of about 0.15 (unit radius).
pub const RS_ALONG: f64 = 0.4;
pub const RS_LATERAL: f64 = 0.08;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Point,
    pub hi: Point,
}

impl BoxRegion {
    pub fn volume(&self, dim: usize) -> f64 {
        (0..dim).map(|a| self.hi[a] - self.lo[a]).product()
    }

    pub fn center(&self) -> Point {
        [0, 1, 2].map(|a| 0.5 * (self.lo[a] + self.hi[a]))
    }

    pub fn contains_half_open(&self, p: &Point, dim: usize) -> bool {
        (0..dim).all(|a| p[a] >= self.lo[a] && p[a] < self.hi[a])
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Point {
        let mut p = [0.0; 3];
        for (a, pa) in p.iter_mut().enumerate().take(dim) {
            *pa = self.lo[a] + (self.hi[a] - self.lo[a]) * rng.random::<f64>();
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub anchor: Configuration,
    pub eps: f64,
    #[serde(rename = "box")]
    pub region: BoxRegion,
    pub depth: u32,
}

impl Cell {
    /// Cell of radius `eps` centered on `anchor`.
    pub fn centered(model: &DynamicsModel, shape: &CellShape, anchor: Configuration, eps: f64) -> Self {
        let half = shape.half_widths(eps);
        let x = model.project(&anchor);
        let mut region = BoxRegion { lo: x, hi: x };
        for (a, h) in half.iter().enumerate() {
            region.lo[a] -= h;
            region.hi[a] += h;
        }
        Self { anchor, eps, region, depth: 0 }
    }

    /// Child `index` in mixed radix: `index = sum_i digit_i prod_{j<i} splits_j`.
    pub fn child(&self, model: &DynamicsModel, shape: &CellShape, s: u32, index: u32) -> Cell {
        let splits = shape.splits(s);
        let mut rest = index;
        let mut region = self.region.clone();
        for (a, &m) in splits.iter().enumerate() {
            let digit = rest % m;
            rest /= m;
            let width = (self.region.hi[a] - self.region.lo[a]) / f64::from(m);
            region.lo[a] = self.region.lo[a] + width * f64::from(digit);
            region.hi[a] = if digit + 1 == m { self.region.hi[a] } else { region.lo[a] + width };
        }
        let anchor = model.lift(&region.center(), self.anchor[2]);
        Cell { anchor, eps: self.eps / f64::from(s), region, depth: self.depth + 1 }
    }

    pub fn children(&self, model: &DynamicsModel, shape: &CellShape, s: u32) -> Vec<Cell> {
        let count: u32 = shape.splits(s).iter().product();
        (0..count).map(|i| self.child(model, shape, s, i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HcsNode {
    pub cell: Cell,
    pub children: Vec<HcsNode>,
}

/// Cell tree rooted at `anchor` down to `depth`.
pub fn build_hcs(
    model: &DynamicsModel,
    anchor: Configuration,
    eps0: f64,
    depth: u32,
    s: u32,
) -> Result<HcsNode, HcsError> {
    let shape = CellShape::for_model(model)?;
    Ok(grow(model, &shape, Cell::centered(model, &shape, anchor, eps0), depth, s))
}

fn grow(model: &DynamicsModel, shape: &CellShape, cell: Cell, depth: u32, s: u32) -> HcsNode {
    let children = if depth == 0 {
        Vec::new()
    } else {
        cell.children(model, shape, s).into_iter().map(|c| grow(model, shape, c, depth - 1, s)).collect()
    };
    HcsNode { cell, children }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcsCover {
    pub eps0: f64,
    pub s: u32,
    pub gamma: u32,
    pub rho: f64,
    pub support: BoxRegion,
    /// Root tiles per axis.
    pub counts: Vec<usize>,
    pub roots: Vec<Cell>,
    #[serde(skip)]
    shape: Option<CellShape>,
}

/// Tiles `support` with root cells of radius `eps0`, starting at its lower
/// corner. Boxes are half-open, except that the upper support boundary
/// belongs to the last tile along each axis.
pub fn build_cover(model: &DynamicsModel, support: &BoxRegion, eps0: f64, s: u32) -> Result<HcsCover, HcsError> {
    if !(eps0 > 0.0) || s < 2 {
        return Err(HcsError::Invalid(format!("eps0 = {eps0}, s = {s}")));
    }
    let dim = model.workspace_dim();
    if (0..dim).any(|a| !(support.hi[a] > support.lo[a])) {
        return Err(HcsError::Invalid("empty support".into()));
    }
    let shape = CellShape::for_model(model)?;
    let side: Vec<f64> = shape.half_widths(eps0).iter().map(|h| 2.0 * h).collect();
    let counts: Vec<usize> = (0..dim)
        .map(|a| (((support.hi[a] - support.lo[a]) / side[a]) * (1.0 - 1e-12)).ceil().max(1.0) as usize)
        .collect();
    let total: usize = counts.iter().product();
    let mut roots = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rest = idx;
        let mut center = [0.0; 3];
        for a in 0..dim {
            let k = rest % counts[a];
            rest /= counts[a];
            center[a] = support.lo[a] + side[a] * (k as f64 + 0.5);
        }
        roots.push(Cell::centered(model, &shape, model.lift(&center, 0.0), eps0));
    }
    Ok(HcsCover {
        eps0,
        s,
        gamma: shape.gamma(),
        rho: 0.0,
        support: support.clone(),
        counts,
        roots,
        shape: Some(shape),
    })
}

impl HcsCover {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "eps0": self.eps0,
            "s": self.s,
            "gamma": self.gamma,
            "roots": self.roots.iter().map(|c| serde_json::json!({"anchor": c.anchor, "box": c.region})).collect::<Vec<_>>(),
        })
    }

    fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn shape(&self) -> &CellShape {
        self.shape.as_ref().expect("cover built by build_cover")
    }

    /// Children per cell, `s^gamma`.
    pub fn branch(&self) -> u32 {
        self.s.pow(self.gamma)
    }

    /// Root tile holding `x`.
    pub fn locate_root(&self, x: &Point) -> Result<usize, HcsError> {
        let dim = self.dim();
        let mut index = 0;
        let mut stride = 1;
        for a in 0..dim {
            if x[a] < self.support.lo[a] - SUPPORT_TOL || x[a] > self.support.hi[a] + SUPPORT_TOL || !x[a].is_finite() {
                return Err(HcsError::OutOfSupport(*x));
            }
            let side = self.roots[0].region.hi[a] - self.roots[0].region.lo[a];
            let k = (((x[a] - self.support.lo[a]) / side).floor().max(0.0) as usize).min(self.counts[a] - 1);
            index += k * stride;
            stride *= self.counts[a];
        }
        Ok(index)
    }

    /// Root index and child-index path of the half-open cell chain holding
    /// `x`, `depth` levels deep.
    pub fn locate_path(&self, x: &Point, depth: usize) -> Result<(usize, TargetPath), HcsError> {
        let root = self.locate_root(x)?;
        let region = &self.roots[root].region;
        let splits = self.shape().splits(self.s);
        let dim = self.dim();
        let mut u = [0.0; 3];
        for a in 0..dim {
            u[a] = ((x[a] - region.lo[a]) / (region.hi[a] - region.lo[a])).clamp(0.0, 1.0);
        }
        let mut path = Vec::with_capacity(depth);
        for _ in 0..depth {
            let mut index = 0u32;
            let mut stride = 1u32;
            for a in 0..dim {
                let m = splits[a];
                let scaled = u[a] * f64::from(m);
                let digit = (scaled.floor() as u32).min(m - 1);
                u[a] = (scaled - f64::from(digit)).clamp(0.0, 1.0);
                index += digit * stride;
                stride *= m;
            }
            path.push(index);
        }
        Ok((root, TargetPath::new(path)))
    }

    /// Cell at the end of `path` below root `root`.
    pub fn cell_at(&self, model: &DynamicsModel, root: usize, path: &[u32]) -> Cell {
        path.iter().fold(self.roots[root].clone(), |c, &i| c.child(model, self.shape(), self.s, i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaMeasurement {
    pub alpha: f64,
    pub reachable_fraction: f64,
}

/// `alpha = Vol(box) / (g eps^gamma)`, after checking that at least 99% of
/// `n` uniform box samples are reachable from the anchor within `eps`.
pub fn measure_alpha<R: Rng + ?Sized>(
    cell: &Cell,
    model: &DynamicsModel,
    g_hat: f64,
    n: usize,
    rng: &mut R,
) -> Result<AlphaMeasurement, HcsError> {
    if !(g_hat > 0.0) || n == 0 {
        return Err(HcsError::Invalid(format!("g_hat = {g_hat}, n = {n}")));
    }
    let dim = model.workspace_dim();
    let limit = cell.eps * (1.0 + REACH_TOL);
    let hits = (0..n)
        .filter(|_| {
            let p = cell.region.sample(dim, rng);
            model.time_to_point(&cell.anchor, &p, CONTAINMENT_HEADINGS) <= limit
        })
        .count();
    let reachable_fraction = hits as f64 / n as f64;
    if reachable_fraction < 0.99 {
        return Err(HcsError::CellNotContained { reachable: reachable_fraction });
    }
    let gamma = CellShape::for_model(model)?.gamma();
    let alpha = cell.region.volume(dim) / (g_hat * cell.eps.powi(gamma as i32));
    Ok(AlphaMeasurement { alpha, reachable_fraction })
}

/// Number of `eps`-reachable sets a farthest-point style greedy pass needs to
/// cover `n` samples of the `2 eps`-reachable set at `q`.
pub fn estimate_branching<R: Rng + ?Sized>(
    model: &DynamicsModel,
    q: &Configuration,
    eps: f64,
    n: usize,
    rng: &mut R,
) -> Result<usize, HcsError> {
    let samples = model
        .sample_reachable_configs(q, 2.0 * eps, n, rng)
        .map_err(|e| HcsError::Invalid(e.to_string()))?;
    let mut centers: Vec<Configuration> = Vec::new();
    for c in &samples {
        let p = model.project(c);
        let covered = centers
            .iter()
            .any(|z| model.time_to_point(z, &p, CONTAINMENT_HEADINGS) <= eps * (1.0 + REACH_TOL));
        if !covered {
            centers.push(*c);
        }
    }
    Ok(centers.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn unit_square() -> BoxRegion {
        BoxRegion { lo: [0.0; 3], hi: [1.0, 1.0, 0.0] }
    }

    #[test]
    fn quadtree_and_octree_child_counts() {
        let e2 = DynamicsModel::euclidean2();
        let sh = CellShape::for_model(&e2).unwrap();
        let root = Cell::centered(&e2, &sh, [0.0; 3], 1.0);
        let kids = root.children(&e2, &sh, 2);
        assert_eq!(kids.len(), 4);
        assert!((kids[0].region.hi[0] - kids[0].region.lo[0] - 0.5).abs() < 1e-15);
        let e3 = DynamicsModel::Euclidean3 { c_pi: 1.0 };
        let sh3 = CellShape::for_model(&e3).unwrap();
        assert_eq!(Cell::centered(&e3, &sh3, [0.0; 3], 1.0).children(&e3, &sh3, 2).len(), 8);
        let dd = DynamicsModel::DiffDrive { c_pi: 1.0, omega_max: 1.0 };
        assert!(matches!(CellShape::for_model(&dd), Err(HcsError::UnsupportedModel(_))));
    }

    #[test]
    fn car_children_split_lateral_axis_in_four() {
        let rs = DynamicsModel::ReedsShepp { c_pi: 1.0, r_min: 1.0 };
        let sh = CellShape::for_model(&rs).unwrap();
        let root = Cell::centered(&rs, &sh, [0.0; 3], 0.2);
        let kids = root.children(&rs, &sh, 2);
        assert_eq!(kids.len(), 8);
        let lat = |c: &Cell| c.region.hi[1] - c.region.lo[1];
        assert!((lat(&kids[0]) - lat(&root) / 4.0).abs() < 1e-15);
        // the child box is the child's own centered box
        let own = Cell::centered(&rs, &sh, kids[3].anchor, kids[3].eps);
        for a in 0..2 {
            assert!((own.region.lo[a] - kids[3].region.lo[a]).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_square_quadtree_paths() {
        let e2 = DynamicsModel::euclidean2();
        // side c eps = 1 gives a single root covering the square
        let cover = build_cover(&e2, &unit_square(), 1.0, 2).unwrap();
        assert_eq!(cover.roots.len(), 1);
        let (root, path) = cover.locate_path(&[0.3, 0.7, 0.0], 2).unwrap();
        assert_eq!(root, 0);
        assert_eq!(path.stored(), &[2, 1]);
        let (_, edge) = cover.locate_path(&[0.5, 0.25, 0.0], 1).unwrap();
        assert_eq!(edge.stored(), &[1]);
        let (_, none) = cover.locate_path(&[0.5, 0.5, 0.0], 0).unwrap();
        assert!(none.stored().is_empty());
        assert!(cover.locate_path(&[1.5, 0.5, 0.0], 1).is_err());
    }

    #[test]
    fn grid_cover_counts() {
        let e2 = DynamicsModel::euclidean2();
        let cover = build_cover(&e2, &unit_square(), 0.3, 2).unwrap();
        assert_eq!(cover.roots.len(), 16);
        let cover = build_cover(&e2, &unit_square(), 0.25, 2).unwrap();
        assert_eq!(cover.roots.len(), 16);
    }

    #[test]
    fn euclidean_alpha_is_one_over_pi() {
        let e2 = DynamicsModel::euclidean2();
        let cell = Cell::centered(&e2, &CellShape::for_model(&e2).unwrap(), [0.5, 0.5, 0.0], 0.1);
        let m = measure_alpha(&cell, &e2, std::f64::consts::PI, 2000, &mut rng::from_seed(1)).unwrap();
        assert!((m.alpha - 1.0 / std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(m.reachable_fraction, 1.0);
    }

    #[test]
    fn oversized_box_is_rejected() {
        let e2 = DynamicsModel::euclidean2();
        let mut cell = Cell::centered(&e2, &CellShape::for_model(&e2).unwrap(), [0.0; 3], 0.1);
        cell.region = BoxRegion { lo: [-0.1, -0.1, 0.0], hi: [0.1, 0.1, 0.0] };
        assert!(matches!(
            measure_alpha(&cell, &e2, std::f64::consts::PI, 2000, &mut rng::from_seed(1)),
            Err(HcsError::CellNotContained { .. })
        ));
    }
}
