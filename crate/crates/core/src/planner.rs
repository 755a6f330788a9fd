//! End-to-end tour construction: a cover of root cells, an HCP plan inside
//! each nonempty root, and an open tour through the root anchors. Also the
//! exact small-instance oracle and the trivial linear bound.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{Configuration, DynamicsModel, Point, Trajectory};
use crate::hcp::{self, Action, HcpError, HcpInstance, HcpParams};
use crate::hcs::{BoxRegion, CellShape, HcsCover, HcsError};

/// `eps0 = EPS0_SCALE * n^(-1/gamma)` before clamping.
pub const EPS0_SCALE: f64 = 1.0;
pub const EPS0_MIN: f64 = 1e-6;
/// Slack on the per-root plan bound for steers that overshoot the cell radius.
pub const STEER_SLACK: f64 = 0.25;
pub const EXACT_MAX_TARGETS: usize = 8;
pub const EXACT_MAX_HEADINGS: usize = 8;
pub const TRIVIAL_SAMPLES: usize = 512;
const NEIGHBORS: usize = 10;
const TWO_OPT_SWEEPS: usize = 50;
const VISIT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("target {0} lies outside the cover")]
    TargetOutsideCover(usize),
    #[error("model is not symmetric")]
    NotSymmetric,
    #[error("instance too large for the exact solver: n = {n}, headings = {headings}")]
    TooLarge { n: usize, headings: usize },
    #[error("tour check failed: {0}")]
    Verify(String),
    #[error(transparent)]
    Hcs(#[from] HcsError),
    #[error(transparent)]
    Hcp(#[from] HcpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Visit {
    pub target: usize,
    pub time: f64,
    /// Segment count of the trajectory prefix that ends at the visit.
    pub segment: usize,
}

#[derive(Debug, Clone)]
pub struct Tour {
    pub trajectory: Trajectory,
    pub visits: Vec<Visit>,
    pub total_time: f64,
    /// Time spent on transfers between root anchors.
    pub roots_time: f64,
    /// Targets per root cell.
    pub root_counts: Vec<usize>,
}

/// Clamped `EPS0_SCALE * n^(-1/gamma)`; the upper clamp is the radius whose
/// root cell already spans the support.
pub fn default_eps0(model: &DynamicsModel, n: usize, support: &BoxRegion) -> Result<f64, HcsError> {
    let shape = CellShape::for_model(model)?;
    let gamma = f64::from(shape.gamma());
    let eps_max = shape
        .weights
        .iter()
        .zip(&shape.coeffs)
        .enumerate()
        .map(|(a, (&w, &c))| ((support.hi[a] - support.lo[a]) / (2.0 * c)).powf(1.0 / f64::from(w)))
        .fold(0.0, f64::max);
    let raw = EPS0_SCALE * (n.max(1) as f64).powf(-1.0 / gamma);
    Ok(raw.clamp(EPS0_MIN, eps_max.max(EPS0_MIN)))
}

/// HCP depth for a root holding `n_j` targets: `ceil(log_b n_j) + 1`.
pub fn depth_cap(n_j: usize, branch: u32) -> usize {
    hcp::default_k_star(n_j, branch) as usize + 2
}

/// Builder that chains steers from the actual end state of the previous
/// piece, so rounding does not accumulate along the tour.
struct Walker<'a> {
    model: &'a DynamicsModel,
    traj: Trajectory,
    time: f64,
    state: Configuration,
    visits: Vec<Visit>,
}

impl<'a> Walker<'a> {
    fn new(model: &'a DynamicsModel, start: Configuration) -> Self {
        Self { model, traj: Trajectory::stationary(start), time: 0.0, state: start, visits: Vec::new() }
    }

    fn push(&mut self, piece: Trajectory) {
        self.state = piece.end(self.model);
        self.time += piece.duration();
        self.traj.append(piece);
    }

    fn steer_to(&mut self, q: &Configuration) {
        let piece = self.model.steer(&self.state, q);
        self.push(piece);
    }

    fn out_and_back(&mut self, target: usize, q: &Configuration) -> Result<(), PlannerError> {
        let out = self.model.steer(&self.state, q);
        let back = self.model.reverse_trajectory(&out).map_err(|_| PlannerError::NotSymmetric)?;
        self.push(out);
        self.visits.push(Visit { target, time: self.time, segment: self.traj.segments.len() });
        self.push(back);
        Ok(())
    }
}

pub fn solve_dstsp(model: &DynamicsModel, cover: &HcsCover, targets: &[Point]) -> Result<Tour, PlannerError> {
    if !model.symmetric() {
        return Err(PlannerError::NotSymmetric);
    }
    let m = cover.roots.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, x) in targets.iter().enumerate() {
        let r = cover.locate_root(x).map_err(|_| PlannerError::TargetOutsideCover(i))?;
        members[r].push(i);
    }
    let root_counts: Vec<usize> = members.iter().map(Vec::len).collect();
    let occupied: Vec<usize> = (0..m).filter(|&r| !members[r].is_empty()).collect();
    if occupied.is_empty() {
        let start = cover.roots.first().map_or([0.0; 3], |c| c.anchor);
        return Ok(Tour {
            trajectory: Trajectory::stationary(start),
            visits: Vec::new(),
            total_time: 0.0,
            roots_time: 0.0,
            root_counts,
        });
    }
    let params = HcpParams::new(cover.branch(), cover.s)?;
    let pieces: Vec<(Trajectory, Vec<Visit>)> = occupied
        .par_iter()
        .map(|&r| root_piece(model, cover, &params, r, &members[r], targets))
        .collect::<Result<_, _>>()?;
    let anchors: Vec<Configuration> = occupied.iter().map(|&r| cover.roots[r].anchor).collect();
    let order = roots_tour(model, &anchors);

    let mut walker = Walker::new(model, anchors[order.order[0]]);
    let mut roots_time = 0.0;
    for (k, &o) in order.order.iter().enumerate() {
        if k > 0 {
            let before = walker.time;
            walker.steer_to(&anchors[o]);
            roots_time += walker.time - before;
        }
        let (piece, visits) = &pieces[o];
        let offset_t = walker.time;
        let offset_s = walker.traj.segments.len();
        walker.visits.extend(visits.iter().map(|v| Visit {
            target: v.target,
            time: offset_t + v.time,
            segment: offset_s + v.segment,
        }));
        walker.push(piece.clone());
    }
    let total_time = walker.traj.duration();
    Ok(Tour { trajectory: walker.traj, visits: walker.visits, total_time, roots_time, root_counts })
}

/// Realizes the HCP plan of one root: moves steer between anchors and a
/// collect is an out-and-back steer to the target with the anchor's heading.
fn root_piece(
    model: &DynamicsModel,
    cover: &HcsCover,
    params: &HcpParams,
    root: usize,
    ids: &[usize],
    targets: &[Point],
) -> Result<(Trajectory, Vec<Visit>), PlannerError> {
    let depth = depth_cap(ids.len(), params.branch());
    let paths = ids
        .iter()
        .map(|&i| cover.locate_path(&targets[i], depth).map(|(_, p)| p).map_err(|_| PlannerError::TargetOutsideCover(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let instance = HcpInstance::truncated(*params, paths)?;
    let plan = hcp::construct_optimal_plan(&instance);

    let shape = cover.shape();
    let mut stack = vec![cover.roots[root].clone()];
    let mut walker = Walker::new(model, cover.roots[root].anchor);
    for action in &plan.actions {
        match *action {
            Action::MoveDown(c) => {
                let child = stack.last().expect("cursor inside tree").child(model, shape, cover.s, c);
                walker.steer_to(&child.anchor);
                stack.push(child);
            }
            Action::MoveUp => {
                stack.pop();
                let parent = stack.last().expect("plan never leaves the root");
                walker.steer_to(&parent.anchor);
            }
            Action::Collect(local) => {
                let anchor = stack.last().expect("cursor inside tree").anchor;
                let id = ids[local];
                walker.out_and_back(id, &model.lift(&targets[id], anchor[2]))?;
            }
        }
    }
    Ok((walker.traj, walker.visits))
}

/// Upper bound on [`solve_dstsp`] time given the realized root transfer
/// time: `C + sum_j 6 s eps0 n_j^(1-1/gamma) (1 + STEER_SLACK)`.
pub fn tour_time_bound(cover: &HcsCover, tour: &Tour) -> f64 {
    let g = f64::from(cover.gamma);
    let s = f64::from(cover.s);
    tour.roots_time
        + tour
            .root_counts
            .iter()
            .map(|&n| 6.0 * s * cover.eps0 * (n as f64).powf(1.0 - 1.0 / g) * (1.0 + STEER_SLACK))
            .sum::<f64>()
}

/// Checks that every target is visited exactly once, within `1e-6` in the
/// workspace at the recorded segment boundary, and that recorded times and
/// the total agree with the trajectory.
pub fn verify_tour(model: &DynamicsModel, tour: &Tour, targets: &[Point]) -> Result<(), PlannerError> {
    let mut seen = vec![false; targets.len()];
    let mut visits = tour.visits.clone();
    visits.sort_by_key(|v| v.segment);
    let mut q = tour.trajectory.start;
    let mut t = 0.0;
    let mut k = 0;
    for v in &visits {
        while k < v.segment {
            let s = tour.trajectory.segments.get(k).ok_or_else(|| PlannerError::Verify("visit past the end".into()))?;
            q = model.advance(&q, &s.control, s.duration);
            t += s.duration;
            k += 1;
        }
        let x = model.project(&q);
        let p = targets.get(v.target).ok_or_else(|| PlannerError::Verify(format!("unknown target {}", v.target)))?;
        let gap = (0..3).map(|a| (x[a] - p[a]).powi(2)).sum::<f64>().sqrt();
        if gap > VISIT_TOL {
            return Err(PlannerError::Verify(format!("target {} missed by {gap:e}", v.target)));
        }
        if (t - v.time).abs() > 1e-9 * (1.0 + t) {
            return Err(PlannerError::Verify(format!("visit time {} vs trajectory {}", v.time, t)));
        }
        if std::mem::replace(&mut seen[v.target], true) {
            return Err(PlannerError::Verify(format!("target {} visited twice", v.target)));
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(PlannerError::Verify(format!("target {i} never visited")));
    }
    let d = tour.trajectory.duration();
    if (d - tour.total_time).abs() > 1e-9 * (1.0 + d) {
        return Err(PlannerError::Verify(format!("total {} vs duration {d}", tour.total_time)));
    }
    tour.trajectory.validate(model).map_err(|e| PlannerError::Verify(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootOrder {
    pub order: Vec<usize>,
    pub time: f64,
}

/// Open path through `anchors`: nearest neighbour from anchor 0, then 2-opt
/// over workspace neighbour lists, both with steer times as edge weights.
pub fn roots_tour(model: &DynamicsModel, anchors: &[Configuration]) -> RootOrder {
    let m = anchors.len();
    if m <= 1 {
        return RootOrder { order: (0..m).collect(), time: 0.0 };
    }
    let d = |a: usize, b: usize| model.distance(&anchors[a], &anchors[b]);

    let pts: Vec<Point> = anchors.iter().map(|q| model.project(q)).collect();
    let near = neighbor_lists(&pts, NEIGHBORS.min(m - 1));

    // nearest neighbour, scanning every unused anchor only when the whole
    // neighbour list is used up
    let mut order = Vec::with_capacity(m);
    let mut used = vec![false; m];
    let mut cur = 0;
    used[0] = true;
    order.push(0);
    let nearest = |cur: usize, pool: &mut dyn Iterator<Item = usize>| {
        pool.map(|j| (j, d(cur, j))).fold((usize::MAX, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best }).0
    };
    for _ in 1..m {
        let mut local = near[cur].iter().copied().filter(|&j| !used[j]);
        let mut next = nearest(cur, &mut local);
        if next == usize::MAX {
            next = nearest(cur, &mut (0..m).filter(|&j| !used[j]));
        }
        used[next] = true;
        order.push(next);
        cur = next;
    }

    let mut pos = vec![0; m];
    for (i, &o) in order.iter().enumerate() {
        pos[o] = i;
    }
    let delta = |order: &[usize], i: usize, j: usize| -> f64 {
        let mut g = 0.0;
        if i > 0 {
            g += d(order[i - 1], order[j]) - d(order[i - 1], order[i]);
        }
        if j + 1 < m {
            g += d(order[i], order[j + 1]) - d(order[j], order[j + 1]);
        }
        g
    };
    for _ in 0..TWO_OPT_SWEEPS {
        let mut improved = false;
        for i in 0..m {
            let mut cands: Vec<usize> = Vec::with_capacity(2 * NEIGHBORS);
            if i > 0 {
                cands.extend(near[order[i - 1]].iter().map(|&c| pos[c]).filter(|&j| j > i));
            }
            cands.extend(near[order[i]].iter().map(|&c| pos[c]).filter(|&j| j > i + 1).map(|j| j - 1));
            for j in cands {
                if delta(&order, i, j) < -1e-12 {
                    order[i..=j].reverse();
                    for (k, &o) in order.iter().enumerate().take(j + 1).skip(i) {
                        pos[o] = k;
                    }
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let time = order.windows(2).map(|w| d(w[0], w[1])).sum();
    RootOrder { order, time }
}

/// `k` nearest workspace neighbours of every point via a bucket grid.
fn neighbor_lists(pts: &[Point], k: usize) -> Vec<Vec<usize>> {
    let m = pts.len();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let spans: Vec<f64> = (0..3).map(|a| hi[a] - lo[a]).filter(|w| *w > 0.0).collect();
    let h = if spans.is_empty() {
        1.0
    } else {
        let vol: f64 = spans.iter().product();
        2.0 * (vol / m as f64).powf(1.0 / spans.len() as f64)
    };
    let key = |p: &Point| -> [i64; 3] { [0, 1, 2].map(|a| ((p[a] - lo[a]) / h).floor() as i64) };
    let max_key = key(&hi);
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let reach = *max_key.iter().max().unwrap_or(&0);
    let ext = max_key.map(|k| k.min(1));
    (0..m)
        .into_par_iter()
        .map(|i| {
            let c = key(&pts[i]);
            let mut found: Vec<(f64, usize)> = Vec::new();
            for r in 0..=reach {
                let span = ext.map(|e| e * r);
                for dx in -span[0]..=span[0] {
                    for dy in -span[1]..=span[1] {
                        for dz in -span[2]..=span[2] {
                            if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                                continue;
                            }
                            if let Some(b) = buckets.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                                found.extend(b.iter().filter(|&&j| j != i).map(|&j| {
                                    ((0..3).map(|a| (pts[i][a] - pts[j][a]).powi(2)).sum::<f64>(), j)
                                }));
                            }
                        }
                    }
                }
                if found.len() >= k {
                    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    let bound = r as f64 * h;
                    if found[k - 1].0 <= bound * bound {
                        break;
                    }
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            found.truncate(k);
            found.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// Held-Karp optimum of the open path through `targets`, with a free start
/// and each target's heading chosen from `headings` evenly spaced values
/// (one value for models without heading).
pub fn exact_small_tsp(model: &DynamicsModel, targets: &[Point], headings: usize) -> Result<f64, PlannerError> {
    let n = targets.len();
    let h = if model.has_heading() { headings.max(1) } else { 1 };
    if n > EXACT_MAX_TARGETS || h > EXACT_MAX_HEADINGS {
        return Err(PlannerError::TooLarge { n, headings: h });
    }
    if n <= 1 {
        return Ok(0.0);
    }
    let states: Vec<Configuration> = (0..n * h)
        .map(|s| model.lift(&targets[s / h], TAU * (s % h) as f64 / h as f64))
        .collect();
    let ns = states.len();
    let w: Vec<f64> = (0..ns * ns).map(|k| model.distance(&states[k / ns], &states[k % ns])).collect();
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full * ns];
    for s in 0..ns {
        dp[(1 << (s / h)) * ns + s] = 0.0;
    }
    for mask in 1..full {
        for s in 0..ns {
            let cur = dp[mask * ns + s];
            if !cur.is_finite() {
                continue;
            }
            for t in 0..ns {
                let bit = 1 << (t / h);
                if mask & bit != 0 {
                    continue;
                }
                let slot = &mut dp[(mask | bit) * ns + t];
                *slot = slot.min(cur + w[s * ns + t]);
            }
        }
    }
    Ok(dp[(full - 1) * ns..].iter().copied().fold(f64::INFINITY, f64::min))
}

/// `C n` where `C` is 1.2 times the largest steer time among
/// `TRIVIAL_SAMPLES` random support configurations.
pub fn trivial_bound<R: Rng + ?Sized>(n: usize, model: &DynamicsModel, support: &BoxRegion, rng: &mut R) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let dim = model.workspace_dim();
    let qs: Vec<Configuration> = (0..TRIVIAL_SAMPLES)
        .map(|_| {
            let p = support.sample(dim, rng);
            model.lift(&p, rng.random_range(0.0..TAU))
        })
        .collect();
    let c = (0..qs.len())
        .into_par_iter()
        .map(|i| (0..qs.len()).map(|j| model.distance(&qs[i], &qs[j])).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    1.2 * c * n as f64
}
