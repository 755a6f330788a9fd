//! Symmetric vehicle models.
//!
//! Configurations and workspace points are stored in fixed `[f64; 3]` arrays:
//! planar models leave the third workspace coordinate at zero and heading
//! models keep `theta` in the third configuration slot.

pub mod reeds_shepp;

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Configuration = [f64; 3];
pub type Point = [f64; 3];
pub type Control = [f64; 3];

const CONTROL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("control {0:?} outside the admissible set")]
    ControlOutOfRange(Control),
    #[error("negative duration {0}")]
    NegativeDuration(f64),
    #[error("model is not symmetric")]
    NotSymmetric,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("reachable horizon must be positive, got {0}")]
    NonpositiveHorizon(f64),
}

/// Speed multiplier field of the scaled Euclidean model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Constant(f64),
    /// `left` for `x < x_split`, `right` otherwise.
    SplitX { x_split: f64, left: f64, right: f64 },
}

impl Sigma {
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            Sigma::Constant(s) => s,
            Sigma::SplitX { x_split, left, right } => {
                if x < x_split {
                    left
                } else {
                    right
                }
            }
        }
    }

    pub fn min(&self) -> f64 {
        match *self {
            Sigma::Constant(s) => s,
            Sigma::SplitX { left, right, .. } => left.min(right),
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            Sigma::Constant(s) => s,
            Sigma::SplitX { left, right, .. } => left.max(right),
        }
    }
}

fn unit_speed() -> f64 {
    1.0
}

fn unit_sigma() -> Sigma {
    Sigma::Constant(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DynamicsModel {
    Euclidean2 {
        #[serde(default = "unit_speed")]
        c_pi: f64,
    },
    Euclidean3 {
        #[serde(default = "unit_speed")]
        c_pi: f64,
    },
    ScaledEuclidean2 {
        #[serde(default = "unit_speed")]
        c_pi: f64,
        #[serde(default = "unit_sigma")]
        sigma: Sigma,
    },
    ReedsShepp {
        #[serde(default = "unit_speed")]
        c_pi: f64,
        #[serde(default = "unit_speed")]
        r_min: f64,
    },
    DiffDrive {
        #[serde(default = "unit_speed")]
        c_pi: f64,
        #[serde(default = "unit_speed")]
        omega_max: f64,
    },
}

/// Piecewise-constant control sequence from a start configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: Configuration,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub control: Control,
    pub duration: f64,
}

pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed angle in `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = normalize_angle(theta);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Unicycle with constant speed and turn rate, closed form.
fn unicycle(q: &Configuration, speed: f64, omega: f64, dt: f64) -> Configuration {
    let th = q[2];
    if omega.abs() < 1e-12 {
        [q[0] + speed * dt * th.cos(), q[1] + speed * dt * th.sin(), normalize_angle(th)]
    } else {
        let th1 = th + omega * dt;
        let r = speed / omega;
        [q[0] + r * (th1.sin() - th.sin()), q[1] - r * (th1.cos() - th.cos()), normalize_angle(th1)]
    }
}

impl DynamicsModel {
    pub fn euclidean2() -> Self {
        Self::Euclidean2 { c_pi: 1.0 }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Euclidean2 { .. } => "euclidean2",
            Self::Euclidean3 { .. } => "euclidean3",
            Self::ScaledEuclidean2 { .. } => "scaled_euclidean2",
            Self::ReedsShepp { .. } => "reeds_shepp",
            Self::DiffDrive { .. } => "diff_drive",
        }
    }

    pub fn c_pi(&self) -> f64 {
        match *self {
            Self::Euclidean2 { c_pi }
            | Self::Euclidean3 { c_pi }
            | Self::ScaledEuclidean2 { c_pi, .. }
            | Self::ReedsShepp { c_pi, .. }
            | Self::DiffDrive { c_pi, .. } => c_pi,
        }
    }

    /// Largest workspace speed any admissible control produces.
    pub fn speed_limit(&self) -> f64 {
        match self {
            Self::ScaledEuclidean2 { c_pi, sigma } => c_pi * sigma.max(),
            other => other.c_pi(),
        }
    }

    pub fn config_dim(&self) -> usize {
        match self {
            Self::Euclidean2 { .. } | Self::ScaledEuclidean2 { .. } => 2,
            _ => 3,
        }
    }

    pub fn workspace_dim(&self) -> usize {
        match self {
            Self::Euclidean3 { .. } => 3,
            _ => 2,
        }
    }

    pub fn has_heading(&self) -> bool {
        matches!(self, Self::ReedsShepp { .. } | Self::DiffDrive { .. })
    }

    pub fn symmetric(&self) -> bool {
        true
    }

    pub fn validate(&self) -> Result<(), String> {
        let c = self.c_pi();
        if !(c > 0.0 && c.is_finite()) {
            return Err(format!("c_pi must be positive, got {c}"));
        }
        match *self {
            Self::ScaledEuclidean2 { sigma, .. } if !(sigma.min() > 0.0) => {
                Err(format!("sigma must be positive, got {sigma:?}"))
            }
            Self::ReedsShepp { r_min, .. } if !(r_min > 0.0) => Err(format!("r_min must be positive, got {r_min}")),
            Self::DiffDrive { omega_max, .. } if !(omega_max > 0.0) => {
                Err(format!("omega_max must be positive, got {omega_max}"))
            }
            _ => Ok(()),
        }
    }

    pub fn project(&self, q: &Configuration) -> Point {
        match self {
            Self::Euclidean3 { .. } => *q,
            _ => [q[0], q[1], 0.0],
        }
    }

    /// Configuration sitting over workspace point `x` with heading `theta`
    /// (ignored by models without heading).
    pub fn lift(&self, x: &Point, theta: f64) -> Configuration {
        match self {
            Self::Euclidean3 { .. } => *x,
            m if m.has_heading() => [x[0], x[1], normalize_angle(theta)],
            _ => [x[0], x[1], 0.0],
        }
    }

    pub fn check_control(&self, u: &Control) -> Result<(), DynamicsError> {
        let ok = match self {
            Self::Euclidean2 { .. } | Self::ScaledEuclidean2 { .. } => {
                norm(&u[..2]) <= 1.0 + CONTROL_TOL && u[2] == 0.0
            }
            Self::Euclidean3 { .. } => norm(u) <= 1.0 + CONTROL_TOL,
            Self::ReedsShepp { .. } | Self::DiffDrive { .. } => {
                u[..2].iter().all(|c| c.abs() <= 1.0 + CONTROL_TOL) && u[2] == 0.0
            }
        };
        if ok && u.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(DynamicsError::ControlOutOfRange(*u))
        }
    }

    pub fn integrate(&self, q: &Configuration, u: &Control, dt: f64) -> Result<Configuration, DynamicsError> {
        self.check_control(u)?;
        if dt < 0.0 {
            return Err(DynamicsError::NegativeDuration(dt));
        }
        Ok(self.advance(q, u, dt))
    }

    /// [`integrate`](Self::integrate) without admissibility checks.
    pub fn advance(&self, q: &Configuration, u: &Control, dt: f64) -> Configuration {
        match *self {
            Self::Euclidean2 { c_pi } => [q[0] + c_pi * u[0] * dt, q[1] + c_pi * u[1] * dt, 0.0],
            Self::Euclidean3 { c_pi } => {
                [q[0] + c_pi * u[0] * dt, q[1] + c_pi * u[1] * dt, q[2] + c_pi * u[2] * dt]
            }
            Self::ScaledEuclidean2 { c_pi, sigma } => scaled_advance(c_pi, &sigma, q, u, dt),
            Self::ReedsShepp { c_pi, r_min } => unicycle(q, c_pi * u[0], c_pi * u[0] * u[1] / r_min, dt),
            Self::DiffDrive { c_pi, omega_max } => unicycle(q, c_pi * u[0], omega_max * u[1], dt),
        }
    }

    /// Time-optimal (or, for the scaled model, straight-line) trajectory.
    pub fn steer(&self, q0: &Configuration, q1: &Configuration) -> Trajectory {
        let segments = match *self {
            Self::Euclidean2 { c_pi } | Self::Euclidean3 { c_pi } => {
                let d = [q1[0] - q0[0], q1[1] - q0[1], q1[2] - q0[2]];
                line_segment(&d, norm(&d) / c_pi)
            }
            Self::ScaledEuclidean2 { c_pi, sigma } => {
                let d = [q1[0] - q0[0], q1[1] - q0[1], 0.0];
                line_segment(&d, scaled_line_time(c_pi, &sigma, q0, q1))
            }
            Self::ReedsShepp { c_pi, r_min } => rs_segments(c_pi, r_min, q0, q1),
            Self::DiffDrive { c_pi, omega_max } => diff_segments(c_pi, omega_max, q0, q1),
        };
        Trajectory { start: *q0, segments }
    }

    /// Duration of [`steer`](Self::steer) without building the trajectory.
    pub fn distance(&self, q0: &Configuration, q1: &Configuration) -> f64 {
        match *self {
            Self::Euclidean2 { c_pi } => (q1[0] - q0[0]).hypot(q1[1] - q0[1]) / c_pi,
            Self::Euclidean3 { c_pi } => norm(&[q1[0] - q0[0], q1[1] - q0[1], q1[2] - q0[2]]) / c_pi,
            Self::ScaledEuclidean2 { c_pi, sigma } => scaled_line_time(c_pi, &sigma, q0, q1),
            Self::ReedsShepp { c_pi, r_min } => {
                let (x, y, phi) = rs_local(r_min, q0, q1);
                reeds_shepp::shortest_length(x, y, phi) * r_min / c_pi
            }
            Self::DiffDrive { c_pi, omega_max } => diff_plan(c_pi, omega_max, q0, q1).0,
        }
    }

    pub fn reverse_trajectory(&self, traj: &Trajectory) -> Result<Trajectory, DynamicsError> {
        if !self.symmetric() {
            return Err(DynamicsError::NotSymmetric);
        }
        let start = traj.end(self);
        let segments = traj
            .segments
            .iter()
            .rev()
            .map(|s| Segment { control: self.reverse_control(&s.control), duration: s.duration })
            .collect();
        Ok(Trajectory { start, segments })
    }

    fn reverse_control(&self, u: &Control) -> Control {
        match self {
            // backing along the same arc keeps the curvature sign
            Self::ReedsShepp { .. } => [-u[0], u[1], 0.0],
            _ => u.map(|c| -c),
        }
    }

    /// Workspace endpoints of random bang-bang trajectories of duration `eps`
    /// with 1 to 4 uniformly drawn switch times.
    pub fn sample_reachable<R: Rng + ?Sized>(
        &self,
        q: &Configuration,
        eps: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Point>, DynamicsError> {
        Ok(self.sample_reachable_configs(q, eps, n, rng)?.iter().map(|c| self.project(c)).collect())
    }

    /// Final configurations of the trajectories behind
    /// [`sample_reachable`](Self::sample_reachable).
    pub fn sample_reachable_configs<R: Rng + ?Sized>(
        &self,
        q: &Configuration,
        eps: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Configuration>, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::NoSamples);
        }
        if !(eps > 0.0) {
            return Err(DynamicsError::NonpositiveHorizon(eps));
        }
        let mut out = Vec::with_capacity(n);
        let mut cuts = [0.0f64; 6];
        for _ in 0..n {
            let k = rng.random_range(1..=4usize);
            cuts[0] = 0.0;
            for c in cuts.iter_mut().skip(1).take(k) {
                *c = rng.random_range(0.0..eps);
            }
            cuts[1..=k].sort_unstable_by(f64::total_cmp);
            cuts[k + 1] = eps;
            let mut p = *q;
            for w in cuts[..=k + 1].windows(2) {
                let u = self.random_extreme_control(rng);
                p = self.advance(&p, &u, w[1] - w[0]);
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Shortest steering time from `q` to any configuration over workspace
    /// point `p`; the free heading is searched over `headings` values.
    pub fn time_to_point(&self, q: &Configuration, p: &Point, headings: usize) -> f64 {
        if !self.has_heading() {
            return self.distance(q, &self.lift(p, 0.0));
        }
        (0..headings.max(1))
            .map(|h| self.distance(q, &self.lift(p, TAU * h as f64 / headings as f64)))
            .fold(f64::INFINITY, f64::min)
    }

    fn random_extreme_control<R: Rng + ?Sized>(&self, rng: &mut R) -> Control {
        match self {
            Self::Euclidean2 { .. } | Self::ScaledEuclidean2 { .. } => {
                let a = rng.random_range(0.0..TAU);
                [a.cos(), a.sin(), 0.0]
            }
            Self::Euclidean3 { .. } => {
                let z: f64 = rng.random_range(-1.0..1.0);
                let a = rng.random_range(0.0..TAU);
                let r = (1.0 - z * z).sqrt();
                [r * a.cos(), r * a.sin(), z]
            }
            Self::ReedsShepp { .. } => {
                let v = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let k = [-1.0, 0.0, 1.0][rng.random_range(0..3)];
                [v, k, 0.0]
            }
            Self::DiffDrive { .. } => {
                // drive straight or spin in place, each direction equally likely
                match rng.random_range(0..4) {
                    0 => [1.0, 0.0, 0.0],
                    1 => [-1.0, 0.0, 0.0],
                    2 => [0.0, 1.0, 0.0],
                    _ => [0.0, -1.0, 0.0],
                }
            }
        }
    }
}

fn line_segment(d: &[f64; 3], duration: f64) -> Vec<Segment> {
    let len = norm(d);
    if len == 0.0 {
        return Vec::new();
    }
    vec![Segment { control: d.map(|c| c / len), duration }]
}

fn scaled_advance(c: f64, sigma: &Sigma, q: &Configuration, u: &Control, dt: f64) -> Configuration {
    let mut p = [q[0], q[1], 0.0];
    let mut left = dt;
    loop {
        let (s, hit) = match *sigma {
            Sigma::Constant(s) => (s, f64::INFINITY),
            Sigma::SplitX { x_split, left: sl, right: sr } => {
                let on_left = p[0] < x_split || (p[0] == x_split && u[0] < 0.0);
                let s = if on_left { sl } else { sr };
                let vx = c * s * u[0];
                let hit = if (on_left && vx > 0.0) || (!on_left && vx < 0.0 && p[0] > x_split) {
                    (x_split - p[0]) / vx
                } else {
                    f64::INFINITY
                };
                (s, hit)
            }
        };
        if hit >= left {
            p[0] += c * s * u[0] * left;
            p[1] += c * s * u[1] * left;
            return p;
        }
        p[0] += c * s * u[0] * hit;
        p[1] += c * s * u[1] * hit;
        if let Sigma::SplitX { x_split, .. } = *sigma {
            p[0] = x_split;
        }
        left -= hit;
    }
}

fn scaled_line_time(c: f64, sigma: &Sigma, a: &Configuration, b: &Configuration) -> f64 {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    match *sigma {
        Sigma::Constant(s) => len / (c * s),
        Sigma::SplitX { x_split, left, right } => {
            let (x0, x1) = (a[0], b[0]);
            let left_frac = if x0 == x1 {
                if x0 < x_split {
                    1.0
                } else {
                    0.0
                }
            } else {
                let lo = x0.min(x1);
                let hi = x0.max(x1);
                ((x_split.clamp(lo, hi) - lo) / (hi - lo)).clamp(0.0, 1.0)
            };
            len * (left_frac / left + (1.0 - left_frac) / right) / c
        }
    }
}

/// Goal of `q1` in the frame of `q0`, scaled to unit turning radius.
fn rs_local(r_min: f64, q0: &Configuration, q1: &Configuration) -> (f64, f64, f64) {
    let (dx, dy) = (q1[0] - q0[0], q1[1] - q0[1]);
    let (c, s) = (q0[2].cos(), q0[2].sin());
    ((dx * c + dy * s) / r_min, (-dx * s + dy * c) / r_min, wrap_angle(q1[2] - q0[2]))
}

fn rs_segments(c_pi: f64, r_min: f64, q0: &Configuration, q1: &Configuration) -> Vec<Segment> {
    let (x, y, phi) = rs_local(r_min, q0, q1);
    let path = reeds_shepp::shortest(x, y, phi);
    path.segments()
        .filter(|(_, v)| *v != 0.0)
        .map(|(steer, v)| {
            let kappa = match steer {
                reeds_shepp::Steering::Left => 1.0,
                reeds_shepp::Steering::Right => -1.0,
                reeds_shepp::Steering::Straight => 0.0,
            };
            Segment { control: [v.signum(), kappa, 0.0], duration: v.abs() * r_min / c_pi }
        })
        .collect()
}

/// Rotate-translate-rotate, driving forwards or backwards, whichever is
/// faster. Returns `(time, first turn, signed distance, second turn)`.
fn diff_plan(c: f64, w: f64, q0: &Configuration, q1: &Configuration) -> (f64, f64, f64, f64) {
    let (dx, dy) = (q1[0] - q0[0], q1[1] - q0[1]);
    let d = dx.hypot(dy);
    if d == 0.0 {
        let a = wrap_angle(q1[2] - q0[2]);
        return (a.abs() / w, a, 0.0, 0.0);
    }
    let bearing = dy.atan2(dx);
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    for (heading, dist) in [(bearing, d), (bearing + PI, -d)] {
        let a1 = wrap_angle(heading - q0[2]);
        let a2 = wrap_angle(q1[2] - heading);
        let t = (a1.abs() + a2.abs()) / w + d / c;
        if t < best.0 {
            best = (t, a1, dist, a2);
        }
    }
    best
}

fn diff_segments(c: f64, w: f64, q0: &Configuration, q1: &Configuration) -> Vec<Segment> {
    let (_, a1, dist, a2) = diff_plan(c, w, q0, q1);
    let mut segs = Vec::with_capacity(3);
    if a1 != 0.0 {
        segs.push(Segment { control: [0.0, a1.signum(), 0.0], duration: a1.abs() / w });
    }
    if dist != 0.0 {
        segs.push(Segment { control: [dist.signum(), 0.0, 0.0], duration: dist.abs() / c });
    }
    if a2 != 0.0 {
        segs.push(Segment { control: [0.0, a2.signum(), 0.0], duration: a2.abs() / w });
    }
    segs
}

impl Trajectory {
    pub fn stationary(start: Configuration) -> Self {
        Self { start, segments: Vec::new() }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn end(&self, model: &DynamicsModel) -> Configuration {
        self.segments.iter().fold(self.start, |q, s| model.advance(&q, &s.control, s.duration))
    }

    /// Configuration at each segment boundary, starting with `start`.
    pub fn waypoints(&self, model: &DynamicsModel) -> Vec<Configuration> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut q = self.start;
        out.push(q);
        for s in &self.segments {
            q = model.advance(&q, &s.control, s.duration);
            out.push(q);
        }
        out
    }

    pub fn state_at(&self, model: &DynamicsModel, t: f64) -> Configuration {
        let mut q = self.start;
        let mut left = t.max(0.0);
        for s in &self.segments {
            if left <= s.duration {
                return model.advance(&q, &s.control, left);
            }
            q = model.advance(&q, &s.control, s.duration);
            left -= s.duration;
        }
        q
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn append(&mut self, other: Trajectory) {
        self.segments.extend(other.segments);
    }

    pub fn validate(&self, model: &DynamicsModel) -> Result<(), DynamicsError> {
        for s in &self.segments {
            model.check_control(&s.control)?;
            if s.duration < 0.0 {
                return Err(DynamicsError::NegativeDuration(s.duration));
            }
        }
        Ok(())
    }
}

/// Per-coordinate configuration mismatch, comparing headings modulo `2 pi`.
pub fn config_gap(model: &DynamicsModel, a: &Configuration, b: &Configuration) -> f64 {
    let lin = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
    let third = if model.has_heading() {
        wrap_angle(a[2] - b[2]).abs()
    } else {
        (a[2] - b[2]).abs()
    };
    lin.max(third)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    const RS: DynamicsModel = DynamicsModel::ReedsShepp { c_pi: 1.0, r_min: 1.0 };
    const DIFF: DynamicsModel = DynamicsModel::DiffDrive { c_pi: 1.0, omega_max: 1.0 };

    #[test]
    fn euclidean_straight_motion() {
        let m = DynamicsModel::euclidean2();
        let q = m.integrate(&[0.0; 3], &[1.0, 0.0, 0.0], 2.0).unwrap();
        assert_eq!(q, [2.0, 0.0, 0.0]);
        assert!(matches!(m.integrate(&[0.0; 3], &[1.0, 1.0, 0.0], 1.0), Err(DynamicsError::ControlOutOfRange(_))));
    }

    #[test]
    fn rs_left_quarter_arc_matches_fine_steps() {
        let u = [1.0, 1.0, 0.0];
        let q = RS.integrate(&[0.0; 3], &u, FRAC_PI_2).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-12 && (q[1] - 1.0).abs() < 1e-12 && (q[2] - FRAC_PI_2).abs() < 1e-12);
        // explicit midpoint steps of the raw ODE
        let steps = 200_000;
        let h = FRAC_PI_2 / steps as f64;
        let (mut x, mut y, mut th) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..steps {
            let tm = th + 0.5 * h;
            x += h * tm.cos();
            y += h * tm.sin();
            th += h;
        }
        assert!((q[0] - x).abs() < 1e-9 && (q[1] - y).abs() < 1e-9);
    }

    #[test]
    fn diff_drive_spins_in_place() {
        let q = DIFF.integrate(&[0.0; 3], &[0.0, 1.0, 0.0], PI).unwrap();
        assert!(q[0].abs() < 1e-12 && q[1].abs() < 1e-12 && (q[2] - PI).abs() < 1e-12);
    }

    #[test]
    fn projection_drops_heading() {
        assert_eq!(DynamicsModel::euclidean2().project(&[3.0, 4.0, 0.0]), [3.0, 4.0, 0.0]);
        assert_eq!(RS.project(&[1.0, 2.0, 0.5]), [1.0, 2.0, 0.0]);
        assert_eq!(DIFF.project(&[0.0, 0.0, PI]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn steer_examples() {
        let e = DynamicsModel::euclidean2();
        assert_eq!(e.steer(&[0.0; 3], &[3.0, 4.0, 0.0]).duration(), 5.0);
        let rs = RS.steer(&[0.0; 3], &[0.8, 0.0, 0.0]);
        assert!((rs.duration() - 0.8).abs() < 1e-12);
        let d = DIFF.steer(&[0.0; 3], &[1.0, 1.0, FRAC_PI_4]);
        assert!((d.duration() - (FRAC_PI_4 + SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn scaled_model_crosses_interface_exactly() {
        let m = DynamicsModel::ScaledEuclidean2 {
            c_pi: 1.0,
            sigma: Sigma::SplitX { x_split: 0.5, left: 1.0, right: 2.0 },
        };
        let a = [0.25, 0.5, 0.0];
        let b = [0.75, 0.5, 0.0];
        let traj = m.steer(&a, &b);
        assert!((traj.duration() - (0.25 + 0.125)).abs() < 1e-12);
        assert!(config_gap(&m, &traj.end(&m), &b) < 1e-12);
        let back = m.steer(&b, &a);
        assert!(config_gap(&m, &back.end(&m), &a) < 1e-12);
    }

    #[test]
    fn reversal_is_an_involution_with_swapped_ends() {
        let mut r = rng::from_seed(3);
        for model in [RS, DIFF, DynamicsModel::euclidean2()] {
            for _ in 0..50 {
                let q0 = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(0.0..TAU)];
                let q1 = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(0.0..TAU)];
                let q0 = model.lift(&model.project(&q0), q0[2]);
                let q1 = model.lift(&model.project(&q1), q1[2]);
                let t = model.steer(&q0, &q1);
                let rev = model.reverse_trajectory(&t).unwrap();
                assert!((rev.duration() - t.duration()).abs() < 1e-12);
                assert!(config_gap(&model, &rev.end(&model), &q0) < 1e-9);
                assert_eq!(model.reverse_trajectory(&rev).unwrap().segments, t.segments);
            }
        }
    }

    #[test]
    fn rs_reversed_left_arc_backs_up() {
        let t = Trajectory { start: [0.0; 3], segments: vec![Segment { control: [1.0, 1.0, 0.0], duration: 0.7 }] };
        let rev = RS.reverse_trajectory(&t).unwrap();
        assert_eq!(rev.segments[0].control, [-1.0, 1.0, 0.0]);
        assert!(config_gap(&RS, &rev.end(&RS), &[0.0; 3]) < 1e-12);
    }

    #[test]
    fn reachable_samples_respect_speed_limit() {
        let mut r = rng::from_seed(9);
        let e = DynamicsModel::Euclidean2 { c_pi: 2.0 };
        let pts = e.sample_reachable(&[1.0, 1.0, 0.0], 0.1, 5000, &mut r).unwrap();
        assert!(pts.iter().all(|p| (p[0] - 1.0).hypot(p[1] - 1.0) <= 0.2 + 1e-12));
        assert!(e.sample_reachable(&[0.0; 3], 0.1, 0, &mut r).is_err());
    }

    #[test]
    fn rs_reachable_lateral_displacement_is_second_order() {
        let mut r = rng::from_seed(10);
        let eps = 0.1;
        let pts = RS.sample_reachable(&[0.0; 3], eps, 20_000, &mut r).unwrap();
        // a single arc of length eps reaches lateral 1 - cos(eps)
        let bound = (1.0 - eps.cos()) * (1.0 + 1e-9);
        assert!(pts.iter().all(|p| p[1].abs() <= bound));
        assert!(bound <= eps * eps / 2.0);
    }
}
