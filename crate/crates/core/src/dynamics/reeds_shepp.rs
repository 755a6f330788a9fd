//! Shortest Reeds-Shepp words for a unit-radius car.
//!
//! The goal is given in the start frame as `(x, y, phi)`. Each family solver
//! handles one canonical word; the other words in the family come from the
//! time-flip `(x, y, phi) -> (-x, y, -phi)`, the reflection
//! `(x, y, phi) -> (x, -y, -phi)`, their composition, and (for some families)
//! reading the word backwards.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

const ZERO: f64 = 10.0 * f64::EPSILON;
const ENDPOINT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Steering {
    Left,
    Right,
    Straight,
}

use Steering::{Left as L, Right as R, Straight as S};

const WORDS: [&[Steering]; 18] = [
    &[L, R, L],
    &[R, L, R],
    &[L, R, L, R],
    &[R, L, R, L],
    &[L, R, S, L],
    &[R, L, S, R],
    &[L, S, R, L],
    &[R, S, L, R],
    &[L, R, S, R],
    &[R, L, S, L],
    &[R, S, R, L],
    &[L, S, L, R],
    &[L, S, R],
    &[R, S, L],
    &[L, S, L],
    &[R, S, R],
    &[L, R, S, L, R],
    &[R, L, S, R, L],
];

/// A word with signed segment lengths; negative means driving backwards.
/// Arc lengths are turning angles (unit radius).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsPath {
    word: usize,
    lengths: [f64; 5],
}

impl RsPath {
    pub fn segments(&self) -> impl Iterator<Item = (Steering, f64)> + '_ {
        WORDS[self.word].iter().copied().zip(self.lengths)
    }

    pub fn length(&self) -> f64 {
        self.lengths.iter().map(|l| l.abs()).sum()
    }

    /// Endpoint of the word started at the origin facing +x.
    pub fn endpoint(&self) -> (f64, f64, f64) {
        let (mut x, mut y, mut phi) = (0.0, 0.0, 0.0);
        for (steer, v) in self.segments() {
            match steer {
                Steering::Left => {
                    x += (phi + v).sin() - phi.sin();
                    y += -(phi + v).cos() + phi.cos();
                    phi += v;
                }
                Steering::Right => {
                    x += -(phi - v).sin() + phi.sin();
                    y += (phi - v).cos() - phi.cos();
                    phi -= v;
                }
                Steering::Straight => {
                    x += v * phi.cos();
                    y += v * phi.sin();
                }
            }
        }
        (x, y, phi)
    }
}

fn mod2pi(x: f64) -> f64 {
    let mut v = x % TAU;
    if v < -PI {
        v += TAU;
    } else if v > PI {
        v -= TAU;
    }
    v
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x))
}

fn tau_omega(u: f64, v: f64, xi: f64, eta: f64, phi: f64) -> (f64, f64) {
    let delta = mod2pi(u - v);
    let a = u.sin() - delta.sin();
    let b = u.cos() - delta.cos() - 1.0;
    let t1 = (eta * a - xi * b).atan2(xi * a + eta * b);
    let t2 = 2.0 * (delta.cos() - v.cos() - u.cos()) + 3.0;
    let tau = if t2 < 0.0 { mod2pi(t1 + PI) } else { mod2pi(t1) };
    (tau, mod2pi(tau - u + v - phi))
}

fn lp_sp_lp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u, t) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if t >= -ZERO {
        let v = mod2pi(phi - t);
        if v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_sp_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u1, t1) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    let u1 = u1 * u1;
    if u1 >= 4.0 {
        let u = (u1 - 4.0).sqrt();
        let theta = 2.0f64.atan2(u);
        let t = mod2pi(t1 + theta);
        let v = mod2pi(t - phi);
        if t >= -ZERO && v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_l(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u1, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if u1 <= 4.0 {
        let u = -2.0 * (0.25 * u1).asin();
        let t = mod2pi(theta + 0.5 * u + PI);
        let v = mod2pi(phi - t + u);
        if t >= -ZERO && u <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rup_lum_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = 0.25 * (2.0 + xi.hypot(eta));
    if rho <= 1.0 {
        let u = rho.acos();
        let (t, v) = tau_omega(u, -u, xi, eta, phi);
        if t >= -ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rum_lum_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = (20.0 - xi * xi - eta * eta) / 16.0;
    if (0.0..=1.0).contains(&rho) {
        let u = -rho.acos();
        if u >= -FRAC_PI_2 {
            let (t, v) = tau_omega(u, u, xi, eta, phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

fn lp_rm_sm_lm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (rho, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if rho >= 2.0 {
        let r = (rho * rho - 4.0).sqrt();
        let u = 2.0 - r;
        let t = mod2pi(theta + r.atan2(-2.0));
        let v = mod2pi(phi - FRAC_PI_2 - t);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_sm_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, theta) = polar(-eta, xi);
    if rho >= 2.0 {
        let t = theta;
        let u = 2.0 - rho;
        let v = mod2pi(t + FRAC_PI_2 - phi);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_s_lm_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, _) = polar(xi, eta);
    if rho >= 2.0 {
        let u = 4.0 - (rho * rho - 4.0).sqrt();
        if u <= ZERO {
            let t = mod2pi(((4.0 - u) * xi - 2.0 * eta).atan2(-2.0 * xi + (u - 4.0) * eta));
            let v = mod2pi(t - phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

type Solver = fn(f64, f64, f64) -> Option<(f64, f64, f64)>;

/// Runs `solver` on the four symmetric images of the goal. `build` maps the
/// canonical `(t, u, v)` to a segment list; `words` gives the word used for
/// the plain/time-flipped and reflected/both images.
fn family<F>(
    goal: (f64, f64, f64),
    solver: Solver,
    words: (usize, usize),
    build: F,
    emit: &mut impl FnMut(usize, [f64; 5]),
) where
    F: Fn(f64, f64, f64) -> [f64; 5],
{
    let (x, y, phi) = goal;
    let neg = |a: [f64; 5]| a.map(|v| -v);
    if let Some((t, u, v)) = solver(x, y, phi) {
        emit(words.0, build(t, u, v));
    }
    if let Some((t, u, v)) = solver(-x, y, -phi) {
        emit(words.0, neg(build(t, u, v)));
    }
    if let Some((t, u, v)) = solver(x, -y, -phi) {
        emit(words.1, build(t, u, v));
    }
    if let Some((t, u, v)) = solver(-x, -y, phi) {
        emit(words.1, neg(build(t, u, v)));
    }
}

fn candidates(x: f64, y: f64, phi: f64, mut emit: impl FnMut(usize, [f64; 5])) {
    let g = (x, y, phi);
    let back = (x * phi.cos() + y * phi.sin(), x * phi.sin() - y * phi.cos(), phi);
    let h = -FRAC_PI_2;

    family(g, lp_sp_lp, (14, 15), |t, u, v| [t, u, v, 0.0, 0.0], &mut emit);
    family(g, lp_sp_rp, (12, 13), |t, u, v| [t, u, v, 0.0, 0.0], &mut emit);

    family(g, lp_rm_l, (0, 1), |t, u, v| [t, u, v, 0.0, 0.0], &mut emit);
    family(back, lp_rm_l, (0, 1), |t, u, v| [v, u, t, 0.0, 0.0], &mut emit);

    family(g, lp_rup_lum_rm, (2, 3), |t, u, v| [t, u, -u, v, 0.0], &mut emit);
    family(g, lp_rum_lum_rp, (2, 3), |t, u, v| [t, u, u, v, 0.0], &mut emit);

    family(g, lp_rm_sm_lm, (4, 5), |t, u, v| [t, h, u, v, 0.0], &mut emit);
    family(g, lp_rm_sm_rm, (8, 9), |t, u, v| [t, h, u, v, 0.0], &mut emit);
    family(back, lp_rm_sm_lm, (6, 7), |t, u, v| [v, u, h, t, 0.0], &mut emit);
    family(back, lp_rm_sm_rm, (10, 11), |t, u, v| [v, u, h, t, 0.0], &mut emit);

    family(g, lp_rm_s_lm_rp, (16, 17), |t, u, v| [t, h, u, h, v], &mut emit);
}

fn reaches(path: &RsPath, x: f64, y: f64, phi: f64) -> bool {
    let (ex, ey, ephi) = path.endpoint();
    (ex - x).abs() < ENDPOINT_TOL && (ey - y).abs() < ENDPOINT_TOL && mod2pi(ephi - phi).abs() < ENDPOINT_TOL
}

/// Shortest word from the origin (facing +x) to `(x, y, phi)`, unit radius.
/// Candidates whose integrated endpoint misses the goal are discarded.
pub fn shortest(x: f64, y: f64, phi: f64) -> RsPath {
    let mut best: Option<RsPath> = None;
    let mut best_len = f64::INFINITY;
    candidates(x, y, phi, |word, lengths| {
        let path = RsPath { word, lengths };
        let len = path.length();
        if len < best_len && reaches(&path, x, y, phi) {
            best_len = len;
            best = Some(path);
        }
    });
    best.expect("some Reeds-Shepp word always reaches the goal")
}

pub fn shortest_length(x: f64, y: f64, phi: f64) -> f64 {
    shortest(x, y, phi).length()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn straight_ahead_is_a_line() {
        let p = shortest(0.7, 0.0, 0.0);
        assert!((p.length() - 0.7).abs() < 1e-9);
        let back = shortest(-0.7, 0.0, 0.0);
        assert!((back.length() - 0.7).abs() < 1e-9);
    }

    #[test]
    fn quarter_turn() {
        let p = shortest(1.0, 1.0, FRAC_PI_2);
        assert!((p.length() - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn every_goal_is_reached_and_metric_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let x = rng.random_range(-4.0..4.0);
            let y = rng.random_range(-4.0..4.0);
            let phi = rng.random_range(-PI..PI);
            let p = shortest(x, y, phi);
            assert!(reaches(&p, x, y, phi));
            // goal -> origin expressed in the goal frame
            let (c, s) = (phi.cos(), phi.sin());
            let q = shortest(-x * c - y * s, x * s - y * c, -phi);
            assert!((p.length() - q.length()).abs() < 1e-7, "{x} {y} {phi}");
        }
    }

    #[test]
    fn triangle_inequality_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let compose = |a: (f64, f64, f64), b: (f64, f64, f64)| {
            let (c, s) = (a.2.cos(), a.2.sin());
            (a.0 + c * b.0 - s * b.1, a.1 + s * b.0 + c * b.1, a.2 + b.2)
        };
        for _ in 0..500 {
            let a = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-PI..PI));
            let b = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-PI..PI));
            let c = compose(a, b);
            let direct = shortest_length(c.0, c.1, mod2pi(c.2));
            let via = shortest_length(a.0, a.1, a.2) + shortest_length(b.0, b.1, b.2);
            assert!(direct <= via + 1e-7);
        }
    }
}
