//! Regularized envelopes, the density/agility interaction integral and the
//! constants of the tour-length bounds.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Point;
use crate::field::{FieldError, GridField};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("zeta must be positive, got {0}")]
    NonpositiveZeta(f64),
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn check_zeta<T: Real>(zeta: T) -> Result<(), BoundsError> {
    if zeta > T::zero() && zeta.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::NonpositiveZeta(zeta.as_f64()))
    }
}

fn dist<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Smallest `1/zeta`-Lipschitz function (on the grid centers) lying above
/// `max(h, zeta)`. Exact `O(cells^2)` sup-convolution.
pub fn upper_reg<T: Real>(h: &GridField<T>, zeta: T) -> Result<GridField<T>, BoundsError> {
    check_zeta(zeta)?;
    let slope = T::one() / zeta;
    let centers: Vec<[T; 3]> = (0..h.len()).map(|i| h.center(i)).collect();
    let floor: Vec<T> = h.values().iter().map(|&v| v.max(zeta)).collect();
    let values = centers
        .par_iter()
        .map(|y| {
            centers
                .iter()
                .zip(&floor)
                .map(|(yp, &v)| v - slope * dist(y, yp))
                .fold(T::neg_infinity(), T::max)
        })
        .collect();
    Ok(h.with_values(values)?)
}

/// Largest `1/zeta`-Lipschitz function lying below `min(h, 1/zeta)`.
pub fn lower_reg<T: Real>(h: &GridField<T>, zeta: T) -> Result<GridField<T>, BoundsError> {
    check_zeta(zeta)?;
    let slope = T::one() / zeta;
    let centers: Vec<[T; 3]> = (0..h.len()).map(|i| h.center(i)).collect();
    let ceil: Vec<T> = h.values().iter().map(|&v| v.min(slope)).collect();
    let values = centers
        .par_iter()
        .map(|y| {
            centers
                .iter()
                .zip(&ceil)
                .map(|(yp, &v)| v + slope * dist(y, yp))
                .fold(T::infinity(), T::min)
        })
        .collect();
    Ok(h.with_values(values)?)
}

/// `J = int f^(1 - 1/gamma) g^(-1/gamma)` over the cells where `f > 0`.
pub fn interaction_integral<T: Real>(f: &GridField<T>, g: &GridField<T>, gamma: T) -> Result<T, BoundsError> {
    f.check_aligned(g)?;
    let a = T::one() - gamma.recip();
    let b = -gamma.recip();
    let mut total = T::zero();
    for (&fv, &gv) in f.values().iter().zip(g.values()) {
        if fv > T::zero() {
            if !(gv > T::zero()) {
                return Err(BoundsError::Invalid(format!("agility must be positive, got {gv}")));
            }
            total = total + fv.powf(a) * gv.powf(b);
        }
    }
    Ok(total * f.cell_measure())
}

/// `int_region g^-1`. `region` selects cells; `None` means the whole grid.
pub fn integral_of_inverse<T: Real>(g: &GridField<T>, region: Option<&[bool]>) -> T {
    let inside = |i: usize| region.is_none_or(|r| r[i]);
    g.values()
        .iter()
        .enumerate()
        .filter(|&(i, _)| inside(i))
        .map(|(_, &v)| v.recip())
        .sum::<T>()
        * g.cell_measure()
}

/// `(xi, beta)` with `beta = (1 + xi) r^gamma`, `r = 3/2` for symmetric
/// dynamics and `2` otherwise. Natural logarithm.
pub fn beta_constant<T: Real>(b: u64, gamma: T, symmetric: bool) -> (T, T) {
    let r = if symmetric { T::lit(1.5) } else { T::lit(2.0) };
    let rg = r.powf(gamma);
    let lb = T::from_u64(b).expect("b representable").ln();
    let three = T::lit(3.0);
    let xi = if lb > rg { three * lb / rg } else { three * (lb / rg).sqrt() };
    (xi, (T::one() + xi) * rg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: u64,
    pub gamma: f64,
    pub beta: f64,
    pub s: f64,
    pub alpha: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub lower: f64,
    pub upper: f64,
    pub adversarial_lower: f64,
    pub adversarial_upper: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    pub n: u64,
    pub delta: f64,
    pub beta: f64,
    pub s: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub j: f64,
    pub int_g_inv: f64,
}

pub fn bound_report(inp: &BoundInputs) -> Result<BoundReport, BoundsError> {
    if !(inp.alpha > 0.0 && inp.alpha <= 1.0) {
        return Err(BoundsError::AlphaOutOfRange(inp.alpha));
    }
    let positive = [inp.delta, inp.beta, inp.s, inp.gamma, inp.j, inp.int_g_inv];
    if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(BoundsError::Invalid(format!("bound inputs must be positive: {inp:?}")));
    }
    let growth = (inp.n as f64).powf(1.0 - 1.0 / inp.gamma);
    let adv = inp.int_g_inv.powf(1.0 / inp.gamma);
    let alpha_term = inp.alpha.powf(-1.0 / inp.gamma);
    Ok(BoundReport {
        n: inp.n,
        gamma: inp.gamma,
        beta: inp.beta,
        s: inp.s,
        alpha: inp.alpha,
        j: inp.j,
        lower: (1.0 - inp.delta) / inp.beta * growth * inp.j,
        upper: (1.0 + inp.delta) * 12.0 * inp.s * alpha_term * growth * inp.j,
        adversarial_lower: (1.0 - inp.delta) / inp.beta * growth * adv,
        adversarial_upper: (1.0 + inp.delta) * 6.0 * inp.s * alpha_term * growth * adv,
        delta: inp.delta,
    })
}

/// Density proportional to `1/g` on `region` and zero elsewhere.
pub fn worst_case_density<T: Real>(g: &GridField<T>, region: Option<&[bool]>) -> Result<GridField<T>, BoundsError> {
    if g.values().iter().any(|&v| !(v > T::zero())) {
        return Err(BoundsError::Invalid("agility must be positive".into()));
    }
    let values = g
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if region.is_none_or(|r| r[i]) { v.recip() } else { T::zero() })
        .collect();
    Ok(g.with_values(values)?.normalized()?)
}

/// `(int g^-1)^(1/gamma) - J(f, g)`; nonnegative by Hoelder's inequality.
pub fn holder_gap<T: Real>(
    f: &GridField<T>,
    g: &GridField<T>,
    gamma: T,
    region: Option<&[bool]>,
) -> Result<T, BoundsError> {
    let j = interaction_integral(f, g, gamma)?;
    Ok(integral_of_inverse(g, region).powf(gamma.recip()) - j)
}

/// Lucrativity `(f g)^(1/gamma)`.
pub fn lucrativity<T: Real>(f: &GridField<T>, g: &GridField<T>, gamma: T) -> Result<GridField<T>, BoundsError> {
    Ok(f.zip_map(g, |a, b| (a * b).powf(gamma.recip()))?)
}

/// Regularized lucrativity `(upper_reg(f) upper_reg(g))^(1/gamma)`.
pub fn cost_field<T: Real>(
    f: &GridField<T>,
    g: &GridField<T>,
    zeta: T,
    gamma: T,
) -> Result<GridField<T>, BoundsError> {
    f.check_aligned(g)?;
    let fr = upper_reg(f, zeta)?;
    let gr = upper_reg(g, zeta)?;
    lucrativity(&fr, &gr, gamma)
}

/// Cell-inverse sampler for a density field.
#[derive(Debug, Clone)]
pub struct DensitySampler<T> {
    field: GridField<T>,
    index: WeightedIndex<f64>,
}

impl<T: Real> DensitySampler<T> {
    pub fn new(f: &GridField<T>) -> Result<Self, BoundsError> {
        if f.values().iter().any(|&v| v < T::zero()) {
            return Err(BoundsError::Invalid("density must be nonnegative".into()));
        }
        let weights: Vec<f64> = f.values().iter().map(|v| v.as_f64()).collect();
        let index = WeightedIndex::new(&weights).map_err(|e| BoundsError::Invalid(e.to_string()))?;
        Ok(Self { field: f.clone(), index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let cell = self.index.sample(rng);
        let c = self.field.center(cell);
        let h = self.field.cell_size().as_f64();
        let mut p = [0.0; 3];
        for (a, pa) in p.iter_mut().enumerate().take(self.field.ndim()) {
            *pa = c[a].as_f64() + h * (rng.random::<f64>() - 0.5);
        }
        p
    }
}

/// `n` iid points from density `f`.
pub fn sample_density<T: Real, R: Rng + ?Sized>(f: &GridField<T>, n: usize, rng: &mut R) -> Result<Vec<Point>, BoundsError> {
    let sampler = DensitySampler::new(f)?;
    Ok((0..n).map(|_| sampler.sample(rng)).collect())
}
