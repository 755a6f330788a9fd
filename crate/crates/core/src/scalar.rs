//! Scalar abstractions.
//!
//! Field math, bound constants and concentration formulas are written against
//! [`Real`] (any `f32`/`f64`). Hierarchical collection costs are sums of
//! powers of `1/s`, so they are written against [`Scalar`], which also admits
//! exact rationals for oracle comparisons.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// floating point: f32 or f64
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ring-like scalar used for tree-game costs. Implemented for floats and for
/// exact rationals.
pub trait Scalar: Num + Clone + PartialOrd + Debug + Send + Sync {
    fn from_u64(v: u64) -> Self;

    fn to_f64_lossy(&self) -> f64;

    /// `base^(-k)`.
    fn inv_pow(base: u64, k: u32) -> Self {
        let mut den = Self::one();
        let b = Self::from_u64(base);
        for _ in 0..k {
            den = den * b.clone();
        }
        Self::one() / den
    }
}

impl Scalar for f64 {
    fn from_u64(v: u64) -> Self {
        v as f64
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    fn inv_pow(base: u64, k: u32) -> Self {
        (base as f64).powi(-(k as i32))
    }
}

impl Scalar for f32 {
    fn from_u64(v: u64) -> Self {
        v as f32
    }

    fn to_f64_lossy(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for Ratio<i64> {
    fn from_u64(v: u64) -> Self {
        Ratio::from_integer(i64::try_from(v).expect("fits in i64"))
    }

    fn to_f64_lossy(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Scalar for BigRational {
    fn from_u64(v: u64) -> Self {
        Ratio::from_integer(BigInt::from(v))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_pow_agrees_across_scalars() {
        let exact = <Ratio<i64> as Scalar>::inv_pow(3, 4);
        assert_eq!(exact, Ratio::new(1, 81));
        let float = <f64 as Scalar>::inv_pow(3, 4);
        assert!((float - 1.0 / 81.0).abs() < 1e-15);
        let big = <BigRational as Scalar>::inv_pow(2, 10);
        assert!((big.to_f64_lossy() - 1.0 / 1024.0).abs() < 1e-18);
    }

    #[test]
    fn lit_roundtrip() {
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Real>::from_usize_lossy(7), 7.0);
    }
}
