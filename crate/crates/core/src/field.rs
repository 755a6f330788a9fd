//! Scalar fields on regular 1-3 dimensional grids with square cells.
//!
//! Cell `(i, j, k)` is stored at `i + nx * (j + ny * k)`, so the first axis
//! varies fastest. Quadrature is the midpoint rule.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("field file: {0}")]
    Io(#[from] std::io::Error),
    #[error("field JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct GridField<T> {
    origin: Vec<T>,
    cell_size: T,
    dims: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn new(origin: Vec<T>, cell_size: T, dims: Vec<usize>, values: Vec<T>) -> Result<Self, FieldError> {
        if dims.is_empty() || dims.len() > 3 || origin.len() != dims.len() {
            return Err(FieldError::Invalid(format!(
                "need 1-3 axes with matching origin, got dims {:?} origin len {}",
                dims,
                origin.len()
            )));
        }
        if !(cell_size > T::zero()) {
            return Err(FieldError::Invalid("cell size must be positive".into()));
        }
        let n: usize = dims.iter().product();
        if n == 0 || values.len() != n {
            return Err(FieldError::Invalid(format!("expected {n} values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::Invalid("values must be finite".into()));
        }
        Ok(Self { origin, cell_size, dims, values })
    }

    /// Field sampled at cell centers.
    pub fn from_fn(origin: Vec<T>, cell_size: T, dims: Vec<usize>, f: impl Fn(&[T; 3]) -> T) -> Result<Self, FieldError> {
        let n: usize = dims.iter().product();
        let mut probe = Self { origin, cell_size, dims, values: Vec::new() };
        probe.values = (0..n).map(|i| f(&probe.center(i))).collect();
        Self::new(probe.origin, probe.cell_size, probe.dims, probe.values)
    }

    /// `k x k` grid on the unit square.
    pub fn unit_square(k: usize, f: impl Fn(&[T; 3]) -> T) -> Self {
        Self::from_fn(vec![T::zero(); 2], T::one() / T::from_usize_lossy(k), vec![k, k], f)
            .expect("unit square grid is valid")
    }

    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    pub fn cell_size(&self) -> T {
        self.cell_size
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_measure(&self) -> T {
        self.cell_size.powi(self.ndim() as i32)
    }

    /// Upper corner of the grid along each axis.
    pub fn extent(&self) -> Vec<T> {
        self.origin
            .iter()
            .zip(&self.dims)
            .map(|(&o, &d)| o + self.cell_size * T::from_usize_lossy(d))
            .collect()
    }

    pub fn multi_index(&self, i: usize) -> [usize; 3] {
        let mut rest = i;
        let mut out = [0; 3];
        for (a, &d) in self.dims.iter().enumerate() {
            out[a] = rest % d;
            rest /= d;
        }
        out
    }

    pub fn center(&self, i: usize) -> [T; 3] {
        let idx = self.multi_index(i);
        let half = T::lit(0.5);
        let mut c = [T::zero(); 3];
        for a in 0..self.ndim() {
            c[a] = self.origin[a] + self.cell_size * (T::from_usize_lossy(idx[a]) + half);
        }
        c
    }

    /// Cell containing `p`, half-open on the upper side.
    pub fn locate(&self, p: &[T]) -> Option<usize> {
        let mut index = 0;
        let mut stride = 1;
        for (a, &pa) in p.iter().enumerate().take(self.ndim()) {
            let rel = (pa - self.origin[a]) / self.cell_size;
            if !(rel >= T::zero()) {
                return None;
            }
            let k = rel.floor().to_usize()?;
            if k >= self.dims[a] {
                return None;
            }
            index += k * stride;
            stride *= self.dims[a];
        }
        Some(index)
    }

    pub fn value_at(&self, p: &[T]) -> Option<T> {
        self.locate(p).map(|i| self.values[i])
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.dims == other.dims && self.origin == other.origin && self.cell_size == other.cell_size
    }

    pub fn check_aligned(&self, other: &Self) -> Result<(), FieldError> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(FieldError::GridMismatch(format!("{:?} vs {:?}", self.dims, other.dims)))
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self, FieldError> {
        self.check_aligned(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { values, ..self.clone() })
    }

    pub fn with_values(&self, values: Vec<T>) -> Result<Self, FieldError> {
        Self::new(self.origin.clone(), self.cell_size, self.dims.clone(), values)
    }

    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.cell_measure()
    }

    /// Rescaled to integrate to one.
    pub fn normalized(&self) -> Result<Self, FieldError> {
        let total = self.integral();
        if !(total > T::zero()) {
            return Err(FieldError::Invalid("field has no positive mass".into()));
        }
        Ok(self.map(|v| v / total))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), FieldError>
    where
        T: Serialize,
    {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, FieldError>
    where
        T: for<'de> Deserialize<'de>,
    {
        let raw: Self = serde_json::from_reader(r)?;
        Self::new(raw.origin, raw.cell_size, raw.dims, raw.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_is_first_axis_fastest() {
        let f = GridField::<f64>::unit_square(4, |c| c[0] + 10.0 * c[1]);
        assert_eq!(f.multi_index(5), [1, 1, 0]);
        assert_eq!(f.locate(&[0.3, 0.7]), Some(1 + 4 * 2));
        assert_eq!(f.locate(&[0.25, 0.0]), Some(1));
        assert_eq!(f.locate(&[1.0, 0.5]), None);
        assert!((f.values()[5] - (0.375 + 3.75)).abs() < 1e-12);
    }

    #[test]
    fn midpoint_integral_of_linear_density_is_exact() {
        let f = GridField::<f64>::unit_square(16, |c| 2.0 * c[0]);
        assert!((f.integral() - 1.0).abs() < 1e-12);
        let f32_field = GridField::<f32>::unit_square(16, |c| 2.0 * c[0]);
        assert!((f32_field.integral() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let f = GridField::<f64>::unit_square(3, |c| c[1]);
        let mut buf = Vec::new();
        f.write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"cell_size\""));
        let back = GridField::<f64>::read_json(text.as_bytes()).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"origin":[0,0],"cell_size":0.5,"dims":[2,2],"values":[1,2,3]}"#;
        assert!(GridField::<f64>::read_json(bad.as_bytes()).is_err());
    }
}
