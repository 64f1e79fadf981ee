use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniformly spaced sample positions `start + i * step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Grid(format!(
                "step must be positive and finite, got {step}"
            )));
        }
        if !start.is_finite() {
            return Err(Error::Grid("grid start must be finite".into()));
        }
        if len < 2 {
            return Err(Error::Grid(format!(
                "grid needs at least two points, got {len}"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// Grid of `len` points symmetric about zero with the given spacing.
    pub fn symmetric(step: f64, len: usize) -> Result<Self> {
        Self::new(-0.5 * step * (len as f64 - 1.0), step, len)
    }

    /// Evenly spaced points covering `[lo, hi]` inclusive.
    pub fn linspace(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Grid(format!("empty interval [{lo}, {hi}]")));
        }
        if len < 2 {
            return Err(Error::Grid(format!(
                "grid needs at least two points, got {len}"
            )));
        }
        Self::new(lo, (hi - lo) / (len as f64 - 1.0), len)
    }

    /// Validate that `points` is strictly increasing with relative spacing
    /// deviation below `rel_tol`, and return the equivalent uniform grid.
    pub fn from_points(points: &[f64], rel_tol: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Grid("need at least two grid points".into()));
        }
        let n = points.len();
        let step = (points[n - 1] - points[0]) / (n as f64 - 1.0);
        if !(step > 0.0) {
            return Err(Error::Grid("grid must be strictly increasing".into()));
        }
        for (i, w) in points.windows(2).enumerate() {
            let d = w[1] - w[0];
            if d <= 0.0 {
                return Err(Error::Grid(format!(
                    "grid not strictly increasing at row {}",
                    i + 1
                )));
            }
            if ((d - step) / step).abs() >= rel_tol {
                return Err(Error::Grid(format!(
                    "non-uniform spacing at row {}: {d} vs mean {step}",
                    i + 1
                )));
            }
        }
        Self::new(points[0], step, n)
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }

    /// True when the grid is its own mirror image under `x -> -x`.
    pub fn is_symmetric(&self) -> bool {
        (self.start + self.end()).abs() <= 1e-9 * self.step
    }
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_grid_mirrors() {
        let g = UniformGrid::symmetric(0.25, 8).unwrap();
        assert!(g.is_symmetric());
        assert!((g.at(0) + g.at(7)).abs() < 1e-15);
        let g = UniformGrid::new(-1.0, 0.5, 4).unwrap();
        assert!(!g.is_symmetric());
    }

    #[test]
    fn from_points_rejects_irregular() {
        assert!(UniformGrid::from_points(&[0.0, 1.0, 2.0, 3.0], 1e-6).is_ok());
        assert!(UniformGrid::from_points(&[0.0, 1.0, 2.01, 3.0], 1e-6).is_err());
        assert!(UniformGrid::from_points(&[0.0, 1.0, 1.0, 3.0], 1e-6).is_err());
        assert!(UniformGrid::from_points(&[3.0, 2.0, 1.0], 1e-6).is_err());
    }

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = UniformGrid::linspace(0.0, 2.0, 11).unwrap();
        let v: Vec<f64> = g.points().iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&v, g.step) - 8.0).abs() < 1e-12);
    }
}
