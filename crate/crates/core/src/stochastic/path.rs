use rand::Rng;

use super::grid::TimeGrid;
use super::rng::{standard_normal, RngSeed};
use crate::error::{Error, Result};

/// Real-valued path sampled on every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "path has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample path"));
        }
        Ok(Self { grid, values })
    }

    /// Caller guarantees length; finiteness is checked in debug builds.
    pub(crate) fn from_vec(grid: TimeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: TimeGrid, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let values = grid.points().enumerate().map(|(k, t)| f(k, t)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn increment(&self, k: usize) -> f64 {
        self.values[k + 1] - self.values[k]
    }

    pub fn increments(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Path restricted to the first `k` cells of its grid.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        let grid = self.grid.truncate(k)?;
        Ok(Self { grid, values: self.values[..=k].to_vec() })
    }

    /// Path observed on the grid coarsened by `factor`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Ok(Self { grid, values })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Standard Brownian motion on `grid`, started at 0.
pub fn sample_brownian(grid: &TimeGrid, seed: RngSeed) -> SamplePath {
    sample_brownian_with(grid, &mut seed.rng())
}

/// Standard Brownian motion drawn from an existing generator.
pub fn sample_brownian_with<R: Rng + ?Sized>(grid: &TimeGrid, rng: &mut R) -> SamplePath {
    let sd = grid.step().sqrt();
    let mut values = Vec::with_capacity(grid.len());
    let mut w = 0.0;
    values.push(w);
    for _ in 0..grid.n_steps() {
        w += sd * standard_normal(rng);
        values.push(w);
    }
    SamplePath::from_vec(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::make_uniform_grid;

    fn variance(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
        (v, ((m4 - v * v) / n).sqrt())
    }

    #[test]
    fn unit_endpoint_variance() {
        let g = make_uniform_grid(0.0, 1.0, 1).unwrap();
        let ends: Vec<f64> =
            (0..100_000).map(|i| sample_brownian(&g, RngSeed::new(3, i)).last()).collect();
        let (v, se) = variance(&ends);
        assert!((v - 1.0).abs() < 3.0 * se, "var {v} se {se}");
    }

    #[test]
    fn variance_grows_linearly() {
        let g = make_uniform_grid(0.0, 4.0, 4).unwrap();
        let ends: Vec<f64> =
            (0..100_000).map(|i| sample_brownian(&g, RngSeed::new(4, i)).last()).collect();
        let (v, se) = variance(&ends);
        assert!((v - 4.0).abs() < 4.0 * se, "var {v} se {se}");
    }

    #[test]
    fn deterministic_and_starts_at_zero() {
        let g = make_uniform_grid(0.0, 1.0, 64).unwrap();
        let a = sample_brownian(&g, RngSeed::new(9, 2));
        assert_eq!(a, sample_brownian(&g, RngSeed::new(9, 2)));
        assert_eq!(a.value(0), 0.0);
    }

    #[test]
    fn length_and_finiteness_checked() {
        let g = make_uniform_grid(0.0, 1.0, 2).unwrap();
        assert!(SamplePath::new(g, vec![0.0, 1.0]).is_err());
        assert!(SamplePath::new(g, vec![0.0, f64::NAN, 1.0]).is_err());
    }
}
