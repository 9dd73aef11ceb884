use rand::Rng;

use super::grid::TimeGrid;
use super::path::SamplePath;
use super::rng::{standard_normal, RngSeed};
use crate::error::{Error, Result};

/// Time and snr grids of a Brownian sheet. Both must start at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetSpec {
    pub time: TimeGrid,
    pub snr: TimeGrid,
}

impl SheetSpec {
    pub fn new(time: TimeGrid, snr: TimeGrid) -> Result<Self> {
        time.starts_at_zero()?;
        snr.starts_at_zero()?;
        Ok(Self { time, snr })
    }
}

/// Brownian sheet stored as independent rectangle increments.
///
/// Cell `(i, j)` covers `[t_i, t_{i+1}) x [g_j, g_{j+1})` and has variance
/// `dt * dg`, so `W(t, g)` has variance `t * g`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianSheetGrid {
    time_grid: TimeGrid,
    snr_grid: TimeGrid,
    increments: Vec<f64>,
}

/// Samples a Brownian sheet on `spec`.
pub fn sample_sheet(spec: &SheetSpec, seed: RngSeed) -> Result<BrownianSheetGrid> {
    BrownianSheetGrid::sample_with(spec, &mut seed.rng())
}

impl BrownianSheetGrid {
    pub fn sample_with<R: Rng + ?Sized>(spec: &SheetSpec, rng: &mut R) -> Result<Self> {
        let spec = SheetSpec::new(spec.time, spec.snr)?;
        let sd = (spec.time.step() * spec.snr.step()).sqrt();
        let n = spec.time.n_steps() * spec.snr.n_steps();
        let increments = (0..n).map(|_| sd * standard_normal(rng)).collect();
        Ok(Self { time_grid: spec.time, snr_grid: spec.snr, increments })
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn snr_grid(&self) -> &TimeGrid {
        &self.snr_grid
    }

    pub fn increment(&self, i: usize, j: usize) -> f64 {
        self.increments[i * self.snr_grid.n_steps() + j]
    }

    /// `W(t_i, g_j)`: the sum of all cells below and left of the point.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        (0..i).map(|a| (0..j).map(|b| self.increment(a, b)).sum::<f64>()).sum()
    }

    /// The time path `t -> W(t, g_j)`, a Brownian motion with variance rate `g_j`.
    pub fn time_slice(&self, j: usize) -> Result<SamplePath> {
        if j > self.snr_grid.n_steps() {
            return Err(Error::InvalidParameter(format!("snr index {j} out of range")));
        }
        let mut values = Vec::with_capacity(self.time_grid.len());
        let mut acc = 0.0;
        values.push(acc);
        for i in 0..self.time_grid.n_steps() {
            acc += (0..j).map(|b| self.increment(i, b)).sum::<f64>();
            values.push(acc);
        }
        Ok(SamplePath::from_vec(self.time_grid, values))
    }

    /// The snr path `g -> W(t_end, g) - W(t_start, g)` for time cells
    /// `start..end`, a Brownian motion with variance rate `t_end - t_start`.
    pub fn snr_path_over(&self, start: usize, end: usize) -> Result<SamplePath> {
        if start >= end || end > self.time_grid.n_steps() {
            return Err(Error::InvalidParameter(format!("time cells {start}..{end} out of range")));
        }
        let m = self.snr_grid.n_steps();
        let mut cols = vec![0.0; m];
        for i in start..end {
            let row = &self.increments[i * m..(i + 1) * m];
            for (c, r) in cols.iter_mut().zip(row) {
                *c += r;
            }
        }
        let mut values = Vec::with_capacity(m + 1);
        let mut acc = 0.0;
        values.push(acc);
        for c in cols {
            acc += c;
            values.push(acc);
        }
        Ok(SamplePath::from_vec(self.snr_grid, values))
    }
}
