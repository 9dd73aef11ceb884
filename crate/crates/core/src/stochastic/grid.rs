use crate::error::{Error, Result};

/// Uniform grid on `[t0, t1]`. Points are `t0 + k * step`, so a grid and any
/// truncation of it agree bit-for-bit on shared points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    step: f64,
    n_steps: usize,
}

/// Builds the uniform grid with `n_steps` cells on `[t0, t1]`.
pub fn make_uniform_grid(t0: f64, t1: f64, n_steps: usize) -> Result<TimeGrid> {
    TimeGrid::uniform(t0, t1, n_steps)
}

impl TimeGrid {
    pub fn uniform(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if t1 <= t0 {
            return Err(Error::InvalidGrid(format!("empty interval [{t0}, {t1}]")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self { t0, step: (t1 - t0) / n_steps as f64, n_steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.point(self.n_steps)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> f64 {
        self.t1() - self.t0
    }

    pub fn point(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |k| self.point(k))
    }

    /// The grid restricted to its first `k` cells.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n_steps {
            return Err(Error::InvalidGrid(format!("cannot keep {k} of {} steps", self.n_steps)));
        }
        Ok(Self { n_steps: k, ..*self })
    }

    /// The grid with cells merged in groups of `factor`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(Error::InvalidGrid(format!(
                "{} steps not divisible by {factor}",
                self.n_steps
            )));
        }
        Ok(Self { t0: self.t0, step: self.step * factor as f64, n_steps: self.n_steps / factor })
    }

    /// Index of `t` if it lies on the grid (up to rounding).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = ((t - self.t0) / self.step).round();
        if k < 0.0 || k > self.n_steps as f64 {
            return None;
        }
        let k = k as usize;
        let tol = 1e-9 * self.step.max(self.t1().abs());
        ((self.point(k) - t).abs() <= tol).then_some(k)
    }

    /// Splits the cells into `segments` equal blocks, returning cells per block.
    pub fn segment_len(&self, segments: usize) -> Result<usize> {
        if segments == 0 || !self.n_steps.is_multiple_of(segments) {
            return Err(Error::InvalidGrid(format!(
                "{} steps cannot be split into {segments} equal segments",
                self.n_steps
            )));
        }
        Ok(self.n_steps / segments)
    }

    pub(crate) fn starts_at_zero(&self) -> Result<()> {
        if self.t0 != 0.0 {
            return Err(Error::InvalidGrid(format!("grid must start at 0, got {}", self.t0)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_grid_points() {
        let g = make_uniform_grid(0.0, 1.0, 4).unwrap();
        let pts: Vec<f64> = g.points().collect();
        assert_eq!(pts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn rejects_empty_interval_and_zero_steps() {
        assert!(make_uniform_grid(0.0, 0.0, 1).is_err());
        assert!(make_uniform_grid(1.0, 0.0, 4).is_err());
        assert!(make_uniform_grid(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn power_of_two_step_is_exact() {
        let g = make_uniform_grid(0.0, 2.0, 1 << 16).unwrap();
        assert_eq!(g.step(), 2.0 / 65536.0);
        assert_eq!(g.t1(), 2.0);
    }

    #[test]
    fn truncation_preserves_points() {
        let g = make_uniform_grid(0.0, 1.0, 1000).unwrap();
        let h = g.truncate(377).unwrap();
        for k in 0..=377 {
            assert_eq!(g.point(k), h.point(k));
        }
    }

    #[test]
    fn index_lookup() {
        let g = make_uniform_grid(0.0, 1.0, 8).unwrap();
        assert_eq!(g.index_of(0.5), Some(4));
        assert_eq!(g.index_of(0.3), None);
        assert_eq!(g.index_of(1.5), None);
    }
}
