//! Continuous-time channel `dY = phi dt + dW`, simulated with left-endpoint steps.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::priors::ProcessPrior;
use crate::stochastic::{sample_brownian_with, RngSeed, SamplePath, TimeGrid};

/// Causal channel input built from the signal and past outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Phi {
    /// `phi_t = X_t`.
    Identity,
    /// `phi_t = X_t + b sin(Y_t)`.
    ObservableDrift { b: f64 },
}

impl Phi {
    /// The part of the input computable from the output alone.
    pub fn drift(&self, y: f64) -> f64 {
        match self {
            Self::Identity => 0.0,
            Self::ObservableDrift { b } => b * y.sin(),
        }
    }

    /// Output path for input `x` and noise `w`.
    pub fn simulate(&self, x: &SamplePath, w: &SamplePath) -> Result<SamplePath> {
        x.same_grid(w)?;
        let dt = x.grid().step();
        let mut values = Vec::with_capacity(x.values().len());
        let mut y = 0.0;
        values.push(y);
        for (k, dw) in w.increments().enumerate() {
            y += (x.value(k) + self.drift(y)) * dt + dw;
            values.push(y);
        }
        SamplePath::new(*x.grid(), values)
    }

    /// `phi_k = x_k + drift(y_k)`.
    pub fn phi_path(&self, x: &SamplePath, y: &SamplePath) -> Result<SamplePath> {
        match self {
            Self::Identity => {
                x.same_grid(y)?;
                Ok(x.clone())
            }
            Self::ObservableDrift { .. } => x.zip_map(y, |xv, yv| xv + self.drift(yv)),
        }
    }

    /// Conditional mean of `phi` given the past outputs.
    pub fn phi_hat_path(&self, x_hat: &SamplePath, y: &SamplePath) -> Result<SamplePath> {
        self.phi_path(x_hat, y)
    }

    /// `Y_k - sum_{j<k} drift(Y_j) dt`: the output of the drift-free channel,
    /// which is what the signal filter consumes.
    pub fn observation_statistic(&self, y: &SamplePath) -> Result<SamplePath> {
        match self {
            Self::Identity => Ok(y.clone()),
            Self::ObservableDrift { .. } => {
                let dt = y.grid().step();
                let mut acc = 0.0;
                let mut values = Vec::with_capacity(y.values().len());
                values.push(y.value(0));
                for k in 0..y.grid().n_steps() {
                    acc += self.drift(y.value(k)) * dt;
                    values.push(y.value(k + 1) - acc);
                }
                SamplePath::new(*y.grid(), values)
            }
        }
    }
}

/// `Y_{k+1} = Y_k + x_k dt + (W_{k+1} - W_k)`, `Y_0 = 0`.
pub fn simulate_channel(x: &SamplePath, w: &SamplePath) -> Result<SamplePath> {
    Phi::Identity.simulate(x, w)
}

/// One realization of input, noise and output on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    pub x: SamplePath,
    pub w: SamplePath,
    pub y: SamplePath,
}

/// Draws input and noise from independent sub-streams of `seed`.
pub fn sample_channel(process: &ProcessPrior, grid: &TimeGrid, phi: Phi, seed: RngSeed) -> Result<ChannelSample> {
    grid.starts_at_zero()?;
    let x = process.sample_path(grid, &mut seed.child(0).rng())?;
    let w = sample_brownian_with(grid, &mut seed.child(1).rng());
    let y = phi.simulate(&x, &w)?;
    Ok(ChannelSample { x, w, y })
}
