//! Log Radon–Nikodym derivatives from the Girsanov exponents.
//!
//! Only differences of exponents are exposed; the Wiener reference measure
//! cancels and never appears on its own.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterOutput;
use crate::stochastic::{ito_sum, left_sum, SamplePath};

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exact evaluation of the discrete sums.
    Algebraic,
    /// Closed form, compared against discrete sums.
    Analytic,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Algebraic => "algebraic",
            Self::Analytic => "analytic",
        })
    }
}

/// Log density in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensityValue {
    pub value: f64,
    pub mode: Mode,
}

impl LogDensityValue {
    fn checked(value: f64, mode: Mode) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite("log density"));
        }
        Ok(Self { value, mode })
    }
}

/// `sum h dY - rate/2 sum h^2 dt` for `dY = rate h dt + dW`, `d<W> = rate dt`.
pub(crate) fn girsanov_exponent(drift: &[f64], y: &[f64], step: f64, rate: f64) -> f64 {
    let sq: Vec<f64> = drift.iter().map(|h| h * h).collect();
    ito_sum(drift, y) - 0.5 * rate * left_sum(&sq, step)
}

fn exponent(drift: &SamplePath, y: &SamplePath) -> Result<f64> {
    drift.same_grid(y)?;
    Ok(girsanov_exponent(drift.values(), y.values(), y.grid().step(), 1.0))
}

/// `log dP_{Y|X} / d(Wiener)`: `sum x dy - 1/2 sum x^2 dt`.
pub fn log_rn_conditional(x: &SamplePath, y: &SamplePath) -> Result<LogDensityValue> {
    LogDensityValue::checked(exponent(x, y)?, Mode::Algebraic)
}

/// `log dP_Y / d(Wiener)`: the same sum with the causal estimate.
pub fn log_rn_marginal(x_hat: &SamplePath, y: &SamplePath) -> Result<LogDensityValue> {
    LogDensityValue::checked(exponent(x_hat, y)?, Mode::Algebraic)
}

/// Information density `log dP_{Y|X} / dP_Y` on one path.
pub fn information_density(x: &SamplePath, y: &SamplePath, filter: &FilterOutput) -> Result<LogDensityValue> {
    let cond = exponent(x, y)?;
    let marg = exponent(&filter.estimate, y)?;
    LogDensityValue::checked(cond - marg, Mode::Algebraic)
}

/// `log dP_Y / dQ_Y` from the causal estimates under each law.
pub fn mismatch_log_rn(pi_p: &SamplePath, pi_q: &SamplePath, y: &SamplePath) -> Result<LogDensityValue> {
    LogDensityValue::checked(exponent(pi_p, y)? - exponent(pi_q, y)?, Mode::Algebraic)
}

/// `1/2 log(1 + snr) + 1/2 (y^2 / (1 + snr) - (y - sqrt(snr) x)^2)` for a
/// standard Gaussian input.
pub fn closed_form_info_density_gaussian_scalar(x: f64, y: f64, snr: f64) -> Result<LogDensityValue> {
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    let r = y - snr.sqrt() * x;
    LogDensityValue::checked(0.5 * snr.ln_1p() + 0.5 * (y * y / (1.0 + snr) - r * r), Mode::Analytic)
}
