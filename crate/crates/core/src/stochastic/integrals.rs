use serde::{Deserialize, Serialize};

use super::path::SamplePath;
use crate::error::Result;

/// Evaluation point of the integrand on each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItoRule {
    /// Left endpoint: the non-anticipating Itô sum.
    #[default]
    Left,
    /// Right endpoint: anticipating, kept only as a negative control.
    Right,
}

/// `sum_k h[k] * (w[k+1] - w[k])`.
pub(crate) fn ito_sum(integrand: &[f64], integrator: &[f64]) -> f64 {
    integrator.windows(2).zip(integrand).map(|(w, h)| h * (w[1] - w[0])).sum()
}

/// `sum_k h[k] * step` over all cells.
pub(crate) fn left_sum(integrand: &[f64], step: f64) -> f64 {
    integrand[..integrand.len() - 1].iter().sum::<f64>() * step
}

/// Left-endpoint Itô sum of `integrand` against `integrator`.
pub fn ito_integral(integrand: &SamplePath, integrator: &SamplePath) -> Result<f64> {
    ito_integral_with(integrand, integrator, ItoRule::Left)
}

pub fn ito_integral_with(integrand: &SamplePath, integrator: &SamplePath, rule: ItoRule) -> Result<f64> {
    integrand.same_grid(integrator)?;
    let h = integrand.values();
    Ok(match rule {
        ItoRule::Left => ito_sum(h, integrator.values()),
        ItoRule::Right => ito_sum(&h[1..], integrator.values()),
    })
}

/// Running left-endpoint Itô sums, one value per grid point.
pub fn ito_partial_sums(integrand: &SamplePath, integrator: &SamplePath) -> Result<SamplePath> {
    integrand.same_grid(integrator)?;
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(integrand.values().len());
    values.push(acc);
    for (h, w) in integrand.values().iter().zip(integrator.values().windows(2)) {
        acc += h * (w[1] - w[0]);
        values.push(acc);
    }
    Ok(SamplePath::from_vec(*integrand.grid(), values))
}

/// Left-endpoint Riemann sum `sum_k path[k] * step`.
pub fn lebesgue_integral(path: &SamplePath) -> f64 {
    left_sum(path.values(), path.grid().step())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{make_uniform_grid, sample_brownian, RngSeed};

    #[test]
    fn trivial_integrands() {
        let g = make_uniform_grid(0.0, 1.0, 32).unwrap();
        let w = sample_brownian(&g, RngSeed::new(1, 0));
        assert_eq!(ito_integral(&SamplePath::constant(g, 0.0), &w).unwrap(), 0.0);
        let c = ito_integral(&SamplePath::constant(g, 2.5), &w).unwrap();
        assert!((c - 2.5 * w.last()).abs() < 1e-12);
    }

    #[test]
    fn left_rule_arithmetic() {
        let g = make_uniform_grid(0.0, 1.0, 4).unwrap();
        let t = SamplePath::from_fn(g, |_, t| t).unwrap();
        assert_eq!(lebesgue_integral(&t), 0.375);
        assert_eq!(lebesgue_integral(&SamplePath::constant(g, 1.0)), 1.0);
        let fine = make_uniform_grid(0.0, 1.0, 1 << 14).unwrap();
        let t = SamplePath::from_fn(fine, |_, t| t).unwrap();
        assert!((lebesgue_integral(&t) - 0.5).abs() <= fine.step());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = SamplePath::constant(make_uniform_grid(0.0, 1.0, 4).unwrap(), 1.0);
        let b = SamplePath::constant(make_uniform_grid(0.0, 1.0, 8).unwrap(), 1.0);
        assert!(ito_integral(&a, &b).is_err());
    }

    #[test]
    fn partial_sums_end_at_integral() {
        let g = make_uniform_grid(0.0, 1.0, 64).unwrap();
        let w = sample_brownian(&g, RngSeed::new(2, 0));
        let p = ito_partial_sums(&w, &w).unwrap();
        assert!((p.last() - ito_integral(&w, &w).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn isometry_for_brownian_integrand() {
        let g = make_uniform_grid(0.0, 1.0, 256).unwrap();
        let n = 100_000;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let w = sample_brownian(&g, RngSeed::new(11, i));
                ito_integral(&w, &w).unwrap()
            })
            .collect();
        let nf = n as f64;
        let mean = vals.iter().sum::<f64>() / nf;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let m4 = vals.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
        assert!(mean.abs() < 4.0 * (var / nf).sqrt(), "mean {mean}");
        // E[sum W_k^2 dt] on the grid is 0.5 - dt/2.
        let target = 0.5 - g.step() / 2.0;
        assert!((var - target).abs() < 4.0 * ((m4 - var * var) / nf).sqrt(), "var {var}");
    }

    #[test]
    fn right_rule_picks_up_quadratic_variation() {
        let g = make_uniform_grid(0.0, 1.0, 4096).unwrap();
        let w = sample_brownian(&g, RngSeed::new(3, 0));
        let left = ito_integral(&w, &w).unwrap();
        let right = ito_integral_with(&w, &w, ItoRule::Right).unwrap();
        assert!((right - left - 1.0).abs() < 0.1);
    }
}
