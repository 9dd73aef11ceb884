//! Input laws and exact Bayes computations for scalar Gaussian observations.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_integrate, adaptive_normal_expectation};
use crate::stochastic::{standard_normal, SamplePath, TimeGrid};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Tolerance on successive quadrature refinements for the mmse oracles.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// One Gaussian component of a mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Law of a scalar input.
///
/// `TwoPoint { x0, x1, p }` puts mass `p` on `x1` and `1 - p` on `x0`.
/// `PointMass` is the deterministic input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarPrior {
    Gaussian { mean: f64, variance: f64 },
    TwoPoint { x0: f64, x1: f64, p: f64 },
    GaussianMixture { components: Vec<MixtureComponent> },
    PointMass { value: f64 },
}

/// Observation `y` of `Y = scale * X + Normal(0, noise_variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianObservation {
    pub scale: f64,
    pub noise_variance: f64,
    pub value: f64,
}

impl GaussianObservation {
    pub fn new(scale: f64, noise_variance: f64, value: f64) -> Result<Self> {
        if !(noise_variance > 0.0 && noise_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        if !scale.is_finite() || !value.is_finite() {
            return Err(Error::NonFinite("observation"));
        }
        Ok(Self { scale, noise_variance, value })
    }
}

/// First and second posterior moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMoments {
    pub mean: f64,
    pub second_moment: f64,
}

impl PosteriorMoments {
    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }
}

#[derive(Clone, Copy)]
struct Component {
    weight: f64,
    mean: f64,
    variance: f64,
}

impl ScalarPrior {
    pub fn standard_gaussian() -> Self {
        Self::Gaussian { mean: 0.0, variance: 1.0 }
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        let p = Self::Gaussian { mean, variance };
        p.validate()?;
        Ok(p)
    }

    pub fn two_point(x0: f64, x1: f64, p: f64) -> Result<Self> {
        let prior = Self::TwoPoint { x0, x1, p };
        prior.validate()?;
        Ok(prior)
    }

    pub fn mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        let p = Self::GaussianMixture { components };
        p.validate()?;
        Ok(p)
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        let p = Self::PointMass { value };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPrior(m));
        match self {
            Self::Gaussian { mean, variance } => {
                if !mean.is_finite() || !(variance.is_finite() && *variance > 0.0) {
                    return bad(format!("gaussian needs finite mean and positive variance, got ({mean}, {variance})"));
                }
            }
            Self::TwoPoint { x0, x1, p } => {
                if !x0.is_finite() || !x1.is_finite() {
                    return bad("two-point atoms must be finite".into());
                }
                if !(*p > 0.0 && *p < 1.0) {
                    return bad(format!("two-point probability must lie in (0, 1), got {p}"));
                }
            }
            Self::GaussianMixture { components } => {
                if components.is_empty() {
                    return bad("mixture has no components".into());
                }
                let mut total = 0.0;
                for c in components {
                    if !(c.weight > 0.0) || !c.mean.is_finite() || !(c.variance > 0.0 && c.variance.is_finite()) {
                        return bad(format!("invalid mixture component {c:?}"));
                    }
                    total += c.weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("mixture weights sum to {total}"));
                }
            }
            Self::PointMass { value } => {
                if !value.is_finite() {
                    return bad("point mass must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// True when the law has a single atom.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::PointMass { .. })
    }

    fn with_components<T>(&self, f: impl FnOnce(&mut dyn Iterator<Item = Component>) -> T) -> T {
        match self {
            Self::Gaussian { mean, variance } => {
                f(&mut std::iter::once(Component { weight: 1.0, mean: *mean, variance: *variance }))
            }
            Self::TwoPoint { x0, x1, p } => f(&mut [
                Component { weight: 1.0 - p, mean: *x0, variance: 0.0 },
                Component { weight: *p, mean: *x1, variance: 0.0 },
            ]
            .into_iter()),
            Self::GaussianMixture { components } => f(&mut components
                .iter()
                .map(|c| Component { weight: c.weight, mean: c.mean, variance: c.variance })),
            Self::PointMass { value } => {
                f(&mut std::iter::once(Component { weight: 1.0, mean: *value, variance: 0.0 }))
            }
        }
    }

    fn component_list(&self) -> Vec<Component> {
        self.with_components(|it| it.collect())
    }

    pub fn mean(&self) -> f64 {
        self.with_components(|it| it.map(|c| c.weight * c.mean).sum())
    }

    pub fn second_moment(&self) -> f64 {
        self.with_components(|it| it.map(|c| c.weight * (c.variance + c.mean * c.mean)).sum())
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.second_moment() - m * m).max(0.0)
    }

    /// `E[X^4]`; finite for every built-in law.
    pub fn fourth_moment(&self) -> f64 {
        self.with_components(|it| {
            it.map(|c| {
                let (m, v) = (c.mean, c.variance);
                c.weight * (m.powi(4) + 6.0 * m * m * v + 3.0 * v * v)
            })
            .sum()
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian { mean, variance } => mean + variance.sqrt() * standard_normal(rng),
            Self::TwoPoint { x0, x1, p } => {
                if rng.random::<f64>() < *p {
                    *x1
                } else {
                    *x0
                }
            }
            Self::GaussianMixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let last = components.len() - 1;
                let c = components
                    .iter()
                    .enumerate()
                    .find(|(i, c)| {
                        acc += c.weight;
                        u < acc || *i == last
                    })
                    .map(|(_, c)| c)
                    .unwrap_or(&components[last]);
                c.mean + c.variance.sqrt() * standard_normal(rng)
            }
            Self::PointMass { value } => *value,
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        self.with_components(|it| {
            it.map(|c| {
                let f = if c.variance == 0.0 {
                    if x >= c.mean {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    Normal::new(c.mean, c.variance.sqrt()).map(|n| n.cdf(x)).unwrap_or(f64::NAN)
                };
                c.weight * f
            })
            .sum()
        })
    }

    /// Generalized inverse of the cdf at `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Self::Gaussian { mean, variance } => {
                Normal::new(*mean, variance.sqrt()).map(|n| n.inverse_cdf(u)).unwrap_or(f64::NAN)
            }
            Self::TwoPoint { x0, x1, p } => {
                let (lo, hi, p_lo) = if x0 <= x1 { (*x0, *x1, 1.0 - p) } else { (*x1, *x0, *p) };
                if u <= p_lo {
                    lo
                } else {
                    hi
                }
            }
            Self::PointMass { value } => *value,
            Self::GaussianMixture { components } => {
                let spread = components.iter().map(|c| c.mean.abs() + 40.0 * c.variance.sqrt()).fold(0.0, f64::max);
                let (mut lo, mut hi) = (-spread, spread);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

/// `E[X | Y = y]` and `E[X^2 | Y = y]` for `Y = sX + Normal(0, v)`.
pub(crate) fn posterior_moments_raw(prior: &ScalarPrior, s: f64, v: f64, y: f64) -> PosteriorMoments {
    match prior {
        ScalarPrior::Gaussian { mean, variance } => {
            let precision = 1.0 / variance + s * s / v;
            let m = (mean / variance + s * y / v) / precision;
            PosteriorMoments { mean: m, second_moment: 1.0 / precision + m * m }
        }
        ScalarPrior::PointMass { value } => PosteriorMoments { mean: *value, second_moment: value * value },
        _ => prior.with_components(|it| mixture_posterior(it, s, v, y)),
    }
}

fn mixture_posterior(components: &mut dyn Iterator<Item = Component>, s: f64, v: f64, y: f64) -> PosteriorMoments {
    // Streaming log-sum-exp: rescale the running sums whenever the max moves.
    let (mut max_log, mut z, mut m1, mut m2) = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
    for c in components {
        let tau = s * s * c.variance + v;
        let r = y - s * c.mean;
        let log_w = c.weight.ln() - 0.5 * tau.ln() - r * r / (2.0 * tau);
        let m = c.mean + s * c.variance * r / tau;
        let k = c.variance * v / tau;
        if log_w > max_log {
            let shrink = (max_log - log_w).exp();
            z *= shrink;
            m1 *= shrink;
            m2 *= shrink;
            max_log = log_w;
        }
        let w = (log_w - max_log).exp();
        z += w;
        m1 += w * m;
        m2 += w * (k + m * m);
    }
    PosteriorMoments { mean: m1 / z, second_moment: m2 / z }
}

/// `E[X | Y = y]`.
pub fn posterior_mean(prior: &ScalarPrior, obs: &GaussianObservation) -> f64 {
    posterior_moments_raw(prior, obs.scale, obs.noise_variance, obs.value).mean
}

/// `E[X^2 | Y = y]`.
pub fn posterior_second_moment(prior: &ScalarPrior, obs: &GaussianObservation) -> f64 {
    posterior_moments_raw(prior, obs.scale, obs.noise_variance, obs.value).second_moment
}

pub fn posterior_moments(prior: &ScalarPrior, obs: &GaussianObservation) -> PosteriorMoments {
    posterior_moments_raw(prior, obs.scale, obs.noise_variance, obs.value)
}

/// Log density of `Y = sX + Normal(0, v)` at `y`.
pub fn log_marginal_density(prior: &ScalarPrior, s: f64, v: f64, y: f64) -> f64 {
    prior.with_components(|it| {
        let (mut max_log, mut z) = (f64::NEG_INFINITY, 0.0);
        for c in it {
            let tau = s * s * c.variance + v;
            let r = y - s * c.mean;
            let l = c.weight.ln() - 0.5 * (LN_2PI + tau.ln()) - r * r / (2.0 * tau);
            if l > max_log {
                z *= (max_log - l).exp();
                max_log = l;
            }
            z += (l - max_log).exp();
        }
        max_log + z.ln()
    })
}

/// `log N(y; mean, variance)`.
pub fn log_normal_density(y: f64, mean: f64, variance: f64) -> f64 {
    let r = y - mean;
    -0.5 * (LN_2PI + variance.ln()) - r * r / (2.0 * variance)
}

/// Information density `log p(y | x) - log p(y)` of `Y = sqrt(snr) X + N`.
pub fn scalar_information_density(prior: &ScalarPrior, x: f64, y: f64, snr: f64) -> f64 {
    let s = snr.sqrt();
    log_normal_density(y, s * x, 1.0) - log_marginal_density(prior, s, 1.0, y)
}

/// `E[f(Y)]` for `Y = sX + Normal(0, v)`, one Hermite expectation per component.
fn output_expectation(prior: &ScalarPrior, s: f64, v: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let comps = prior.component_list();
    adaptive_normal_expectation(QUADRATURE_TOL, |z| {
        comps
            .iter()
            .map(|c| c.weight * f(s * c.mean + (s * s * c.variance + v).sqrt() * z))
            .sum()
    })
}

/// Minimum mean squared error of estimating `X` from `sX + Normal(0, v)`.
pub fn mmse_observation(prior: &ScalarPrior, s: f64, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::InvalidParameter(format!("noise variance must be positive, got {v}")));
    }
    output_expectation(prior, s, v, |y| posterior_moments_raw(prior, s, v, y).variance())
}

/// `mmse(snr) = E[(X - E[X | sqrt(snr) X + N])^2]` by adaptive Gauss–Hermite.
pub fn mmse_scalar(prior: &ScalarPrior, snr: f64) -> Result<f64> {
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(Error::InvalidParameter(format!("snr must be non-negative, got {snr}")));
    }
    mmse_observation(prior, snr.sqrt(), 1.0)
}

/// `int_0^snr mmse(g) dg`.
pub fn integrated_mmse(prior: &ScalarPrior, snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::InvalidParameter(format!("snr must be non-negative, got {snr}")));
    }
    if snr == 0.0 {
        return Ok(0.0);
    }
    let failure = std::cell::RefCell::new(None);
    let v = adaptive_integrate(0.0, snr, 1e-11, |g| {
        mmse_scalar(prior, g).unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    });
    match failure.into_inner() {
        Some(e) => Err(e),
        None => v,
    }
}

/// Mutual information `I(X; sqrt(snr) X + N)` in nats.
pub fn mutual_information(prior: &ScalarPrior, snr: f64) -> Result<f64> {
    let s = snr.sqrt();
    let h_y = -output_expectation(prior, s, 1.0, |y| log_marginal_density(prior, s, 1.0, y))?;
    Ok(h_y - 0.5 * (LN_2PI + 1.0))
}

/// Relative entropy between the output laws of `sqrt(snr) X + N` under
/// inputs `p` and `q`.
pub fn output_relative_entropy(p: &ScalarPrior, q: &ScalarPrior, snr: f64) -> Result<f64> {
    let s = snr.sqrt();
    output_expectation(p, s, 1.0, |y| log_marginal_density(p, s, 1.0, y) - log_marginal_density(q, s, 1.0, y))
}

/// `E[i(x, sqrt(snr) x + N)]` over the noise for a fixed input `x`.
pub fn conditional_information_density_mean(prior: &ScalarPrior, x: f64, snr: f64) -> Result<f64> {
    let s = snr.sqrt();
    adaptive_normal_expectation(QUADRATURE_TOL, |n| scalar_information_density(prior, x, s * x + n, snr))
}

/// Law of a continuous-time input process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessPrior {
    /// `X_t = X` for all `t`.
    ConstantX { prior: ScalarPrior },
    /// Independent draws held constant on `segments` equal blocks.
    PiecewiseConstantIid { prior: ScalarPrior, segments: usize },
    /// `dX = -a X dt + b dB` started from a Gaussian (or deterministic) law.
    OrnsteinUhlenbeck { mean_reversion: f64, diffusion: f64, initial: ScalarPrior },
}

impl ProcessPrior {
    pub fn constant(prior: ScalarPrior) -> Self {
        Self::ConstantX { prior }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ConstantX { prior } => prior.validate(),
            Self::PiecewiseConstantIid { prior, segments } => {
                if *segments == 0 {
                    return Err(Error::InvalidPrior("at least one segment is required".into()));
                }
                prior.validate()
            }
            Self::OrnsteinUhlenbeck { mean_reversion, diffusion, initial } => {
                if !(*mean_reversion > 0.0 && mean_reversion.is_finite()) {
                    return Err(Error::InvalidPrior(format!("mean reversion must be positive, got {mean_reversion}")));
                }
                if !(*diffusion >= 0.0 && diffusion.is_finite()) {
                    return Err(Error::InvalidPrior(format!("diffusion must be non-negative, got {diffusion}")));
                }
                match initial {
                    ScalarPrior::Gaussian { .. } | ScalarPrior::PointMass { .. } => initial.validate(),
                    _ => Err(Error::InvalidPrior("Ornstein-Uhlenbeck initial law must be Gaussian".into())),
                }
            }
        }
    }

    /// Scalar law and number of independent blocks for piecewise-constant inputs.
    pub fn piecewise(&self) -> Option<(&ScalarPrior, usize)> {
        match self {
            Self::ConstantX { prior } => Some((prior, 1)),
            Self::PiecewiseConstantIid { prior, segments } => Some((prior, *segments)),
            Self::OrnsteinUhlenbeck { .. } => None,
        }
    }

    /// Signal power `int_0^T E[X_t^2] dt`.
    pub fn power(&self, horizon: f64) -> f64 {
        match self {
            Self::ConstantX { prior } | Self::PiecewiseConstantIid { prior, .. } => {
                prior.second_moment() * horizon
            }
            Self::OrnsteinUhlenbeck { mean_reversion: a, diffusion: b, initial } => {
                let (m0, v0) = (initial.mean(), initial.variance());
                let stat = b * b / (2.0 * a);
                let decay2 = (1.0 - (-2.0 * a * horizon).exp()) / (2.0 * a);
                (m0 * m0 + v0 - stat) * decay2 + stat * horizon
            }
        }
    }

    /// Draws the block values of a piecewise-constant input.
    pub fn sample_segments<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let (prior, m) = self
            .piecewise()
            .ok_or_else(|| Error::Unsupported("block values need a piecewise-constant input".into()))?;
        Ok((0..m).map(|_| prior.sample(rng)).collect())
    }

    /// Draws a path on `grid`; value `k` is the input on cell `k`.
    pub fn sample_path<R: Rng + ?Sized>(&self, grid: &TimeGrid, rng: &mut R) -> Result<SamplePath> {
        match self {
            Self::ConstantX { .. } | Self::PiecewiseConstantIid { .. } => {
                let segments = self.sample_segments(rng)?;
                piecewise_path(grid, &segments)
            }
            Self::OrnsteinUhlenbeck { mean_reversion: a, diffusion: b, initial } => {
                let decay = (-a * grid.step()).exp();
                let sd = b * ((1.0 - decay * decay) / (2.0 * a)).sqrt();
                let mut x = initial.sample(rng);
                let mut values = Vec::with_capacity(grid.len());
                values.push(x);
                for _ in 0..grid.n_steps() {
                    x = decay * x + sd * standard_normal(rng);
                    values.push(x);
                }
                SamplePath::new(*grid, values)
            }
        }
    }
}

/// Path equal to `segments[i]` on the `i`-th of `segments.len()` blocks.
pub fn piecewise_path(grid: &TimeGrid, segments: &[f64]) -> Result<SamplePath> {
    let len = grid.segment_len(segments.len())?;
    let n = grid.n_steps();
    SamplePath::new(*grid, (0..=n).map(|k| segments[(k / len).min(segments.len() - 1)]).collect())
}
