//! Joint constructions of the scalar channel outputs at every snr level.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{posterior_moments_raw, ScalarPrior};
use crate::stochastic::{sample_brownian_with, standard_normal, RngSeed, SamplePath, TimeGrid};

/// Which coupling produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingKind {
    /// `Y_g = g x + W_g` with `W` a standard Brownian motion.
    BrownianMotion,
    /// `Y_g = sqrt(g) x + N` with one shared `N`.
    AdditiveStandardGaussian,
    /// `Y_g = sqrt(g) x + N_i` on the `i`-th of `blocks` equal snr blocks.
    IndependentGaussians { blocks: usize },
}

/// Noise realization behind a coupling sample.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingNoise {
    Path(SamplePath),
    Scalar(f64),
    Blocks(Vec<f64>),
}

/// One joint draw of input, noise and outputs over an snr grid.
///
/// For the block coupling the grid has one cell per block and point `i >= 1`
/// carries the output at the right end of block `i` (point 0 uses block 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSample {
    pub kind: CouplingKind,
    pub x: f64,
    pub noise: CouplingNoise,
    pub y: SamplePath,
    pub seed: Option<RngSeed>,
}

impl CouplingSample {
    pub fn grid(&self) -> &TimeGrid {
        self.y.grid()
    }

    /// The Brownian path of a Brownian-motion coupling.
    pub fn brownian_noise(&self) -> Result<&SamplePath> {
        match &self.noise {
            CouplingNoise::Path(w) => Ok(w),
            _ => Err(Error::Unsupported("sample does not carry a Brownian noise path".into())),
        }
    }
}

pub fn simulate_bm_coupling(x: f64, snr_grid: &TimeGrid, seed: RngSeed) -> Result<CouplingSample> {
    let mut s = bm_coupling_with(x, snr_grid, &mut seed.rng())?;
    s.seed = Some(seed);
    Ok(s)
}

pub fn bm_coupling_with<R: Rng + ?Sized>(x: f64, snr_grid: &TimeGrid, rng: &mut R) -> Result<CouplingSample> {
    snr_grid.starts_at_zero()?;
    let w = sample_brownian_with(snr_grid, rng);
    bm_coupling_from_noise(x, w)
}

/// Brownian-motion coupling driven by a given noise path.
pub fn bm_coupling_from_noise(x: f64, w: SamplePath) -> Result<CouplingSample> {
    let grid = *w.grid();
    grid.starts_at_zero()?;
    let y = SamplePath::new(grid, grid.points().zip(w.values()).map(|(g, wv)| g * x + wv).collect())?;
    Ok(CouplingSample { kind: CouplingKind::BrownianMotion, x, noise: CouplingNoise::Path(w), y, seed: None })
}

pub fn simulate_additive_gaussian_coupling(x: f64, snr_grid: &TimeGrid, seed: RngSeed) -> Result<CouplingSample> {
    let n = standard_normal(&mut seed.rng());
    let mut s = additive_gaussian_from_noise(x, snr_grid, n)?;
    s.seed = Some(seed);
    Ok(s)
}

pub fn additive_gaussian_from_noise(x: f64, snr_grid: &TimeGrid, n: f64) -> Result<CouplingSample> {
    snr_grid.starts_at_zero()?;
    let y = SamplePath::new(*snr_grid, snr_grid.points().map(|g| g.sqrt() * x + n).collect())?;
    Ok(CouplingSample { kind: CouplingKind::AdditiveStandardGaussian, x, noise: CouplingNoise::Scalar(n), y, seed: None })
}

pub fn simulate_independent_coupling(x: f64, snr: f64, blocks: usize, seed: RngSeed) -> Result<CouplingSample> {
    let mut rng = seed.rng();
    let noise: Vec<f64> = (0..blocks).map(|_| standard_normal(&mut rng)).collect();
    let mut s = independent_from_noise(x, snr, noise)?;
    s.seed = Some(seed);
    Ok(s)
}

pub fn independent_from_noise(x: f64, snr: f64, noise: Vec<f64>) -> Result<CouplingSample> {
    let blocks = noise.len();
    if blocks == 0 {
        return Err(Error::InvalidParameter("at least one block is required".into()));
    }
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    let grid = TimeGrid::uniform(0.0, snr, blocks)?;
    let y = SamplePath::new(
        grid,
        grid.points().enumerate().map(|(i, g)| g.sqrt() * x + noise[i.max(1) - 1]).collect(),
    )?;
    Ok(CouplingSample {
        kind: CouplingKind::IndependentGaussians { blocks },
        x,
        noise: CouplingNoise::Blocks(noise),
        y,
        seed: None,
    })
}

/// Scale and noise variance of the observation at snr `g` under `kind`.
pub(crate) fn observation_form(kind: CouplingKind, g: f64) -> (f64, f64) {
    match kind {
        CouplingKind::BrownianMotion => (g, g),
        _ => (g.sqrt(), 1.0),
    }
}

/// `E[X | observations up to level grid[k]]` under the sample's coupling.
pub fn coupling_posterior_mean_at(prior: &ScalarPrior, sample: &CouplingSample, k: usize) -> Result<f64> {
    if k >= sample.y.grid().len() {
        return Err(Error::InvalidParameter(format!("grid index {k} out of range")));
    }
    let g = sample.y.grid().point(k);
    if g == 0.0 {
        return Ok(prior.mean());
    }
    let (s, v) = observation_form(sample.kind, g);
    Ok(posterior_moments_raw(prior, s, v, sample.y.value(k)).mean)
}

/// `E[X | observations up to level g]`; `g` must lie on the sample's grid.
pub fn coupling_posterior_mean(prior: &ScalarPrior, sample: &CouplingSample, g: f64) -> Result<f64> {
    let k = sample
        .y
        .grid()
        .index_of(g)
        .ok_or_else(|| Error::InvalidParameter(format!("snr {g} is not on the sample grid")))?;
    coupling_posterior_mean_at(prior, sample, k)
}

/// The estimate path `k -> E[X | level grid[k]]`.
pub fn coupling_estimate_path(prior: &ScalarPrior, sample: &CouplingSample) -> Result<SamplePath> {
    let grid = *sample.y.grid();
    let values = (0..grid.len()).map(|k| coupling_posterior_mean_at(prior, sample, k)).collect::<Result<Vec<_>>>()?;
    SamplePath::new(grid, values)
}
