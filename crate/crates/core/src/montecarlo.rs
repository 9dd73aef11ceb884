//! Monte Carlo aggregation: moments with standard errors, empirical CDFs,
//! binned conditional means and martingale increment checks.
//!
//! Path `k` of an experiment always uses stream `k` of the master seed, and
//! results are reduced in path order, so statistics do not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalogue::Scenario;
use crate::densities::Mode;
use crate::error::{Error, Result};
use crate::identities::{Identity, IdentityReport, ALGEBRAIC_TOLERANCE};
use crate::stochastic::{RngSeed, SamplePath};

/// Smallest accepted experiment.
pub const MIN_PATHS: usize = 100;

/// Statistical acceptance band in standard errors.
pub const SE_MULTIPLIER: f64 = 4.0;

/// Miss probability of the empirical CDF band.
pub const CDF_BAND_ALPHA: f64 = 0.01;

const PAIRWISE_BLOCK: usize = 128;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean and variance with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub std_error_mean: f64,
    /// Delta-method standard error `sqrt((m4 - m2^2) / n)`.
    pub std_error_variance: f64,
}

impl EstimatorStats {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::InvalidParameter("no samples".into()));
        }
        if xs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("samples"));
        }
        let n = xs.len();
        let nf = n as f64;
        let mean = pairwise_sum(xs) / nf;
        let centered: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let m2 = pairwise_sum(&centered) / nf;
        let fourth: Vec<f64> = centered.iter().map(|c| c * c).collect();
        let m4 = pairwise_sum(&fourth) / nf;
        let variance = if n > 1 { m2 * nf / (nf - 1.0) } else { 0.0 };
        Ok(Self {
            n,
            mean,
            variance,
            std_error_mean: (variance / nf).sqrt(),
            std_error_variance: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
        })
    }

    pub fn mean_check(&self, target: f64) -> Check {
        Check { observed: self.mean, target, std_error: self.std_error_mean }
    }

    pub fn variance_check(&self, target: f64) -> Check {
        Check { observed: self.variance, target, std_error: self.std_error_variance }
    }

    /// Statistics of `c * X`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            mean: c * self.mean,
            variance: c * c * self.variance,
            std_error_mean: c.abs() * self.std_error_mean,
            std_error_variance: c * c * self.std_error_variance,
        }
    }
}

/// An observed value against a target with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub observed: f64,
    pub target: f64,
    pub std_error: f64,
}

impl Check {
    /// Distance to the target in standard errors.
    pub fn z_score(&self) -> f64 {
        let d = (self.observed - self.target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn passed(&self) -> bool {
        self.z_score() <= SE_MULTIPLIER
    }
}

/// Empirical distribution function with a two-sided DKW band.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
    band_halfwidth: f64,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("no samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("samples"));
        }
        samples.sort_by(f64::total_cmp);
        let band_halfwidth = ((2.0 / CDF_BAND_ALPHA).ln() / (2.0 * samples.len() as f64)).sqrt();
        Ok(Self { sorted: samples, band_halfwidth })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn band_halfwidth(&self) -> f64 {
        self.band_halfwidth
    }

    /// `F(x) = #{samples <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `v` with `F(v) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((p.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// Whether a reference distribution function lies inside the band at every sample.
    pub fn band_contains(&self, reference: impl Fn(f64) -> f64) -> bool {
        let n = self.sorted.len() as f64;
        self.sorted.iter().enumerate().all(|(i, &v)| {
            let f = reference(v);
            let (lo, hi) = (i as f64 / n, (i + 1) as f64 / n);
            f >= lo - self.band_halfwidth && f <= hi + self.band_halfwidth
        })
    }

    /// Kolmogorov distance `sup |F - G|`.
    pub fn ks_distance(&self, other: &Self) -> f64 {
        let (a, b) = (&self.sorted, &other.sorted);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < a.len() && j < b.len() {
            let v = a[i].min(b[j]);
            while i < a.len() && a[i] <= v {
                i += 1;
            }
            while j < b.len() && b[j] <= v {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }

    /// Whether each empirical function lies inside the other's band.
    pub fn consistent_with(&self, other: &Self) -> bool {
        self.ks_distance(other) <= self.band_halfwidth + other.band_halfwidth
    }

    /// Up to `max_rows` evenly spaced rows `(value, F, lower, upper)`.
    pub fn rows(&self, max_rows: usize) -> Vec<CdfRow> {
        let n = self.sorted.len();
        let stride = n.div_ceil(max_rows.max(1)).max(1);
        let mut idx: Vec<usize> = (stride - 1..n).step_by(stride).collect();
        if idx.last() != Some(&(n - 1)) {
            idx.push(n - 1);
        }
        idx.into_iter()
            .map(|i| {
                let value = self.sorted[i];
                let cdf = self.eval(value);
                CdfRow {
                    value,
                    cdf,
                    lower: (cdf - self.band_halfwidth).max(0.0),
                    upper: (cdf + self.band_halfwidth).min(1.0),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfRow {
    pub value: f64,
    pub cdf: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Runs `f` on streams `0..n_paths` of `master_seed` in parallel.
///
/// Results come back in path order. The first failing path, by index, is
/// reported with its index attached.
pub fn run_paths<T, F>(n_paths: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngSeed) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..n_paths as u64).into_par_iter().map(|k| f(RngSeed::new(master_seed, k))).collect();
    let mut out = Vec::with_capacity(n_paths);
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => return Err(Error::Path { index: k as u64, source: Box::new(e) }),
        }
    }
    Ok(out)
}

/// Per-path summary kept by [`Experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecord {
    pub stream_index: u64,
    pub left: f64,
    pub right: f64,
    pub gap: f64,
    /// Scalar input, when the scenario has one.
    pub input: Option<f64>,
}

/// Aggregated result of one identity over many paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub identity: Identity,
    pub mode: Mode,
    pub master_seed: u64,
    pub records: Vec<PathRecord>,
    /// Statistics of the left side.
    pub stats: EstimatorStats,
    pub cdf: EmpiricalCdf,
    /// Largest `|left - right| / (1 + |left|)`.
    pub max_normalized_gap: f64,
}

impl Experiment {
    pub fn n_paths(&self) -> usize {
        self.records.len()
    }

    /// Whether every path closes to [`ALGEBRAIC_TOLERANCE`].
    pub fn all_close(&self) -> bool {
        self.max_normalized_gap <= ALGEBRAIC_TOLERANCE
    }

    /// Fraction of paths whose gap exceeds [`ALGEBRAIC_TOLERANCE`].
    pub fn open_fraction(&self) -> f64 {
        let open = self.records.iter().filter(|r| r.gap.abs() / (1.0 + r.left.abs()) > ALGEBRAIC_TOLERANCE).count();
        open as f64 / self.records.len() as f64
    }

    pub fn lefts(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.left).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gap).collect()
    }

    /// `(input, left)` pairs for paths that carry a scalar input.
    pub fn input_pairs(&self) -> Vec<(f64, f64)> {
        self.records.iter().filter_map(|r| r.input.map(|x| (x, r.left))).collect()
    }
}

/// Runs a per-path identity evaluation and aggregates its left side.
pub fn run_experiment<F>(n_paths: usize, master_seed: u64, f: F) -> Result<Experiment>
where
    F: Fn(RngSeed) -> Result<IdentityReport> + Sync,
{
    if n_paths < MIN_PATHS {
        return Err(Error::InvalidParameter(format!("at least {MIN_PATHS} paths are required, got {n_paths}")));
    }
    let reports = run_paths(n_paths, master_seed, |seed| {
        let r = f(seed)?;
        Ok((
            r.identity,
            r.mode,
            PathRecord { stream_index: seed.stream_index, left: r.left, right: r.right, gap: r.gap, input: r.component("input") },
        ))
    })?;
    let (identity, mode, _) = reports[0];
    let records: Vec<PathRecord> = reports.into_iter().map(|(_, _, r)| r).collect();
    let lefts: Vec<f64> = records.iter().map(|r| r.left).collect();
    let stats = EstimatorStats::from_samples(&lefts)?;
    let cdf = EmpiricalCdf::new(lefts)?;
    let max_normalized_gap = records.iter().map(|r| r.gap.abs() / (1.0 + r.left.abs())).fold(0.0, f64::max);
    Ok(Experiment { identity, mode, master_seed, records, stats, cdf, max_normalized_gap })
}

/// Runs a catalogued scenario.
pub fn run_scenario(scenario: &Scenario, n_paths: usize, master_seed: u64) -> Result<Experiment> {
    scenario.validate()?;
    run_experiment(n_paths, master_seed, |seed| scenario.run_path(seed))
}

/// Conditional statistics of `z` on one bin of `x` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinStats {
    pub lower: f64,
    pub upper: f64,
    pub stats: EstimatorStats,
}

/// Means of `z` over equal-probability bins of `x`.
///
/// Bin edges are placed at `x` quantiles and moved forward so that equal `x`
/// values never straddle two bins; a law with `k < n_bins` atoms therefore
/// yields `k` bins.
pub fn conditional_mean_by_bins(pairs: &[(f64, f64)], n_bins: usize) -> Result<Vec<BinStats>> {
    if n_bins < 2 {
        return Err(Error::InvalidParameter(format!("at least 2 bins are required, got {n_bins}")));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let mut bins = Vec::with_capacity(n_bins);
    let mut start = 0;
    for b in 1..=n_bins {
        let target = b * n / n_bins;
        if target <= start {
            continue;
        }
        let mut end = target;
        while end < n && sorted[end].0 == sorted[end - 1].0 {
            end += 1;
        }
        let z: Vec<f64> = sorted[start..end].iter().map(|p| p.1).collect();
        bins.push(BinStats { lower: sorted[start].0, upper: sorted[end - 1].0, stats: EstimatorStats::from_samples(&z)? });
        start = end;
        if start == n {
            break;
        }
    }
    Ok(bins)
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub stats: EstimatorStats,
    pub variance_target: Option<f64>,
}

/// Runs the scenario built by `make` at each parameter value; parameter `i`
/// uses master seed `seed + i`.
pub fn variance_sweep(
    parameters: &[f64],
    n_paths: usize,
    seed: u64,
    make: impl Fn(f64) -> Result<Scenario>,
) -> Result<Vec<SweepRow>> {
    if parameters.is_empty() {
        return Err(Error::InvalidParameter("empty parameter list".into()));
    }
    parameters
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let scenario = make(p)?;
            let exp = run_scenario(&scenario, n_paths, seed.wrapping_add(i as u64))?;
            Ok(SweepRow { parameter: p, stats: exp.stats, variance_target: scenario.variance_target()? })
        })
        .collect()
}

/// Increment statistics of a family of partial-sum paths between two checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleCheck {
    pub from: usize,
    pub to: usize,
    /// `S_to - S_from`.
    pub increment: EstimatorStats,
    /// `(S_to - S_from) * clamp(S_from, -1, 1)`.
    pub weighted: EstimatorStats,
}

impl MartingaleCheck {
    pub fn passed(&self) -> bool {
        self.increment.mean_check(0.0).passed() && self.weighted.mean_check(0.0).passed()
    }
}

/// Checks that increments of `paths` between consecutive checkpoints are
/// uncorrelated with a bounded function of the past.
pub fn martingale_increment_test(paths: &[SamplePath], checkpoints: &[usize]) -> Result<Vec<MartingaleCheck>> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("no paths".into()));
    }
    if checkpoints.len() < 2 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("checkpoints must be strictly increasing, at least two".into()));
    }
    let len = paths[0].values().len();
    if checkpoints.iter().any(|&c| c >= len) || paths.iter().any(|p| p.values().len() != len) {
        return Err(Error::InvalidParameter("checkpoint outside the paths".into()));
    }
    checkpoints
        .windows(2)
        .map(|w| {
            let (s, t) = (w[0], w[1]);
            let inc: Vec<f64> = paths.iter().map(|p| p.value(t) - p.value(s)).collect();
            let weighted: Vec<f64> = paths.iter().zip(&inc).map(|(p, d)| d * p.value(s).clamp(-1.0, 1.0)).collect();
            Ok(MartingaleCheck {
                from: s,
                to: t,
                increment: EstimatorStats::from_samples(&inc)?,
                weighted: EstimatorStats::from_samples(&weighted)?,
            })
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `threads` workers, or the global pool for `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
