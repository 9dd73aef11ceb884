//! Causal and non-causal conditional-mean estimators for `dY = X dt + dW`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::{posterior_moments_raw, ProcessPrior, ScalarPrior};
use crate::stochastic::{standard_normal, RngSeed, SamplePath, StreamRng};

/// Diagnostics of a particle run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSummary {
    pub particles: usize,
    pub resamples: usize,
    pub min_ess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Auxiliary {
    None,
    /// Riccati solution `P_t` of the Kalman–Bucy filter.
    RiccatiVariance(SamplePath),
    Particles(ParticleSummary),
}

/// Causal estimate `E[X_t | Y_0^t]`; value `k` uses observations up to grid point `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub estimate: SamplePath,
    pub auxiliary: Auxiliary,
}

/// Non-causal estimate `E[X_t | Y_0^T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherOutput {
    pub estimate: SamplePath,
}

/// How to compute the causal estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterMethod {
    /// Closed-form filter for constant, piecewise-constant and Gaussian OU inputs.
    #[default]
    Exact,
    /// Bootstrap particle filter.
    Particle { particles: usize },
}

/// Filter for a constant input observed as `Y_t = X t + W_t`.
pub fn causal_filter_constant_x(prior: &ScalarPrior, y: &SamplePath) -> Result<FilterOutput> {
    causal_filter_constant_x_at_level(prior, y, 1.0)
}

/// Filter for `Y_t = level X t + W_t` with `Var(W_t) = level t`.
pub fn causal_filter_constant_x_at_level(prior: &ScalarPrior, y: &SamplePath, level: f64) -> Result<FilterOutput> {
    let grid = *y.grid();
    grid.starts_at_zero()?;
    if !(level > 0.0) {
        return Err(Error::InvalidParameter(format!("level must be positive, got {level}")));
    }
    let prior_mean = prior.mean();
    let values = (0..grid.len())
        .map(|k| {
            let t = grid.point(k);
            if k == 0 {
                prior_mean
            } else {
                posterior_moments_raw(prior, level * t, level * t, y.value(k)).mean
            }
        })
        .collect();
    Ok(FilterOutput { estimate: SamplePath::new(grid, values)?, auxiliary: Auxiliary::None })
}

/// Filter for independent blocks: each block restarts from the prior and uses
/// only its own output increment.
pub fn causal_filter_piecewise(prior: &ScalarPrior, segments: usize, y: &SamplePath) -> Result<FilterOutput> {
    let grid = *y.grid();
    grid.starts_at_zero()?;
    let len = grid.segment_len(segments)?;
    let dt = grid.step();
    let prior_mean = prior.mean();
    let values = (0..grid.len())
        .map(|k| {
            let start = (k / len).min(segments - 1) * len;
            let elapsed = (k - start) as f64 * dt;
            if k == start {
                prior_mean
            } else {
                posterior_moments_raw(prior, elapsed, elapsed, y.value(k) - y.value(start)).mean
            }
        })
        .collect();
    Ok(FilterOutput { estimate: SamplePath::new(grid, values)?, auxiliary: Auxiliary::None })
}

/// Kalman–Bucy filter for an Ornstein–Uhlenbeck input, stepped with the left rule.
pub fn kalman_bucy(process: &ProcessPrior, y: &SamplePath) -> Result<FilterOutput> {
    let ProcessPrior::OrnsteinUhlenbeck { mean_reversion: a, diffusion: b, initial } = process else {
        return Err(Error::Unsupported("Kalman-Bucy needs an Ornstein-Uhlenbeck input".into()));
    };
    process.validate()?;
    let grid = *y.grid();
    let dt = grid.step();
    let (mut m, mut p) = (initial.mean(), initial.variance());
    let mut means = Vec::with_capacity(grid.len());
    let mut vars = Vec::with_capacity(grid.len());
    means.push(m);
    vars.push(p);
    for dy in y.increments() {
        let next_m = m - a * m * dt + p * (dy - m * dt);
        p += (-2.0 * a * p + b * b - p * p) * dt;
        m = next_m;
        means.push(m);
        vars.push(p);
    }
    Ok(FilterOutput {
        estimate: SamplePath::new(grid, means)?,
        auxiliary: Auxiliary::RiccatiVariance(SamplePath::new(grid, vars)?),
    })
}

/// `int_0^T P_t dt` for the Riccati equation `P' = -2aP + b^2 - P^2`, in closed form.
pub fn riccati_error_integral(a: f64, b: f64, p0: f64, horizon: f64) -> f64 {
    let root = (a * a + b * b).sqrt();
    // Stationary root without cancellation when a dominates b.
    let r1 = if a > 0.0 { b * b / (a + root) } else { root - a };
    let d = 2.0 * root;
    let decay = if d > 0.0 { -(-d * horizon).exp_m1() / d } else { horizon };
    r1 * horizon + ((p0 - r1) * decay).ln_1p()
}

fn stratified_draws(prior: &ScalarPrior, n: usize, rng: &mut StreamRng) -> Vec<f64> {
    if prior.is_deterministic() {
        return vec![prior.mean(); n];
    }
    (0..n)
        .map(|i| {
            let u = (i as f64 + rng.random::<f64>()) / n as f64;
            prior.quantile(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
        })
        .collect()
}

fn systematic_resample(particles: &mut Vec<f64>, weights: &[f64], rng: &mut StreamRng) {
    let n = particles.len();
    let offset: f64 = rng.random();
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut j = 0;
    for i in 0..n {
        let u = (i as f64 + offset) / n as f64;
        while u > cum && j + 1 < n {
            j += 1;
            cum += weights[j];
        }
        out.push(particles[j]);
    }
    *particles = out;
}

/// Bootstrap particle filter with stratified initialization and systematic
/// resampling whenever the effective sample size drops below half.
pub fn particle_filter(process: &ProcessPrior, y: &SamplePath, n_particles: usize, seed: RngSeed) -> Result<FilterOutput> {
    if n_particles < 2 {
        return Err(Error::InvalidParameter("a particle filter needs at least two particles".into()));
    }
    process.validate()?;
    let grid = *y.grid();
    grid.starts_at_zero()?;
    let dt = grid.step();
    let mut rng = seed.rng();
    let block_len = match process {
        ProcessPrior::PiecewiseConstantIid { segments, .. } => Some(grid.segment_len(*segments)?),
        _ => None,
    };
    let initial = match process {
        ProcessPrior::ConstantX { prior } | ProcessPrior::PiecewiseConstantIid { prior, .. } => prior,
        ProcessPrior::OrnsteinUhlenbeck { initial, .. } => initial,
    };
    let mut particles = stratified_draws(initial, n_particles, &mut rng);
    let uniform = 1.0 / n_particles as f64;
    let mut weights = vec![uniform; n_particles];
    let mut log_w = vec![0.0; n_particles];
    let mut estimate = Vec::with_capacity(grid.len());
    let mut summary = ParticleSummary { particles: n_particles, resamples: 0, min_ess: n_particles as f64 };

    for k in 0..grid.n_steps() {
        estimate.push(particles.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>());
        let dy = y.increment(k);
        let mut max_log = f64::NEG_INFINITY;
        for (lw, x) in log_w.iter_mut().zip(&particles) {
            *lw += x * dy - 0.5 * x * x * dt;
            max_log = max_log.max(*lw);
        }
        let mut total = 0.0;
        for (w, lw) in weights.iter_mut().zip(&log_w) {
            *w = (lw - max_log).exp();
            total += *w;
        }
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::WeightCollapse { step: k });
        }
        let mut sum_sq = 0.0;
        for (w, lw) in weights.iter_mut().zip(log_w.iter_mut()) {
            *w /= total;
            *lw = w.ln();
            sum_sq += *w * *w;
        }
        let ess = 1.0 / sum_sq;
        summary.min_ess = summary.min_ess.min(ess);

        let renew = block_len.is_some_and(|len| (k + 1) % len == 0 && k + 1 < grid.n_steps());
        if renew {
            particles = stratified_draws(initial, n_particles, &mut rng);
        } else if ess < 0.5 * n_particles as f64 {
            systematic_resample(&mut particles, &weights, &mut rng);
            summary.resamples += 1;
        } else {
            if let ProcessPrior::OrnsteinUhlenbeck { mean_reversion, diffusion, .. } = process {
                propagate_ou(&mut particles, *mean_reversion, *diffusion, dt, &mut rng);
            }
            continue;
        }
        weights.fill(uniform);
        log_w.fill(uniform.ln());
        if let ProcessPrior::OrnsteinUhlenbeck { mean_reversion, diffusion, .. } = process {
            propagate_ou(&mut particles, *mean_reversion, *diffusion, dt, &mut rng);
        }
    }
    estimate.push(particles.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>());
    Ok(FilterOutput { estimate: SamplePath::new(grid, estimate)?, auxiliary: Auxiliary::Particles(summary) })
}

fn propagate_ou(particles: &mut [f64], a: f64, b: f64, dt: f64, rng: &mut StreamRng) {
    let decay = (-a * dt).exp();
    let sd = b * ((1.0 - decay * decay) / (2.0 * a)).sqrt();
    for x in particles {
        *x = decay * *x + sd * standard_normal(rng);
    }
}

/// Per-block posterior mean from each block's own output increment, for the
/// channel `Y_t = level X_t t + W_t` with `Var(W_t) = level t`.
pub fn smoother_piecewise(prior: &ScalarPrior, segments: usize, y: &SamplePath, level: f64) -> Result<SmootherOutput> {
    let grid = *y.grid();
    let len = grid.segment_len(segments)?;
    if !(level > 0.0) {
        return Err(Error::InvalidParameter(format!("level must be positive, got {level}")));
    }
    let block = level * len as f64 * grid.step();
    let means: Vec<f64> = (0..segments)
        .map(|i| posterior_moments_raw(prior, block, block, y.value((i + 1) * len) - y.value(i * len)).mean)
        .collect();
    let values = (0..grid.len()).map(|k| means[(k / len).min(segments - 1)]).collect();
    Ok(SmootherOutput { estimate: SamplePath::new(grid, values)? })
}

/// Causal filter for `process` computed by `method`.
pub fn causal_filter(method: FilterMethod, process: &ProcessPrior, y: &SamplePath, seed: RngSeed) -> Result<FilterOutput> {
    match method {
        FilterMethod::Exact => match process {
            ProcessPrior::ConstantX { prior } => causal_filter_constant_x(prior, y),
            ProcessPrior::PiecewiseConstantIid { prior, segments } => causal_filter_piecewise(prior, *segments, y),
            ProcessPrior::OrnsteinUhlenbeck { .. } => kalman_bucy(process, y),
        },
        FilterMethod::Particle { particles } => particle_filter(process, y, particles, seed),
    }
}

/// The filter optimal under law `process_q`, run on data from another law.
pub fn mismatched_filter(method: FilterMethod, process_q: &ProcessPrior, y: &SamplePath, seed: RngSeed) -> Result<FilterOutput> {
    causal_filter(method, process_q, y, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, Phi};
    use crate::stochastic::make_uniform_grid;

    fn gaussian_channel(n: usize, seed: u64) -> crate::channel::ChannelSample {
        let g = make_uniform_grid(0.0, 1.0, n).unwrap();
        sample_channel(&ProcessPrior::constant(ScalarPrior::standard_gaussian()), &g, Phi::Identity, RngSeed::new(seed, 0)).unwrap()
    }

    #[test]
    fn constant_gaussian_filter_closed_form() {
        let s = gaussian_channel(128, 1);
        let f = causal_filter_constant_x(&ScalarPrior::standard_gaussian(), &s.y).unwrap();
        for (k, t) in s.y.grid().points().enumerate() {
            assert!((f.estimate.value(k) - s.y.value(k) / (1.0 + t)).abs() < 1e-14);
        }
        assert_eq!(f.estimate.value(0), 0.0);
    }

    #[test]
    fn constant_two_point_filter_is_tanh() {
        let s = gaussian_channel(64, 2);
        let tp = ScalarPrior::two_point(-1.0, 1.0, 0.5).unwrap();
        let f = causal_filter_constant_x(&tp, &s.y).unwrap();
        for k in 1..=64 {
            assert!((f.estimate.value(k) - s.y.value(k).tanh()).abs() < 1e-13);
        }
    }

    #[test]
    fn filters_are_causal_under_truncation() {
        let s = gaussian_channel(200, 3);
        let prior = ScalarPrior::standard_gaussian();
        let full = causal_filter_piecewise(&prior, 4, &s.y).unwrap();
        let part = causal_filter_piecewise(&prior, 2, &s.y.truncate(100).unwrap()).unwrap();
        // The terminal point closes the last block, so compare the open interval.
        assert_eq!(&full.estimate.values()[..100], &part.estimate.values()[..100]);
        let ou = ProcessPrior::OrnsteinUhlenbeck { mean_reversion: 1.0, diffusion: 1.0, initial: ScalarPrior::gaussian(0.0, 0.5).unwrap() };
        let full = kalman_bucy(&ou, &s.y).unwrap();
        let part = kalman_bucy(&ou, &s.y.truncate(77).unwrap()).unwrap();
        assert_eq!(&full.estimate.values()[..=77], part.estimate.values());
        let full = causal_filter_constant_x(&prior, &s.y).unwrap();
        let part = causal_filter_constant_x(&prior, &s.y.truncate(31).unwrap()).unwrap();
        assert_eq!(&full.estimate.values()[..=31], part.estimate.values());
    }

    #[test]
    fn riccati_fixed_point() {
        let g = make_uniform_grid(0.0, 20.0, 20_000).unwrap();
        let y = SamplePath::constant(g, 0.0);
        let ou = ProcessPrior::OrnsteinUhlenbeck { mean_reversion: 1.0, diffusion: 1.0, initial: ScalarPrior::gaussian(0.0, 0.5).unwrap() };
        let f = kalman_bucy(&ou, &y).unwrap();
        let Auxiliary::RiccatiVariance(p) = f.auxiliary else { panic!("no variance path") };
        assert!((p.last() - (2f64.sqrt() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn deterministic_ou_stays_at_zero() {
        let s = gaussian_channel(100, 4);
        let ou = ProcessPrior::OrnsteinUhlenbeck { mean_reversion: 1.0, diffusion: 0.0, initial: ScalarPrior::point_mass(0.0).unwrap() };
        let f = kalman_bucy(&ou, &s.y).unwrap();
        assert!(f.estimate.values().iter().all(|&v| v == 0.0));
        let Auxiliary::RiccatiVariance(p) = f.auxiliary else { panic!() };
        assert!(p.values().iter().all(|&v| v == 0.0));
        let tp = ProcessPrior::constant(ScalarPrior::two_point(-1.0, 1.0, 0.5).unwrap());
        assert!(kalman_bucy(&tp, &s.y).is_err());
    }

    #[test]
    fn riccati_integral_matches_closed_form() {
        // (P - r1) / (P - r2) decays like exp(-2 sqrt(2) t) with r1, r2 the
        // roots of -2P + 1 - P^2; integrating gives the oracle below.
        let (r1, r2) = (2f64.sqrt() - 1.0, -1.0 - 2f64.sqrt());
        let c = (0.5 - r1) / (0.5 - r2);
        let e = c * (-2.0 * 2f64.sqrt()).exp();
        let p1 = (r1 - r2 * e) / (1.0 - e);
        let oracle = r1 - ((p1 - r2) / (0.5 - r2)).ln();
        let g = make_uniform_grid(0.0, 1.0, 1 << 16).unwrap();
        let ou = ProcessPrior::OrnsteinUhlenbeck { mean_reversion: 1.0, diffusion: 1.0, initial: ScalarPrior::gaussian(0.0, 0.5).unwrap() };
        let f = kalman_bucy(&ou, &SamplePath::constant(g, 0.0)).unwrap();
        let Auxiliary::RiccatiVariance(p) = f.auxiliary else { panic!() };
        let integral = crate::stochastic::lebesgue_integral(&p);
        assert!((integral - oracle).abs() < 1e-5, "{integral} vs {oracle}");
    }

    #[test]
    fn particle_filter_tracks_exact_filter() {
        let s = gaussian_channel(1000, 5);
        let prior = ScalarPrior::standard_gaussian();
        let exact = causal_filter_constant_x(&prior, &s.y).unwrap();
        let pf = particle_filter(&ProcessPrior::constant(prior), &s.y, 100_000, RngSeed::new(6, 0)).unwrap();
        let gap: f64 = exact.estimate.values().iter().zip(pf.estimate.values()).map(|(a, b)| (a - b).abs()).sum::<f64>()
            / exact.estimate.values().len() as f64;
        assert!(gap < 0.02, "mean absolute gap {gap}");
    }

    #[test]
    fn particle_filter_point_mass_and_guards() {
        let s = gaussian_channel(50, 7);
        let pm = ProcessPrior::constant(ScalarPrior::point_mass(0.7).unwrap());
        let pf = particle_filter(&pm, &s.y, 10, RngSeed::new(1, 0)).unwrap();
        assert!(pf.estimate.values().iter().all(|&v| (v - 0.7).abs() < 1e-15));
        assert!(particle_filter(&pm, &s.y, 1, RngSeed::new(1, 0)).is_err());
    }

    #[test]
    fn particle_filter_follows_kalman_bucy() {
        let g = make_uniform_grid(0.0, 1.0, 1000).unwrap();
        let ou = ProcessPrior::OrnsteinUhlenbeck { mean_reversion: 1.0, diffusion: 1.0, initial: ScalarPrior::gaussian(0.0, 0.5).unwrap() };
        let s = sample_channel(&ou, &g, Phi::Identity, RngSeed::new(8, 0)).unwrap();
        let kb = kalman_bucy(&ou, &s.y).unwrap();
        let Auxiliary::RiccatiVariance(p) = &kb.auxiliary else { panic!() };
        let n = 20_000;
        let pf = particle_filter(&ou, &s.y, n, RngSeed::new(9, 0)).unwrap();
        for k in (100..=1000).step_by(100) {
            let se = (2.0 * p.value(k) / n as f64).sqrt();
            let gap = (pf.estimate.value(k) - kb.estimate.value(k)).abs();
            assert!(gap < 3.0 * se + 2.0 * g.step(), "k={k} gap={gap} se={se}");
        }
    }

    #[test]
    fn piecewise_particle_filter_matches_exact() {
        let g = make_uniform_grid(0.0, 1.0, 400).unwrap();
        let pc = ProcessPrior::PiecewiseConstantIid { prior: ScalarPrior::two_point(-1.0, 1.0, 0.5).unwrap(), segments: 2 };
        let s = sample_channel(&pc, &g, Phi::Identity, RngSeed::new(10, 0)).unwrap();
        let exact = causal_filter(FilterMethod::Exact, &pc, &s.y, RngSeed::new(0, 0)).unwrap();
        let pf = causal_filter(FilterMethod::Particle { particles: 50_000 }, &pc, &s.y, RngSeed::new(11, 0)).unwrap();
        let worst = exact.estimate.values().iter().zip(pf.estimate.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 0.05, "worst gap {worst}");
    }

    #[test]
    fn smoother_blocks() {
        let s = gaussian_channel(64, 12);
        let prior = ScalarPrior::standard_gaussian();
        let one = smoother_piecewise(&prior, 1, &s.y, 1.0).unwrap();
        let end = s.y.last() / 2.0;
        assert!(one.estimate.values().iter().all(|&v| (v - end).abs() < 1e-14));
        let filt = causal_filter_constant_x(&prior, &s.y).unwrap();
        assert!((filt.estimate.last() - end).abs() < 1e-14);
        // The first block depends only on the first half of the output.
        let two = smoother_piecewise(&prior, 2, &s.y, 1.0).unwrap();
        let mut y2 = s.y.values().to_vec();
        for v in &mut y2[33..] {
            *v += 5.0;
        }
        let alt = smoother_piecewise(&prior, 2, &SamplePath::new(*s.y.grid(), y2).unwrap(), 1.0).unwrap();
        assert_eq!(two.estimate.value(0), alt.estimate.value(0));
        assert_ne!(two.estimate.value(40), alt.estimate.value(40));
        assert!(smoother_piecewise(&prior, 3, &s.y, 1.0).is_err());
    }

    #[test]
    fn mismatched_filters() {
        let s = gaussian_channel(64, 13);
        let p = ProcessPrior::constant(ScalarPrior::standard_gaussian());
        let q = ProcessPrior::constant(ScalarPrior::gaussian(0.0, 2.0).unwrap());
        let seed = RngSeed::new(0, 0);
        assert_eq!(
            mismatched_filter(FilterMethod::Exact, &p, &s.y, seed).unwrap(),
            causal_filter(FilterMethod::Exact, &p, &s.y, seed).unwrap()
        );
        let fq = mismatched_filter(FilterMethod::Exact, &q, &s.y, seed).unwrap();
        for (k, t) in s.y.grid().points().enumerate() {
            assert!((fq.estimate.value(k) - 2.0 * s.y.value(k) / (1.0 + 2.0 * t)).abs() < 1e-13);
        }
        let tp = ProcessPrior::constant(ScalarPrior::two_point(-1.0, 1.0, 0.5).unwrap());
        let ft = mismatched_filter(FilterMethod::Exact, &tp, &s.y, seed).unwrap();
        assert!(ft.estimate.values().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn riccati_integral_without_dynamics() {
        assert!((riccati_error_integral(0.0, 0.0, 1.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!((riccati_error_integral(1e-12, 0.0, 2.0, 3.0) - 7f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn riccati_integral_matches_rk4() {
        for &(a, b, p0, t) in &[(1.0, 1.0, 0.5, 1.0), (0.3, 2.0, 0.0, 3.0), (2.0, 0.5, 4.0, 0.7)] {
            let n = 20_000;
            let h = t / n as f64;
            let f = |p: f64| -2.0 * a * p + b * b - p * p;
            let (mut p, mut integral) = (p0, 0.0);
            for _ in 0..n {
                let k1 = f(p);
                let k2 = f(p + 0.5 * h * k1);
                let k3 = f(p + 0.5 * h * k2);
                let k4 = f(p + h * k3);
                let next = p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                integral += h / 6.0 * (p + 2.0 * (p + 0.5 * h * k1) + 2.0 * (p + 0.5 * h * k2) + (p + h * k3));
                p = next;
            }
            let closed = riccati_error_integral(a, b, p0, t);
            assert!((closed - integral).abs() < 1e-9, "{a} {b} {p0} {t}: {closed} vs {integral}");
        }
    }
}
