use super::{mismatch_report, tracking_report, Identity, IdentityReport};
use crate::couplings::{coupling_estimate_path, CouplingKind, CouplingNoise, CouplingSample};
use crate::densities::Mode;
use crate::error::{Error, Result};
use crate::priors::{
    conditional_information_density_mean, posterior_moments_raw, scalar_information_density, ScalarPrior,
    QUADRATURE_TOL,
};
use crate::quadrature::{adaptive_integrate, adaptive_normal_expectation};
use crate::stochastic::{ItoRule, SamplePath};

fn require_kind(sample: &CouplingSample, want: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("expected a {want} coupling sample, got {:?}", sample.kind)))
    }
}

/// Matched scalar tracking error under the Brownian-motion coupling.
///
/// In analytic mode the information density is the exact scalar density at
/// the endpoint instead of the discrete Girsanov sums.
pub fn scalar_z(sample: &CouplingSample, prior: &ScalarPrior, mode: Mode) -> Result<IdentityReport> {
    require_kind(sample, "Brownian-motion", sample.kind == CouplingKind::BrownianMotion)?;
    let w = sample.brownian_noise()?;
    let grid = *sample.grid();
    let x = SamplePath::constant(grid, sample.x);
    let est = coupling_estimate_path(prior, sample)?;
    let algebraic = tracking_report(Identity::ScalarZ, &x, &est, &sample.y, w, ItoRule::Left)?;
    match mode {
        Mode::Algebraic => Ok(algebraic),
        Mode::Analytic => {
            let snr = grid.t1();
            let info = scalar_information_density(prior, sample.x, sample.y.last() / snr.sqrt(), snr);
            let half = algebraic.component("half_error").unwrap_or(0.0);
            Ok(IdentityReport::new(Identity::ScalarZ, info - half, algebraic.right, Mode::Analytic)?
                .with_components(vec![("information_density", info), ("half_error", half)]))
        }
    }
}

/// Mismatched scalar tracking error under the Brownian-motion coupling.
pub fn scalar_z_mismatch(sample: &CouplingSample, prior_p: &ScalarPrior, prior_q: &ScalarPrior) -> Result<IdentityReport> {
    require_kind(sample, "Brownian-motion", sample.kind == CouplingKind::BrownianMotion)?;
    let w = sample.brownian_noise()?;
    let x = SamplePath::constant(*sample.grid(), sample.x);
    let est_p = coupling_estimate_path(prior_p, sample)?;
    let est_q = coupling_estimate_path(prior_q, sample)?;
    mismatch_report(Identity::ScalarZMismatch, &x, &est_p, &est_q, &sample.y, w)
}

/// Integrand whose snr-integral is the additive-coupling tracking error.
pub fn ztilde_gamma(prior: &ScalarPrior, sample: &CouplingSample, gamma: f64) -> Result<f64> {
    require_kind(sample, "additive Gaussian", sample.kind == CouplingKind::AdditiveStandardGaussian)?;
    let CouplingNoise::Scalar(n) = sample.noise else {
        return Err(Error::Unsupported("additive coupling without scalar noise".into()));
    };
    ztilde_value(prior, sample.x, n, gamma)
}

fn ztilde_value(prior: &ScalarPrior, x: f64, n: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("snr level must be positive, got {gamma}")));
    }
    let s = gamma.sqrt();
    let y = s * x + n;
    let post = posterior_moments_raw(prior, s, 1.0, y);
    let err = x - post.mean;
    Ok(0.5 * (post.second_moment - x * post.mean - err * err + (y / s) * err))
}

/// Closed-form tracking errors for a standard Gaussian input.
pub fn closed_form_z(kind: CouplingKind, prior: &ScalarPrior, x: f64, noise: f64, snr: f64) -> Result<f64> {
    if *prior != ScalarPrior::standard_gaussian() {
        return Err(Error::Unsupported("closed forms exist only for a standard Gaussian input".into()));
    }
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    match kind {
        CouplingKind::AdditiveStandardGaussian => {
            let l = snr.ln_1p();
            Ok(0.5 * (l - noise * noise * l + 2.0 * x * noise * snr.sqrt().atan()))
        }
        CouplingKind::IndependentGaussians { .. } => {
            Ok((-noise * noise * snr + 2.0 * x * noise * snr.sqrt() + snr) / (2.0 * (1.0 + snr)))
        }
        CouplingKind::BrownianMotion => {
            Err(Error::Unsupported("the Brownian-motion coupling has no closed-form tracking error".into()))
        }
    }
}

const INTEGRAL_TOL: f64 = 1e-12;

/// Additive-coupling tracking error `i(x, Y_snr) - 1/2 int_0^snr (x - E[X|Y_g])^2 dg`.
///
/// The integral is taken in `u = sqrt(g)`, which removes the endpoint
/// singularity of the estimate's derivative.
pub fn coupling_b_z(prior: &ScalarPrior, x: f64, noise: f64, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    let info = scalar_information_density(prior, x, snr.sqrt() * x + noise, snr);
    let err = adaptive_integrate(0.0, snr.sqrt(), INTEGRAL_TOL, |u| {
        let e = x - posterior_moments_raw(prior, u, 1.0, u * x + noise).mean;
        2.0 * u * e * e
    })?;
    Ok(info - 0.5 * err)
}

/// The same error as [`coupling_b_z`] assembled from `int_0^snr ztilde dg`.
pub fn coupling_b_z_from_ztilde(prior: &ScalarPrior, x: f64, noise: f64, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    adaptive_integrate(0.0, snr.sqrt(), INTEGRAL_TOL, |u| {
        if u == 0.0 {
            return 0.0;
        }
        2.0 * u * ztilde_value(prior, x, noise, u * u).unwrap_or(f64::NAN)
    })
}

/// Limit of the block-coupling error: `i(x, Y_snr) - E[i(x, Y_snr) | X = x]`.
pub fn coupling_c_z_limit(prior: &ScalarPrior, x: f64, noise: f64, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    let info = scalar_information_density(prior, x, snr.sqrt() * x + noise, snr);
    Ok(info - conditional_information_density_mean(prior, x, snr)?)
}

/// Limit of the block-coupling error via the conditional error integral
/// `1/2 int_0^snr E[(x - E[X|Y_g])^2 | X = x] dg`.
pub fn coupling_c_z_limit_via_error(prior: &ScalarPrior, x: f64, noise: f64, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")));
    }
    let info = scalar_information_density(prior, x, snr.sqrt() * x + noise, snr);
    let failure = std::cell::RefCell::new(None);
    let err = adaptive_integrate(0.0, snr.sqrt(), INTEGRAL_TOL, |u| {
        let mse = adaptive_normal_expectation(QUADRATURE_TOL, |n| {
            let e = x - posterior_moments_raw(prior, u, 1.0, u * x + n).mean;
            e * e
        });
        match mse {
            Ok(m) => 2.0 * u * m,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    });
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(info - 0.5 * err?)
}

/// Block-coupling error `i(x, Y_snr) - 1/2 S_M`, with `S_M` the Riemann sum of
/// squared errors at the right end of each block using that block's noise.
pub fn coupling_c_z_blocks(prior: &ScalarPrior, sample: &CouplingSample) -> Result<f64> {
    let CouplingKind::IndependentGaussians { blocks } = sample.kind else {
        return Err(Error::Unsupported(format!("expected a block coupling sample, got {:?}", sample.kind)));
    };
    let grid = sample.grid();
    let snr = grid.t1();
    let delta = grid.step();
    let info = scalar_information_density(prior, sample.x, sample.y.last(), snr);
    let s_m: f64 = (1..=blocks)
        .map(|i| {
            let g = grid.point(i);
            let e = sample.x - posterior_moments_raw(prior, g.sqrt(), 1.0, sample.y.value(i)).mean;
            e * e * delta
        })
        .sum();
    Ok(info - 0.5 * s_m)
}

/// Relates the additive-coupling error to Brownian-motion-coupling terms on
/// one shared path `w` over `[0, 1]`: `Y_g = sqrt(g) x + W_1` and
/// `Yb_g = g x + W_g`, so `Y_1 = Yb_1`.
///
/// `left` is the additive-coupling error with exact density; `right` is
/// `int (x - E[X|Yb]) dW + 1/2 int (x - E[X|Yb])^2 - 1/2 int (x - E[X|Y])^2`.
pub fn cross_coupling_check(prior: &ScalarPrior, x: f64, w: &SamplePath) -> Result<IdentityReport> {
    let grid = *w.grid();
    grid.starts_at_zero()?;
    if (grid.t1() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidGrid("the shared path must live on [0, 1]".into()));
    }
    let w1 = w.last();
    let step = grid.step();
    let prior_mean = prior.mean();
    let (mut ito, mut sq_bm, mut sq_add) = (0.0, 0.0, 0.0);
    for k in 0..grid.n_steps() {
        let g = grid.point(k);
        let bm = if k == 0 { prior_mean } else { posterior_moments_raw(prior, g, g, g * x + w.value(k)).mean };
        let add = posterior_moments_raw(prior, g.sqrt(), 1.0, g.sqrt() * x + w1).mean;
        ito += (x - bm) * w.increment(k);
        sq_bm += (x - bm) * (x - bm) * step;
        sq_add += (x - add) * (x - add) * step;
    }
    let info = scalar_information_density(prior, x, x + w1, 1.0);
    let left = info - 0.5 * sq_add;
    let right = ito + 0.5 * sq_bm - 0.5 * sq_add;
    Ok(IdentityReport::new(Identity::CrossCoupling, left, right, Mode::Analytic)?
        .with_components(vec![("information_density", info), ("stochastic_integral", ito)]))
}
