use super::{mismatch_report, tracking_report, Identity, IdentityReport};
use crate::channel::Phi;
use crate::densities::Mode;
use crate::error::{Error, Result};
use crate::filters::FilterOutput;
use crate::priors::{scalar_information_density, ScalarPrior};
use crate::stochastic::{ItoRule, SamplePath};

/// Duncan tracking error `i(X; Y) - 1/2 int (X - Xhat)^2 dt` against `int (X - Xhat) dW`.
pub fn duncan_d(x: &SamplePath, y: &SamplePath, filter: &FilterOutput, w: &SamplePath) -> Result<IdentityReport> {
    duncan_d_with_rule(x, y, filter, w, ItoRule::Left)
}

/// [`duncan_d`] with a chosen evaluation point for the stochastic integral.
pub fn duncan_d_with_rule(
    x: &SamplePath,
    y: &SamplePath,
    filter: &FilterOutput,
    w: &SamplePath,
    rule: ItoRule,
) -> Result<IdentityReport> {
    tracking_report(Identity::DuncanD, x, &filter.estimate, y, w, rule)
}

/// [`duncan_d`] for a constant input with the exact information density of
/// the sufficient statistic `Y_T = X T + W_T`.
pub fn duncan_d_analytic(
    prior: &ScalarPrior,
    x: &SamplePath,
    y: &SamplePath,
    filter: &FilterOutput,
    w: &SamplePath,
) -> Result<IdentityReport> {
    let x0 = x.value(0);
    if x.values().iter().any(|&v| v != x0) {
        return Err(Error::Unsupported("analytic mode needs a constant input".into()));
    }
    let algebraic = duncan_d(x, y, filter, w)?;
    let horizon = y.grid().span();
    let info = scalar_information_density(prior, x0, y.last() / horizon.sqrt(), horizon);
    let half = algebraic.component("half_error").unwrap_or(0.0);
    Ok(IdentityReport::new(Identity::DuncanD, info - half, algebraic.right, Mode::Analytic)?
        .with_components(vec![("information_density", info), ("half_error", half)]))
}

/// Mismatched tracking error with causal estimates under the true law and under `Q`.
pub fn mismatch_m(
    x: &SamplePath,
    y: &SamplePath,
    filter_p: &FilterOutput,
    filter_q: &FilterOutput,
    w: &SamplePath,
) -> Result<IdentityReport> {
    mismatch_report(Identity::MismatchM, x, &filter_p.estimate, &filter_q.estimate, y, w)
}

/// Tracking error of a channel with feedback `dY = phi dt + dW`.
///
/// `filter` estimates the signal from `phi.observation_statistic(y)`.
pub fn feedback_d_phi(phi: Phi, x: &SamplePath, y: &SamplePath, w: &SamplePath, filter: &FilterOutput) -> Result<IdentityReport> {
    let phi_path = phi.phi_path(x, y)?;
    let phi_hat = phi.phi_hat_path(&filter.estimate, y)?;
    let r = tracking_report(Identity::DuncanD, &phi_path, &phi_hat, y, w, ItoRule::Left)?;
    Ok(IdentityReport { identity: Identity::FeedbackDPhi, ..r })
}

/// Mismatched tracking error of a channel with feedback.
pub fn feedback_m_phi(
    phi: Phi,
    x: &SamplePath,
    y: &SamplePath,
    w: &SamplePath,
    filter_p: &FilterOutput,
    filter_q: &FilterOutput,
) -> Result<IdentityReport> {
    let phi_path = phi.phi_path(x, y)?;
    let hat_p = phi.phi_hat_path(&filter_p.estimate, y)?;
    let hat_q = phi.phi_hat_path(&filter_q.estimate, y)?;
    mismatch_report(Identity::FeedbackMPhi, &phi_path, &hat_p, &hat_q, y, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channel;
    use crate::filters::{causal_filter, FilterMethod};
    use crate::priors::ProcessPrior;
    use crate::stochastic::{make_uniform_grid, RngSeed, TimeGrid};

    fn grid() -> TimeGrid {
        make_uniform_grid(0.0, 1.0, 4096).unwrap()
    }

    #[test]
    fn duncan_closes_for_every_input_law() {
        let processes = [
            ProcessPrior::constant(ScalarPrior::standard_gaussian()),
            ProcessPrior::PiecewiseConstantIid { prior: ScalarPrior::two_point(-1.0, 1.0, 0.5).unwrap(), segments: 4 },
            ProcessPrior::OrnsteinUhlenbeck { mean_reversion: 1.0, diffusion: 1.0, initial: ScalarPrior::gaussian(0.0, 0.5).unwrap() },
        ];
        for (i, p) in processes.iter().enumerate() {
            let seed = RngSeed::new(1, i as u64);
            let s = sample_channel(p, &grid(), Phi::Identity, seed).unwrap();
            let f = causal_filter(FilterMethod::Exact, p, &s.y, seed).unwrap();
            let r = duncan_d(&s.x, &s.y, &f, &s.w).unwrap();
            assert!(r.closes(), "{p:?}: gap {}", r.gap);
            let wrong = duncan_d_with_rule(&s.x, &s.y, &f, &s.w, ItoRule::Right).unwrap();
            assert!(!wrong.closes());
        }
    }

    #[test]
    fn deterministic_input_gives_zero() {
        let p = ProcessPrior::constant(ScalarPrior::point_mass(1.0).unwrap());
        let seed = RngSeed::new(2, 0);
        let s = sample_channel(&p, &grid(), Phi::Identity, seed).unwrap();
        let f = causal_filter(FilterMethod::Exact, &p, &s.y, seed).unwrap();
        let r = duncan_d(&s.x, &s.y, &f, &s.w).unwrap();
        assert_eq!((r.left, r.right), (0.0, 0.0));
    }

    #[test]
    fn mismatch_and_feedback_close() {
        let p = ProcessPrior::constant(ScalarPrior::standard_gaussian());
        let q = ProcessPrior::constant(ScalarPrior::gaussian(0.0, 2.0).unwrap());
        let phi = Phi::ObservableDrift { b: 0.5 };
        for i in 0..10 {
            let seed = RngSeed::new(3, i);
            let s = sample_channel(&p, &grid(), phi, seed).unwrap();
            let stat = phi.observation_statistic(&s.y).unwrap();
            let fp = causal_filter(FilterMethod::Exact, &p, &stat, seed).unwrap();
            let fq = causal_filter(FilterMethod::Exact, &q, &stat, seed).unwrap();
            let d = feedback_d_phi(phi, &s.x, &s.y, &s.w, &fp).unwrap();
            assert!(d.closes(), "gap {}", d.gap);
            let m = feedback_m_phi(phi, &s.x, &s.y, &s.w, &fp, &fq).unwrap();
            assert!(m.closes(), "gap {}", m.gap);
            let same = feedback_m_phi(phi, &s.x, &s.y, &s.w, &fp, &fp).unwrap();
            assert_eq!((same.left, same.right), (0.0, 0.0));

            let plain = sample_channel(&p, &grid(), Phi::Identity, seed).unwrap();
            let fp = causal_filter(FilterMethod::Exact, &p, &plain.y, seed).unwrap();
            let fq = causal_filter(FilterMethod::Exact, &q, &plain.y, seed).unwrap();
            let a = mismatch_m(&plain.x, &plain.y, &fp, &fq, &plain.w).unwrap();
            let b = feedback_m_phi(Phi::Identity, &plain.x, &plain.y, &plain.w, &fp, &fq).unwrap();
            assert_eq!((a.left, a.right), (b.left, b.right));
            assert!(a.closes());
        }
    }

    #[test]
    fn identity_feedback_reproduces_duncan_bitwise() {
        let p = ProcessPrior::constant(ScalarPrior::standard_gaussian());
        let seed = RngSeed::new(4, 0);
        let s = sample_channel(&p, &grid(), Phi::Identity, seed).unwrap();
        let f = causal_filter(FilterMethod::Exact, &p, &s.y, seed).unwrap();
        let a = duncan_d(&s.x, &s.y, &f, &s.w).unwrap();
        let b = feedback_d_phi(Phi::Identity, &s.x, &s.y, &s.w, &f).unwrap();
        assert_eq!(a.left.to_bits(), b.left.to_bits());
        assert_eq!(a.right.to_bits(), b.right.to_bits());
    }

    #[test]
    fn analytic_mode_needs_constant_input() {
        let p = ProcessPrior::PiecewiseConstantIid { prior: ScalarPrior::standard_gaussian(), segments: 2 };
        let seed = RngSeed::new(5, 0);
        let s = sample_channel(&p, &grid(), Phi::Identity, seed).unwrap();
        let f = causal_filter(FilterMethod::Exact, &p, &s.y, seed).unwrap();
        if s.x.value(0) != s.x.last() {
            assert!(duncan_d_analytic(&ScalarPrior::standard_gaussian(), &s.x, &s.y, &f, &s.w).is_err());
        }
    }
}
