//! Serializable experiment scenarios: how to simulate one path of each
//! identity, and the analytic moments it should reproduce.

use serde::{Deserialize, Serialize};

use crate::channel::{sample_channel, Phi};
use crate::couplings::{bm_coupling_from_noise, simulate_independent_coupling, CouplingKind};
use crate::densities::Mode;
use crate::error::{Error, Result};
use crate::filters::{causal_filter, riccati_error_integral, FilterMethod};
use crate::identities::{
    causal_anticausal_j, causal_vs_noncausal, closed_form_z, coupling_b_z, coupling_b_z_from_ztilde,
    coupling_c_z_blocks, coupling_c_z_limit, coupling_c_z_limit_via_error, cross_coupling_check, duncan_d_analytic,
    duncan_d_with_rule, feedback_d_phi, feedback_m_phi, mismatch_m, scalar_z, scalar_z_mismatch, sheet_n, Identity,
    IdentityReport,
};
use crate::priors::{integrated_mmse, output_relative_entropy, ProcessPrior, ScalarPrior};
use crate::stochastic::{make_uniform_grid, sample_brownian, sample_sheet, standard_normal, ItoRule, RngSeed, SheetSpec, TimeGrid};

fn algebraic() -> Mode {
    Mode::Algebraic
}

/// How a scalar coupling error is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    /// Quadrature valid for every prior; the right side is a second quadrature route.
    #[default]
    Quadrature,
    /// Closed form for a standard Gaussian input; the right side is the quadrature value.
    ClosedForm,
}

/// What the two sides of a scenario's report are expected to do pathwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// No pathwise requirement.
    None,
    /// Every path closes to the algebraic tolerance.
    Exact,
    /// Negative control: nearly every path must fail to close.
    Broken,
}

/// One experiment: an identity with its input law, grids and options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "identity", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Brownian-motion coupling over `[0, snr]`.
    ScalarZ {
        prior: ScalarPrior,
        snr: f64,
        n_steps: usize,
        #[serde(default = "algebraic")]
        mode: Mode,
    },
    /// Brownian-motion coupling with the estimate of a mismatched law `prior_q`.
    ScalarZMismatch { prior: ScalarPrior, prior_q: ScalarPrior, snr: f64, n_steps: usize },
    /// Additive standard Gaussian coupling.
    CouplingB {
        prior: ScalarPrior,
        snr: f64,
        #[serde(default)]
        evaluation: Evaluation,
    },
    /// Independent Gaussians coupling; `blocks = None` is the many-block limit.
    CouplingC {
        prior: ScalarPrior,
        snr: f64,
        #[serde(default)]
        blocks: Option<usize>,
        #[serde(default)]
        evaluation: Evaluation,
    },
    /// Additive coupling against Brownian-motion terms on one path over `[0, 1]`.
    CrossCoupling { prior: ScalarPrior, n_steps: usize },
    Duncan {
        process: ProcessPrior,
        horizon: f64,
        n_steps: usize,
        #[serde(default = "algebraic")]
        mode: Mode,
        #[serde(default)]
        filter: FilterMethod,
        #[serde(default)]
        rule: ItoRule,
    },
    /// Duncan error divided by the horizon, constant input.
    DuncanLimit { prior: ScalarPrior, horizon: f64, n_steps: usize },
    Mismatch {
        process: ProcessPrior,
        process_q: ProcessPrior,
        horizon: f64,
        n_steps: usize,
        #[serde(default)]
        filter: FilterMethod,
    },
    FeedbackDPhi {
        phi: Phi,
        process: ProcessPrior,
        horizon: f64,
        n_steps: usize,
        #[serde(default)]
        filter: FilterMethod,
    },
    FeedbackMPhi {
        phi: Phi,
        process: ProcessPrior,
        process_q: ProcessPrior,
        horizon: f64,
        n_steps: usize,
        #[serde(default)]
        filter: FilterMethod,
    },
    SheetN { process: ProcessPrior, horizon: f64, snr: f64, time_steps: usize, snr_steps: usize },
    CausalAnticausal { process: ProcessPrior, horizon: f64, n_steps: usize },
    /// Filtering at unit snr against smoothing averaged over snr in `[0, 1]`.
    CausalVsNoncausal { process: ProcessPrior, horizon: f64, time_steps: usize, snr_steps: usize },
}

fn is_standard_gaussian(prior: &ScalarPrior) -> bool {
    matches!(prior, ScalarPrior::Gaussian { mean, variance } if *mean == 0.0 && *variance == 1.0)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn grid(span: f64, n_steps: usize) -> Result<TimeGrid> {
    make_uniform_grid(0.0, span, n_steps)
}

fn with_input(mut r: IdentityReport, x: f64) -> IdentityReport {
    r.components.push(("input", x));
    r
}

/// Validates a process against a time grid.
fn check_process(process: &ProcessPrior, horizon: f64, n_steps: usize) -> Result<()> {
    process.validate()?;
    let g = grid(horizon, n_steps)?;
    if let Some((_, m)) = process.piecewise() {
        g.segment_len(m)?;
    }
    Ok(())
}

fn require_piecewise(process: &ProcessPrior) -> Result<()> {
    process
        .piecewise()
        .map(|_| ())
        .ok_or_else(|| Error::Unsupported("this identity needs a piecewise-constant input".into()))
}

/// `int_0^T E[(X_t - E[X_t | Y_0^t])^2] dt` where it has a closed form.
pub fn causal_error_integral(process: &ProcessPrior, horizon: f64) -> Result<Option<f64>> {
    Ok(match process {
        ProcessPrior::ConstantX { prior } => Some(integrated_mmse(prior, horizon)?),
        ProcessPrior::PiecewiseConstantIid { prior, segments } => {
            let m = *segments as f64;
            Some(m * integrated_mmse(prior, horizon / m)?)
        }
        ProcessPrior::OrnsteinUhlenbeck { mean_reversion, diffusion, initial } => {
            Some(riccati_error_integral(*mean_reversion, *diffusion, initial.variance(), horizon))
        }
    })
}

/// Twice the relative entropy between the output laws over `[0, T]` where it has a closed form.
pub fn mismatch_variance(process: &ProcessPrior, process_q: &ProcessPrior, horizon: f64) -> Result<Option<f64>> {
    match (process.piecewise(), process_q.piecewise()) {
        (Some((p, m)), Some((q, mq))) if m == mq => {
            let m = m as f64;
            Ok(Some(2.0 * m * output_relative_entropy(p, q, horizon / m)?))
        }
        _ => Ok(None),
    }
}

/// Variance of the additive-coupling error for a standard Gaussian input.
pub fn coupling_b_variance(snr: f64) -> f64 {
    let l = (1.0 + snr).ln();
    0.5 * l * l + snr.sqrt().atan().powi(2)
}

/// Variance of the independent-Gaussians limit error for a standard Gaussian input.
pub fn coupling_c_variance(snr: f64) -> f64 {
    snr * (1.0 + 2.0 * snr) / (2.0 * (1.0 + snr) * (1.0 + snr))
}

impl Scenario {
    pub fn identity(&self) -> Identity {
        match self {
            Self::ScalarZ { .. } => Identity::ScalarZ,
            Self::ScalarZMismatch { .. } => Identity::ScalarZMismatch,
            Self::CouplingB { .. } => Identity::CouplingBZ,
            Self::CouplingC { .. } => Identity::CouplingCZ,
            Self::CrossCoupling { .. } => Identity::CrossCoupling,
            Self::Duncan { .. } | Self::DuncanLimit { .. } => Identity::DuncanD,
            Self::Mismatch { .. } => Identity::MismatchM,
            Self::FeedbackDPhi { .. } => Identity::FeedbackDPhi,
            Self::FeedbackMPhi { .. } => Identity::FeedbackMPhi,
            Self::SheetN { .. } => Identity::SheetN,
            Self::CausalAnticausal { .. } => Identity::CausalAnticausalJ,
            Self::CausalVsNoncausal { .. } => Identity::CausalVsNoncausal,
        }
    }

    /// Tag used in configuration files.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::ScalarZ { .. } => "scalar_z",
            Self::ScalarZMismatch { .. } => "scalar_z_mismatch",
            Self::CouplingB { .. } => "coupling_b",
            Self::CouplingC { .. } => "coupling_c",
            Self::CrossCoupling { .. } => "cross_coupling",
            Self::Duncan { .. } => "duncan",
            Self::DuncanLimit { .. } => "duncan_limit",
            Self::Mismatch { .. } => "mismatch",
            Self::FeedbackDPhi { .. } => "feedback_d_phi",
            Self::FeedbackMPhi { .. } => "feedback_m_phi",
            Self::SheetN { .. } => "sheet_n",
            Self::CausalAnticausal { .. } => "causal_anticausal",
            Self::CausalVsNoncausal { .. } => "causal_vs_noncausal",
        }
    }

    /// Checks every precondition that can be checked without sampling.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ScalarZ { prior, snr, n_steps, .. } => {
                prior.validate()?;
                positive("snr", *snr)?;
                grid(*snr, *n_steps).map(|_| ())
            }
            Self::ScalarZMismatch { prior, prior_q, snr, n_steps } => {
                prior.validate()?;
                prior_q.validate()?;
                positive("snr", *snr)?;
                grid(*snr, *n_steps).map(|_| ())
            }
            Self::CouplingB { prior, snr, evaluation } | Self::CouplingC { prior, snr, evaluation, .. } => {
                prior.validate()?;
                positive("snr", *snr)?;
                if let Self::CouplingC { blocks: Some(0), .. } = self {
                    return Err(Error::InvalidParameter("at least one block is required".into()));
                }
                if let Self::CouplingC { blocks: Some(_), evaluation: Evaluation::ClosedForm, .. } = self {
                    return Err(Error::Unsupported("the closed form describes the many-block limit only".into()));
                }
                if *evaluation == Evaluation::ClosedForm && !is_standard_gaussian(prior) {
                    return Err(Error::Unsupported("closed forms need a standard Gaussian input".into()));
                }
                Ok(())
            }
            Self::CrossCoupling { prior, n_steps } => {
                prior.validate()?;
                grid(1.0, *n_steps).map(|_| ())
            }
            Self::Duncan { process, horizon, n_steps, mode, .. } => {
                positive("horizon", *horizon)?;
                check_process(process, *horizon, *n_steps)?;
                if *mode == Mode::Analytic && !matches!(process, ProcessPrior::ConstantX { .. }) {
                    return Err(Error::Unsupported("analytic Duncan mode needs a constant input".into()));
                }
                Ok(())
            }
            Self::DuncanLimit { prior, horizon, n_steps } => {
                positive("horizon", *horizon)?;
                prior.validate()?;
                grid(*horizon, *n_steps).map(|_| ())
            }
            Self::Mismatch { process, process_q, horizon, n_steps, .. }
            | Self::FeedbackMPhi { process, process_q, horizon, n_steps, .. } => {
                positive("horizon", *horizon)?;
                check_process(process, *horizon, *n_steps)?;
                check_process(process_q, *horizon, *n_steps)
            }
            Self::FeedbackDPhi { process, horizon, n_steps, .. } => {
                positive("horizon", *horizon)?;
                check_process(process, *horizon, *n_steps)
            }
            Self::CausalAnticausal { process, horizon, n_steps } => {
                positive("horizon", *horizon)?;
                require_piecewise(process)?;
                check_process(process, *horizon, *n_steps)
            }
            Self::SheetN { process, horizon, snr, time_steps, snr_steps } => {
                positive("horizon", *horizon)?;
                positive("snr", *snr)?;
                require_piecewise(process)?;
                check_process(process, *horizon, *time_steps)?;
                grid(*snr, *snr_steps).map(|_| ())
            }
            Self::CausalVsNoncausal { process, horizon, time_steps, snr_steps } => {
                positive("horizon", *horizon)?;
                require_piecewise(process)?;
                check_process(process, *horizon, *time_steps)?;
                grid(1.0, *snr_steps).map(|_| ())
            }
        }
    }

    /// Overrides the number of grid steps (both axes for sheet scenarios).
    /// Returns `false` when the scenario has no grid.
    pub fn set_steps(&mut self, steps: usize) -> bool {
        match self {
            Self::ScalarZ { n_steps, .. }
            | Self::ScalarZMismatch { n_steps, .. }
            | Self::CrossCoupling { n_steps, .. }
            | Self::Duncan { n_steps, .. }
            | Self::DuncanLimit { n_steps, .. }
            | Self::Mismatch { n_steps, .. }
            | Self::FeedbackDPhi { n_steps, .. }
            | Self::FeedbackMPhi { n_steps, .. }
            | Self::CausalAnticausal { n_steps, .. } => *n_steps = steps,
            Self::SheetN { time_steps, snr_steps, .. } | Self::CausalVsNoncausal { time_steps, snr_steps, .. } => {
                *time_steps = steps;
                *snr_steps = steps;
            }
            Self::CouplingB { .. } | Self::CouplingC { .. } => return false,
        }
        true
    }

    /// Overrides the evaluation mode. Returns `false` when the scenario has no mode choice.
    pub fn set_mode(&mut self, new: Mode) -> bool {
        match self {
            Self::ScalarZ { mode, .. } | Self::Duncan { mode, .. } => {
                *mode = new;
                true
            }
            _ => false,
        }
    }

    /// Expected pathwise behaviour of `left - right`.
    pub fn closure(&self) -> Closure {
        match self {
            Self::ScalarZ { mode: Mode::Analytic, .. } | Self::Duncan { mode: Mode::Analytic, .. } => Closure::None,
            Self::Duncan { rule: ItoRule::Right, .. } => Closure::Broken,
            Self::CouplingB { .. } | Self::CouplingC { .. } | Self::CrossCoupling { .. } => Closure::None,
            _ => Closure::Exact,
        }
    }

    /// Analytic variance of the left side, where one is known.
    pub fn variance_target(&self) -> Result<Option<f64>> {
        match self {
            Self::ScalarZ { prior, snr, .. } => Ok(Some(integrated_mmse(prior, *snr)?)),
            Self::ScalarZMismatch { prior, prior_q, snr, .. } => Ok(Some(2.0 * output_relative_entropy(prior, prior_q, *snr)?)),
            Self::CouplingB { prior, snr, .. } => Ok(is_standard_gaussian(prior).then(|| coupling_b_variance(*snr))),
            Self::CouplingC { prior, snr, blocks, .. } => {
                Ok((blocks.is_none() && is_standard_gaussian(prior)).then(|| coupling_c_variance(*snr)))
            }
            Self::CrossCoupling { .. } | Self::CausalAnticausal { .. } | Self::CausalVsNoncausal { .. } => Ok(None),
            Self::Duncan { rule: ItoRule::Right, .. } => Ok(None),
            Self::Duncan { process, horizon, .. } | Self::FeedbackDPhi { process, horizon, .. } => {
                causal_error_integral(process, *horizon)
            }
            Self::DuncanLimit { prior, horizon, .. } => Ok(Some(integrated_mmse(prior, *horizon)? / (horizon * horizon))),
            Self::Mismatch { process, process_q, horizon, .. } | Self::FeedbackMPhi { process, process_q, horizon, .. } => {
                mismatch_variance(process, process_q, *horizon)
            }
            Self::SheetN { process, horizon, snr, .. } => {
                let Some((prior, m)) = process.piecewise() else { return Ok(None) };
                let m = m as f64;
                Ok(Some(m * integrated_mmse(prior, snr * horizon / m)?))
            }
        }
    }

    /// Simulates one path and evaluates the identity on it.
    ///
    /// Sub-stream 0 drives the input, 1 the noise and 2 any filter randomness.
    pub fn run_path(&self, seed: RngSeed) -> Result<IdentityReport> {
        let input_seed = seed.child(0);
        let noise_seed = seed.child(1);
        let report = match self {
            Self::ScalarZ { prior, snr, n_steps, mode } => {
                let x = prior.sample(&mut input_seed.rng());
                let w = sample_brownian(&grid(*snr, *n_steps)?, noise_seed);
                with_input(scalar_z(&bm_coupling_from_noise(x, w)?, prior, *mode)?, x)
            }
            Self::ScalarZMismatch { prior, prior_q, snr, n_steps } => {
                let x = prior.sample(&mut input_seed.rng());
                let w = sample_brownian(&grid(*snr, *n_steps)?, noise_seed);
                with_input(scalar_z_mismatch(&bm_coupling_from_noise(x, w)?, prior, prior_q)?, x)
            }
            Self::CouplingB { prior, snr, evaluation } => {
                let x = prior.sample(&mut input_seed.rng());
                let n = standard_normal(&mut noise_seed.rng());
                let quad = coupling_b_z(prior, x, n, *snr)?;
                let (left, right) = match evaluation {
                    Evaluation::Quadrature => (quad, coupling_b_z_from_ztilde(prior, x, n, *snr)?),
                    Evaluation::ClosedForm => {
                        (closed_form_z(CouplingKind::AdditiveStandardGaussian, prior, x, n, *snr)?, quad)
                    }
                };
                with_input(IdentityReport::new(Identity::CouplingBZ, left, right, Mode::Analytic)?, x)
            }
            Self::CouplingC { prior, snr, blocks, evaluation } => {
                let x = prior.sample(&mut input_seed.rng());
                let (left, right) = match blocks {
                    Some(m) => {
                        let sample = simulate_independent_coupling(x, *snr, *m, noise_seed)?;
                        let n = sample.y.last() - snr.sqrt() * x;
                        (coupling_c_z_blocks(prior, &sample)?, coupling_c_z_limit(prior, x, n, *snr)?)
                    }
                    None => {
                        let n = standard_normal(&mut noise_seed.rng());
                        let limit = coupling_c_z_limit(prior, x, n, *snr)?;
                        match evaluation {
                            Evaluation::Quadrature => (limit, coupling_c_z_limit_via_error(prior, x, n, *snr)?),
                            Evaluation::ClosedForm => (
                                closed_form_z(CouplingKind::IndependentGaussians { blocks: 1 }, prior, x, n, *snr)?,
                                limit,
                            ),
                        }
                    }
                };
                with_input(IdentityReport::new(Identity::CouplingCZ, left, right, Mode::Analytic)?, x)
            }
            Self::CrossCoupling { prior, n_steps } => {
                let x = prior.sample(&mut input_seed.rng());
                let w = sample_brownian(&grid(1.0, *n_steps)?, noise_seed);
                with_input(cross_coupling_check(prior, x, &w)?, x)
            }
            Self::Duncan { process, horizon, n_steps, mode, filter, rule } => {
                let s = sample_channel(process, &grid(*horizon, *n_steps)?, Phi::Identity, seed)?;
                let f = causal_filter(*filter, process, &s.y, seed.child(2))?;
                let r = match (mode, process) {
                    (Mode::Analytic, ProcessPrior::ConstantX { prior }) => duncan_d_analytic(prior, &s.x, &s.y, &f, &s.w)?,
                    (Mode::Analytic, _) => {
                        return Err(Error::Unsupported("analytic Duncan mode needs a constant input".into()))
                    }
                    (Mode::Algebraic, _) => duncan_d_with_rule(&s.x, &s.y, &f, &s.w, *rule)?,
                };
                match process {
                    ProcessPrior::ConstantX { .. } => with_input(r, s.x.value(0)),
                    _ => r,
                }
            }
            Self::DuncanLimit { prior, horizon, n_steps } => {
                let process = ProcessPrior::constant(prior.clone());
                let s = sample_channel(&process, &grid(*horizon, *n_steps)?, Phi::Identity, seed)?;
                let f = causal_filter(FilterMethod::Exact, &process, &s.y, seed.child(2))?;
                let r = duncan_d_with_rule(&s.x, &s.y, &f, &s.w, ItoRule::Left)?;
                let scaled = IdentityReport::new(Identity::DuncanD, r.left / horizon, r.right / horizon, r.mode)?
                    .with_components(r.components);
                with_input(scaled, s.x.value(0))
            }
            Self::Mismatch { process, process_q, horizon, n_steps, filter } => {
                let s = sample_channel(process, &grid(*horizon, *n_steps)?, Phi::Identity, seed)?;
                let fp = causal_filter(*filter, process, &s.y, seed.child(2))?;
                let fq = causal_filter(*filter, process_q, &s.y, seed.child(3))?;
                mismatch_m(&s.x, &s.y, &fp, &fq, &s.w)?
            }
            Self::FeedbackDPhi { phi, process, horizon, n_steps, filter } => {
                let s = sample_channel(process, &grid(*horizon, *n_steps)?, *phi, seed)?;
                let stat = phi.observation_statistic(&s.y)?;
                let f = causal_filter(*filter, process, &stat, seed.child(2))?;
                feedback_d_phi(*phi, &s.x, &s.y, &s.w, &f)?
            }
            Self::FeedbackMPhi { phi, process, process_q, horizon, n_steps, filter } => {
                let s = sample_channel(process, &grid(*horizon, *n_steps)?, *phi, seed)?;
                let stat = phi.observation_statistic(&s.y)?;
                let fp = causal_filter(*filter, process, &stat, seed.child(2))?;
                let fq = causal_filter(*filter, process_q, &stat, seed.child(3))?;
                feedback_m_phi(*phi, &s.x, &s.y, &s.w, &fp, &fq)?
            }
            Self::SheetN { process, horizon, snr, time_steps, snr_steps } => {
                let spec = SheetSpec::new(grid(*horizon, *time_steps)?, grid(*snr, *snr_steps)?)?;
                let xs = process.sample_segments(&mut input_seed.rng())?;
                sheet_n(process, &xs, &sample_sheet(&spec, noise_seed)?)?
            }
            Self::CausalAnticausal { process, horizon, n_steps } => {
                let s = sample_channel(process, &grid(*horizon, *n_steps)?, Phi::Identity, seed)?;
                causal_anticausal_j(process, &s.x, &s.y, &s.w)?
            }
            Self::CausalVsNoncausal { process, horizon, time_steps, snr_steps } => {
                let spec = SheetSpec::new(grid(*horizon, *time_steps)?, grid(1.0, *snr_steps)?)?;
                let xs = process.sample_segments(&mut input_seed.rng())?;
                causal_vs_noncausal(process, &xs, &sample_sheet(&spec, noise_seed)?)?
            }
        };
        Ok(report.with_seed(seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tagged_json_and_rejects_unknown_fields() {
        let s: Scenario = serde_json::from_str(
            r#"{"identity":"scalar_z","prior":{"kind":"gaussian","mean":0.0,"variance":1.0},"snr":1.0,"n_steps":64}"#,
        )
        .unwrap();
        assert_eq!(s.identity(), Identity::ScalarZ);
        assert_eq!(s.tag(), "scalar_z");
        let bad = serde_json::from_str::<Scenario>(
            r#"{"identity":"scalar_z","prior":{"kind":"gaussian","mean":0.0,"variance":1.0},"snr":1.0,"n_steps":64,"extra":1}"#,
        );
        assert!(bad.is_err());
        let round: Scenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(round, s);
    }

    #[test]
    fn validation_runs_before_sampling() {
        let g = ScalarPrior::standard_gaussian();
        assert!(Scenario::ScalarZ { prior: g.clone(), snr: 0.0, n_steps: 4, mode: Mode::Algebraic }.validate().is_err());
        let pc = ProcessPrior::PiecewiseConstantIid { prior: g.clone(), segments: 3 };
        assert!(Scenario::CausalAnticausal { process: pc, horizon: 1.0, n_steps: 64 }.validate().is_err());
        let ou = ProcessPrior::OrnsteinUhlenbeck { mean_reversion: 1.0, diffusion: 1.0, initial: g.clone() };
        assert!(Scenario::SheetN { process: ou.clone(), horizon: 1.0, snr: 1.0, time_steps: 8, snr_steps: 8 }.validate().is_err());
        let analytic_ou = Scenario::Duncan {
            process: ou,
            horizon: 1.0,
            n_steps: 8,
            mode: Mode::Analytic,
            filter: FilterMethod::Exact,
            rule: ItoRule::Left,
        };
        assert!(analytic_ou.validate().is_err());
        let tp = ScalarPrior::two_point(-1.0, 1.0, 0.5).unwrap();
        assert!(Scenario::CouplingB { prior: tp, snr: 1.0, evaluation: Evaluation::ClosedForm }.validate().is_err());
    }

    #[test]
    fn variance_targets() {
        let g = ScalarPrior::standard_gaussian();
        let z = Scenario::ScalarZ { prior: g.clone(), snr: 1.0, n_steps: 8, mode: Mode::Algebraic };
        assert!((z.variance_target().unwrap().unwrap() - 2f64.ln()).abs() < 1e-10);
        assert!((coupling_b_variance(1.0) - 0.857_076).abs() < 1e-6);
        assert_eq!(coupling_c_variance(1.0), 0.375);
        let m = Scenario::Mismatch {
            process: ProcessPrior::constant(g.clone()),
            process_q: ProcessPrior::constant(ScalarPrior::gaussian(0.0, 2.0).unwrap()),
            horizon: 1.0,
            n_steps: 8,
            filter: FilterMethod::Exact,
        };
        let kl = 0.5 * (2.0 / 3.0 - 1.0 + 1.5f64.ln());
        assert!((m.variance_target().unwrap().unwrap() - 2.0 * kl).abs() < 1e-10);
        let lim = Scenario::DuncanLimit { prior: g.clone(), horizon: 10.0, n_steps: 8 };
        assert!((lim.variance_target().unwrap().unwrap() - 11f64.ln() / 100.0).abs() < 1e-10);
        let sheet = Scenario::SheetN {
            process: ProcessPrior::PiecewiseConstantIid { prior: g, segments: 2 },
            horizon: 1.0,
            snr: 1.0,
            time_steps: 8,
            snr_steps: 8,
        };
        assert!((sheet.variance_target().unwrap().unwrap() - 2.0 * 1.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn every_scenario_runs_and_is_deterministic() {
        let g = ScalarPrior::standard_gaussian();
        let c = ProcessPrior::constant(g.clone());
        let q = ProcessPrior::constant(ScalarPrior::gaussian(0.0, 2.0).unwrap());
        let scenarios = vec![
            Scenario::ScalarZ { prior: g.clone(), snr: 1.0, n_steps: 32, mode: Mode::Analytic },
            Scenario::ScalarZMismatch { prior: g.clone(), prior_q: ScalarPrior::two_point(-1.0, 1.0, 0.5).unwrap(), snr: 1.0, n_steps: 32 },
            Scenario::CouplingB { prior: g.clone(), snr: 1.0, evaluation: Evaluation::ClosedForm },
            Scenario::CouplingC { prior: g.clone(), snr: 1.0, blocks: Some(4), evaluation: Evaluation::Quadrature },
            Scenario::CouplingC { prior: g.clone(), snr: 1.0, blocks: None, evaluation: Evaluation::ClosedForm },
            Scenario::CrossCoupling { prior: g.clone(), n_steps: 32 },
            Scenario::Duncan { process: c.clone(), horizon: 1.0, n_steps: 32, mode: Mode::Algebraic, filter: FilterMethod::Exact, rule: ItoRule::Left },
            Scenario::DuncanLimit { prior: g.clone(), horizon: 10.0, n_steps: 32 },
            Scenario::Mismatch { process: c.clone(), process_q: q.clone(), horizon: 1.0, n_steps: 32, filter: FilterMethod::Exact },
            Scenario::FeedbackDPhi { phi: Phi::ObservableDrift { b: 0.5 }, process: c.clone(), horizon: 1.0, n_steps: 32, filter: FilterMethod::Exact },
            Scenario::FeedbackMPhi { phi: Phi::ObservableDrift { b: 0.5 }, process: c.clone(), process_q: q, horizon: 1.0, n_steps: 32, filter: FilterMethod::Exact },
            Scenario::SheetN { process: c.clone(), horizon: 1.0, snr: 1.0, time_steps: 16, snr_steps: 16 },
            Scenario::CausalAnticausal { process: c.clone(), horizon: 1.0, n_steps: 32 },
            Scenario::CausalVsNoncausal { process: c, horizon: 1.0, time_steps: 16, snr_steps: 16 },
        ];
        for s in &scenarios {
            s.validate().unwrap();
            let a = s.run_path(RngSeed::new(9, 3)).unwrap();
            let b = s.run_path(RngSeed::new(9, 3)).unwrap();
            assert_eq!(a, b, "{}", s.tag());
            assert_eq!(a.identity, s.identity());
            if s.closure() == Closure::Exact {
                assert!(a.closes() || matches!(s, Scenario::CausalAnticausal { .. } | Scenario::CausalVsNoncausal { .. }), "{}", s.tag());
            }
        }
    }

    #[test]
    fn overrides() {
        let mut s = Scenario::SheetN {
            process: ProcessPrior::constant(ScalarPrior::standard_gaussian()),
            horizon: 1.0,
            snr: 1.0,
            time_steps: 8,
            snr_steps: 8,
        };
        assert!(s.set_steps(32));
        assert!(!s.set_mode(Mode::Analytic));
        assert!(matches!(s, Scenario::SheetN { time_steps: 32, snr_steps: 32, .. }));
        let mut b = Scenario::CouplingB { prior: ScalarPrior::standard_gaussian(), snr: 1.0, evaluation: Evaluation::Quadrature };
        assert!(!b.set_steps(8));
    }
}
