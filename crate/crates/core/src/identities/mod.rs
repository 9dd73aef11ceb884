//! Tracking errors computed two ways on one path: density minus half the
//! squared-error integral (`left`) and a stochastic integral (`right`).

mod process;
mod reversal;
mod scalar;
mod sheet;

use std::io::Write;

use serde::Serialize;

use crate::densities::{girsanov_exponent, Mode};
use crate::error::{Error, Result};
use crate::stochastic::{ito_sum, left_sum, ItoRule, RngSeed, SamplePath};

pub use process::{duncan_d, duncan_d_analytic, duncan_d_with_rule, feedback_d_phi, feedback_m_phi, mismatch_m};
pub use reversal::{causal_anticausal_j, reverse_path, reverse_step_path};
pub use scalar::{
    closed_form_z, coupling_b_z, coupling_b_z_from_ztilde, coupling_c_z_blocks, coupling_c_z_limit,
    coupling_c_z_limit_via_error, cross_coupling_check, scalar_z, scalar_z_mismatch, ztilde_gamma,
};
pub use sheet::{causal_vs_noncausal, sheet_n};

/// Bound on `|left - right| / (1 + |left|)` for algebraic identities.
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-9;

/// Catalogue of tracking errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    ScalarZ,
    ScalarZMismatch,
    CouplingBZ,
    CouplingCZ,
    CrossCoupling,
    DuncanD,
    MismatchM,
    FeedbackDPhi,
    FeedbackMPhi,
    SheetN,
    CausalAnticausalJ,
    CausalVsNoncausal,
}

impl Identity {
    pub const ALL: [Identity; 12] = [
        Self::ScalarZ,
        Self::ScalarZMismatch,
        Self::CouplingBZ,
        Self::CouplingCZ,
        Self::CrossCoupling,
        Self::DuncanD,
        Self::MismatchM,
        Self::FeedbackDPhi,
        Self::FeedbackMPhi,
        Self::SheetN,
        Self::CausalAnticausalJ,
        Self::CausalVsNoncausal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::ScalarZ => "scalar_z",
            Self::ScalarZMismatch => "scalar_z_mismatch",
            Self::CouplingBZ => "coupling_b_z",
            Self::CouplingCZ => "coupling_c_z",
            Self::CrossCoupling => "cross_coupling",
            Self::DuncanD => "duncan_d",
            Self::MismatchM => "mismatch_m",
            Self::FeedbackDPhi => "feedback_d_phi",
            Self::FeedbackMPhi => "feedback_m_phi",
            Self::SheetN => "sheet_n",
            Self::CausalAnticausalJ => "causal_anticausal_j",
            Self::CausalVsNoncausal => "causal_vs_noncausal",
        }
    }
}

impl std::fmt::Display for Identity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Both sides of one identity on one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity: Identity,
    pub left: f64,
    pub right: f64,
    pub gap: f64,
    pub mode: Mode,
    pub seed: Option<RngSeed>,
    /// Named intermediate terms (information densities, error integrals).
    pub components: Vec<(&'static str, f64)>,
}

impl IdentityReport {
    pub(crate) fn new(identity: Identity, left: f64, right: f64, mode: Mode) -> Result<Self> {
        if !left.is_finite() || !right.is_finite() {
            return Err(Error::NonFinite("identity report"));
        }
        Ok(Self { identity, left, right, gap: left - right, mode, seed: None, components: Vec::new() })
    }

    pub(crate) fn with_components(mut self, components: Vec<(&'static str, f64)>) -> Self {
        self.components = components;
        self
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = Some(seed);
        self
    }

    /// `|gap| / (1 + |left|)`.
    pub fn normalized_gap(&self) -> f64 {
        self.gap.abs() / (1.0 + self.left.abs())
    }

    /// Whether the two sides agree to [`ALGEBRAIC_TOLERANCE`].
    pub fn closes(&self) -> bool {
        self.normalized_gap() <= ALGEBRAIC_TOLERANCE
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

/// Writes reports as CSV with columns `identity, master_seed, stream_index, left, right, gap, mode`.
pub fn write_reports_csv<W: Write>(reports: &[IdentityReport], writer: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["identity", "master_seed", "stream_index", "left", "right", "gap", "mode"])?;
    for r in reports {
        let (m, s) = r.seed.map_or((String::new(), String::new()), |s| (s.master_seed.to_string(), s.stream_index.to_string()));
        out.write_record([
            r.identity.name().to_string(),
            m,
            s,
            format!("{:.17e}", r.left),
            format!("{:.17e}", r.right),
            format!("{:.17e}", r.gap),
            r.mode.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Terms of a matched tracking error for `dY = rate h dt + dW`, `d<W> = rate dt`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TrackingTerms {
    pub information: f64,
    pub half_error: f64,
    pub stochastic: f64,
}

pub(crate) fn tracking_terms(
    signal: &[f64],
    estimate: &[f64],
    y: &[f64],
    w: &[f64],
    step: f64,
    rate: f64,
    rule: ItoRule,
) -> TrackingTerms {
    let information = girsanov_exponent(signal, y, step, rate) - girsanov_exponent(estimate, y, step, rate);
    let err: Vec<f64> = signal.iter().zip(estimate).map(|(a, b)| a - b).collect();
    let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
    let half_error = 0.5 * rate * left_sum(&sq, step);
    let stochastic = match rule {
        ItoRule::Left => ito_sum(&err, w),
        ItoRule::Right => ito_sum(&err[1..], w),
    };
    TrackingTerms { information, half_error, stochastic }
}

pub(crate) fn check_grids(paths: &[&SamplePath]) -> Result<()> {
    for p in &paths[1..] {
        paths[0].same_grid(p)?;
    }
    Ok(())
}

/// Matched report on standard paths.
pub(crate) fn tracking_report(
    identity: Identity,
    signal: &SamplePath,
    estimate: &SamplePath,
    y: &SamplePath,
    w: &SamplePath,
    rule: ItoRule,
) -> Result<IdentityReport> {
    check_grids(&[signal, estimate, y, w])?;
    if estimate.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("estimate"));
    }
    let t = tracking_terms(signal.values(), estimate.values(), y.values(), w.values(), y.grid().step(), 1.0, rule);
    Ok(IdentityReport::new(identity, t.information - t.half_error, t.stochastic, Mode::Algebraic)?.with_components(vec![
        ("information_density", t.information),
        ("half_error", t.half_error),
    ]))
}

/// Mismatched report: `log dP/dQ - 1/2 int [(q - x)^2 - (p - x)^2]` against `int (p - q) dW`.
pub(crate) fn mismatch_report(
    identity: Identity,
    signal: &SamplePath,
    est_p: &SamplePath,
    est_q: &SamplePath,
    y: &SamplePath,
    w: &SamplePath,
) -> Result<IdentityReport> {
    check_grids(&[signal, est_p, est_q, y, w])?;
    if est_q.values().iter().chain(est_p.values()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mismatched estimate"));
    }
    let step = y.grid().step();
    let log_ratio = girsanov_exponent(est_p.values(), y.values(), step, 1.0)
        - girsanov_exponent(est_q.values(), y.values(), step, 1.0);
    let excess: Vec<f64> = signal
        .values()
        .iter()
        .zip(est_p.values().iter().zip(est_q.values()))
        .map(|(x, (p, q))| (q - x) * (q - x) - (p - x) * (p - x))
        .collect();
    let half_excess = 0.5 * left_sum(&excess, step);
    let diff: Vec<f64> = est_p.values().iter().zip(est_q.values()).map(|(p, q)| p - q).collect();
    let stochastic = ito_sum(&diff, w.values());
    Ok(IdentityReport::new(identity, log_ratio - half_excess, stochastic, Mode::Algebraic)?
        .with_components(vec![("log_likelihood_ratio", log_ratio), ("half_excess_error", half_excess)]))
}
