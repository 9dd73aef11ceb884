use super::{tracking_report, Identity, IdentityReport};
use crate::densities::Mode;
use crate::error::{Error, Result};
use crate::filters::causal_filter_piecewise;
use crate::priors::ProcessPrior;
use crate::stochastic::{ito_sum, ItoRule, SamplePath};

/// Time reversal of a continuous path: `t -> Z_T - Z_{T - t}`.
pub fn reverse_path(z: &SamplePath) -> SamplePath {
    let n = z.grid().n_steps();
    let end = z.last();
    let values = (0..=n).map(|k| end - z.value(n - k)).collect();
    SamplePath::from_vec(*z.grid(), values)
}

/// Time reversal of a cell-valued path: cell `k` takes the value of cell `n - 1 - k`.
pub fn reverse_step_path(x: &SamplePath) -> SamplePath {
    let n = x.grid().n_steps();
    let values = (0..=n).map(|k| if k < n { x.value(n - 1 - k) } else { x.value(0) }).collect();
    SamplePath::from_vec(*x.grid(), values)
}

/// Causal minus anti-causal squared error against twice the difference of
/// the estimate integrals `int Xhat dW - int Xhat_rev dB`.
///
/// Only piecewise-constant inputs are accepted; for them the reversed
/// signal integral equals the forward one, which is checked at runtime.
pub fn causal_anticausal_j(process: &ProcessPrior, x: &SamplePath, y: &SamplePath, w: &SamplePath) -> Result<IdentityReport> {
    let (prior, segments) = process
        .piecewise()
        .ok_or_else(|| Error::Unsupported("time reversal is implemented for piecewise-constant inputs only".into()))?;
    x.same_grid(y)?;
    x.same_grid(w)?;
    let forward = causal_filter_piecewise(prior, segments, y)?;
    let x_rev = reverse_step_path(x);
    let y_rev = reverse_path(y);
    let b = reverse_path(w);
    let backward = causal_filter_piecewise(prior, segments, &y_rev)?;

    let signal_fwd = ito_sum(x.values(), w.values());
    let signal_rev = ito_sum(x_rev.values(), b.values());
    let condition = signal_rev - signal_fwd;
    if condition.abs() > 1e-9 * (1.0 + signal_fwd.abs()) {
        return Err(Error::ReversalCondition { gap: condition });
    }

    let fwd = tracking_report(Identity::DuncanD, x, &forward.estimate, y, w, ItoRule::Left)?;
    let rev = tracking_report(Identity::DuncanD, &x_rev, &backward.estimate, &y_rev, &b, ItoRule::Left)?;
    let err_fwd = 2.0 * fwd.component("half_error").unwrap_or(0.0);
    let err_rev = 2.0 * rev.component("half_error").unwrap_or(0.0);
    let left = err_fwd - err_rev;
    let right = 2.0 * (ito_sum(forward.estimate.values(), w.values()) - ito_sum(backward.estimate.values(), b.values()));
    Ok(IdentityReport::new(Identity::CausalAnticausalJ, left, right, Mode::Algebraic)?.with_components(vec![
        ("causal_error", err_fwd),
        ("anticausal_error", err_rev),
        ("information_density_forward", fwd.component("information_density").unwrap_or(0.0)),
        ("information_density_reverse", rev.component("information_density").unwrap_or(0.0)),
        ("forward_gap", fwd.gap),
        ("reverse_gap", rev.gap),
        ("reversal_condition", condition),
    ]))
}
