use super::{tracking_report, tracking_terms, Identity, IdentityReport, TrackingTerms};
use crate::channel::simulate_channel;
use crate::densities::Mode;
use crate::error::{Error, Result};
use crate::filters::causal_filter_piecewise;
use crate::priors::{piecewise_path, posterior_moments_raw, ProcessPrior, ScalarPrior};
use crate::stochastic::{BrownianSheetGrid, ItoRule};

fn piecewise_law<'a>(process: &'a ProcessPrior, x_segments: &[f64]) -> Result<&'a ScalarPrior> {
    let (prior, m) = process
        .piecewise()
        .ok_or_else(|| Error::Unsupported("sheet identities need a piecewise-constant input".into()))?;
    if x_segments.len() != m {
        return Err(Error::InvalidParameter(format!("expected {m} block values, got {}", x_segments.len())));
    }
    Ok(prior)
}

/// Sums over blocks of the snr-domain tracking terms. Block `i` sees
/// `Y_g = g L x_i + W^i_g` where `W^i` collects the sheet cells over the
/// block's time span `L`, so its variance rate is `L`.
fn sheet_terms(prior: &ScalarPrior, x_segments: &[f64], sheet: &BrownianSheetGrid) -> Result<TrackingTerms> {
    let time = sheet.time_grid();
    let snr = *sheet.snr_grid();
    let len = time.segment_len(x_segments.len())?;
    let block = len as f64 * time.step();
    let prior_mean = prior.mean();
    let mut total = TrackingTerms { information: 0.0, half_error: 0.0, stochastic: 0.0 };
    for (i, &x) in x_segments.iter().enumerate() {
        let w = sheet.snr_path_over(i * len, (i + 1) * len)?;
        let y: Vec<f64> = snr.points().zip(w.values()).map(|(g, wv)| g * block * x + wv).collect();
        let est: Vec<f64> = snr
            .points()
            .zip(&y)
            .enumerate()
            .map(|(j, (g, &yv))| {
                if j == 0 {
                    prior_mean
                } else {
                    posterior_moments_raw(prior, g * block, g * block, yv).mean
                }
            })
            .collect();
        let signal = vec![x; y.len()];
        let t = tracking_terms(&signal, &est, &y, w.values(), snr.step(), block, ItoRule::Left);
        total.information += t.information;
        total.half_error += t.half_error;
        total.stochastic += t.stochastic;
    }
    Ok(total)
}

/// Tracking error over the snr axis of a Brownian sheet: information density
/// at the top level minus half the smoothing error integrated over time and
/// snr, against the per-block stochastic integrals of the smoothing error.
pub fn sheet_n(process: &ProcessPrior, x_segments: &[f64], sheet: &BrownianSheetGrid) -> Result<IdentityReport> {
    let prior = piecewise_law(process, x_segments)?;
    let t = sheet_terms(prior, x_segments, sheet)?;
    Ok(IdentityReport::new(Identity::SheetN, t.information - t.half_error, t.stochastic, Mode::Algebraic)?
        .with_components(vec![("information_density", t.information), ("half_error", t.half_error)]))
}

/// Filtering error at unit snr minus the smoothing error integrated over
/// snr in `[0, 1]`, against twice the difference of the two stochastic
/// integrals. The filter runs on the sheet's top time slice.
pub fn causal_vs_noncausal(process: &ProcessPrior, x_segments: &[f64], sheet: &BrownianSheetGrid) -> Result<IdentityReport> {
    let prior = piecewise_law(process, x_segments)?;
    let snr = sheet.snr_grid();
    if (snr.t1() - 1.0).abs() > 1e-12 {
        return Err(Error::Unsupported("the causal/non-causal relation is implemented at unit snr".into()));
    }
    let time = *sheet.time_grid();
    let x = piecewise_path(&time, x_segments)?;
    let w = sheet.time_slice(snr.n_steps())?;
    let y = simulate_channel(&x, &w)?;
    let filter = causal_filter_piecewise(prior, x_segments.len(), &y)?;
    let causal = tracking_report(Identity::DuncanD, &x, &filter.estimate, &y, &w, ItoRule::Left)?;
    let filtering_half = causal.component("half_error").unwrap_or(0.0);
    let time_info = causal.component("information_density").unwrap_or(0.0);
    let smooth = sheet_terms(prior, x_segments, sheet)?;
    let left = 2.0 * filtering_half - 2.0 * smooth.half_error;
    let right = 2.0 * (smooth.stochastic - causal.right);
    Ok(IdentityReport::new(Identity::CausalVsNoncausal, left, right, Mode::Algebraic)?.with_components(vec![
        ("filtering_error", 2.0 * filtering_half),
        ("smoothing_error", 2.0 * smooth.half_error),
        ("information_density_time", time_info),
        ("information_density_snr", smooth.information),
        ("duncan_gap", causal.gap),
        ("sheet_gap", smooth.information - smooth.half_error - smooth.stochastic),
    ]))
}
