use infoest::catalogue::{Closure, Scenario};
use infoest::identities::ALGEBRAIC_TOLERANCE;
use infoest::montecarlo::{conditional_mean_by_bins, run_scenario, EstimatorStats, Experiment};
use serde::Serialize;

use crate::config::{ClosureCheck, ExperimentConfig, TargetKeyword, VarianceTarget};
use crate::error::{CliError, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Statistical,
    Algebraic,
}

/// One evaluated assertion, serialised as the machine-readable failure record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub config: String,
    pub assertion: String,
    pub parameter: Option<f64>,
    pub kind: Kind,
    pub observed: f64,
    pub target: f64,
    /// Standard error, or the tolerance for algebraic and ratio checks.
    pub se: f64,
    pub passed: bool,
}

/// One scenario run inside a config.
pub struct Run {
    pub parameter: Option<f64>,
    pub scenario: Scenario,
    pub experiment: Experiment,
    pub variance_target: Option<f64>,
}

pub struct Outcome {
    pub runs: Vec<Run>,
    pub assertions: Vec<Assertion>,
}

impl Outcome {
    pub fn status(&self) -> Status {
        self.assertions.iter().filter(|a| !a.passed).fold(Status::Pass, |s, a| {
            s.worst(match a.kind {
                Kind::Statistical => Status::Statistical,
                Kind::Algebraic => Status::Algebraic,
            })
        })
    }
}

struct Recorder<'a> {
    config: &'a str,
    parameter: Option<f64>,
    out: Vec<Assertion>,
}

impl Recorder<'_> {
    fn push(&mut self, name: impl Into<String>, kind: Kind, observed: f64, target: f64, se: f64, passed: bool) {
        self.out.push(Assertion {
            config: self.config.to_string(),
            assertion: name.into(),
            parameter: self.parameter,
            kind,
            observed,
            target,
            se,
            passed,
        });
    }

    fn within_se(&mut self, name: impl Into<String>, stats: &EstimatorStats, target: f64, variance: bool) {
        let check = if variance { stats.variance_check(target) } else { stats.mean_check(target) };
        self.push(name, Kind::Statistical, check.observed, target, check.std_error, check.passed());
    }
}

fn resolve_target(target: VarianceTarget, scenario: &Scenario) -> Result<Option<f64>, CliError> {
    Ok(match target {
        VarianceTarget::Keyword(TargetKeyword::None) => None,
        VarianceTarget::Keyword(TargetKeyword::Auto) => scenario.variance_target()?,
        VarianceTarget::Value(v) => Some(v),
    })
}

fn closure_expected(check: Option<ClosureCheck>, scenario: &Scenario) -> Closure {
    match check {
        Some(ClosureCheck::Exact) => Closure::Exact,
        Some(ClosureCheck::Broken) => Closure::Broken,
        Some(ClosureCheck::None) => Closure::None,
        None => scenario.closure(),
    }
}

/// Minimum share of open paths for a deliberately broken closure.
const BROKEN_FRACTION: f64 = 0.99;

fn check_run(rec: &mut Recorder<'_>, config: &ExperimentConfig, run: &Run) -> Result<(), CliError> {
    let checks = &config.checks;
    let e = &run.experiment;
    if checks.zero_mean {
        rec.within_se("zero_mean", &e.stats, 0.0, false);
    }
    if let Some(target) = run.variance_target {
        rec.within_se("variance", &e.stats, target, true);
    }
    match closure_expected(checks.closure, &run.scenario) {
        Closure::Exact => {
            let ok = e.all_close();
            rec.push("closure", Kind::Algebraic, e.max_normalized_gap, 0.0, ALGEBRAIC_TOLERANCE, ok);
        }
        Closure::Broken => {
            let f = e.open_fraction();
            rec.push("closure_broken", Kind::Algebraic, f, 1.0, 1.0 - BROKEN_FRACTION, f >= BROKEN_FRACTION);
        }
        Closure::None => {}
    }
    if let Some(target) = checks.mean_gap_target {
        let gaps = EstimatorStats::from_samples(&e.gaps())?;
        rec.within_se("mean_gap", &gaps, target, false);
    }
    if let Some(n_bins) = checks.bins {
        let pairs = e.input_pairs();
        if pairs.len() != e.n_paths() {
            return Err(CliError::Config(format!("{} has no scalar input to bin on", run.scenario.tag())));
        }
        for (i, bin) in conditional_mean_by_bins(&pairs, n_bins)?.iter().enumerate() {
            rec.within_se(format!("bin_mean[{i}]"), &bin.stats, 0.0, false);
        }
    }
    if let Some(other) = &checks.identical_to {
        let twin = run_scenario(other, config.n_paths, config.master_seed)?;
        let differing = e
            .records
            .iter()
            .zip(&twin.records)
            .filter(|(a, b)| a.left.to_bits() != b.left.to_bits() || a.right.to_bits() != b.right.to_bits())
            .count();
        rec.push("identical", Kind::Algebraic, differing as f64, 0.0, 0.0, differing == 0);
    }
    Ok(())
}

fn check_sweep(rec: &mut Recorder<'_>, config: &ExperimentConfig, runs: &[Run]) -> Result<(), CliError> {
    rec.parameter = None;
    if let Some(limit) = config.checks.converges_to {
        for w in runs.windows(2) {
            let (a, b) = (&w[0].experiment.stats, &w[1].experiment.stats);
            let (da, db) = ((a.variance - limit).abs(), (b.variance - limit).abs());
            let se = a.std_error_variance.hypot(b.std_error_variance);
            rec.parameter = w[1].parameter;
            rec.push("converges", Kind::Statistical, db, da, se, db <= da + 4.0 * se);
        }
    }
    if let Some(ratio) = config.checks.rms_gap_ratio {
        let rms: Vec<f64> = runs
            .iter()
            .map(|r| {
                let g = r.experiment.gaps();
                (g.iter().map(|x| x * x).sum::<f64>() / g.len() as f64).sqrt()
            })
            .collect();
        for (i, w) in rms.windows(2).enumerate() {
            let observed = w[0] / w[1];
            rec.parameter = runs[i + 1].parameter;
            let ok = (observed / ratio.expected - 1.0).abs() <= ratio.tolerance;
            rec.push("rms_gap_ratio", Kind::Statistical, observed, ratio.expected, ratio.tolerance * ratio.expected, ok);
        }
    }
    Ok(())
}

/// Runs every scenario of a validated config and evaluates its assertions.
pub fn verify(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let label = config.label();
    let mut rec = Recorder { config: &label, parameter: None, out: Vec::new() };
    let runs = collect(config)?;
    for run in &runs {
        rec.parameter = run.parameter;
        check_run(&mut rec, config, run)?;
    }
    if config.sweep.is_some() {
        check_sweep(&mut rec, config, &runs)?;
    }
    Ok(Outcome { runs, assertions: rec.out })
}

/// Runs the scenarios without evaluating assertions.
pub fn collect(config: &ExperimentConfig) -> Result<Vec<Run>, CliError> {
    config
        .scenarios()?
        .into_iter()
        .map(|(parameter, scenario)| {
            let experiment = run_scenario(&scenario, config.n_paths, config.master_seed)?;
            let variance_target = resolve_target(config.checks.variance_target, &scenario)?;
            Ok(Run { parameter, scenario, experiment, variance_target })
        })
        .collect()
}
