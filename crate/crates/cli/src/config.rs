use std::fs;
use std::path::{Path, PathBuf};

use infoest::catalogue::Scenario;
use infoest::densities::Mode;
use infoest::montecarlo::MIN_PATHS;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub scenario: Scenario,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Directory for per-path, summary and check tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    /// Rows emitted by `cdf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdf_rows: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKeyword {
    Auto,
    None,
}

/// Variance target: `"auto"` (the scenario's analytic value), `"none"`, or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VarianceTarget {
    Keyword(TargetKeyword),
    Value(f64),
}

impl Default for VarianceTarget {
    fn default() -> Self {
        Self::Keyword(TargetKeyword::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureCheck {
    Exact,
    Broken,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioCheck {
    pub expected: f64,
    pub tolerance: f64,
}

fn yes() -> bool {
    true
}

/// Assertions evaluated by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default = "yes")]
    pub zero_mean: bool,
    #[serde(default)]
    pub variance_target: VarianceTarget,
    /// Pathwise closure; defaults to what the scenario promises.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureCheck>,
    /// Zero conditional mean over this many input-quantile bins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Target for the mean of `left - right`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_gap_target: Option<f64>,
    /// Another scenario that must give bit-identical reports at equal seeds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identical_to: Option<Scenario>,
    /// Sweeps: distance of the variance to this value must not grow along the sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converges_to: Option<f64>,
    /// Sweeps: ratio of successive RMS gaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rms_gap_ratio: Option<RatioCheck>,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            zero_mean: true,
            variance_target: VarianceTarget::default(),
            closure: None,
            bins: None,
            mean_gap_target: None,
            identical_to: None,
            converges_to: None,
            rms_gap_ratio: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Snr,
    Horizon,
    NSteps,
    Blocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// With `parameter = horizon`, grid steps per unit of time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_unit: Option<f64>,
}

fn count(v: f64, what: &str) -> Result<usize, CliError> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e12 {
        Ok(v as usize)
    } else {
        Err(CliError::Config(format!("{what} must be a positive integer, got {v}")))
    }
}

impl Sweep {
    /// The scenario at one parameter value.
    pub fn apply(&self, base: &Scenario, value: f64) -> Result<Scenario, CliError> {
        let mut s = base.clone();
        let unsupported = || CliError::Config(format!("scenario {} has no {:?} parameter", base.tag(), self.parameter));
        match self.parameter {
            SweepParameter::Snr => match &mut s {
                Scenario::ScalarZ { snr, .. }
                | Scenario::ScalarZMismatch { snr, .. }
                | Scenario::CouplingB { snr, .. }
                | Scenario::CouplingC { snr, .. }
                | Scenario::SheetN { snr, .. } => *snr = value,
                _ => return Err(unsupported()),
            },
            SweepParameter::Horizon => {
                match &mut s {
                    Scenario::Duncan { horizon, .. }
                    | Scenario::DuncanLimit { horizon, .. }
                    | Scenario::Mismatch { horizon, .. }
                    | Scenario::FeedbackDPhi { horizon, .. }
                    | Scenario::FeedbackMPhi { horizon, .. }
                    | Scenario::SheetN { horizon, .. }
                    | Scenario::CausalAnticausal { horizon, .. }
                    | Scenario::CausalVsNoncausal { horizon, .. } => *horizon = value,
                    _ => return Err(unsupported()),
                }
                if let Some(per_unit) = self.steps_per_unit {
                    s.set_steps(count((per_unit * value).round(), "steps")?);
                }
            }
            SweepParameter::NSteps => {
                if !s.set_steps(count(value, "n_steps")?) {
                    return Err(unsupported());
                }
            }
            SweepParameter::Blocks => match &mut s {
                Scenario::CouplingC { blocks, .. } => *blocks = Some(count(value, "blocks")?),
                _ => return Err(unsupported()),
            },
        }
        Ok(s)
    }
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub mode: Option<Mode>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Display name: explicit name, else the file stem, else the scenario tag.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.scenario.tag().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.master_seed = seed;
        }
        if let Some(paths) = o.paths {
            self.n_paths = paths;
        }
        if let Some(steps) = o.steps {
            if !self.scenario.set_steps(steps) {
                eprintln!("warning: {} has no grid; --steps ignored", self.label());
            }
        }
        if let Some(mode) = o.mode {
            if !self.scenario.set_mode(mode) {
                eprintln!("warning: {} has no mode choice; --mode ignored", self.label());
            }
        }
    }

    /// Every scenario this config will run, paired with its sweep value.
    pub fn scenarios(&self) -> Result<Vec<(Option<f64>, Scenario)>, CliError> {
        match &self.sweep {
            None => Ok(vec![(None, self.scenario.clone())]),
            Some(sweep) => {
                if sweep.values.is_empty() {
                    return Err(CliError::Config("sweep has no values".into()));
                }
                sweep.values.iter().map(|&v| Ok((Some(v), sweep.apply(&self.scenario, v)?))).collect()
            }
        }
    }

    /// Checks every precondition before any sampling.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_paths < MIN_PATHS {
            return Err(CliError::Config(format!("n_paths must be at least {MIN_PATHS}, got {}", self.n_paths)));
        }
        for (_, s) in self.scenarios()? {
            s.validate().map_err(|e| CliError::Config(format!("{}: {e}", s.tag())))?;
        }
        if let Some(other) = &self.checks.identical_to {
            other.validate().map_err(|e| CliError::Config(format!("identical_to: {e}")))?;
        }
        if matches!(self.checks.bins, Some(b) if b < 2) {
            return Err(CliError::Config("bins must be at least 2".into()));
        }
        let sweep_only = self.checks.converges_to.is_some() || self.checks.rms_gap_ratio.is_some();
        if sweep_only && self.sweep.is_none() {
            return Err(CliError::Config("converges_to and rms_gap_ratio need a sweep".into()));
        }
        Ok(())
    }
}

/// Loads one config file, or every `*.json` in a directory (sorted by name).
pub fn load(path: &Path) -> Result<Vec<ExperimentConfig>, CliError> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        v.sort();
        if v.is_empty() {
            return Err(CliError::Config(format!("no .json configs in {}", path.display())));
        }
        v
    } else {
        vec![path.to_path_buf()]
    };
    files
        .iter()
        .map(|f| {
            let text = fs::read_to_string(f).map_err(|e| CliError::Config(format!("{}: {e}", f.display())))?;
            let mut c = ExperimentConfig::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", f.display())))?;
            if c.name.is_none() {
                c.name = f.file_stem().map(|s| s.to_string_lossy().into_owned());
            }
            Ok(c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"scenario":{"identity":"scalar_z","prior":{"kind":"gaussian","mean":0.0,"variance":1.0},"snr":1.0,"n_steps":64},"n_paths":1000,"master_seed":1}"#;

    #[test]
    fn defaults_and_round_trip() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert!(c.checks.zero_mean);
        assert_eq!(c.checks.variance_target, VarianceTarget::Keyword(TargetKeyword::Auto));
        let again = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn variance_target_forms() {
        for (text, want) in [
            (r#""none""#, VarianceTarget::Keyword(TargetKeyword::None)),
            (r#""auto""#, VarianceTarget::Keyword(TargetKeyword::Auto)),
            ("0.5", VarianceTarget::Value(0.5)),
        ] {
            let v: VarianceTarget = serde_json::from_str(text).unwrap();
            assert_eq!(v, want);
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = BASE.replace("\"n_paths\"", "\"paths_typo\":1,\"n_paths\"");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn sweeps_and_overrides() {
        let mut c = ExperimentConfig::from_json(BASE).unwrap();
        c.sweep = Some(Sweep { parameter: SweepParameter::Snr, values: vec![0.5, 2.0], steps_per_unit: None });
        let s = c.scenarios().unwrap();
        assert!(matches!(s[1].1, Scenario::ScalarZ { snr, .. } if snr == 2.0));
        c.sweep = Some(Sweep { parameter: SweepParameter::Blocks, values: vec![4.0], steps_per_unit: None });
        assert!(c.scenarios().is_err());
        c.sweep = Some(Sweep { parameter: SweepParameter::Snr, values: vec![], steps_per_unit: None });
        assert!(c.validate().is_err());
        c.sweep = None;
        c.apply(&Overrides { seed: Some(9), paths: Some(10), steps: Some(8), mode: Some(Mode::Analytic) });
        assert_eq!(c.master_seed, 9);
        assert!(matches!(c.scenario, Scenario::ScalarZ { n_steps: 8, mode: Mode::Analytic, .. }));
        assert!(c.validate().is_err());
    }
}
