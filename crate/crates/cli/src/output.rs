use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use infoest::montecarlo::CdfRow;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::verify::{Assertion, Run};

/// Prefix of the header line that carries the effective config.
pub const CONFIG_PREFIX: &str = "# config: ";

/// Writes `# ` comment lines that identify the producing config.
pub fn write_header<W: Write>(w: &mut W, configs: &[&ExperimentConfig]) -> Result<(), CliError> {
    writeln!(w, "# infoest-cli {}", env!("CARGO_PKG_VERSION"))?;
    for c in configs {
        let json = serde_json::to_string(c).map_err(|e| CliError::Config(e.to_string()))?;
        writeln!(w, "{CONFIG_PREFIX}{json}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    config: &'a str,
    identity: &'static str,
    parameter: Option<f64>,
    mode: String,
    n: usize,
    mean: f64,
    se_mean: f64,
    var: f64,
    se_var: f64,
    variance_target: Option<f64>,
    max_normalized_gap: f64,
    open_fraction: f64,
}

#[derive(Serialize)]
struct PathRow {
    parameter: Option<f64>,
    stream_index: u64,
    left: f64,
    right: f64,
    gap: f64,
    input: Option<f64>,
}

#[derive(Serialize)]
struct CdfLine<'a> {
    config: &'a str,
    identity: &'static str,
    value: f64,
    cdf: f64,
    lower: f64,
    upper: f64,
}

fn csv_writer<W: Write>(w: W, configs: &[&ExperimentConfig]) -> Result<csv::Writer<W>, CliError> {
    let mut w = w;
    write_header(&mut w, configs)?;
    Ok(csv::Writer::from_writer(w))
}

/// Summary table: one row per scenario run.
pub fn write_summary<W: Write>(w: W, items: &[(&ExperimentConfig, &[Run])]) -> Result<(), CliError> {
    let configs: Vec<&ExperimentConfig> = items.iter().map(|(c, _)| *c).collect();
    let mut csv = csv_writer(w, &configs)?;
    for (config, runs) in items {
        let label = config.label();
        for run in *runs {
            let e = &run.experiment;
            csv.serialize(SummaryRow {
                config: &label,
                identity: e.identity.name(),
                parameter: run.parameter,
                mode: e.mode.to_string(),
                n: e.stats.n,
                mean: e.stats.mean,
                se_mean: e.stats.std_error_mean,
                var: e.stats.variance,
                se_var: e.stats.std_error_variance,
                variance_target: run.variance_target,
                max_normalized_gap: e.max_normalized_gap,
                open_fraction: e.open_fraction(),
            })?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_paths<W: Write>(w: W, config: &ExperimentConfig, runs: &[Run]) -> Result<(), CliError> {
    let mut csv = csv_writer(w, &[config])?;
    for run in runs {
        for r in &run.experiment.records {
            csv.serialize(PathRow {
                parameter: run.parameter,
                stream_index: r.stream_index,
                left: r.left,
                right: r.right,
                gap: r.gap,
                input: r.input,
            })?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_assertions<W: Write>(w: W, configs: &[&ExperimentConfig], assertions: &[Assertion]) -> Result<(), CliError> {
    let mut csv = csv_writer(w, configs)?;
    for a in assertions {
        csv.serialize(a)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_cdf<W: Write>(w: W, items: &[(&ExperimentConfig, &'static str, Vec<CdfRow>)]) -> Result<(), CliError> {
    let configs: Vec<&ExperimentConfig> = items.iter().map(|(c, _, _)| *c).collect();
    let mut csv = csv_writer(w, &configs)?;
    for (config, identity, rows) in items {
        let label = config.label();
        for r in rows {
            csv.serialize(CdfLine { config: &label, identity, value: r.value, cdf: r.cdf, lower: r.lower, upper: r.upper })?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// A file sink, or stdout when no path is given.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

/// Per-config file names inside an output directory.
pub fn artefact(dir: &Path, label: &str, kind: &str) -> PathBuf {
    dir.join(format!("{label}.{kind}.csv"))
}
