//! CSV and JSON outputs of a run and the statistics pass over them.
//!
//! Floats are written in shortest round-trip form, so re-reading a file
//! recovers every value bit-for-bit.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{
    aggregate, correlate, delta_points, run_experiment, stepwise_deltas, AbortedTrial, DeltaPair, DeltaRecord, ExperimentConfig,
    ExperimentResults, FitAxes, LayerRecord, LayerSummary, Stage, TrainingRecord,
};

pub const LAYERS_CSV: &str = "layers.csv";
pub const DELTAS_CSV: &str = "deltas.csv";
pub const TRAINING_CSV: &str = "training.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const CORR_CSV: &str = "corr.csv";
pub const METADATA_JSON: &str = "metadata.json";

pub const LAYERS_HEADER: &[&str] = &["trial", "stage", "layer", "entropy_SA", "gd", "gpf", "energy"];
pub const DELTAS_HEADER: &[&str] = &["trial", "stage", "step", "d_entropy", "d_gd", "d_gpf"];
pub const TRAINING_HEADER: &[&str] = &["trial", "iter", "energy"];
pub const SUMMARY_HEADER: &[&str] = &[
    "stage",
    "layer",
    "mean_entropy",
    "std_entropy",
    "mean_gd",
    "std_gd",
    "mean_gpf",
    "std_gpf",
];
pub const CORR_HEADER: &[&str] = &["stage", "pair", "excluded_final", "n", "pearson_r", "slope", "intercept"];

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrRow {
    pub stage: Stage,
    pub pair: String,
    pub excluded_final: bool,
    pub n: usize,
    pub pearson_r: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub config: ExperimentConfig,
    pub param_count: usize,
    pub trial_seed_algorithm: String,
    pub parameter_rng: String,
    pub entropy_block_size: usize,
    pub fit_axes: FitAxes,
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
    pub ground_state_entropy: f64,
    pub ground_state_choice: String,
    pub trials_completed: usize,
    pub aborted: Vec<AbortedTrial>,
}

impl Metadata {
    pub fn from_results(r: &ExperimentResults) -> Self {
        Self {
            version: VERSION.to_string(),
            config: r.config.clone(),
            param_count: r.param_count,
            trial_seed_algorithm: "splitmix64(base_seed + (trial + 1) * 0x9E3779B97F4A7C15)".into(),
            parameter_rng: "ChaCha8Rng::seed_from_u64(trial_seed), gen::<f64>() * 2pi per slot in slot order".into(),
            entropy_block_size: r.config.n_qubits / 2,
            fit_axes: r.config.fit_axes,
            ground_energy: r.ground_energy,
            ground_degeneracy: r.ground_degeneracy,
            ground_state_entropy: r.ground_entropy,
            ground_state_choice: "lowest-index canonical basis vector".into(),
            trials_completed: r.config.trials - r.aborts.len(),
            aborted: r.aborts.clone(),
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV whose header must equal `header` exactly.
pub fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::InvalidInput(format!(
            "{}: header `{}` does not match `{}`",
            path.display(),
            found.join(","),
            header.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_layers(path: &Path) -> Result<Vec<LayerRecord>> {
    read_csv(path, LAYERS_HEADER)
}

pub fn read_deltas(path: &Path) -> Result<Vec<DeltaRecord>> {
    read_csv(path, DELTAS_HEADER)
}

pub fn read_training(path: &Path) -> Result<Vec<TrainingRecord>> {
    read_csv(path, TRAINING_HEADER)
}

pub fn read_summary(path: &Path) -> Result<Vec<LayerSummary>> {
    read_csv(path, SUMMARY_HEADER)
}

/// Writes layers, deltas, training and metadata files into `dir`.
pub fn write_run(dir: &Path, results: &ExperimentResults) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join(LAYERS_CSV), LAYERS_HEADER, &results.layers)?;
    write_csv(&dir.join(DELTAS_CSV), DELTAS_HEADER, &results.deltas)?;
    write_csv(&dir.join(TRAINING_CSV), TRAINING_HEADER, &results.training)?;
    let meta = serde_json::to_string_pretty(&Metadata::from_results(results))?;
    fs::write(dir.join(METADATA_JSON), meta + "\n")?;
    Ok(())
}

/// Runs the experiment and writes its outputs into `dir`.
pub fn run_to_dir(config: &ExperimentConfig, threads: Option<usize>, dir: &Path) -> Result<ExperimentResults> {
    let results = run_experiment(config, threads)?;
    write_run(dir, &results)?;
    Ok(results)
}

pub fn read_metadata(dir: &Path) -> Result<Metadata> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(METADATA_JSON))?)?)
}

/// Correlation rows for every stage and pair; both exclusion settings
/// unless `excluded_only`. An undefined correlation (too few points or zero
/// variance) is written with NaN fit values and reported in `diagnostics`.
pub fn correlation_rows(
    deltas: &[DeltaRecord],
    axes: FitAxes,
    excluded_only: bool,
    diagnostics: &mut Vec<String>,
) -> Result<Vec<CorrRow>> {
    let mut stages: Vec<Stage> = deltas.iter().map(|d| d.stage).collect();
    stages.sort();
    stages.dedup();
    let settings: &[bool] = if excluded_only { &[true] } else { &[false, true] };
    let mut rows = Vec::new();
    for stage in stages {
        for pair in DeltaPair::ALL {
            for &excl in settings {
                let row = match correlate(deltas, stage, pair, excl, axes) {
                    Ok(c) => CorrRow {
                        stage,
                        pair: pair.name().into(),
                        excluded_final: excl,
                        n: c.n_points,
                        pearson_r: c.pearson_r,
                        slope: c.slope,
                        intercept: c.intercept,
                    },
                    Err(Error::UndefinedCorrelation(msg)) => {
                        diagnostics.push(format!("excluded_final={excl}: {msg}"));
                        CorrRow {
                            stage,
                            pair: pair.name().into(),
                            excluded_final: excl,
                            n: delta_points(deltas, stage, pair, excl).0.len(),
                            pearson_r: f64::NAN,
                            slope: f64::NAN,
                            intercept: f64::NAN,
                        }
                    }
                    Err(e) => return Err(e),
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct StatsOutput {
    pub summary: Vec<LayerSummary>,
    pub corr: Vec<CorrRow>,
    pub diagnostics: Vec<String>,
}

/// Recomputes summary and correlations from `input/layers.csv` and writes
/// `summary.csv` and `corr.csv` into `out`. The fit axes come from
/// `input/metadata.json` when present.
pub fn run_stats(input: &Path, out: &Path, excluded_only: bool) -> Result<StatsOutput> {
    let layers = read_layers(&input.join(LAYERS_CSV))?;
    if layers.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} has no data rows",
            input.join(LAYERS_CSV).display()
        )));
    }
    let axes = read_metadata(input).map(|m| m.fit_axes).unwrap_or_default();
    let summary = aggregate(&layers)?;
    let (deltas, mut diagnostics) = stepwise_deltas(&layers);
    let corr = correlation_rows(&deltas, axes, excluded_only, &mut diagnostics)?;
    fs::create_dir_all(out)?;
    write_csv(&out.join(SUMMARY_CSV), SUMMARY_HEADER, &summary)?;
    write_csv(&out.join(CORR_CSV), CORR_HEADER, &corr)?;
    Ok(StatsOutput {
        summary,
        corr,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        let rows = vec![LayerRecord {
            trial: 0,
            stage: Stage::Opt,
            layer: 3,
            entropy_sa: 0.1 + 0.2,
            gd: std::f64::consts::PI,
            gpf: 1e-300,
            energy: -7.727406610312546,
        }];
        write_csv(&p, LAYERS_HEADER, &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("trial,stage,layer,entropy_SA,gd,gpf,energy\n0,opt,3,"));
        assert_eq!(read_layers(&p).unwrap(), rows);
    }

    #[test]
    fn undefined_correlation_is_nan_row() {
        let deltas: Vec<DeltaRecord> = (0..2)
            .flat_map(|t| {
                (1..=2).map(move |s| DeltaRecord {
                    trial: t,
                    stage: Stage::Init,
                    step: s,
                    d_entropy: (t + s) as f64,
                    d_gd: (t * s) as f64,
                    d_gpf: s as f64 * 0.5 + t as f64,
                })
            })
            .collect();
        let mut diag = Vec::new();
        let rows = correlation_rows(&deltas, FitAxes::default(), false, &mut diag).unwrap();
        assert_eq!(rows.len(), 4);
        let excl: Vec<_> = rows.iter().filter(|r| r.excluded_final).collect();
        assert!(excl.iter().all(|r| r.n == 2 && r.pearson_r.is_nan()));
        assert!(rows
            .iter()
            .filter(|r| !r.excluded_final)
            .all(|r| r.n == 4 && r.pearson_r.is_finite()));
        assert_eq!(diag.len(), 2);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        fs::write(&p, "trial,stage,layer,entropy,gd,gpf,energy\n").unwrap();
        assert!(read_layers(&p).is_err());
    }
}
