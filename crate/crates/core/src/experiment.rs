//! Trial ensembles: seeded initialization, layer sweeps on random and
//! optimized circuits, aggregation, step-wise deltas and correlations.
//!
//! Seeding is fixed bit-for-bit so that a `(config, base_seed)` pair
//! determines every output value regardless of scheduling:
//!
//! * the seed of trial `i` is the `(i + 1)`-th output of a SplitMix64
//!   generator started at `base_seed` (see [`trial_seed`]);
//! * parameters are drawn from `ChaCha8Rng::seed_from_u64(trial_seed)`,
//!   one `f64` in `[0, 1)` per slot in slot order, scaled by `2π`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build, AnsatzKind, Circuit};
use crate::backend::{Backend, BackendKind, QuantumState};
use crate::error::{Error, Result};
use crate::geometry::{geodesic_to_target, geometric_phase_fraction};
use crate::model::{
    ground_space, ground_state_entropy, tfim_terms, Boundary, Expectation, GroundSpace, PauliTermList, TfimParams,
    DEFAULT_DEGENERACY_TOL,
};
use crate::mps::{MpsConfig, MpsState, DEFAULT_SVD_CUTOFF};
use crate::state::{LogBase, StateVector};
use crate::stats::{linear_fit, mean_std};
use crate::vqe::{optimize, AdamConfig, OptTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Init,
    Opt,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Init => "init",
            Stage::Opt => "opt",
        })
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "init" => Ok(Stage::Init),
            "opt" => Ok(Stage::Opt),
            other => Err(Error::Config(format!("unknown stage `{other}`"))),
        }
    }
}

/// Which regression line is fitted to a delta pair. Pearson r does not
/// depend on this choice; slope and intercept do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitAxes {
    /// Entropy delta (ordinate) regressed on the geometric delta.
    #[default]
    EntropyOnGeometry,
    GeometryOnEntropy,
}

fn default_j() -> f64 {
    1.0
}
fn default_trials() -> usize {
    1000
}
fn default_cutoff() -> f64 {
    DEFAULT_SVD_CUTOFF
}
fn default_stages() -> Vec<Stage> {
    vec![Stage::Init, Stage::Opt]
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_abort_fraction() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ansatz: AnsatzKind,
    pub n_qubits: usize,
    pub n_layers: usize,
    #[serde(default = "default_j", alias = "J")]
    pub j: f64,
    #[serde(default = "default_j")]
    pub h: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub backend: BackendKind,
    /// Defaults to `2^⌊N/2⌋`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_max: Option<usize>,
    #[serde(default = "default_cutoff")]
    pub svd_cutoff: f64,
    #[serde(default)]
    pub entropy_log_base: LogBase,
    #[serde(default = "default_stages")]
    pub stages: Vec<Stage>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// A run fails when more than this fraction of trials abort.
    #[serde(default = "default_abort_fraction")]
    pub max_abort_fraction: f64,
    #[serde(default)]
    pub fit_axes: FitAxes,
}

impl ExperimentConfig {
    pub fn new(ansatz: AnsatzKind, n_qubits: usize, n_layers: usize) -> Self {
        Self {
            ansatz,
            n_qubits,
            n_layers,
            j: 1.0,
            h: 1.0,
            boundary: Boundary::Periodic,
            trials: default_trials(),
            adam: AdamConfig::default(),
            base_seed: 0,
            backend: BackendKind::default(),
            chi_max: None,
            svd_cutoff: DEFAULT_SVD_CUTOFF,
            entropy_log_base: LogBase::E,
            stages: default_stages(),
            output_dir: default_output(),
            max_abort_fraction: default_abort_fraction(),
            fit_axes: FitAxes::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.stages.is_empty() {
            return Err(Error::Config("stages must not be empty".into()));
        }
        if self.n_qubits < 2 || self.n_qubits > crate::model::MAX_ED_QUBITS {
            return Err(Error::Config(format!(
                "n_qubits must be in 2..={}",
                crate::model::MAX_ED_QUBITS
            )));
        }
        if self.chi_max == Some(0) || self.svd_cutoff < 0.0 {
            return Err(Error::Config("chi_max must be >= 1 and svd_cutoff >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.max_abort_fraction) {
            return Err(Error::Config("max_abort_fraction must be in [0, 1]".into()));
        }
        self.adam.validate()
    }

    pub fn backend(&self) -> Backend {
        match self.backend {
            BackendKind::Statevector => Backend::Statevector,
            BackendKind::Mps => Backend::Mps(MpsConfig {
                chi_max: self.chi_max.unwrap_or(1 << (self.n_qubits / 2)),
                svd_cutoff: self.svd_cutoff,
            }),
        }
    }

    pub fn tfim(&self) -> Result<TfimParams> {
        TfimParams::new(self.n_qubits, self.j, self.h, self.boundary)
    }

    pub fn has_stage(&self, s: Stage) -> bool {
        self.stages.contains(&s)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(base_seed + (index + 1)·0x9E3779B97F4A7C15)`, i.e. output
/// `index + 1` of a SplitMix64 stream seeded with `base_seed`.
pub fn trial_seed(base_seed: u64, index: usize) -> u64 {
    splitmix64(base_seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Independent uniform angles in `[0, 2π)`, one per slot.
pub fn draw_initial_params(circuit: &Circuit, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..circuit.param_count)
        .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub trial: usize,
    pub stage: Stage,
    pub layer: usize,
    #[serde(rename = "entropy_SA")]
    pub entropy_sa: f64,
    pub gd: f64,
    pub gpf: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub trial: usize,
    pub stage: Stage,
    pub step: usize,
    pub d_entropy: f64,
    pub d_gd: f64,
    pub d_gpf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub trial: usize,
    pub iter: usize,
    pub energy: f64,
}

/// Settings shared by every layer sweep of a run.
#[derive(Debug, Clone, Copy)]
pub struct SweepSettings {
    pub block_size: usize,
    pub log_base: LogBase,
}

impl SweepSettings {
    pub fn balanced(n_qubits: usize, log_base: LogBase) -> Self {
        Self {
            block_size: n_qubits / 2,
            log_base,
        }
    }
}

/// Diagnostics after prep and after each layer, `L + 1` records.
///
/// `init` must be `|0…0⟩` on the chosen backend; the phase fraction is
/// measured against the post-prep state.
#[allow(clippy::too_many_arguments)]
pub fn layer_sweep<S: QuantumState + Expectation>(
    circuit: &Circuit,
    params: &[f64],
    gs: &GroundSpace,
    terms: &PauliTermList,
    settings: SweepSettings,
    mut state: S,
    trial: usize,
    stage: Stage,
) -> Result<Vec<LayerRecord>> {
    circuit.check_params(params)?;
    circuit.apply_prep(&mut state)?;
    let initial = state.clone();
    let mut out = Vec::with_capacity(circuit.n_layers + 1);
    for layer in 0..=circuit.n_layers {
        if layer > 0 {
            circuit.apply_layer(&mut state, params, layer - 1)?;
        }
        let dense = state.to_dense()?;
        let rec = LayerRecord {
            trial,
            stage,
            layer,
            entropy_sa: state.block_entropy(settings.block_size, settings.log_base)?,
            gd: geodesic_to_target(&dense, gs)?,
            gpf: geometric_phase_fraction(&initial, &state)?,
            energy: dense.expectation(terms)?,
        };
        if ![rec.entropy_sa, rec.gd, rec.gpf, rec.energy].iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite(format!("layer {layer} diagnostics")));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Layer sweep on the backend named by `backend`.
#[allow(clippy::too_many_arguments)]
pub fn layer_sweep_on(
    circuit: &Circuit,
    params: &[f64],
    gs: &GroundSpace,
    terms: &PauliTermList,
    settings: SweepSettings,
    backend: &Backend,
    trial: usize,
    stage: Stage,
) -> Result<Vec<LayerRecord>> {
    let n = circuit.n_qubits;
    match backend {
        Backend::Statevector => layer_sweep(circuit, params, gs, terms, settings, StateVector::zero(n)?, trial, stage),
        Backend::Mps(cfg) => layer_sweep(circuit, params, gs, terms, settings, MpsState::zero(n, *cfg)?, trial, stage),
    }
}

/// Everything a trial needs that is shared across the ensemble.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub config: ExperimentConfig,
    pub circuit: Circuit,
    pub terms: PauliTermList,
    pub ground: GroundSpace,
    pub backend: Backend,
    pub settings: SweepSettings,
}

impl TrialContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let tfim = config.tfim()?;
        let terms = tfim_terms(&tfim);
        let ground = ground_space(&terms.dense_matrix()?, DEFAULT_DEGENERACY_TOL)?;
        Ok(Self {
            circuit: build(config.ansatz, config.n_qubits, config.n_layers)?,
            terms,
            ground,
            backend: config.backend(),
            settings: SweepSettings::balanced(config.n_qubits, config.entropy_log_base),
            config: config.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub index: usize,
    pub seed: u64,
    pub init: Option<Vec<LayerRecord>>,
    pub opt: Option<Vec<LayerRecord>>,
    pub trace: Option<OptTrace>,
}

pub fn run_trial(ctx: &TrialContext, index: usize) -> Result<TrialOutput> {
    if index >= ctx.config.trials {
        return Err(Error::InvalidInput(format!(
            "trial {index} out of range for {} trials",
            ctx.config.trials
        )));
    }
    let seed = trial_seed(ctx.config.base_seed, index);
    let params = draw_initial_params(&ctx.circuit, seed);
    let sweep = |p: &[f64], stage| {
        layer_sweep_on(
            &ctx.circuit,
            p,
            &ctx.ground,
            &ctx.terms,
            ctx.settings,
            &ctx.backend,
            index,
            stage,
        )
    };
    let init = if ctx.config.has_stage(Stage::Init) {
        Some(sweep(&params, Stage::Init)?)
    } else {
        None
    };
    let (opt, trace) = if ctx.config.has_stage(Stage::Opt) {
        let trace = optimize(&ctx.circuit, &params, &ctx.terms, &ctx.config.adam, &Backend::Statevector)?;
        (Some(sweep(&trace.final_params, Stage::Opt)?), Some(trace))
    } else {
        (None, None)
    };
    Ok(TrialOutput {
        index,
        seed,
        init,
        opt,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortedTrial {
    pub trial: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub param_count: usize,
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
    pub ground_entropy: f64,
    /// Trial-major, stage `init` before `opt` within a trial.
    pub layers: Vec<LayerRecord>,
    pub deltas: Vec<DeltaRecord>,
    pub training: Vec<TrainingRecord>,
    pub aborts: Vec<AbortedTrial>,
    /// Final optimized energy per completed trial, when optimizing.
    pub final_energies: Vec<f64>,
}

impl ExperimentResults {
    pub fn abort_fraction(&self) -> f64 {
        self.aborts.len() as f64 / self.config.trials as f64
    }
}

/// Runs every trial on a pool of `threads` workers (`None`: rayon default)
/// and gathers results in trial-index order.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResults> {
    let ctx = TrialContext::new(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<TrialOutput>> =
        pool.install(|| (0..config.trials).into_par_iter().map(|i| run_trial(&ctx, i)).collect());

    let mut layers = Vec::new();
    let mut training = Vec::new();
    let mut aborts = Vec::new();
    let mut final_energies = Vec::new();
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(t) => {
                layers.extend(t.init.into_iter().flatten());
                layers.extend(t.opt.into_iter().flatten());
                if let Some(tr) = t.trace {
                    final_energies.push(*tr.energy_per_iteration.last().expect("non-empty trace"));
                    training.extend(
                        tr.energy_per_iteration
                            .iter()
                            .enumerate()
                            .map(|(iter, &energy)| TrainingRecord { trial: i, iter, energy }),
                    );
                }
            }
            Err(e) => aborts.push(AbortedTrial {
                trial: i,
                reason: e.to_string(),
            }),
        }
    }
    let (deltas, _) = stepwise_deltas(&layers);
    Ok(ExperimentResults {
        config: config.clone(),
        param_count: ctx.circuit.param_count,
        ground_energy: ctx.ground.energy,
        ground_degeneracy: ctx.ground.degeneracy(),
        ground_entropy: ground_state_entropy(&ctx.ground, ctx.settings.block_size, ctx.settings.log_base)?,
        layers,
        deltas,
        training,
        aborts,
        final_energies,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub stage: Stage,
    pub layer: usize,
    pub mean_entropy: f64,
    pub std_entropy: f64,
    pub mean_gd: f64,
    pub std_gd: f64,
    pub mean_gpf: f64,
    pub std_gpf: f64,
}

/// Per-(stage, layer) mean and sample standard deviation, summed in
/// trial-index order.
pub fn aggregate(records: &[LayerRecord]) -> Result<Vec<LayerSummary>> {
    let mut groups: BTreeMap<(Stage, usize), Vec<&LayerRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.stage, r.layer)).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(Error::InvalidInput("no layer records to aggregate".into()));
    }
    groups
        .into_iter()
        .map(|((stage, layer), mut rs)| {
            if rs.len() < 2 {
                return Err(Error::InvalidInput(format!(
                    "stage {stage} layer {layer} has {} trial(s); need at least 2",
                    rs.len()
                )));
            }
            rs.sort_by_key(|r| r.trial);
            let col = |f: fn(&LayerRecord) -> f64| mean_std(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (mean_entropy, std_entropy) = col(|r| r.entropy_sa)?;
            let (mean_gd, std_gd) = col(|r| r.gd)?;
            let (mean_gpf, std_gpf) = col(|r| r.gpf)?;
            Ok(LayerSummary {
                stage,
                layer,
                mean_entropy,
                std_entropy,
                mean_gd,
                std_gd,
                mean_gpf,
                std_gpf,
            })
        })
        .collect()
}

/// Adjacent-layer differences per (trial, stage). Trials whose layer set
/// is incomplete are skipped and described in the returned diagnostics.
pub fn stepwise_deltas(records: &[LayerRecord]) -> (Vec<DeltaRecord>, Vec<String>) {
    let mut by_stage_max: BTreeMap<Stage, usize> = BTreeMap::new();
    let mut groups: BTreeMap<(usize, Stage), Vec<&LayerRecord>> = BTreeMap::new();
    for r in records {
        let m = by_stage_max.entry(r.stage).or_insert(0);
        *m = (*m).max(r.layer);
        groups.entry((r.trial, r.stage)).or_default().push(r);
    }
    let mut deltas = Vec::new();
    let mut diagnostics = Vec::new();
    for ((trial, stage), mut rs) in groups {
        rs.sort_by_key(|r| r.layer);
        let last = by_stage_max[&stage];
        let complete = rs.len() == last + 1 && rs.iter().enumerate().all(|(k, r)| r.layer == k);
        if !complete {
            diagnostics.push(format!("trial {trial} stage {stage}: incomplete layer set, excluded"));
            continue;
        }
        for w in rs.windows(2) {
            deltas.push(DeltaRecord {
                trial,
                stage,
                step: w[1].layer,
                d_entropy: w[1].entropy_sa - w[0].entropy_sa,
                d_gd: w[1].gd - w[0].gd,
                d_gpf: w[1].gpf - w[0].gpf,
            });
        }
    }
    (deltas, diagnostics)
}

/// Deltas between two circuit layers only, dropping step 1 (prep state
/// to first layer).
pub fn circuit_layer_steps(deltas: &[DeltaRecord]) -> Vec<DeltaRecord> {
    deltas.iter().filter(|d| d.step >= 2).copied().collect()
}

/// Reads the pool size from [`crate::THREADS_ENV`]; unset or empty means
/// the rayon default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(crate::THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{} must be a positive integer, got `{v}`", crate::THREADS_ENV))),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPair {
    EntropyGd,
    EntropyGpf,
}

impl DeltaPair {
    pub const ALL: [DeltaPair; 2] = [DeltaPair::EntropyGd, DeltaPair::EntropyGpf];

    pub fn name(self) -> &'static str {
        match self {
            DeltaPair::EntropyGd => "entropy_gd",
            DeltaPair::EntropyGpf => "entropy_gpf",
        }
    }

    /// `(d_entropy, geometric delta)`.
    pub fn extract(self, d: &DeltaRecord) -> (f64, f64) {
        match self {
            DeltaPair::EntropyGd => (d.d_entropy, d.d_gd),
            DeltaPair::EntropyGpf => (d.d_entropy, d.d_gpf),
        }
    }
}

impl std::str::FromStr for DeltaPair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy_gd" | "gd" => Ok(DeltaPair::EntropyGd),
            "entropy_gpf" | "gpf" => Ok(DeltaPair::EntropyGpf),
            other => Err(Error::Config(format!("unknown delta pair `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub stage: Stage,
    pub pair: DeltaPair,
    pub pearson_r: f64,
    pub slope: f64,
    pub intercept: f64,
    pub n_points: usize,
    pub final_layer_excluded: bool,
}

/// Points `(d_entropy, geometric delta)` of one stage, optionally without
/// the last step of the stage.
pub fn delta_points(deltas: &[DeltaRecord], stage: Stage, pair: DeltaPair, exclude_final_layer: bool) -> (Vec<f64>, Vec<f64>) {
    let last = deltas.iter().filter(|d| d.stage == stage).map(|d| d.step).max().unwrap_or(0);
    deltas
        .iter()
        .filter(|d| d.stage == stage && !(exclude_final_layer && d.step == last))
        .map(|d| pair.extract(d))
        .unzip()
}

pub fn correlate(
    deltas: &[DeltaRecord],
    stage: Stage,
    pair: DeltaPair,
    exclude_final_layer: bool,
    axes: FitAxes,
) -> Result<CorrelationResult> {
    let (xs, ys) = delta_points(deltas, stage, pair, exclude_final_layer);
    let fit = match axes {
        FitAxes::GeometryOnEntropy => linear_fit(&xs, &ys),
        FitAxes::EntropyOnGeometry => linear_fit(&ys, &xs),
    }
    .map_err(|e| Error::UndefinedCorrelation(format!("stage {stage}, pair {}: {e}", pair.name())))?;
    Ok(CorrelationResult {
        stage,
        pair,
        pearson_r: fit.pearson_r,
        slope: fit.slope,
        intercept: fit.intercept,
        n_points: fit.n,
        final_layer_excluded: exclude_final_layer,
    })
}
