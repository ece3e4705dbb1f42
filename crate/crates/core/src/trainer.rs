//! Training loop, model variants, ablation and variance drivers.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{AnsatzSpec, Entangler};
use crate::data::{self, meshgrid_points_for, DataMode, Dataset, TargetFunction, RNG_ALGORITHM};
use crate::embedding::{EmbeddingKind, EmbeddingScheme};
use crate::error::{QnnError, Result};
use crate::gradients::{loss_and_gradient, predict_batch, Loss};
use crate::measurement::{sample_from_expectation, MeasurementPlan};
use crate::model::{ModelSpec, ParamSet};
use crate::optimizer::{AdamConfig, AdamState};

/// The model variants of the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Sinusoidal embedding, redundant measurement, quadratic readout, random data.
    #[serde(rename = "qnn-a")]
    QnnA,
    /// QNN-A with a hybrid sinusoidal/arcsin embedding.
    #[serde(rename = "qnn-a2")]
    QnnA2,
    /// QNN-A with arcsin embedding.
    #[serde(rename = "qnn-exc1")]
    Exc1,
    /// QNN-A measuring a single qubit.
    #[serde(rename = "qnn-exc2")]
    Exc2,
    /// QNN-A without the post-measurement polynomial.
    #[serde(rename = "qnn-exc3")]
    Exc3,
    /// QNN-A trained on meshgrid data.
    #[serde(rename = "qnn-exc4")]
    Exc4,
    /// Sinusoidal embedding only: single measurement, identity readout, meshgrid data.
    #[serde(rename = "qnn-exc5")]
    Exc5,
    /// Arcsin embedding, single measurement, identity readout, meshgrid data.
    #[serde(rename = "qcl")]
    QclLike,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::QnnA,
        Variant::QnnA2,
        Variant::Exc1,
        Variant::Exc2,
        Variant::Exc3,
        Variant::Exc4,
        Variant::Exc5,
        Variant::QclLike,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::QnnA => "qnn-a",
            Variant::QnnA2 => "qnn-a2",
            Variant::Exc1 => "qnn-exc1",
            Variant::Exc2 => "qnn-exc2",
            Variant::Exc3 => "qnn-exc3",
            Variant::Exc4 => "qnn-exc4",
            Variant::Exc5 => "qnn-exc5",
            Variant::QclLike => "qcl",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = QnnError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == lower || (lower == "qcl-like" && *v == Variant::QclLike))
            .ok_or_else(|| QnnError::Usage(format!("unknown variant `{s}`")))
    }
}

/// Register width used for a target of the given input dimension.
pub fn default_qubits(dim: usize) -> usize {
    dim + 1
}

/// Default ansatz depth.
pub const DEFAULT_LAYERS: usize = 4;

/// Architecture and data mode of `variant` on `function`.
pub fn make_variant(variant: Variant, function: TargetFunction) -> (ModelSpec, DataMode) {
    let dim = function.dim();
    let n = default_qubits(dim);
    let scale = function.natural_scale();
    let sinusoidal = EmbeddingScheme::uniform(EmbeddingKind::Sinusoidal, n, dim).with_scale(scale);
    let arcsin = EmbeddingScheme::uniform(EmbeddingKind::Arcsin, n, dim).with_scale(scale);
    let hybrid = EmbeddingScheme::hybrid(n, dim).with_scale(scale);

    let (embedding, redundant, poly_degree, poly_trainable, mode) = match variant {
        Variant::QnnA => (sinusoidal, true, 2, true, DataMode::Random),
        Variant::QnnA2 => (hybrid, true, 2, true, DataMode::Random),
        Variant::Exc1 => (arcsin, true, 2, true, DataMode::Random),
        Variant::Exc2 => (sinusoidal, false, 2, true, DataMode::Random),
        Variant::Exc3 => (sinusoidal, true, 1, false, DataMode::Random),
        Variant::Exc4 => (sinusoidal, true, 2, true, DataMode::Meshgrid),
        Variant::Exc5 => (sinusoidal, false, 1, false, DataMode::Meshgrid),
        Variant::QclLike => (arcsin, false, 1, false, DataMode::Meshgrid),
    };
    let plan = if redundant { MeasurementPlan::all(n) } else { MeasurementPlan::single(0) };
    let model = ModelSpec {
        variant_name: variant.name().to_string(),
        input_dim: dim,
        embedding,
        ansatz: AnsatzSpec::new(n, DEFAULT_LAYERS),
        plan,
        poly_degree,
        poly_trainable,
    };
    (model, mode)
}

/// Optional architecture changes applied on top of a variant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantOverrides {
    pub qubits: Option<usize>,
    pub layers: Option<usize>,
    pub entangler: Option<Entangler>,
    pub embedding: Option<Vec<EmbeddingKind>>,
    pub variables: Option<Vec<usize>>,
    pub input_scale: Option<f64>,
    pub redundant: Option<bool>,
    pub poly_degree: Option<usize>,
    pub data_mode: Option<DataMode>,
}

impl VariantOverrides {
    /// Builds the variant and applies every override, then validates.
    pub fn build(&self, variant: Variant, function: TargetFunction) -> Result<(ModelSpec, DataMode)> {
        let (mut model, mut mode) = make_variant(variant, function);
        let dim = function.dim();
        if let Some(n) = self.qubits {
            if n == 0 {
                return Err(QnnError::Config("qubits must be at least 1".into()));
            }
            let kinds = if variant == Variant::QnnA2 {
                EmbeddingScheme::hybrid(n, dim).per_qubit
            } else {
                vec![model.embedding.per_qubit[0]; n]
            };
            model.embedding = EmbeddingScheme {
                per_qubit: kinds,
                variable_of_qubit: crate::embedding::round_robin(n, dim),
                input_scale: model.embedding.input_scale,
            };
            model.ansatz.n_qubits = n;
            model.plan = if model.plan.redundant { MeasurementPlan::all(n) } else { MeasurementPlan::single(0) };
        }
        if let Some(layers) = self.layers {
            model.ansatz.n_layers = layers;
        }
        if let Some(e) = self.entangler {
            model.ansatz.entangler = e;
        }
        if let Some(kinds) = &self.embedding {
            model.embedding.per_qubit = kinds.clone();
        }
        if let Some(vars) = &self.variables {
            model.embedding.variable_of_qubit = vars.clone();
        }
        if let Some(scale) = self.input_scale {
            model.embedding.input_scale = scale;
        }
        if let Some(redundant) = self.redundant {
            let n = model.n_qubits();
            model.plan = if redundant { MeasurementPlan::all(n) } else { MeasurementPlan::single(0) };
        }
        if let Some(degree) = self.poly_degree {
            model.poly_degree = degree;
            model.poly_trainable = true;
        }
        if let Some(m) = self.data_mode {
            mode = m;
        }
        model.validate()?;
        Ok((model, mode))
    }
}

/// Optimization settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    #[serde(default)]
    pub loss: Loss,
    /// Shots per expectation when scoring predictions; 0 means exact.
    #[serde(default)]
    pub shots: u64,
    /// Mini-batch size; `None` trains full-batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    /// Training-set size; `None` uses the function default.
    #[serde(default)]
    pub train_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            adam: AdamConfig::default(),
            seed: 0,
            loss: Loss::Mse,
            shots: 0,
            batch_size: None,
            train_size: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.batch_size == Some(0) {
            return Err(QnnError::Config("batch size must be positive".into()));
        }
        if self.train_size == Some(0) {
            return Err(QnnError::Config("training set must be non-empty".into()));
        }
        Ok(())
    }
}

/// Independent seed for stream `stream` of run seed `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_DATA: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_SHUFFLE: u64 = 3;
const STREAM_SHOTS: u64 = 4;

/// Generates the training set for one run.
pub fn training_set(function: TargetFunction, mode: DataMode, size: usize, seed: u64) -> Result<Dataset> {
    match mode {
        DataMode::Random => data::sample_random(function, size, derive_seed(seed, STREAM_DATA)),
        DataMode::Meshgrid => data::sample_meshgrid(function, meshgrid_points_for(size, function.dim())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: String,
    pub function: TargetFunction,
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub data_mode: DataMode,
    pub train_size: usize,
    pub test_size: usize,
    /// Mean training loss at the start of every epoch.
    pub loss_curve: Vec<f64>,
    pub initial_train_mae: f64,
    pub final_train_loss: f64,
    pub train_mae: f64,
    pub test_mae: f64,
    pub train_mse: f64,
    pub test_mse: f64,
    pub diverged: bool,
    pub rng: String,
    pub config_hash: String,
    pub params: ParamSet,
    /// Excluded from reproducibility comparisons and from serialization.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl RunReport {
    /// Equality ignoring wall-clock time.
    pub fn same_result(&self, other: &RunReport) -> bool {
        let mut a = self.clone();
        a.wall_clock_secs = other.wall_clock_secs;
        a == *other
    }
}

/// Short SHA-256 digest of any serializable configuration.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(&Sha256::digest(&bytes)[..8]))
}

fn mae_mse(predictions: &[f64], targets: &[f64]) -> (f64, f64) {
    let n = targets.len() as f64;
    let (abs, sq) = predictions
        .iter()
        .zip(targets)
        .fold((0.0, 0.0), |(a, s), (p, y)| (a + (p - y).abs(), s + (p - y).powi(2)));
    (abs / n, sq / n)
}

/// Predictions on `set`, optionally estimated from finite shots.
pub fn predictions(model: &ModelSpec, params: &ParamSet, set: &Dataset, shots: u64, seed: u64) -> Result<Vec<f64>> {
    if shots == 0 {
        return predict_batch(model, params, &set.inputs);
    }
    let circuit = crate::gradients::BoundCircuit::new(model, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SHOTS));
    set.inputs
        .iter()
        .map(|x| {
            let z: Vec<f64> = circuit
                .expectations(x)?
                .into_iter()
                .map(|e| sample_from_expectation(e, shots, &mut rng))
                .collect();
            let s = crate::measurement::combine_expectations(&z, &model.plan, &params.combine_w)?;
            Ok(crate::measurement::post_measurement(s, &params.poly_w))
        })
        .collect()
}

/// Full-batch (or mini-batch) Adam training of `model`.
pub fn train(model: &ModelSpec, train_set: &Dataset, test_set: &Dataset, config: &TrainConfig) -> Result<RunReport> {
    train_with_params(model, train_set, test_set, config).map(|(report, _)| report)
}

/// [`train`], also returning the final parameters.
pub fn train_with_params(
    model: &ModelSpec,
    train_set: &Dataset,
    test_set: &Dataset,
    config: &TrainConfig,
) -> Result<(RunReport, ParamSet)> {
    let started = Instant::now();
    model.validate()?;
    config.validate()?;
    if train_set.dim() != model.input_dim || test_set.dim() != model.input_dim {
        return Err(QnnError::Usage(format!(
            "datasets of dimension {}/{} for a model of dimension {}",
            train_set.dim(),
            test_set.dim(),
            model.input_dim
        )));
    }
    if train_set.is_empty() || test_set.is_empty() {
        return Err(QnnError::Usage("empty dataset".into()));
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_INIT));
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_SHUFFLE));
    let mut params = ParamSet::init(model, &mut init_rng);
    let mut flat = params.to_flat(model);
    let mut adam = AdamState::new(config.adam, flat.len());

    let initial = predict_batch(model, &params, &train_set.inputs)?;
    let (initial_train_mae, _) = mae_mse(&initial, &train_set.targets);

    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut diverged = false;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    'epochs: for _ in 0..config.epochs {
        let batches: Vec<Vec<usize>> = match config.batch_size {
            Some(size) if size < train_set.len() => {
                order.shuffle(&mut shuffle_rng);
                order.chunks(size).map(<[usize]>::to_vec).collect()
            }
            _ => vec![order.clone()],
        };
        let mut epoch_loss = 0.0;
        for batch in &batches {
            let xs: Vec<Vec<f64>> = batch.iter().map(|&i| train_set.inputs[i].clone()).collect();
            let ys: Vec<f64> = batch.iter().map(|&i| train_set.targets[i]).collect();
            let (loss, grad) = loss_and_gradient(model, &params, &xs, &ys, config.loss)?;
            epoch_loss += loss * batch.len() as f64 / train_set.len() as f64;
            if !loss.is_finite() || adam.step(&mut flat, &grad.to_flat(model)).is_err() {
                diverged = true;
                loss_curve.push(epoch_loss);
                break 'epochs;
            }
            params.set_flat(model, &flat);
        }
        loss_curve.push(epoch_loss);
    }

    let train_pred = predictions(model, &params, train_set, config.shots, config.seed)?;
    let test_pred = predictions(model, &params, test_set, config.shots, config.seed.wrapping_add(1))?;
    let (train_mae, train_mse) = mae_mse(&train_pred, &train_set.targets);
    let (test_mae, test_mse) = mae_mse(&test_pred, &test_set.targets);
    let final_train_loss = if config.shots == 0 {
        train_mse
    } else {
        let exact = predict_batch(model, &params, &train_set.inputs)?;
        mae_mse(&exact, &train_set.targets).1
    };

    let hash = config_hash(&(model, config, train_set.mode, train_set.len(), test_set.len()))?;
    let report = RunReport {
        variant: model.variant_name.clone(),
        function: train_set.function,
        seed: config.seed,
        epochs: config.epochs,
        lr: config.adam.lr,
        data_mode: train_set.mode,
        train_size: train_set.len(),
        test_size: test_set.len(),
        loss_curve,
        initial_train_mae,
        final_train_loss,
        train_mae,
        test_mae,
        train_mse,
        test_mse,
        diverged: diverged || !final_train_loss.is_finite(),
        rng: RNG_ALGORITHM.to_string(),
        config_hash: hash,
        params: params.clone(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok((report, params))
}

/// One run: variant, function, overrides and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub variant: Variant,
    pub function: TargetFunction,
    #[serde(default)]
    pub overrides: VariantOverrides,
    pub train: TrainConfig,
}

impl Experiment {
    pub fn new(variant: Variant, function: TargetFunction, train: TrainConfig) -> Self {
        Self { variant, function, overrides: VariantOverrides::default(), train }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut e = self.clone();
        e.train.seed = seed;
        e
    }

    /// Builds the model and data, then trains.
    pub fn run(&self) -> Result<(RunReport, ModelSpec, ParamSet)> {
        let (model, mode) = self.overrides.build(self.variant, self.function)?;
        let size = self.train.train_size.unwrap_or_else(|| self.function.train_size());
        let train_set = training_set(self.function, mode, size, self.train.seed)?;
        let test_set = data::test_set(self.function);
        let (report, params) = train_with_params(&model, &train_set, &test_set, &self.train)?;
        Ok((report, model, params))
    }
}

/// One row of the ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub function: TargetFunction,
    pub seed: u64,
    pub train_mae: f64,
    pub test_mae: f64,
    /// Test MAE divided by QNN-A's test MAE for the same seed, when QNN-A ran.
    pub ratio_vs_qnn_a: Option<f64>,
    pub diverged: bool,
}

/// Trains every `variant x seed` pair on `function`.
pub fn ablate(
    function: TargetFunction,
    variants: &[Variant],
    seeds: &[u64],
    base: &Experiment,
) -> Result<(Vec<AblationRow>, Vec<RunReport>)> {
    if variants.is_empty() || seeds.is_empty() {
        return Err(QnnError::Usage("ablation needs at least one variant and one seed".into()));
    }
    let jobs: Vec<(Variant, u64)> = variants.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
    let reports: Vec<RunReport> = jobs
        .par_iter()
        .map(|&(variant, seed)| {
            let mut e = base.with_seed(seed);
            e.variant = variant;
            e.function = function;
            e.run().map(|(r, _, _)| r)
        })
        .collect::<Result<_>>()?;

    let reference = |seed: u64| {
        reports.iter().find(|r| r.variant == Variant::QnnA.name() && r.seed == seed).map(|r| r.test_mae)
    };
    let rows = reports
        .iter()
        .map(|r| AblationRow {
            variant: r.variant.clone(),
            function: r.function,
            seed: r.seed,
            train_mae: r.train_mae,
            test_mae: r.test_mae,
            ratio_vs_qnn_a: reference(r.seed).map(|a| r.test_mae / a),
            diverged: r.diverged,
        })
        .collect();
    Ok((rows, reports))
}

/// Writes ablation rows as CSV with columns
/// `variant,function,seed,train_mae,test_mae,ratio_vs_qnn_a`.
pub fn write_ablation_csv<W: std::io::Write>(rows: &[AblationRow], mut out: W) -> Result<()> {
    writeln!(out, "variant,function,seed,train_mae,test_mae,ratio_vs_qnn_a")?;
    for r in rows {
        let ratio = r.ratio_vs_qnn_a.map(data::format_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.variant,
            r.function,
            r.seed,
            data::format_f64(r.train_mae),
            data::format_f64(r.test_mae),
            ratio
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSummary {
    pub variant: String,
    pub function: TargetFunction,
    pub seeds: Vec<u64>,
    pub test_maes: Vec<f64>,
    pub mean: f64,
    /// Population variance of the per-run test MAE.
    pub variance: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Number of histogram bins in variance studies.
pub const HISTOGRAM_BINS: usize = 15;

/// Equal-width bins over `[min, max]` of `values`.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0; bins];
    for v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin { lower: lo + width * i as f64, upper: lo + width * (i + 1) as f64, count })
        .collect()
}

/// Trains `n_runs` independent copies; run `i` uses seed `base_seed + i`, or
/// `base_seed` throughout when `fixed_seed` is set.
pub fn variance_study(base: &Experiment, n_runs: usize, fixed_seed: bool) -> Result<(VarianceSummary, Vec<RunReport>)> {
    if n_runs < 2 {
        return Err(QnnError::Usage("variance study needs at least two runs".into()));
    }
    let seeds: Vec<u64> = (0..n_runs as u64)
        .map(|i| if fixed_seed { base.train.seed } else { base.train.seed.wrapping_add(i) })
        .collect();
    let reports: Vec<RunReport> =
        seeds.par_iter().map(|&s| base.with_seed(s).run().map(|(r, _, _)| r)).collect::<Result<_>>()?;
    let test_maes: Vec<f64> = reports.iter().map(|r| r.test_mae).collect();
    let n = test_maes.len() as f64;
    let mean = test_maes.iter().sum::<f64>() / n;
    let variance = test_maes.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let summary = VarianceSummary {
        variant: base.variant.name().to_string(),
        function: base.function,
        seeds,
        histogram: histogram(&test_maes, HISTOGRAM_BINS),
        test_maes,
        mean,
        variance,
    };
    Ok((summary, reports))
}

/// Writes the histogram as CSV with columns `bin_lower,bin_upper,count`.
pub fn write_histogram_csv<W: std::io::Write>(summary: &VarianceSummary, mut out: W) -> Result<()> {
    writeln!(out, "bin_lower,bin_upper,count")?;
    for b in &summary.histogram {
        writeln!(out, "{},{},{}", data::format_f64(b.lower), data::format_f64(b.upper), b.count)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(variant: Variant, function: TargetFunction, epochs: usize, seed: u64) -> Experiment {
        let mut e = Experiment::new(variant, function, TrainConfig { epochs, seed, ..Default::default() });
        e.train.train_size = Some(20);
        e
    }

    #[test]
    fn variant_shapes() {
        let (m, mode) = make_variant(Variant::QnnA, TargetFunction::F1v3);
        assert_eq!((m.n_qubits(), m.ansatz.n_layers), (2, 4));
        assert_eq!(mode, DataMode::Random);
        assert!(m.plan.redundant && m.poly_degree == 2);
        assert_eq!(make_variant(Variant::QnnA, TargetFunction::F2).0.n_qubits(), 3);
        assert_eq!(make_variant(Variant::QnnA, TargetFunction::F3).0.n_qubits(), 4);

        let (a, _) = make_variant(Variant::QnnA, TargetFunction::F2);
        let (e2, mode) = make_variant(Variant::Exc2, TargetFunction::F2);
        assert!(!e2.plan.redundant);
        assert_eq!(mode, DataMode::Random);
        assert_eq!((e2.embedding, e2.ansatz, e2.poly_degree), (a.embedding, a.ansatz, a.poly_degree));

        let (e3, _) = make_variant(Variant::Exc3, TargetFunction::F1v3);
        assert!(e3.plan.redundant && !e3.poly_trainable && e3.poly_degree == 1);
        let (e4, mode) = make_variant(Variant::Exc4, TargetFunction::F3);
        assert_eq!(mode, DataMode::Meshgrid);
        assert!(e4.plan.redundant);
        let (q, mode) = make_variant(Variant::QclLike, TargetFunction::F1v2);
        assert!(q.embedding.per_qubit.iter().all(|k| *k == EmbeddingKind::Arcsin));
        assert_eq!(mode, DataMode::Meshgrid);
        let (h, _) = make_variant(Variant::QnnA2, TargetFunction::F1v0);
        assert_eq!(h.embedding.per_qubit, vec![EmbeddingKind::Sinusoidal, EmbeddingKind::Arcsin]);
        for v in Variant::ALL {
            for f in TargetFunction::ALL {
                make_variant(v, f).0.validate().unwrap();
            }
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!(matches!("bogus".parse::<Variant>(), Err(QnnError::Usage(_))));
    }

    #[test]
    fn zero_epochs_reports_initial_state() {
        let (report, model, params) = quick(Variant::QnnA, TargetFunction::F1v3, 0, 5).run().unwrap();
        assert!(report.loss_curve.is_empty());
        assert_eq!(report.train_mae, report.initial_train_mae);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(5, STREAM_INIT));
        assert_eq!(params, ParamSet::init(&model, &mut rng));
    }

    #[test]
    fn training_is_reproducible_and_reduces_loss() {
        let e = quick(Variant::QnnA, TargetFunction::F1v1, 60, 3);
        let (a, _, _) = e.run().unwrap();
        let (b, _, _) = e.run().unwrap();
        assert!(a.same_result(&b));
        assert_eq!(a.loss_curve.len(), 60);
        assert!(a.final_train_loss <= a.loss_curve[0]);
        let (c, _, _) = e.with_seed(4).run().unwrap();
        assert_ne!(a.config_hash, c.config_hash);
    }

    #[test]
    fn minibatch_and_shots_modes_run() {
        let mut e = quick(Variant::Exc2, TargetFunction::F1v2, 5, 1);
        e.train.batch_size = Some(7);
        e.train.shots = 1000;
        let (r, _, _) = e.run().unwrap();
        assert_eq!(r.loss_curve.len(), 5);
        assert!(r.test_mae.is_finite());
    }

    #[test]
    fn divergence_is_flagged() {
        let mut e = quick(Variant::QnnA, TargetFunction::F1v1, 10, 0);
        e.train.adam.lr = 1e300;
        let (r, _, _) = e.run().unwrap();
        assert!(r.diverged);
    }

    #[test]
    fn ablation_ratios() {
        let base = quick(Variant::QnnA, TargetFunction::F1v3, 3, 0);
        let (rows, _) = ablate(TargetFunction::F1v3, &[Variant::QnnA, Variant::Exc3], &[1, 2], &base).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows.iter().filter(|r| r.variant == "qnn-a") {
            assert_eq!(r.ratio_vs_qnn_a, Some(1.0));
        }
        let mut buf = Vec::new();
        write_ablation_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("variant,function,seed,train_mae,test_mae,ratio_vs_qnn_a\n"));
        assert_eq!(text.lines().count(), 5);
        assert!(ablate(TargetFunction::F1v3, &[], &[1], &base).is_err());
    }

    #[test]
    fn fixed_seed_variance_is_zero() {
        let base = quick(Variant::QnnA, TargetFunction::F1v3, 2, 9);
        let (s, _) = variance_study(&base, 2, true).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.histogram.iter().map(|b| b.count).sum::<usize>(), 2);
        assert!(variance_study(&base, 1, false).is_err());
    }

    #[test]
    fn histogram_edges() {
        let h = histogram(&[0.0, 0.5, 1.0], 2);
        assert_eq!(h.len(), 2);
        assert_eq!((h[0].lower, h[0].upper, h[0].count), (0.0, 0.5, 1));
        assert_eq!((h[1].upper, h[1].count), (1.0, 2));
        assert_eq!(histogram(&[0.2, 0.2], 3)[0].count, 2);
    }

    #[test]
    fn overrides_apply() {
        let o = VariantOverrides { qubits: Some(1), layers: Some(2), ..Default::default() };
        let (m, _) = o.build(Variant::Exc5, TargetFunction::F1v1).unwrap();
        assert_eq!((m.n_qubits(), m.ansatz.param_count()), (1, 4));
        let bad = VariantOverrides { variables: Some(vec![0, 0, 0]), ..Default::default() };
        assert!(bad.build(Variant::QnnA, TargetFunction::F2).is_err());
    }
}
