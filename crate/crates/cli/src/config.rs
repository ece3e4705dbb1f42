//! Run configuration: an optional JSON file merged with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use qnn_core::analysis::{OracleConfig, OracleGroup};
use qnn_core::trainer::DEFAULT_LAYERS;
use qnn_core::{AdamConfig, Experiment, TargetFunction, TrainConfig, Variant, VariantOverrides};
use serde::{Deserialize, Serialize};

/// Every key a config file may set. Flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub variant: Option<Variant>,
    pub variants: Option<Vec<Variant>>,
    pub function: Option<TargetFunction>,
    pub functions: Option<Vec<TargetFunction>>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub shots: Option<u64>,
    pub batch_size: Option<usize>,
    pub train_size: Option<usize>,
    /// Architecture overrides applied on top of the variant.
    pub model: VariantOverrides,
    pub runs: Option<usize>,
    pub fixed_seed: Option<bool>,
    pub only: Option<OracleGroup>,
    pub max_qubits: Option<usize>,
    pub trials: Option<usize>,
    pub drop_basis: Option<Vec<String>>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Overlays every `Some` field of `flags` onto `self`.
    pub fn merge(mut self, flags: RunConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => { $( if flags.$field.is_some() { self.$field = flags.$field; } )* };
        }
        take!(
            variant, variants, function, functions, seed, seeds, epochs, lr, shots, batch_size, train_size, runs,
            fixed_seed, only, max_qubits, trials, drop_basis, out
        );
        if flags.model.layers.is_some() {
            self.model.layers = flags.model.layers;
        }
        if flags.model.qubits.is_some() {
            self.model.qubits = flags.model.qubits;
        }
        self
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("qnn-out"))
    }

    fn train_config(&self) -> TrainConfig {
        let defaults = TrainConfig::default();
        TrainConfig {
            epochs: self.epochs.unwrap_or(defaults.epochs),
            adam: AdamConfig { lr: self.lr.unwrap_or(defaults.adam.lr), ..defaults.adam },
            seed: self.seed.unwrap_or(defaults.seed),
            loss: defaults.loss,
            shots: self.shots.unwrap_or(defaults.shots),
            batch_size: self.batch_size,
            train_size: self.train_size,
        }
    }

    /// The single experiment described by this config, validated.
    pub fn experiment(&self) -> anyhow::Result<Experiment> {
        let variant = self.variant.unwrap_or(Variant::QnnA);
        let function = self.function.unwrap_or(TargetFunction::F1v3);
        let e = Experiment { variant, function, overrides: self.model.clone(), train: self.train_config() };
        validate(&e)?;
        Ok(e)
    }

    /// Base experiment and the `functions x variants x seeds` grid of an ablation.
    pub fn ablation(&self) -> anyhow::Result<(Experiment, Vec<TargetFunction>, Vec<Variant>, Vec<u64>)> {
        let functions = self.functions.clone().or(self.function.map(|f| vec![f])).unwrap_or_else(|| {
            vec![TargetFunction::F1v3, TargetFunction::F2, TargetFunction::F3]
        });
        let variants = self.variants.clone().or(self.variant.map(|v| vec![v])).unwrap_or_else(|| {
            vec![Variant::QnnA, Variant::Exc2, Variant::Exc3, Variant::Exc4]
        });
        let seeds = self.seeds.clone().or(self.seed.map(|s| vec![s])).unwrap_or_else(|| (0..5).collect());
        if functions.is_empty() || variants.is_empty() || seeds.is_empty() {
            bail!(qnn_core::QnnError::Config("ablation needs functions, variants and seeds".into()));
        }
        let base = Experiment {
            variant: variants[0],
            function: functions[0],
            overrides: self.model.clone(),
            train: self.train_config(),
        };
        for &f in &functions {
            for &v in &variants {
                validate(&Experiment { variant: v, function: f, ..base.clone() })?;
            }
        }
        Ok((base, functions, variants, seeds))
    }

    pub fn oracle(&self) -> anyhow::Result<OracleConfig> {
        let defaults = OracleConfig::default();
        let cfg = OracleConfig {
            only: self.only,
            max_qubits: self.max_qubits.unwrap_or(defaults.max_qubits),
            trials: self.trials.unwrap_or(defaults.trials),
            layers: self.model.layers.unwrap_or(DEFAULT_LAYERS),
            seed: self.seed.unwrap_or(defaults.seed),
            drop_basis: self.drop_basis.clone().unwrap_or_default(),
        };
        if cfg.max_qubits == 0 || cfg.max_qubits > 4 {
            bail!(qnn_core::QnnError::Config(format!("max-qubits must be in 1..=4, got {}", cfg.max_qubits)));
        }
        if cfg.trials == 0 {
            bail!(qnn_core::QnnError::Config("trials must be positive".into()));
        }
        Ok(cfg)
    }
}

fn validate(e: &Experiment) -> anyhow::Result<()> {
    e.overrides.build(e.variant, e.function)?;
    e.train.validate()?;
    Ok(())
}
