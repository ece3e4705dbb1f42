//! Model architecture and its trainable parameters.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::embedding::EmbeddingScheme;
use crate::error::{QnnError, Result};
use crate::measurement::MeasurementPlan;

/// Highest post-measurement polynomial degree accepted.
pub const MAX_POLY_DEGREE: usize = 4;

/// Full architecture of one model variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant_name: String,
    pub input_dim: usize,
    pub embedding: EmbeddingScheme,
    pub ansatz: AnsatzSpec,
    pub plan: MeasurementPlan,
    pub poly_degree: usize,
    /// When false the polynomial is pinned to the identity `(0, 1)` and
    /// excluded from optimization.
    pub poly_trainable: bool,
}

impl ModelSpec {
    pub fn n_qubits(&self) -> usize {
        self.ansatz.n_qubits
    }

    pub fn validate(&self) -> Result<()> {
        self.ansatz.validate()?;
        self.embedding.validate(self.n_qubits(), self.input_dim)?;
        self.plan.validate(self.n_qubits())?;
        if self.poly_degree > MAX_POLY_DEGREE {
            return Err(QnnError::Config(format!(
                "post-measurement degree {} above {MAX_POLY_DEGREE}",
                self.poly_degree
            )));
        }
        if !self.poly_trainable && self.poly_degree != 1 {
            return Err(QnnError::Config("a fixed identity readout must have degree 1".into()));
        }
        Ok(())
    }

    /// Number of combination weights (including the bias).
    pub fn combine_len(&self) -> usize {
        if self.plan.redundant {
            self.plan.measured_qubits.len() + 1
        } else {
            0
        }
    }

    pub fn poly_len(&self) -> usize {
        self.poly_degree + 1
    }

    /// Number of parameters the optimizer updates.
    pub fn trainable_len(&self) -> usize {
        self.ansatz.param_count() + self.combine_len() + if self.poly_trainable { self.poly_len() } else { 0 }
    }
}

/// Circuit angles plus classical readout weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub theta: Vec<f64>,
    pub combine_w: Vec<f64>,
    pub poly_w: Vec<f64>,
}

impl ParamSet {
    /// Angles uniform in `[0, 2pi)` and zero readout weights.
    ///
    /// Two cases start the polynomial at the identity instead of zero: a
    /// pinned readout, and a trainable polynomial fed by the weighted sum
    /// (all-zero weights on both stages form a stationary point where no
    /// gradient reaches any weight but the constant term).
    pub fn init<R: Rng + ?Sized>(model: &ModelSpec, rng: &mut R) -> Self {
        let theta = (0..model.ansatz.param_count()).map(|_| rng.random::<f64>() * TAU).collect();
        let combine_w = vec![0.0; model.combine_len()];
        let mut poly_w = vec![0.0; model.poly_len()];
        if (!model.poly_trainable || model.plan.redundant) && poly_w.len() > 1 {
            poly_w[1] = 1.0;
        }
        Self { theta, combine_w, poly_w }
    }

    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        if self.theta.len() != model.ansatz.param_count()
            || self.combine_w.len() != model.combine_len()
            || self.poly_w.len() != model.poly_len()
        {
            return Err(QnnError::Config(format!(
                "parameter layout ({}, {}, {}) does not match model ({}, {}, {})",
                self.theta.len(),
                self.combine_w.len(),
                self.poly_w.len(),
                model.ansatz.param_count(),
                model.combine_len(),
                model.poly_len()
            )));
        }
        Ok(())
    }

    /// Trainable parameters as one vector: angles, combination weights, then
    /// polynomial weights when they are trainable.
    pub fn to_flat(&self, model: &ModelSpec) -> Vec<f64> {
        let mut flat = Vec::with_capacity(model.trainable_len());
        flat.extend_from_slice(&self.theta);
        flat.extend_from_slice(&self.combine_w);
        if model.poly_trainable {
            flat.extend_from_slice(&self.poly_w);
        }
        flat
    }

    pub fn set_flat(&mut self, model: &ModelSpec, flat: &[f64]) {
        let (theta, rest) = flat.split_at(self.theta.len());
        let (combine, poly) = rest.split_at(self.combine_w.len());
        self.theta.copy_from_slice(theta);
        self.combine_w.copy_from_slice(combine);
        if model.poly_trainable {
            self.poly_w.copy_from_slice(poly);
        }
    }
}
