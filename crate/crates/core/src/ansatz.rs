//! Layered hardware-efficient ansatz: per layer an RY and an RZ on every
//! qubit followed by a CNOT entangler.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QnnError, Result};
use crate::statevector::{Gate, MAX_QUBITS};

/// Entangler topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entangler {
    /// CNOT `i -> i+1` for `i = 0..n-1`.
    #[default]
    Chain,
    /// Chain plus `n-1 -> 0` when `n >= 3`.
    Ring,
}

impl FromStr for Entangler {
    type Err = QnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Entangler::Chain),
            "ring" => Ok(Entangler::Ring),
            other => Err(QnnError::Config(format!("unknown entangler `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub n_layers: usize,
    #[serde(default)]
    pub entangler: Entangler,
}

/// Position of a gate in the layer template. Rotations carry the index of
/// the parameter that drives them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateGate {
    Ry { target: usize, param: usize },
    Rz { target: usize, param: usize },
    Cnot { control: usize, target: usize },
}

impl TemplateGate {
    pub fn param(&self) -> Option<usize> {
        match *self {
            TemplateGate::Ry { param, .. } | TemplateGate::Rz { param, .. } => Some(param),
            TemplateGate::Cnot { .. } => None,
        }
    }

    pub fn bind(&self, theta: &[f64]) -> Gate {
        match *self {
            TemplateGate::Ry { target, param } => Gate::ry(target, theta[param]),
            TemplateGate::Rz { target, param } => Gate::rz(target, theta[param]),
            TemplateGate::Cnot { control, target } => Gate::cnot(control, target),
        }
    }
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, n_layers: usize) -> Self {
        Self { n_qubits, n_layers, entangler: Entangler::Chain }
    }

    pub fn with_entangler(mut self, entangler: Entangler) -> Self {
        self.entangler = entangler;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_QUBITS).contains(&self.n_qubits) {
            return Err(QnnError::Config(format!("ansatz width {} outside 1..={MAX_QUBITS}", self.n_qubits)));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        2 * self.n_qubits * self.n_layers
    }

    fn entangler_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits;
        let mut pairs: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        if self.entangler == Entangler::Ring && n >= 3 {
            pairs.push((n - 1, 0));
        }
        pairs
    }

    /// Gate template with parameter slots, in application order.
    pub fn template(&self) -> Vec<TemplateGate> {
        let mut gates = Vec::new();
        let mut param = 0;
        for _ in 0..self.n_layers {
            for q in 0..self.n_qubits {
                gates.push(TemplateGate::Ry { target: q, param });
                gates.push(TemplateGate::Rz { target: q, param: param + 1 });
                param += 2;
            }
            gates.extend(
                self.entangler_pairs()
                    .into_iter()
                    .map(|(control, target)| TemplateGate::Cnot { control, target }),
            );
        }
        gates
    }
}

/// Binds `theta` into the template of `spec`.
pub fn build_circuit(spec: &AnsatzSpec, theta: &[f64]) -> Result<Vec<Gate>> {
    spec.validate()?;
    if theta.len() != spec.param_count() {
        return Err(QnnError::Config(format!(
            "ansatz needs {} angles, got {}",
            spec.param_count(),
            theta.len()
        )));
    }
    Ok(spec.template().iter().map(|g| g.bind(theta)).collect())
}

pub fn param_count(spec: &AnsatzSpec) -> usize {
    spec.param_count()
}
