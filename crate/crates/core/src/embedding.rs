//! Angle embeddings of a classical input vector onto the register.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QnnError, Result};
use crate::statevector::StateVector;

/// How one qubit turns its input variable into an RY angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmbeddingKind {
    /// `RY(scale * x)`; yields `{1, sin x, cos x}` per qubit.
    #[serde(rename = "sin")]
    Sinusoidal,
    /// `RY(arcsin x)`; yields `{1, x, sqrt(1 - x^2)}` per qubit.
    #[serde(rename = "arcsin")]
    Arcsin,
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingKind::Sinusoidal => "sin",
            EmbeddingKind::Arcsin => "arcsin",
        })
    }
}

impl FromStr for EmbeddingKind {
    type Err = QnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sin" | "sinusoidal" => Ok(EmbeddingKind::Sinusoidal),
            "arcsin" => Ok(EmbeddingKind::Arcsin),
            other => Err(QnnError::Config(format!("unknown embedding `{other}`"))),
        }
    }
}

/// Per-qubit embedding kinds plus the input variable each qubit reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingScheme {
    pub per_qubit: Vec<EmbeddingKind>,
    pub variable_of_qubit: Vec<usize>,
    /// Multiplier applied to the input before a sinusoidal rotation. Arcsin
    /// qubits ignore it.
    #[serde(default = "unit_scale")]
    pub input_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl EmbeddingScheme {
    /// Every qubit uses `kind`; qubit `i` reads variable `i mod dim`.
    pub fn uniform(kind: EmbeddingKind, n_qubits: usize, dim: usize) -> Self {
        Self {
            per_qubit: vec![kind; n_qubits],
            variable_of_qubit: round_robin(n_qubits, dim),
            input_scale: 1.0,
        }
    }

    /// Qubit 0 sinusoidal, all other qubits arcsin, round-robin variables.
    pub fn hybrid(n_qubits: usize, dim: usize) -> Self {
        let mut per_qubit = vec![EmbeddingKind::Arcsin; n_qubits];
        per_qubit[0] = EmbeddingKind::Sinusoidal;
        Self { per_qubit, variable_of_qubit: round_robin(n_qubits, dim), input_scale: 1.0 }
    }

    pub fn with_scale(mut self, input_scale: f64) -> Self {
        self.input_scale = input_scale;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.per_qubit.len()
    }

    /// Checks the scheme against a register size and input dimension.
    pub fn validate(&self, n_qubits: usize, dim: usize) -> Result<()> {
        if self.per_qubit.len() != n_qubits || self.variable_of_qubit.len() != n_qubits {
            return Err(QnnError::Config(format!(
                "embedding lists {} kinds and {} variables for {n_qubits} qubits",
                self.per_qubit.len(),
                self.variable_of_qubit.len()
            )));
        }
        if dim == 0 {
            return Err(QnnError::Config("input dimension must be at least 1".into()));
        }
        if let Some(v) = self.variable_of_qubit.iter().find(|&&v| v >= dim) {
            return Err(QnnError::Config(format!("variable index {v} out of range for dimension {dim}")));
        }
        if let Some(missing) = (0..dim).find(|j| !self.variable_of_qubit.contains(j)) {
            return Err(QnnError::Config(format!("input variable {missing} is not fed to any qubit")));
        }
        if !self.input_scale.is_finite() || self.input_scale == 0.0 {
            return Err(QnnError::Config(format!("input scale {} must be finite and non-zero", self.input_scale)));
        }
        Ok(())
    }

    /// RY angle for every qubit given input `x`.
    pub fn angles(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.per_qubit
            .iter()
            .zip(&self.variable_of_qubit)
            .map(|(kind, &v)| {
                let value = *x.get(v).ok_or_else(|| {
                    QnnError::Usage(format!("input has {} entries, qubit reads variable {v}", x.len()))
                })?;
                match kind {
                    EmbeddingKind::Sinusoidal => {
                        if !(value.abs() <= std::f64::consts::PI) {
                            return Err(QnnError::Domain(format!("sinusoidal input {value} outside [-pi, pi]")));
                        }
                        Ok(self.input_scale * value)
                    }
                    EmbeddingKind::Arcsin => {
                        if !(value.abs() <= 1.0) {
                            return Err(QnnError::Domain(format!("arcsin input {value} outside [-1, 1]")));
                        }
                        Ok(value.asin())
                    }
                }
            })
            .collect()
    }
}

/// Qubit `i` reads variable `i mod dim`.
pub fn round_robin(n_qubits: usize, dim: usize) -> Vec<usize> {
    (0..n_qubits).map(|i| i % dim.max(1)).collect()
}

/// Prepares the product state `⊗_i RY(angle_i)|0>`.
pub fn embed(x: &[f64], scheme: &EmbeddingScheme, n_qubits: usize) -> Result<StateVector> {
    scheme.validate(n_qubits, x.len())?;
    if n_qubits > crate::statevector::MAX_QUBITS {
        return Err(QnnError::Config(format!("register size {n_qubits} too large")));
    }
    let angles = scheme.angles(x)?;
    Ok(product_from_angles(&angles))
}

pub(crate) fn product_from_angles(angles: &[f64]) -> StateVector {
    let columns: Vec<(f64, f64)> = angles
        .iter()
        .map(|a| {
            let (s, c) = (a / 2.0).sin_cos();
            (c, s)
        })
        .collect();
    StateVector::product_state(&columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::pauli_z_expectation;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn re(state: &StateVector) -> Vec<f64> {
        state.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn zero_input_is_ground_state_for_every_scheme() {
        for scheme in [
            EmbeddingScheme::uniform(EmbeddingKind::Sinusoidal, 2, 1),
            EmbeddingScheme::uniform(EmbeddingKind::Arcsin, 2, 1),
            EmbeddingScheme::hybrid(2, 1),
        ] {
            assert_eq!(re(&embed(&[0.0], &scheme, 2).unwrap()), vec![1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn sinusoidal_and_arcsin_examples() {
        let sin = EmbeddingScheme::uniform(EmbeddingKind::Sinusoidal, 1, 1);
        for a in re(&embed(&[PI / 2.0], &sin, 1).unwrap()) {
            assert!((a - FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let arc = EmbeddingScheme::uniform(EmbeddingKind::Arcsin, 1, 1);
        let amps = re(&embed(&[0.5], &arc, 1).unwrap());
        assert!((amps[0] - (PI / 12.0).cos()).abs() < 1e-15);
        assert!((amps[1] - (PI / 12.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn identity_circuit_expectations() {
        let sin = EmbeddingScheme::uniform(EmbeddingKind::Sinusoidal, 1, 1);
        let arc = EmbeddingScheme::uniform(EmbeddingKind::Arcsin, 1, 1);
        for i in 0..100 {
            let x = -0.95 + 1.9 * i as f64 / 99.0;
            let z = pauli_z_expectation(&embed(&[x], &sin, 1).unwrap(), 0).unwrap();
            assert!((z - x.cos()).abs() < 1e-12);
            let z = pauli_z_expectation(&embed(&[x], &arc, 1).unwrap(), 0).unwrap();
            assert!((z - (1.0 - x * x).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn input_scale_only_affects_sinusoidal_qubits() {
        let scheme = EmbeddingScheme::hybrid(2, 1).with_scale(PI);
        assert_eq!(scheme.angles(&[0.5]).unwrap(), vec![PI * 0.5, 0.5f64.asin()]);
    }

    #[test]
    fn domain_errors() {
        let arc = EmbeddingScheme::uniform(EmbeddingKind::Arcsin, 1, 1);
        assert!(matches!(embed(&[1.2], &arc, 1), Err(QnnError::Domain(_))));
        let sin = EmbeddingScheme::uniform(EmbeddingKind::Sinusoidal, 1, 1);
        assert!(embed(&[1.2], &sin, 1).is_ok());
        assert!(matches!(embed(&[4.0], &sin, 1), Err(QnnError::Domain(_))));
        assert!(matches!(embed(&[f64::NAN], &sin, 1), Err(QnnError::Domain(_))));
    }

    #[test]
    fn round_robin_assignment_and_validation() {
        assert_eq!(round_robin(4, 3), vec![0, 1, 2, 0]);
        assert_eq!(round_robin(2, 2), vec![0, 1]);
        let bad = EmbeddingScheme {
            per_qubit: vec![EmbeddingKind::Sinusoidal; 2],
            variable_of_qubit: vec![0, 0],
            input_scale: 1.0,
        };
        assert!(matches!(bad.validate(2, 2), Err(QnnError::Config(_))));
        assert!(matches!(embed(&[0.1, 0.2], &bad, 2), Err(QnnError::Config(_))));
    }

    #[test]
    fn embedded_state_is_normalized() {
        let scheme = EmbeddingScheme::hybrid(3, 2);
        for i in 0..50 {
            let x = [-0.95 + 0.038 * i as f64, 0.95 - 0.038 * i as f64];
            assert!((embed(&x, &scheme, 3).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kind_parses_config_names() {
        assert_eq!("sin".parse::<EmbeddingKind>().unwrap(), EmbeddingKind::Sinusoidal);
        assert_eq!("arcsin".parse::<EmbeddingKind>().unwrap(), EmbeddingKind::Arcsin);
        assert!("amplitude".parse::<EmbeddingKind>().is_err());
    }
}
