//! Dense statevector simulation.
//!
//! Qubit 0 is the most significant bit of the amplitude index, so for two
//! qubits the basis order is `|q0 q1>`: `|00>, |01>, |10>, |11>`. This is the
//! ordering under which `Z ⊗ I` measures qubit 0.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QnnError, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 8;

/// A gate acting on a register.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gate {
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn ry(target: usize, angle: f64) -> Self {
        Gate::Ry { target, angle }
    }

    pub fn rz(target: usize, angle: f64) -> Self {
        Gate::Rz { target, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    /// The gate that undoes this one.
    pub fn inverse(&self) -> Self {
        match *self {
            Gate::Ry { target, angle } => Gate::Ry { target, angle: -angle },
            Gate::Rz { target, angle } => Gate::Rz { target, angle: -angle },
            cnot @ Gate::Cnot { .. } => cnot,
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::Ry { target, .. } | Gate::Rz { target, .. } | Gate::Cnot { target, .. } => target,
        }
    }

    /// Checks qubit indices against a register of `n_qubits`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let target = self.target();
        if target >= n_qubits {
            return Err(QnnError::Structure(format!(
                "{self} targets qubit {target} on a {n_qubits}-qubit register"
            )));
        }
        if let Gate::Cnot { control, target } = *self {
            if control >= n_qubits {
                return Err(QnnError::Structure(format!(
                    "{self} controls on qubit {control} on a {n_qubits}-qubit register"
                )));
            }
            if control == target {
                return Err(QnnError::Structure(format!("{self} has control == target")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Ry { target, angle } => write!(f, "RY({angle}) q{target}"),
            Gate::Rz { target, angle } => write!(f, "RZ({angle}) q{target}"),
            Gate::Cnot { control, target } => write!(f, "CNOT q{control}->q{target}"),
        }
    }
}

/// A validated gate with its matrix entries precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum CompiledGate {
    Ry { mask: usize, c: f64, s: f64 },
    Rz { mask: usize, lower: Complex64, upper: Complex64 },
    Cnot { cmask: usize, tmask: usize },
}

impl CompiledGate {
    pub(crate) fn new(gate: &Gate, n_qubits: usize) -> Self {
        let mask = |q: usize| 1 << (n_qubits - 1 - q);
        match *gate {
            Gate::Ry { target, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                CompiledGate::Ry { mask: mask(target), c, s }
            }
            Gate::Rz { target, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                CompiledGate::Rz { mask: mask(target), lower: Complex64::new(c, -s), upper: Complex64::new(c, s) }
            }
            Gate::Cnot { control, target } => CompiledGate::Cnot { cmask: mask(control), tmask: mask(target) },
        }
    }
}

/// `2^n` complex amplitudes of an `n`-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zero computational basis state `|0...0>`.
    pub fn init_zero(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(QnnError::Config(format!(
                "register size {n_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// Builds a state from raw amplitudes. The length must be a power of two
    /// and the vector must be normalized to within `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QnnError::Config(format!("amplitude length {len} is not 2^n with n >= 1")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(QnnError::Config(format!("register size {n_qubits} exceeds {MAX_QUBITS}")));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QnnError::Config(format!("amplitudes have squared norm {norm}")));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Tensor product of single-qubit real states `(cos_i, sin_i)`, qubit 0 first.
    pub(crate) fn product_state(columns: &[(f64, f64)]) -> Self {
        let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
        for &(a, b) in columns {
            let mut next = Vec::with_capacity(amplitudes.len() * 2);
            for amp in &amplitudes {
                next.push(amp * a);
                next.push(amp * b);
            }
            amplitudes = next;
        }
        Self { n_qubits: columns.len(), amplitudes }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Bit mask selecting `qubit` in an amplitude index.
    #[inline]
    pub(crate) fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Applies `gate` in place.
    pub fn apply_gate_mut(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    /// Returns the state after `gate`.
    pub fn apply_gate(mut self, gate: &Gate) -> Result<Self> {
        self.apply_gate_mut(gate)?;
        Ok(self)
    }

    /// Applies the gates in order. All gates are validated before any is applied.
    pub fn apply_circuit(mut self, gates: &[Gate]) -> Result<Self> {
        for gate in gates {
            gate.validate(self.n_qubits)?;
        }
        for gate in gates {
            self.apply_unchecked(gate);
        }
        Ok(self)
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        self.apply_compiled(&CompiledGate::new(gate, self.n_qubits));
    }

    pub(crate) fn apply_compiled(&mut self, gate: &CompiledGate) {
        let len = self.amplitudes.len();
        match *gate {
            CompiledGate::Ry { mask, c, s } => {
                for block in (0..len).step_by(2 * mask) {
                    for i in block..block + mask {
                        let a0 = self.amplitudes[i];
                        let a1 = self.amplitudes[i + mask];
                        self.amplitudes[i] = a0 * c - a1 * s;
                        self.amplitudes[i + mask] = a0 * s + a1 * c;
                    }
                }
            }
            CompiledGate::Rz { mask, lower, upper } => {
                for block in (0..len).step_by(2 * mask) {
                    for amp in &mut self.amplitudes[block..block + mask] {
                        *amp *= lower;
                    }
                    for amp in &mut self.amplitudes[block + mask..block + 2 * mask] {
                        *amp *= upper;
                    }
                }
            }
            CompiledGate::Cnot { cmask, tmask } => {
                for i in 0..len {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
            }
        }
    }

    /// Largest element-wise distance to another state of the same size.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
