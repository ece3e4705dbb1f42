//! Exact gradients: parameter-shift for circuit angles, chain rule for the
//! classical readout weights.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::TemplateGate;
use crate::embedding::product_from_angles;
use crate::error::{QnnError, Result};
use crate::measurement::{combine_expectations, post_measurement, post_measurement_slope, z_unchecked};
use crate::model::{ModelSpec, ParamSet};
use crate::statevector::{CompiledGate, Gate, StateVector};

/// Training loss. Only mean squared error is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[default]
    Mse,
}

impl Loss {
    pub fn value(&self, prediction: f64, target: f64) -> f64 {
        match self {
            Loss::Mse => (prediction - target).powi(2),
        }
    }

    /// dL/d(prediction).
    pub fn derivative(&self, prediction: f64, target: f64) -> f64 {
        match self {
            Loss::Mse => 2.0 * (prediction - target),
        }
    }
}

/// Gradient of the mean loss, laid out like [`ParamSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    pub d_theta: Vec<f64>,
    pub d_combine: Vec<f64>,
    pub d_poly: Vec<f64>,
}

impl GradientVector {
    fn zeros(model: &ModelSpec) -> Self {
        Self {
            d_theta: vec![0.0; model.ansatz.param_count()],
            d_combine: vec![0.0; model.combine_len()],
            d_poly: vec![0.0; model.poly_len()],
        }
    }

    /// Trainable entries in optimizer order (see [`ParamSet::to_flat`]).
    pub fn to_flat(&self, model: &ModelSpec) -> Vec<f64> {
        let mut flat = Vec::with_capacity(model.trainable_len());
        flat.extend_from_slice(&self.d_theta);
        flat.extend_from_slice(&self.d_combine);
        if model.poly_trainable {
            flat.extend_from_slice(&self.d_poly);
        }
        flat
    }

    fn add_scaled(&mut self, other: &GradientVector, scale: f64) {
        for (a, b) in self.d_theta.iter_mut().zip(&other.d_theta) {
            *a += scale * b;
        }
        for (a, b) in self.d_combine.iter_mut().zip(&other.d_combine) {
            *a += scale * b;
        }
        for (a, b) in self.d_poly.iter_mut().zip(&other.d_poly) {
            *a += scale * b;
        }
    }
}

/// Expectations of the active qubits and their derivatives with respect to
/// every circuit angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftJacobian {
    pub expectations: Vec<f64>,
    /// `d_theta[k][j] = d<Z_{q_k}>/d theta_j`.
    pub d_theta: Vec<Vec<f64>>,
}

/// A model with its angles bound, ready to evaluate many inputs.
pub struct BoundCircuit<'a> {
    model: &'a ModelSpec,
    template: Vec<TemplateGate>,
    gates: Vec<CompiledGate>,
    /// The gate at each position shifted by `+pi/2` and `-pi/2`.
    shifted: Vec<(CompiledGate, CompiledGate)>,
    theta: Vec<f64>,
}

impl<'a> BoundCircuit<'a> {
    pub fn new(model: &'a ModelSpec, params: &ParamSet) -> Result<Self> {
        model.validate()?;
        params.validate(model)?;
        let n = model.n_qubits();
        let template = model.ansatz.template();
        let bound: Vec<Gate> = template.iter().map(|g| g.bind(&params.theta)).collect();
        let gates = bound.iter().map(|g| CompiledGate::new(g, n)).collect();
        let shifted = bound
            .iter()
            .map(|g| {
                (CompiledGate::new(&shift_gate(g, FRAC_PI_2), n), CompiledGate::new(&shift_gate(g, -FRAC_PI_2), n))
            })
            .collect();
        Ok(Self { model, template, gates, shifted, theta: params.theta.clone() })
    }

    fn input_state(&self, x: &[f64]) -> Result<StateVector> {
        if x.len() != self.model.input_dim {
            return Err(QnnError::Usage(format!(
                "input has dimension {}, model expects {}",
                x.len(),
                self.model.input_dim
            )));
        }
        Ok(product_from_angles(&self.model.embedding.angles(x)?))
    }

    fn measure(&self, state: &StateVector) -> Vec<f64> {
        self.model.plan.active_qubits().iter().map(|&q| z_unchecked(state, q)).collect()
    }

    /// Expectations of the active qubits at input `x`.
    pub fn expectations(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut state = self.input_state(x)?;
        for gate in &self.gates {
            state.apply_compiled(gate);
        }
        Ok(self.measure(&state))
    }

    /// Expectations plus the parameter-shift Jacobian.
    ///
    /// Every trainable gate is a Pauli rotation, so
    /// `d<Z>/d theta_j = (<Z>(theta_j + pi/2) - <Z>(theta_j - pi/2)) / 2`
    /// exactly. States before each gate are cached so each shifted
    /// evaluation only replays the suffix of the circuit.
    pub fn jacobian(&self, x: &[f64]) -> Result<ShiftJacobian> {
        let mut prefix = Vec::with_capacity(self.gates.len() + 1);
        let mut state = self.input_state(x)?;
        for gate in &self.gates {
            prefix.push(state.clone());
            state.apply_compiled(gate);
        }
        let expectations = self.measure(&state);
        let n_active = expectations.len();
        let mut d_theta = vec![vec![0.0; self.theta.len()]; n_active];

        let mut scratch = state;
        for (pos, slot) in self.template.iter().enumerate() {
            let Some(param) = slot.param() else { continue };
            let replay = |gate: &CompiledGate, scratch: &mut StateVector| {
                scratch.clone_from(&prefix[pos]);
                scratch.apply_compiled(gate);
                for gate in &self.gates[pos + 1..] {
                    scratch.apply_compiled(gate);
                }
                self.measure(scratch)
            };
            let (up, down) = &self.shifted[pos];
            let plus = replay(up, &mut scratch);
            let minus = replay(down, &mut scratch);
            for k in 0..n_active {
                d_theta[k][param] += (plus[k] - minus[k]) / 2.0;
            }
        }
        Ok(ShiftJacobian { expectations, d_theta })
    }
}

fn shift_gate(gate: &Gate, delta: f64) -> Gate {
    match *gate {
        Gate::Ry { target, angle } => Gate::ry(target, angle + delta),
        Gate::Rz { target, angle } => Gate::rz(target, angle + delta),
        cnot @ Gate::Cnot { .. } => cnot,
    }
}

/// Parameter-shift derivatives of every active qubit's expectation at `x`.
pub fn shift_gradient(model: &ModelSpec, params: &ParamSet, x: &[f64]) -> Result<ShiftJacobian> {
    BoundCircuit::new(model, params)?.jacobian(x)
}

/// Prediction and loss gradient for a single sample.
fn sample_gradient(
    circuit: &BoundCircuit<'_>,
    params: &ParamSet,
    x: &[f64],
    y: f64,
    loss: Loss,
) -> Result<(f64, GradientVector)> {
    let model = circuit.model;
    let jac = circuit.jacobian(x)?;
    let s = combine_expectations(&jac.expectations, &model.plan, &params.combine_w)?;
    let prediction = post_measurement(s, &params.poly_w);
    let dl_df = loss.derivative(prediction, y);
    let dl_ds = dl_df * post_measurement_slope(s, &params.poly_w);

    let mut grad = GradientVector::zeros(model);
    let mut power = 1.0;
    for d in grad.d_poly.iter_mut() {
        *d = dl_df * power;
        power *= s;
    }
    if model.plan.redundant {
        let m = jac.expectations.len();
        for k in 0..m {
            grad.d_combine[k] = dl_ds * jac.expectations[k];
            let weight = dl_ds * params.combine_w[k];
            for (d, dz) in grad.d_theta.iter_mut().zip(&jac.d_theta[k]) {
                *d += weight * dz;
            }
        }
        grad.d_combine[m] = dl_ds;
    } else {
        for (d, dz) in grad.d_theta.iter_mut().zip(&jac.d_theta[0]) {
            *d = dl_ds * dz;
        }
    }
    Ok((loss.value(prediction, y), grad))
}

/// Mean loss over the batch together with its gradient.
///
/// Per-sample work runs on the rayon pool; the reduction is a sequential sum
/// in sample order, so the result does not depend on the thread count.
pub fn loss_and_gradient(
    model: &ModelSpec,
    params: &ParamSet,
    inputs: &[Vec<f64>],
    targets: &[f64],
    loss: Loss,
) -> Result<(f64, GradientVector)> {
    if inputs.is_empty() {
        return Err(QnnError::Usage("gradient of an empty batch".into()));
    }
    if inputs.len() != targets.len() {
        return Err(QnnError::Usage(format!("{} inputs but {} targets", inputs.len(), targets.len())));
    }
    let circuit = BoundCircuit::new(model, params)?;
    let per_sample: Vec<(f64, GradientVector)> = inputs
        .par_iter()
        .zip(targets.par_iter())
        .map(|(x, &y)| sample_gradient(&circuit, params, x, y, loss))
        .collect::<Result<_>>()?;

    let scale = 1.0 / inputs.len() as f64;
    let mut total = GradientVector::zeros(model);
    let mut total_loss = 0.0;
    for (l, g) in &per_sample {
        total_loss += l;
        total.add_scaled(g, scale);
    }
    Ok((total_loss * scale, total))
}

/// Gradient of the mean loss over `(inputs, targets)`.
pub fn full_gradient(
    model: &ModelSpec,
    params: &ParamSet,
    inputs: &[Vec<f64>],
    targets: &[f64],
    loss: Loss,
) -> Result<GradientVector> {
    loss_and_gradient(model, params, inputs, targets, loss).map(|(_, g)| g)
}

/// Predictions for many inputs under one parameter set.
pub fn predict_batch(model: &ModelSpec, params: &ParamSet, inputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let circuit = BoundCircuit::new(model, params)?;
    inputs
        .par_iter()
        .map(|x| {
            let z = circuit.expectations(x)?;
            let s = combine_expectations(&z, &model.plan, &params.combine_w)?;
            Ok(post_measurement(s, &params.poly_w))
        })
        .collect()
}
