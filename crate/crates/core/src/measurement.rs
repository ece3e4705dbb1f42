//! Quantum-to-classical readout: Pauli-Z expectations, the weighted sum over
//! several measured qubits, and the post-measurement polynomial.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::ansatz::build_circuit;
use crate::embedding::embed;
use crate::error::{QnnError, Result};
use crate::model::{ModelSpec, ParamSet};
use crate::statevector::StateVector;

/// Which qubits are read out and whether their expectations are combined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub measured_qubits: Vec<usize>,
    /// Combine every listed qubit with learned weights; otherwise only the
    /// first listed qubit is read.
    pub redundant: bool,
}

impl MeasurementPlan {
    pub fn single(qubit: usize) -> Self {
        Self { measured_qubits: vec![qubit], redundant: false }
    }

    /// Every qubit of the register, combined.
    pub fn all(n_qubits: usize) -> Self {
        Self { measured_qubits: (0..n_qubits).collect(), redundant: true }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.measured_qubits.is_empty() {
            return Err(QnnError::Config("measurement plan lists no qubits".into()));
        }
        for (i, &q) in self.measured_qubits.iter().enumerate() {
            if q >= n_qubits {
                return Err(QnnError::Structure(format!("measured qubit {q} on a {n_qubits}-qubit register")));
            }
            if self.measured_qubits[..i].contains(&q) {
                return Err(QnnError::Config(format!("qubit {q} measured twice")));
            }
        }
        Ok(())
    }

    /// The qubits whose expectations actually enter the output.
    pub fn active_qubits(&self) -> &[usize] {
        if self.redundant {
            &self.measured_qubits
        } else {
            &self.measured_qubits[..1]
        }
    }
}

/// Weighted-sum weights (bias last) and polynomial coefficients `w_0..w_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutWeights {
    pub combine_w: Vec<f64>,
    pub poly_w: Vec<f64>,
}

/// `<Z_q>`: probability of bit `q` clear minus probability of it set.
pub fn pauli_z_expectation(state: &StateVector, qubit: usize) -> Result<f64> {
    if qubit >= state.n_qubits() {
        return Err(QnnError::Structure(format!(
            "qubit {qubit} on a {}-qubit register",
            state.n_qubits()
        )));
    }
    Ok(z_unchecked(state, qubit))
}

pub(crate) fn z_unchecked(state: &StateVector, qubit: usize) -> f64 {
    let mask = state.mask(qubit);
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// Binomial estimate of `<Z_q>` from `shots` projective measurements.
pub fn sampled_z_expectation<R: Rng + ?Sized>(
    state: &StateVector,
    qubit: usize,
    shots: u64,
    rng: &mut R,
) -> Result<f64> {
    let exact = pauli_z_expectation(state, qubit)?;
    Ok(sample_from_expectation(exact, shots, rng))
}

pub(crate) fn sample_from_expectation<R: Rng + ?Sized>(exact: f64, shots: u64, rng: &mut R) -> f64 {
    if shots == 0 {
        return exact;
    }
    let p_zero = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let zeros = Binomial::new(shots, p_zero).expect("probability clamped to [0, 1]").sample(rng);
    2.0 * zeros as f64 / shots as f64 - 1.0
}

/// Weighted sum of the expectations (bias last), or the first expectation
/// alone when the plan is not redundant.
pub fn combine_expectations(expectations: &[f64], plan: &MeasurementPlan, combine_w: &[f64]) -> Result<f64> {
    if !plan.redundant {
        return expectations
            .first()
            .copied()
            .ok_or_else(|| QnnError::Config("no expectation to read".into()));
    }
    if combine_w.len() != expectations.len() + 1 {
        return Err(QnnError::Config(format!(
            "{} combination weights for {} measured qubits",
            combine_w.len(),
            expectations.len()
        )));
    }
    let bias = combine_w[expectations.len()];
    Ok(expectations.iter().zip(combine_w).map(|(z, w)| z * w).sum::<f64>() + bias)
}

/// Reads the plan's qubits from `state` and combines them.
pub fn combined_measurement(state: &StateVector, plan: &MeasurementPlan, weights: &ReadoutWeights) -> Result<f64> {
    plan.validate(state.n_qubits())?;
    let expectations: Vec<f64> = plan.active_qubits().iter().map(|&q| z_unchecked(state, q)).collect();
    combine_expectations(&expectations, plan, &weights.combine_w)
}

/// `sum_k poly_w[k] * z^k`, evaluated by Horner's rule.
pub fn post_measurement(z: f64, poly_w: &[f64]) -> f64 {
    poly_w.iter().rev().fold(0.0, |acc, w| acc * z + w)
}

/// Derivative of the post-measurement polynomial with respect to `z`.
pub fn post_measurement_slope(z: f64, poly_w: &[f64]) -> f64 {
    poly_w
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, w)| acc * z + k as f64 * w)
}

/// Model prediction for input `x`.
pub fn forward(x: &[f64], model: &ModelSpec, params: &ParamSet) -> Result<f64> {
    params.validate(model)?;
    let state = embed(x, &model.embedding, model.n_qubits())?;
    let state = state.apply_circuit(&build_circuit(&model.ansatz, &params.theta)?)?;
    let weights = ReadoutWeights { combine_w: params.combine_w.clone(), poly_w: params.poly_w.clone() };
    let z = combined_measurement(&state, &model.plan, &weights)?;
    Ok(post_measurement(z, &params.poly_w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::AnsatzSpec;
    use crate::embedding::{EmbeddingKind, EmbeddingScheme};
    use crate::statevector::Gate;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn basis(n: usize, index: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let mut amps: Vec<Complex64> =
            (0..1 << n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn model(n: usize, layers: usize, plan: MeasurementPlan, degree: usize, trainable: bool) -> ModelSpec {
        ModelSpec {
            variant_name: "test".into(),
            input_dim: 1,
            embedding: EmbeddingScheme::uniform(EmbeddingKind::Sinusoidal, n, 1),
            ansatz: AnsatzSpec::new(n, layers),
            plan,
            poly_degree: degree,
            poly_trainable: trainable,
        }
    }

    #[test]
    fn z_on_basis_states() {
        assert_eq!(pauli_z_expectation(&basis(1, 0), 0).unwrap(), 1.0);
        assert_eq!(pauli_z_expectation(&basis(1, 1), 0).unwrap(), -1.0);
        // |01>: qubit 0 clear, qubit 1 set.
        assert_eq!(pauli_z_expectation(&basis(2, 1), 0).unwrap(), 1.0);
        assert_eq!(pauli_z_expectation(&basis(2, 1), 1).unwrap(), -1.0);
        assert!(matches!(pauli_z_expectation(&basis(2, 1), 2), Err(QnnError::Structure(_))));
    }

    #[test]
    fn z_after_rotation_is_cosine() {
        let s = StateVector::init_zero(1).unwrap().apply_gate(&Gate::ry(0, PI / 3.0)).unwrap();
        assert!((pauli_z_expectation(&s, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn z_is_bounded_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..10_000 {
            let n = 1 + i % 4;
            let s = random_state(n, &mut rng);
            for q in 0..n {
                let z = pauli_z_expectation(&s, q).unwrap();
                assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
            }
        }
    }

    #[test]
    fn combined_examples() {
        let plan = MeasurementPlan::all(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(2, &mut rng);
        let w = |c: Vec<f64>| ReadoutWeights { combine_w: c, poly_w: vec![0.0, 1.0] };
        let first = combined_measurement(&s, &plan, &w(vec![1.0, 0.0, 0.0])).unwrap();
        assert!((first - pauli_z_expectation(&s, 0).unwrap()).abs() < 1e-15);
        assert_eq!(combined_measurement(&basis(2, 0), &plan, &w(vec![0.5, 0.5, 0.0])).unwrap(), 1.0);
        assert_eq!(combined_measurement(&s, &plan, &w(vec![0.0, 0.0, 0.3])).unwrap(), 0.3);
        assert!(matches!(combined_measurement(&s, &plan, &w(vec![1.0, 0.0])), Err(QnnError::Config(_))));

        let single = MeasurementPlan { measured_qubits: vec![1, 0], redundant: false };
        let z1 = combined_measurement(&s, &single, &w(vec![])).unwrap();
        assert_eq!(z1, pauli_z_expectation(&s, 1).unwrap());
    }

    #[test]
    fn plan_validation() {
        assert!(MeasurementPlan { measured_qubits: vec![], redundant: true }.validate(2).is_err());
        assert!(MeasurementPlan { measured_qubits: vec![0, 0], redundant: true }.validate(2).is_err());
        assert!(matches!(MeasurementPlan::single(3).validate(2), Err(QnnError::Structure(_))));
    }

    #[test]
    fn polynomial_examples() {
        assert_eq!(post_measurement(0.7, &[0.0, 1.0, 0.0]), 0.7);
        assert_eq!(post_measurement(-0.3, &[1.0, 0.0, 0.0]), 1.0);
        assert_eq!(post_measurement(0.5, &[0.0, 0.0, 1.0]), 0.25);
        assert!((post_measurement_slope(0.5, &[0.3, 2.0, 3.0, 4.0]) - (2.0 + 3.0 + 3.0)).abs() < 1e-15);
        assert_eq!(post_measurement_slope(0.5, &[0.3]), 0.0);
    }

    #[test]
    fn forward_examples() {
        let m = model(1, 0, MeasurementPlan::single(0), 2, true);
        let p = ParamSet { theta: vec![], combine_w: vec![], poly_w: vec![0.0, 1.0, 0.0] };
        assert!((forward(&[0.0], &m, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((forward(&[PI / 3.0], &m, &p).unwrap() - 0.5).abs() < 1e-15);

        let m = model(2, 0, MeasurementPlan::all(2), 2, true);
        let p = ParamSet { theta: vec![], combine_w: vec![0.5, 0.5, 0.0], poly_w: vec![0.0, 1.0, 0.0] };
        assert!((forward(&[0.0], &m, &p).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn forward_is_deterministic_and_checks_layout() {
        let m = model(2, 2, MeasurementPlan::all(2), 2, true);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = ParamSet::init(&m, &mut rng);
        p.combine_w = vec![0.3, -0.2, 0.1];
        p.poly_w = vec![0.1, 0.9, -0.4];
        assert_eq!(forward(&[0.4], &m, &p).unwrap(), forward(&[0.4], &m, &p).unwrap());
        p.poly_w.pop();
        assert!(matches!(forward(&[0.4], &m, &p), Err(QnnError::Config(_))));
    }

    #[test]
    fn shot_estimates_concentrate() {
        let s = StateVector::init_zero(1).unwrap().apply_gate(&Gate::ry(0, 1.1)).unwrap();
        let exact = pauli_z_expectation(&s, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let est = sampled_z_expectation(&s, 0, 200_000, &mut rng).unwrap();
        assert!((est - exact).abs() < 0.01);
        assert_eq!(sampled_z_expectation(&s, 0, 0, &mut rng).unwrap(), exact);
    }
}
