//! Dense statevector simulation and hybrid quantum-classical training of
//! quantum neural network regressors.
//!
//! A model embeds a classical input with RY rotations, applies a layered
//! RY/RZ + CNOT ansatz, reads Pauli-Z expectations (optionally several
//! qubits combined with learned weights) and passes the result through a
//! learned polynomial. Circuit angles are trained with exact
//! parameter-shift gradients and Adam.
//!
//! The [`analysis`] module checks which basis functions each architecture
//! can express, independently of any training.

pub mod analysis;
pub mod ansatz;
pub mod data;
pub mod embedding;
pub mod error;
pub mod gradients;
pub mod measurement;
pub mod model;
pub mod optimizer;
pub mod statevector;
pub mod trainer;

pub use ansatz::{build_circuit, param_count, AnsatzSpec, Entangler};
pub use data::{eval_target, sample_meshgrid, sample_random, DataMode, Dataset, TargetFunction};
pub use embedding::{embed, EmbeddingKind, EmbeddingScheme};
pub use error::{QnnError, Result};
pub use gradients::{full_gradient, shift_gradient, GradientVector, Loss};
pub use measurement::{
    combined_measurement, forward, pauli_z_expectation, post_measurement, MeasurementPlan, ReadoutWeights,
};
pub use model::{ModelSpec, ParamSet};
pub use optimizer::{adam_step, AdamConfig, AdamState};
pub use statevector::{Gate, StateVector};
pub use trainer::{
    ablate, make_variant, train, variance_study, Experiment, RunReport, TrainConfig, Variant, VariantOverrides,
};
