//! Benchmark fixtures shared by the criterion targets.

use qnn_core::{make_variant, DataMode, ModelSpec, ParamSet, TargetFunction, Variant};

/// QNN-A for `function` with deterministic parameters.
pub fn fixture(function: TargetFunction) -> (ModelSpec, ParamSet, Vec<Vec<f64>>, Vec<f64>) {
    let (model, _) = make_variant(Variant::QnnA, function);
    let theta = (0..model.ansatz.param_count()).map(|i| 0.37 * i as f64).collect();
    let params = ParamSet {
        theta,
        combine_w: vec![0.3; model.combine_len()],
        poly_w: vec![0.1, 0.8, -0.2],
    };
    let set = qnn_core::trainer::training_set(function, DataMode::Meshgrid, function.train_size(), 0)
        .expect("default training set");
    (model, params, set.inputs, set.targets)
}
