//! Target functions and training/test set generation.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QnnError, Result};

/// Lower and upper bound of every input coordinate.
pub const INPUT_BOUND: f64 = 0.95;

/// Name of the generator behind [`sample_random`], recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetFunction {
    /// `sin(pi x)`
    F1v1,
    /// `sin(2 pi x)`
    F1v2,
    /// `0.2 sin(2 pi x) + 0.8 cos^2(2 pi x)`
    F1v3,
    /// `sin(2 pi x) + 0.5 sqrt(1 - x^2) + x`
    F1v0,
    /// `0.5 sin(pi x1) sin(pi x2) + 0.8 cos^2(pi x1) + 0.3 sin(pi x2)`
    F2,
    /// `0.5 sin(x1) sin(x2) - 0.6 cos(x2) sin(x3) + cos^2(x3)`
    F3,
}

impl TargetFunction {
    pub const ALL: [TargetFunction; 6] = [
        TargetFunction::F1v1,
        TargetFunction::F1v2,
        TargetFunction::F1v3,
        TargetFunction::F1v0,
        TargetFunction::F2,
        TargetFunction::F3,
    ];

    pub fn dim(&self) -> usize {
        match self {
            TargetFunction::F2 => 2,
            TargetFunction::F3 => 3,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TargetFunction::F1v1 => "f1v1",
            TargetFunction::F1v2 => "f1v2",
            TargetFunction::F1v3 => "f1v3",
            TargetFunction::F1v0 => "f1v0",
            TargetFunction::F2 => "f2",
            TargetFunction::F3 => "f3",
        }
    }

    /// Input scale of sinusoidal qubits: the angular frequency a single
    /// qubit must carry so that the target lies in the model span.
    pub fn natural_scale(&self) -> f64 {
        match self {
            TargetFunction::F1v2 => 2.0 * PI,
            TargetFunction::F3 => 1.0,
            _ => PI,
        }
    }

    /// Default training-set size: equal for meshgrid and random modes.
    pub fn train_size(&self) -> usize {
        match self.dim() {
            1 => 100,
            2 => 400,
            _ => 1000,
        }
    }

    /// Points per dimension of the dense test grid.
    pub fn test_points_per_dim(&self) -> usize {
        match self.dim() {
            1 => 200,
            2 => 30,
            _ => 12,
        }
    }

    /// Evaluates the target at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(QnnError::Usage(format!(
                "{} takes {} inputs, got {}",
                self.name(),
                self.dim(),
                x.len()
            )));
        }
        Ok(match self {
            TargetFunction::F1v1 => (PI * x[0]).sin(),
            TargetFunction::F1v2 => (2.0 * PI * x[0]).sin(),
            TargetFunction::F1v3 => 0.2 * (2.0 * PI * x[0]).sin() + 0.8 * (2.0 * PI * x[0]).cos().powi(2),
            TargetFunction::F1v0 => (2.0 * PI * x[0]).sin() + 0.5 * (1.0 - x[0] * x[0]).sqrt() + x[0],
            TargetFunction::F2 => {
                0.5 * (PI * x[0]).sin() * (PI * x[1]).sin()
                    + 0.8 * (PI * x[0]).cos().powi(2)
                    + 0.3 * (PI * x[1]).sin()
            }
            TargetFunction::F3 => {
                0.5 * x[0].sin() * x[1].sin() - 0.6 * x[1].cos() * x[2].sin() + x[2].cos().powi(2)
            }
        })
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetFunction {
    type Err = QnnError;

    fn from_str(s: &str) -> Result<Self> {
        TargetFunction::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| QnnError::Usage(format!("unknown target function `{s}`")))
    }
}

pub fn eval_target(f: TargetFunction, x: &[f64]) -> Result<f64> {
    f.eval(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataMode {
    Meshgrid,
    Random,
}

impl FromStr for DataMode {
    type Err = QnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "meshgrid" => Ok(DataMode::Meshgrid),
            "random" => Ok(DataMode::Random),
            other => Err(QnnError::Config(format!("unknown data mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub function: TargetFunction,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub mode: DataMode,
    /// Generator seed; `None` for meshgrids.
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.function.dim()
    }

    fn from_inputs(function: TargetFunction, inputs: Vec<Vec<f64>>, mode: DataMode, seed: Option<u64>) -> Self {
        let targets = inputs.iter().map(|x| function.eval(x).expect("inputs sized by dim")).collect();
        Self { function, inputs, targets, mode, seed }
    }

    /// CSV with header `x0,...,x{d-1},y` and 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim()).map(|j| format!("x{j}")).chain(["y".to_string()]).collect();
        writeln!(out, "{}", header.join(","))?;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            let row: Vec<String> = x.iter().chain(std::iter::once(y)).map(|v| format_f64(*v)).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Formats a double with 17 significant digits, enough to round-trip.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `n` evenly spaced points from `-0.95` to `0.95` inclusive.
pub fn linspace(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let step = 2.0 * INPUT_BOUND / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { INPUT_BOUND } else { -INPUT_BOUND + step * i as f64 })
        .collect()
}

/// Cartesian product of `points^dim` grid points; the last coordinate varies fastest.
pub fn grid_points(dim: usize, points: usize) -> Vec<Vec<f64>> {
    let axis = linspace(points);
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Uniformly spaced grid over the input box, endpoints included.
pub fn sample_meshgrid(f: TargetFunction, points_per_dim: usize) -> Result<Dataset> {
    if points_per_dim < 2 {
        return Err(QnnError::Usage(format!("meshgrid needs at least 2 points per dimension, got {points_per_dim}")));
    }
    Ok(Dataset::from_inputs(f, grid_points(f.dim(), points_per_dim), DataMode::Meshgrid, None))
}

/// `n` i.i.d. uniform draws over the input box.
pub fn sample_random(f: TargetFunction, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(QnnError::Usage("random dataset needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = (0..n)
        .map(|_| (0..f.dim()).map(|_| rng.random_range(-INPUT_BOUND..=INPUT_BOUND)).collect())
        .collect();
    Ok(Dataset::from_inputs(f, inputs, DataMode::Random, Some(seed)))
}

/// Smallest per-dimension count whose grid has at least `n` points.
pub fn meshgrid_points_for(n: usize, dim: usize) -> usize {
    let mut k: usize = 2;
    while k.pow(dim as u32) < n {
        k += 1;
    }
    k
}

/// The dense meshgrid used for every test evaluation.
pub fn test_set(f: TargetFunction) -> Dataset {
    sample_meshgrid(f, f.test_points_per_dim()).expect("test grid has >= 2 points")
}
