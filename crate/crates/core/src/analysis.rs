//! Numerical oracles for the expressibility claims: least-squares span
//! membership, growth of the spanned function space with the register size,
//! and the best error reachable by a one-qubit arcsin model.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::data::{grid_points, linspace, TargetFunction};
use crate::embedding::{EmbeddingKind, EmbeddingScheme};
use crate::error::{QnnError, Result};
use crate::gradients::BoundCircuit;
use crate::measurement::{post_measurement, MeasurementPlan};
use crate::model::{ModelSpec, ParamSet};

/// Membership threshold for span tests.
pub const SPAN_TOLERANCE: f64 = 1e-9;
/// Relative singular-value cutoff for numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-8;
/// Singular values below this fraction of the largest flag a rank-deficient dictionary.
const DEFICIENCY_TOLERANCE: f64 = 1e-12;

type BasisFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A named real function of the input vector.
pub struct BasisFunction {
    pub name: String,
    f: BasisFn,
}

impl BasisFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Box::new(f) }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for BasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A named list of basis functions over a fixed input dimension.
#[derive(Debug)]
pub struct Dictionary {
    pub name: String,
    pub dim: usize,
    pub functions: Vec<BasisFunction>,
}

fn sqrt1m(x: f64) -> f64 {
    (1.0 - x * x).sqrt()
}

impl Dictionary {
    /// `{1, sin x, cos x}`
    pub fn sinusoidal() -> Self {
        Self {
            name: "BF_S".into(),
            dim: 1,
            functions: vec![
                BasisFunction::new("1", |_| 1.0),
                BasisFunction::new("sin(x)", |x| x[0].sin()),
                BasisFunction::new("cos(x)", |x| x[0].cos()),
            ],
        }
    }

    /// `{1, x, sqrt(1-x^2)}`
    pub fn arcsin() -> Self {
        Self {
            name: "BF_A".into(),
            dim: 1,
            functions: vec![
                BasisFunction::new("1", |_| 1.0),
                BasisFunction::new("x", |x| x[0]),
                BasisFunction::new("sqrt(1-x^2)", |x| sqrt1m(x[0])),
            ],
        }
    }

    /// The nine products of `{1, sin, cos}` in two variables.
    pub fn two_qubit() -> Self {
        Self {
            name: "BF_2".into(),
            dim: 2,
            functions: vec![
                BasisFunction::new("1", |_| 1.0),
                BasisFunction::new("sin(x1)", |x| x[0].sin()),
                BasisFunction::new("sin(x2)", |x| x[1].sin()),
                BasisFunction::new("cos(x1)", |x| x[0].cos()),
                BasisFunction::new("cos(x2)", |x| x[1].cos()),
                BasisFunction::new("cos(x1)*sin(x2)", |x| x[0].cos() * x[1].sin()),
                BasisFunction::new("sin(x1)*cos(x2)", |x| x[0].sin() * x[1].cos()),
                BasisFunction::new("cos(x1)*cos(x2)", |x| x[0].cos() * x[1].cos()),
                BasisFunction::new("sin(x1)*sin(x2)", |x| x[0].sin() * x[1].sin()),
            ],
        }
    }

    /// Products of `{1, sin x, cos x}` and `{1, x, sqrt(1-x^2)}` in one variable.
    pub fn hybrid() -> Self {
        Self {
            name: "BF_H".into(),
            dim: 1,
            functions: vec![
                BasisFunction::new("1", |_| 1.0),
                BasisFunction::new("sin(x)", |x| x[0].sin()),
                BasisFunction::new("cos(x)", |x| x[0].cos()),
                BasisFunction::new("x", |x| x[0]),
                BasisFunction::new("sqrt(1-x^2)", |x| sqrt1m(x[0])),
                BasisFunction::new("x*sin(x)", |x| x[0] * x[0].sin()),
                BasisFunction::new("sin(x)*sqrt(1-x^2)", |x| x[0].sin() * sqrt1m(x[0])),
                BasisFunction::new("x*cos(x)", |x| x[0] * x[0].cos()),
                BasisFunction::new("cos(x)*sqrt(1-x^2)", |x| x[0].cos() * sqrt1m(x[0])),
            ],
        }
    }

    /// `{1, cos x, sin x, sin x cos x, cos^2 x, sin^2 x}`
    pub fn post_measurement() -> Self {
        Self {
            name: "BF_P".into(),
            dim: 1,
            functions: vec![
                BasisFunction::new("1", |_| 1.0),
                BasisFunction::new("cos(x)", |x| x[0].cos()),
                BasisFunction::new("sin(x)", |x| x[0].sin()),
                BasisFunction::new("sin(x)*cos(x)", |x| x[0].sin() * x[0].cos()),
                BasisFunction::new("cos(x)^2", |x| x[0].cos().powi(2)),
                BasisFunction::new("sin(x)^2", |x| x[0].sin().powi(2)),
            ],
        }
    }

    /// `{1, x}`, a deliberately too-small dictionary.
    pub fn affine() -> Self {
        Self {
            name: "affine".into(),
            dim: 1,
            functions: vec![BasisFunction::new("1", |_| 1.0), BasisFunction::new("x", |x| x[0])],
        }
    }

    /// Removes the function called `name`; returns whether one was removed.
    pub fn drop_function(&mut self, name: &str) -> bool {
        let before = self.functions.len();
        self.functions.retain(|f| f.name != name);
        self.functions.len() != before
    }

    /// Feature matrix: one row per grid point, one column per function.
    pub fn design_matrix(&self, grid: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(grid.len(), self.functions.len(), |i, j| self.functions[j].eval(&grid[i]))
    }
}

/// Least-squares fits of many right-hand sides against one feature matrix.
pub struct LeastSquares {
    svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    design: DMatrix<f64>,
    pub rank_deficient: bool,
}

impl LeastSquares {
    pub fn new(design: DMatrix<f64>) -> Self {
        let svd = design.clone().svd(true, true);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        let rank_deficient = design.ncols() > design.nrows() || min <= DEFICIENCY_TOLERANCE * max;
        Self { svd, design, rank_deficient }
    }

    pub fn coefficients(&self, values: &[f64]) -> DVector<f64> {
        let b = DVector::from_column_slice(values);
        let max = self.svd.singular_values.max();
        self.svd.solve(&b, DEFICIENCY_TOLERANCE * max).expect("SVD computed with U and V")
    }

    /// Residual vector `A c - y` of the best fit.
    pub fn residuals(&self, values: &[f64]) -> Vec<f64> {
        let fitted = &self.design * self.coefficients(values);
        fitted.iter().zip(values).map(|(f, y)| f - y).collect()
    }

    pub fn max_residual(&self, values: &[f64]) -> f64 {
        self.residuals(values).iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn mean_abs_residual(&self, values: &[f64]) -> f64 {
        let r = self.residuals(values);
        r.iter().map(|v| v.abs()).sum::<f64>() / r.len() as f64
    }
}

/// Which scalar output of the circuit is tested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    /// `<Z_q>` itself.
    Expectation { qubit: usize },
    /// A random polynomial of `<Z_q>` with coefficients uniform in `[-1, 1]`.
    Polynomial { qubit: usize, degree: usize },
}

/// A circuit family: embedding, register size and ansatz depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    pub embedding: EmbeddingScheme,
    pub layers: usize,
}

impl ModelFamily {
    pub fn new(embedding: EmbeddingScheme, layers: usize) -> Self {
        Self { embedding, layers }
    }

    pub fn n_qubits(&self) -> usize {
        self.embedding.n_qubits()
    }

    pub fn dim(&self) -> usize {
        self.embedding.variable_of_qubit.iter().max().map_or(0, |m| m + 1)
    }

    fn model(&self, qubit: usize) -> ModelSpec {
        let n = self.n_qubits();
        ModelSpec {
            variant_name: "oracle".into(),
            input_dim: self.dim(),
            embedding: self.embedding.clone(),
            ansatz: AnsatzSpec::new(n, self.layers),
            plan: MeasurementPlan::single(qubit),
            poly_degree: 1,
            poly_trainable: false,
        }
    }

    /// Values of `probe` on `grid` for a random draw of angles (and weights).
    pub fn sample<R: Rng + ?Sized>(&self, probe: Probe, grid: &[Vec<f64>], rng: &mut R) -> Result<Vec<f64>> {
        let (qubit, degree) = match probe {
            Probe::Expectation { qubit } => (qubit, None),
            Probe::Polynomial { qubit, degree } => (qubit, Some(degree)),
        };
        let model = self.model(qubit);
        let theta = (0..model.ansatz.param_count()).map(|_| rng.random::<f64>() * TAU).collect();
        let params = ParamSet { theta, combine_w: vec![], poly_w: vec![0.0, 1.0] };
        let poly: Option<Vec<f64>> = degree.map(|d| (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect());
        let circuit = BoundCircuit::new(&model, &params)?;
        grid.iter()
            .map(|x| {
                let z = circuit.expectations(x)?[0];
                Ok(poly.as_ref().map_or(z, |w| post_measurement(z, w)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanTestResult {
    pub dictionary: String,
    pub n_trials: usize,
    /// Largest max-abs residual over all trials.
    pub max_residual: f64,
    /// Per-trial max-abs residuals.
    pub residuals: Vec<f64>,
    pub rank_deficient: bool,
    pub pass: bool,
}

/// Fits `n_trials` random circuit outputs against `dictionary` on `grid`.
pub fn span_test(
    family: &ModelFamily,
    probe: Probe,
    dictionary: &Dictionary,
    n_trials: usize,
    grid: &[Vec<f64>],
    seed: u64,
) -> Result<SpanTestResult> {
    let lsq = LeastSquares::new(dictionary.design_matrix(grid));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let residuals = (0..n_trials)
        .map(|_| family.sample(probe, grid, &mut rng).map(|v| lsq.max_residual(&v)))
        .collect::<Result<Vec<f64>>>()?;
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(SpanTestResult {
        dictionary: dictionary.name.clone(),
        n_trials,
        max_residual,
        residuals,
        rank_deficient: lsq.rank_deficient,
        pass: max_residual < SPAN_TOLERANCE,
    })
}

/// Numerical rank of a matrix with the relative tolerance [`RANK_TOLERANCE`].
pub fn numerical_rank(m: DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let max = sv.max();
    sv.iter().filter(|s| **s > RANK_TOLERANCE * max).count()
}

/// Dimension of the function space spanned by `<Z_0>` of an `n`-qubit
/// sinusoidal circuit whose qubit `i` reads variable `x_i`.
///
/// Rows of the sampled matrix are `<Z_0>` on a `points_per_dim^n` grid for
/// `n_random_params` random angle draws, plus the constant function.
pub fn basis_rank(n_qubits: usize, n_random_params: usize, points_per_dim: usize, layers: usize, seed: u64) -> Result<usize> {
    let family = ModelFamily::new(
        EmbeddingScheme { variable_of_qubit: (0..n_qubits).collect(), ..EmbeddingScheme::uniform(EmbeddingKind::Sinusoidal, n_qubits, n_qubits) },
        layers,
    );
    let grid = grid_points(n_qubits, points_per_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![vec![1.0; grid.len()]];
    for _ in 0..n_random_params {
        rows.push(family.sample(Probe::Expectation { qubit: 0 }, &grid, &mut rng)?);
    }
    let m = DMatrix::from_fn(rows.len(), grid.len(), |i, j| rows[i][j]);
    Ok(numerical_rank(m))
}

/// Best mean absolute error of `a x + b sqrt(1-x^2) + c` fitted to `target`
/// by least squares on `grid`.
pub fn arcsin_error_floor(target: impl Fn(f64) -> f64, grid: &[f64]) -> f64 {
    let points: Vec<Vec<f64>> = grid.iter().map(|&x| vec![x]).collect();
    let lsq = LeastSquares::new(Dictionary::arcsin().design_matrix(&points));
    let values: Vec<f64> = grid.iter().map(|&x| target(x)).collect();
    lsq.mean_abs_residual(&values)
}

/// [`arcsin_error_floor`] for a registered univariate target.
pub fn arcsin_error_floor_for(f: TargetFunction, grid: &[f64]) -> Option<f64> {
    (f.dim() == 1).then(|| arcsin_error_floor(|x| f.eval(&[x]).expect("univariate"), grid))
}

/// Default oracle grids.
pub fn grid_1d() -> Vec<Vec<f64>> {
    linspace(201).into_iter().map(|x| vec![x]).collect()
}

pub fn grid_2d() -> Vec<Vec<f64>> {
    grid_points(2, 61)
}

/// Which group of oracles to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleGroup {
    Span,
    Rank,
    Floor,
}

impl std::str::FromStr for OracleGroup {
    type Err = QnnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "span" => Ok(OracleGroup::Span),
            "rank" => Ok(OracleGroup::Rank),
            "floor" => Ok(OracleGroup::Floor),
            other => Err(QnnError::Config(format!("unknown oracle group `{other}` (span, rank, floor)"))),
        }
    }
}

/// Comparison an oracle value must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

impl Comparison {
    pub fn holds(&self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Below => value < threshold,
            Comparison::Above => value > threshold,
            Comparison::AtLeast => value >= threshold,
            Comparison::Equal => value == threshold,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Comparison::Below => "<",
            Comparison::Above => ">",
            Comparison::AtLeast => ">=",
            Comparison::Equal => "==",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub name: String,
    pub group: OracleGroup,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
}

impl OracleRow {
    fn new(name: &str, group: OracleGroup, value: f64, comparison: Comparison, threshold: f64) -> Self {
        Self { name: name.into(), group, value, comparison, threshold, pass: comparison.holds(value, threshold) }
    }
}

/// Settings of an oracle sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub only: Option<OracleGroup>,
    pub max_qubits: usize,
    pub trials: usize,
    pub layers: usize,
    pub seed: u64,
    /// Basis function names removed from every span dictionary.
    pub drop_basis: Vec<String>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { only: None, max_qubits: 3, trials: 50, layers: 4, seed: 0, drop_basis: Vec::new() }
    }
}

/// Runs the span, rank and arcsin-floor oracles.
pub fn run_oracles(cfg: &OracleConfig) -> Result<Vec<OracleRow>> {
    let wants = |g: OracleGroup| cfg.only.is_none_or(|o| o == g);
    let mut rows = Vec::new();
    let g1 = grid_1d();

    if wants(OracleGroup::Span) {
        let dict = |mut d: Dictionary| {
            for name in &cfg.drop_basis {
                d.drop_function(name);
            }
            d
        };
        let sin1 = ModelFamily::new(EmbeddingScheme::uniform(EmbeddingKind::Sinusoidal, 1, 1), cfg.layers);
        let arc1 = ModelFamily::new(EmbeddingScheme::uniform(EmbeddingKind::Arcsin, 1, 1), cfg.layers);
        let sin2 = ModelFamily::new(EmbeddingScheme::uniform(EmbeddingKind::Sinusoidal, 2, 2), cfg.layers);
        let hyb2 = ModelFamily::new(EmbeddingScheme::hybrid(2, 1), cfg.layers);
        let g2 = grid_2d();
        let z0 = Probe::Expectation { qubit: 0 };
        let z1 = Probe::Expectation { qubit: 1 };
        let poly = Probe::Polynomial { qubit: 0, degree: 2 };
        let cases: [(&str, &ModelFamily, Probe, Dictionary, &[Vec<f64>]); 6] = [
            ("span_1q_sin_bf_s", &sin1, z0, dict(Dictionary::sinusoidal()), &g1),
            ("span_1q_arcsin_bf_a", &arc1, z0, dict(Dictionary::arcsin()), &g1),
            ("span_2q_sin_z0_bf_2", &sin2, z0, dict(Dictionary::two_qubit()), &g2),
            ("span_2q_sin_z1_bf_2", &sin2, z1, dict(Dictionary::two_qubit()), &g2),
            ("span_2q_hybrid_bf_h", &hyb2, z0, dict(Dictionary::hybrid()), &g1),
            ("span_1q_poly_bf_p", &sin1, poly, dict(Dictionary::post_measurement()), &g1),
        ];
        for (i, (name, family, probe, d, grid)) in cases.into_iter().enumerate() {
            let r = span_test(family, probe, &d, cfg.trials, grid, cfg.seed.wrapping_add(i as u64))?;
            rows.push(OracleRow::new(name, OracleGroup::Span, r.max_residual, Comparison::Below, SPAN_TOLERANCE));
        }

        let affine = span_test(&sin1, z0, &Dictionary::affine(), cfg.trials, &g1, cfg.seed.wrapping_add(100))?;
        let min_affine = affine.residuals.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(OracleRow::new("negative_1q_sin_affine", OracleGroup::Span, min_affine, Comparison::Above, 1e-2));

        let outside = span_test(&sin1, poly, &Dictionary::sinusoidal(), cfg.trials, &g1, cfg.seed.wrapping_add(101))?;
        let escaped = outside.residuals.iter().filter(|r| **r > 1e-3).count();
        let needed = (cfg.trials as f64 * 0.9).ceil();
        rows.push(OracleRow::new("negative_1q_poly_bf_s", OracleGroup::Span, escaped as f64, Comparison::AtLeast, needed));
    }

    if wants(OracleGroup::Rank) {
        for n in 1..=cfg.max_qubits {
            let expected = 3usize.pow(n as u32);
            let rank = basis_rank(n, 2 * expected + 8, rank_grid_points(n), cfg.layers, cfg.seed.wrapping_add(200 + n as u64))?;
            rows.push(OracleRow::new(&format!("rank_{n}q"), OracleGroup::Rank, rank as f64, Comparison::Equal, expected as f64));
        }
    }

    if wants(OracleGroup::Floor) {
        let axis = linspace(201);
        let floor = arcsin_error_floor_for(TargetFunction::F1v1, &axis).expect("univariate");
        rows.push(OracleRow::new("floor_arcsin_f1v1", OracleGroup::Floor, floor, Comparison::Above, 0.05));
    }
    Ok(rows)
}

/// Grid resolution for the rank oracle: at least `4 * 3^n` points in total.
pub fn rank_grid_points(n_qubits: usize) -> usize {
    let needed = 4 * 3usize.pow(n_qubits as u32);
    let mut k: usize = 5;
    while k.pow(n_qubits as u32) < needed {
        k += 1;
    }
    k
}

/// Writes oracle rows as CSV with columns `name,group,value,comparison,threshold,pass`.
pub fn write_oracle_csv<W: std::io::Write>(rows: &[OracleRow], mut out: W) -> Result<()> {
    writeln!(out, "name,group,value,comparison,threshold,pass")?;
    for r in rows {
        let group = match r.group {
            OracleGroup::Span => "span",
            OracleGroup::Rank => "rank",
            OracleGroup::Floor => "floor",
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.name,
            group,
            crate::data::format_f64(r.value),
            r.comparison.symbol(),
            crate::data::format_f64(r.threshold),
            r.pass
        )?;
    }
    Ok(())
}
