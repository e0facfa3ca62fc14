//! Binary classification tasks with label symmetries, equivariant models,
//! a small finite-difference trainer, and symmetry-detection helpers.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::equivariant::{equivariant_generators, QnnCircuit};
use crate::numerics::{
    c, commutator, embed, exp_unitary, herm_eig, identity, kron, outer, partial_trace, pauli_x, pauli_y, pauli_z,
    swap, ComplexMatrix, ComplexVector, Tolerance,
};
use crate::random::{bloch_state, random_direction, random_pure_density, rng};
use crate::representations::{bitflip_rep, su2_fundamental, swap_rep, tensor_power, Representation};
use crate::serial::matrix;
use crate::{Error, Result};

pub const DEFAULT_SHELL: [f64; 2] = [0.2, 0.8];
/// Half-width of the label-0 band of `swap2d` in `sin x¹ + sin x²`.
pub const SWAP2D_THRESHOLD: f64 = 0.7;
/// Bloch radii of the `ferro` single-qubit marginals.
pub const FERRO_RADII: [f64; 2] = [0.3, 1.0];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabeledState {
    #[serde(with = "matrix")]
    pub rho: ComplexMatrix,
    pub label: f64,
    /// Generation parameters, e.g. the encoded classical `x`.
    pub meta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Bitflip1d,
    Purity,
    Swap2d,
    Ferro,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::Bitflip1d, TaskKind::Purity, TaskKind::Swap2d, TaskKind::Ferro];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Bitflip1d => "bitflip1d",
            TaskKind::Purity => "purity",
            TaskKind::Swap2d => "swap2d",
            TaskKind::Ferro => "ferro",
        }
    }

    pub fn qubits(self) -> usize {
        match self {
            TaskKind::Bitflip1d | TaskKind::Purity => 1,
            TaskKind::Swap2d | TaskKind::Ferro => 2,
        }
    }

    /// Copies used by the default model.
    pub fn default_copies(self) -> usize {
        match self {
            TaskKind::Purity => 2,
            _ => 1,
        }
    }

    /// The label-preserving action on one copy of the data.
    pub fn symmetry(self) -> Representation {
        match self {
            TaskKind::Bitflip1d => bitflip_rep(1).expect("n = 1"),
            TaskKind::Purity => su2_fundamental(),
            TaskKind::Swap2d => swap_rep(),
            TaskKind::Ferro => tensor_power(&su2_fundamental(), 2).expect("k = 2"),
        }
    }

    /// Label computed from the state through a symmetry-invariant functional.
    pub fn label_of(self, rho: &ComplexMatrix) -> f64 {
        let ev = |m: &ComplexMatrix| (rho * m).trace().re;
        let label = match self {
            // ⟨X⟩ = cos x for R_Y(x)|+⟩
            TaskKind::Bitflip1d => ev(&pauli_x()) < FRAC_PI_4.cos(),
            TaskKind::Purity => (rho * rho).trace().re < 1.0 - 1e-9,
            // ⟨Z_i⟩ = −sin x^i
            TaskKind::Swap2d => {
                let z = pauli_z();
                (ev(&embed(&z, 0, 2, 2)) + ev(&embed(&z, 1, 2, 2))).abs() > SWAP2D_THRESHOLD
            }
            // r_a · r_b
            TaskKind::Ferro => {
                let heis: ComplexMatrix = [pauli_x(), pauli_y(), pauli_z()].iter().map(|p| kron(p, p)).sum();
                ev(&heis) < 0.0
            }
        };
        if label {
            1.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown task {s:?}")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dataset {
    pub task: TaskKind,
    pub states: Vec<LabeledState>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.label).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        crate::serial::to_json_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Number of states whose label changes under any of `n` sampled symmetry actions.
    pub fn symmetry_violations(&self, n: usize, seed: u64) -> usize {
        let sym = self.task.symmetry();
        let gs = sym.test_elements(n, seed);
        self.states
            .iter()
            .filter(|s| {
                gs.iter()
                    .any(|g| self.task.label_of(&(g * &s.rho * g.adjoint())) != s.label)
            })
            .count()
    }
}

/// Task name, size and purity shell. The `swap2d` band is fixed at [`SWAP2D_THRESHOLD`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: TaskKind,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default = "default_shell")]
    pub shell: [f64; 2],
}

fn default_shell() -> [f64; 2] {
    DEFAULT_SHELL
}

impl TaskSpec {
    pub fn new(name: TaskKind, n_samples: usize, seed: u64) -> Self {
        TaskSpec {
            name,
            n_samples,
            seed,
            shell: DEFAULT_SHELL,
        }
    }

    pub fn generate(&self) -> Result<Dataset> {
        match self.name {
            TaskKind::Bitflip1d => gen_bitflip1d(self.n_samples, self.seed),
            TaskKind::Purity => gen_purity(self.n_samples, self.seed, self.shell),
            TaskKind::Swap2d => gen_swap2d(self.n_samples, self.seed),
            TaskKind::Ferro => gen_ferro(self.n_samples, self.seed),
        }
    }
}

/// `R_Y(x)|+⟩`.
pub fn ry_plus(x: f64) -> ComplexVector {
    let plus = ComplexVector::from_element(2, c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    exp_unitary(&pauli_y().scale(0.5), x).expect("Hermitian") * plus
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    Ok(())
}

/// Label 0 for `x ∈ [−π/4, π/4]`, label 1 for `π/4 < |x| < π/2`; classes alternate.
pub fn gen_bitflip1d(n: usize, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let mut r = rng(seed);
    let states = (0..n)
        .map(|i| {
            let label = (i % 2) as f64;
            let x = loop {
                let x: f64 = if label == 0.0 {
                    r.random_range(-FRAC_PI_4..=FRAC_PI_4)
                } else {
                    let m = r.random_range(FRAC_PI_4..FRAC_PI_2);
                    if r.random_bool(0.5) {
                        -m
                    } else {
                        m
                    }
                };
                // keep clear of the class boundary so the functional label is unambiguous
                if (x.abs() - FRAC_PI_4).abs() > 1e-9 {
                    break x;
                }
            };
            LabeledState {
                rho: outer(&ry_plus(x)),
                label,
                meta: vec![x],
            }
        })
        .collect();
    Ok(Dataset {
        task: TaskKind::Bitflip1d,
        states,
    })
}

/// Label 0: Haar-random pure qubit states. Label 1: `½(1 + r·σ)` with `|r|`
/// uniform in `shell` and direction uniform.
pub fn gen_purity(n: usize, seed: u64, shell: [f64; 2]) -> Result<Dataset> {
    check_n(n)?;
    let [lo, hi] = shell;
    if !(0.0 <= lo && lo < hi && hi < 1.0) {
        return Err(Error::InvalidShell { lo, hi });
    }
    let mut r = rng(seed);
    let states = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                LabeledState {
                    rho: random_pure_density(2, &mut r),
                    label: 0.0,
                    meta: vec![1.0],
                }
            } else {
                let radius = r.random_range(lo..=hi);
                let [a, b, cc] = random_direction(&mut r);
                LabeledState {
                    rho: bloch_state([radius * a, radius * b, radius * cc]),
                    label: 1.0,
                    meta: vec![radius],
                }
            }
        })
        .collect();
    Ok(Dataset {
        task: TaskKind::Purity,
        states,
    })
}

/// `R_Y(x¹)|+⟩ ⊗ R_Y(x²)|+⟩` with `x ∈ [−π/2, π/2]²`; label 0 iff
/// `|sin x¹ + sin x²| ≤ 0.7`. Classes alternate by rejection sampling.
pub fn gen_swap2d(n: usize, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let mut r = rng(seed);
    let states = (0..n)
        .map(|i| {
            let want = (i % 2) as f64;
            loop {
                let x1 = r.random_range(-FRAC_PI_2..=FRAC_PI_2);
                let x2 = r.random_range(-FRAC_PI_2..=FRAC_PI_2);
                let s = (x1.sin() + x2.sin()).abs();
                if (s - SWAP2D_THRESHOLD).abs() < 1e-9 {
                    continue;
                }
                let label = if s <= SWAP2D_THRESHOLD { 0.0 } else { 1.0 };
                if label == want {
                    let psi = ry_plus(x1).kronecker(&ry_plus(x2));
                    break LabeledState {
                        rho: outer(&psi),
                        label,
                        meta: vec![x1, x2],
                    };
                }
            }
        })
        .collect();
    Ok(Dataset {
        task: TaskKind::Swap2d,
        states,
    })
}

/// `ρ_a ⊗ ρ_b` with Bloch vectors `r_b = r_a` (label 0) or `r_b = −r_a`
/// (label 1), `|r_a|` uniform in [`FERRO_RADII`].
pub fn gen_ferro(n: usize, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let mut r = rng(seed);
    let states = (0..n)
        .map(|i| {
            let label = (i % 2) as f64;
            let radius = r.random_range(FERRO_RADII[0]..=FERRO_RADII[1]);
            let d = random_direction(&mut r);
            let ra = d.map(|x| radius * x);
            let sign = if label == 0.0 { 1.0 } else { -1.0 };
            let rb = ra.map(|x| sign * x);
            LabeledState {
                rho: kron(&bloch_state(ra), &bloch_state(rb)),
                label,
                meta: ra.to_vec(),
            }
        })
        .collect();
    Ok(Dataset {
        task: TaskKind::Ferro,
        states,
    })
}

/// `ρ^{⊗k}`.
pub fn copies(rho: &ComplexMatrix, k: usize) -> ComplexMatrix {
    (1..k).fold(rho.clone(), |acc, _| kron(&acc, rho))
}

/// `h(ρ) = Tr[W ρ^{⊗k} W† M]`, read out as `a·h + b` and thresholded at ½.
#[derive(Clone, Debug)]
pub struct QmlModel {
    pub task: Option<TaskKind>,
    pub k: usize,
    /// Generators the circuit layers index into.
    pub generators: Vec<ComplexMatrix>,
    pub circuit: QnnCircuit,
    pub measurement: ComplexMatrix,
    pub readout: (f64, f64),
}

impl QmlModel {
    /// Default equivariant model for a task with `k` copies, `θ ~ U[−π, π]`.
    ///
    /// bitflip1d: `M = X`; purity: `M = (1 − SWAP)/2` (k = 2) or `M = 1` (k = 1);
    /// swap2d: `M = Z⊗Z`; ferro: `M = SWAP`.
    pub fn for_task(task: TaskKind, k: usize, seed: u64, tol: &Tolerance) -> Result<Self> {
        let allowed = match task {
            TaskKind::Purity => k == 1 || k == 2,
            _ => k == 1,
        };
        if !allowed {
            return Err(Error::InvalidParameter(format!("task {task} has no model with k = {k}")));
        }
        let lifted = tensor_power(&task.symmetry(), k)?;
        let gens = equivariant_generators(&lifted, tol);
        let dim = lifted.dim();
        let measurement = match (task, k) {
            (TaskKind::Bitflip1d, _) => pauli_x(),
            (TaskKind::Purity, 1) => identity(2),
            (TaskKind::Purity, _) => (identity(4) - swap(2)).scale(0.5),
            (TaskKind::Swap2d, _) => kron(&pauli_z(), &pauli_z()),
            (TaskKind::Ferro, _) => swap(2),
        };
        let depth = if task == TaskKind::Swap2d { 2 } else { 1 };
        let mut r = rng(seed);
        let traceless = gens.traceless().len();
        let layers = (0..depth * traceless)
            .map(|l| (1 + l % traceless, r.random_range(-PI..=PI)))
            .collect();
        Ok(QmlModel {
            task: Some(task),
            k,
            generators: gens.generators,
            circuit: QnnCircuit::new(layers, dim),
            measurement,
            readout: (1.0, 0.0),
        })
    }

    pub fn carrier_dim(&self) -> usize {
        self.circuit.dim
    }

    /// `Tr[W x W† M]` on the k-copy carrier, complex.
    pub fn evaluate_carrier(&self, x: &ComplexMatrix) -> Result<crate::numerics::Complex64> {
        let d = self.carrier_dim();
        if x.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("model acts on {d}×{d}, input {:?}", x.shape())));
        }
        let w = self.circuit.unitary(&self.generators)?;
        Ok((&w * x * w.adjoint() * &self.measurement).trace())
    }

    pub fn predict(&self, rho: &ComplexMatrix) -> Result<f64> {
        let (a, b) = self.readout;
        Ok(a * model_eval(self, rho)? + b)
    }

    pub fn classify(&self, rho: &ComplexMatrix) -> Result<f64> {
        Ok(if self.predict(rho)? >= 0.5 { 1.0 } else { 0.0 })
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        let mut hits = 0;
        for s in &data.states {
            if self.classify(&s.rho)? == s.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len().max(1) as f64)
    }
}

/// `Tr[W ρ^{⊗k} W† M]` (real part; the imaginary part vanishes for Hermitian `M`).
pub fn model_eval(model: &QmlModel, rho: &ComplexMatrix) -> Result<f64> {
    let single = (model.carrier_dim() as f64).powf(1.0 / model.k as f64).round() as usize;
    if rho.shape() != (single, single) {
        return Err(Error::DimensionMismatch(format!(
            "model expects {single}×{single} states, got {:?}",
            rho.shape()
        )));
    }
    Ok(model.evaluate_carrier(&copies(rho, model.k))?.re)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Mse,
    Bce,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Mini-batch size; 0 means full batch.
    pub batch: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 100,
            batch: 0,
            seed: 0,
            fd_step: 1e-4,
            loss: Loss::Mse,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.learning_rate) || !ok(self.fd_step) {
            return Err(Error::InvalidParameter("learning rate and step must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: QmlModel,
    pub history: Vec<EpochRecord>,
}

fn loss_value(kind: Loss, pred: &[f64], y: &[f64]) -> f64 {
    let n = pred.len().max(1) as f64;
    match kind {
        Loss::Mse => pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n,
        Loss::Bce => {
            pred.iter()
                .zip(y)
                .map(|(p, t)| {
                    let p = p.clamp(1e-7, 1.0 - 1e-7);
                    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
                })
                .sum::<f64>()
                / n
        }
    }
}

/// Least-squares affine map `h ↦ a·h + b` onto the labels.
fn calibrate(h: &[f64], y: &[f64]) -> (f64, f64) {
    let n = h.len().max(1) as f64;
    let mh = h.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let var: f64 = h.iter().map(|x| (x - mh).powi(2)).sum();
    if var < 1e-24 {
        return (0.0, my);
    }
    let cov: f64 = h.iter().zip(y).map(|(x, t)| (x - mh) * (t - my)).sum();
    let a = cov / var;
    (a, my - a * mh)
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            t[i] = theta[i] + h;
            let up = f(&t);
            t[i] = theta[i] - h;
            let down = f(&t);
            t[i] = theta[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Gradient descent on the circuit angles with central finite differences.
///
/// Each step first fits the affine readout by least squares (exact for the
/// current angles), then moves the angles along the finite-difference
/// gradient of the loss. The loss trace need not be monotone.
pub fn train(model: &QmlModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut model = model.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    if cfg.epochs == 0 || data.is_empty() {
        return Ok(TrainOutcome { model, history });
    }
    let inputs: Vec<ComplexMatrix> = data.states.iter().map(|s| copies(&s.rho, model.k)).collect();
    let labels = data.labels();
    let mut order = rng(cfg.seed);
    let raw = |m: &QmlModel, theta: &[f64], idx: &[usize]| -> Vec<f64> {
        let w = m.circuit.with_parameters(theta).unitary(&m.generators).expect("valid layout");
        let mw = w.adjoint() * &m.measurement * &w;
        idx.iter().map(|&i| (&inputs[i] * &mw).trace().re).collect()
    };
    let all: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        let batch: Vec<usize> = if cfg.batch == 0 || cfg.batch >= data.len() {
            all.clone()
        } else {
            rand::seq::index::sample(&mut order, data.len(), cfg.batch).into_vec()
        };
        let y: Vec<f64> = batch.iter().map(|&i| labels[i]).collect();
        let theta = model.circuit.parameters();
        let (a, b) = calibrate(&raw(&model, &theta, &batch), &y);
        let objective = |t: &[f64]| {
            let p: Vec<f64> = raw(&model, t, &batch).iter().map(|h| a * h + b).collect();
            loss_value(cfg.loss, &p, &y)
        };
        let grad = fd_gradient(objective, &theta, cfg.fd_step);
        let next: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - cfg.learning_rate * g).collect();
        model.circuit = model.circuit.with_parameters(&next);
        let h = raw(&model, &next, &all);
        model.readout = calibrate(&h, &labels);
        let (a, b) = model.readout;
        let pred: Vec<f64> = h.iter().map(|x| a * x + b).collect();
        let acc = pred
            .iter()
            .zip(&labels)
            .filter(|(p, t)| (if **p >= 0.5 { 1.0 } else { 0.0 }) == **t)
            .count() as f64
            / data.len() as f64;
        history.push(EpochRecord {
            epoch: epoch + 1,
            loss: loss_value(cfg.loss, &pred, &labels),
            train_accuracy: acc,
        });
    }
    Ok(TrainOutcome { model, history })
}

/// `max |f(ρ) − f(R ρ R†)|` over the dataset and `n` sampled group elements.
pub fn label_invariance_check_fn(
    f: impl Fn(&ComplexMatrix) -> Result<f64>,
    rep: &Representation,
    data: &Dataset,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let gs = rep.test_elements(n, seed);
    let mut worst = 0.0f64;
    for s in &data.states {
        if s.rho.nrows() != rep.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rep acts on {}, states are {}×{}",
                rep.dim(),
                s.rho.nrows(),
                s.rho.ncols()
            )));
        }
        let base = f(&s.rho)?;
        for g in &gs {
            worst = worst.max((base - f(&(g * &s.rho * g.adjoint()))?).abs());
        }
    }
    Ok(worst)
}

/// [`label_invariance_check_fn`] for a model; the single-copy action is
/// lifted to `k` copies implicitly because the model copies the input.
pub fn label_invariance_check(model: &QmlModel, rep: &Representation, data: &Dataset, n: usize, seed: u64) -> Result<f64> {
    label_invariance_check_fn(|rho| model_eval(model, rho), rep, data, n, seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub residual: crate::serial::Fixed,
    pub commutes: bool,
}

/// Whether `h` commutes with the action: residual over generator images
/// (finite) or algebra images (Lie).
pub fn symmetry_test(h: &ComplexMatrix, rep: &Representation, tol: &Tolerance) -> Result<SymmetryReport> {
    if h.shape() != (rep.dim(), rep.dim()) {
        return Err(Error::DimensionMismatch(format!("operator {:?} on carrier {}", h.shape(), rep.dim())));
    }
    let residual = rep
        .action_generators()
        .iter()
        .map(|m| commutator(h, m).norm())
        .fold(0.0, f64::max);
    Ok(SymmetryReport {
        residual: crate::serial::Fixed(residual),
        commutes: residual <= tol.threshold(h.norm()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Eigenspace {
    pub eigenvalue: crate::serial::Fixed,
    pub multiplicity: usize,
    /// `max_g ‖R Π R† − Π‖_F`.
    pub residual: crate::serial::Fixed,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenspaceReport {
    pub eigenspaces: Vec<Eigenspace>,
    pub all_invariant: bool,
    /// Whether every eigenvector of `h` is itself fixed by the action. Not implied by invariance.
    pub eigenvectors_fixed: bool,
}

/// Eigenspaces of a symmetric `h` are mapped to themselves; individual
/// eigenvectors need not be.
pub fn eigenspace_invariance_check(h: &ComplexMatrix, rep: &Representation, tol: &Tolerance) -> Result<EigenspaceReport> {
    let sym = symmetry_test(h, rep, tol)?;
    if !sym.commutes {
        return Err(Error::PrerequisiteFailed(format!(
            "operator does not commute with the action (residual {:e})",
            sym.residual.0
        )));
    }
    let e = herm_eig(h, tol)?;
    let scale = e.eigenvalues.iter().fold(1.0f64, |s, l| s.max(l.abs()));
    let gap = 1e-8 * scale;
    let mut gs: Vec<ComplexMatrix> = if rep.is_finite() {
        rep.action_generators().to_vec()
    } else {
        Vec::new()
    };
    gs.extend(rep.test_elements(20, 0));
    let limit = tol.threshold(h.nrows() as f64);
    let mut spaces = Vec::new();
    let mut start = 0;
    let n = e.eigenvalues.len();
    for k in 1..=n {
        if k == n || e.eigenvalues[k] - e.eigenvalues[k - 1] > gap {
            let v = e.eigenvectors.columns(start, k - start);
            let p = v * v.adjoint();
            let residual = gs.iter().map(|g| (g * &p * g.adjoint() - &p).norm()).fold(0.0, f64::max);
            spaces.push(Eigenspace {
                eigenvalue: crate::serial::Fixed(e.eigenvalues[start]),
                multiplicity: k - start,
                residual: crate::serial::Fixed(residual),
            });
            start = k;
        }
    }
    let fixed = (0..n).all(|j| {
        let v = e.eigenvectors.column(j);
        gs.iter().all(|g| (g * v - v).norm() <= limit)
    });
    Ok(EigenspaceReport {
        all_invariant: spaces.iter().all(|s| s.residual.0 <= limit),
        eigenspaces: spaces,
        eigenvectors_fixed: fixed,
    })
}

/// `Σ_j (X_j X_{j+1} + Y_j Y_{j+1} + Z_j Z_{j+1})`, open or periodic chain.
pub fn heisenberg_xxx(n: usize, periodic: bool) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter("heisenberg_xxx needs n ≥ 2".into()));
    }
    let dim = 1usize << n;
    let bonds = if periodic && n > 2 { n } else { n - 1 };
    let mut h = ComplexMatrix::zeros(dim, dim);
    for j in 0..bonds {
        let k = (j + 1) % n;
        for p in [pauli_x(), pauli_y(), pauli_z()] {
            h += embed(&p, j, n, 2) * embed(&p, k, n, 2);
        }
    }
    Ok(h)
}

/// Reduced state of qubit `site` of an `n`-qubit state.
pub fn single_qubit_marginal(rho: &ComplexMatrix, site: usize, n: usize) -> Result<ComplexMatrix> {
    partial_trace(rho, &vec![2; n], &[site])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::isotypic_decompose;
    use crate::numerics::is_density_matrix;
    use crate::random::{haar_unitary, random_density_matrix};
    use crate::representations::{translation_rep, trivial_rep};
    use crate::groups::make_cyclic;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn bitflip1d_examples() {
        let plus = outer(&ry_plus(0.0));
        assert!((plus.clone() - ComplexMatrix::from_element(2, 2, c(0.5, 0.0))).norm() < 1e-15);
        assert_eq!(TaskKind::Bitflip1d.label_of(&plus), 0.0);
        assert_eq!(TaskKind::Bitflip1d.label_of(&outer(&ry_plus(PI / 3.0))), 1.0);
        for x in [0.1, 0.5, 0.9, 1.3] {
            let a = TaskKind::Bitflip1d.label_of(&outer(&ry_plus(x)));
            let b = TaskKind::Bitflip1d.label_of(&outer(&ry_plus(-x)));
            assert_eq!(a, b);
        }
        let d = gen_bitflip1d(40, 1).unwrap();
        assert_eq!(d.labels().iter().filter(|&&y| y == 1.0).count(), 20);
        for s in &d.states {
            assert_eq!(TaskKind::Bitflip1d.label_of(&s.rho), s.label);
        }
    }

    #[test]
    fn purity_examples() {
        assert_eq!(TaskKind::Purity.label_of(&identity(2).scale(0.5)), 1.0);
        let d = gen_purity(60, 2, DEFAULT_SHELL).unwrap();
        let mut r = rng(3);
        for s in &d.states {
            assert!(is_density_matrix(&s.rho, 1e-10));
            if s.label == 0.0 {
                assert!(((&s.rho * &s.rho).trace().re - 1.0).abs() < 1e-12);
            }
            let u = haar_unitary(2, &mut r);
            let moved = &u * &s.rho * u.adjoint();
            assert_eq!(TaskKind::Purity.label_of(&moved), s.label);
            assert!(((&moved * &moved).trace() - (&s.rho * &s.rho).trace()).norm() < 1e-12);
        }
        assert!(matches!(gen_purity(4, 0, [0.5, 0.5]), Err(Error::InvalidShell { .. })));
        assert!(matches!(gen_purity(4, 0, [0.2, 1.0]), Err(Error::InvalidShell { .. })));
    }

    #[test]
    fn swap2d_and_ferro_examples() {
        for (x1, x2) in [(0.2, 1.3), (-1.0, 0.4), (1.5, 1.4)] {
            let a = outer(&ry_plus(x1).kronecker(&ry_plus(x2)));
            let b = outer(&ry_plus(x2).kronecker(&ry_plus(x1)));
            assert_eq!(TaskKind::Swap2d.label_of(&a), TaskKind::Swap2d.label_of(&b));
        }
        let mut r = rng(4);
        for _ in 0..10 {
            let rho = random_density_matrix(2, &mut r);
            assert_eq!(TaskKind::Ferro.label_of(&kron(&rho, &rho)), 0.0);
        }
        let rv = [0.3, -0.4, 0.5];
        let neg = rv.map(|x| -x);
        let anti = kron(&bloch_state(rv), &bloch_state(neg));
        assert_eq!(TaskKind::Ferro.label_of(&anti), 1.0);
        for (k, p) in [pauli_x(), pauli_y(), pauli_z()].iter().enumerate() {
            let v = (&anti * kron(p, p)).trace().re;
            assert!((v + rv[k] * rv[k]).abs() < 1e-12);
        }
        let d = gen_ferro(20, 5).unwrap();
        for s in &d.states {
            let ra = single_qubit_marginal(&s.rho, 0, 2).unwrap();
            let rb = single_qubit_marginal(&s.rho, 1, 2).unwrap();
            let z = pauli_z();
            let sign = if s.label == 0.0 { 1.0 } else { -1.0 };
            assert!(((&ra * &z).trace().re - sign * (&rb * &z).trace().re).abs() < 1e-12);
        }
    }

    #[test]
    fn datasets_respect_their_symmetry() {
        for task in TaskKind::ALL {
            let d = TaskSpec::new(task, 40, 6).generate().unwrap();
            assert_eq!(d.len(), 40);
            assert_eq!(d.symmetry_violations(50, 7), 0, "{task}");
            for s in &d.states {
                assert!(is_density_matrix(&s.rho, 1e-10));
                assert_eq!(task.label_of(&s.rho), s.label);
            }
            let back = Dataset::from_json(&d.to_json().unwrap()).unwrap();
            assert_eq!(back.states[3].rho, d.states[3].rho);
        }
    }

    #[test]
    fn purity_model_closed_form() {
        let m = QmlModel::for_task(TaskKind::Purity, 2, 0, &tol()).unwrap();
        let mut r = rng(8);
        for _ in 0..200 {
            let radius: f64 = r.random_range(0.0..=1.0);
            let v = random_direction(&mut r).map(|x| x * radius);
            let h = model_eval(&m, &bloch_state(v)).unwrap();
            assert!((h - 0.25 * (1.0 - radius * radius)).abs() < 1e-10);
        }
        assert!(model_eval(&m, &identity(2).scale(0.5)).unwrap() - 0.25 < 1e-12);
        assert!(model_eval(&m, &identity(4)).is_err());
    }

    #[test]
    fn single_copy_purity_model_is_constant() {
        let m = QmlModel::for_task(TaskKind::Purity, 1, 0, &tol()).unwrap();
        let d = gen_purity(30, 1, DEFAULT_SHELL).unwrap();
        for s in &d.states {
            assert!((model_eval(&m, &s.rho).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn outputs_are_real() {
        let mut r = rng(9);
        for task in TaskKind::ALL {
            let m = QmlModel::for_task(task, task.default_copies(), 3, &tol()).unwrap();
            let rho = random_density_matrix(1 << task.qubits(), &mut r);
            let z = m.evaluate_carrier(&copies(&rho, m.k)).unwrap();
            assert!(z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn training_purity_reaches_full_accuracy() {
        let d = gen_purity(40, 10, DEFAULT_SHELL).unwrap();
        let m = QmlModel::for_task(TaskKind::Purity, 2, 11, &tol()).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let same = train(&m, &d, &cfg).unwrap();
        assert!(same.history.is_empty());
        assert_eq!(same.model.circuit, m.circuit);
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let out = train(&m, &d, &cfg).unwrap();
        assert_eq!(out.history.len(), 5);
        assert_eq!(out.history.last().unwrap().train_accuracy, 1.0);
        assert_eq!(out.model.accuracy(&d).unwrap(), 1.0);
        let dev = label_invariance_check(&out.model, &TaskKind::Purity.symmetry(), &d, 20, 1).unwrap();
        assert!(dev < 1e-8);
    }

    #[test]
    fn trained_models_stay_symmetric() {
        for task in [TaskKind::Bitflip1d, TaskKind::Swap2d, TaskKind::Ferro] {
            let d = TaskSpec::new(task, 16, 12).generate().unwrap();
            let m = QmlModel::for_task(task, 1, 13, &tol()).unwrap();
            let out = train(&m, &d, &TrainConfig { epochs: 3, ..Default::default() }).unwrap();
            let dev = label_invariance_check(&out.model, &task.symmetry(), &d, 20, 2).unwrap();
            assert!(dev < 1e-8, "{task}: {dev:e}");
        }
        let d = TaskSpec::new(TaskKind::Ferro, 40, 1).generate().unwrap();
        let m = QmlModel::for_task(TaskKind::Ferro, 1, 2, &tol()).unwrap();
        let out = train(&m, &d, &TrainConfig { epochs: 2, ..Default::default() }).unwrap();
        assert_eq!(out.model.accuracy(&d).unwrap(), 1.0);
    }

    #[test]
    fn invariance_probes() {
        let d = gen_swap2d(20, 3).unwrap();
        let probe = |rho: &ComplexMatrix| Ok((rho * embed(&pauli_z(), 0, 2, 2)).trace().re);
        assert!(label_invariance_check_fn(probe, &swap_rep(), &d, 1, 0).unwrap() > 0.01);
        let triv = trivial_rep(make_cyclic(2).unwrap(), 4);
        assert_eq!(label_invariance_check_fn(probe, &triv, &d, 1, 0).unwrap(), 0.0);
        assert!(label_invariance_check_fn(probe, &su2_fundamental(), &d, 1, 0).is_err());
    }

    #[test]
    fn gradients_match_closed_form() {
        let mut r = rng(14);
        let rho = random_density_matrix(4, &mut r);
        let h = kron(&pauli_x(), &pauli_x());
        let m = embed(&pauli_z(), 0, 2, 2);
        let f = |t: &[f64]| {
            let u = exp_unitary(&h, t[0]).unwrap();
            (&u * &rho * u.adjoint() * &m).trace().re
        };
        for _ in 0..20 {
            let theta = r.random_range(-PI..PI);
            let u = exp_unitary(&h, theta).unwrap();
            let exact = (&u * &rho * u.adjoint() * commutator(&h, &m) * c(0.0, 1.0)).trace().re;
            let fd = fd_gradient(f, &[theta], 1e-4)[0];
            assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3));
        }
    }

    #[test]
    fn off_block_information_is_invisible() {
        let m = QmlModel::for_task(TaskKind::Purity, 2, 4, &tol()).unwrap();
        let lifted = tensor_power(&su2_fundamental(), 2).unwrap();
        let dec = isotypic_decompose(&lifted, 0, &tol()).unwrap();
        let mut r = rng(15);
        for _ in 0..10 {
            let x = copies(&random_density_matrix(2, &mut r), 2);
            let a = m.evaluate_carrier(&x).unwrap();
            let b = m.evaluate_carrier(&dec.block_diagonal_part(&x)).unwrap();
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn symmetry_tests() {
        let h3 = heisenberg_xxx(3, true).unwrap();
        let mag = tensor_power(&su2_fundamental(), 3).unwrap();
        assert!(symmetry_test(&h3, &mag, &tol()).unwrap().commutes);
        let h4 = heisenberg_xxx(4, true).unwrap();
        let tau = translation_rep(4).unwrap();
        assert!(symmetry_test(&h4, &tau, &tol()).unwrap().commutes);
        // transverse-field Ising ring, also translation invariant
        let mut tfim = ComplexMatrix::zeros(16, 16);
        for j in 0..4 {
            tfim += embed(&pauli_z(), j, 4, 2) * embed(&pauli_z(), (j + 1) % 4, 4, 2) + embed(&pauli_x(), j, 4, 2).scale(0.7);
        }
        assert!(symmetry_test(&tfim, &tau, &tol()).unwrap().commutes);
        let open = heisenberg_xxx(4, false).unwrap();
        assert!(!symmetry_test(&open, &tau, &tol()).unwrap().commutes);
        let z = symmetry_test(&pauli_z(), &bitflip_rep(1).unwrap(), &tol()).unwrap();
        assert!(!z.commutes);
        assert!((z.residual.0 - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn eigenspaces() {
        let bf = bitflip_rep(1).unwrap();
        let r = eigenspace_invariance_check(&identity(2), &bf, &tol()).unwrap();
        assert!(r.all_invariant);
        assert!(!r.eigenvectors_fixed);
        let triv = trivial_rep(make_cyclic(2).unwrap(), 2);
        let r = eigenspace_invariance_check(&pauli_z(), &triv, &tol()).unwrap();
        assert!(r.all_invariant && r.eigenvectors_fixed);
        let xxx = heisenberg_xxx(2, false).unwrap();
        let r = eigenspace_invariance_check(&xxx, &tensor_power(&su2_fundamental(), 2).unwrap(), &tol()).unwrap();
        assert_eq!(r.eigenspaces.len(), 2);
        assert_eq!((r.eigenspaces[0].multiplicity, r.eigenspaces[1].multiplicity), (1, 3));
        assert!((r.eigenspaces[0].eigenvalue.0 + 3.0).abs() < 1e-12);
        assert!(r.all_invariant);
        assert!(matches!(
            eigenspace_invariance_check(&pauli_z(), &bf, &tol()),
            Err(Error::PrerequisiteFailed(_))
        ));
    }
}
