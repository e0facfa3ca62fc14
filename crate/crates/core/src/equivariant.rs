//! Equivariant QNN building blocks: commutant generators, layered circuits and
//! measurement operators.

use serde::Serialize;

use crate::decomposition::commutant_basis;
use crate::numerics::{
    c, commutator, embed, exp_unitary, identity, kron, pauli_x, pauli_y, pauli_z, reduce_against, zeros,
    ComplexMatrix, Tolerance, I,
};
use crate::representations::Representation;
use crate::{Error, Result};

/// HS-orthonormal Hermitian basis of the commutant, identity direction first.
#[derive(Clone, Debug)]
pub struct EquivariantGeneratorSet {
    pub rep: Representation,
    pub generators: Vec<ComplexMatrix>,
    pub includes_identity: bool,
}

impl EquivariantGeneratorSet {
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn carrier_dim(&self) -> usize {
        self.rep.dim()
    }

    /// Generators orthogonal to the identity, hence traceless.
    pub fn traceless(&self) -> &[ComplexMatrix] {
        if self.includes_identity {
            &self.generators[1..]
        } else {
            &self.generators
        }
    }

    /// `Σ_i H_i Tr[H_i o]`.
    pub fn project(&self, o: &ComplexMatrix) -> ComplexMatrix {
        let mut out = zeros(o.nrows(), o.ncols());
        for h in &self.generators {
            let coeff: crate::numerics::Complex64 = h.iter().zip(o.iter()).map(|(x, y)| x.conj() * y).sum();
            out += h * coeff;
        }
        out
    }

    /// `‖o − P(o)‖_F`, zero iff `o` lies in the complex span.
    pub fn span_residual(&self, o: &ComplexMatrix) -> f64 {
        (o - self.project(o)).norm()
    }

    /// Largest `‖[H_l, M]‖_F` over generators and the rep's action generators.
    pub fn commutation_residual(&self) -> f64 {
        let act = self.rep.action_generators();
        self.generators
            .iter()
            .flat_map(|h| act.iter().map(move |m| commutator(h, m).norm()))
            .fold(0.0, f64::max)
    }

    /// Largest distance of `i[H_a, H_b]` from the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.dim() {
            for b in a + 1..self.dim() {
                let x = commutator(&self.generators[a], &self.generators[b]) * I;
                worst = worst.max(self.span_residual(&x));
            }
        }
        worst
    }

    pub fn report(&self) -> GeneratorReport {
        GeneratorReport {
            dim: self.dim(),
            includes_identity: self.includes_identity,
            commutation_residual: crate::serial::Fixed(self.commutation_residual()),
            closure_residual: crate::serial::Fixed(self.closure_residual()),
            generators: self.generators.iter().cloned().map(crate::serial::MatrixJson).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorReport {
    pub dim: usize,
    pub includes_identity: bool,
    pub commutation_residual: crate::serial::Fixed,
    pub closure_residual: crate::serial::Fixed,
    pub generators: Vec<crate::serial::MatrixJson>,
}

/// The commutant as generators, with `1/√d` isolated as the first element.
pub fn equivariant_generators(rep: &Representation, tol: &Tolerance) -> EquivariantGeneratorSet {
    let d = rep.dim();
    let cb = commutant_basis(rep, tol);
    let mut gens = vec![identity(d).unscale((d as f64).sqrt())];
    for b in &cb.basis {
        if gens.len() == cb.dim() {
            break;
        }
        if let Some(h) = reduce_against(&gens, b, 1e-6) {
            gens.push(h);
        }
    }
    EquivariantGeneratorSet {
        rep: rep.clone(),
        generators: gens,
        includes_identity: true,
    }
}

/// `{X⊗1+1⊗X, Y⊗1+1⊗Y, Z⊗1+1⊗Z, X⊗X, Y⊗Y, Z⊗Z}`: SWAP-symmetric two-qubit generators.
pub fn paper_swap_six() -> Vec<ComplexMatrix> {
    let ps = [pauli_x(), pauli_y(), pauli_z()];
    let mut out: Vec<ComplexMatrix> = ps.iter().map(|p| embed(p, 0, 2, 2) + embed(p, 1, 2, 2)).collect();
    out.extend(ps.iter().map(|p| kron(p, p)));
    out
}

/// A layered circuit `W(θ) = U_L ⋯ U_1`, `U_l = e^{−iθ_l H_{k_l}}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QnnCircuit {
    pub layers: Vec<(usize, f64)>,
    pub dim: usize,
}

impl QnnCircuit {
    pub fn new(layers: Vec<(usize, f64)>, dim: usize) -> Self {
        QnnCircuit { layers, dim }
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.1).collect()
    }

    pub fn with_parameters(&self, theta: &[f64]) -> Self {
        let layers = self.layers.iter().zip(theta).map(|(&(k, _), &t)| (k, t)).collect();
        QnnCircuit { layers, dim: self.dim }
    }

    pub fn unitary(&self, gens: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        layered_unitary(gens, &self.layers, self.dim)
    }
}

fn layered_unitary(gens: &[ComplexMatrix], layout: &[(usize, f64)], dim: usize) -> Result<ComplexMatrix> {
    let mut w = identity(dim);
    for &(k, theta) in layout {
        let h = gens.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: gens.len(),
        })?;
        if h.nrows() != dim {
            return Err(Error::DimensionMismatch(format!("generator {k} is {}×{}, carrier {dim}", h.nrows(), h.ncols())));
        }
        // later layers act after earlier ones
        w = exp_unitary(h, theta)? * w;
    }
    Ok(w)
}

/// Ordered product of `e^{−iθ_l H_l}`; the first entry of `layout` acts first.
pub fn build_qnn(gens: &EquivariantGeneratorSet, layout: &[(usize, f64)]) -> Result<ComplexMatrix> {
    layered_unitary(&gens.generators, layout, gens.carrier_dim())
}

/// `M = Σ_i c_i B_i` over a Hermitian commutant basis.
#[derive(Clone, Debug)]
pub struct EquivariantMeasurement {
    pub m: ComplexMatrix,
    pub coefficients: Vec<f64>,
}

impl EquivariantMeasurement {
    pub fn residual(&self, rep: &Representation) -> f64 {
        rep.action_generators()
            .iter()
            .map(|r| commutator(&self.m, r).norm())
            .fold(0.0, f64::max)
    }
}

pub fn equivariant_measurement(basis: &[ComplexMatrix], coefficients: &[f64]) -> Result<EquivariantMeasurement> {
    if basis.len() != coefficients.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a basis of {}",
            coefficients.len(),
            basis.len()
        )));
    }
    let d = basis.first().map_or(0, |b| b.nrows());
    let m = basis
        .iter()
        .zip(coefficients)
        .fold(zeros(d, d), |acc, (b, &x)| acc + b.scale(x));
    Ok(EquivariantMeasurement {
        m,
        coefficients: coefficients.to_vec(),
    })
}

/// Largest `‖[w, R]‖_F`. Finite: over the generator images. Lie: over the
/// algebra images (which suffices on the connected group), plus `n_samples`
/// sampled group elements as a smoke test.
pub fn check_equivariance(w: &ComplexMatrix, rep: &Representation, n_samples: usize, seed: u64) -> Result<f64> {
    let d = rep.dim();
    if w.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("operator is {}×{}, carrier {d}", w.nrows(), w.ncols())));
    }
    let mut worst = rep
        .action_generators()
        .iter()
        .map(|r| commutator(w, r).norm())
        .fold(0.0, f64::max);
    if !rep.is_finite() {
        for k in 0..n_samples {
            let g = rep.sample_element(crate::random::derive_seed(seed, k as u64), 2 * d + 4);
            worst = worst.max(commutator(w, &g).norm());
        }
    }
    Ok(worst)
}

/// CNOT with the first qubit as control.
pub fn cnot() -> ComplexMatrix {
    let o = c(1.0, 0.0);
    let z = c(0.0, 0.0);
    crate::numerics::from_rows(4, 4, &[o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z])
}
