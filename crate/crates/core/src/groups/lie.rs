use nalgebra::DMatrix;
use rand::Rng;

use crate::numerics::{
    c, commutator, exp_unitary, hermitian_residual, identity, pauli_x, pauli_y, pauli_z, reduce_against,
    ComplexMatrix, Tolerance, I,
};
use crate::random::rng;
use crate::{Error, Result};

/// Real Lie algebra spanned by Hermitian generators `H_a`, with group
/// elements `exp(−iθH)`. Brackets expand as `[H_a, H_b] = i Σ_c f_abc H_c`.
#[derive(Clone, Debug)]
pub struct LieAlgebraBasis {
    generators: Vec<ComplexMatrix>,
    structure: Vec<f64>,
    closure_residual: f64,
}

impl PartialEq for LieAlgebraBasis {
    fn eq(&self, other: &Self) -> bool {
        self.generators.len() == other.generators.len()
            && self
                .generators
                .iter()
                .zip(&other.generators)
                .all(|(a, b)| a.shape() == b.shape() && (a - b).norm() <= 1e-12)
    }
}

impl LieAlgebraBasis {
    /// Wraps a linearly independent Hermitian set that is closed under brackets.
    pub fn new(generators: Vec<ComplexMatrix>, tol: &Tolerance) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::InvalidParameter("Lie algebra needs at least one generator".into()));
        };
        let d = first.nrows();
        for g in &generators {
            if g.shape() != (d, d) {
                return Err(Error::DimensionMismatch("generators must share a square shape".into()));
            }
            let r = hermitian_residual(g);
            if r > tol.threshold(g.norm()) {
                return Err(Error::NotHermitian { residual: r });
            }
        }
        let k = generators.len();
        let gram = DMatrix::<f64>::from_fn(k, k, |a, b| real_inner(&generators[a], &generators[b]));
        let eig = gram.clone().symmetric_eigen();
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
        if lo <= 1e-12 * hi {
            return Err(Error::InvalidParameter("generators are linearly dependent".into()));
        }
        let chol = gram.cholesky().expect("Gram matrix is positive definite");
        let mut structure = vec![0.0; k * k * k];
        let mut closure_residual = 0.0f64;
        for a in 0..k {
            for b in 0..k {
                let br = commutator(&generators[a], &generators[b]) * (-I);
                let rhs = nalgebra::DVector::from_fn(k, |cc, _| real_inner(&generators[cc], &br));
                let f = chol.solve(&rhs);
                let mut recon = ComplexMatrix::zeros(d, d);
                for cc in 0..k {
                    structure[(a * k + b) * k + cc] = f[cc];
                    recon += generators[cc].scale(f[cc]);
                }
                closure_residual = closure_residual.max((recon - &br).norm());
            }
        }
        let scale = generators.iter().map(|g| g.norm_squared()).fold(0.0, f64::max);
        if closure_residual > tol.threshold(scale) {
            return Err(Error::NotClosed {
                residual: closure_residual,
            });
        }
        Ok(LieAlgebraBasis {
            generators,
            structure,
            closure_residual,
        })
    }

    pub fn generators(&self) -> &[ComplexMatrix] {
        &self.generators
    }

    /// Dimension of the algebra.
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    /// Size of the defining matrices.
    pub fn carrier_dim(&self) -> usize {
        self.generators[0].nrows()
    }

    /// `f_abc` in `[H_a, H_b] = i Σ_c f_abc H_c`.
    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> f64 {
        let k = self.dim();
        self.structure[(a * k + b) * k + c]
    }

    /// `[f_ab1, …, f_abk]`.
    pub fn bracket_coefficients(&self, a: usize, b: usize) -> &[f64] {
        let k = self.dim();
        &self.structure[(a * k + b) * k..(a * k + b + 1) * k]
    }

    /// Largest `‖−i[H_a,H_b] − Σ_c f_abc H_c‖_F` over generator pairs.
    pub fn closure_residual(&self) -> f64 {
        self.closure_residual
    }

    /// Random path `[(k_j, θ_j)]` with `k_j` uniform over the basis and `θ_j`
    /// uniform in `[0, 2π)`, deterministic in `seed`.
    pub fn sample_path(&self, seed: u64, depth: usize) -> Vec<(usize, f64)> {
        let mut r = rng(seed);
        (0..depth)
            .map(|_| {
                let k = r.random_range(0..self.dim());
                let theta = r.random::<f64>() * std::f64::consts::TAU;
                (k, theta)
            })
            .collect()
    }
}

fn real_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `∏_j exp(−iθ_j images[k_j])`, leftmost factor first in `path`.
pub fn product_of_exponentials(images: &[ComplexMatrix], path: &[(usize, f64)]) -> ComplexMatrix {
    let d = images.first().map_or(1, |m| m.nrows());
    path.iter().fold(identity(d), |acc, &(k, theta)| {
        acc * exp_unitary(&images[k], theta).expect("Lie images are Hermitian")
    })
}

/// `∏_{j=1..depth} exp(−iθ_j H_{k_j})` with random `k_j`, `θ_j` drawn from `seed`.
pub fn sample_lie_group_element(alg: &LieAlgebraBasis, seed: u64, depth: usize) -> ComplexMatrix {
    product_of_exponentials(alg.generators(), &alg.sample_path(seed, depth.max(1)))
}

/// Smallest real Lie algebra containing the Hermitian seeds, as an
/// orthonormal (`Tr[A†B] = δ`) Hermitian basis.
///
/// Repeatedly adds `i[A, B]` for basis pairs until no new direction appears.
pub fn lie_closure(seed: &[ComplexMatrix], tol: &Tolerance) -> Result<LieAlgebraBasis> {
    let Some(first) = seed.first() else {
        return Err(Error::InvalidParameter("lie_closure needs at least one seed".into()));
    };
    let d = first.nrows();
    for s in seed {
        if s.shape() != (d, d) {
            return Err(Error::DimensionMismatch("seeds must share a square shape".into()));
        }
        let r = hermitian_residual(s);
        if r > tol.threshold(s.norm()) {
            return Err(Error::NotHermitian { residual: r });
        }
    }
    let drop = tol.threshold(1.0);
    let mut basis: Vec<ComplexMatrix> = Vec::new();
    for s in seed {
        let n = s.norm();
        if n > tol.absolute {
            if let Some(b) = reduce_against(&basis, &s.unscale(n), drop) {
                basis.push(b);
            }
        }
    }
    if basis.is_empty() {
        return Err(Error::InvalidParameter("all seeds vanish".into()));
    }
    let mut pairs: Vec<(usize, usize)> = (0..basis.len())
        .flat_map(|j| (0..j).map(move |i| (i, j)))
        .collect();
    while let Some((i, j)) = pairs.pop() {
        let br = commutator(&basis[i], &basis[j]) * c(0.0, 1.0);
        let n = br.norm();
        if n <= drop {
            continue;
        }
        if let Some(b) = reduce_against(&basis, &br.unscale(n), drop) {
            let k = basis.len();
            basis.push(b);
            pairs.extend((0..k).map(|i| (i, k)));
        }
    }
    LieAlgebraBasis::new(basis, tol)
}

/// `{X/2, Y/2, Z/2}`, the spin-½ basis of su(2).
pub fn su2_basis() -> LieAlgebraBasis {
    LieAlgebraBasis::new(
        vec![pauli_x().scale(0.5), pauli_y().scale(0.5), pauli_z().scale(0.5)],
        &Tolerance::default(),
    )
    .expect("su(2) is closed")
}

/// Orthonormal Hermitian basis of u(d): the `d` diagonal matrix units, then
/// for each `j < k` the symmetric and antisymmetric off-diagonal pairs.
pub fn u_basis(d: usize) -> Result<LieAlgebraBasis> {
    if d == 0 {
        return Err(Error::InvalidParameter("u(d) needs d ≥ 1".into()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut gens = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut e = ComplexMatrix::zeros(d, d);
        e[(j, j)] = c(1.0, 0.0);
        gens.push(e);
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut sym = ComplexMatrix::zeros(d, d);
            sym[(j, k)] = c(s, 0.0);
            sym[(k, j)] = c(s, 0.0);
            gens.push(sym);
            let mut anti = ComplexMatrix::zeros(d, d);
            anti[(j, k)] = c(0.0, -s);
            anti[(k, j)] = c(0.0, s);
            gens.push(anti);
        }
    }
    LieAlgebraBasis::new(gens, &Tolerance::default())
}
