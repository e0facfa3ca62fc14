//! Seeded random matrices and states.
//!
//! All randomness in the crate flows through [`rng`], a ChaCha8 stream keyed by
//! a caller-supplied `u64`, so every result is reproducible from its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{c, exp_unitary, outer, ComplexMatrix, ComplexVector};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent seed for sub-stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries (variance 1 per entry).
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| c(s * normal(rng), s * normal(rng)))
}

/// Hermitian matrix from the Gaussian unitary ensemble.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random unitary `exp(−iH)` for a GUE `H`; not Haar, but cheap and generic.
pub fn random_unitary_via_exp<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let h = random_hermitian(d, rng);
    exp_unitary(&h, 1.0).expect("GUE sample is Hermitian")
}

pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexVector {
    let g = ginibre(d, 1, rng);
    let v: ComplexVector = g.column(0).into_owned();
    let n = v.norm();
    v.unscale(n)
}

/// Density matrix `G G† / Tr[G G†]` for a square Ginibre `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    let rho = &g * g.adjoint();
    let t = rho.trace().re;
    rho.unscale(t)
}

/// Uniformly distributed unit vector in ℝ³.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [normal(rng), normal(rng), normal(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Single-qubit state `½(1 + r·σ)`.
pub fn bloch_state(r: [f64; 3]) -> ComplexMatrix {
    use crate::numerics::{identity, pauli_x, pauli_y, pauli_z};
    (identity(2) + pauli_x().scale(r[0]) + pauli_y().scale(r[1]) + pauli_z().scale(r[2]))
        .scale(0.5)
}

/// Pure-state projector for a Haar-random vector.
pub fn random_pure_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    outer(&random_pure_state(d, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{is_density_matrix, unitary_residual};

    #[test]
    fn samplers_are_deterministic_and_valid() {
        let a = haar_unitary(4, &mut rng(11));
        let b = haar_unitary(4, &mut rng(11));
        assert_eq!(a, b);
        assert!(unitary_residual(&a) < 1e-12);
        let rho = random_density_matrix(3, &mut rng(2));
        assert!(is_density_matrix(&rho, 1e-12));
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }
}
