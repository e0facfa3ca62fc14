//! Numerical representation theory for symmetric quantum machine learning.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense complex linear algebra (Kronecker products, Hermitian
//!   eigendecomposition, null spaces, partial traces, vectorisation).
//! - [`groups`]: finite groups as Cayley tables, small-group identification,
//!   and Lie algebras given by Hermitian generators.
//! - [`representations`]: concrete matrix representations of both flavours and
//!   the standard constructions (tensor powers, direct sums, duals, adjoint
//!   action, left regular representation).
//! - [`decomposition`]: commutants, isotypic block decomposition, intertwiners
//!   and the Schur-Weyl consistency check.
//! - [`twirl`]: group averages, commutant projections, channel twirls and the
//!   unitary k-design twirl.
//! - [`equivariant`]: equivariant generators, circuits and measurements.
//! - [`qml`]: the four toy classification tasks, model evaluation, training
//!   and symmetry detection.
//!
//! Conventions used throughout:
//!
//! - The Hilbert-Schmidt inner product is `Tr[A†B]` with no normalisation.
//! - Operators are vectorised row-major, so `vec(U A U†) = (U ⊗ conj(U)) vec(A)`.
//! - Qubit 1 is the leftmost (most significant) tensor factor.
//! - Lie algebra elements are Hermitian and exponentiate as `exp(-iθH)`.
//! - Permutations compose right to left: `(σ·τ)(i) = σ(τ(i))`.

pub mod decomposition;
pub mod equivariant;
mod error;
pub mod groups;
pub mod numerics;
pub mod qml;
pub mod random;
pub mod representations;
pub mod serial;
pub mod twirl;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, Tolerance};

/// Crate version, embedded in every machine-readable report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
