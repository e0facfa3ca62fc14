//! Commutants, isotypic decomposition, intertwiners and the Schur-Weyl check.
//!
//! Everything works from the generators of an action (`R(s)` for finite
//! groups, `r(X)` for Lie algebras): an operator commuting with those commutes
//! with every representative, since the representatives are products of
//! generator images (finite) or exponentials of their real span (Lie).

use std::ops::Range;

use serde::Serialize;

use crate::groups::u_basis;
use crate::numerics::{
    c, column_space, commutator, herm_eig, hermitian_part, identity, null_space, projector_distance, unitary_residual,
    vectorize, zeros, ComplexMatrix, Tolerance, I,
};
use crate::random::{derive_seed, haar_unitary, normal, rng};
use crate::representations::{
    defining_rep, perm_rep, permutation_operator, tensor_power, RepOnOperators, Representation,
};
use crate::serial::{Fixed, MatrixJson};
use crate::groups::permutations_lex;
use crate::{Error, Result};

/// Redraw budget for [`isotypic_decompose`].
pub const MAX_ATTEMPTS: usize = 8;

/// Largest carrier accepted by [`schur_weyl_check`].
pub const MAX_SCHUR_WEYL_DIM: usize = 64;

const SPLIT_SEED: u64 = 0x5EED_C0DE;

/// Orthonormal Hermitian basis of a commutant.
#[derive(Clone, Debug)]
pub struct CommutantBasis {
    pub basis: Vec<ComplexMatrix>,
    pub carrier_dim: usize,
}

impl CommutantBasis {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonal projection `Σ_i B_i Tr[B_i† o]`.
    pub fn project(&self, o: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.carrier_dim;
        if o.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("operator is {:?}, carrier is {d}", o.shape())));
        }
        let mut out = zeros(d, d);
        for b in &self.basis {
            let coeff: crate::numerics::Complex64 = b.iter().zip(o.iter()).map(|(x, y)| x.conj() * y).sum();
            out += b * coeff;
        }
        Ok(out)
    }

    /// `max_{i,j} |Tr[B_i† B_j] − δ_ij|`.
    pub fn gram_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let g: crate::numerics::Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - c(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest `‖[B_i, M]‖_F` over the basis and the given matrices.
    pub fn commutator_residual(&self, against: &[ComplexMatrix]) -> f64 {
        self.basis
            .iter()
            .flat_map(|b| against.iter().map(move |m| commutator(b, m).norm()))
            .fold(0.0, f64::max)
    }

    /// Basis elements vectorised as the columns of one matrix.
    pub fn as_columns(&self) -> ComplexMatrix {
        let d2 = self.carrier_dim * self.carrier_dim;
        let mut m = zeros(d2, self.dim());
        for (j, b) in self.basis.iter().enumerate() {
            m.set_column(j, &vectorize(b));
        }
        m
    }
}

/// Commutant of a representation.
pub fn commutant_basis(rep: &Representation, tol: &Tolerance) -> CommutantBasis {
    commutant_of(rep.action_generators(), rep.dim(), tol)
}

/// Operators fixed by an adjoint action, i.e. the commutant of its base.
pub fn invariant_operators(ad: &RepOnOperators, tol: &Tolerance) -> CommutantBasis {
    commutant_basis(&ad.base, tol)
}

fn clusters(values: &[f64], gap: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > gap {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// `{B : [B, M] = 0 for all M in gens}` as an orthonormal Hermitian basis.
///
/// A random Hermitian element `A` of the algebra generated by `gens` is
/// diagonalised first. Every commutant element is block diagonal in the
/// eigenbasis of `A`, so the remaining equations are solved only over those
/// blocks. Eigenvalues are merged generously; merging distinct eigenvalues
/// only enlarges the search space and never loses a solution.
pub fn commutant_of(gens: &[ComplexMatrix], dim: usize, tol: &Tolerance) -> CommutantBasis {
    let mut r = rng(SPLIT_SEED);
    let mut a = zeros(dim, dim);
    for m in gens {
        let (w1, w2) = (normal(&mut r), normal(&mut r));
        a += (m + m.adjoint()).scale(w1) + (m - m.adjoint()) * c(0.0, w2);
    }
    let eig = herm_eig(&a, &Tolerance::new(1e-8, 1e-8).expect("valid")).expect("A is Hermitian by construction");
    let scale = eig.eigenvalues.iter().fold(1.0f64, |s, l| s.max(l.abs()));
    let blocks = clusters(&eig.eigenvalues, 1e-6 * scale);
    let v = &eig.eigenvectors;
    let rotated: Vec<ComplexMatrix> = gens.iter().map(|m| v.adjoint() * m * v).collect();

    // Parameter offsets: block b owns n_b² entries of X, row-major.
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut p = 0;
    for b in &blocks {
        offsets.push(p);
        p += b.len() * b.len();
    }
    let mut gram = zeros(p, p);
    let mut touched = vec![false; p];
    for m in &rotated {
        for (i, bi) in blocks.iter().enumerate() {
            for (j, bj) in blocks.iter().enumerate() {
                let mij = m.view((bi.start, bj.start), (bi.len(), bj.len())).into_owned();
                if mij.norm() <= 1e-14 * (1.0 + m.norm()) {
                    continue;
                }
                let (ni, nj) = (bi.len(), bj.len());
                // vec(X_i M_ij − M_ij X_j) = (1 ⊗ M_ijᵀ) vec X_i − (M_ij ⊗ 1) vec X_j
                let left = identity(ni).kronecker(&mij.transpose());
                let right = mij.kronecker(&identity(nj));
                let (oi, oj) = (offsets[i], offsets[j]);
                let acc = |gram: &mut ComplexMatrix, touched: &mut [bool], l: &ComplexMatrix, ol: usize, r: &ComplexMatrix, or: usize| {
                    let block = l.adjoint() * r;
                    let mut view = gram.view_mut((ol, or), (block.nrows(), block.ncols()));
                    view += block;
                    for k in 0..l.ncols() {
                        touched[ol + k] = true;
                    }
                };
                if i == j {
                    let l = left - right;
                    acc(&mut gram, &mut touched, &l, oi, &l, oi);
                } else {
                    let neg = -right;
                    acc(&mut gram, &mut touched, &left, oi, &left, oi);
                    acc(&mut gram, &mut touched, &neg, oj, &neg, oj);
                    acc(&mut gram, &mut touched, &left, oi, &neg, oj);
                    acc(&mut gram, &mut touched, &neg, oj, &left, oi);
                }
            }
        }
    }

    // Untouched parameters are free; the rest go through an eigen solve.
    let free: Vec<usize> = (0..p).filter(|&k| !touched[k]).collect();
    let bound: Vec<usize> = (0..p).filter(|&k| touched[k]).collect();
    let mut kernel: Vec<Vec<(usize, crate::numerics::Complex64)>> =
        free.iter().map(|&k| vec![(k, c(1.0, 0.0))]).collect();
    if !bound.is_empty() {
        let sub = ComplexMatrix::from_fn(bound.len(), bound.len(), |x, y| gram[(bound[x], bound[y])]);
        let sub = hermitian_part(&sub);
        let e = herm_eig(&sub, &Tolerance::default()).expect("Gram matrix is Hermitian");
        let lmax = e.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
        // λ(Gram) = σ², so the relative cutoff applies to λ directly; this is
        // looser than the SVD rule but well above rounding in the Gram product.
        let cutoff = (tol.absolute * tol.absolute).max(tol.relative * lmax);
        for (k, &l) in e.eigenvalues.iter().enumerate() {
            if l <= cutoff {
                kernel.push(
                    (0..bound.len())
                        .map(|x| (bound[x], e.eigenvectors[(x, k)]))
                        .filter(|(_, z)| z.norm() > 0.0)
                        .collect(),
                );
            }
        }
    }

    // Rebuild X in the eigenbasis of A, Hermitise, orthonormalise, rotate back.
    let mut param_pos = vec![(0usize, 0usize); p];
    for (b, blk) in blocks.iter().enumerate() {
        let n = blk.len();
        for x in 0..n {
            for y in 0..n {
                param_pos[offsets[b] + x * n + y] = (blk.start + x, blk.start + y);
            }
        }
    }
    let mut candidates = Vec::with_capacity(2 * kernel.len());
    for vec in &kernel {
        let mut x = zeros(dim, dim);
        for &(k, z) in vec {
            x[param_pos[k]] += z;
        }
        candidates.push(hermitian_part(&x));
        candidates.push((&x - x.adjoint()) * c(0.0, -0.5));
    }
    let target = kernel.len();
    let mut herm: Vec<ComplexMatrix> = Vec::with_capacity(target);
    for cand in &candidates {
        if herm.len() == target {
            break;
        }
        if let Some(b) = crate::numerics::reduce_against(&herm, cand, 1e-6) {
            herm.push(b);
        }
    }
    let basis = herm.iter().map(|x| v * x * v.adjoint()).map(|b| hermitian_part(&b)).collect();
    CommutantBasis { basis, carrier_dim: dim }
}

/// True iff the commutant is one-dimensional.
pub fn is_irreducible(rep: &Representation, tol: &Tolerance) -> bool {
    commutant_basis(rep, tol).dim() == 1
}

/// Outcome of [`find_intertwiner`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ZeroOnly,
    Equivalent,
    Partial,
}

#[derive(Clone, Debug)]
pub struct Intertwiner {
    /// `dim S × dim R`, with `φ R(g) = S(g) φ`.
    pub phi: ComplexMatrix,
    pub verdict: Verdict,
    /// Dimension of the space of intertwiners.
    pub space_dim: usize,
    /// Largest `‖φ R(s) − S(s) φ‖_F` over the action generators.
    pub residual: f64,
}

/// All `φ` (`ds × dr`) with `φ R_a = S_a φ` for paired generator matrices.
pub fn intertwiner_space(
    r_gens: &[ComplexMatrix],
    s_gens: &[ComplexMatrix],
    dr: usize,
    ds: usize,
    tol: &Tolerance,
) -> Vec<ComplexMatrix> {
    let unknowns = dr * ds;
    let mut stacked = zeros(r_gens.len() * unknowns, unknowns);
    for (k, (ra, sa)) in r_gens.iter().zip(s_gens).enumerate() {
        // vec(φR) = (1 ⊗ Rᵀ) vec φ,  vec(Sφ) = (S ⊗ 1) vec φ
        let block = identity(ds).kronecker(&ra.transpose()) - sa.kronecker(&identity(dr));
        stacked.view_mut((k * unknowns, 0), (unknowns, unknowns)).copy_from(&block);
    }
    let ns = null_space(&stacked, tol);
    (0..ns.ncols())
        .map(|j| ComplexMatrix::from_fn(ds, dr, |a, b| ns[(a * dr + b, j)]))
        .collect()
}

/// Solves `φ ∘ R = S ∘ φ` and classifies the solution space.
///
/// The verdict is "zero-only" when only `φ = 0` solves it, "equivalent" when a
/// generic solution is square and invertible (smallest singular value above
/// tolerance), and "partial" otherwise.
pub fn find_intertwiner(r: &Representation, s: &Representation, tol: &Tolerance) -> Result<Intertwiner> {
    if r.is_finite() != s.is_finite() || **r.source() != **s.source() {
        return Err(Error::SourceMismatch);
    }
    let (dr, ds) = (r.dim(), s.dim());
    let space = intertwiner_space(r.action_generators(), s.action_generators(), dr, ds, tol);
    if space.is_empty() {
        return Ok(Intertwiner {
            phi: zeros(ds, dr),
            verdict: Verdict::ZeroOnly,
            space_dim: 0,
            residual: 0.0,
        });
    }
    let mut g = rng(SPLIT_SEED);
    let mut phi = zeros(ds, dr);
    for m in &space {
        phi += m * c(normal(&mut g), normal(&mut g));
    }
    let n = phi.norm();
    phi.unscale_mut(n);
    let verdict = if dr == ds {
        let sv = phi.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin > tol.threshold(smax) {
            Verdict::Equivalent
        } else {
            Verdict::Partial
        }
    } else {
        Verdict::Partial
    };
    let residual = r
        .action_generators()
        .iter()
        .zip(s.action_generators())
        .map(|(ra, sa)| (&phi * ra - sa * &phi).norm())
        .fold(0.0, f64::max);
    Ok(Intertwiner {
        phi,
        verdict,
        space_dim: space.len(),
        residual,
    })
}

/// Residuals certified by [`isotypic_decompose`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct DecompositionResiduals {
    pub unitarity: f64,
    /// Largest entry norm outside the per-copy diagonal blocks.
    pub off_block: f64,
    /// Largest difference between a copy and the reference copy of its class.
    pub alignment: f64,
    pub commutant_dim: usize,
    pub attempts: usize,
}

/// `q† R(g) q = ⊕_k 1_{m_k} ⊗ U_k(g)`.
#[derive(Clone, Debug)]
pub struct IsotypicDecomposition {
    /// Columns are grouped by isotypic block, then by copy, then by irrep basis vector.
    pub q: ComplexMatrix,
    /// `(d_k, m_k)`: irrep dimension and multiplicity.
    pub blocks: Vec<(usize, usize)>,
    pub block_offsets: Vec<Range<usize>>,
    pub residuals: DecompositionResiduals,
    /// Seed of the draw that certified.
    pub seed: u64,
}

impl IsotypicDecomposition {
    /// Columns of `q` spanning copy `a` of block `k`.
    pub fn copy_basis(&self, k: usize, a: usize) -> ComplexMatrix {
        let (d, _) = self.blocks[k];
        let start = self.block_offsets[k].start + a * d;
        self.q.columns(start, d).into_owned()
    }

    /// Orthogonal projector onto isotypic block `k`.
    pub fn isotypic_projector(&self, k: usize) -> ComplexMatrix {
        let r = &self.block_offsets[k];
        let qk = self.q.columns(r.start, r.len());
        qk * qk.adjoint()
    }

    /// Hermitian commutant basis adapted to the blocks: per block, the copy
    /// projectors `Q_a Q_a†`, then `Q_a Q_b† + h.c.` and `i(Q_a Q_b† − h.c.)`
    /// for `a < b`. With multiplicity one these are the isotypic projectors.
    pub fn commutant_block_basis(&self) -> Vec<ComplexMatrix> {
        let mut out = Vec::new();
        for (k, &(_, m)) in self.blocks.iter().enumerate() {
            let copies: Vec<ComplexMatrix> = (0..m).map(|a| self.copy_basis(k, a)).collect();
            for qa in &copies {
                out.push(qa * qa.adjoint());
            }
            for a in 0..m {
                for b in a + 1..m {
                    let x = &copies[a] * copies[b].adjoint();
                    out.push(&x + x.adjoint());
                    out.push((&x - x.adjoint()) * I);
                }
            }
        }
        out
    }

    /// `Σ_k Π_k x Π_k` over the isotypic projectors.
    pub fn block_diagonal_part(&self, x: &ComplexMatrix) -> ComplexMatrix {
        (0..self.blocks.len())
            .map(|k| {
                let p = self.isotypic_projector(k);
                &p * x * &p
            })
            .fold(zeros(x.nrows(), x.ncols()), |acc, y| acc + y)
    }

    /// Blocks sorted by `(d_k, m_k)`, for order-insensitive comparison.
    pub fn sorted_blocks(&self) -> Vec<(usize, usize)> {
        let mut b = self.blocks.clone();
        b.sort_unstable();
        b
    }

    pub fn report(&self) -> DecompositionReport {
        DecompositionReport {
            blocks: self.blocks.iter().map(|&(d, m)| [d, m]).collect(),
            q: MatrixJson(self.q.clone()),
            residuals: ResidualReport {
                unitarity: Fixed(self.residuals.unitarity),
                off_block: Fixed(self.residuals.off_block),
                alignment: Fixed(self.residuals.alignment),
                commutant_dim: self.residuals.commutant_dim,
                attempts: self.residuals.attempts,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub unitarity: Fixed,
    pub off_block: Fixed,
    pub alignment: Fixed,
    pub commutant_dim: usize,
    pub attempts: usize,
}

/// Serialisable form of an [`IsotypicDecomposition`].
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub blocks: Vec<[usize; 2]>,
    pub q: MatrixJson,
    pub residuals: ResidualReport,
}

/// Random Hermitian element of the algebra spanned by the representatives.
fn algebra_element(rep: &Representation, seed: u64) -> ComplexMatrix {
    let mut r = rng(seed);
    let d = rep.dim();
    let mut a = zeros(d, d);
    let mats: Vec<ComplexMatrix> = if rep.is_finite() {
        rep.test_elements(0, seed)
            .into_iter()
            .chain(rep.action_generators().iter().cloned())
            .collect()
    } else {
        rep.action_generators().to_vec()
    };
    for m in &mats {
        a += (m + m.adjoint()).scale(normal(&mut r));
    }
    a
}

/// Frobenius norm of everything outside the per-copy diagonal blocks.
fn off_block_norm(t: &ComplexMatrix, copy_starts: &[(usize, usize)]) -> f64 {
    let n = t.nrows();
    let mut owner = vec![usize::MAX; n];
    for (k, &(s, d)) in copy_starts.iter().enumerate() {
        owner[s..s + d].iter_mut().for_each(|o| *o = k);
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if owner[i] != owner[j] {
                acc += t[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

impl IsotypicDecomposition {
    /// `(start, d)` of every irreducible copy, in column order.
    pub fn copy_ranges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, &(d, m)) in self.blocks.iter().enumerate() {
            for a in 0..m {
                out.push((self.block_offsets[k].start + a * d, d));
            }
        }
        out
    }

    /// Off-block norm of `q† m q`.
    pub fn off_block_residual(&self, m: &ComplexMatrix) -> f64 {
        off_block_norm(&(self.q.adjoint() * m * &self.q), &self.copy_ranges())
    }
}

fn residual_limit(tol: &Tolerance, dim: usize) -> f64 {
    10.0 * tol.threshold((dim as f64).sqrt())
}

/// Random-element isotypic decomposition.
///
/// A random Hermitian element `C` of the commutant has the form
/// `⊕_k B_k ⊗ 1_{d_k}` with generic `B_k`, so each of its eigenspaces is one
/// irreducible copy. Copies are grouped into classes by explicit nonzero
/// intertwiners; a reference copy of each class gets the eigenbasis of a
/// random algebra element `A`, and every other copy is rotated onto it by the
/// (unitary, after scaling) intertwiner. Every structural claim is re-checked
/// and a failed draw is redrawn with a derived seed, at most [`MAX_ATTEMPTS`]
/// times.
///
/// Blocks are ordered by descending `d_k`, then descending `m_k`, then first
/// occurrence in ascending eigenvalue order of `C`.
pub fn isotypic_decompose(rep: &Representation, seed: u64, tol: &Tolerance) -> Result<IsotypicDecomposition> {
    // Complete reducibility needs a unitary action; no redraw can fix that.
    let structure = rep.structure_residual();
    if structure > residual_limit(tol, rep.dim()) {
        return Err(Error::DecompositionFailed {
            attempts: 0,
            reason: format!("action is not unitary (residual {structure:e})"),
        });
    }
    let comm = commutant_basis(rep, tol);
    let mut reason = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let s = derive_seed(seed, attempt as u64);
        match try_decompose(rep, &comm, s, tol) {
            Ok(mut d) => {
                d.residuals.attempts = attempt + 1;
                return Ok(d);
            }
            Err(why) => reason = why,
        }
    }
    Err(Error::DecompositionFailed {
        attempts: MAX_ATTEMPTS,
        reason,
    })
}

fn try_decompose(
    rep: &Representation,
    comm: &CommutantBasis,
    seed: u64,
    tol: &Tolerance,
) -> std::result::Result<IsotypicDecomposition, String> {
    let dim = rep.dim();
    let limit = residual_limit(tol, dim);
    let gens = rep.action_generators();
    let mut r = rng(seed);

    // (1) split into irreducible copies with a random commutant element.
    let mut cm = zeros(dim, dim);
    for b in &comm.basis {
        cm += b.scale(normal(&mut r));
    }
    let eig = herm_eig(&cm, &Tolerance::new(1e-8, 1e-8).expect("valid")).map_err(|e| e.to_string())?;
    let scale = eig.eigenvalues.iter().fold(1.0f64, |s, l| s.max(l.abs()));
    let parts = clusters(&eig.eigenvalues, 1e-6 * scale);
    let mut copies: Vec<ComplexMatrix> = Vec::with_capacity(parts.len());
    for p in &parts {
        let v = eig.eigenvectors.columns(p.start, p.len()).into_owned();
        for m in gens {
            let mv = m * &v;
            let leak = (&mv - &v * (v.adjoint() * &mv)).norm();
            if leak > limit {
                return Err(format!("eigenspace of the splitting element is not invariant (leak {leak:e})"));
            }
        }
        copies.push(v);
    }
    let restricted: Vec<Vec<ComplexMatrix>> = copies
        .iter()
        .map(|v| gens.iter().map(|m| v.adjoint() * m * v).collect())
        .collect();
    for (k, rg) in restricted.iter().enumerate() {
        if commutant_of(rg, copies[k].ncols(), tol).dim() != 1 {
            return Err("eigenvalue collision: an eigenspace is reducible".into());
        }
    }

    // (2) group copies into equivalence classes by nonzero intertwiners.
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for k in 0..copies.len() {
        let dk = copies[k].ncols();
        let home = classes.iter().position(|cls| {
            let j = cls[0];
            copies[j].ncols() == dk && !intertwiner_space(&restricted[j], &restricted[k], dk, dk, tol).is_empty()
        });
        match home {
            Some(c) => classes[c].push(k),
            None => classes.push(vec![k]),
        }
    }
    let sum_m2: usize = classes.iter().map(|c| c.len() * c.len()).sum();
    if sum_m2 != comm.dim() {
        return Err(format!("Σ m² = {sum_m2} but the commutant has dimension {}", comm.dim()));
    }

    // (3) align: reference basis from a random algebra element, other copies by intertwiners.
    let a = algebra_element(rep, derive_seed(seed, 0xA));
    let mut aligned: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(classes.len());
    for cls in &classes {
        let v0 = &copies[cls[0]];
        let d = v0.ncols();
        let a0 = v0.adjoint() * &a * v0;
        let e = herm_eig(&hermitian_part(&a0), &Tolerance::default()).map_err(|e| e.to_string())?;
        let reference = v0 * &e.eigenvectors;
        let ref_gens: Vec<ComplexMatrix> = gens.iter().map(|m| reference.adjoint() * m * &reference).collect();
        let mut members = vec![reference];
        for &k in &cls[1..] {
            let space = intertwiner_space(&ref_gens, &restricted[k], d, d, tol);
            if space.len() != 1 {
                return Err(format!("{} intertwiners between irreducible copies", space.len()));
            }
            let phi = &space[0];
            let phi = phi.scale((d as f64).sqrt() / phi.norm());
            members.push(&copies[k] * phi);
        }
        aligned.push(members);
    }

    // (4) order and assemble.
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(copies[classes[c][0]].ncols()), std::cmp::Reverse(classes[c].len())));
    let mut q = zeros(dim, dim);
    let mut blocks = Vec::new();
    let mut block_offsets = Vec::new();
    let mut col = 0;
    for &c in &order {
        let start = col;
        for v in &aligned[c] {
            q.columns_mut(col, v.ncols()).copy_from(v);
            col += v.ncols();
        }
        blocks.push((aligned[c][0].ncols(), aligned[c].len()));
        block_offsets.push(start..col);
    }
    if col != dim {
        return Err(format!("copies cover {col} of {dim} dimensions"));
    }

    // (5) certify.
    let unitarity = unitary_residual(&q);
    let mut tests: Vec<ComplexMatrix> = gens.to_vec();
    tests.extend(rep.test_elements(20, derive_seed(seed, 0xB)));
    let mut ranges = Vec::new();
    for (k, &(d, m)) in blocks.iter().enumerate() {
        for a in 0..m {
            ranges.push((block_offsets[k].start + a * d, d));
        }
    }
    let (mut off_block, mut alignment) = (0.0f64, 0.0f64);
    for m in &tests {
        let t = q.adjoint() * m * &q;
        off_block = off_block.max(off_block_norm(&t, &ranges));
        for (k, &(d, mult)) in blocks.iter().enumerate() {
            let o = block_offsets[k].start;
            let first = t.view((o, o), (d, d)).into_owned();
            for cpy in 1..mult {
                let s = o + cpy * d;
                alignment = alignment.max((t.view((s, s), (d, d)) - &first).norm());
            }
        }
    }
    if unitarity > limit || off_block > limit || alignment > limit {
        return Err(format!(
            "certification failed: unitarity {unitarity:e}, off-block {off_block:e}, alignment {alignment:e}"
        ));
    }
    Ok(IsotypicDecomposition {
        q,
        blocks,
        block_offsets,
        residuals: DecompositionResiduals {
            unitarity,
            off_block,
            alignment,
            commutant_dim: comm.dim(),
            attempts: 0,
        },
        seed,
    })
}

/// Outcome of [`schur_weyl_check`].
#[derive(Clone, Debug, Serialize)]
pub struct SchurWeylReport {
    pub d: usize,
    pub n: usize,
    /// Commutant of the `S_n` action versus the span of sampled `U^{⊗n}`.
    pub s_commutant_dim: usize,
    pub unitary_span_dim: usize,
    pub distance_s_side: f64,
    /// Commutant of the `U(d)` action versus the span of the `P_π`.
    pub u_commutant_dim: usize,
    pub permutation_span_dim: usize,
    pub distance_u_side: f64,
    /// `(irrep dim, multiplicity)` on each side.
    pub s_blocks: Vec<(usize, usize)>,
    pub u_blocks: Vec<(usize, usize)>,
    /// The `S_n` side's blocks equal the `U(d)` side's with entries swapped.
    pub pairing_ok: bool,
}

impl SchurWeylReport {
    pub fn passes(&self, distance_tol: f64) -> bool {
        self.distance_s_side < distance_tol
            && self.distance_u_side < distance_tol
            && self.s_commutant_dim == self.unitary_span_dim
            && self.u_commutant_dim == self.permutation_span_dim
            && self.pairing_ok
    }
}

/// The `S_n` permutation action and the `U(d)` tensor action on `(C^d)^⊗n`
/// as mutual commutants, plus the swapped pairing of their block dimensions.
pub fn schur_weyl_check(d: usize, n: usize, seed: u64, tol: &Tolerance) -> Result<SchurWeylReport> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidParameter("schur_weyl_check needs d, n ≥ 1".into()));
    }
    let dim = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if dim > MAX_SCHUR_WEYL_DIM {
        return Err(Error::DimensionTooLarge {
            dim,
            max: MAX_SCHUR_WEYL_DIM,
        });
    }
    let s_rep = perm_rep(d, n)?;
    let u_rep = tensor_power(&defining_rep(u_basis(d)?), n)?;

    let s_comm = commutant_basis(&s_rep, tol);
    let mut g = rng(seed);
    let samples = s_comm.dim() + 8;
    let mut span = zeros(dim * dim, samples);
    for j in 0..samples {
        let u = haar_unitary(d, &mut g);
        let un = tensor_power_matrix(&u, n);
        span.set_column(j, &vectorize(&un));
    }
    let span = column_space(&span, tol);
    let distance_s_side = projector_distance(&s_comm.as_columns(), &span);

    let u_comm = commutant_basis(&u_rep, tol);
    let perms = permutations_lex(n);
    let mut pspan = zeros(dim * dim, perms.len());
    for (j, p) in perms.iter().enumerate() {
        pspan.set_column(j, &vectorize(&permutation_operator(p, d)));
    }
    let pspan = column_space(&pspan, tol);
    let distance_u_side = projector_distance(&u_comm.as_columns(), &pspan);

    let s_blocks = isotypic_decompose(&s_rep, derive_seed(seed, 1), tol)?.blocks;
    let u_blocks = isotypic_decompose(&u_rep, derive_seed(seed, 2), tol)?.blocks;
    let mut lhs = s_blocks.clone();
    lhs.sort_unstable();
    let mut rhs: Vec<(usize, usize)> = u_blocks.iter().map(|&(a, b)| (b, a)).collect();
    rhs.sort_unstable();
    Ok(SchurWeylReport {
        d,
        n,
        s_commutant_dim: s_comm.dim(),
        unitary_span_dim: span.ncols(),
        distance_s_side,
        u_commutant_dim: u_comm.dim(),
        permutation_span_dim: pspan.ncols(),
        distance_u_side,
        s_blocks,
        u_blocks,
        pairing_ok: lhs == rhs,
    })
}

fn tensor_power_matrix(u: &ComplexMatrix, n: usize) -> ComplexMatrix {
    (1..n).fold(u.clone(), |acc, _| acc.kronecker(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{make_cyclic, make_dihedral, make_symmetric};
    use crate::numerics::{kron, pauli_x, swap};
    use crate::random::ginibre;
    use crate::representations::{
        adjoint_action, bitflip_rep, dihedral_rep_s3, direct_sum, dual, left_regular_rep, perm_rep_qubits,
        su2_fundamental, swap_rep, translation_rep, trivial_rep,
    };

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn corpus() -> Vec<Representation> {
        let f = su2_fundamental();
        vec![
            f.clone(),
            tensor_power(&f, 2).unwrap(),
            tensor_power(&f, 3).unwrap(),
            adjoint_action(&f).rep,
            swap_rep(),
            adjoint_action(&swap_rep()).rep,
            bitflip_rep(2).unwrap(),
            dihedral_rep_s3(),
            perm_rep_qubits(3).unwrap(),
            left_regular_rep(&make_cyclic(5).unwrap()).unwrap(),
            left_regular_rep(&make_symmetric(3).unwrap()).unwrap(),
            left_regular_rep(&make_dihedral(4).unwrap()).unwrap(),
            trivial_rep(make_cyclic(3).unwrap(), 3),
            translation_rep(3).unwrap(),
        ]
    }

    #[test]
    fn commutants_of_the_standard_examples() {
        let f = su2_fundamental();
        let c1 = commutant_basis(&f, &tol());
        assert_eq!(c1.dim(), 1);
        assert!((c1.basis[0].scale(2f64.sqrt()) - identity(2)).norm() < 1e-12
            || (c1.basis[0].scale(-(2f64.sqrt())) - identity(2)).norm() < 1e-12);
        let c2 = commutant_basis(&tensor_power(&f, 2).unwrap(), &tol());
        assert_eq!(c2.dim(), 2);
        // span{1, SWAP}
        for m in [identity(4), swap(2)] {
            assert!((c2.project(&m).unwrap() - &m).norm() < 1e-12);
        }
        assert_eq!(invariant_operators(&adjoint_action(&swap_rep()), &tol()).dim(), 10);
        assert_eq!(commutant_basis(&perm_rep_qubits(3).unwrap(), &tol()).dim(), 20);
        assert_eq!(commutant_basis(&trivial_rep(make_cyclic(2).unwrap(), 3), &tol()).dim(), 9);
    }

    #[test]
    fn commutant_bases_are_orthonormal_hermitian_and_commute() {
        let mut r = rng(1);
        for rep in corpus() {
            let cb = commutant_basis(&rep, &tol());
            assert!(cb.gram_residual() < 1e-10, "{}", rep.name());
            assert!(cb.basis.iter().all(|b| crate::numerics::hermitian_residual(b) < 1e-12));
            let elems = rep.test_elements(20, 3);
            assert!(cb.commutator_residual(rep.action_generators()) < 1e-9);
            assert!(cb.commutator_residual(&elems) < 1e-9, "{}", rep.name());
            let o = ginibre(rep.dim(), rep.dim(), &mut r);
            let p = cb.project(&o).unwrap();
            for m in &elems {
                assert!(commutator(&p, m).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn blocks_of_the_standard_examples() {
        let f = su2_fundamental();
        let t2 = isotypic_decompose(&tensor_power(&f, 2).unwrap(), 0, &tol()).unwrap();
        assert_eq!(t2.blocks, vec![(3, 1), (1, 1)]);
        let ad = isotypic_decompose(&adjoint_action(&f).rep, 0, &tol()).unwrap();
        assert_eq!(ad.blocks, vec![(3, 1), (1, 1)]);
        let z3 = isotypic_decompose(&left_regular_rep(&make_cyclic(3).unwrap()).unwrap(), 0, &tol()).unwrap();
        assert_eq!(z3.blocks, vec![(1, 1); 3]);
        let t = isotypic_decompose(&trivial_rep(make_cyclic(2).unwrap(), 4), 0, &tol()).unwrap();
        assert_eq!(t.blocks, vec![(1, 4)]);
        let p3 = isotypic_decompose(&perm_rep_qubits(3).unwrap(), 0, &tol()).unwrap();
        assert_eq!(p3.sorted_blocks(), vec![(1, 4), (2, 2)]);
        assert_eq!(p3.blocks, vec![(2, 2), (1, 4)]);
        let s3 = isotypic_decompose(&left_regular_rep(&make_symmetric(3).unwrap()).unwrap(), 0, &tol()).unwrap();
        assert_eq!(s3.blocks, vec![(2, 2), (1, 1), (1, 1)]);
    }

    #[test]
    fn decompositions_certify_and_are_seed_stable() {
        for rep in corpus() {
            let cdim = commutant_basis(&rep, &tol()).dim();
            let mut reference = None;
            for seed in [0, 1, 17] {
                let dec = isotypic_decompose(&rep, seed, &tol()).unwrap();
                let sum: usize = dec.blocks.iter().map(|&(d, m)| d * m).sum();
                assert_eq!(sum, rep.dim());
                assert_eq!(dec.blocks.iter().map(|&(_, m)| m * m).sum::<usize>(), cdim);
                assert!(unitary_residual(&dec.q) < 1e-9);
                for m in rep.test_elements(20, seed + 100) {
                    assert!(dec.off_block_residual(&m) < 1e-8, "{}", rep.name());
                }
                let sorted = dec.sorted_blocks();
                match &reference {
                    None => reference = Some(sorted),
                    Some(r) => assert_eq!(r, &sorted),
                }
            }
        }
    }

    #[test]
    fn block_basis_recovers_identity_and_swap() {
        let dec = isotypic_decompose(&tensor_power(&su2_fundamental(), 2).unwrap(), 0, &tol()).unwrap();
        let basis = dec.commutant_block_basis();
        assert_eq!(basis.len(), 2);
        assert!((&basis[0] + &basis[1] - identity(4)).norm() < 1e-10);
        assert!((&basis[0] - &basis[1] - swap(2)).norm() < 1e-10);
        // P_SWAP = 1₃ ⊕ (−1₁) in the decomposition basis
        let t = dec.q.adjoint() * swap(2) * &dec.q;
        let expect = crate::numerics::diag(&[c(1., 0.), c(1., 0.), c(1., 0.), c(-1., 0.)]);
        assert!((t - expect).norm() < 1e-10);
    }

    #[test]
    fn block_diagonal_part_keeps_commutant_overlaps() {
        let rep = perm_rep_qubits(3).unwrap();
        let dec = isotypic_decompose(&rep, 4, &tol()).unwrap();
        let cb = commutant_basis(&rep, &tol());
        let mut r = rng(5);
        let x = ginibre(8, 8, &mut r);
        let y = dec.block_diagonal_part(&x);
        for b in &cb.basis {
            assert!(((b * &x).trace() - (b * &y).trace()).norm() < 1e-10);
        }
    }

    #[test]
    fn irreducibility() {
        let f = su2_fundamental();
        assert!(is_irreducible(&f, &tol()));
        assert!(is_irreducible(&dihedral_rep_s3(), &tol()));
        assert!(!is_irreducible(&tensor_power(&f, 2).unwrap(), &tol()));
        assert!(!is_irreducible(&trivial_rep(make_cyclic(2).unwrap(), 2), &tol()));
    }

    #[test]
    fn intertwiners() {
        let f = su2_fundamental();
        let ad = adjoint_action(&f).rep;
        let t2 = tensor_power(&f, 2).unwrap();
        let it = find_intertwiner(&t2, &ad, &tol()).unwrap();
        assert_eq!(it.verdict, Verdict::Equivalent);
        assert!(it.residual < 1e-10);

        let same = find_intertwiner(&f, &f, &tol()).unwrap();
        assert_eq!(same.verdict, Verdict::Equivalent);
        assert_eq!(same.space_dim, 1);

        // trivial vs sign of S_2 = Z_2
        let z2 = make_cyclic(2).unwrap();
        let triv = trivial_rep(z2.clone(), 1);
        let sign = Representation::from_generator_matrices(triv.source(), vec![-identity(1)], "sign").unwrap();
        assert_eq!(find_intertwiner(&triv, &sign, &tol()).unwrap().verdict, Verdict::ZeroOnly);

        // a trivial copy inside the swap rep, but not an equivalence
        let swap_triv = trivial_rep(swap_rep().source(), 1);
        let part = find_intertwiner(&swap_triv, &swap_rep(), &tol()).unwrap();
        assert_eq!(part.verdict, Verdict::Partial);
        assert_eq!(part.space_dim, 3);

        assert_eq!(find_intertwiner(&f, &swap_rep(), &tol()).unwrap_err(), Error::SourceMismatch);
    }

    #[test]
    fn spin_one_map_on_the_symmetric_subspace() {
        // With Z|0⟩ = |0⟩: |11⟩ ↦ σ⁺, |01⟩+|10⟩ ↦ Z, |00⟩ ↦ −σ⁻, where σ∓ = (X ± iY)/2.
        let f = su2_fundamental();
        let ad = adjoint_action(&f).rep;
        let t2 = tensor_power(&f, 2).unwrap();
        let sm = (pauli_x() + crate::numerics::pauli_y() * I).scale(0.5);
        let sp = sm.adjoint();
        let z = crate::numerics::pauli_z();
        let mut phi = zeros(4, 4);
        phi.set_column(0, &vectorize(&(-&sm)));
        phi.set_column(1, &vectorize(&z.scale(0.5)));
        phi.set_column(2, &vectorize(&z.scale(0.5)));
        phi.set_column(3, &vectorize(&sp));
        for (a, b) in t2.action_generators().iter().zip(ad.action_generators()) {
            assert!((&phi * a - b * &phi).norm() < 1e-14);
        }
        // the solver's intertwiner space is 2-dim (spin 1 and spin 0) and contains it
        let space = intertwiner_space(t2.action_generators(), ad.action_generators(), 4, 4, &tol());
        assert_eq!(space.len(), 2);
    }

    #[test]
    fn schur_lemma_dichotomy_between_irreducibles() {
        let irreps = [
            su2_fundamental(),
            dual(&su2_fundamental()),
        ];
        for a in &irreps {
            for b in &irreps {
                assert_ne!(find_intertwiner(a, b, &tol()).unwrap().verdict, Verdict::Partial);
            }
        }
        let s3 = dihedral_rep_s3();
        let triv = trivial_rep(s3.source(), 2);
        let v = find_intertwiner(&s3, &dual(&s3), &tol()).unwrap().verdict;
        assert_eq!(v, Verdict::Equivalent);
        assert_eq!(find_intertwiner(&s3, &triv, &tol()).unwrap().verdict, Verdict::ZeroOnly);
    }

    #[test]
    fn double_duals_are_equivalent() {
        for rep in [dihedral_rep_s3(), perm_rep_qubits(3).unwrap(), tensor_power(&su2_fundamental(), 2).unwrap()] {
            let dd = dual(&dual(&rep));
            assert_eq!(find_intertwiner(&rep, &dd, &tol()).unwrap().verdict, Verdict::Equivalent);
        }
    }

    #[test]
    fn decomposition_fails_loudly_without_unitarity() {
        let z2 = make_cyclic(2).unwrap();
        // an involution that is not unitary: conjugate X by a shear
        let s = crate::numerics::from_real(2, 2, &[1.0, 3.0, 0.0, 1.0]);
        let sinv = crate::numerics::from_real(2, 2, &[1.0, -3.0, 0.0, 1.0]);
        let m = &s * pauli_x() * &sinv;
        let rep = Representation::from_generator_matrices(z2, vec![m], "skew").unwrap();
        assert!(matches!(isotypic_decompose(&rep, 0, &tol()), Err(Error::DecompositionFailed { attempts: 0, .. })));
    }

    #[test]
    fn direct_sum_blocks() {
        let f = su2_fundamental();
        let spin1 = adjoint_action(&f).rep;
        let sum = direct_sum(&direct_sum(&f, &f).unwrap(), &spin1).unwrap();
        let dec = isotypic_decompose(&sum, 3, &tol()).unwrap();
        assert_eq!(dec.blocks, vec![(3, 1), (2, 2), (1, 1)]);
        let b = bitflip_rep(1).unwrap();
        let two = isotypic_decompose(&kron_rep(&b), 0, &tol()).unwrap();
        assert_eq!(two.blocks, vec![(1, 2), (1, 2)]);
    }

    fn kron_rep(r: &Representation) -> Representation {
        let m = kron(&r.representative(1), &r.representative(1));
        Representation::from_generator_matrices(r.source(), vec![m], "xx").unwrap()
    }

    #[test]
    fn schur_weyl_small_cases() {
        let r2 = schur_weyl_check(2, 2, 0, &tol()).unwrap();
        assert!(r2.passes(1e-8), "{r2:?}");
        assert_eq!(r2.u_blocks, vec![(3, 1), (1, 1)]);
        let mut s = r2.s_blocks.clone();
        s.sort_unstable();
        assert_eq!(s, vec![(1, 1), (1, 3)]);
        let r3 = schur_weyl_check(2, 3, 0, &tol()).unwrap();
        assert!(r3.passes(1e-8), "{r3:?}");
        assert_eq!(r3.s_commutant_dim, 20);
        assert_eq!(r3.u_commutant_dim, 5);
        let r1 = schur_weyl_check(1, 3, 0, &tol()).unwrap();
        assert!(r1.passes(1e-8));
        assert_eq!((r1.s_commutant_dim, r1.u_commutant_dim), (1, 1));
        let q = schur_weyl_check(3, 2, 0, &tol()).unwrap();
        assert!(q.passes(1e-8), "{q:?}");
        assert!(matches!(schur_weyl_check(2, 7, 0, &tol()), Err(Error::DimensionTooLarge { .. })));
    }
}
