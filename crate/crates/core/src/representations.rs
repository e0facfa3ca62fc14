//! Matrix representations of finite groups and Lie algebras.
//!
//! A [`Representation`] pairs a [`SymmetrySource`] with concrete matrices. The
//! finite flavour holds unitary representatives; groups of order at most
//! [`EAGER_ORDER`] keep all of them, larger groups keep the generator images
//! and rebuild other elements from shortest words. The Lie flavour holds one
//! Hermitian image per algebra generator.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::groups::{make_cyclic, make_symmetric, permutations_lex, su2_basis, FiniteGroup, GroupSpec, LieAlgebraBasis, SymmetrySource};
use crate::numerics::{
    c, commutator, commutator_superoperator, conjugation_superoperator, diag, hermitian_residual, identity, kron,
    kron_all, pauli_x, swap, unitary_residual, zeros, ComplexMatrix, Tolerance, ONE,
};
use crate::random::{derive_seed, rng};
use crate::serial::MatrixJson;
use crate::{Error, Result};

/// Groups up to this order store every representative.
pub const EAGER_ORDER: usize = 64;

/// Largest order for which `verify_homomorphism` checks every pair.
pub const EXHAUSTIVE_PAIRS: usize = 512;

#[derive(Clone, Debug)]
pub enum Flavor {
    Finite {
        /// `R(s)` for each generator `s` of the group, in generator order.
        generator_matrices: Vec<ComplexMatrix>,
        /// Every representative by element index, when the order is small.
        matrices: Option<Vec<ComplexMatrix>>,
    },
    Lie {
        generator_images: Vec<ComplexMatrix>,
    },
}

#[derive(Clone, Debug)]
pub struct Representation {
    source: Arc<SymmetrySource>,
    dim: usize,
    flavor: Flavor,
    name: String,
}

/// Anything that can stand in for the source of a representation.
pub trait IntoSource {
    fn into_source(self) -> Arc<SymmetrySource>;
}

impl IntoSource for Arc<SymmetrySource> {
    fn into_source(self) -> Arc<SymmetrySource> {
        self
    }
}

impl IntoSource for &Arc<SymmetrySource> {
    fn into_source(self) -> Arc<SymmetrySource> {
        Arc::clone(self)
    }
}

impl IntoSource for SymmetrySource {
    fn into_source(self) -> Arc<SymmetrySource> {
        Arc::new(self)
    }
}

impl IntoSource for FiniteGroup {
    fn into_source(self) -> Arc<SymmetrySource> {
        Arc::new(SymmetrySource::Finite(self))
    }
}

impl IntoSource for LieAlgebraBasis {
    fn into_source(self) -> Arc<SymmetrySource> {
        Arc::new(SymmetrySource::Lie(self))
    }
}

impl IntoSource for &Representation {
    fn into_source(self) -> Arc<SymmetrySource> {
        Arc::clone(&self.source)
    }
}

/// Same symmetry source, by pointer or by value.
pub fn same_source(a: &Arc<SymmetrySource>, b: &Arc<SymmetrySource>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn check_square(ms: &[ComplexMatrix], dim: usize) -> Result<()> {
    if ms.iter().any(|m| m.shape() != (dim, dim)) {
        return Err(Error::DimensionMismatch(format!("representatives must all be {dim}×{dim}")));
    }
    Ok(())
}

impl Representation {
    /// Finite-flavour representation from the images of the group generators.
    ///
    /// Other elements are products along shortest generator words; whether
    /// that is consistent is what [`verify_homomorphism`] measures.
    pub fn from_generator_matrices(
        source: impl IntoSource,
        generator_matrices: Vec<ComplexMatrix>,
        name: impl Into<String>,
    ) -> Result<Self> {
        let source = source.into_source();
        let g = source
            .as_finite()
            .ok_or_else(|| Error::InvalidParameter("generator matrices need a finite group".into()))?;
        if generator_matrices.len() != g.generators().len() {
            return Err(Error::DimensionMismatch(format!(
                "{} generator matrices for {} generators",
                generator_matrices.len(),
                g.generators().len()
            )));
        }
        let dim = generator_matrices.first().map_or(1, |m| m.nrows());
        check_square(&generator_matrices, dim)?;
        let matrices = (g.order() <= EAGER_ORDER).then(|| words_to_matrices(g, &generator_matrices, dim));
        Ok(Representation {
            dim,
            flavor: Flavor::Finite {
                generator_matrices,
                matrices,
            },
            source,
            name: name.into(),
        })
    }

    /// Finite-flavour representation from every representative, unchecked.
    pub fn from_all_matrices(source: impl IntoSource, matrices: Vec<ComplexMatrix>, name: impl Into<String>) -> Result<Self> {
        let source = source.into_source();
        let g = source
            .as_finite()
            .ok_or_else(|| Error::InvalidParameter("element matrices need a finite group".into()))?;
        if matrices.len() != g.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for a group of order {}",
                matrices.len(),
                g.order()
            )));
        }
        let dim = matrices[0].nrows();
        check_square(&matrices, dim)?;
        let generator_matrices = g.generators().iter().map(|&s| matrices[s].clone()).collect();
        Ok(Representation {
            dim,
            flavor: Flavor::Finite {
                generator_matrices,
                matrices: Some(matrices),
            },
            source,
            name: name.into(),
        })
    }

    /// Lie-flavour representation from one Hermitian image per algebra generator.
    pub fn from_generator_images(source: impl IntoSource, images: Vec<ComplexMatrix>, name: impl Into<String>) -> Result<Self> {
        let source = source.into_source();
        let alg = source
            .as_lie()
            .ok_or_else(|| Error::InvalidParameter("generator images need a Lie algebra".into()))?;
        if images.len() != alg.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} images for an algebra of dimension {}",
                images.len(),
                alg.dim()
            )));
        }
        let dim = images[0].nrows();
        check_square(&images, dim)?;
        Ok(Representation {
            dim,
            flavor: Flavor::Lie { generator_images: images },
            source,
            name: name.into(),
        })
    }

    pub fn source(&self) -> &Arc<SymmetrySource> {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn flavor(&self) -> &Flavor {
        &self.flavor
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.flavor, Flavor::Finite { .. })
    }

    pub fn group(&self) -> Option<&FiniteGroup> {
        self.source.as_finite()
    }

    pub fn algebra(&self) -> Option<&LieAlgebraBasis> {
        self.source.as_lie()
    }

    /// The matrices that generate the action: `R(s)` over group generators,
    /// or the Lie images. Anything commuting with these commutes with the
    /// whole representation.
    pub fn action_generators(&self) -> &[ComplexMatrix] {
        match &self.flavor {
            Flavor::Finite { generator_matrices, .. } => generator_matrices,
            Flavor::Lie { generator_images } => generator_images,
        }
    }

    /// `R(g)` for a finite-flavour representation.
    pub fn representative(&self, g: usize) -> ComplexMatrix {
        match &self.flavor {
            Flavor::Finite {
                matrices: Some(ms), ..
            } => ms[g].clone(),
            Flavor::Finite {
                generator_matrices, ..
            } => {
                let group = self.group().expect("finite flavour has a group");
                let word = &group.shortest_words()[g];
                word.iter()
                    .fold(identity(self.dim), |acc, &i| acc * &generator_matrices[i])
            }
            Flavor::Lie { .. } => panic!("representative(g) needs a finite group; use sample_element"),
        }
    }

    /// Every representative, by element index (finite flavour).
    pub fn all_representatives(&self) -> Vec<ComplexMatrix> {
        match &self.flavor {
            Flavor::Finite {
                matrices: Some(ms), ..
            } => ms.clone(),
            Flavor::Finite {
                generator_matrices, ..
            } => words_to_matrices(self.group().expect("finite"), generator_matrices, self.dim),
            Flavor::Lie { .. } => panic!("all_representatives needs a finite group"),
        }
    }

    /// One group-level representative drawn from `seed`: a uniform element
    /// for finite groups, a product of `depth` random exponentials otherwise.
    pub fn sample_element(&self, seed: u64, depth: usize) -> ComplexMatrix {
        match &self.flavor {
            Flavor::Finite { .. } => {
                let n = self.group().expect("finite").order();
                self.representative(rng(seed).random_range(0..n))
            }
            Flavor::Lie { generator_images } => {
                let path = self.algebra().expect("lie").sample_path(seed, depth.max(1));
                crate::groups::product_of_exponentials(generator_images, &path)
            }
        }
    }

    /// Group elements to test invariants against: all of them for finite
    /// groups of order ≤ [`EAGER_ORDER`], otherwise `n` seeded samples.
    pub fn test_elements(&self, n: usize, seed: u64) -> Vec<ComplexMatrix> {
        if let Some(g) = self.group() {
            if g.order() <= EAGER_ORDER {
                return self.all_representatives();
            }
        }
        let depth = self.algebra().map_or(1, |a| 2 * a.dim() + 4);
        (0..n as u64)
            .map(|i| self.sample_element(derive_seed(seed, i), depth))
            .collect()
    }

    /// The representation restricted to an invariant subspace with orthonormal
    /// `basis` columns: `B† R B`. Invariance is not checked.
    pub fn restrict(&self, basis: &ComplexMatrix) -> Result<Self> {
        if basis.nrows() != self.dim {
            return Err(Error::DimensionMismatch("basis rows must match the carrier".into()));
        }
        let map = |m: &ComplexMatrix| basis.adjoint() * m * basis;
        let dim = basis.ncols();
        let flavor = match &self.flavor {
            Flavor::Finite {
                generator_matrices,
                matrices,
            } => Flavor::Finite {
                generator_matrices: generator_matrices.iter().map(map).collect(),
                matrices: matrices.as_ref().map(|ms| ms.iter().map(map).collect()),
            },
            Flavor::Lie { generator_images } => Flavor::Lie {
                generator_images: generator_images.iter().map(map).collect(),
            },
        };
        Ok(Representation {
            source: Arc::clone(&self.source),
            dim,
            flavor,
            name: format!("{}|sub{dim}", self.name),
        })
    }

    /// Unitarity residual (finite) or Hermiticity residual (Lie), maximised.
    pub fn structure_residual(&self) -> f64 {
        match &self.flavor {
            Flavor::Finite { .. } => {
                let ms = if self.group().expect("finite").order() <= EXHAUSTIVE_PAIRS {
                    self.all_representatives()
                } else {
                    self.action_generators().to_vec()
                };
                ms.iter().map(unitary_residual).fold(0.0, f64::max)
            }
            Flavor::Lie { generator_images } => generator_images.iter().map(hermitian_residual).fold(0.0, f64::max),
        }
    }

    /// Checks unitarity / Hermiticity and the homomorphism property against
    /// `tol` relative to the carrier dimension.
    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        let scale = self.dim as f64;
        let s = self.structure_residual();
        let h = verify_homomorphism(self);
        let limit = tol.threshold(scale);
        let worst = s.max(h);
        if !(worst <= limit) {
            return Err(Error::NotAHomomorphism { residual: worst, tol: limit });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        crate::serial::to_json_string(&RepDocument::plain(self))
    }

    /// Parses a representation document and re-verifies it. Documents with
    /// `"action": "adjoint"` yield the adjoint action on operators.
    pub fn from_json(s: &str, tol: &Tolerance) -> Result<RepFile> {
        let doc: RepDocument = serde_json::from_str(s)?;
        doc.load(tol)
    }
}

fn words_to_matrices(g: &FiniteGroup, generator_matrices: &[ComplexMatrix], dim: usize) -> Vec<ComplexMatrix> {
    // Each element's word extends its BFS parent's by one letter, so build in BFS order.
    let words = g.shortest_words();
    let mut order: Vec<usize> = (0..g.order()).collect();
    order.sort_by_key(|&e| words[e].len());
    let mut out: Vec<Option<ComplexMatrix>> = vec![None; g.order()];
    for e in order {
        let w = &words[e];
        let m = match w.split_last() {
            None => identity(dim),
            Some((&last, prefix)) => {
                let parent = prefix
                    .iter()
                    .fold(g.identity(), |acc, &i| g.mul(acc, g.generators()[i]));
                let pm = out[parent].as_ref().expect("parent word is shorter");
                pm * &generator_matrices[last]
            }
        };
        out[e] = Some(m);
    }
    out.into_iter().map(|m| m.expect("all elements reached")).collect()
}

/// Largest homomorphism defect.
///
/// Finite flavour: `max ‖R(gh) − R(g)R(h)‖_F` over all pairs for orders up to
/// [`EXHAUSTIVE_PAIRS`], otherwise over pairs `(g, s)` with `s` a generator
/// (which suffices by induction on word length), together with
/// `‖R(e) − 1‖_F`. Lie flavour: `max ‖[r_a, r_b] − i Σ_c f_abc r_c‖_F`.
pub fn verify_homomorphism(r: &Representation) -> f64 {
    match &r.flavor {
        Flavor::Finite { .. } => {
            let g = r.group().expect("finite");
            let ms = r.all_representatives();
            let mut worst = (&ms[g.identity()] - identity(r.dim)).norm();
            let right: Vec<usize> = if g.order() <= EXHAUSTIVE_PAIRS {
                (0..g.order()).collect()
            } else {
                g.generators().to_vec()
            };
            for a in 0..g.order() {
                for &b in &right {
                    let d = (&ms[g.mul(a, b)] - &ms[a] * &ms[b]).norm();
                    worst = worst.max(d);
                }
            }
            worst
        }
        Flavor::Lie { generator_images } => {
            let alg = r.algebra().expect("lie");
            let k = alg.dim();
            let mut worst = 0.0f64;
            for a in 0..k {
                for b in 0..k {
                    let mut rhs = zeros(r.dim, r.dim);
                    for (cc, &f) in alg.bracket_coefficients(a, b).iter().enumerate() {
                        if f != 0.0 {
                            rhs += generator_images[cc].scale(f);
                        }
                    }
                    let lhs = commutator(&generator_images[a], &generator_images[b]);
                    worst = worst.max((lhs - rhs * c(0.0, 1.0)).norm());
                }
            }
            worst
        }
    }
}

/// `R(g) = 1` (finite) or `r(X) = 0` (Lie) on a `dim`-dimensional space.
pub fn trivial_rep(source: impl IntoSource, dim: usize) -> Representation {
    let source = source.into_source();
    let flavor = match &*source {
        SymmetrySource::Finite(g) => Flavor::Finite {
            generator_matrices: vec![identity(dim); g.generators().len()],
            matrices: (g.order() <= EAGER_ORDER).then(|| vec![identity(dim); g.order()]),
        },
        SymmetrySource::Lie(a) => Flavor::Lie {
            generator_images: vec![zeros(dim, dim); a.dim()],
        },
    };
    Representation {
        source,
        dim,
        flavor,
        name: format!("trivial{dim}"),
    }
}

/// `P_π` on `(C^d)^⊗n`: the tensor factor in slot `k` moves to slot `π(k)`,
/// so `P_π |i₁…iₙ⟩ = |i_{π⁻¹(1)} … i_{π⁻¹(n)}⟩`. `perm` is 0-based one-line notation.
pub fn permutation_operator(perm: &[usize], d: usize) -> ComplexMatrix {
    let n = perm.len();
    let dim = d.pow(n as u32);
    let mut p = zeros(dim, dim);
    let mut digits = vec![0usize; n];
    let mut out = vec![0usize; n];
    for col in 0..dim {
        let mut x = col;
        for k in (0..n).rev() {
            digits[k] = x % d;
            x /= d;
        }
        for k in 0..n {
            out[perm[k]] = digits[k];
        }
        let row = out.iter().fold(0, |acc, &v| acc * d + v);
        p[(row, col)] = ONE;
    }
    p
}

/// `S_n` permuting the tensor factors of `(C^d)^⊗n`.
pub fn perm_rep(d: usize, n: usize) -> Result<Representation> {
    if d == 0 {
        return Err(Error::InvalidParameter("local dimension must be positive".into()));
    }
    let g = make_symmetric(n)?;
    let perms = permutations_lex(n);
    let matrices = perms.iter().map(|p| permutation_operator(p, d)).collect();
    Representation::from_all_matrices(g, matrices, format!("perm(d={d},n={n})"))
}

/// `S_n` permuting `n` qubits.
pub fn perm_rep_qubits(n: usize) -> Result<Representation> {
    perm_rep(2, n)
}

/// `Z_2` acting by `X^{⊗n}`.
pub fn bitflip_rep(n: usize) -> Result<Representation> {
    if n == 0 {
        return Err(Error::InvalidParameter("bitflip_rep needs n ≥ 1".into()));
    }
    let x = vec![pauli_x(); n];
    Representation::from_generator_matrices(make_cyclic(2)?, vec![kron_all(&x)], format!("bitflip{n}"))
}

/// `Z_2` acting on two qubits by SWAP.
pub fn swap_rep() -> Representation {
    Representation::from_generator_matrices(make_cyclic(2).expect("n = 2"), vec![swap(2)], "swap")
        .expect("one generator")
}

/// Two-dimensional representation of `S_3` as the triangle group: `(12) ↦ X`,
/// `(123) ↦ diag(ω, ω̄)` with `ω = e^{2πi/3}`.
///
/// The generators of [`make_symmetric`] are `(12)` and `(23)`; since
/// `(123) = (12)(23)`, the second image is `X·diag(ω, ω̄)`.
pub fn dihedral_rep_s3() -> Representation {
    let w = c(0.0, std::f64::consts::TAU / 3.0).exp();
    let rot = diag(&[w, w.conj()]);
    let x = pauli_x();
    let t23 = &x * &rot;
    Representation::from_generator_matrices(make_symmetric(3).expect("n = 3"), vec![x, t23], "dihedral-s3")
        .expect("two generators")
}

/// su(2) acting on C² with images `{X/2, Y/2, Z/2}`.
pub fn su2_fundamental() -> Representation {
    defining_rep(su2_basis()).with_name("su2-fundamental")
}

/// A matrix Lie algebra acting on its own carrier: `r(H) = H`.
pub fn defining_rep(alg: impl IntoSource) -> Representation {
    let source = alg.into_source();
    let images = source.as_lie().expect("defining_rep needs a Lie algebra").generators().to_vec();
    Representation::from_generator_images(source, images, "defining").expect("images match the basis")
}

fn map_flavor2(
    r1: &Representation,
    r2: &Representation,
    fin: impl Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix,
    lie: impl Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix,
) -> Result<Flavor> {
    if !same_source(&r1.source, &r2.source) {
        return Err(Error::SourceMismatch);
    }
    let zip = |a: &[ComplexMatrix], b: &[ComplexMatrix], f: &dyn Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix| {
        a.iter().zip(b).map(|(x, y)| f(x, y)).collect::<Vec<_>>()
    };
    Ok(match (&r1.flavor, &r2.flavor) {
        (
            Flavor::Finite {
                generator_matrices: g1,
                matrices: m1,
            },
            Flavor::Finite {
                generator_matrices: g2,
                matrices: m2,
            },
        ) => Flavor::Finite {
            generator_matrices: zip(g1, g2, &fin),
            matrices: match (m1, m2) {
                (Some(a), Some(b)) => Some(zip(a, b, &fin)),
                _ => None,
            },
        },
        (Flavor::Lie { generator_images: a }, Flavor::Lie { generator_images: b }) => Flavor::Lie {
            generator_images: zip(a, b, &lie),
        },
        _ => return Err(Error::SourceMismatch),
    })
}

/// `R₁ ⊗ R₂`: `R₁(g) ⊗ R₂(g)`, or `r₁(X) ⊗ 1 + 1 ⊗ r₂(X)`.
pub fn tensor_product(r1: &Representation, r2: &Representation) -> Result<Representation> {
    let (d1, d2) = (r1.dim, r2.dim);
    let flavor = map_flavor2(r1, r2, kron, |a, b| kron(a, &identity(d2)) + kron(&identity(d1), b))?;
    Ok(Representation {
        source: Arc::clone(&r1.source),
        dim: d1 * d2,
        flavor,
        name: format!("({})⊗({})", r1.name, r2.name),
    })
}

/// `R^{⊗k}`.
pub fn tensor_power(r: &Representation, k: usize) -> Result<Representation> {
    if k == 0 {
        return Err(Error::InvalidParameter("tensor_power needs k ≥ 1".into()));
    }
    let mut out = r.clone();
    for _ in 1..k {
        out = tensor_product(&out, r)?;
    }
    Ok(if k == 1 { out } else { out.with_name(format!("({})^{k}", r.name)) })
}

/// `R₁ ⊕ R₂`, block diagonal with `R₁` first.
pub fn direct_sum(r1: &Representation, r2: &Representation) -> Result<Representation> {
    let (d1, d2) = (r1.dim, r2.dim);
    let block = move |a: &ComplexMatrix, b: &ComplexMatrix| {
        let mut m = zeros(d1 + d2, d1 + d2);
        m.view_mut((0, 0), (d1, d1)).copy_from(a);
        m.view_mut((d1, d1), (d2, d2)).copy_from(b);
        m
    };
    let flavor = map_flavor2(r1, r2, block, block)?;
    Ok(Representation {
        source: Arc::clone(&r1.source),
        dim: d1 + d2,
        flavor,
        name: format!("({})⊕({})", r1.name, r2.name),
    })
}

/// Dual representation: `R(g⁻¹)ᵀ`, or `−r(X)ᵀ`.
pub fn dual(r: &Representation) -> Representation {
    let flavor = match &r.flavor {
        Flavor::Finite { matrices, .. } => {
            let g = r.group().expect("finite");
            let all = matrices.clone().unwrap_or_else(|| r.all_representatives());
            let duals: Vec<ComplexMatrix> = (0..g.order()).map(|x| all[g.inverse(x)].transpose()).collect();
            Flavor::Finite {
                generator_matrices: g.generators().iter().map(|&s| duals[s].clone()).collect(),
                matrices: (g.order() <= EAGER_ORDER).then_some(duals),
            }
        }
        Flavor::Lie { generator_images } => Flavor::Lie {
            generator_images: generator_images.iter().map(|h| -h.transpose()).collect(),
        },
    };
    Representation {
        source: Arc::clone(&r.source),
        dim: r.dim,
        flavor,
        name: format!("({})*", r.name),
    }
}

/// A representation together with its adjoint action `A ↦ R(g) A R(g)†` on
/// row-major vectorised operators.
#[derive(Clone, Debug)]
pub struct RepOnOperators {
    pub base: Representation,
    /// Acts on `d²`-dimensional vectorised operators.
    pub rep: Representation,
}

/// Adjoint action: `R(g) ⊗ conj R(g)`, with Lie images `[r(X), ·]`.
pub fn adjoint_action(r: &Representation) -> RepOnOperators {
    let flavor = match &r.flavor {
        Flavor::Finite {
            generator_matrices,
            matrices,
        } => Flavor::Finite {
            generator_matrices: generator_matrices.iter().map(conjugation_superoperator).collect(),
            matrices: matrices.as_ref().map(|ms| ms.iter().map(conjugation_superoperator).collect()),
        },
        Flavor::Lie { generator_images } => Flavor::Lie {
            generator_images: generator_images.iter().map(commutator_superoperator).collect(),
        },
    };
    RepOnOperators {
        base: r.clone(),
        rep: Representation {
            source: Arc::clone(&r.source),
            dim: r.dim * r.dim,
            flavor,
            name: format!("ad({})", r.name),
        },
    }
}

/// `L_h |g⟩ = |hg⟩` on `C^{|G|}`.
pub fn left_regular_rep(g: &FiniteGroup) -> Result<Representation> {
    let n = g.order();
    if n > EXHAUSTIVE_PAIRS {
        return Err(Error::DimensionTooLarge { dim: n, max: EXHAUSTIVE_PAIRS });
    }
    let gens = g
        .generators()
        .iter()
        .map(|&h| {
            let mut m = zeros(n, n);
            for x in 0..n {
                m[(g.mul(h, x), x)] = ONE;
            }
            m
        })
        .collect();
    Representation::from_generator_matrices(g.clone(), gens, format!("regular{n}"))
}

/// `Z_n` translating `n` qubits around a ring: the generator moves the
/// content of site `k` to site `k + 1 (mod n)`.
pub fn translation_rep(n: usize) -> Result<Representation> {
    if n == 0 {
        return Err(Error::InvalidParameter("translation_rep needs n ≥ 1".into()));
    }
    let shift: Vec<usize> = (0..n).map(|k| (k + 1) % n).collect();
    Representation::from_generator_matrices(make_cyclic(n)?, vec![permutation_operator(&shift, 2)], format!("translation{n}"))
}

/// Either a representation or the adjoint action built from one.
#[derive(Clone, Debug)]
pub enum RepFile {
    Plain(Representation),
    Adjoint(RepOnOperators),
}

impl RepFile {
    /// The representation whose matrices were stored in the file.
    pub fn base(&self) -> &Representation {
        match self {
            RepFile::Plain(r) => r,
            RepFile::Adjoint(a) => &a.base,
        }
    }

    pub fn is_adjoint(&self) -> bool {
        matches!(self, RepFile::Adjoint(_))
    }
}

/// On-disk form: the group, an optional `"adjoint"` action marker, and either
/// every finite representative or the Lie generator images.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepDocument {
    pub name: String,
    pub group: GroupSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_images: Option<Vec<MatrixJson>>,
}

impl RepDocument {
    pub fn plain(r: &Representation) -> Self {
        let wrap = |ms: Vec<ComplexMatrix>| Some(ms.into_iter().map(MatrixJson).collect());
        let (matrices, generator_images) = match &r.flavor {
            Flavor::Finite { .. } => (wrap(r.all_representatives()), None),
            Flavor::Lie { generator_images } => (None, wrap(generator_images.clone())),
        };
        RepDocument {
            name: r.name.clone(),
            group: r.source.to_spec(),
            action: None,
            matrices,
            generator_images,
        }
    }

    pub fn adjoint(r: &Representation) -> Self {
        RepDocument {
            action: Some("adjoint".into()),
            ..Self::plain(r)
        }
    }

    pub fn load(self, tol: &Tolerance) -> Result<RepFile> {
        let source = self.group.build(tol)?.into_source();
        let unwrap = |ms: Vec<MatrixJson>| ms.into_iter().map(|m| m.0).collect::<Vec<_>>();
        let rep = match (&*source, self.matrices, self.generator_images) {
            (SymmetrySource::Finite(_), Some(ms), None) => Representation::from_all_matrices(source, unwrap(ms), self.name)?,
            (SymmetrySource::Lie(_), None, Some(ims)) => Representation::from_generator_images(source, unwrap(ims), self.name)?,
            _ => {
                return Err(Error::InvalidParameter(
                    "finite groups need \"matrices\", Lie algebras need \"generator_images\"".into(),
                ))
            }
        };
        rep.validate(tol)?;
        match self.action.as_deref() {
            None => Ok(RepFile::Plain(rep)),
            Some("adjoint") => Ok(RepFile::Adjoint(adjoint_action(&rep))),
            Some(other) => Err(Error::InvalidParameter(format!("unknown action {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{lie_closure, make_dihedral};
    use crate::numerics::{embed, pauli_y, pauli_z, vectorize};
    use crate::random::{ginibre, random_pure_state};

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).norm() <= tol
    }

    fn s3_index(p: &[usize]) -> usize {
        permutations_lex(3).iter().position(|q| q == p).unwrap()
    }

    #[test]
    fn trivial_reps() {
        let r = trivial_rep(make_cyclic(2).unwrap(), 3);
        for m in r.all_representatives() {
            assert_eq!(m, identity(3));
        }
        assert_eq!(verify_homomorphism(&r), 0.0);
        let l = trivial_rep(su2_basis(), 2);
        assert!(l.action_generators().iter().all(|m| m.norm() == 0.0));
        assert_eq!(verify_homomorphism(&l), 0.0);
    }

    #[test]
    fn qubit_permutations() {
        let r = perm_rep_qubits(3).unwrap();
        let t12 = r.representative(s3_index(&[1, 0, 2]));
        assert_eq!(t12, kron(&swap(2), &identity(2)));
        // |i₁i₂i₃⟩ = |011⟩ ↦ |101⟩
        assert_eq!(t12[(0b101, 0b011)], ONE);
        assert_eq!(r.representative(0), identity(8));
        let t23 = r.representative(s3_index(&[0, 2, 1]));
        let c123 = r.representative(s3_index(&[1, 2, 0]));
        assert!(close(&(&t12 * &t23), &c123, 0.0));
        assert!(verify_homomorphism(&r) < 1e-12);
        // the 3-cycle sends slot 1 to slot 2: |100⟩ ↦ |010⟩
        assert_eq!(c123[(0b010, 0b100)], ONE);
    }

    #[test]
    fn z2_reps() {
        let b1 = bitflip_rep(1).unwrap();
        assert_eq!(b1.representative(1), pauli_x());
        let b2 = bitflip_rep(2).unwrap();
        assert_eq!(b2.representative(1), kron(&pauli_x(), &pauli_x()));
        let s = swap_rep();
        let m = s.representative(1);
        assert_eq!(m, swap(2));
        assert!(close(&(&m * &m), &identity(4), 0.0));
        assert!(bitflip_rep(0).is_err());
    }

    #[test]
    fn triangle_rep() {
        let r = dihedral_rep_s3();
        let w = c(0.0, std::f64::consts::TAU / 3.0).exp();
        let rot = r.representative(s3_index(&[1, 2, 0]));
        assert!(close(&rot, &diag(&[w, w.conj()]), 1e-15));
        let refl = r.representative(s3_index(&[1, 0, 2]));
        assert_eq!(refl, pauli_x());
        assert!(close(&(&rot * &rot * &rot), &identity(2), 1e-14));
        assert!(close(&(&refl * &refl), &identity(2), 0.0));
        assert!(close(&(&refl * &rot * &refl), &diag(&[w.conj(), w]), 1e-15));
        assert!(verify_homomorphism(&r) < 1e-14);
        assert!(r.structure_residual() < 1e-14);
    }

    #[test]
    fn su2_fundamental_samples() {
        let r = su2_fundamental();
        assert_eq!(r.action_generators()[2], pauli_z().scale(0.5));
        assert!(verify_homomorphism(&r) < 1e-15);
        for seed in 0..20 {
            let u = r.sample_element(seed, 8);
            assert!((u.determinant() - ONE).norm() < 1e-9);
            // u = c₀1 + i(c₁X + c₂Y + c₃Z) with real c and Σc² = 1
            let c0 = u.trace() / 2.0;
            let cs: Vec<_> = [pauli_x(), pauli_y(), pauli_z()]
                .iter()
                .map(|p| (p * &u).trace() / c(0.0, 2.0))
                .collect();
            assert!(c0.im.abs() < 1e-12 && cs.iter().all(|z| z.im.abs() < 1e-12));
            let norm: f64 = c0.re * c0.re + cs.iter().map(|z| z.re * z.re).sum::<f64>();
            assert!((norm - 1.0).abs() < 1e-9);
        }
        let zero_path = crate::groups::product_of_exponentials(r.action_generators(), &[(0, 0.0)]);
        assert!(close(&zero_path, &identity(2), 1e-14));
    }

    #[test]
    fn tensor_powers() {
        let f = su2_fundamental();
        let t = tensor_power(&f, 2).unwrap();
        let z = pauli_z().scale(0.5);
        let expect = kron(&z, &identity(2)) + kron(&identity(2), &z);
        assert!(close(&t.action_generators()[2], &expect, 0.0));
        assert!(verify_homomorphism(&t) < 1e-14);
        assert_eq!(tensor_power(&f, 1).unwrap().action_generators(), f.action_generators());
        let b = tensor_power(&bitflip_rep(1).unwrap(), 2).unwrap();
        assert_eq!(b.representative(1), kron(&pauli_x(), &pauli_x()));
        // sampled U⊗U commute with SWAP
        for seed in 0..10 {
            let u = t.sample_element(seed, 10);
            assert!(commutator(&u, &swap(2)).norm() < 1e-9);
        }
    }

    #[test]
    fn leibniz_rule() {
        let t = tensor_power(&su2_fundamental(), 2).unwrap();
        let f = su2_fundamental();
        let mut r = rng(4);
        for a in 0..3 {
            let v = ComplexMatrix::from_column_slice(2, 1, random_pure_state(2, &mut r).as_slice());
            let w = ComplexMatrix::from_column_slice(2, 1, random_pure_state(2, &mut r).as_slice());
            let lhs = &t.action_generators()[a] * kron(&v, &w);
            let rhs = kron(&(&f.action_generators()[a] * &v), &w) + kron(&v, &(&f.action_generators()[a] * &w));
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn direct_sums_and_sources() {
        let f = su2_fundamental();
        let spin1 = adjoint_action(&f);
        let s = direct_sum(&f, &trivial_rep(&f, 1)).unwrap();
        assert_eq!(s.dim(), 3);
        assert!(verify_homomorphism(&s) < 1e-14);
        let u = s.sample_element(3, 6);
        assert!((u[(2, 2)] - ONE).norm() < 1e-12 && u[(0, 2)].norm() < 1e-12 && u[(2, 1)].norm() < 1e-12);
        assert!(direct_sum(&spin1.rep, &trivial_rep(&f, 1)).is_ok());
        assert_eq!(direct_sum(&f, &swap_rep()).unwrap_err(), Error::SourceMismatch);
        // independent but equal sources are compatible
        let other = trivial_rep(su2_basis(), 1);
        assert!(direct_sum(&f, &other).is_ok());
    }

    #[test]
    fn duals() {
        let t = trivial_rep(make_cyclic(3).unwrap(), 2);
        assert_eq!(dual(&t).all_representatives(), t.all_representatives());
        for r in [dihedral_rep_s3(), perm_rep_qubits(3).unwrap(), left_regular_rep(&make_dihedral(4).unwrap()).unwrap()] {
            let d = dual(&r);
            assert!(verify_homomorphism(&d) < 1e-13);
            assert!(verify_homomorphism(&dual(&d)) < 1e-13);
        }
        let f = dual(&su2_fundamental());
        assert!(verify_homomorphism(&f) < 1e-14);
        assert!(f.structure_residual() < 1e-15);
    }

    #[test]
    fn adjoint_action_on_lowering_operator() {
        let ad = adjoint_action(&su2_fundamental());
        assert!(verify_homomorphism(&ad.rep) < 1e-14);
        // σ⁻ = (X + iY)/2 = |0⟩⟨1|; [Z/2, σ⁻] = +σ⁻
        let sm = (pauli_x() + pauli_y() * c(0.0, 1.0)).scale(0.5);
        let v = vectorize(&sm);
        let out = &ad.rep.action_generators()[2] * &v;
        assert!((out - &v).norm() < 1e-15);
        let sp = sm.adjoint();
        let out = &ad.rep.action_generators()[2] * vectorize(&sp);
        assert!((out + vectorize(&sp)).norm() < 1e-15);
    }

    #[test]
    fn adjoint_action_is_an_isometry() {
        let mut r = rng(8);
        for rep in [dihedral_rep_s3(), swap_rep()] {
            let ad = adjoint_action(&rep);
            assert!(verify_homomorphism(&ad.rep) < 1e-13);
            for m in ad.rep.all_representatives() {
                let a = vectorize(&ginibre(rep.dim(), rep.dim(), &mut r));
                let b = vectorize(&ginibre(rep.dim(), rep.dim(), &mut r));
                let before = a.dotc(&b);
                let after = (&m * &a).dotc(&(&m * &b));
                assert!((before - after).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn regular_reps() {
        let l2 = left_regular_rep(&make_cyclic(2).unwrap()).unwrap();
        assert_eq!(l2.representative(1), pauli_x());
        assert_eq!(l2.representative(0), identity(2));
        let l3 = left_regular_rep(&make_cyclic(3).unwrap()).unwrap();
        let g = l3.representative(1);
        assert_eq!(g[(1, 0)], ONE);
        assert_eq!(g[(2, 1)], ONE);
        assert_eq!(g[(0, 2)], ONE);
        assert!(close(&(&g * &g * &g), &identity(3), 0.0));
        let d4 = left_regular_rep(&make_dihedral(4).unwrap()).unwrap();
        assert!(verify_homomorphism(&d4) < 1e-15);
    }

    #[test]
    fn perturbation_is_detected() {
        let r = perm_rep_qubits(3).unwrap();
        let mut ms = r.all_representatives();
        ms[3][(0, 0)] += c(1e-3, 0.0);
        let bad = Representation::from_all_matrices(r.source(), ms, "bad").unwrap();
        assert!(verify_homomorphism(&bad) >= 1e-4);
        assert!(bad.validate(&Tolerance::default()).is_err());

        let f = su2_fundamental();
        let mut ims = f.action_generators().to_vec();
        ims[0][(0, 1)] += c(1e-3, 0.0);
        ims[0][(1, 0)] += c(1e-3, 0.0);
        let bad = Representation::from_generator_images(f.source(), ims, "bad").unwrap();
        assert!(verify_homomorphism(&bad) >= 1e-4);
    }

    #[test]
    fn lazy_representatives_match_eager() {
        // S_5 exceeds the eager cap; its representatives come from words.
        let r = perm_rep(2, 5).unwrap();
        let g = r.group().unwrap().clone();
        let lazy = Representation::from_generator_matrices(
            r.source(),
            r.action_generators().to_vec(),
            "lazy",
        )
        .unwrap();
        assert!(matches!(lazy.flavor(), Flavor::Finite { matrices: None, .. }));
        let perms = permutations_lex(5);
        for e in [0, 7, 33, 119] {
            assert_eq!(lazy.representative(e), permutation_operator(&perms[e], 2));
        }
        assert!(verify_homomorphism(&lazy) < 1e-14);
        assert_eq!(g.order(), 120);
    }

    #[test]
    fn translations() {
        let t = translation_rep(4).unwrap();
        let g = t.representative(1);
        // |1000⟩ ↦ |0100⟩
        assert_eq!(g[(0b0100, 0b1000)], ONE);
        let zz = embed(&pauli_z(), 0, 4, 2);
        let expect = embed(&pauli_z(), 1, 4, 2);
        assert!(close(&(&g * zz * g.adjoint()), &expect, 0.0));
        assert!(verify_homomorphism(&t) < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let tol = Tolerance::default();
        for r in [dihedral_rep_s3(), swap_rep(), su2_fundamental(), tensor_power(&su2_fundamental(), 2).unwrap()] {
            let s = r.to_json().unwrap();
            let back = Representation::from_json(&s, &tol).unwrap();
            let back = back.base();
            assert_eq!(back.to_json().unwrap(), s);
            assert_eq!(back.dim(), r.dim());
        }
        let doc = serde_json::to_string(&RepDocument::adjoint(&swap_rep())).unwrap();
        assert!(Representation::from_json(&doc, &tol).unwrap().is_adjoint());
        // a corrupted matrix is rejected at load time
        let mut doc = RepDocument::plain(&dihedral_rep_s3());
        doc.matrices.as_mut().unwrap()[2].0[(0, 0)] += c(1e-3, 0.0);
        let s = serde_json::to_string(&doc).unwrap();
        assert!(matches!(
            Representation::from_json(&s, &tol),
            Err(Error::NotAHomomorphism { .. })
        ));
    }

    #[test]
    fn lie_closure_source_with_defining_rep() {
        let tol = Tolerance::default();
        let alg = lie_closure(&[pauli_x(), pauli_y()], &tol).unwrap();
        let r = defining_rep(alg);
        assert!(verify_homomorphism(&r) < 1e-14);
    }
}
