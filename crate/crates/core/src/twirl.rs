//! Twirls: group averages onto invariant operators and equivariant channels.
//!
//! Finite groups are averaged exactly over their elements. Lie-group (Haar)
//! twirls are computed as the orthogonal projection onto the commutant, which
//! is the image of the twirl; no quadrature over the group is ever done.

use std::fmt;

use serde::Serialize;

use crate::decomposition::{commutant_basis, CommutantBasis};
use crate::groups::{permutations_lex, FiniteGroup};
use crate::numerics::{
    commutator, conjugation_superoperator, devectorize, herm_eig, hermitian_part, identity, kron, vectorize, zeros,
    ComplexMatrix, Tolerance,
};
use crate::random::{haar_unitary, rng};
use crate::representations::{permutation_operator, same_source, RepOnOperators, Representation};
use crate::{Error, Result};

/// Largest carrier `d^k` accepted by [`k_design_twirl`].
pub const MAX_DESIGN_DIM: usize = 64;
pub const MAX_DESIGN_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwirlMode {
    FiniteAverage,
    CommutantProjection,
}

impl fmt::Display for TwirlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwirlMode::FiniteAverage => "finite-average",
            TwirlMode::CommutantProjection => "commutant-projection",
        })
    }
}

/// How to twirl operators on the carrier of `rep`.
#[derive(Clone, Debug)]
pub struct TwirlContext {
    pub rep: Representation,
    pub mode: TwirlMode,
    pub commutant: Option<CommutantBasis>,
    elements: Vec<ComplexMatrix>,
}

impl TwirlContext {
    pub fn new(rep: &Representation, mode: TwirlMode, tol: &Tolerance) -> Result<Self> {
        match mode {
            TwirlMode::FiniteAverage => {
                if !rep.is_finite() {
                    return Err(Error::InvalidParameter(
                        "finite averaging needs a finite group; use commutant projection".into(),
                    ));
                }
                Ok(TwirlContext {
                    rep: rep.clone(),
                    mode,
                    commutant: None,
                    elements: rep.all_representatives(),
                })
            }
            TwirlMode::CommutantProjection => Ok(TwirlContext {
                rep: rep.clone(),
                mode,
                commutant: Some(commutant_basis(rep, tol)),
                elements: Vec::new(),
            }),
        }
    }

    /// Exact averaging for finite groups, projection for Lie algebras.
    pub fn auto(rep: &Representation, tol: &Tolerance) -> Result<Self> {
        let mode = if rep.is_finite() {
            TwirlMode::FiniteAverage
        } else {
            TwirlMode::CommutantProjection
        };
        Self::new(rep, mode, tol)
    }

    /// Twirl under the conjugation action of `ad`; operators live on the base carrier.
    pub fn for_operators(ad: &RepOnOperators, mode: TwirlMode, tol: &Tolerance) -> Result<Self> {
        Self::new(&ad.base, mode, tol)
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn twirl(&self, o: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.dim();
        if o.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}×{}, carrier is {d}",
                o.nrows(),
                o.ncols()
            )));
        }
        match self.mode {
            TwirlMode::FiniteAverage => {
                let mut acc = zeros(d, d);
                for r in &self.elements {
                    acc += r * o * r.adjoint();
                }
                Ok(acc.unscale(self.elements.len() as f64))
            }
            TwirlMode::CommutantProjection => self.commutant.as_ref().expect("projection mode").project(o),
        }
    }

    /// Largest `‖[x, R]‖_F` over the action generators and sampled elements.
    pub fn commutation_residual(&self, x: &ComplexMatrix, seed: u64) -> f64 {
        let mut ms = self.rep.action_generators().to_vec();
        ms.extend(self.rep.test_elements(20, seed));
        ms.iter().map(|m| commutator(x, m).norm()).fold(0.0, f64::max)
    }
}

pub fn twirl_operator(ctx: &TwirlContext, o: &ComplexMatrix) -> Result<ComplexMatrix> {
    ctx.twirl(o)
}

// ---------------------------------------------------------------------------
// channels, as matrices on row-major vectorised operators

fn channel_dims(phi: &ComplexMatrix) -> Result<(usize, usize)> {
    let side = |n: usize| {
        let r = (n as f64).sqrt().round() as usize;
        (r * r == n).then_some(r)
    };
    match (side(phi.ncols()), side(phi.nrows())) {
        (Some(din), Some(dout)) => Ok((din, dout)),
        _ => Err(Error::DimensionMismatch(format!(
            "superoperator shape {}×{} is not d_out²×d_in²",
            phi.nrows(),
            phi.ncols()
        ))),
    }
}

/// `Φ(ρ)` for a superoperator acting on row-major `vec ρ`.
pub fn apply_channel(phi: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (din, dout) = channel_dims(phi)?;
    if rho.shape() != (din, din) {
        return Err(Error::DimensionMismatch(format!("channel input is {din}×{din}")));
    }
    devectorize(&(phi * vectorize(rho)), dout, dout)
}

/// Choi matrix `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
pub fn choi_matrix(phi: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (din, dout) = channel_dims(phi)?;
    let mut j = zeros(din * dout, din * dout);
    for a in 0..din {
        for b in 0..din {
            let out = devectorize(&phi.column(a * din + b).into_owned(), dout, dout)?;
            j.view_mut((a * dout, b * dout), (dout, dout)).copy_from(&out);
        }
    }
    Ok(j)
}

/// `(most negative Choi eigenvalue or 0, Hermiticity residual, trace-preservation residual)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CptpResiduals {
    pub negativity: f64,
    pub hermiticity: f64,
    pub trace_preservation: f64,
}

impl CptpResiduals {
    pub fn worst(&self) -> f64 {
        self.negativity.max(self.hermiticity).max(self.trace_preservation)
    }
}

pub fn cptp_residuals(phi: &ComplexMatrix) -> Result<CptpResiduals> {
    let (din, dout) = channel_dims(phi)?;
    let j = choi_matrix(phi)?;
    let hermiticity = (&j - j.adjoint()).norm();
    let e = herm_eig(&hermitian_part(&j), &Tolerance::default())?;
    let negativity = (-e.eigenvalues[0]).max(0.0);
    // TP: Tr Φ(|a⟩⟨b|) = δ_ab, i.e. vec(1_out)ᵀ Φ = vec(1_in)ᵀ
    let tr_out = vectorize(&identity(dout)).transpose() * phi;
    let tp = (tr_out - vectorize(&identity(din)).transpose()).norm();
    Ok(CptpResiduals {
        negativity,
        hermiticity,
        trace_preservation: tp,
    })
}

pub fn check_cptp(phi: &ComplexMatrix, tol: &Tolerance) -> Result<()> {
    let r = cptp_residuals(phi)?;
    let limit = tol.threshold(phi.norm().max(1.0));
    if r.worst() > limit {
        return Err(Error::NotCptp(format!(
            "negativity {:e}, hermiticity {:e}, trace preservation {:e}",
            r.negativity, r.hermiticity, r.trace_preservation
        )));
    }
    Ok(())
}

pub fn identity_channel(d: usize) -> ComplexMatrix {
    identity(d * d)
}

/// `ρ ↦ Tr[ρ] 1/d_out`.
pub fn depolarizing_channel(din: usize, dout: usize) -> ComplexMatrix {
    (vectorize(&identity(dout)) * vectorize(&identity(din)).transpose()).unscale(dout as f64)
}

/// `ρ ↦ K ρ K†` for a single Kraus operator.
pub fn unitary_channel(k: &ComplexMatrix) -> ComplexMatrix {
    conjugation_superoperator(k)
}

fn finite_source<'a>(r: &'a Representation, group: &FiniteGroup) -> Result<&'a FiniteGroup> {
    match r.group() {
        Some(g) if g == group => Ok(g),
        _ => Err(Error::SourceMismatch),
    }
}

/// `(1/|G|) Σ_g V_g† Φ(U_g · U_g†) V_g` with `U = rep_in`, `V = rep_out`.
pub fn twirl_channel(
    rep_in: &Representation,
    rep_out: &Representation,
    phi: &ComplexMatrix,
    group: &FiniteGroup,
    tol: &Tolerance,
) -> Result<ComplexMatrix> {
    finite_source(rep_in, group)?;
    finite_source(rep_out, group)?;
    if !same_source(rep_in.source(), rep_out.source()) {
        return Err(Error::SourceMismatch);
    }
    let (din, dout) = channel_dims(phi)?;
    if din != rep_in.dim() || dout != rep_out.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel maps {din}→{dout}, reps act on {} and {}",
            rep_in.dim(),
            rep_out.dim()
        )));
    }
    check_cptp(phi, tol)?;
    let us = rep_in.all_representatives();
    let vs = rep_out.all_representatives();
    let mut acc = zeros(phi.nrows(), phi.ncols());
    for (u, v) in us.iter().zip(&vs) {
        acc += conjugation_superoperator(&v.adjoint()) * phi * conjugation_superoperator(u);
    }
    Ok(acc.unscale(us.len() as f64))
}

/// `max_g ‖Φ∘Ad_{U_g} − Ad_{V_g}∘Φ‖`.
pub fn channel_equivariance_residual(rep_in: &Representation, rep_out: &Representation, phi: &ComplexMatrix) -> f64 {
    rep_in
        .all_representatives()
        .iter()
        .zip(rep_out.all_representatives().iter())
        .map(|(u, v)| (phi * conjugation_superoperator(u) - conjugation_superoperator(v) * phi).norm())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// U(d) k-designs

/// `{P_π : π ∈ S_k}` on `(C^d)^⊗k`, lexicographic in `π`.
pub fn permutation_operators(d: usize, k: usize) -> Vec<ComplexMatrix> {
    permutations_lex(k).iter().map(|p| permutation_operator(p, d)).collect()
}

fn check_design(d: usize, k: usize) -> Result<usize> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidParameter("k-design twirl needs d, k ≥ 1".into()));
    }
    let dim = d.checked_pow(k as u32).unwrap_or(usize::MAX);
    if k > MAX_DESIGN_ORDER || dim > MAX_DESIGN_DIM {
        return Err(Error::DimensionTooLarge {
            dim,
            max: MAX_DESIGN_DIM,
        });
    }
    Ok(dim)
}

/// Exact `∫ U^{⊗k} O U^{†⊗k} dU` by projection onto the span of the
/// permutation operators. The Gram system is solved with a pseudo-inverse,
/// since the `P_π` are linearly dependent when `d < k`.
pub fn k_design_twirl(d: usize, k: usize, o: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = check_design(d, k)?;
    if o.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!("operator must be {dim}×{dim}")));
    }
    let ps = permutation_operators(d, k);
    let n = ps.len();
    let hs = |a: &ComplexMatrix, b: &ComplexMatrix| a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let gram = ComplexMatrix::from_fn(n, n, |i, j| hs(&ps[i], &ps[j]));
    let b = crate::numerics::ComplexVector::from_fn(n, |i, _| hs(&ps[i], o));
    let svd = gram.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let coeffs = svd
        .solve(&b, 1e-10 * smax)
        .expect("both singular factors were computed");
    Ok(ps
        .iter()
        .zip(coeffs.iter())
        .fold(zeros(dim, dim), |acc, (p, &c)| acc + p * c))
}

/// Haar-random `U(d)` element, deterministic per seed.
pub fn haar_sample_unitary(d: usize, seed: u64) -> ComplexMatrix {
    haar_unitary(d, &mut rng(seed))
}

/// Entry-wise Neumaier-compensated running sum of matrices.
struct CompensatedSum {
    sum: ComplexMatrix,
    comp: ComplexMatrix,
}

impl CompensatedSum {
    fn new(r: usize, c: usize) -> Self {
        CompensatedSum {
            sum: zeros(r, c),
            comp: zeros(r, c),
        }
    }

    fn add(&mut self, x: &ComplexMatrix) {
        fn step(s: &mut f64, c: &mut f64, x: f64) {
            let t = *s + x;
            if s.abs() >= x.abs() {
                *c += (*s - t) + x;
            } else {
                *c += (x - t) + *s;
            }
            *s = t;
        }
        for ((s, c), x) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(x.iter()) {
            step(&mut s.re, &mut c.re, x.re);
            step(&mut s.im, &mut c.im, x.im);
        }
    }

    fn total(self) -> ComplexMatrix {
        self.sum + self.comp
    }
}

/// Monte Carlo estimate of the `k`-fold Haar twirl from `samples` draws.
pub fn monte_carlo_twirl(d: usize, k: usize, o: &ComplexMatrix, samples: usize, seed: u64) -> Result<ComplexMatrix> {
    let dim = check_design(d, k)?;
    if o.shape() != (dim, dim) || samples == 0 {
        return Err(Error::InvalidParameter(format!("need a {dim}×{dim} operator and samples > 0")));
    }
    let mut g = rng(seed);
    let mut acc = CompensatedSum::new(dim, dim);
    for _ in 0..samples {
        let u = haar_unitary(d, &mut g);
        let uk = (1..k).fold(u.clone(), |a, _| kron(&a, &u));
        acc.add(&(&uk * o * uk.adjoint()));
    }
    Ok(acc.total().unscale(samples as f64))
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic rejection threshold of [`ks_statistic`] at level `alpha`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}
