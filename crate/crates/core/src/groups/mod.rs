//! Finite groups as composition tables and Lie algebras as Hermitian bases.
//!
//! Permutations compose right to left, `(σ·τ)(i) = σ(τ(i))`: the product
//! `σ·τ` first applies `τ`, then `σ`. Acting on tensor slots, `P_π` moves the
//! content of slot `k` to slot `π(k)`, which makes `π ↦ P_π` a homomorphism
//! under this convention.

mod identify;
mod lie;
mod spec;

use std::collections::VecDeque;

use crate::numerics::{identity, ComplexMatrix};
use crate::{Error, Result};

pub use identify::identify_small_group;
pub use lie::{lie_closure, product_of_exponentials, sample_lie_group_element, su2_basis, u_basis, LieAlgebraBasis};
pub use spec::{GroupSpec, SymmetrySource};

/// Largest order for which axioms are checked exhaustively.
pub const MAX_VERIFIED_ORDER: usize = 512;

/// Group given by its composition table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    mul: Vec<usize>,
    identity: usize,
    inverses: Vec<usize>,
    generators: Vec<usize>,
    labels: Vec<String>,
}

/// Outcome of [`verify_group_axioms`]. Empty violation lists mean a valid group.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct AxiomReport {
    pub closure_ok: bool,
    pub associativity_violations: Vec<(usize, usize, usize)>,
    pub identity_ok: bool,
    pub inverses_ok: bool,
    /// Elements without a two-sided inverse.
    pub missing_inverses: Vec<usize>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.closure_ok
            && self.associativity_violations.is_empty()
            && self.identity_ok
            && self.inverses_ok
    }
}

impl FiniteGroup {
    /// Builds a group from a composition table `table[a][b] = a·b`.
    ///
    /// The identity, inverses and a generating set are derived from the table,
    /// and the axioms are checked exhaustively.
    pub fn from_table(table: Vec<Vec<usize>>, labels: Option<Vec<String>>) -> Result<Self> {
        let order = table.len();
        if order == 0 {
            return Err(Error::NotAGroup("empty table".into()));
        }
        if order > MAX_VERIFIED_ORDER {
            return Err(Error::InvalidParameter(format!(
                "order {order} exceeds {MAX_VERIFIED_ORDER}; use a trusted table"
            )));
        }
        let g = Self::from_table_trusted(table, labels)?;
        let report = verify_group_axioms(&g)?;
        if !report.is_clean() {
            return Err(Error::NotAGroup(format!("{report:?}")));
        }
        Ok(g)
    }

    /// Like [`from_table`](Self::from_table) but skips the associativity check.
    pub fn from_table_trusted(table: Vec<Vec<usize>>, labels: Option<Vec<String>>) -> Result<Self> {
        let order = table.len();
        if order == 0 || table.iter().any(|r| r.len() != order) {
            return Err(Error::NotAGroup("table must be square and non-empty".into()));
        }
        if table.iter().flatten().any(|&x| x >= order) {
            return Err(Error::NotAGroup("table entry out of range".into()));
        }
        let mul: Vec<usize> = table.into_iter().flatten().collect();
        let identity = (0..order)
            .find(|&e| (0..order).all(|a| mul[e * order + a] == a && mul[a * order + e] == a))
            .ok_or_else(|| Error::NotAGroup("no identity element".into()))?;
        let inverses = (0..order)
            .map(|a| {
                (0..order)
                    .find(|&b| mul[a * order + b] == identity && mul[b * order + a] == identity)
                    .ok_or_else(|| Error::NotAGroup(format!("element {a} has no inverse")))
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = match labels {
            Some(l) if l.len() == order => l,
            Some(l) => {
                return Err(Error::InvalidParameter(format!(
                    "{} labels for {order} elements",
                    l.len()
                )))
            }
            None => (0..order).map(|k| format!("g{k}")).collect(),
        };
        let mut g = FiniteGroup {
            order,
            mul,
            identity,
            inverses,
            generators: vec![],
            labels,
        };
        g.generators = g.greedy_generators();
        Ok(g)
    }

    /// Assembles a group from its parts without any checking.
    ///
    /// Intended for tests that need deliberately broken tables.
    pub fn from_raw_parts(
        mul: Vec<Vec<usize>>,
        identity: usize,
        inverses: Vec<usize>,
        generators: Vec<usize>,
        labels: Vec<String>,
    ) -> Self {
        let order = mul.len();
        FiniteGroup {
            order,
            mul: mul.into_iter().flatten().collect(),
            identity,
            inverses,
            generators,
            labels,
        }
    }

    /// Closes a set of invertible matrices under multiplication.
    ///
    /// Returns the group together with the matrix of each element; element 0
    /// is the identity and the given matrices are the generators.
    pub fn from_matrices(
        generators: &[ComplexMatrix],
        tol: f64,
        max_order: usize,
    ) -> Result<(Self, Vec<ComplexMatrix>)> {
        let dim = generators.first().map_or(1, |g| g.nrows());
        if generators.iter().any(|g| g.shape() != (dim, dim)) {
            return Err(Error::DimensionMismatch("generators must share a square shape".into()));
        }
        let find = |elems: &[ComplexMatrix], m: &ComplexMatrix| elems.iter().position(|e| (e - m).norm() <= tol);
        let mut elems = vec![identity(dim)];
        let mut gen_idx = Vec::new();
        for g in generators {
            match find(&elems, g) {
                Some(k) => gen_idx.push(k),
                None => {
                    elems.push(g.clone());
                    gen_idx.push(elems.len() - 1);
                }
            }
        }
        let mut frontier = 0;
        while frontier < elems.len() {
            let a = elems[frontier].clone();
            for g in generators {
                let p = &a * g;
                if find(&elems, &p).is_none() {
                    if elems.len() >= max_order {
                        return Err(Error::InvalidParameter(format!(
                            "matrix group exceeds order {max_order}"
                        )));
                    }
                    elems.push(p);
                }
            }
            frontier += 1;
        }
        let order = elems.len();
        let mut table = vec![vec![0; order]; order];
        for a in 0..order {
            for b in 0..order {
                let p = &elems[a] * &elems[b];
                table[a][b] = find(&elems, &p).ok_or_else(|| {
                    Error::NotAGroup("matrix set not closed at the given tolerance".into())
                })?;
            }
        }
        let mut g = Self::from_table(table, None)?;
        gen_idx.dedup();
        g.generators = gen_idx;
        Ok((g, elems))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        self.mul.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    pub fn power(&self, a: usize, k: usize) -> usize {
        (0..k).fold(self.identity, |acc, _| self.mul(acc, a))
    }

    /// Smallest `k ≥ 1` with `a^k = e`.
    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, a);
            k += 1;
            if k > self.order {
                // Only reachable for tables that are not groups.
                return 0;
            }
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..a).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn center(&self) -> Vec<usize> {
        (0..self.order)
            .filter(|&a| (0..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
            .collect()
    }

    /// Elements reachable from `gens` (always contains the identity).
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        seen[self.identity] = true;
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        (0..self.order).filter(|&k| seen[k]).collect()
    }

    /// Shortest word in the generators for each element, found by BFS over the
    /// Cayley graph. `words[g]` lists generator positions `[i₁, …, i_L]` with
    /// `g = s_{i₁} · … · s_{i_L}`; ties resolve to the first word found.
    pub fn shortest_words(&self) -> Vec<Vec<usize>> {
        let mut words: Vec<Option<Vec<usize>>> = vec![None; self.order];
        words[self.identity] = Some(vec![]);
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for (i, &s) in self.generators.iter().enumerate() {
                let y = self.mul(x, s);
                if words[y].is_none() {
                    let mut w = words[x].clone().expect("visited");
                    w.push(i);
                    words[y] = Some(w);
                    queue.push_back(y);
                }
            }
        }
        words
            .into_iter()
            .map(|w| w.expect("generators generate the group"))
            .collect()
    }

    /// Conjugates the table by a relabelling: element `a` becomes `perm[a]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.order;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter("relabelling must be a permutation".into()));
        }
        let mut table = vec![vec![0; n]; n];
        let mut labels = vec![String::new(); n];
        for a in 0..n {
            labels[perm[a]] = self.labels[a].clone();
            for b in 0..n {
                table[perm[a]][perm[b]] = perm[self.mul(a, b)];
            }
        }
        let mut g = Self::from_table_trusted(table, Some(labels))?;
        g.generators = self.generators.iter().map(|&s| perm[s]).collect();
        Ok(g)
    }

    fn greedy_generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut reached = self.closure(&gens);
        for a in 0..self.order {
            if reached.len() == self.order {
                break;
            }
            if reached.binary_search(&a).is_err() {
                gens.push(a);
                reached = self.closure(&gens);
            }
        }
        if gens.is_empty() {
            gens.push(self.identity);
        }
        gens
    }
}

/// Exhaustively checks closure, associativity, identity and inverses.
pub fn verify_group_axioms(g: &FiniteGroup) -> Result<AxiomReport> {
    let n = g.order;
    if n > MAX_VERIFIED_ORDER {
        return Err(Error::InvalidParameter(format!(
            "exhaustive check limited to order {MAX_VERIFIED_ORDER}, got {n}"
        )));
    }
    let mut report = AxiomReport {
        closure_ok: g.mul.len() == n * n && g.mul.iter().all(|&x| x < n),
        ..Default::default()
    };
    if !report.closure_ok {
        return Ok(report);
    }
    for a in 0..n {
        for b in 0..n {
            let ab = g.mul(a, b);
            for k in 0..n {
                if g.mul(ab, k) != g.mul(a, g.mul(b, k)) {
                    report.associativity_violations.push((a, b, k));
                }
            }
        }
    }
    let e = g.identity;
    report.identity_ok = e < n && (0..n).all(|a| g.mul(e, a) == a && g.mul(a, e) == a);
    report.missing_inverses = (0..n)
        .filter(|&a| {
            let inv = g.inverses.get(a).copied().unwrap_or(n);
            inv >= n || g.mul(a, inv) != e || g.mul(inv, a) != e
        })
        .collect();
    report.inverses_ok = report.missing_inverses.is_empty();
    Ok(report)
}

/// Cyclic group `Z_n`; element `k` is `g^k`.
pub fn make_cyclic(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(Error::InvalidParameter("cyclic group needs n ≥ 1".into()));
    }
    let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
    let labels = (0..n)
        .map(|k| match k {
            0 => "e".to_string(),
            1 => "g".to_string(),
            _ => format!("g^{k}"),
        })
        .collect();
    let mut g = FiniteGroup::from_table_trusted(table, Some(labels))?;
    g.generators = vec![if n == 1 { 0 } else { 1 }];
    Ok(g)
}

/// All permutations of `0..n` in lexicographic order of one-line notation.
pub fn permutations_lex(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    loop {
        // next permutation
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
        p.swap(i - 1, j);
        p[i..].reverse();
        out.push(p.clone());
    }
}

/// Cycle notation with 1-based letters, e.g. `(1 2 3)`; the identity is `()`.
pub fn cycle_notation(perm: &[usize]) -> String {
    let mut seen = vec![false; perm.len()];
    let mut s = String::new();
    for start in 0..perm.len() {
        if seen[start] || perm[start] == start {
            continue;
        }
        let mut cycle = vec![];
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            cycle.push((k + 1).to_string());
            k = perm[k];
        }
        s.push('(');
        s.push_str(&cycle.join(" "));
        s.push(')');
    }
    if s.is_empty() {
        "()".into()
    } else {
        s
    }
}

/// Largest `n` accepted by [`make_symmetric`].
pub const MAX_SYMMETRIC_DEGREE: usize = 6;

/// Symmetric group `S_n`. Element `k` is the `k`-th permutation of
/// [`permutations_lex`]; generators are the adjacent transpositions.
pub fn make_symmetric(n: usize) -> Result<FiniteGroup> {
    if !(1..=MAX_SYMMETRIC_DEGREE).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "symmetric group needs 1 ≤ n ≤ {MAX_SYMMETRIC_DEGREE}, got {n}"
        )));
    }
    let perms = permutations_lex(n);
    let index = |p: &[usize]| perms.binary_search_by(|q| q.as_slice().cmp(p)).expect("is a permutation");
    let table: Vec<Vec<usize>> = perms
        .iter()
        .map(|s| {
            perms
                .iter()
                .map(|t| {
                    let st: Vec<usize> = (0..n).map(|i| s[t[i]]).collect();
                    index(&st)
                })
                .collect()
        })
        .collect();
    let labels = perms.iter().map(|p| cycle_notation(p)).collect();
    let mut g = FiniteGroup::from_table_trusted(table, Some(labels))?;
    g.generators = if n == 1 {
        vec![0]
    } else {
        (0..n - 1)
            .map(|i| {
                let mut p: Vec<usize> = (0..n).collect();
                p.swap(i, i + 1);
                index(&p)
            })
            .collect()
    };
    Ok(g)
}

/// Dihedral group `D_n` of order `2n`. Element `k + n·e` is `r^k s^e`;
/// generators are `[r, s]` with `s r s = r⁻¹`.
pub fn make_dihedral(n: usize) -> Result<FiniteGroup> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("dihedral group needs n ≥ 3, got {n}")));
    }
    let split = |x: usize| (x % n, x / n);
    let table = (0..2 * n)
        .map(|x| {
            let (a, e) = split(x);
            (0..2 * n)
                .map(|y| {
                    let (b, f) = split(y);
                    let rot = if e == 0 { (a + b) % n } else { (a + n - b) % n };
                    rot + n * ((e + f) % 2)
                })
                .collect()
        })
        .collect();
    let labels = (0..2 * n)
        .map(|x| {
            let (a, e) = split(x);
            match (a, e) {
                (0, 0) => "e".to_string(),
                (0, 1) => "s".to_string(),
                (1, 0) => "r".to_string(),
                (1, 1) => "rs".to_string(),
                (a, 0) => format!("r^{a}"),
                (a, _) => format!("r^{a}s"),
            }
        })
        .collect();
    let mut g = FiniteGroup::from_table_trusted(table, Some(labels))?;
    g.generators = vec![1, n];
    Ok(g)
}

/// Direct product `Z_a × Z_b`; element `(x, y)` has index `x·b + y`.
pub fn make_cyclic_product(a: usize, b: usize) -> Result<FiniteGroup> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidParameter("factors must be positive".into()));
    }
    let n = a * b;
    let table = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| ((x / b + y / b) % a) * b + (x % b + y % b) % b)
                .collect()
        })
        .collect();
    let labels = (0..n).map(|x| format!("({},{})", x / b, x % b)).collect();
    let mut g = FiniteGroup::from_table_trusted(table, Some(labels))?;
    g.generators = vec![b % n, 1 % n];
    g.generators.dedup();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_clean(g: &FiniteGroup) {
        let r = verify_group_axioms(g).unwrap();
        assert!(r.is_clean(), "{r:?}");
        assert_eq!(g.closure(g.generators()).len(), g.order());
    }

    #[test]
    fn cyclic_groups() {
        let z2 = make_cyclic(2).unwrap();
        // Bit-flip table: {1, X} with X·X = 1.
        assert_eq!(z2.table(), vec![vec![0, 1], vec![1, 0]]);
        let z1 = make_cyclic(1).unwrap();
        assert_eq!(z1.order(), 1);
        let z4 = make_cyclic(4).unwrap();
        let g = z4.generators()[0];
        assert_eq!(z4.power(g, 4), z4.identity());
        assert_ne!(z4.power(g, 2), z4.identity());
        assert!(z4.is_abelian());
        assert!(make_cyclic(0).is_err());
        for g in [z1, z2, z4] {
            assert_clean(&g);
        }
    }

    #[test]
    fn symmetric_groups() {
        let s3 = make_symmetric(3).unwrap();
        assert_eq!(s3.order(), 6);
        assert!(!s3.is_abelian());
        let find = |label: &str| s3.labels().iter().position(|l| l == label).unwrap();
        // (12)·(23): apply (23) first, then (12); 1→2, 2→3, 3→1.
        assert_eq!(s3.mul(find("(1 2)"), find("(2 3)")), find("(1 2 3)"));
        assert_eq!(make_symmetric(1).unwrap().order(), 1);
        assert!(make_symmetric(0).is_err());
        assert!(make_symmetric(7).is_err());
        for n in 1..=5 {
            let g = make_symmetric(n).unwrap();
            assert_clean(&g);
        }
        assert_eq!(make_symmetric(6).unwrap().order(), 720);
    }

    #[test]
    fn dihedral_groups() {
        let d4 = make_dihedral(4).unwrap();
        assert_eq!(d4.order(), 8);
        let (r, s) = (d4.generators()[0], d4.generators()[1]);
        assert_eq!(d4.power(r, 4), d4.identity());
        assert_eq!(d4.mul(d4.mul(s, r), s), d4.inverse(r));
        // Brute-force center: {e, r²}.
        assert_eq!(d4.center(), vec![0, 2]);
        assert!(make_dihedral(2).is_err());
        for n in 3..=8 {
            assert_clean(&make_dihedral(n).unwrap());
        }
    }

    #[test]
    fn corrupted_table_is_reported() {
        let z3 = make_cyclic(3).unwrap();
        let mut table = z3.table();
        table[1][2] = 1;
        let broken = FiniteGroup::from_raw_parts(table.clone(), 0, vec![0, 2, 1], vec![1], vec!["a".into(); 3]);
        let r = verify_group_axioms(&broken).unwrap();
        assert!(!r.associativity_violations.is_empty());
        assert!(!r.is_clean());
        assert!(FiniteGroup::from_table(table, None).is_err());
        assert_clean(&make_cyclic(1).unwrap());
    }

    #[test]
    fn words_reproduce_elements() {
        let s4 = make_symmetric(4).unwrap();
        for (g, w) in s4.shortest_words().iter().enumerate() {
            let prod = w.iter().fold(s4.identity(), |acc, &i| s4.mul(acc, s4.generators()[i]));
            assert_eq!(prod, g);
        }
    }

    #[test]
    fn matrix_closure_of_bit_flip() {
        let (g, mats) = FiniteGroup::from_matrices(&[crate::numerics::pauli_x()], 1e-12, 64).unwrap();
        assert_eq!(g.order(), 2);
        assert_eq!(mats.len(), 2);
        assert_eq!(g.table(), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn cycle_notation_labels() {
        assert_eq!(cycle_notation(&[1, 2, 0]), "(1 2 3)");
        assert_eq!(cycle_notation(&[0, 1, 2]), "()");
        assert_eq!(permutations_lex(3).len(), 6);
    }
}
