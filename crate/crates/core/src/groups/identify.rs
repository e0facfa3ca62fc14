use super::{make_cyclic, make_cyclic_product, make_dihedral, make_symmetric, FiniteGroup};

/// Largest order handled by [`identify_small_group`].
pub const MAX_IDENTIFY_ORDER: usize = 24;

/// Names a small group up to isomorphism.
///
/// Candidates are `Z_n`, `S_n` (n ≤ 4), `D_n` (3 ≤ n ≤ 12) and `Z_a×Z_b` with
/// `a | b`, tried in that order. Returns `"unknown"` when none matches or the
/// order exceeds [`MAX_IDENTIFY_ORDER`].
pub fn identify_small_group(g: &FiniteGroup) -> String {
    let n = g.order();
    if n > MAX_IDENTIFY_ORDER {
        return "unknown".into();
    }
    for (name, candidate) in candidates(n) {
        if find_isomorphism(&candidate, g).is_some() {
            return name;
        }
    }
    "unknown".into()
}

fn candidates(n: usize) -> Vec<(String, FiniteGroup)> {
    let mut out = vec![(format!("Z_{n}"), make_cyclic(n).expect("n ≥ 1"))];
    for (k, fact) in [(3usize, 6usize), (4, 24)] {
        if fact == n {
            out.push((format!("S_{k}"), make_symmetric(k).expect("small degree")));
        }
    }
    if n.is_multiple_of(2) && (3..=12).contains(&(n / 2)) {
        out.push((format!("D_{}", n / 2), make_dihedral(n / 2).expect("n ≥ 3")));
    }
    for a in 2..=n {
        if n.is_multiple_of(a) {
            let b = n / a;
            if b >= a && b.is_multiple_of(a) {
                out.push((format!("Z_{a}xZ_{b}"), make_cyclic_product(a, b).expect("positive")));
            }
        }
    }
    out
}

fn order_profile(g: &FiniteGroup) -> Vec<usize> {
    let mut p: Vec<usize> = (0..g.order()).map(|a| g.element_order(a)).collect();
    p.sort_unstable();
    p
}

/// Searches for an isomorphism `source → target` by backtracking over the
/// images of the source generators, pruning on element orders.
///
/// Returns `map[source_element] = target_element`.
pub fn find_isomorphism(source: &FiniteGroup, target: &FiniteGroup) -> Option<Vec<usize>> {
    if source.order() != target.order() || source.is_abelian() != target.is_abelian() {
        return None;
    }
    if order_profile(source) != order_profile(target) {
        return None;
    }
    let gens = source.generators();
    let words = source.shortest_words();
    let options: Vec<Vec<usize>> = gens
        .iter()
        .map(|&s| {
            let k = source.element_order(s);
            (0..target.order()).filter(|&t| target.element_order(t) == k).collect()
        })
        .collect();
    let mut images = Vec::with_capacity(gens.len());
    search(source, target, &words, &options, &mut images)
}

fn search(
    source: &FiniteGroup,
    target: &FiniteGroup,
    words: &[Vec<usize>],
    options: &[Vec<usize>],
    images: &mut Vec<usize>,
) -> Option<Vec<usize>> {
    if images.len() == options.len() {
        return try_extend(source, target, words, images);
    }
    for &t in &options[images.len()] {
        images.push(t);
        if let Some(map) = search(source, target, words, options, images) {
            return Some(map);
        }
        images.pop();
    }
    None
}

fn try_extend(
    source: &FiniteGroup,
    target: &FiniteGroup,
    words: &[Vec<usize>],
    images: &[usize],
) -> Option<Vec<usize>> {
    let n = source.order();
    let map: Vec<usize> = words
        .iter()
        .map(|w| w.iter().fold(target.identity(), |acc, &i| target.mul(acc, images[i])))
        .collect();
    let mut hit = vec![false; n];
    for &m in &map {
        if std::mem::replace(&mut hit[m], true) {
            return None;
        }
    }
    for a in 0..n {
        for b in 0..n {
            if map[source.mul(a, b)] != target.mul(map[a], map[b]) {
                return None;
            }
        }
    }
    Some(map)
}
