use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::grid::{multi_index, one_layer, CubeSet};
use super::invariant::{check_isolation, invariant_part_by_pruning};
use super::outer_map::OuterMap;
use crate::error::{ConleyError, Result};

/// Pair of cube sets `P₁ ⊇ P₀` on a grid of the given shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinatorialIndexPair {
    pub shape: Vec<usize>,
    /// Ambient coordinates of the grid's frame.
    pub support: Vec<usize>,
    pub p1: CubeSet,
    pub p0: CubeSet,
    /// `S = P₁ ∖ P₀`.
    pub invariant: CubeSet,
    pub construction: PairConstruction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairConstruction {
    /// `P₁ = S ∪ (m(S) ∩ o(S))`.
    Collar,
    /// `P₁` = forward closure of `S` inside the region.
    ForwardClosure,
    /// Built directly, e.g. as a product.
    Explicit,
}

/// Failed index-pair condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairAxiom {
    /// The invariant part of `P₁` meets `P₀`.
    InvariantMeetsExit,
    /// `m(P₀) ∩ P₁ ⊄ P₀`.
    ExitNotPositivelyInvariant,
    /// A cube of `P₁ ∖ P₀` maps out of `P₁`.
    EscapeAvoidsExit,
    /// `P₀ ⊄ P₁`.
    NotNested,
}

impl CombinatorialIndexPair {
    pub fn new(shape: Vec<usize>, support: Vec<usize>, p1: CubeSet, p0: CubeSet) -> Result<Self> {
        if !p0.is_subset(&p1) {
            return Err(ConleyError::Argument("P₀ must be contained in P₁".into()));
        }
        let n: usize = shape.iter().product();
        if p1.iter().any(|&c| c >= n) {
            return Err(ConleyError::Argument("cube index outside the grid".into()));
        }
        let invariant = p1.difference(&p0).copied().collect();
        Ok(Self { shape, support, p1, p0, invariant, construction: PairConstruction::Explicit })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn multi_indices(&self, set: &CubeSet) -> Vec<Vec<usize>> {
        set.iter().map(|&c| multi_index(&self.shape, c)).collect()
    }

    /// Conditions violated with respect to `m`, checked from scratch.
    pub fn violations(&self, m: &OuterMap) -> Vec<PairAxiom> {
        let mut out = Vec::new();
        if !self.p0.is_subset(&self.p1) {
            out.push(PairAxiom::NotNested);
        }
        let inv = invariant_part_by_pruning(m, &self.p1);
        if !inv.is_disjoint(&self.p0) || !self.invariant.is_disjoint(&self.p0) {
            out.push(PairAxiom::InvariantMeetsExit);
        }
        let leaks = self.p0.iter().any(|&c| m.image(c).iter().any(|t| self.p1.contains(t) && !self.p0.contains(t)));
        if leaks {
            out.push(PairAxiom::ExitNotPositivelyInvariant);
        }
        let escapes = self.p1.difference(&self.p0).any(|&c| m.image(c).iter().any(|t| !self.p1.contains(t)));
        if escapes {
            out.push(PairAxiom::EscapeAvoidsExit);
        }
        out
    }

    pub fn is_index_pair_for(&self, m: &OuterMap) -> bool {
        self.violations(m).is_empty()
    }
}

fn image_of(m: &OuterMap, s: &CubeSet) -> CubeSet {
    s.iter().flat_map(|&c| m.image(c).iter().copied()).collect()
}

fn forward_closure(m: &OuterMap, s: &CubeSet, region: &CubeSet) -> CubeSet {
    let mut seen = s.clone();
    let mut queue: VecDeque<usize> = s.iter().copied().collect();
    while let Some(c) = queue.pop_front() {
        for &t in m.image(c) {
            if region.contains(&t) && seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    seen
}

/// Index pair for the invariant part of `region`.
///
/// The one-step collar `P₁ = S ∪ (m(S) ∩ o(S))`, `P₀ = P₁ ∖ S` is tried
/// first. If it fails verification, `P₁` becomes the forward closure of `S`
/// inside the region and `P₀ = P₁ ∖ S`. Whichever is returned has passed
/// [`CombinatorialIndexPair::violations`].
pub fn build_index_pair(m: &OuterMap, region: &CubeSet) -> Result<CombinatorialIndexPair> {
    let iso = check_isolation(m, region);
    if !iso.isolated {
        return Err(ConleyError::Isolation(format!(
            "{} cubes of o(S) outside the region interior{}",
            iso.offending.len(),
            if iso.off_grid { ", o(S) leaves the grid" } else { "" }
        )));
    }
    let s = iso.invariant;
    let (grown, _) = one_layer(m.shape(), &s);
    let img = image_of(m, &s);
    let collar: CubeSet = s.union(&img.intersection(&grown).copied().collect()).copied().collect();
    let closure = forward_closure(m, &s, region);
    let mut last = Vec::new();
    for (p1, how) in [(collar, PairConstruction::Collar), (closure, PairConstruction::ForwardClosure)] {
        let p0: CubeSet = p1.difference(&s).copied().collect();
        let pair = CombinatorialIndexPair {
            shape: m.shape().to_vec(),
            support: m.support().to_vec(),
            p1,
            p0,
            invariant: s.clone(),
            construction: how,
        };
        last = pair.violations(m);
        if last.is_empty() {
            return Ok(pair);
        }
    }
    Err(ConleyError::Refine(format!("index pair conditions failed: {last:?}")))
}

/// `(P₁ × Q₁, P₁ × Q₀ ∪ P₀ × Q₁)` on the product grid.
pub fn product_index_pair(p: &CombinatorialIndexPair, q: &CombinatorialIndexPair) -> Result<CombinatorialIndexPair> {
    if p.support.iter().any(|i| q.support.contains(i)) {
        return Err(ConleyError::Argument("product of index pairs needs disjoint frame supports".into()));
    }
    let np: usize = p.shape.iter().product();
    let mut shape = p.shape.clone();
    shape.extend_from_slice(&q.shape);
    let mut support = p.support.clone();
    support.extend_from_slice(&q.support);
    let id = |a: usize, b: usize| a + np * b;
    let mut p1 = CubeSet::new();
    let mut p0 = CubeSet::new();
    for &a in &p.p1 {
        for &b in &q.p1 {
            p1.insert(id(a, b));
            if p.p0.contains(&a) || q.p0.contains(&b) {
                p0.insert(id(a, b));
            }
        }
    }
    CombinatorialIndexPair::new(shape, support, p1, p0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, images: impl Fn(usize) -> Vec<usize>) -> OuterMap {
        OuterMap::from_adjacency(vec![n], vec![0], (0..n).map(images).collect()).unwrap()
    }

    /// Hand-built repeller on 16 cells: cube 8 is fixed, everything else
    /// moves one cube away from it.
    fn repeller() -> OuterMap {
        chain(16, |c| match c {
            8 => vec![7, 8, 9],
            0 => vec![16],
            15 => vec![16],
            c if c < 8 => vec![c - 1],
            c => vec![c + 1],
        })
    }

    #[test]
    fn repeller_collar_is_three_cubes() {
        let region: CubeSet = (2..14).collect();
        let pair = build_index_pair(&repeller(), &region).unwrap();
        assert_eq!(pair.p1, [7, 8, 9].into_iter().collect());
        assert_eq!(pair.p0, [7, 9].into_iter().collect());
        assert_eq!(pair.construction, PairConstruction::Collar);
    }

    #[test]
    fn attractor_has_empty_exit_set() {
        let m = chain(16, |c| match c {
            7 | 8 => vec![7, 8],
            c if c < 7 => vec![c + 1],
            c => vec![c - 1],
        });
        let region: CubeSet = (2..14).collect();
        let pair = build_index_pair(&m, &region).unwrap();
        assert!(pair.p0.is_empty());
        assert_eq!(pair.p1, [7, 8].into_iter().collect());
    }

    #[test]
    fn wide_images_fall_back_to_forward_closure() {
        // Cube 8 spreads two cubes each way, so m(S) ⊄ o(S).
        let m = chain(16, |c| match c {
            8 => vec![6, 7, 8, 9, 10],
            0 | 15 => vec![16],
            c if c < 8 => vec![c - 1],
            c => vec![c + 1],
        });
        let region: CubeSet = (2..14).collect();
        let pair = build_index_pair(&m, &region).unwrap();
        assert_eq!(pair.construction, PairConstruction::ForwardClosure);
        assert_eq!(pair.invariant, [8].into_iter().collect());
        assert_eq!(pair.p1, (2..14).collect());
        assert!(pair.is_index_pair_for(&m));
    }

    #[test]
    fn isolation_failure_is_reported() {
        let m = chain(16, |c| vec![c]);
        let region: CubeSet = (2..14).collect();
        assert!(matches!(build_index_pair(&m, &region), Err(ConleyError::Isolation(_))));
    }

    #[test]
    fn escape_from_region_requires_refinement() {
        // S = {8} maps straight off the grid.
        let m = chain(16, |c| match c {
            8 => vec![8, 16],
            0 | 15 => vec![16],
            c if c < 8 => vec![c - 1],
            c => vec![c + 1],
        });
        let region: CubeSet = (2..14).collect();
        assert!(matches!(build_index_pair(&m, &region), Err(ConleyError::Refine(_))));
    }

    #[test]
    fn violations_detect_each_axiom() {
        let m = repeller();
        let mk = |p1: &[usize], p0: &[usize]| {
            CombinatorialIndexPair::new(vec![16], vec![0], p1.iter().copied().collect(), p0.iter().copied().collect())
                .unwrap()
        };
        assert!(mk(&[7, 8, 9], &[7, 9]).is_index_pair_for(&m));
        assert!(mk(&[7, 8, 9], &[7, 8, 9]).violations(&m).contains(&PairAxiom::InvariantMeetsExit));
        assert!(mk(&[8], &[]).violations(&m).contains(&PairAxiom::EscapeAvoidsExit));
        // 7 ∉ P₀ maps to 6 ∉ P₁.
        let pair = mk(&[7, 8, 9], &[9]);
        assert!(pair.violations(&m).contains(&PairAxiom::EscapeAvoidsExit));
        // 8 ∈ P₀ maps to 7, 9 ∉ P₀.
        let pair = mk(&[7, 8, 9], &[8]);
        assert!(pair.violations(&m).contains(&PairAxiom::ExitNotPositivelyInvariant));
    }

    #[test]
    fn product_rejects_overlap() {
        let a = CombinatorialIndexPair::new(vec![8], vec![0], [3].into_iter().collect(), CubeSet::new()).unwrap();
        assert!(product_index_pair(&a, &a).is_err());
        let b = CombinatorialIndexPair { support: vec![1], ..a.clone() };
        let p = product_index_pair(&a, &b).unwrap();
        assert_eq!(p.shape, vec![8, 8]);
        assert_eq!(p.p1, [3 + 8 * 3].into_iter().collect());
    }
}
