use std::collections::{BTreeMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::grid::{boundary_layer, one_layer, CubeSet};
use super::outer_map::OuterMap;

/// Cubes of `region` with an infinite forward and an infinite backward path
/// inside `region`: those reachable from a cycle and reaching a cycle,
/// found through the strongly connected components of the induced graph.
pub fn invariant_part(m: &OuterMap, region: &CubeSet) -> CubeSet {
    let nodes: Vec<usize> = region.iter().copied().filter(|&c| c < m.len()).collect();
    let local: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(nodes.len(), 0);
    for _ in &nodes {
        g.add_node(());
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (i, &c) in nodes.iter().enumerate() {
        for t in m.image(c) {
            if let Some(&j) = local.get(t) {
                g.add_edge(NodeIndex::new(i), NodeIndex::new(j), ());
                succ[i].push(j);
                pred[j].push(i);
            }
        }
    }
    let mut on_cycle = vec![false; nodes.len()];
    for comp in tarjan_scc(&g) {
        let recurrent = comp.len() > 1 || succ[comp[0].index()].contains(&comp[0].index());
        if recurrent {
            for n in comp {
                on_cycle[n.index()] = true;
            }
        }
    }
    let forward = closure(&on_cycle, &succ);
    let backward = closure(&on_cycle, &pred);
    (0..nodes.len()).filter(|&i| forward[i] && backward[i]).map(|i| nodes[i]).collect()
}

fn closure(seed: &[bool], adj: &[Vec<usize>]) -> Vec<bool> {
    let mut seen = seed.to_vec();
    let mut queue: VecDeque<usize> = (0..seed.len()).filter(|&i| seed[i]).collect();
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Maximal invariant subset of `region` by repeatedly deleting cubes without
/// a successor or without a predecessor in the current set. Independent of
/// [`invariant_part`]; used to re-verify index pairs.
pub fn invariant_part_by_pruning(m: &OuterMap, region: &CubeSet) -> CubeSet {
    let mut s: CubeSet = region.iter().copied().filter(|&c| c < m.len()).collect();
    loop {
        let mut has_pred = CubeSet::new();
        for &c in &s {
            for t in m.image(c) {
                if s.contains(t) {
                    has_pred.insert(*t);
                }
            }
        }
        let next: CubeSet =
            s.iter().copied().filter(|&c| has_pred.contains(&c) && m.image(c).iter().any(|t| s.contains(t))).collect();
        if next.len() == s.len() {
            return next;
        }
        s = next;
    }
}

/// Outcome of the isolation test `o(S) ⊂ region ∖ ∂region`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsolationRecord {
    pub isolated: bool,
    pub invariant: CubeSet,
    /// Cubes of `o(S)` outside the region's interior.
    pub offending: Vec<usize>,
    /// `o(S)` reaches off the grid.
    pub off_grid: bool,
}

pub fn check_isolation(m: &OuterMap, region: &CubeSet) -> IsolationRecord {
    let invariant = invariant_part(m, region);
    let (grown, off_grid) = one_layer(m.shape(), &invariant);
    let boundary = boundary_layer(m.shape(), region);
    let offending: Vec<usize> = grown.iter().copied().filter(|c| !region.contains(c) || boundary.contains(c)).collect();
    IsolationRecord { isolated: offending.is_empty() && !off_grid, invariant, offending, off_grid }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, images: impl Fn(usize) -> Vec<usize>) -> OuterMap {
        OuterMap::from_adjacency(vec![n], vec![0], (0..n).map(images).collect()).unwrap()
    }

    #[test]
    fn drift_has_empty_invariant_part() {
        let m = chain(16, |c| if c == 0 { vec![16] } else { vec![c - 1] });
        let all: CubeSet = (0..16).collect();
        assert!(invariant_part(&m, &all).is_empty());
        assert!(check_isolation(&m, &all).isolated);
    }

    #[test]
    fn identity_keeps_region() {
        let m = chain(16, |c| vec![c]);
        let region: CubeSet = (2..14).collect();
        assert_eq!(invariant_part(&m, &region), region);
        let rec = check_isolation(&m, &region);
        assert!(!rec.isolated && rec.offending.contains(&2) && rec.offending.contains(&1));
    }

    #[test]
    fn connecting_orbit_is_included() {
        // 3 ↔ 3 and 10 ↔ 10 fixed, 3 → 4 → … → 10: all of 3..=10 invariant.
        let m = chain(16, |c| match c {
            3 => vec![3, 4],
            4..=9 => vec![c + 1],
            10 => vec![10],
            0 => vec![16],
            _ => vec![c - 1],
        });
        let all: CubeSet = (0..16).collect();
        let s = invariant_part(&m, &all);
        assert_eq!(s, (3..=10).collect());
        assert_eq!(s, invariant_part_by_pruning(&m, &all));
    }
}
