use std::collections::{BTreeMap, BTreeSet};

use super::grid::{multi_index, CubeSet};
use super::homology::{homology_of_chain_complex, ChainComplex, HomologicalIndex};
use super::index_pair::CombinatorialIndexPair;
use crate::error::Result;

/// Elementary cube in doubled coordinates: `2k` is the vertex `[k]`,
/// `2k + 1` the interval `[k, k+1]`.
type Cell = Vec<u32>;

fn cell_dim(c: &Cell) -> usize {
    c.iter().filter(|&&x| x % 2 == 1).count()
}

fn faces_of_top(shape: &[usize], id: usize, out: &mut BTreeSet<Cell>) {
    let k = multi_index(shape, id);
    let d = k.len();
    let mut choice = vec![0u32; d];
    loop {
        out.insert((0..d).map(|i| 2 * k[i] as u32 + choice[i]).collect());
        let mut i = 0;
        loop {
            if i == d {
                return;
            }
            if choice[i] < 2 {
                choice[i] += 1;
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Closed cubical set `|P|` as its elementary cubes.
pub fn closed_cells(shape: &[usize], cubes: &CubeSet) -> BTreeSet<Vec<u32>> {
    let mut out = BTreeSet::new();
    for &c in cubes {
        faces_of_top(shape, c, &mut out);
    }
    out
}

/// `∂(I₁ × … × I_d) = Σ_j (−1)^{#nondegenerate before j} (right − left)`.
fn cubical_boundary(c: &Cell) -> Vec<(Cell, i64)> {
    let mut out = Vec::new();
    let mut sign = 1i64;
    for i in 0..c.len() {
        if c[i] % 2 == 1 {
            let mut right = c.clone();
            right[i] += 1;
            let mut left = c.clone();
            left[i] -= 1;
            out.push((right, sign));
            out.push((left, -sign));
            sign = -sign;
        }
    }
    out
}

/// Relative cellular chain complex `C(|P₁|) / C(|P₀|)`.
pub fn relative_chain_complex(shape: &[usize], p1: &CubeSet, p0: &CubeSet) -> ChainComplex {
    let upper = closed_cells(shape, p1);
    let lower = closed_cells(shape, p0);
    let mut cells: Vec<Cell> = upper.difference(&lower).cloned().collect();
    cells.sort_by_key(|c| (cell_dim(c), c.clone()));
    let mut id: BTreeMap<Cell, usize> = BTreeMap::new();
    let mut cc = ChainComplex::new();
    for c in cells {
        let bd = cubical_boundary(&c).into_iter().filter_map(|(f, s)| id.get(&f).map(|&i| (i, s))).collect();
        let k = cc.add_cell(cell_dim(&c), bd).expect("faces precede cofaces");
        id.insert(c, k);
    }
    cc
}

/// `H_*(|P₁|, |P₀|; ℤ)`; unreduced homology of `|P₁|` when `P₀ = ∅`.
pub fn relative_homology(pair: &CombinatorialIndexPair) -> Result<HomologicalIndex> {
    homology_of_chain_complex(&relative_chain_complex(&pair.shape, &pair.p1, &pair.p0))
}
