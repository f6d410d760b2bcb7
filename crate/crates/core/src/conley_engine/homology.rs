use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{ConleyError, Result};

/// `ℤ^rank ⊕ ⊕ ℤ/t` with torsion in invariant-factor form
/// (`t₁ | t₂ | …`, all `> 1`).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomologyGroup {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl HomologyGroup {
    pub fn new(rank: usize, torsion: Vec<u64>) -> Self {
        Self { rank, torsion: invariant_factors(&torsion) }
    }

    pub fn free(rank: usize) -> Self {
        Self { rank, torsion: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

fn prime_powers(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Invariant factors of `⊕ ℤ/t_i`; entries `0` and `1` are dropped.
pub fn invariant_factors(torsion: &[u64]) -> Vec<u64> {
    let mut by_prime: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    for &t in torsion.iter().filter(|&&t| t > 1) {
        for (p, e) in prime_powers(t) {
            by_prime.entry(p).or_default().push(e);
        }
    }
    let len = by_prime.values().map(Vec::len).max().unwrap_or(0);
    let mut out = vec![1u64; len];
    for (p, mut es) in by_prime {
        es.sort_unstable_by(|a, b| b.cmp(a));
        for (k, e) in es.into_iter().enumerate() {
            out[len - 1 - k] *= p.pow(e);
        }
    }
    out
}

/// Graded integral homology, degree `k` at position `k`; trailing zero
/// groups are trimmed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomologicalIndex {
    groups: Vec<HomologyGroup>,
}

impl HomologicalIndex {
    pub fn new(groups: Vec<HomologyGroup>) -> Self {
        let mut groups: Vec<HomologyGroup> =
            groups.into_iter().map(|g| HomologyGroup::new(g.rank, g.torsion)).collect();
        while groups.last().is_some_and(HomologyGroup::is_zero) {
            groups.pop();
        }
        Self { groups }
    }

    /// Homology of a point pair `(S^k, pt)`: `ℤ` in degree `k`.
    pub fn sphere(k: usize) -> Self {
        let mut g = vec![HomologyGroup::default(); k + 1];
        g[k] = HomologyGroup::free(1);
        Self::new(g)
    }

    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn groups(&self) -> &[HomologyGroup] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> HomologyGroup {
        self.groups.get(k).cloned().unwrap_or_default()
    }

    pub fn rank(&self, k: usize) -> usize {
        self.groups.get(k).map_or(0, |g| g.rank)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.rank).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.groups.is_empty()
    }

    /// Degrees with a nonzero group.
    pub fn support(&self) -> Vec<usize> {
        (0..self.groups.len()).filter(|&k| !self.groups[k].is_zero()).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.groups.iter().enumerate().map(|(k, g)| if k % 2 == 0 { g.rank as i64 } else { -(g.rank as i64) }).sum()
    }

    /// Degrees raised by `n`.
    pub fn shifted(&self, n: usize) -> Self {
        let mut g = vec![HomologyGroup::default(); n];
        g.extend(self.groups.iter().cloned());
        Self::new(g)
    }

    /// Integral Künneth formula for the tensor product of free chain
    /// complexes: `H_n = ⊕_{i+j=n} H_i ⊗ H'_j ⊕ ⊕_{i+j=n−1} Tor(H_i, H'_j)`.
    pub fn kunneth(&self, other: &Self) -> Self {
        if self.is_trivial() || other.is_trivial() {
            return Self::trivial();
        }
        let top = self.groups.len() + other.groups.len();
        let mut out = vec![HomologyGroup::default(); top];
        for (i, a) in self.groups.iter().enumerate() {
            for (j, b) in other.groups.iter().enumerate() {
                let g = &mut out[i + j];
                g.rank += a.rank * b.rank;
                for _ in 0..a.rank {
                    g.torsion.extend_from_slice(&b.torsion);
                }
                for _ in 0..b.rank {
                    g.torsion.extend_from_slice(&a.torsion);
                }
                let gcds: Vec<u64> = a.torsion.iter().flat_map(|s| b.torsion.iter().map(move |t| s.gcd(t))).collect();
                g.torsion.extend_from_slice(&gcds);
                out[i + j + 1].torsion.extend(gcds);
            }
        }
        Self::new(out)
    }

    /// Betti numbers over `ℚ`.
    pub fn rational(&self) -> Vec<usize> {
        let mut r = self.ranks();
        while r.last() == Some(&0) {
            r.pop();
        }
        r
    }
}

/// Rational Künneth: `b_n = Σ_{i+j=n} b_i b'_j`.
pub fn rational_kunneth(a: &[usize], b: &[usize]) -> Vec<usize> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    while out.last() == Some(&0) {
        out.pop();
    }
    out
}

/// Free chain complex over `ℤ` with one generator per cell.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChainComplex {
    dims: Vec<usize>,
    boundaries: Vec<Vec<(usize, i64)>>,
}

impl ChainComplex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a cell of dimension `dim` with boundary `Σ c_i · cell_i`;
    /// returns its id. Boundary cells must exist and have dimension
    /// `dim − 1`.
    pub fn add_cell(&mut self, dim: usize, boundary: Vec<(usize, i64)>) -> Result<usize> {
        let mut merged: BTreeMap<usize, i64> = BTreeMap::new();
        for (c, k) in boundary {
            if c >= self.dims.len() || self.dims[c] + 1 != dim {
                return Err(ConleyError::Argument(format!(
                    "boundary cell {c} is not a face of dimension {}",
                    dim.wrapping_sub(1)
                )));
            }
            let e = merged.entry(c).or_insert(0);
            *e = e.checked_add(k).ok_or(ConleyError::Overflow)?;
        }
        self.dims.push(dim);
        self.boundaries.push(merged.into_iter().filter(|&(_, k)| k != 0).collect());
        Ok(self.dims.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim_of(&self, cell: usize) -> usize {
        self.dims[cell]
    }

    pub fn boundary(&self, cell: usize) -> &[(usize, i64)] {
        &self.boundaries[cell]
    }

    /// Number of cells per dimension.
    pub fn cell_counts(&self) -> Vec<usize> {
        let top = self.dims.iter().copied().max().map_or(0, |d| d + 1);
        let mut c = vec![0; top];
        for &d in &self.dims {
            c[d] += 1;
        }
        c
    }

    /// `Σ (−1)^k #cells_k`.
    pub fn euler_characteristic(&self) -> i64 {
        self.dims.iter().map(|&d| if d % 2 == 0 { 1 } else { -1 }).sum()
    }

    /// Whether `∂∂ = 0`.
    pub fn is_complex(&self) -> bool {
        self.boundaries.iter().all(|b| {
            let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
            for &(f, k) in b {
                for &(g, l) in &self.boundaries[f] {
                    *acc.entry(g).or_insert(0) += k * l;
                }
            }
            acc.values().all(|&v| v == 0)
        })
    }
}

struct Reducer {
    dims: Vec<usize>,
    bd: Vec<BTreeMap<usize, i64>>,
    cbd: Vec<BTreeMap<usize, i64>>,
    alive: Vec<bool>,
}

impl Reducer {
    fn new(cc: &ChainComplex) -> Self {
        let n = cc.len();
        let mut bd = vec![BTreeMap::new(); n];
        let mut cbd = vec![BTreeMap::new(); n];
        for (a, b) in cc.boundaries.iter().enumerate() {
            for &(f, k) in b {
                bd[a].insert(f, k);
                cbd[f].insert(a, k);
            }
        }
        Self { dims: cc.dims.clone(), bd, cbd, alive: vec![true; n] }
    }

    /// Best unit face of `a` and the fill-in cost of reducing with it.
    fn best_pivot(&self, a: usize) -> Option<(usize, usize)> {
        let da = self.bd[a].len() - 1;
        self.bd[a]
            .iter()
            .filter(|(_, &k)| k == 1 || k == -1)
            .map(|(&b, _)| (da * (self.cbd[b].len() - 1), b))
            .min()
            .map(|(cost, b)| (b, cost))
    }

    fn set(&mut self, cell: usize, face: usize, value: i64) {
        if value == 0 {
            self.bd[cell].remove(&face);
            self.cbd[face].remove(&cell);
        } else {
            self.bd[cell].insert(face, value);
            self.cbd[face].insert(cell, value);
        }
    }

    /// Removes the pair `(a, b)`, `⟨∂a, b⟩ = ±1`, by the chain equivalence
    /// `∂'ρ = ∂ρ − ⟨∂ρ, b⟩⟨∂a, b⟩ ∂a`. Returns the cells whose boundary or
    /// coboundary changed.
    fn reduce(&mut self, a: usize, b: usize) -> Result<Vec<usize>> {
        let u = self.bd[a][&b];
        let da: Vec<(usize, i64)> = self.bd[a].iter().map(|(&f, &k)| (f, k)).collect();
        let rhos: Vec<(usize, i64)> = self.cbd[b].iter().filter(|(&r, _)| r != a).map(|(&r, &k)| (r, k)).collect();
        let mut touched = Vec::new();
        for &(rho, c) in &rhos {
            let factor = c.checked_mul(u).ok_or(ConleyError::Overflow)?;
            for &(f, k) in &da {
                let old = self.bd[rho].get(&f).copied().unwrap_or(0);
                let new = factor.checked_mul(k).and_then(|x| old.checked_sub(x)).ok_or(ConleyError::Overflow)?;
                self.set(rho, f, new);
            }
            touched.push(rho);
        }
        for cell in [a, b] {
            let faces: Vec<usize> = self.bd[cell].keys().copied().collect();
            for f in faces {
                self.cbd[f].remove(&cell);
                touched.push(f);
            }
            let cofaces: Vec<usize> = self.cbd[cell].keys().copied().collect();
            for g in cofaces {
                self.bd[g].remove(&cell);
                touched.push(g);
            }
            self.bd[cell].clear();
            self.cbd[cell].clear();
            self.alive[cell] = false;
        }
        Ok(touched)
    }

    fn run(&mut self) -> Result<()> {
        let mut queue: BTreeSet<usize> = (0..self.dims.len()).collect();
        loop {
            while let Some(a) = queue.pop_first() {
                if !self.alive[a] || self.bd[a].is_empty() {
                    continue;
                }
                if let Some((b, 0)) = self.best_pivot(a) {
                    queue.extend(self.reduce(a, b)?);
                }
            }
            let best = (0..self.dims.len())
                .filter(|&a| self.alive[a] && !self.bd[a].is_empty())
                .filter_map(|a| self.best_pivot(a).map(|(b, cost)| (cost, a, b)))
                .min();
            match best {
                None => return Ok(()),
                Some((_, a, b)) => queue.extend(self.reduce(a, b)?),
            }
        }
    }
}

/// Nonzero diagonal of the Smith normal form, `d₁ | d₂ | …`, all positive.
pub fn smith_diagonal(mut m: Vec<Vec<i64>>) -> Result<Vec<i64>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    let ovf = || ConleyError::Overflow;
    for t in 0..rows.min(cols) {
        loop {
            let pivot = (t..rows)
                .flat_map(|r| (t..cols).map(move |c| (r, c)))
                .filter(|&(r, c)| m[r][c] != 0)
                .min_by_key(|&(r, c)| (m[r][c].unsigned_abs(), r, c));
            let Some((pr, pc)) = pivot else {
                return finish(diag);
            };
            m.swap(t, pr);
            for row in m.iter_mut() {
                row.swap(t, pc);
            }
            let p = m[t][t];
            let mut clean = true;
            for r in t + 1..rows {
                let q = m[r][t] / p;
                if q != 0 {
                    for c in t..cols {
                        m[r][c] = q.checked_mul(m[t][c]).and_then(|x| m[r][c].checked_sub(x)).ok_or_else(ovf)?;
                    }
                }
                clean &= m[r][t] == 0;
            }
            for c in t + 1..cols {
                let q = m[t][c] / p;
                if q != 0 {
                    for row in m.iter_mut().skip(t) {
                        row[c] = q.checked_mul(row[t]).and_then(|x| row[c].checked_sub(x)).ok_or_else(ovf)?;
                    }
                }
                clean &= m[t][c] == 0;
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..rows).find(|&r| (t + 1..cols).any(|c| m[r][c] % p != 0));
            match bad {
                Some(r) => {
                    for c in t..cols {
                        m[t][c] = m[t][c].checked_add(m[r][c]).ok_or_else(ovf)?;
                    }
                }
                None => {
                    diag.push(p.checked_abs().ok_or_else(ovf)?);
                    break;
                }
            }
        }
    }
    finish(diag)
}

fn finish(diag: Vec<i64>) -> Result<Vec<i64>> {
    debug_assert!(diag.windows(2).all(|w| w[1] % w[0] == 0));
    Ok(diag)
}

/// Integral homology of a free chain complex, degree `k` at position `k`.
///
/// Unit-coefficient pairs are cancelled first (fill-free collapses and
/// coreductions, then least-fill pivots); the remainder is put in Smith
/// normal form degree by degree.
pub fn homology_of_chain_complex(cc: &ChainComplex) -> Result<HomologicalIndex> {
    let mut red = Reducer::new(cc);
    red.run()?;
    let top = cc.cell_counts().len();
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); top];
    for (c, &d) in red.dims.iter().enumerate() {
        if red.alive[c] {
            cells[d].push(c);
        }
    }
    let mut ranks = vec![0usize; top + 1];
    let mut torsion: Vec<Vec<u64>> = vec![Vec::new(); top + 1];
    for k in 1..top {
        if cells[k].is_empty() || cells[k - 1].is_empty() {
            continue;
        }
        let pos: BTreeMap<usize, usize> = cells[k - 1].iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut m = vec![vec![0i64; cells[k].len()]; cells[k - 1].len()];
        for (j, &c) in cells[k].iter().enumerate() {
            for (f, &v) in &red.bd[c] {
                m[pos[f]][j] = v;
            }
        }
        let diag = smith_diagonal(m)?;
        ranks[k] = diag.len();
        torsion[k - 1] = diag.iter().filter(|&&d| d > 1).map(|&d| d as u64).collect();
    }
    let groups =
        (0..top).map(|k| HomologyGroup::new(cells[k].len() - ranks[k] - ranks[k + 1], torsion[k].clone())).collect();
    Ok(HomologicalIndex::new(groups))
}
