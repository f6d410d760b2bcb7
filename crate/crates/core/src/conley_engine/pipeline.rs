use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cubical::relative_homology;
use super::grid::CubicalGrid;
use super::homology::HomologicalIndex;
use super::index_pair::{build_index_pair, CombinatorialIndexPair};
use super::outer_map::{build_outer_map, OuterMap};
use crate::compressed_flow::FiniteField;
use crate::error::{ConleyError, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::spectral_model::Neighborhood;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Initial subdivisions per axis (power of two, ≥ 8).
    pub subdivisions: usize,
    /// Cubes between the enclosing cube of `X ∩ V` and the grid boundary.
    pub margin: usize,
    /// Grid doublings allowed after an isolation or index-pair failure.
    pub max_refinements: usize,
    /// Compute decoupled blocks of the field separately and combine them
    /// by the Künneth formula.
    pub split_products: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { subdivisions: 32, margin: 2, max_refinements: 2, split_products: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub tau: f64,
    pub tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { tau: 0.5, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub grid: GridConfig,
    pub flow: FlowConfig,
}

/// Index pair and homology of one decoupled block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockIndex {
    /// Axes of the (aligned) field making up the block.
    pub axes: Vec<usize>,
    pub subdivisions: usize,
    pub refinements: usize,
    pub pair: CombinatorialIndexPair,
    pub homology: HomologicalIndex,
    /// Largest norm of a point of `|S|`.
    pub invariant_radius: f64,
    pub edges: usize,
}

/// Homological Conley index of `X ∩ V` under the flow of a compressed field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldIndex {
    pub homology: HomologicalIndex,
    pub blocks: Vec<BlockIndex>,
    /// Grid axes were rotated onto the eigenbasis of the linear part.
    pub aligned: bool,
}

impl FieldIndex {
    pub fn pairs(&self) -> impl Iterator<Item = &CombinatorialIndexPair> {
        self.blocks.iter().map(|b| &b.pair)
    }
}

fn is_diagonal<T: Real>(a: &DMatrix<T>) -> bool {
    let scale = linalg::max_abs(a).max(T::one());
    (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| i == j || a[(i, j)].abs() <= T::zero_threshold() * scale))
}

/// Field in grid coordinates: rotated onto the eigenbasis of the symmetric
/// part of its linear term when that term is not diagonal. Only balls are
/// rotation invariant, so box neighborhoods keep the frame axes.
pub fn aligned_field<T: Real>(f: &FiniteField<T>, x: &Neighborhood<T>) -> Result<(FiniteField<T>, bool)> {
    let a = f.linear();
    if f.dim() == 0 || is_diagonal(a) || !matches!(x, Neighborhood::Ball { .. }) {
        return Ok((f.clone(), false));
    }
    let sym = (a + a.transpose()) * T::of(0.5);
    let eig = linalg::sym_eigen(&sym);
    Ok((f.rotated(&eig.vectors)?, true))
}

fn grid_field<T: Real>(f: &FiniteField<T>, grid: &CubicalGrid<T>) -> Result<FiniteField<T>> {
    f.clone().with_domain(grid.half_widths().iter().map(|&w| w * T::of(2.0)).collect())
}

/// Index of one block with grid doubling on isolation or index-pair failure.
fn block_index<T: Real>(
    f: &FiniteField<T>,
    axes: Vec<usize>,
    x: &Neighborhood<T>,
    cfg: &EngineConfig,
) -> Result<BlockIndex> {
    let tau = T::of(cfg.flow.tau);
    let tol = T::of(cfg.flow.tol).max(T::epsilon() * T::of(1e4));
    let mut grid = CubicalGrid::around(x, f.dim(), cfg.grid.subdivisions, cfg.grid.margin)?;
    let mut refinements = 0;
    loop {
        let field = grid_field(f, &grid)?;
        let m = build_outer_map(&field, &grid, tau, tol)?;
        let region = grid.region(x);
        match build_index_pair(&m, &region) {
            Ok(pair) => {
                let homology = relative_homology(&pair)?;
                let invariant_radius = pair
                    .invariant
                    .iter()
                    .map(|&c| {
                        let (lo, hi) = grid.bounds(c);
                        lo.iter().zip(&hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<T>().sqrt().to_f64_lossy()
                    })
                    .fold(0.0, f64::max);
                return Ok(BlockIndex {
                    axes,
                    subdivisions: grid.subdivisions()[0],
                    refinements,
                    pair,
                    homology,
                    invariant_radius,
                    edges: m.edge_count(),
                });
            }
            Err(e @ (ConleyError::Isolation(_) | ConleyError::Refine(_))) => {
                if refinements == cfg.grid.max_refinements {
                    return Err(e);
                }
                grid = grid.refined()?;
                refinements += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Rebuilds the outer map a block's index pair was computed on, so the pair
/// can be checked against it independently of the search that produced it.
pub fn reconstruct_outer_map<T: Real>(
    f: &FiniteField<T>,
    x: &Neighborhood<T>,
    cfg: &EngineConfig,
    block: &BlockIndex,
) -> Result<OuterMap> {
    let (g, _) = aligned_field(f, x)?;
    let g = if block.axes.len() < g.dim() { g.restrict(&block.axes)? } else { g };
    let mut grid = CubicalGrid::around(x, g.dim(), cfg.grid.subdivisions, cfg.grid.margin)?;
    for _ in 0..block.refinements {
        grid = grid.refined()?;
    }
    let tol = T::of(cfg.flow.tol).max(T::epsilon() * T::of(1e4));
    build_outer_map(&grid_field(&g, &grid)?, &grid, T::of(cfg.flow.tau), tol)
}

/// Homological Conley index of the maximal invariant set in `X ∩ V` for
/// `v̇ = −f(v)`, computed as the relative homology of a combinatorial index
/// pair of the time-`τ` outer map.
///
/// With `split_products`, structurally decoupled blocks are computed on
/// their own grids over the projection of `X`, and combined by the Künneth
/// formula. For a ball the split is accepted only when the product of the
/// blocks' invariant sets lies inside `X`, in which case both neighborhoods
/// isolate the same invariant set; otherwise the unsplit grid is used.
pub fn conley_index<T: Real>(f: &FiniteField<T>, x: &Neighborhood<T>, cfg: &EngineConfig) -> Result<FieldIndex> {
    if f.dim() == 0 {
        return Ok(FieldIndex { homology: HomologicalIndex::sphere(0), blocks: Vec::new(), aligned: false });
    }
    let (g, aligned) = aligned_field(f, x)?;
    let all: Vec<usize> = (0..g.dim()).collect();
    let blocks = if cfg.grid.split_products { g.coupling_blocks() } else { vec![all.clone()] };
    if blocks.len() > 1 {
        let parts: Vec<BlockIndex> =
            blocks.into_iter().map(|axes| block_index(&g.restrict(&axes)?, axes, x, cfg)).collect::<Result<_>>()?;
        let inside = match *x {
            Neighborhood::Ball { radius } => {
                parts.iter().map(|b| b.invariant_radius.powi(2)).sum::<f64>().sqrt() < radius.to_f64_lossy()
            }
            Neighborhood::Box { .. } => true,
        };
        if inside {
            let homology = parts.iter().skip(1).fold(parts[0].homology.clone(), |h, b| h.kunneth(&b.homology));
            return Ok(FieldIndex { homology, blocks: parts, aligned });
        }
    }
    let b = block_index(&g, all, x, cfg)?;
    Ok(FieldIndex { homology: b.homology.clone(), blocks: vec![b], aligned })
}
