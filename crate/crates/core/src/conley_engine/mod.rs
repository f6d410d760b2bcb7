//! Combinatorial Conley index of a compressed flow: cubical grids, outer
//! approximations of the time-`τ` map, invariant sets, index pairs and
//! relative cubical homology over `ℤ`.
//!
//! The index is that of the time-`τ` map; the induced map on the index is
//! not computed and is taken to be the identity, as it is for a flow.

mod cubical;
mod grid;
mod homology;
mod index_pair;
mod invariant;
mod outer_map;
mod pipeline;

pub use cubical::{closed_cells, relative_chain_complex, relative_homology};
pub use grid::{boundary_layer, one_layer, CubeSet, CubicalGrid, MAX_GRID_CUBES};
pub use homology::{
    homology_of_chain_complex, invariant_factors, rational_kunneth, smith_diagonal, ChainComplex, HomologicalIndex,
    HomologyGroup,
};
pub use index_pair::{build_index_pair, product_index_pair, CombinatorialIndexPair, PairAxiom, PairConstruction};
pub use invariant::{check_isolation, invariant_part, invariant_part_by_pruning, IsolationRecord};
pub use outer_map::{build_outer_map, image_boxes, ImageBox, OuterMap};
pub use pipeline::{
    aligned_field, conley_index, reconstruct_outer_map, BlockIndex, EngineConfig, FieldIndex, FlowConfig, GridConfig,
};

use crate::error::Result;
use crate::scalar::Real;
use crate::subspace_lab::SignatureDecomposition;

/// Index of the linear flow `v̇ = −Av` with nondegenerate `A`: the sphere
/// `S^{dim V⁻}`.
pub fn linear_index_shortcut<T: Real>(sig: &SignatureDecomposition<T>) -> Result<HomologicalIndex> {
    sig.require_nondegenerate()?;
    Ok(HomologicalIndex::sphere(sig.negative_dim()))
}
