//! Compressed fields `π_V F` on finite frames and their time-`τ` flow maps.
//!
//! Trajectories solve `v̇ = −f(v)`.

mod field;
mod integrate;
mod interval;

pub use field::{
    block_defect_norm, compress_field, decomposition_pseudometric, homotopy_family, intermediate_field,
    intermediate_projectors, product_field, FiniteField, NonlinearTerm,
};
pub(crate) use integrate::time_tau_path;
pub use integrate::{time_tau_map, FlowStep};
