//! Stable Conley index for compact perturbations of spectral operators on ℓ².
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod compressed_flow;
pub mod conley_engine;
pub mod error;
pub mod linalg;
pub mod scalar;
pub mod spectral_model;
pub mod stable_index;
pub mod subspace_lab;

pub use error::{ConleyError, Result};
pub use scalar::Real;

pub type SpectralOperator64 = spectral_model::SpectralOperator<f64>;
pub type StructuredCompactMap64 = spectral_model::StructuredCompactMap<f64>;
pub type PermissibleField64 = spectral_model::PermissibleField<f64>;
pub type Frame64 = spectral_model::Frame<f64>;
pub type Neighborhood64 = spectral_model::Neighborhood<f64>;
pub type FiniteVector64 = spectral_model::FiniteVector<f64>;
pub type AdmissibilityBudget64 = subspace_lab::AdmissibilityBudget<f64>;
pub type FiniteField64 = compressed_flow::FiniteField<f64>;
pub type CubicalGrid64 = conley_engine::CubicalGrid<f64>;
pub type Assembly64 = stable_index::Assembly<f64>;
