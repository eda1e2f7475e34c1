//! Modeling for right-truncated count data at desk scale: distribution
//! fitting, information-criterion model selection, mixed-effects truncated
//! Poisson regression via the hierarchical likelihood, two-group linear
//! discriminant analysis, and an exact integer optimizer for page-allocation
//! decisions.
//!
//! All floating-point math is generic over the scalar type through the
//! [`Real`] trait (`f32` or `f64`); concrete `f64` aliases for the main
//! types live at the crate root. The page-utility optimizer is exact
//! rational arithmetic and has no scalar parameter.

pub mod data;
pub mod discriminant;
pub mod distribution;
mod error;
mod linalg;
pub mod mixed;
mod real;
pub mod selection;
mod tails;
pub mod utility;

pub use error::{Error, Result};
pub use real::Real;

pub use distribution::TruncationBound;

/// f64 aliases for the commonly used types.
pub type TruncatedPoisson64 = distribution::TruncatedPoissonModel<f64>;
pub type DistFit64 = distribution::DistFit<f64>;
pub type PoissonFit64 = distribution::PoissonFit<f64>;
pub type ModelScore64 = selection::ModelScore<f64>;
pub type MixedFit64 = mixed::MixedFit<f64>;
pub type MixedModelSpec64 = mixed::MixedModelSpec<f64>;
pub type LdaModel64 = discriminant::LdaModel<f64>;
pub type Dataset64 = data::Dataset<f64>;

/// f32 aliases, for callers trading precision for footprint.
pub type TruncatedPoisson32 = distribution::TruncatedPoissonModel<f32>;
pub type DistFit32 = distribution::DistFit<f32>;
