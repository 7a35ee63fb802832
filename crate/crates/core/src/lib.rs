//! Numerical laboratory for static spaces, critical-point-equation metrics
//! and the curvature identities they satisfy.

pub mod config;
pub mod curvature;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod kobayashi;
pub mod levelset;
pub mod ode;
pub mod quadrature;
pub mod statics;
pub mod tensor;
pub mod tolerances;

pub use error::{Error, Result};
pub use geometry::{Chart, Coordinate, DiffEngine, FiberFactor, FiberSpec, MetricField, ScalarField};
pub use curvature::{PointCurvature, ScalarJets};
pub use jet::{Jet, JetSpace};
pub use tensor::{Symmetries, TensorJet, TensorValue};
