//! Numerical laboratory for curvature pinching under the Ricci flow.
//!
//! * [`tensor`] – symmetric 2-tensors, algebraic curvature tensors, Kulkarni–Nomizu products.
//! * [`curvature`] – geometry presets, orthogonal curvature decomposition, Weitzenböck operator.
//! * [`flow`] – Ricci-flow integration, singularity classification and dilations.
//! * [`pinching`] – traceless-Ricci pinching quantities and their checks.

pub mod curvature;
pub mod error;
pub mod flow;
pub mod pinching;
pub mod sampling;
pub mod tensor;

pub use error::{GeomError, Result};
