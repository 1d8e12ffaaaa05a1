//! Inhomogeneous Markov measures on the golden-mean shift: construction of
//! the perturbation schedule, sampling, derivative formulas, and the torus
//! coding that realises the stationary measure geometrically.

pub mod construction;
pub mod decimal;
pub mod error;
pub mod linalg;
pub mod markov;
pub mod tms;
pub mod torus;
pub mod verify;
pub mod xreal;

pub use construction::{build_measure_spec, measure_from_params, validate_params, LevelParams, Mode, Profile, ValidationReport};
pub use error::{Error, Result};
pub use markov::{BlockLevel, BlockSchedule, MeasureSpec, TailRule};
pub use tms::{AdjacencyMatrix, Cylinder, Word};
pub use xreal::XReal;
