//! Inference of geometric constraints from rigid-body pose and wrench
//! recordings.
//!
//! The pipeline: estimate velocities from the pose series, split the
//! recording into constrained segments by force activity, fit each candidate
//! constraint model to every segment with iteratively reweighted
//! quasi-Newton regression, score the fits with kinematic and wrench error
//! indicators, and pick the winning model (or reject them all) per segment.
//! A synthetic generator produces labeled recordings for end-to-end checks.

pub mod error;
pub mod eval;
pub mod io;
pub mod kinematics;
pub mod math;
pub mod metrics;
pub mod models;
pub mod optimize;
pub mod pipeline;
pub mod regression;
pub mod segmentation;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
pub use kinematics::{Demonstration, Sample, UnitQuaternion, Vec3};
pub use models::{model_info, ModelInfo, ModelKind, ParamVector, ReactionWrench};
pub use pipeline::{run_inference, InferenceReport, PipelineConfig};
