//! Longitudinal clinical-risk prediction engine.
//!
//! The pipeline runs from raw dated code events to evaluated models:
//! [`cohort`] builds and selects patients, [`features`] turns events into
//! per-slice count tensors, [`models`] holds the embedding+LSTM classifier and
//! its baselines, [`metrics`] scores them, [`experiments`] orchestrates the
//! studies, and [`projection`] embeds hidden activations with t-SNE.
//!
//! The numeric core is generic over [`Real`] (`f32`/`f64`); the rest of the
//! crate works in `f64` through the aliases below.

pub mod cohort;
pub mod commands;
pub mod error;
pub mod experiments;
pub mod features;
pub mod io;
pub mod metrics;
pub mod models;
pub mod numcore;
pub mod projection;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = numcore::Matrix<f64>;
pub type Matrix32 = numcore::Matrix<f32>;
pub type Param64 = numcore::Param<f64>;
pub type Param32 = numcore::Param<f32>;
