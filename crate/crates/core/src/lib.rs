//! Design-space exploration of body-worn IMU sensor configurations.
//!
//! The pipeline synthesizes virtual IMU streams from kinematic motion data,
//! enumerates constrained sensor subsets, fits a baseline pose estimator per
//! subset, scores the predictions with five pose-error metrics, and ranks the
//! subsets by a combined accuracy/sensor-count score
//! `M(λ) = e·(1 − λ) + λ·i`.

pub mod body_model;
pub mod config;
pub mod config_space;
pub mod dse;
pub mod error;
pub mod estimator;
pub mod imu;
pub mod metrics;
pub mod motion;
pub mod rotation;
pub mod seed;

pub use error::{Error, Result};
