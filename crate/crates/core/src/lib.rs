//! Autonomous data-collection bootstrapping for a tabletop pick-and-stack task.
//!
//! The crate is organised around the collection loop:
//!
//! * [`sim`] simulates the workspace, motion primitives and sensors.
//! * [`monitor`] labels, terminates and resets episodes through four message
//!   driven services (tracker, verifier, episode manager, reset controller).
//! * [`policy`] fits Gaussian-mixture behavior-cloning policies and evaluates
//!   them.
//! * [`bootstrap`] runs the staged collect / balance / compose / retrain loop.
//! * [`metrics`] computes dispersion, prediction discrepancy and cost reports.
//! * [`store`] persists episodes and loads run configuration.

pub mod bootstrap;
pub mod error;
pub mod metrics;
pub mod monitor;
pub mod policy;
pub mod rng;
pub mod rollout;
pub mod sim;
pub mod store;

pub use error::{Error, Result};
