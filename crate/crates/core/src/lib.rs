//! Spin correlations of nucleon pairs from deuteron photodisintegration.
//!
//! Closed-form spin algebra, fitted cross-section ratios, relativistic
//! breakup kinematics, a Monte Carlo event generator with a polarimeter model,
//! and coincidence-rate planning.
//!
//! The Monte Carlo core runs data-parallel on rayon with the default
//! `parallel` feature; without it every [`exec::Executor`] runs sequentially.
//! Results are identical either way.

pub mod cross_sections;
pub mod detector_model;
pub mod error;
pub mod event_generator;
pub mod exec;
pub mod kinematics;
pub mod rate_planner;
pub mod rng;
pub mod simulation;
pub mod spin_model;
pub mod tables;

pub use error::{Error, Result};
