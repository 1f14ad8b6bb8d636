//! Metropolis-Hastings sampling of probability distributions supported on a
//! union of manifolds of different dimensions (a stratification), each defined
//! by equality and inequality constraints.
//!
//! A [`Model`](models::Model) supplies a [`ConstraintSystem`](constraint::ConstraintSystem),
//! a [`StratificationSpec`](constraint::StratificationSpec) saying which manifolds
//! exist and how they connect, and a density on each manifold. The
//! [`Sampler`](sampler::Sampler) then moves within a manifold, up to a
//! neighbouring higher-dimensional one, or down onto a nearby boundary.
//!
//! ```
//! use stratsample::models::{Model, ParabolaLine};
//! use stratsample::sampler::run_chain;
//!
//! let model = ParabolaLine::new();
//! let trace = run_chain(&model, model.initial_state(), 2000, 10, &model.recommended_params(), 1).unwrap();
//! assert_eq!(trace.records.len(), 200);
//! ```

pub mod analysis;
pub mod bd;
pub mod cli;
pub mod constraint;
pub mod error;
pub mod geometry;
pub mod models;
pub mod projection;
pub mod proposals;
pub mod sampler;
pub mod selfcheck;
pub mod trace;

pub use error::{Error, Result};
