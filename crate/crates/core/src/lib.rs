//! Two-valley loss landscape with SGD-like anisotropic Langevin dynamics.
//!
//! * [`landscape`] — the bifurcating loss surface, its derivatives and the
//!   noise-induced effective potential.
//! * [`dynamics`] — the discrete update with Hessian-shaped Gaussian noise.
//! * [`specialfn`] — `erfi` and its logarithm.
//! * [`theory`] — Kramers rates, steady-state and transient flat-valley
//!   probabilities, freezing point.
//! * [`oracle`] — quadrature and master-equation oracles for the closed forms.
//! * [`experiments`] — seeded Monte Carlo ensembles and `(η, σ)` sweeps.
//! * [`config`] — the flat `section.key = value` run configuration.
//! * [`validation`] — the end-to-end check suite behind `valleyjump validate`.

// `!(x >= 0.0)` is how domain checks reject NaN along with negatives
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csvfmt;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod landscape;
pub mod oracle;
pub mod specialfn;
pub mod theory;
pub mod validation;

pub use config::RunConfig;
pub use dynamics::{DynamicsConfig, InitMode, RunOutcome, State, TrajectoryRecord};
pub use error::{Error, Result};
pub use experiments::{EnsembleStats, SweepGrid};
pub use landscape::{LandscapeEval, LandscapeParams, Sym2, Valley, ValleyGeometry};
pub use theory::TheoryPrediction;
