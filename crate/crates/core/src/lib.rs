//! Recovery of one-hidden-layer convolutional networks with non-overlapping
//! filters from teacher-generated data.
//!
//! - [`activation`]: activations and their Gaussian statistics (κ, Δ, ξ, ψ, γ)
//! - [`teacher`]: ground-truth network, inputs and labelled datasets
//! - [`learner`]: approximate gradient descent, initialization, population
//!   gradients and convergence constants
//! - [`baselines`]: batch Convotron and Double Convotron
//! - [`moment_estimator`]: method-of-moments direction and sign estimates
//! - [`experiments`]: configs, seeded runs, sweeps, CSV and SVG output

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod baselines;
pub mod error;
pub mod experiments;
pub mod learner;
pub mod linalg;
pub mod moment_estimator;
pub mod teacher;

pub use activation::{Activation, ActivationMoments, Integrator};
pub use error::{Error, Result};
pub use learner::{HyperParams, LearnerState, Record, TheoremDiagnostics, Trajectory};
pub use teacher::{Dataset, FilterLayout, InputDist, TeacherSpec};
