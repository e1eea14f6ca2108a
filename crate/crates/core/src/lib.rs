//! Model-agnostic engine for measuring how responsive a classifier's
//! prediction is to single-feature interventions under explicit
//! actionability constraints.
//!
//! For an individual `x` denied by a classifier `f`, the responsiveness
//! score of feature `j` is the probability that a uniformly random feasible
//! action on `j` (with its forced downstream effects) attains the target
//! prediction. Scores are computed exactly by enumerating the reachable set
//! of `j` when its constraint part is discrete, or estimated with
//! Agresti-Coull confidence intervals from rejection sampling otherwise.
//! On top of the scores sit recourse triage (single-feature / joint-only /
//! fixed prediction), explanation construction, and baseline attribution
//! methods (local surrogate, Shapley values) used as audit subjects.
//!
//! Modules follow the pipeline:
//! [`actionability`] (constraint model) -> [`solver`] (complete search) ->
//! [`reachable`] (set construction) -> [`responsiveness`] (scores, triage)
//! with [`models`] (portable classifiers, datasets) and [`attribution`]
//! (surrogate/Shapley explainers) alongside.

pub mod actionability;
pub mod attribution;
pub mod error;
pub mod models;
pub mod reachable;
pub mod responsiveness;
pub mod solver;

pub use error::{Error, Result};
