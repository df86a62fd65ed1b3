//! Per-prediction explanations for black-box binary classifiers.
//!
//! An explanation is a single threshold rule `g(x) <= a` that holds at the
//! explained point and, under the input density, agrees with the classifier
//! as well as possible. Quality is measured by the score
//! `S(E) = P(E | f = 1) - P(E | f = 0)`.
//!
//! The pipeline has two phases:
//!
//! 1. [`precompute::build_tables`] draws class-conditional Monte Carlo pools
//!    once and turns every explanation family into a [`precompute::ScoreTable`]
//!    holding the estimated score curve and its cumulative-argmax table.
//! 2. [`explain::explain`] answers a query point with one table lookup per
//!    family.
//!
//! [`extended`] learns linear explanation families with a convex surrogate
//! loss; its output feeds back into phase 1 as ordinary families.

pub mod blackbox;
pub mod cli;
pub mod density;
pub mod error;
pub mod explain;
pub mod explanation;
pub mod extended;
pub mod io;
pub mod precompute;
pub mod score;
pub mod step;
pub mod tables_file;
pub mod viz;

pub use blackbox::{BlackBox, LinearModel, MulticlassModel, RuleModel};
pub use density::InputDensity;
pub use error::{MesError, Result};
pub use explain::{explain, ExplanationReport};
pub use explanation::{Direction, Explanation, ExplanationFamily, FamilyKind, FeatureVector};
pub use precompute::{build_tables, sample_size, SampleBudget, ScoreTable};
pub use step::StepFunction;
