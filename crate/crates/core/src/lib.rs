//! Canonical forms for Bell-like inequalities.
//!
//! An inequality is reduced to a unique representative by projecting out
//! normalization and no-signalling freedom, scaling to coprime integers,
//! removing irrelevant parties, settings and outcomes, splitting tensor
//! products, and picking the lexicographically smallest relabeling.

pub mod canonical;
pub mod compendium;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod linalg;
pub mod nsbasis;
pub mod scenario;
pub mod symmgroup;

pub use error::{Error, Result};
pub use expr::{BellExpression, Bound, CorrelationPoint, IndexTuple, OrientedExpression, Rational};
pub use scenario::{ReorderMap, Scenario};
