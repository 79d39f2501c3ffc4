//! Differentiable hierarchical rule induction.
//!
//! Auxiliary predicates are laid out in layers, one per proto-rule per layer,
//! and matched to the predicates below them by a softmax over embedding
//! similarities. Forward chaining over fuzzy valuations is differentiable in
//! every embedding, so the whole hypothesis space is trained by gradient
//! descent and read back as a definite-clause program by taking the argmax
//! of each unification distribution.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod error;
pub mod extraction;
pub mod harness;
pub mod inference;
pub mod logic;
pub mod model;
pub mod scalar;
pub mod tasks;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Model32 = model::Model<f32>;
pub type Model64 = model::Model<f64>;
pub type ValuationState32 = inference::ValuationState<f32>;
pub type ValuationState64 = inference::ValuationState<f64>;
pub type Instance32 = inference::Instance<f32>;
pub type Instance64 = inference::Instance<f64>;
