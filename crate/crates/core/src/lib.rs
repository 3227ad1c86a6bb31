//! Joint word and paragraph embeddings trained directly on the unit hypersphere.
//!
//! The pipeline is: [`corpus`] turns a one-paragraph-per-line text file into
//! (center, context, paragraph) tuples, [`model`] fits three banks of unit vectors
//! with a max-margin objective and Riemannian SGD (geometry in [`sphere`]), and
//! [`eval`] scores the result on word similarity, clustering and classification.
//! [`vmf`] holds the von Mises-Fisher pieces the objective is derived from.

// `!(x > y)` comparisons are NaN guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod model;
pub mod sphere;
pub mod vmf;

pub use error::{Error, Result};
