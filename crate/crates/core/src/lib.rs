//! Fairness of classifiers under generated missingness.
//!
//! The pipeline: load a benchmark table ([`table`], [`datasets`]), inject
//! missing values under MCAR/MAR/MNAR ([`ampute`]), repair the training
//! split by deletion or single imputation ([`impute`]), fit and tune
//! classifiers ([`classify`]), score group fairness and accuracy on the
//! complete test split ([`fairness`]), and analyse the resulting factorial
//! design ([`stats`], [`harness`]).

pub mod ampute;
pub mod classify;
pub mod datasets;
pub mod error;
pub mod fairness;
pub mod harness;
pub mod impute;
pub mod matrix;
pub mod rng;
pub mod stats;
pub mod table;

pub use error::{Error, Result};
