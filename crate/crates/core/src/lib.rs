//! Emotion recognition from 68-point facial landmarks.
//!
//! The pipeline normalizes landmark shapes ([`shapes`]), extracts distance,
//! axis-offset and Gabor texture features ([`features`]), trains boosted
//! two-split trees or one-vs-one RBF SVMs ([`learners`]) and summarizes
//! results as confusion matrices and feature-influence rankings ([`eval`]).

pub mod error;
pub mod eval;
pub mod features;
pub mod image;
pub mod label;
pub mod learners;
pub mod persist;
pub mod shapes;

pub use error::{Error, Result};
pub use label::Emotion;
