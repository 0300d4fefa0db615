//! Humor-detection benchmark harness for Dutch jokes: tokenization, POS
//! tagging, dynamic-template negative generation, dataset assembly, Naive
//! Bayes and neural baselines, and evaluation.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision the command-line front end uses.

pub mod datasets;
pub mod dyntemplate;
pub mod error;
pub mod eval;
pub mod nb;
pub mod neural;
pub mod scalar;
pub mod seed;
pub mod synthetic;
pub mod tagger;
pub mod text;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

pub type NbClassifierF32 = nb::NbClassifier<f32>;
pub type NbClassifierF64 = nb::NbClassifier<f64>;
pub type ClassifierF32 = neural::Classifier<f32>;
pub type ClassifierF64 = neural::Classifier<f64>;
pub type EmbeddingsF32 = neural::EmbeddingMatrix<f32>;
pub type EmbeddingsF64 = neural::EmbeddingMatrix<f64>;
pub type MaxAccCurveF64 = eval::MaxAccCurve<f64>;
