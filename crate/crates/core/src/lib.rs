//! Persona-aware response selection with a multi-hop co-attention matcher.
//!
//! The numeric core is generic over [`Scalar`] (`f32` for training and
//! inference, `f64` for gradient verification); the aliases below fix the
//! common instantiations.

pub mod corpus;
pub mod encoder;
mod error;
pub mod evaluator;
pub mod matcher;
pub mod numerics;
pub mod run;
mod scalar;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = numerics::Matrix<f32>;
pub type Matrix64 = numerics::Matrix<f64>;
pub type ParamStore = numerics::ParamStore<f32>;
pub type ParamStore64 = numerics::ParamStore<f64>;
pub type Tape = numerics::Tape<f32>;
pub type Tape64 = numerics::Tape<f64>;
pub type MatchFeatures = matcher::MatchFeatures<f32>;
