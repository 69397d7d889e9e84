//! Train small time-series classifiers, attribute their decisions to input
//! cells, and audit how stable those attributions are.

pub mod attribution;
pub mod autodiff;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod framing;
pub mod models;
pub mod pipeline;
pub mod seed;

pub use error::{Error, Result};
