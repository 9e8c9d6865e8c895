//! Out-of-distribution reject option for tabular prediction.

pub mod error;
pub mod explain;
pub mod gbt;
pub mod nn;
pub mod odrop;
pub mod ood;
pub mod stats;
pub mod svg;
pub mod synth;
pub mod tabular;

pub use error::{Error, Result};
