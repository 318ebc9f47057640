// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod isoflop;
pub mod law1;
pub mod law2;
pub mod multilingual;
pub mod optimizer;
pub mod plot;
pub mod recipes;
pub mod records;
pub mod synth;

pub use error::{Error, Result};
