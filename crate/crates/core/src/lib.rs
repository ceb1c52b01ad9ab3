//! Fixed-budget thresholding bandits with monotone and concave mean profiles.
//!
//! [`env`] defines problems and sampling, [`tree`] the search tree the walks
//! move on, [`algos`] the sampling strategies, [`bounds`] the closed-form error
//! rates, [`harness`] the Monte-Carlo runner and [`cli`] the `tbp` binary.

pub mod algos;
pub mod bounds;
pub mod cli;
pub mod env;
pub mod error;
pub mod harness;
pub mod tree;

pub use error::{Result, TbpError};
