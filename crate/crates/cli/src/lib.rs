//! Config handling and experiment dispatch behind the `ftj` binary.

pub mod config;
pub mod run;
pub mod units;
