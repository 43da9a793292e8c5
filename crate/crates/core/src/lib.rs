pub mod dataset;
pub mod cli;
pub mod clustering;
pub mod error;
pub mod eval;
pub mod experiments;
#[cfg(test)]
mod invariants;
pub mod io;
pub mod kernels;
pub mod laplace;
pub mod models;
pub mod synthetic;
