//! Frank-Wolfe with k-best linear oracles and low-dimensional direction search.

pub mod bench;
pub mod certificates;
pub mod error;
pub mod linalg;
pub mod objective;
pub mod projections;
pub mod sets;
pub mod solver;
pub mod subsolver;

pub use error::{KfwError, Result};
