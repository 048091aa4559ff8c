//! Numerical laboratory for the supercooled Stefan problem.

pub mod config;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod obstacle;
pub mod potential;
pub mod primal_dual;
pub mod radial;
pub mod scenario;
pub mod stochastic;
pub mod tol;

pub use error::{Error, Result};
