//! Rational covariance extension and Nevanlinna–Pick interpolation with degree
//! constraint, solved through the covariance extension equation (CEE).

pub mod cee;
pub mod cli;
pub mod control;
pub mod error;
pub mod homotopy;
pub mod io;
pub mod poly;
pub mod problem;
pub mod series;
pub mod solver;
pub mod specest;
pub mod sphere;

pub use error::{Error, Result};
