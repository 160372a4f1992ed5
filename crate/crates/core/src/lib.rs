//! Numerical toolkit for clocks coupled to a massive scalar environment.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlators;
pub mod error;
pub mod gkls;
pub mod hybridcq;
pub mod integrability;
pub mod kernels;
pub mod langevin;
pub mod linalg;
pub mod rates;
mod sampling;
pub mod specfun;
pub mod trajectories;

pub use error::{Error, Result};
