//! Homogenised surface energies for rugose boundaries in nematic Q-tensor
//! models, with a finite element harness that measures how fast the rugose
//! Robin problem approaches its homogenised limit.

pub mod analytic;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod homogenize;
pub mod profile;
pub mod quadrature;
pub mod study;
pub mod tensor;

pub use error::{Error, Result};
