//! Canonicalization and simplification of scalar polynomial invariants of
//! the Riemann tensor and its covariant derivatives.

pub mod canon;
pub mod database;
pub mod enumerate;
pub mod error;
pub mod exprio;
pub mod lincomb;
pub mod monomial;
pub mod oracle;
pub mod permgroup;
pub mod reducer;
pub mod relations;

pub use error::{Error, Result};
