//! Reduction of totally definite quadratic forms over small totally real fields,
//! exact lattice counting, Jacobi matrix coefficients and amplified sup-norm
//! exponent arithmetic.

pub mod amplifier;
pub mod arith;
pub mod counting;
pub mod error;
pub mod enumerate;
pub mod field;
pub mod forms;
pub mod ideal;
pub mod linalg;
pub mod quaternion;
pub mod reduce;
pub mod reports;
pub mod special;
pub mod units;

pub use error::{Error, Result};
pub use field::{Field, FieldElement, FieldTag, OInt, Ring};
