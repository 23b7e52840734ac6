//! Spectral stability toolkit for plane Couette flow.

pub mod error;
pub mod field;
pub mod io;
pub mod lab;
pub mod linalg;
pub mod norms;
pub mod operator;
pub mod par;
pub mod physical;
pub mod resolvent;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{random_solenoidal, RandomFieldSpec, Repr, VelocityField};
pub use norms::NormKind;
pub use num_complex::Complex64 as C64;
pub use spectral::Grid;
