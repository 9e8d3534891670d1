//! Numerical operator algebra for Bell/CHSH and Mermin parameters, the
//! second-quantized Ou–Mandel coincidence calculation, and de Broglie–Bohm
//! guidance dynamics for product and symmetrized two-particle states.
//!
//! Every quantity is computed from explicit dense matrices or closed-form
//! wavefunctions so that each identity can be checked against an
//! independent route.

pub mod chsh;
pub mod cli;
pub mod dbb;
pub mod eigen;
pub mod error;
pub mod fock;
pub mod lhv;
pub mod mermin;
pub mod operator;

pub use error::{Error, Result};
pub use num_complex::Complex64 as Complex;
pub use operator::{Angle, CMatrix, Ket, MeasurementOp};
