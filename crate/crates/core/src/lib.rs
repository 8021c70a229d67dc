//! Simulation of IRS-assisted terahertz MIMO links.
//!
//! The crate covers the whole link pipeline: ULA steering and beam grids
//! ([`array`]), THz path loss and cascaded IRS channels ([`channel`]),
//! beam-training quantization loss ([`quantization`]), arbitrary-K M-tree
//! codebooks ([`codebook`]), IRS reflection profiles ([`irs_control`]), the
//! two-phase cooperative estimation protocol ([`training`]), closed-form
//! hybrid transceiver design with water-filling ([`transmission`]) and the
//! Monte Carlo experiment driver ([`harness`]).

pub mod array;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod harness;
pub mod irs_control;
pub mod quadrature;
pub mod quantization;
pub mod training;
pub mod transmission;

pub use error::{Error, Result};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex column vector.
pub type CVector = DVector<Complex64>;
/// Dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;
