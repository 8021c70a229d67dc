//! Reflection profiles for a passive IRS.
//!
//! Direction mode turns an incoming plane wave from `φ_in` into an outgoing
//! one towards `φ_out`; return mode sends it back along its arrival path.

use crate::channel::PhaseShiftMatrix;
use crate::error::Result;
use std::f64::consts::TAU;

/// `θ_n = −2·(2π d)·n·sin φ_in`.
pub fn return_mode(
    num_elements: usize,
    spacing_wavelengths: f64,
    angle_in: f64,
    amplitude: f64,
) -> Result<PhaseShiftMatrix> {
    let step = -2.0 * TAU * spacing_wavelengths * angle_in.sin();
    PhaseShiftMatrix::new(linear_phases(num_elements, step), amplitude)
}

/// `θ_n = (2π d)·n·(sin φ_out − sin φ_in)`, so that `Θ a(φ_in) = β a(φ_out)`.
pub fn direction_mode(
    num_elements: usize,
    spacing_wavelengths: f64,
    angle_in: f64,
    angle_out: f64,
    amplitude: f64,
) -> Result<PhaseShiftMatrix> {
    let step = TAU * spacing_wavelengths * (angle_out.sin() - angle_in.sin());
    PhaseShiftMatrix::new(linear_phases(num_elements, step), amplitude)
}

fn linear_phases(num_elements: usize, step: f64) -> Vec<f64> {
    (0..num_elements).map(|n| step * n as f64).collect()
}
