//! Power lost to beam-grid quantization during training.
//!
//! A path at a continuous angle `φ*` is observed through the best of `K`
//! grid beams; the loss is measured on the amplitude gain `A` (the quantity
//! the coverage-edge energy ρ is defined on).

use std::f64::consts::PI;

use crate::array::{beam_gain, edge_energy, grid_directions, pattern, steering, ArraySpec};
use crate::error::Result;
use crate::quadrature::integrate;

/// Absolute tolerance of the average-error quadrature.
pub const QUADRATURE_ABS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationReport {
    pub num_elements: usize,
    pub k: usize,
    pub worst_error: f64,
    pub average_error: f64,
    pub quadrature_abs_tol: f64,
}

/// Loss when the path sits on a coverage edge: `1 − ρ(N_a, K)`.
pub fn worst_error(num_elements: usize, k: usize) -> Result<f64> {
    let (n, kf) = (num_elements as f64, k as f64);
    // evaluated from its own closed form, independently of edge_energy
    edge_energy(num_elements, k)?;
    Ok(1.0 - (n * PI / (2.0 * kf)).sin() / (n * (PI / (2.0 * kf)).sin()))
}

/// Expected loss for a path angle uniform over the full circle.
///
/// The sine of a uniform angle has density `1/(π√(1−y²))`. Each grid beam
/// owns one piece of `(−1, 1)`; substituting `y = sin u` removes the
/// endpoint singularity, leaving a smooth integrand per piece.
pub fn average_error(num_elements: usize, k: usize) -> Result<f64> {
    average_error_with_tol(num_elements, k, QUADRATURE_ABS_TOL)
}

pub fn average_error_with_tol(num_elements: usize, k: usize, abs_tol: f64) -> Result<f64> {
    edge_energy(num_elements, k)?;
    let kf = k as f64;
    let piece_tol = abs_tol / kf;
    let mut accuracy = 0.0;
    for i in 0..k {
        let center = (2 * i + 1) as f64 / kf - 1.0;
        let lo = (2.0 * i as f64 / kf - 1.0).max(-1.0);
        let hi = (2.0 * (i + 1) as f64 / kf - 1.0).min(1.0);
        let piece = integrate(
            |u: f64| pattern(num_elements, u.sin() - center) / PI,
            lo.asin(),
            hi.asin(),
            piece_tol,
        )?;
        accuracy += piece.value;
    }
    Ok(1.0 - accuracy)
}

pub fn report(num_elements: usize, k: usize) -> Result<QuantizationReport> {
    Ok(QuantizationReport {
        num_elements,
        k,
        worst_error: worst_error(num_elements, k)?,
        average_error: average_error(num_elements, k)?,
        quadrature_abs_tol: QUADRATURE_ABS_TOL,
    })
}

/// Best amplitude gain any of the `K` grid beams achieves on a path at
/// `true_angle` (half-wavelength array).
pub fn estimated_power_ratio(num_elements: usize, k: usize, true_angle: f64) -> Result<f64> {
    let grid = grid_directions(num_elements, k)?;
    let spec = ArraySpec::half_wavelength(num_elements);
    let path = steering(&spec, true_angle);
    let mut best = 0.0f64;
    for &dir in grid.directions() {
        best = best.max(beam_gain(&path, &spec, dir)?);
    }
    Ok(best)
}

/// Squared variant of [`estimated_power_ratio`].
pub fn estimated_energy_ratio(num_elements: usize, k: usize, true_angle: f64) -> Result<f64> {
    Ok(estimated_power_ratio(num_elements, k, true_angle)?.powi(2))
}
