//! Uniform linear arrays: steering vectors, beam gain and the uniform-in-sine
//! narrow-beam grid.
//!
//! Angles are measured from the array broadside, positive towards the array
//! axis. A ULA cannot tell `φ` from `π − φ`, so every angle the crate hands
//! out is the front-range representative in `[−π/2, π/2]`; [`mirror`] gives
//! the back-range twin when it is needed.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::CVector;

const HALF_WAVELENGTH: f64 = 0.5;

/// Element count, spacing (in wavelengths) and broadside orientation of a ULA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec {
    num_elements: usize,
    spacing_wavelengths: f64,
    orientation: f64,
}

impl ArraySpec {
    pub fn new(num_elements: usize, spacing_wavelengths: f64, orientation: f64) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::InvalidParameter("array needs at least one element".into()));
        }
        if !(spacing_wavelengths > 0.0) || !spacing_wavelengths.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "element spacing must be positive, got {spacing_wavelengths}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing_wavelengths,
            orientation,
        })
    }

    /// Half-wavelength ULA with broadside along the scene x axis.
    pub fn half_wavelength(num_elements: usize) -> Self {
        Self::new(num_elements, HALF_WAVELENGTH, 0.0).expect("element count must be positive")
    }

    pub fn with_orientation(mut self, orientation: f64) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }

    /// Scene direction of the array broadside, in radians.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn is_half_wavelength(&self) -> bool {
        (self.spacing_wavelengths - HALF_WAVELENGTH).abs() < 1e-12
    }

    /// Electrical phase step between neighbouring elements per unit of `sin φ`.
    pub fn phase_step(&self) -> f64 {
        TAU * self.spacing_wavelengths
    }

    /// Off-broadside angle, in `(−π, π]`, of a scene direction.
    pub fn local_angle(&self, scene_direction: f64) -> f64 {
        wrap_angle(scene_direction - self.orientation)
    }
}

/// What a beam vector was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamKind {
    Narrow,
    Wide,
    Omni,
}

/// Complex antenna weights together with their intended use.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector {
    coefficients: CVector,
    kind: BeamKind,
}

impl BeamVector {
    pub fn new(coefficients: CVector, kind: BeamKind) -> Self {
        Self { coefficients, kind }
    }

    /// Single active element (the first one) at unit amplitude.
    pub fn omni(num_elements: usize) -> Self {
        let mut coefficients = CVector::zeros(num_elements);
        coefficients[0] = Complex64::new(1.0, 0.0);
        Self::new(coefficients, BeamKind::Omni)
    }

    pub fn coefficients(&self) -> &CVector {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> CVector {
        self.coefficients
    }

    pub fn kind(&self) -> BeamKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.norm()
    }

    /// `wᴴ v` for a probe vector `v`.
    pub fn inner(&self, v: &CVector) -> Result<Complex64> {
        check_len(self.len(), v.len())?;
        Ok(self.coefficients.dotc(v))
    }
}

/// Raw ULA response `a(φ)`, entry `n` equal to `exp(j·2π·d·n·sin φ)/√N`.
pub fn steering_vector(spec: &ArraySpec, angle: f64) -> CVector {
    let n = spec.num_elements;
    let step = spec.phase_step() * angle.sin();
    let scale = 1.0 / (n as f64).sqrt();
    CVector::from_fn(n, |i, _| Complex64::from_polar(scale, step * i as f64))
}

/// Narrow beam pointing at `angle`.
pub fn steering(spec: &ArraySpec, angle: f64) -> BeamVector {
    BeamVector::new(steering_vector(spec, angle), BeamKind::Narrow)
}

/// Amplitude gain `|wᴴ a(probe)|` of a beam in a probe direction.
pub fn beam_gain(w: &BeamVector, spec: &ArraySpec, probe: f64) -> Result<f64> {
    check_len(spec.num_elements, w.len())?;
    Ok(w.inner(&steering_vector(spec, probe))?.norm())
}

/// Normalized half-wavelength array factor `|sin(Nπx/2) / (N sin(πx/2))|`
/// for a sine offset `x` between beam and probe.
pub fn pattern(num_elements: usize, x: f64) -> f64 {
    let n = num_elements as f64;
    let den = n * (PI * x / 2.0).sin();
    if den.abs() < 1e-300 || (x / 2.0 - (x / 2.0).round()).abs() < 1e-15 {
        // removable singularity at even integers
        return 1.0;
    }
    ((n * PI * x / 2.0).sin() / den).abs()
}

/// Coverage-edge energy ρ shared by the `K` beams of a uniform-in-sine grid.
pub fn edge_energy(num_elements: usize, k: usize) -> Result<f64> {
    check_grid(num_elements, k)?;
    let (n, k) = (num_elements as f64, k as f64);
    Ok((n * PI / (2.0 * k)).sin() / (n * (PI / (2.0 * k)).sin()))
}

fn check_grid(num_elements: usize, k: usize) -> Result<()> {
    if num_elements == 0 || k < num_elements {
        return Err(Error::GridTooCoarse { n: num_elements, k });
    }
    Ok(())
}

/// `K` narrow beams whose sines sit at the midpoints of a uniform partition
/// of `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGrid {
    k: usize,
    num_elements: usize,
    directions: Vec<f64>,
    edge_energy: f64,
}

impl BeamGrid {
    /// Grid for a concrete array; only half-wavelength spacing is supported.
    pub fn for_array(spec: &ArraySpec, k: usize) -> Result<Self> {
        if !spec.is_half_wavelength() {
            return Err(Error::UnsupportedSpacing(spec.spacing_wavelengths));
        }
        grid_directions(spec.num_elements, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn directions(&self) -> &[f64] {
        &self.directions
    }

    pub fn direction(&self, index: usize) -> f64 {
        self.directions[index]
    }

    pub fn edge_energy(&self) -> f64 {
        self.edge_energy
    }

    /// Sine of beam `index` (0-based): `(2i+1)/K − 1`.
    pub fn sine(&self, index: usize) -> f64 {
        grid_sine(index, self.k)
    }

    /// Sines of the lower and upper coverage edges of beam `index`.
    pub fn edges(&self, index: usize) -> (f64, f64) {
        let k = self.k as f64;
        (2.0 * index as f64 / k - 1.0, 2.0 * (index + 1) as f64 / k - 1.0)
    }

    /// Beam whose direction is closest in sine to `angle`; lower index on ties.
    pub fn nearest(&self, angle: f64) -> usize {
        let s = angle.sin();
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for i in 0..self.k {
            let d = (self.sine(i) - s).abs();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }
}

fn grid_sine(index: usize, k: usize) -> f64 {
    (2 * index + 1) as f64 / k as f64 - 1.0
}

/// Front-range beam directions `arcsin((2i−1)/K − 1)`, `i = 1..K`.
pub fn grid_directions(num_elements: usize, k: usize) -> Result<BeamGrid> {
    let rho = edge_energy(num_elements, k)?;
    let directions = (0..k).map(|i| grid_sine(i, k).asin()).collect();
    Ok(BeamGrid {
        k,
        num_elements,
        directions,
        edge_energy: rho,
    })
}

/// Back-range twin `π − φ` of a direction.
pub fn mirror(angle: f64) -> f64 {
    PI - angle
}

/// Front-range representative in `[−π/2, π/2]` of any angle.
pub fn fold_front(angle: f64) -> f64 {
    let a = wrap_angle(angle);
    if a > FRAC_PI_2 {
        PI - a
    } else if a < -FRAC_PI_2 {
        -PI - a
    } else {
        a
    }
}

/// Wrap to `(−π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

/// Distance between two directions measured in the sine domain.
pub fn sine_distance(a: f64, b: f64) -> f64 {
    (a.sin() - b.sin()).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn broadside_steering_is_flat() {
        let v = steering_vector(&ArraySpec::half_wavelength(4), 0.0);
        for c in v.iter() {
            assert_abs_diff_eq!(c.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn thirty_degrees_gives_quarter_turns() {
        let v = steering_vector(&ArraySpec::half_wavelength(4), PI / 6.0);
        let expected = [(0.5, 0.0), (0.0, 0.5), (-0.5, 0.0), (0.0, -0.5)];
        for (c, (re, im)) in v.iter().zip(expected) {
            assert_abs_diff_eq!(c.re, re, epsilon = 1e-12);
            assert_abs_diff_eq!(c.im, im, epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_scalar_evaluation() {
        // cos/sin evaluated element by element, no complex exponential
        let spec = ArraySpec::half_wavelength(32);
        let v = steering_vector(&spec, 0.3);
        let s = 0.3f64.sin();
        for n in 0..32 {
            let phase = PI * n as f64 * s;
            assert_abs_diff_eq!(v[n].re, phase.cos() / 32f64.sqrt(), epsilon = 1e-13);
            assert_abs_diff_eq!(v[n].im, phase.sin() / 32f64.sqrt(), epsilon = 1e-13);
        }
    }

    #[test]
    fn self_gain_is_one_and_mirror_matches() {
        let spec = ArraySpec::half_wavelength(16);
        let w = steering(&spec, 0.7);
        assert_abs_diff_eq!(beam_gain(&w, &spec, 0.7).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(beam_gain(&w, &spec, PI - 0.7).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gain_rejects_length_mismatch() {
        let w = steering(&ArraySpec::half_wavelength(8), 0.1);
        let err = beam_gain(&w, &ArraySpec::half_wavelength(4), 0.1).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn two_beam_grid() {
        let g = grid_directions(2, 2).unwrap();
        assert_abs_diff_eq!(g.direction(0), -PI / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.direction(1), PI / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_sines_are_midpoints() {
        let g = grid_directions(32, 64).unwrap();
        assert_eq!(g.directions().len(), 64);
        for i in 0..64 {
            let expected = (2.0 * (i + 1) as f64 - 1.0) / 64.0 - 1.0;
            assert_abs_diff_eq!(g.direction(i).sin(), expected, epsilon = 1e-12);
            let (lo, hi) = g.edges(i);
            assert_abs_diff_eq!((lo + hi) / 2.0, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        assert_eq!(edge_energy(32, 31).unwrap_err(), Error::GridTooCoarse { n: 32, k: 31 });
        assert!(grid_directions(8, 4).is_err());
        let quarter = ArraySpec::new(8, 0.25, 0.0).unwrap();
        assert!(matches!(BeamGrid::for_array(&quarter, 16), Err(Error::UnsupportedSpacing(_))));
    }

    #[test]
    fn edge_energy_limits() {
        assert!((edge_energy(32, 1 << 20).unwrap() - 1.0).abs() < 1e-6);
        for n in [4usize, 16, 32] {
            let expected = 1.0 / (n as f64 * (PI / (2.0 * n as f64)).sin());
            assert_abs_diff_eq!(edge_energy(n, n).unwrap(), expected, epsilon = 1e-14);
        }
        let mut prev = 0.0;
        for k in 32..=256 {
            let rho = edge_energy(32, k).unwrap();
            assert!(rho > prev, "rho not increasing at K={k}");
            prev = rho;
        }
    }

    #[test]
    fn gain_at_edges_equals_rho() {
        for (n, k) in [(8, 8), (16, 32), (32, 64), (32, 96)] {
            let spec = ArraySpec::half_wavelength(n);
            let g = grid_directions(n, k).unwrap();
            for i in 0..k {
                let w = steering(&spec, g.direction(i));
                let (lo, hi) = g.edges(i);
                assert_abs_diff_eq!(g.sine(i) - lo, 1.0 / k as f64, epsilon = 1e-12);
                assert_abs_diff_eq!(hi - g.sine(i), 1.0 / k as f64, epsilon = 1e-12);
                for edge in [lo, hi] {
                    let gain = beam_gain(&w, &spec, edge.asin()).unwrap();
                    assert_abs_diff_eq!(gain, g.edge_energy(), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn main_lobe_is_monotone() {
        for n in [8usize, 32, 64] {
            let limit = 2.0 / n as f64;
            let mut prev = pattern(n, 0.0);
            for i in 1..=4000 {
                let x = limit * i as f64 / 4000.0;
                let t = pattern(n, x);
                assert!(t <= prev + 1e-15, "pattern rises at x={x}");
                assert_abs_diff_eq!(t, pattern(n, -x), epsilon = 1e-15);
                prev = t;
            }
        }
    }

    #[test]
    fn pattern_matches_vector_gain() {
        let spec = ArraySpec::half_wavelength(24);
        let w = steering(&spec, 0.2);
        for probe in [-1.2, -0.3, 0.21, 0.9] {
            let x = f64::sin(probe) - f64::sin(0.2);
            assert_abs_diff_eq!(beam_gain(&w, &spec, probe).unwrap(), pattern(24, x), epsilon = 1e-12);
        }
    }

    #[test]
    fn nearest_uses_sine_distance() {
        let g = grid_directions(4, 8).unwrap();
        assert_eq!(g.nearest(g.direction(5)), 5);
        assert_eq!(g.nearest(PI - g.direction(2)), 2);
        // exactly on an edge: lower index wins
        assert_eq!(g.nearest(g.edges(3).1.asin()), 3);
    }

    #[test]
    fn local_angle_and_folding() {
        let irs = ArraySpec::half_wavelength(4).with_orientation(PI);
        assert_abs_diff_eq!(irs.local_angle(PI), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fold_front(PI - 0.4), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(fold_front(-PI + 0.4), -0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(fold_front(0.3 + TAU), 0.3, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn steering_has_unit_norm(n in 1usize..128, angle in -PI..PI) {
            let v = steering(&ArraySpec::half_wavelength(n), angle);
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn gain_is_mirror_symmetric(phi in -FRAC_PI_2..FRAC_PI_2, psi in -PI..PI) {
            let spec = ArraySpec::half_wavelength(32);
            let w = steering(&spec, phi);
            let a = beam_gain(&w, &spec, psi).unwrap();
            let b = beam_gain(&w, &spec, PI - psi).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a <= 1.0 + 1e-12);
        }
    }
}
