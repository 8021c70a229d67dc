//! THz propagation and the cascaded Alice → IRS → Bob channel.
//!
//! Each IRS contributes one rank-one hop in (`M_l`, Alice to IRS) and one
//! rank-one hop out (`N_l`, IRS to Bob). Links follow the convention
//! `a · a_rx(aoa) · a_tx(aod)ᴴ`, so a departure angle enters conjugated.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::array::{steering_vector, ArraySpec};
use crate::error::{check_len, Error, Result};
use crate::{CMatrix, CVector};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Power ratio from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Watts from dBm.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Carrier, absorption and gain constants of the link budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Carrier frequency `f` in Hz.
    pub carrier_frequency: f64,
    /// Molecular absorption coefficient `τ(f)` in 1/m.
    pub absorption_coefficient: f64,
    pub light_speed: f64,
    /// Linear transmit antenna gain `G_t`.
    pub tx_gain: f64,
    /// Linear receive antenna gain `G_r`.
    pub rx_gain: f64,
    /// Linear IRS element gain `G`.
    pub irs_element_gain: f64,
    /// Reflection amplitude `β` applied by every IRS element.
    pub reflection_amplitude: f64,
}

impl Default for PhysicalConstants {
    /// 0.3 THz indoor link, 18 dBi terminals, 0 dBi IRS elements, `β = 1`.
    fn default() -> Self {
        Self {
            carrier_frequency: 0.3e12,
            absorption_coefficient: 0.0033,
            light_speed: SPEED_OF_LIGHT,
            tx_gain: db_to_linear(18.0),
            rx_gain: db_to_linear(18.0),
            irs_element_gain: 1.0,
            reflection_amplitude: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_frequency", self.carrier_frequency),
            ("light_speed", self.light_speed),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
            ("irs_element_gain", self.irs_element_gain),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.absorption_coefficient >= 0.0) {
            return Err(Error::InvalidParameter("absorption coefficient must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.reflection_amplitude) {
            return Err(Error::InvalidParameter(format!(
                "reflection amplitude must lie in [0, 1], got {}",
                self.reflection_amplitude
            )));
        }
        Ok(())
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("distance must be positive, got {d}")))
    }
}

/// Spreading plus molecular absorption amplitude `c/(4πfd) · exp(−τd/2)`.
pub fn path_loss(consts: &PhysicalConstants, distance: f64) -> Result<f64> {
    check_distance(distance)?;
    let spread = consts.light_speed / (4.0 * PI * consts.carrier_frequency * distance);
    Ok(spread * (-0.5 * consts.absorption_coefficient * distance).exp())
}

/// Path-loss compensation factor `η = 2√π · f · G · N_r / c` of an IRS.
pub fn compensation_factor(consts: &PhysicalConstants, irs_elements: usize) -> f64 {
    2.0 * PI.sqrt() * consts.carrier_frequency * consts.irs_element_gain * irs_elements as f64
        / consts.light_speed
}

/// Closed-form far-field cascade loss of an Alice → IRS → Bob hop pair.
pub fn cascade_loss(
    consts: &PhysicalConstants,
    irs_elements: usize,
    d_in: f64,
    d_out: f64,
) -> Result<f64> {
    check_distance(d_in)?;
    check_distance(d_out)?;
    let num = consts.tx_gain
        * consts.rx_gain
        * consts.irs_element_gain
        * irs_elements as f64
        * consts.light_speed;
    let den = 8.0 * PI.powi(3).sqrt() * consts.carrier_frequency * d_in * d_out;
    Ok(num / den * (-0.5 * consts.absorption_coefficient * (d_in + d_out)).exp())
}

/// Rank-one LoS link `a(f,d) · a_rx(aoa) · a_tx(aod)ᴴ`.
pub fn make_link(
    consts: &PhysicalConstants,
    tx: &ArraySpec,
    rx: &ArraySpec,
    aod: f64,
    aoa: f64,
    distance: f64,
) -> Result<CMatrix> {
    let amplitude = path_loss(consts, distance)?;
    let arrive = steering_vector(rx, aoa) * Complex64::new(amplitude, 0.0);
    let depart = steering_vector(tx, aod);
    Ok(&arrive * depart.adjoint())
}

/// Diagonal IRS reflection `diag(β e^{jθ_n})`, stored as its phase list.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftMatrix {
    phases: Vec<f64>,
    amplitude: f64,
}

impl PhaseShiftMatrix {
    /// Phases are reduced into `[0, 2π)`.
    pub fn new(phases: Vec<f64>, amplitude: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&amplitude) {
            return Err(Error::InvalidParameter(format!(
                "reflection amplitude must lie in [0, 1], got {amplitude}"
            )));
        }
        let phases = phases.into_iter().map(reduce_phase).collect();
        Ok(Self { phases, amplitude })
    }

    /// Fully absorbing surface (`β = 0`).
    pub fn absorbing(num_elements: usize) -> Self {
        Self {
            phases: vec![0.0; num_elements],
            amplitude: 0.0,
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn entry(&self, n: usize) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phases[n])
    }

    pub fn diagonal(&self) -> CVector {
        CVector::from_fn(self.len(), |i, _| self.entry(i))
    }

    /// Element-wise application `Θ v`.
    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        check_len(self.len(), v.len())?;
        Ok(CVector::from_fn(v.len(), |i, _| self.entry(i) * v[i]))
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        Self::new(self.phases.clone(), amplitude)
    }
}

pub(crate) fn reduce_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// The four angles of one IRS path, in link convention (departures enter
/// as `a(φ)ᴴ`, arrivals as `a(φ)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAngles {
    /// Departure from Alice towards the IRS, `φ_{A,M}`.
    pub alice_departure: f64,
    /// Arrival at the IRS from Alice, `φ_{R,M}`.
    pub irs_arrival: f64,
    /// Departure from the IRS towards Bob, `φ_{R,N}`.
    pub irs_departure: f64,
    /// Arrival at Bob from the IRS, `φ_{B,N}`.
    pub bob_arrival: f64,
}

/// One IRS path of the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsLink {
    /// `M_l`, `N_r × N_t`.
    pub to_irs: CMatrix,
    /// `N_l`, `N_u × N_r`.
    pub from_irs: CMatrix,
    pub eta: f64,
    pub d_in: f64,
    pub d_out: f64,
    pub angles: LinkAngles,
}

/// Per-IRS rank-one hops plus the array descriptions they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeChannel {
    pub alice: ArraySpec,
    pub bob: ArraySpec,
    pub irs: ArraySpec,
    pub links: Vec<IrsLink>,
}

impl CascadeChannel {
    /// Builds every hop from its angles and distances.
    pub fn new(
        consts: &PhysicalConstants,
        alice: ArraySpec,
        irs: ArraySpec,
        bob: ArraySpec,
        paths: &[(LinkAngles, f64, f64)],
    ) -> Result<Self> {
        let eta = compensation_factor(consts, irs.num_elements());
        let links = paths
            .iter()
            .map(|&(angles, d_in, d_out)| {
                Ok(IrsLink {
                    to_irs: make_link(consts, &alice, &irs, angles.alice_departure, angles.irs_arrival, d_in)?,
                    from_irs: make_link(consts, &irs, &bob, angles.irs_departure, angles.bob_arrival, d_out)?,
                    eta,
                    d_in,
                    d_out,
                    angles,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { alice, bob, irs, links })
    }

    pub fn num_irs(&self) -> usize {
        self.links.len()
    }

    /// `η_l G_t G_r a(d_M) a(d_N)`: end-to-end amplitude of path `l` when
    /// its IRS and both end beams are perfectly aligned (`β = 1`).
    pub fn aligned_gain(&self, consts: &PhysicalConstants, l: usize) -> Result<f64> {
        let link = self.links.get(l).ok_or(Error::OutOfRange { index: l, limit: self.num_irs() })?;
        Ok(link.eta
            * consts.tx_gain
            * consts.rx_gain
            * path_loss(consts, link.d_in)?
            * path_loss(consts, link.d_out)?)
    }

    /// Phase profiles that leave only IRS `active` reflecting.
    pub fn isolate(&self, active: usize, theta: PhaseShiftMatrix) -> Vec<PhaseShiftMatrix> {
        (0..self.num_irs())
            .map(|l| {
                if l == active {
                    theta.clone()
                } else {
                    PhaseShiftMatrix::absorbing(self.irs.num_elements())
                }
            })
            .collect()
    }
}

/// End-to-end channel `H = Σ_l η_l G_t G_r N_l Θ_l M_l`.
pub fn assemble(
    cascade: &CascadeChannel,
    thetas: &[PhaseShiftMatrix],
    consts: &PhysicalConstants,
) -> Result<CMatrix> {
    check_len(cascade.num_irs(), thetas.len())?;
    let n_u = cascade.bob.num_elements();
    let n_t = cascade.alice.num_elements();
    let mut h = CMatrix::zeros(n_u, n_t);
    for (link, theta) in cascade.links.iter().zip(thetas) {
        check_len(link.to_irs.nrows(), theta.len())?;
        if theta.amplitude() == 0.0 {
            continue;
        }
        let scale = Complex64::new(link.eta * consts.tx_gain * consts.rx_gain, 0.0);
        let mut out = link.from_irs.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col *= theta.entry(j) * scale;
        }
        h += out * &link.to_irs;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering;
    use crate::irs_control::direction_mode;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn consts_without_absorption() -> PhysicalConstants {
        PhysicalConstants {
            absorption_coefficient: 0.0,
            ..PhysicalConstants::default()
        }
    }

    #[test]
    fn path_loss_unity_distance() {
        let c = consts_without_absorption();
        let d = c.light_speed / (4.0 * PI * c.carrier_frequency);
        assert_relative_eq!(path_loss(&c, d).unwrap(), 1.0, max_relative = 1e-14);
        let a1 = path_loss(&c, 3.0).unwrap();
        let a2 = path_loss(&c, 6.0).unwrap();
        assert_relative_eq!(a2, a1 / 2.0, max_relative = 1e-14);
        assert!(path_loss(&c, 0.0).is_err());
        assert!(path_loss(&c, -1.0).is_err());
    }

    #[test]
    fn path_loss_at_ten_metres() {
        // c / (4π · 3e11 · 10) · exp(−0.0165), reference value from 30-digit arithmetic
        let c = PhysicalConstants::default();
        let expected = 7.822_106_509_849_796e-6;
        assert_relative_eq!(path_loss(&c, 10.0).unwrap(), expected, max_relative = 1e-9);
    }

    #[test]
    fn compensation_factor_values() {
        let mut c = PhysicalConstants::default();
        c.irs_element_gain = 1.0;
        c.carrier_frequency = c.light_speed / (2.0 * PI.sqrt());
        assert_relative_eq!(compensation_factor(&c, 1), 1.0, max_relative = 1e-14);
        let c = PhysicalConstants::default();
        assert_relative_eq!(
            compensation_factor(&c, 64),
            2.0 * compensation_factor(&c, 32),
            max_relative = 1e-15
        );
        // 2·√π·3e11·32 / 299792458
        assert_relative_eq!(compensation_factor(&c, 32), 113_515.577_291_093_52, max_relative = 1e-12);
    }

    #[test]
    fn cascade_matches_product_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let c = PhysicalConstants {
                carrier_frequency: rng.random_range(0.1e12..1.0e12),
                absorption_coefficient: rng.random_range(0.0..0.05),
                tx_gain: rng.random_range(1.0..200.0),
                rx_gain: rng.random_range(1.0..200.0),
                irs_element_gain: rng.random_range(0.5..4.0),
                ..PhysicalConstants::default()
            };
            let n_r = rng.random_range(1..128);
            let (dm, dn) = (rng.random_range(0.5..20.0), rng.random_range(0.5..20.0));
            let product = c.tx_gain
                * c.rx_gain
                * compensation_factor(&c, n_r)
                * path_loss(&c, dm).unwrap()
                * path_loss(&c, dn).unwrap();
            assert_relative_eq!(cascade_loss(&c, n_r, dm, dn).unwrap(), product, max_relative = 1e-12);
        }
    }

    #[test]
    fn cascade_halves_with_distance_without_absorption() {
        let c = consts_without_absorption();
        let a = cascade_loss(&c, 32, 2.0, 5.0).unwrap();
        let b = cascade_loss(&c, 32, 4.0, 5.0).unwrap();
        assert_relative_eq!(b, a / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn cascade_at_default_geometry() {
        // 10^3.6 · 32 · c · e^{−0.0165} / (8 π^{3/2} · 3e11 · 25)
        let c = PhysicalConstants::default();
        let v = cascade_loss(&c, 32, 5.0, 5.0).unwrap();
        assert_relative_eq!(v, 0.112_442_052_064_748_05, max_relative = 1e-12);
    }

    #[test]
    fn link_is_scaled_rank_one() {
        let c = PhysicalConstants::default();
        let tx = ArraySpec::half_wavelength(8);
        let rx = ArraySpec::half_wavelength(6);
        let m = make_link(&c, &tx, &rx, 0.3, -0.5, 4.0).unwrap();
        let a = path_loss(&c, 4.0).unwrap();
        assert_relative_eq!(m.norm(), a, max_relative = 1e-12);
        assert_relative_eq!(m[(0, 0)].re, a / 48f64.sqrt(), max_relative = 1e-12);
        assert_abs_diff_eq!(m[(0, 0)].im, 0.0, epsilon = 1e-20);
        let sv = m.clone().svd(false, false).singular_values;
        assert!(sv[1] / sv[0] < 1e-10);
    }

    #[test]
    fn phase_matrix_reduces_and_preserves_norm() {
        let p = PhaseShiftMatrix::new(vec![-0.5, 7.0, TAU], 1.0).unwrap();
        for &t in p.phases() {
            assert!((0.0..TAU).contains(&t));
        }
        let v = steering_vector(&ArraySpec::half_wavelength(3), 0.4) * Complex64::new(2.0, -1.0);
        assert_relative_eq!(p.apply(&v).unwrap().norm(), v.norm(), max_relative = 1e-12);
        assert!(PhaseShiftMatrix::new(vec![0.0], 1.5).is_err());
    }

    fn test_cascade(n_irs: usize) -> (PhysicalConstants, CascadeChannel) {
        let c = PhysicalConstants::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let paths: Vec<_> = (0..n_irs)
            .map(|_| {
                let angles = LinkAngles {
                    alice_departure: rng.random_range(-1.2..1.2),
                    irs_arrival: rng.random_range(-1.2..1.2),
                    irs_departure: rng.random_range(-1.2..1.2),
                    bob_arrival: rng.random_range(-1.2..1.2),
                };
                (angles, rng.random_range(2.0..8.0), rng.random_range(2.0..8.0))
            })
            .collect();
        let ch = CascadeChannel::new(
            &c,
            ArraySpec::half_wavelength(16),
            ArraySpec::half_wavelength(12),
            ArraySpec::half_wavelength(10),
            &paths,
        )
        .unwrap();
        (c, ch)
    }

    #[test]
    fn absorbing_irs_gives_zero_channel() {
        let (c, ch) = test_cascade(1);
        let h = assemble(&ch, &[PhaseShiftMatrix::absorbing(12)], &c).unwrap();
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn assembly_is_linear_over_irs_subsets() {
        let (c, ch) = test_cascade(3);
        let thetas: Vec<_> = (0..3)
            .map(|l| PhaseShiftMatrix::new((0..12).map(|n| 0.3 * (n * (l + 1)) as f64).collect(), 1.0).unwrap())
            .collect();
        let full = assemble(&ch, &thetas, &c).unwrap();
        let first = CascadeChannel { links: ch.links[..1].to_vec(), ..ch.clone() };
        let rest = CascadeChannel { links: ch.links[1..].to_vec(), ..ch.clone() };
        let sum = assemble(&first, &thetas[..1], &c).unwrap() + assemble(&rest, &thetas[1..], &c).unwrap();
        assert_abs_diff_eq!((full.clone() - sum).norm(), 0.0, epsilon = 1e-12 * full.norm());
        let sv = full.svd(false, false).singular_values;
        assert!(sv[3] / sv[0] < 1e-10, "rank exceeds number of IRSs");
    }

    #[test]
    fn direction_mode_recovers_aligned_gain() {
        let (c, ch) = test_cascade(1);
        let ang = ch.links[0].angles;
        let theta = direction_mode(12, 0.5, ang.irs_arrival, ang.irs_departure, 1.0).unwrap();
        let h = assemble(&ch, &[theta], &c).unwrap();
        let w = steering(&ch.bob, ang.bob_arrival);
        let f = steering(&ch.alice, ang.alice_departure);
        let gain = w.inner(&(&h * f.coefficients())).unwrap().norm();
        let expected = ch.aligned_gain(&c, 0).unwrap();
        assert_relative_eq!(gain, expected, max_relative = 1e-9);
    }

    #[test]
    fn assemble_rejects_wrong_phase_count() {
        let (c, ch) = test_cascade(2);
        let err = assemble(&ch, &[PhaseShiftMatrix::absorbing(12)], &c).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn db_round_trip() {
        for db in [-80.0, -3.0, 0.0, 18.0, 21.0] {
            assert_abs_diff_eq!(linear_to_db(db_to_linear(db)), db, epsilon = 1e-12);
        }
        assert_relative_eq!(dbm_to_watts(-80.0), 1e-11, max_relative = 1e-12);
    }
}
