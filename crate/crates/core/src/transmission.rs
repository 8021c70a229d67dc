//! IRS and hybrid transceiver designs from estimated angles, water-filling,
//! and rate evaluation.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::array::steering_vector;
use crate::channel::{assemble, CascadeChannel, PhaseShiftMatrix, PhysicalConstants};
use crate::error::{check_len, Error, Result};
use crate::irs_control::direction_mode;
use crate::training::{AngleEstimate, MeasurementModel};
use crate::{CMatrix, CVector};

/// One direction-mode profile per IRS, bridging its estimated arrival and
/// departure angles. `estimates[l]` must exist for every IRS.
pub fn design_irs(
    cascade: &CascadeChannel,
    estimates: &[Option<AngleEstimate>],
    amplitude: f64,
) -> Result<Vec<PhaseShiftMatrix>> {
    let irs = &cascade.irs;
    (0..cascade.num_irs())
        .map(|l| {
            let e = estimates.get(l).copied().flatten().ok_or(Error::MissingEstimate(l))?;
            direction_mode(
                irs.num_elements(),
                irs.spacing_wavelengths(),
                e.irs_arrival,
                e.irs_departure,
                amplitude,
            )
        })
        .collect()
}

/// Amplitude `a_l` of path `l` measured with the designed IRS and both end
/// beams on their estimates, all other IRSs absorbing.
///
/// The expected noise power is subtracted (floored at zero) before taking
/// the square root.
pub fn estimate_composite_loss(
    cascade: &CascadeChannel,
    l: usize,
    estimate: &AngleEstimate,
    consts: &PhysicalConstants,
    model: &mut MeasurementModel,
    repetitions: usize,
) -> Result<f64> {
    if l >= cascade.num_irs() {
        return Err(Error::OutOfRange { index: l, limit: cascade.num_irs() });
    }
    if model.transmit_power() <= 0.0 {
        return Err(Error::InvalidParameter("composite loss needs a positive pilot power".into()));
    }
    let irs = &cascade.irs;
    let theta = direction_mode(
        irs.num_elements(),
        irs.spacing_wavelengths(),
        estimate.irs_arrival,
        estimate.irs_departure,
        consts.reflection_amplitude,
    )?;
    let h = assemble(cascade, &cascade.isolate(l, theta), consts)?;
    let x = steering_vector(&cascade.alice, estimate.alice_departure);
    let w = steering_vector(&cascade.bob, estimate.bob_arrival);
    let p = model.measure_power(&x, &w, &h, repetitions)?;
    Ok(((p - model.noise_power()).max(0.0) / model.transmit_power()).sqrt())
}

/// Water-filling solution over parallel channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// Power fraction `S_l` of each channel; sums to one.
    pub factors: Vec<f64>,
    /// Lagrange multiplier `μ`; the water level is `1/(ln2 μ)`.
    pub mu: f64,
}

impl PowerAllocation {
    pub fn water_level(&self) -> f64 {
        1.0 / (LN_2 * self.mu)
    }
}

/// Maximizes `Σ log2(1 + P a_l² S_l / σ²)` subject to `Σ S_l = 1`.
///
/// The water level is found by walking the channels from strongest to
/// weakest until the next one would sit above the water.
pub fn water_filling(gains: &[f64], transmit_power: f64, noise_power: f64) -> Result<PowerAllocation> {
    if !(transmit_power > 0.0) || !(noise_power > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "water-filling needs positive powers, got P = {transmit_power}, σ² = {noise_power}"
        )));
    }
    if let Some(g) = gains.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidParameter(format!("channel gains must be finite and >= 0, got {g}")));
    }
    // floor b_l = σ² / (P a_l²); zero gains never get power
    let floors: Vec<f64> = gains
        .iter()
        .map(|&a| if a > 0.0 { noise_power / (transmit_power * a * a) } else { f64::INFINITY })
        .collect();
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| floors[i].is_finite()).collect();
    if order.is_empty() {
        return Err(Error::AllGainsZero);
    }
    order.sort_by(|&i, &j| floors[i].total_cmp(&floors[j]).then(i.cmp(&j)));

    let mut level = 0.0;
    let mut sum = 0.0;
    for (m, &i) in order.iter().enumerate() {
        sum += floors[i];
        let candidate = (1.0 + sum) / (m + 1) as f64;
        let next = order.get(m + 1).map_or(f64::INFINITY, |&j| floors[j]);
        level = candidate;
        if candidate <= next {
            break;
        }
    }
    let factors = floors.iter().map(|&b| (level - b).max(0.0)).collect();
    Ok(PowerAllocation { factors, mu: 1.0 / (LN_2 * level) })
}

/// `Σ log2(1 + P a_l² S_l / σ²)`.
pub fn parallel_channel_rate(gains: &[f64], factors: &[f64], transmit_power: f64, noise_power: f64) -> Result<f64> {
    check_len(gains.len(), factors.len())?;
    Ok(gains
        .iter()
        .zip(factors)
        .map(|(a, s)| (1.0 + transmit_power * a * a * s / noise_power).log2())
        .sum())
}

/// Analog/digital precoder and combiner pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridBeamformer {
    /// `N_t × N_RF^t`, unit-modulus or zero columns.
    pub analog_precoder: CMatrix,
    /// `N_RF^t × N_s`.
    pub digital_precoder: CMatrix,
    /// `N_u × N_RF^u`, unit-modulus or zero columns.
    pub analog_combiner: CMatrix,
    /// `N_RF^u × N_s`.
    pub digital_combiner: CMatrix,
}

impl HybridBeamformer {
    pub fn precoder(&self) -> CMatrix {
        &self.analog_precoder * &self.digital_precoder
    }

    pub fn combiner(&self) -> CMatrix {
        &self.analog_combiner * &self.digital_combiner
    }
}

/// One stream per IRS: Alice steers stream `l` at its estimated departure,
/// Bob listens on the estimated arrival.
///
/// Analog columns are the steering vectors scaled to unit modulus; the
/// `1/√N_t` goes into the digital precoder next to `√S_l`, so the product
/// is the plain steering design with total power one.
pub fn build_beamformers(
    cascade: &CascadeChannel,
    estimates: &[AngleEstimate],
    allocation: &PowerAllocation,
    rf_chains_tx: usize,
    rf_chains_rx: usize,
) -> Result<HybridBeamformer> {
    let streams = estimates.len();
    check_len(streams, allocation.factors.len())?;
    if streams == 0 {
        return Err(Error::InvalidParameter("at least one stream is needed".into()));
    }
    for rf in [rf_chains_tx, rf_chains_rx] {
        if streams > rf {
            return Err(Error::TooFewRfChains { irs: streams, rf_chains: rf });
        }
    }
    let (n_t, n_u) = (cascade.alice.num_elements(), cascade.bob.num_elements());
    let mut f_rf = CMatrix::zeros(n_t, rf_chains_tx);
    let mut w_rf = CMatrix::zeros(n_u, rf_chains_rx);
    let mut f_b = CMatrix::zeros(rf_chains_tx, streams);
    let mut w_b = CMatrix::zeros(rf_chains_rx, streams);
    for (l, e) in estimates.iter().enumerate() {
        let a = steering_vector(&cascade.alice, e.alice_departure) * Complex64::new((n_t as f64).sqrt(), 0.0);
        let b = steering_vector(&cascade.bob, e.bob_arrival) * Complex64::new((n_u as f64).sqrt(), 0.0);
        f_rf.set_column(l, &a);
        w_rf.set_column(l, &b);
        f_b[(l, l)] = Complex64::new((allocation.factors[l] / n_t as f64).sqrt(), 0.0);
        w_b[(l, l)] = Complex64::new(1.0, 0.0);
    }
    Ok(HybridBeamformer {
        analog_precoder: f_rf,
        digital_precoder: f_b,
        analog_combiner: w_rf,
        digital_combiner: w_b,
    })
}

/// `log2 det(I + P C⁻¹ Wᴴ H F Fᴴ Hᴴ W)` with `C = σ² Wᴴ W`, evaluated on the
/// streams whose combiner column is nonzero.
pub fn spectral_efficiency(h: &CMatrix, bf: &HybridBeamformer, transmit_power: f64, noise_power: f64) -> Result<f64> {
    let f = bf.precoder();
    let w = bf.combiner();
    check_len(h.ncols(), f.nrows())?;
    check_len(h.nrows(), w.nrows())?;
    check_len(f.ncols(), w.ncols())?;
    if transmit_power == 0.0 {
        return Ok(0.0);
    }
    if !(noise_power > 0.0) {
        return Err(Error::InvalidParameter(format!("noise power must be positive, got {noise_power}")));
    }
    let active: Vec<usize> = (0..w.ncols()).filter(|&j| w.column(j).norm() > 0.0).collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let w = w.select_columns(&active);
    let c = (w.adjoint() * &w) * Complex64::new(noise_power, 0.0);
    let chol = c.cholesky().ok_or(Error::Singular("combiner noise covariance"))?;
    let g = w.adjoint() * h * f;
    let b = chol.l().solve_lower_triangular(&g).ok_or(Error::Singular("combiner noise covariance"))?;
    let m = CMatrix::identity(active.len(), active.len()) + (&b * b.adjoint()) * Complex64::new(transmit_power, 0.0);
    log2_det_hpd(m)
}

fn log2_det_hpd(m: CMatrix) -> Result<f64> {
    let chol = m.cholesky().ok_or(Error::Singular("rate matrix"))?;
    let l = chol.l();
    Ok(2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() / LN_2)
}

/// Fully digital bound: water-filling over the singular values of `H`.
pub fn fdb_upper_bound(h: &CMatrix, transmit_power: f64, noise_power: f64) -> Result<f64> {
    let sv: Vec<f64> = h.clone().svd(false, false).singular_values.iter().copied().collect();
    rate_from_singular_values(&sv, transmit_power, noise_power)
}

/// [`fdb_upper_bound`] from precomputed singular values. A zero channel
/// carries nothing.
pub fn rate_from_singular_values(sv: &[f64], transmit_power: f64, noise_power: f64) -> Result<f64> {
    if transmit_power == 0.0 || sv.iter().all(|&s| s == 0.0) {
        return Ok(0.0);
    }
    let alloc = water_filling(sv, transmit_power, noise_power)?;
    parallel_channel_rate(sv, &alloc.factors, transmit_power, noise_power)
}

/// Precoder/combiner built from the SVD of `H` with the given allocation
/// over its leading singular directions; returns `(F, W)`.
pub fn svd_transceiver(h: &CMatrix, factors: &[f64]) -> Result<(CMatrix, CMatrix)> {
    let svd = h.clone().svd(true, true);
    let u = svd.u.ok_or(Error::Singular("SVD of H"))?;
    let v_t = svd.v_t.ok_or(Error::Singular("SVD of H"))?;
    let streams = factors.len().min(u.ncols());
    let mut f = CMatrix::zeros(h.ncols(), streams);
    let mut w = CMatrix::zeros(h.nrows(), streams);
    for i in 0..streams {
        let v: CVector = v_t.row(i).adjoint();
        f.set_column(i, &(v * Complex64::new(factors[i].sqrt(), 0.0)));
        w.set_column(i, &u.column(i));
    }
    Ok((f, w))
}
