//! Noisy beam measurements, tree search and the two-phase IRS protocol.
//!
//! Phase 1 sweeps each IRS through return-mode profiles while a terminal
//! listens to its own echo on a single element; Phase 2 points the IRS from
//! the Phase 1 estimates and lets each terminal search its codebook while
//! the other transmits on a single element.
//!
//! Link convention: departures enter as `a(φ)ᴴ`, so a response that peaks
//! at `−φ` identifies a departure angle `φ`. Both the Bob echo and the
//! Alice uplink search land on mirrored directions and are negated here.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::array::{steering_vector, ArraySpec, BeamGrid};
use crate::channel::{assemble, CascadeChannel, PhysicalConstants};
use crate::codebook::{Candidate, HierarchicalCodebook};
use crate::error::{check_len, Error, Result};
use crate::irs_control::{direction_mode, return_mode};
use crate::{CMatrix, CVector};

/// Generator for trial `trial` of a run seeded with `seed`. Streams never
/// overlap, so trials can run in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Complex Gaussian sample with variance `variance` (`CN(0, variance)`).
pub fn complex_gaussian(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Single-stream measurement `y = √P wᴴ H f + wᴴ n` with unit symbol.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    transmit_power: f64,
    noise_power: f64,
    rng: ChaCha8Rng,
}

impl MeasurementModel {
    pub fn new(transmit_power: f64, noise_power: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(transmit_power >= 0.0 && transmit_power.is_finite()) {
            return Err(Error::InvalidParameter(format!("transmit power must be >= 0, got {transmit_power}")));
        }
        if !(noise_power >= 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise power must be >= 0, got {noise_power}")));
        }
        Ok(Self { transmit_power, noise_power, rng })
    }

    pub fn seeded(transmit_power: f64, noise_power: f64, seed: u64) -> Result<Self> {
        Self::new(transmit_power, noise_power, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// `|√P g + n|²` for a noiseless scalar response `g` and receive-filter
    /// energy `rx_energy` (noise variance `σ² · rx_energy`).
    pub fn observe(&mut self, response: Complex64, rx_energy: f64) -> f64 {
        let noise = if self.noise_power > 0.0 {
            complex_gaussian(&mut self.rng, self.noise_power * rx_energy)
        } else {
            Complex64::new(0.0, 0.0)
        };
        (response * self.transmit_power.sqrt() + noise).norm_sqr()
    }

    /// Received power through `H` with transmit beam `tx` and receive beam
    /// `rx`, averaged over `repetitions` noise draws.
    pub fn measure_power(&mut self, tx: &CVector, rx: &CVector, h: &CMatrix, repetitions: usize) -> Result<f64> {
        check_len(h.ncols(), tx.len())?;
        check_len(h.nrows(), rx.len())?;
        if repetitions == 0 {
            return Err(Error::InvalidParameter("at least one repetition is needed".into()));
        }
        let response = rx.dotc(&(h * tx));
        let energy = rx.norm_squared();
        let total: f64 = (0..repetitions).map(|_| self.observe(response, energy)).sum();
        Ok(total / repetitions as f64)
    }
}

/// Leaf picked by a search and the number of beams it measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOutcome {
    pub leaf: usize,
    pub measurements: usize,
}

/// Descends the tree, following the strongest child at every stage.
///
/// Measured powers are compared after rescaling by each candidate's
/// projection scale, so siblings with unequal numbers of descendants are
/// judged on the same footing. Nulls are skipped; the lowest index wins
/// ties.
pub fn hierarchical_search<F>(codebook: &HierarchicalCodebook, mut oracle: F) -> Result<SearchOutcome>
where
    F: FnMut(&Candidate) -> Result<f64>,
{
    let mut node = 0;
    let mut measurements = 0;
    for s in 0..codebook.num_stages() {
        let mut best: Option<(usize, f64)> = None;
        for child in codebook.children(s, node)? {
            let Some(c) = codebook.candidate(s + 1, child)? else {
                continue;
            };
            let score = oracle(c)? * c.scale * c.scale;
            measurements += 1;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((child, score));
            }
        }
        node = best
            .ok_or_else(|| Error::InvalidParameter(format!("stage {} has no live child under {node}", s + 1)))?
            .0;
    }
    Ok(SearchOutcome { leaf: node, measurements })
}

/// Measures every leaf; lowest index wins ties.
pub fn exhaustive_search<F>(codebook: &HierarchicalCodebook, mut oracle: F) -> Result<SearchOutcome>
where
    F: FnMut(&Candidate) -> Result<f64>,
{
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..codebook.k() {
        let p = oracle(codebook.leaf(i))?;
        if p > best.1 {
            best = (i, p);
        }
    }
    Ok(SearchOutcome { leaf: best.0, measurements: codebook.k() })
}

/// Return-mode directions an IRS sweeps in Phase 1.
///
/// A half-wavelength surface in return mode cannot tell apart directions
/// whose sines differ by one, so the sweep covers a sine window of width
/// `min(1/(2d), 2)` centred on where the terminal is expected.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsSweep {
    sines: Vec<f64>,
}

impl IrsSweep {
    pub fn new(points: usize, center_sine: f64, spacing_wavelengths: f64) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidParameter("sweep needs at least one direction".into()));
        }
        if !(spacing_wavelengths > 0.0) || !(-1.0..=1.0).contains(&center_sine) {
            return Err(Error::InvalidParameter(format!(
                "bad sweep window: centre {center_sine}, spacing {spacing_wavelengths}"
            )));
        }
        let width = (0.5 / spacing_wavelengths).min(2.0);
        let lo = (center_sine - width / 2.0).clamp(-1.0, 1.0 - width);
        let step = width / points as f64;
        let sines = (0..points).map(|i| lo + (i as f64 + 0.5) * step).collect();
        Ok(Self { sines })
    }

    pub fn len(&self) -> usize {
        self.sines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sines.is_empty()
    }

    pub fn sines(&self) -> &[f64] {
        &self.sines
    }

    pub fn direction(&self, i: usize) -> f64 {
        self.sines[i].asin()
    }

    pub fn directions(&self) -> impl Iterator<Item = f64> + '_ {
        self.sines.iter().map(|s| s.asin())
    }

    /// Sweep point closest in sine to `angle`; lower index on ties.
    pub fn nearest(&self, angle: f64) -> usize {
        let s = angle.sin();
        let mut best = (0, f64::INFINITY);
        for (i, &x) in self.sines.iter().enumerate() {
            let d = (x - s).abs();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase1Result {
    pub irs_arrival: f64,
    pub irs_departure: f64,
    pub alice_slots: usize,
    pub bob_slots: usize,
}

/// Four estimated angles of one IRS path, in link convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimate {
    pub alice_departure: f64,
    pub irs_arrival: f64,
    pub irs_departure: f64,
    pub bob_arrival: f64,
}

/// Strongest sweep index for an echo whose element-domain signature is `v`
/// (`Σ v_n² θ_n` scaled by `gain`).
fn sweep_echo(
    v: &[Complex64],
    gain: f64,
    irs: &ArraySpec,
    sweep: &IrsSweep,
    amplitude: f64,
    model: &mut MeasurementModel,
) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, psi) in sweep.directions().enumerate() {
        let theta = return_mode(irs.num_elements(), irs.spacing_wavelengths(), psi, amplitude)?;
        let echo: Complex64 = v.iter().enumerate().map(|(n, x)| x * x * theta.entry(n)).sum();
        let p = model.observe(echo * gain, 1.0);
        if p > best.1 {
            best = (i, p);
        }
    }
    Ok(best.0)
}

/// Phase 1 for IRS `l`: Alice, then Bob, listen to their own echo while the
/// IRS steps through its return-mode sweep. Other IRSs absorb.
pub fn phase1(
    cascade: &CascadeChannel,
    l: usize,
    alice_sweep: &IrsSweep,
    bob_sweep: &IrsSweep,
    consts: &PhysicalConstants,
    model: &mut MeasurementModel,
) -> Result<Phase1Result> {
    let link = cascade.links.get(l).ok_or(Error::OutOfRange { index: l, limit: cascade.num_irs() })?;
    let beta = consts.reflection_amplitude;
    // round trip M_lᵀ Θ M_l seen on Alice's first element
    let v: Vec<Complex64> = link.to_irs.column(0).iter().copied().collect();
    let a = sweep_echo(&v, link.eta * consts.tx_gain * consts.tx_gain, &cascade.irs, alice_sweep, beta, model)?;
    // round trip N_l Θ N_lᵀ on Bob's first element
    let u: Vec<Complex64> = link.from_irs.row(0).iter().copied().collect();
    let b = sweep_echo(&u, link.eta * consts.rx_gain * consts.rx_gain, &cascade.irs, bob_sweep, beta, model)?;
    Ok(Phase1Result {
        irs_arrival: alice_sweep.direction(a),
        irs_departure: -bob_sweep.direction(b),
        alice_slots: alice_sweep.len(),
        bob_slots: bob_sweep.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase2Result {
    pub bob_arrival: f64,
    pub alice_departure: f64,
    pub bob_measurements: usize,
    pub alice_measurements: usize,
}

/// Phase 2 for IRS `l`: the IRS bridges the Phase 1 directions; Bob searches
/// while Alice transmits on one element, then the roles swap.
pub fn phase2(
    cascade: &CascadeChannel,
    l: usize,
    phase1: &Phase1Result,
    alice_codebook: &HierarchicalCodebook,
    bob_codebook: &HierarchicalCodebook,
    consts: &PhysicalConstants,
    model: &mut MeasurementModel,
) -> Result<Phase2Result> {
    if l >= cascade.num_irs() {
        return Err(Error::OutOfRange { index: l, limit: cascade.num_irs() });
    }
    check_len(cascade.alice.num_elements(), alice_codebook.spec().num_elements())?;
    check_len(cascade.bob.num_elements(), bob_codebook.spec().num_elements())?;
    let irs = &cascade.irs;
    let theta = direction_mode(
        irs.num_elements(),
        irs.spacing_wavelengths(),
        phase1.irs_arrival,
        phase1.irs_departure,
        consts.reflection_amplitude,
    )?;
    let h = assemble(cascade, &cascade.isolate(l, theta), consts)?;

    let downlink: CVector = h.column(0).into_owned();
    let bob = hierarchical_search(bob_codebook, |c| {
        let w = c.beam.coefficients();
        Ok(model.observe(w.dotc(&downlink), w.norm_squared()))
    })?;

    let uplink: CVector = h.row(0).transpose();
    let alice = hierarchical_search(alice_codebook, |c| {
        let w = c.beam.coefficients();
        Ok(model.observe(w.dotc(&uplink), w.norm_squared()))
    })?;

    Ok(Phase2Result {
        bob_arrival: bob_codebook.grid().direction(bob.leaf),
        alice_departure: -alice_codebook.grid().direction(alice.leaf),
        bob_measurements: bob.measurements,
        alice_measurements: alice.measurements,
    })
}

/// Both phases for one IRS plus the slots they consumed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingTrace {
    pub estimate: AngleEstimate,
    pub phase1: Phase1Result,
    pub phase2: Phase2Result,
}

impl TrainingTrace {
    pub fn total_slots(&self) -> usize {
        self.phase1.alice_slots
            + self.phase1.bob_slots
            + self.phase2.alice_measurements
            + self.phase2.bob_measurements
    }
}

pub fn train_link(
    cascade: &CascadeChannel,
    l: usize,
    sweeps: (&IrsSweep, &IrsSweep),
    codebooks: (&HierarchicalCodebook, &HierarchicalCodebook),
    consts: &PhysicalConstants,
    model: &mut MeasurementModel,
) -> Result<TrainingTrace> {
    let p1 = phase1(cascade, l, sweeps.0, sweeps.1, consts, model)?;
    let p2 = phase2(cascade, l, &p1, codebooks.0, codebooks.1, consts, model)?;
    Ok(TrainingTrace {
        estimate: AngleEstimate {
            alice_departure: p2.alice_departure,
            irs_arrival: p1.irs_arrival,
            irs_departure: p1.irs_departure,
            bob_arrival: p2.bob_arrival,
        },
        phase1: p1,
        phase2: p2,
    })
}

/// Misalignment probability at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpPoint {
    pub snr_db: f64,
    pub misaligned: usize,
    pub trials: usize,
}

impl MpPoint {
    pub fn probability(&self) -> f64 {
        self.misaligned as f64 / self.trials as f64
    }

    /// Binomial standard error of [`MpPoint::probability`].
    pub fn std_error(&self) -> f64 {
        let p = self.probability();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Bottom-stage misalignment probability versus per-element SNR.
///
/// Each trial draws a path angle uniformly over the circle and one noise
/// vector, both shared by every SNR point, then scans all `K` leaves with
/// array gain `N_a`. A trial is misaligned when the noisy pick differs from
/// the noiseless one.
pub fn misalignment_curve(
    num_elements: usize,
    k: usize,
    snr_grid_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<MpPoint>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("misalignment curve needs at least one trial".into()));
    }
    let spec = ArraySpec::half_wavelength(num_elements);
    let grid = BeamGrid::for_array(&spec, k)?;
    let leaves: Vec<CVector> = grid.directions().iter().map(|&d| steering_vector(&spec, d)).collect();
    let amplitudes: Vec<f64> = snr_grid_db
        .iter()
        .map(|db| (10f64.powf(db / 10.0) * num_elements as f64).sqrt())
        .collect();

    let flags: Vec<Vec<bool>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let angle = rand::Rng::random_range(&mut rng, -std::f64::consts::PI..std::f64::consts::PI);
            let path = steering_vector(&spec, angle);
            let response: Vec<Complex64> = leaves.iter().map(|w| w.dotc(&path)).collect();
            let noise: Vec<Complex64> = (0..k).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let truth = argmax((0..k).map(|i| response[i].norm_sqr()));
            amplitudes
                .iter()
                .map(|&amp| {
                    let pick = argmax((0..k).map(|i| (response[i] * amp + noise[i]).norm_sqr()));
                    pick != truth
                })
                .collect()
        })
        .collect();

    Ok(snr_grid_db
        .iter()
        .enumerate()
        .map(|(j, &snr_db)| MpPoint {
            snr_db,
            misaligned: flags.iter().filter(|f| f[j]).count(),
            trials,
        })
        .collect())
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Lowest grid SNR from which every later point has zero misalignment.
pub fn zero_mp_threshold(curve: &[MpPoint]) -> Option<f64> {
    let mut threshold = None;
    for p in curve.iter().rev() {
        if p.misaligned > 0 {
            break;
        }
        threshold = Some(p.snr_db);
    }
    threshold
}
