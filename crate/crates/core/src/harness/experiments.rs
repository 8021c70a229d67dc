//! Monte Carlo drivers behind the CLI subcommands.
//!
//! Trial `t` draws from generator stream `t · 2⁸ + purpose`: purpose 0
//! samples the geometry, 1 the random-IRS benchmark, and `2 + j` the
//! measurements at power point `j`. Trials run in parallel and are reduced
//! in trial order, so results do not depend on scheduling.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::scenario::{sample_scenario, Point, Scenario};
use crate::array::{beam_gain, ArraySpec};
use crate::channel::{assemble, dbm_to_watts, LinkAngles, PhaseShiftMatrix, PhysicalConstants};
use crate::codebook::HierarchicalCodebook;
use crate::error::{Error, Result};
use crate::quantization::{self, QuantizationReport};
use crate::training::{misalignment_curve, train_link, trial_rng, AngleEstimate, MeasurementModel, MpPoint, TrainingTrace};
use crate::transmission::{
    build_beamformers, design_irs, estimate_composite_loss, fdb_upper_bound, parallel_channel_rate,
    rate_from_singular_values, spectral_efficiency, water_filling,
};
use crate::CMatrix;

const STREAM_SCENARIO: u64 = 0;
const STREAM_RANDOM_IRS: u64 = 1;
const STREAM_POWER_BASE: u64 = 2;

fn stream(trial: u64, purpose: u64) -> u64 {
    (trial << 8) | purpose
}

/// Everything a trial needs that does not depend on the trial.
pub struct Experiment {
    pub config: ScenarioConfig,
    pub consts: PhysicalConstants,
    pub alice_codebook: HierarchicalCodebook,
    pub bob_codebook: HierarchicalCodebook,
}

impl Experiment {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        if config.power_dbm.len() > 250 {
            return Err(Error::Config("at most 250 power points are supported".into()));
        }
        let consts = config.physical_constants();
        let alice_codebook =
            HierarchicalCodebook::new(ArraySpec::half_wavelength(config.n_t), config.k_ratio * config.n_t, config.branching)?;
        let bob_codebook =
            HierarchicalCodebook::new(ArraySpec::half_wavelength(config.n_u), config.k_ratio * config.n_u, config.branching)?;
        Ok(Self { config, consts, alice_codebook, bob_codebook })
    }

    /// Runs one trial at every power in `powers_dbm`.
    pub fn run_trial(&self, trial: u64, powers_dbm: &[f64]) -> Result<TrialRecord> {
        let cfg = &self.config;
        let seed = cfg.seed;
        let scenario = sample_scenario(cfg, &self.consts, &mut trial_rng(seed, stream(trial, STREAM_SCENARIO)))?;
        let cascade = &scenario.cascade;
        let noise = cfg.noise_power();
        let beta = self.consts.reflection_amplitude;

        let truth: Vec<LinkAngles> = cascade.links.iter().map(|l| l.angles).collect();
        let exact: Vec<AngleEstimate> = truth.iter().map(exact_estimate).collect();
        let true_gains: Vec<f64> = (0..cascade.num_irs())
            .map(|l| Ok(beta * cascade.aligned_gain(&self.consts, l)?))
            .collect::<Result<_>>()?;
        let h_perfect = assemble(cascade, &design_irs(cascade, &wrap(&exact), beta)?, &self.consts)?;
        let sv_perfect = singular_values(&h_perfect);
        let h_random = random_irs_channel(&scenario, &self.consts, &mut trial_rng(seed, stream(trial, STREAM_RANDOM_IRS)))?;
        let sv_random = singular_values(&h_random);

        let mut outcomes = Vec::with_capacity(powers_dbm.len());
        for (j, &power_dbm) in powers_dbm.iter().enumerate() {
            let p = dbm_to_watts(power_dbm);
            let rng = trial_rng(seed, stream(trial, STREAM_POWER_BASE + j as u64));
            let mut model = MeasurementModel::new(p, noise, rng)?;

            let traces: Vec<TrainingTrace> = (0..cascade.num_irs())
                .map(|l| {
                    let (sa, sb) = &scenario.sweeps[l];
                    train_link(cascade, l, (sa, sb), (&self.alice_codebook, &self.bob_codebook), &self.consts, &mut model)
                })
                .collect::<Result<_>>()?;
            let estimates: Vec<AngleEstimate> = traces.iter().map(|t| t.estimate).collect();
            let estimated_gains: Vec<f64> = estimates
                .iter()
                .enumerate()
                .map(|(l, e)| estimate_composite_loss(cascade, l, e, &self.consts, &mut model, cfg.pilot_repetitions))
                .collect::<Result<_>>()?;

            let proposed_estimated = match water_filling(&estimated_gains, p, noise) {
                Ok(alloc) => {
                    let h = assemble(cascade, &design_irs(cascade, &wrap(&estimates), beta)?, &self.consts)?;
                    let bf = build_beamformers(cascade, &estimates, &alloc, cfg.rf_chains_tx, cfg.rf_chains_rx)?;
                    spectral_efficiency(&h, &bf, p, noise)?
                }
                // nothing measurable: no stream is worth any power
                Err(Error::AllGainsZero) => 0.0,
                Err(e) => return Err(e),
            };
            let (proposed_perfect, parallel_perfect) = match water_filling(&true_gains, p, noise) {
                Ok(alloc) => {
                    let bf = build_beamformers(cascade, &exact, &alloc, cfg.rf_chains_tx, cfg.rf_chains_rx)?;
                    (
                        spectral_efficiency(&h_perfect, &bf, p, noise)?,
                        parallel_channel_rate(&true_gains, &alloc.factors, p, noise)?,
                    )
                }
                Err(Error::AllGainsZero) => (0.0, 0.0),
                Err(e) => return Err(e),
            };
            outcomes.push(PowerOutcome {
                power_dbm,
                traces,
                estimated_gains,
                rates: Rates {
                    proposed_estimated,
                    proposed_perfect,
                    fdb_upper: rate_from_singular_values(&sv_perfect, p, noise)?,
                    no_irs: rate_from_singular_values(&sv_random, p, noise)?,
                    parallel_perfect,
                },
            });
        }

        Ok(TrialRecord {
            seed,
            trial,
            alice: scenario.alice,
            bob: scenario.bob,
            resampled: scenario.resampled,
            truth,
            true_gains,
            outcomes,
        })
    }

    /// Trials `0..config.trials` in parallel, returned in trial order.
    pub fn run_trials(&self, powers_dbm: &[f64]) -> Result<Vec<TrialRecord>> {
        (0..self.config.trials as u64)
            .into_par_iter()
            .map(|t| self.run_trial(t, powers_dbm))
            .collect()
    }
}

fn exact_estimate(a: &LinkAngles) -> AngleEstimate {
    AngleEstimate {
        alice_departure: a.alice_departure,
        irs_arrival: a.irs_arrival,
        irs_departure: a.irs_departure,
        bob_arrival: a.bob_arrival,
    }
}

fn wrap(estimates: &[AngleEstimate]) -> Vec<Option<AngleEstimate>> {
    estimates.iter().copied().map(Some).collect()
}

fn singular_values(h: &CMatrix) -> Vec<f64> {
    h.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Channel with every IRS on independent uniform phases.
pub fn random_irs_channel(
    scenario: &Scenario,
    consts: &PhysicalConstants,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<CMatrix> {
    let n_r = scenario.cascade.irs.num_elements();
    let thetas = (0..scenario.cascade.num_irs())
        .map(|_| {
            let phases = (0..n_r).map(|_| rng.random_range(0.0..TAU)).collect();
            PhaseShiftMatrix::new(phases, consts.reflection_amplitude)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(&scenario.cascade, &thetas, consts)
}

/// Fully digital rate on a random-IRS channel.
pub fn non_irs_benchmark(h_random_irs: &CMatrix, transmit_power: f64, noise_power: f64) -> Result<f64> {
    fdb_upper_bound(h_random_irs, transmit_power, noise_power)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub proposed_estimated: f64,
    pub proposed_perfect: f64,
    pub fdb_upper: f64,
    pub no_irs: f64,
    /// Parallel-channel rate `Σ log2(1 + P a_l² S_l / σ²)` of the perfect
    /// design.
    pub parallel_perfect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOutcome {
    pub power_dbm: f64,
    pub traces: Vec<TrainingTrace>,
    pub estimated_gains: Vec<f64>,
    pub rates: Rates,
}

/// Full record of one trial; replayable from `(config, seed, trial)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: u64,
    pub alice: Point,
    pub bob: Point,
    pub resampled: usize,
    pub truth: Vec<LinkAngles>,
    pub true_gains: Vec<f64>,
    pub outcomes: Vec<PowerOutcome>,
}

impl TrialRecord {
    pub fn total_slots(&self, power_index: usize) -> usize {
        self.outcomes[power_index].traces.iter().map(TrainingTrace::total_slots).sum()
    }
}

/// Trial-averaged rates at one power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub power_dbm: f64,
    pub rates: Rates,
}

/// Averages per-power rates over trials, summing in trial order.
pub fn average_rates(records: &[TrialRecord], powers_dbm: &[f64]) -> Vec<RatePoint> {
    let n = records.len() as f64;
    powers_dbm
        .iter()
        .enumerate()
        .map(|(j, &power_dbm)| {
            let mut sum = Rates { proposed_estimated: 0.0, proposed_perfect: 0.0, fdb_upper: 0.0, no_irs: 0.0, parallel_perfect: 0.0 };
            for r in records {
                let x = r.outcomes[j].rates;
                sum.proposed_estimated += x.proposed_estimated;
                sum.proposed_perfect += x.proposed_perfect;
                sum.fdb_upper += x.fdb_upper;
                sum.no_irs += x.no_irs;
                sum.parallel_perfect += x.parallel_perfect;
            }
            RatePoint {
                power_dbm,
                rates: Rates {
                    proposed_estimated: sum.proposed_estimated / n,
                    proposed_perfect: sum.proposed_perfect / n,
                    fdb_upper: sum.fdb_upper / n,
                    no_irs: sum.no_irs / n,
                    parallel_perfect: sum.parallel_perfect / n,
                },
            }
        })
        .collect()
}

/// Spectral efficiency versus transmit power.
pub fn run_rate_experiment(config: &ScenarioConfig) -> Result<Vec<RatePoint>> {
    let exp = Experiment::new(config.clone())?;
    let records = exp.run_trials(&config.power_dbm)?;
    Ok(average_rates(&records, &config.power_dbm))
}

/// Single-power estimation traces for `config.trials` trials.
pub fn trace_estimates(config: &ScenarioConfig) -> Result<Vec<TrialRecord>> {
    let exp = Experiment::new(config.clone())?;
    exp.run_trials(&[config.estimate_power_dbm])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpCurve {
    pub num_elements: usize,
    pub k: usize,
    pub points: Vec<MpPoint>,
}

/// Misalignment curves for every `(N_a, K)` in the config, all sharing the
/// same path angles and noise streams.
pub fn run_mp_experiment(config: &ScenarioConfig) -> Result<Vec<MpCurve>> {
    config.validate()?;
    config
        .mp_settings
        .iter()
        .map(|&(n, k)| {
            Ok(MpCurve {
                num_elements: n,
                k,
                points: misalignment_curve(n, k, &config.snr_db, config.trials, config.seed)?,
            })
        })
        .collect()
}

/// `e_worst` and `e_aver` for every size × ratio in the config.
pub fn quant_table(config: &ScenarioConfig) -> Result<Vec<QuantizationReport>> {
    let mut rows = Vec::new();
    for &n in &config.quant_sizes {
        for &ratio in &config.quant_ratios {
            rows.push(quantization::report(n, ratio * n)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternRow {
    pub stage: usize,
    pub index: usize,
    pub probe_angle: f64,
    pub gain: f64,
}

/// Gain of every non-null codeword of Alice's codebook over evenly spaced
/// probe angles in `[−π/2, π/2]`.
pub fn codebook_patterns(config: &ScenarioConfig) -> Result<Vec<PatternRow>> {
    config.validate()?;
    let spec = ArraySpec::half_wavelength(config.n_t);
    let cb = HierarchicalCodebook::new(spec, config.k_ratio * config.n_t, config.branching)?;
    let probes = config.codebook_probes;
    let angles: Vec<f64> = (0..probes)
        .map(|i| {
            if probes == 1 {
                0.0
            } else {
                -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / (probes - 1) as f64
            }
        })
        .collect();
    let mut rows = Vec::new();
    for s in 1..=cb.num_stages() {
        for (index, c) in cb.stage(s)?.iter().enumerate() {
            let Some(c) = c else { continue };
            for &probe_angle in &angles {
                rows.push(PatternRow { stage: s, index, probe_angle, gain: beam_gain(&c.beam, &spec, probe_angle)? });
            }
        }
    }
    Ok(rows)
}
