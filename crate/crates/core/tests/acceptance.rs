//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! before asserting; run with `--nocapture` (or `--show-output`) to see them.

use std::f64::consts::PI;
use std::sync::OnceLock;

use irs_thz::array::{edge_energy, steering_vector, ArraySpec, BeamGrid};
use irs_thz::codebook::{two_rf_factorization, Candidate, HierarchicalCodebook};
use irs_thz::harness::csv::{codebook_csv, estimate_csv, mp_csv, quant_csv, rate_csv};
use irs_thz::harness::experiments::average_rates;
use irs_thz::harness::{
    codebook_patterns, quant_table, run_mp_experiment, run_rate_experiment, trace_estimates, Experiment, RatePoint,
    ScenarioConfig, TrialRecord,
};
use irs_thz::irs_control::{direction_mode, return_mode};
use irs_thz::quantization::{average_error, worst_error};
use irs_thz::training::{exhaustive_search, hierarchical_search, trial_rng, zero_mp_threshold};
use irs_thz::transmission::water_filling;
use rand::Rng;
use rayon::prelude::*;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("acceptance {id:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
}

#[test]
fn a01_worst_error_identity() {
    let mut dev = 0.0f64;
    for n in [8, 16, 32, 64] {
        for ratio in 1..=4 {
            let k = ratio * n;
            dev = dev.max((worst_error(n, k).unwrap() - (1.0 - edge_energy(n, k).unwrap())).abs());
        }
    }
    let pass = dev <= 1e-12;
    report(1, "worst-error identity", pass, format!("max deviation {dev:e}"));
    assert!(pass);
}

fn monte_carlo_average_error(n: usize, k: usize, draws: usize, seed: u64) -> f64 {
    let spec = ArraySpec::half_wavelength(n);
    let grid = BeamGrid::for_array(&spec, k).unwrap();
    let beams: Vec<_> = grid.directions().iter().map(|&d| steering_vector(&spec, d)).collect();
    let chunks = 100u64;
    let per = draws as u64 / chunks;
    let loss: f64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(seed, c);
            (0..per)
                .map(|_| {
                    let angle = rng.random_range(-PI..PI);
                    let path = steering_vector(&spec, angle);
                    // nearest leaf by sine distance, found by scanning
                    let s = angle.sin();
                    let i = (0..k)
                        .min_by(|&a, &b| (grid.sine(a) - s).abs().total_cmp(&(grid.sine(b) - s).abs()))
                        .unwrap();
                    // loss on the normalized array response magnitude
                    1.0 - beams[i].dotc(&path).norm()
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    loss / (per * chunks) as f64
}

#[test]
fn a02_average_error_bound() {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [16, 32, 64] {
        let q = average_error(n, 2 * n).unwrap();
        let mc = monte_carlo_average_error(n, 2 * n, 1_000_000, 7);
        let ok = q < 0.04 && (q - mc).abs() <= 1e-3;
        pass &= ok;
        detail.push(format!("N={n}: quad {q:.6} mc {mc:.6}"));
    }
    report(2, "average-error bound", pass, detail.join(", "));
    assert!(pass);
}

#[test]
fn a03_reflection_modes_exact() {
    let mut rng = trial_rng(3, 0);
    let mut worst = 0.0f64;
    let mut worst_return = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..=128usize);
        let beta: f64 = rng.random_range(0.0..=1.0);
        let (phi_in, phi_out) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let spec = ArraySpec::half_wavelength(n);
        let theta = direction_mode(n, 0.5, phi_in, phi_out, beta).unwrap();
        let out = theta.apply(&steering_vector(&spec, phi_in)).unwrap();
        worst = worst.max((out - steering_vector(&spec, phi_out) * num_complex::Complex64::from(beta)).norm());

        let ret = return_mode(n, 0.5, phi_in, beta).unwrap();
        let dir = direction_mode(n, 0.5, phi_in, PI + phi_in, beta).unwrap();
        worst_return = worst_return.max((ret.diagonal() - dir.diagonal()).camax());
    }
    let pass = worst <= 1e-12 && worst_return <= 1e-12;
    report(3, "reflection modes", pass, format!("direction residual {worst:e}, return vs direction {worst_return:e}"));
    assert!(pass);
}

#[test]
fn a04_codebook_soundness() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (m, n, k) in [(2, 32, 64), (3, 32, 96)] {
        let cb = HierarchicalCodebook::new(ArraySpec::half_wavelength(n), k, m).unwrap();
        let mut rng = trial_rng(4, m as u64);
        let mut agree = 0;
        for _ in 0..1000 {
            let path = steering_vector(cb.spec(), rng.random_range(-PI..PI));
            let oracle = |c: &Candidate| Ok(c.beam.coefficients().dotc(&path).norm_sqr());
            agree += (hierarchical_search(&cb, oracle).unwrap().leaf == exhaustive_search(&cb, oracle).unwrap().leaf) as usize;
        }
        let (mut recon, mut modulus) = (0.0f64, 0.0f64);
        for s in 1..cb.num_stages() {
            for c in cb.stage(s).unwrap().iter().flatten() {
                let w = c.beam.coefficients();
                let r = two_rf_factorization(w).unwrap();
                recon = recon.max((r.reconstruct() - w).camax());
                modulus = modulus.max(r.analog.iter().map(|x| (x.norm() - 1.0).abs()).fold(0.0, f64::max));
            }
        }
        let ok = agree == 1000 && recon <= 1e-10 && modulus <= 1e-12;
        pass &= ok;
        detail.push(format!("M={m} K={k}: {agree}/1000 agree, recon {recon:e}, modulus {modulus:e}"));
    }
    report(4, "codebook soundness", pass, detail.join("; "));
    assert!(pass);
}

#[test]
fn a05_misalignment_trends() {
    let config = ScenarioConfig::default();
    assert!(config.trials >= 2000);
    let curves = run_mp_experiment(&config).unwrap();
    let mut monotone = true;
    for c in &curves {
        for w in c.points.windows(2) {
            let band = 2.0 * (w[0].std_error().powi(2) + w[1].std_error().powi(2)).sqrt();
            monotone &= w[1].probability() <= w[0].probability() + band;
        }
    }
    let threshold = |n: usize, k: usize| {
        let c = curves.iter().find(|c| (c.num_elements, c.k) == (n, k)).unwrap();
        zero_mp_threshold(&c.points)
    };
    let mut ordered = true;
    let mut detail = vec![format!("trials {}, monotone {monotone}", config.trials)];
    for ratio in [2, 3] {
        let (small, large) = (threshold(32, 32 * ratio), threshold(64, 64 * ratio));
        ordered &= matches!((small, large), (Some(s), Some(l)) if l < s);
        detail.push(format!("K={ratio}N zero-MP SNR N=32 {small:?} dB, N=64 {large:?} dB"));
    }
    let pass = monotone && ordered;
    report(5, "misalignment trends", pass, detail.join(", "));
    assert!(pass);
}

struct RateRun {
    points: Vec<RatePoint>,
}

fn rate_config(n: usize, k_ratio: usize) -> ScenarioConfig {
    let mut c = ScenarioConfig::default().with_array_size(n, k_ratio);
    c.trials = 1000;
    c.power_dbm = vec![0.0, 10.0, 20.0, 30.0];
    c
}

fn rate_runs() -> &'static [RateRun; 2] {
    static RUNS: OnceLock<[RateRun; 2]> = OnceLock::new();
    RUNS.get_or_init(|| {
        [(32, 2), (64, 3)].map(|(n, r)| RateRun { points: run_rate_experiment(&rate_config(n, r)).unwrap() })
    })
}

#[test]
fn a06_rate_ordering() {
    let runs = rate_runs();
    let mut ordered = true;
    for run in runs {
        for p in &run.points {
            let r = p.rates;
            ordered &= r.no_irs < r.proposed_estimated
                && r.proposed_estimated <= r.proposed_perfect
                && r.proposed_perfect <= r.fdb_upper;
        }
    }
    let at20 = runs[1].points.iter().find(|p| p.power_dbm == 20.0).unwrap().rates;
    let ratio = at20.proposed_perfect / at20.fdb_upper;
    let pass = ordered && ratio >= 0.9;
    report(
        6,
        "rate ordering",
        pass,
        format!(
            "ordering {ordered}; N=64 K=3N at 20 dBm: est {:.3}, perfect {:.3}, upper {:.3}, random IRS {:.3}, perfect/upper {ratio:.5}",
            at20.proposed_estimated, at20.proposed_perfect, at20.fdb_upper, at20.no_irs
        ),
    );
    assert!(pass);
}

#[test]
fn a07_quantization_gap_shrinks() {
    let runs = rate_runs();
    let gap = |run: &RateRun| {
        run.points.iter().map(|p| p.rates.proposed_perfect - p.rates.proposed_estimated).sum::<f64>()
            / run.points.len() as f64
    };
    let (g32, g64) = (gap(&runs[0]), gap(&runs[1]));
    let pass = g64 < g32;
    report(7, "quantization gap", pass, format!("N=32 K=2N gap {g32:.4}, N=64 K=3N gap {g64:.4} bit/s/Hz"));
    assert!(pass);
}

#[test]
fn a08_water_filling_oracle() {
    // simplex grid with step 1/1413: 999,045 points
    let steps = 1413usize;
    let objective = |g: &[f64], s: &[f64]| g.iter().zip(s).map(|(g, s)| (1.0 + g * s).log2()).sum::<f64>();
    let mut rng = trial_rng(8, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (p, noise) = (1.0, 1.0);
        let gains: Vec<f64> = (0..3).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
        let snr: Vec<f64> = gains.iter().map(|a| p * a * a / noise).collect();
        let alloc = water_filling(&gains, p, noise).unwrap();
        let wf = objective(&snr, &alloc.factors);
        let grid_best = (0..=steps)
            .into_par_iter()
            .map(|i| {
                let mut best = f64::NEG_INFINITY;
                for j in 0..=steps - i {
                    let s = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                    best = best.max(objective(&snr, &s));
                }
                best
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
        worst = worst.max((wf - grid_best).abs());
    }
    let pass = worst <= 1e-6;
    report(8, "water-filling oracle", pass, format!("max |wf − grid| {worst:e} over 20 draws"));
    assert!(pass);
}

fn exact_angle_records(n: usize) -> Vec<TrialRecord> {
    let mut c = ScenarioConfig::default().with_array_size(n, 2);
    c.trials = 200;
    Experiment::new(c).unwrap().run_trials(&[20.0]).unwrap()
}

#[test]
fn a09_parallel_channel_reduction() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (n, limit) in [(32, 0.05), (64, 0.02)] {
        let worst = exact_angle_records(n)
            .iter()
            .map(|r| {
                let x = r.outcomes[0].rates;
                (x.proposed_perfect - x.parallel_perfect).abs() / x.proposed_perfect
            })
            .fold(0.0, f64::max);
        pass &= worst <= limit;
        detail.push(format!("N={n}: worst relative error {worst:.5} (limit {limit})"));
    }
    report(9, "parallel-channel reduction", pass, detail.join(", "));
    assert!(pass);
}

#[test]
fn a10_determinism() {
    let mut c = ScenarioConfig::default().with_array_size(16, 2);
    c.trials = 40;
    c.power_dbm = vec![0.0, 20.0];
    c.seed = 11;
    c.codebook_probes = 91;
    let outputs = || {
        let exp = Experiment::new(c.clone()).unwrap();
        [
            codebook_csv(&codebook_patterns(&c).unwrap()),
            mp_csv(&run_mp_experiment(&c).unwrap()),
            rate_csv(&run_rate_experiment(&c).unwrap()),
            rate_csv(&average_rates(&exp.run_trials(&c.power_dbm).unwrap(), &c.power_dbm)),
            estimate_csv(&trace_estimates(&c).unwrap()),
            quant_csv(&quant_table(&c).unwrap()),
        ]
    };
    let (a, b) = (outputs(), outputs());
    let pass = a == b && a[2] == a[3];
    report(10, "determinism", pass, format!("{} CSVs, {} bytes", a.len(), a.iter().map(String::len).sum::<usize>()));
    assert!(pass);
}
