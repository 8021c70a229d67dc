//! Flat `key = value` experiment configuration.
//!
//! Blank lines and anything after `#` are ignored. Lists are comma
//! separated; points and array settings use `a:b` pairs. Unknown or
//! repeated keys are errors.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use crate::channel::{db_to_linear, dbm_to_watts, PhysicalConstants, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub frequency_hz: f64,
    pub absorption_per_m: f64,
    pub noise_power_dbm: f64,
    /// `None` picks the terminal gain from the array size.
    pub tx_gain_dbi: Option<f64>,
    pub rx_gain_dbi: Option<f64>,
    pub irs_element_gain_dbi: f64,
    pub reflection_amplitude: f64,

    pub n_t: usize,
    pub n_u: usize,
    pub n_r: usize,
    pub rf_chains_tx: usize,
    pub rf_chains_rx: usize,
    /// Terminal leaf count per antenna, `K / N_a`.
    pub k_ratio: usize,
    /// IRS sweep points per element, `K_r / N_r`.
    pub irs_k_ratio: usize,
    pub branching: usize,

    pub terminal_wall_x: f64,
    pub alice_y: (f64, f64),
    pub bob_y: (f64, f64),
    pub irs_positions: Vec<(f64, f64)>,

    pub pilot_repetitions: usize,
    pub trials: usize,
    pub seed: u64,

    pub power_dbm: Vec<f64>,
    pub estimate_power_dbm: f64,
    pub snr_db: Vec<f64>,
    /// `(N_a, K)` pairs for the misalignment curves.
    pub mp_settings: Vec<(usize, usize)>,
    pub codebook_probes: usize,
    pub quant_sizes: Vec<usize>,
    pub quant_ratios: Vec<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 0.3e12,
            absorption_per_m: 0.0033,
            noise_power_dbm: -80.0,
            tx_gain_dbi: None,
            rx_gain_dbi: None,
            irs_element_gain_dbi: 0.0,
            reflection_amplitude: 1.0,
            n_t: 32,
            n_u: 32,
            n_r: 32,
            rf_chains_tx: 4,
            rf_chains_rx: 4,
            k_ratio: 2,
            irs_k_ratio: 2,
            branching: 2,
            terminal_wall_x: 0.0,
            alice_y: (0.0, 5.0),
            bob_y: (5.0, 10.0),
            irs_positions: vec![(5.0, 4.0), (5.0, 5.0), (5.0, 6.0)],
            pilot_repetitions: 10,
            trials: 10_000,
            seed: 1,
            power_dbm: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            estimate_power_dbm: 20.0,
            snr_db: (0..=36).map(|i| -20.0 + 5.0 * i as f64).collect(),
            mp_settings: vec![(32, 64), (32, 96), (64, 128), (64, 192)],
            codebook_probes: 721,
            quant_sizes: vec![8, 16, 32, 64],
            quant_ratios: vec![1, 2, 3, 4],
        }
    }
}

/// Terminal antenna gain in dBi: 18 dBi at 32 elements, +3 dB per doubling.
pub fn default_terminal_gain_dbi(num_elements: usize) -> f64 {
    18.0 + 3.0 * (num_elements as f64 / 32.0).log2()
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_pair<A: FromStr, B: FromStr>(key: &str, value: &str) -> Result<(A, B)> {
    let (a, b) = value
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("expected `a:b` for key `{key}`, got `{value}`")))?;
    Ok((parse_value(key, a)?, parse_value(key, b)?))
}

fn parse_pairs<A: FromStr, B: FromStr>(key: &str, value: &str) -> Result<Vec<(A, B)>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_pair(key, s))
        .collect()
}

fn parse_gain(key: &str, value: &str) -> Result<Option<f64>> {
    if value.trim() == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

impl ScenarioConfig {
    /// Defaults overridden by the entries of `text`, then validated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            config.set(key, value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one key from its textual value (no validation).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "frequency_hz" => self.frequency_hz = parse_value(key, value)?,
            "absorption_per_m" => self.absorption_per_m = parse_value(key, value)?,
            "noise_power_dbm" => self.noise_power_dbm = parse_value(key, value)?,
            "tx_gain_dbi" => self.tx_gain_dbi = parse_gain(key, value)?,
            "rx_gain_dbi" => self.rx_gain_dbi = parse_gain(key, value)?,
            "irs_element_gain_dbi" => self.irs_element_gain_dbi = parse_value(key, value)?,
            "reflection_amplitude" => self.reflection_amplitude = parse_value(key, value)?,
            "n_t" => self.n_t = parse_value(key, value)?,
            "n_u" => self.n_u = parse_value(key, value)?,
            "n_r" => self.n_r = parse_value(key, value)?,
            "rf_chains_tx" => self.rf_chains_tx = parse_value(key, value)?,
            "rf_chains_rx" => self.rf_chains_rx = parse_value(key, value)?,
            "k_ratio" => self.k_ratio = parse_value(key, value)?,
            "irs_k_ratio" => self.irs_k_ratio = parse_value(key, value)?,
            "branching" => self.branching = parse_value(key, value)?,
            "terminal_wall_x" => self.terminal_wall_x = parse_value(key, value)?,
            "alice_y" => self.alice_y = parse_pair(key, value)?,
            "bob_y" => self.bob_y = parse_pair(key, value)?,
            "irs_positions" => self.irs_positions = parse_pairs(key, value)?,
            "pilot_repetitions" => self.pilot_repetitions = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "power_dbm" => self.power_dbm = parse_list(key, value)?,
            "estimate_power_dbm" => self.estimate_power_dbm = parse_value(key, value)?,
            "snr_db" => self.snr_db = parse_list(key, value)?,
            "mp_settings" => self.mp_settings = parse_pairs(key, value)?,
            "codebook_probes" => self.codebook_probes = parse_value(key, value)?,
            "quant_sizes" => self.quant_sizes = parse_list(key, value)?,
            "quant_ratios" => self.quant_ratios = parse_list(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [("frequency_hz", self.frequency_hz), ("absorption_per_m", self.absorption_per_m)] {
            if !(v.is_finite() && v >= 0.0) || (name == "frequency_hz" && v == 0.0) {
                return bad(format!("{name} must be a positive number, got {v}"));
            }
        }
        if !self.noise_power_dbm.is_finite() {
            return bad("noise_power_dbm must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.reflection_amplitude) {
            return bad(format!("reflection_amplitude must lie in [0, 1], got {}", self.reflection_amplitude));
        }
        for (name, v) in [("n_t", self.n_t), ("n_u", self.n_u), ("n_r", self.n_r)] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        for (name, v) in [("k_ratio", self.k_ratio), ("irs_k_ratio", self.irs_k_ratio), ("pilot_repetitions", self.pilot_repetitions), ("trials", self.trials), ("codebook_probes", self.codebook_probes)] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.branching < 2 {
            return bad(format!("branching must be at least 2, got {}", self.branching));
        }
        for (name, (lo, hi)) in [("alice_y", self.alice_y), ("bob_y", self.bob_y)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("{name} must be an ordered range `lo:hi`, got {lo}:{hi}"));
            }
        }
        if self.irs_positions.is_empty() {
            return bad("irs_positions needs at least one IRS".into());
        }
        for (i, p) in self.irs_positions.iter().enumerate() {
            if !(p.0.is_finite() && p.1.is_finite()) {
                return bad(format!("irs_positions entry {i} is not finite"));
            }
            if p.0 == self.terminal_wall_x {
                return bad(format!("IRS {i} sits on the terminal wall x = {}", self.terminal_wall_x));
            }
            if self.irs_positions[..i].contains(p) {
                return bad(format!("IRS positions must be distinct, ({}, {}) repeats", p.0, p.1));
            }
        }
        let walls: Vec<bool> = self.irs_positions.iter().map(|p| p.0 > self.terminal_wall_x).collect();
        if walls.iter().any(|&w| w != walls[0]) {
            return bad("all IRSs must face the terminal wall from the same side".into());
        }
        let n_i = self.irs_positions.len();
        if n_i > self.rf_chains_tx || n_i > self.rf_chains_rx {
            return bad(format!(
                "{n_i} IRSs need at least as many RF chains (tx {}, rx {})",
                self.rf_chains_tx, self.rf_chains_rx
            ));
        }
        if self.power_dbm.iter().chain(&self.snr_db).chain([&self.estimate_power_dbm]).any(|v| !v.is_finite()) {
            return bad("power and SNR values must be finite".into());
        }
        for &(n, k) in &self.mp_settings {
            if n == 0 || k < n {
                return bad(format!("mp_settings entry {n}:{k} needs K >= N_a >= 1"));
            }
        }
        if self.quant_sizes.contains(&0) || self.quant_ratios.contains(&0) {
            return bad("quant_sizes and quant_ratios must be positive".into());
        }
        for (name, v) in [("tx_gain_dbi", self.tx_gain_dbi), ("rx_gain_dbi", self.rx_gain_dbi)] {
            if v.is_some_and(|g| !g.is_finite()) {
                return bad(format!("{name} must be finite"));
            }
        }
        Ok(())
    }

    pub fn num_irs(&self) -> usize {
        self.irs_positions.len()
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }

    pub fn tx_gain(&self) -> f64 {
        db_to_linear(self.tx_gain_dbi.unwrap_or_else(|| default_terminal_gain_dbi(self.n_t)))
    }

    pub fn rx_gain(&self) -> f64 {
        db_to_linear(self.rx_gain_dbi.unwrap_or_else(|| default_terminal_gain_dbi(self.n_u)))
    }

    pub fn physical_constants(&self) -> PhysicalConstants {
        PhysicalConstants {
            carrier_frequency: self.frequency_hz,
            absorption_coefficient: self.absorption_per_m,
            light_speed: SPEED_OF_LIGHT,
            tx_gain: self.tx_gain(),
            rx_gain: self.rx_gain(),
            irs_element_gain: db_to_linear(self.irs_element_gain_dbi),
            reflection_amplitude: self.reflection_amplitude,
        }
    }

    /// The same terminal/IRS array size everywhere, with `K = ratio · N`.
    pub fn with_array_size(mut self, n: usize, k_ratio: usize) -> Self {
        self.n_t = n;
        self.n_u = n;
        self.n_r = n;
        self.k_ratio = k_ratio;
        self
    }
}
