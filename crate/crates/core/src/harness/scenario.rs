//! Room geometry: terminals on one wall, IRSs on the opposite wall.
//!
//! Every array lies along its wall with broadside pointing across the room.
//! Geometric angles are measured from broadside; arrivals use them as is
//! and departures enter the links negated (a transmit array matched to a
//! geometric direction `g` is `a(−g)ᴴ`).

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::ScenarioConfig;
use crate::array::{wrap_angle, ArraySpec};
use crate::channel::{CascadeChannel, LinkAngles, PhysicalConstants};
use crate::error::{Error, Result};
use crate::training::IrsSweep;

/// Attempts before sampling gives up on a degenerate configuration.
const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Scene direction of `other` seen from `self`.
    pub fn bearing(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// Angle of `to` seen from an array at `from` whose broadside points along
/// `orientation`, wrapped to `(−π, π]`.
pub fn local_angle(from: &Point, to: &Point, orientation: f64) -> f64 {
    wrap_angle(from.bearing(to) - orientation)
}

/// Broadside directions of the terminal and IRS walls.
pub fn orientations(config: &ScenarioConfig) -> (f64, f64) {
    if config.irs_positions[0].0 > config.terminal_wall_x {
        (0.0, PI)
    } else {
        (PI, 0.0)
    }
}

/// Sampled positions plus the channel they induce.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub alice: Point,
    pub bob: Point,
    pub irs: Vec<Point>,
    pub cascade: CascadeChannel,
    /// Phase 1 sweeps `(towards Alice, towards Bob)` per IRS.
    pub sweeps: Vec<(IrsSweep, IrsSweep)>,
    /// Draws rejected before this one.
    pub resampled: usize,
}

/// Builds the scenario for fixed terminal positions; `None` when the
/// geometry is degenerate (zero distance or a path behind an array).
pub fn build_scenario(
    config: &ScenarioConfig,
    consts: &PhysicalConstants,
    alice_y: f64,
    bob_y: f64,
) -> Result<Option<Scenario>> {
    let (term_or, irs_or) = orientations(config);
    let wall = config.terminal_wall_x;
    let alice = Point::new(wall, alice_y);
    let bob = Point::new(wall, bob_y);
    let irs: Vec<Point> = config.irs_positions.iter().map(|&(x, y)| Point::new(x, y)).collect();

    let alice_centre = Point::new(wall, 0.5 * (config.alice_y.0 + config.alice_y.1));
    let bob_centre = Point::new(wall, 0.5 * (config.bob_y.0 + config.bob_y.1));
    let k_r = config.irs_k_ratio * config.n_r;

    let mut paths = Vec::with_capacity(irs.len());
    let mut sweeps = Vec::with_capacity(irs.len());
    for r in &irs {
        let (d_in, d_out) = (alice.distance(r), r.distance(&bob));
        if d_in == 0.0 || d_out == 0.0 {
            return Ok(None);
        }
        let geo = [
            local_angle(&alice, r, term_or),
            local_angle(r, &alice, irs_or),
            local_angle(r, &bob, irs_or),
            local_angle(&bob, r, term_or),
        ];
        if geo.iter().any(|a| a.abs() > FRAC_PI_2) {
            return Ok(None);
        }
        paths.push((
            LinkAngles {
                alice_departure: -geo[0],
                irs_arrival: geo[1],
                irs_departure: -geo[2],
                bob_arrival: geo[3],
            },
            d_in,
            d_out,
        ));
        let toward_alice = local_angle(r, &alice_centre, irs_or).sin();
        let toward_bob = local_angle(r, &bob_centre, irs_or).sin();
        sweeps.push((IrsSweep::new(k_r, toward_alice, 0.5)?, IrsSweep::new(k_r, toward_bob, 0.5)?));
    }
    let cascade = CascadeChannel::new(
        consts,
        ArraySpec::half_wavelength(config.n_t).with_orientation(term_or),
        ArraySpec::half_wavelength(config.n_r).with_orientation(irs_or),
        ArraySpec::half_wavelength(config.n_u).with_orientation(term_or),
        &paths,
    )?;
    Ok(Some(Scenario { alice, bob, irs, cascade, sweeps, resampled: 0 }))
}

/// Draws Alice and Bob uniformly in their wall segments, resampling
/// degenerate draws.
pub fn sample_scenario(config: &ScenarioConfig, consts: &PhysicalConstants, rng: &mut ChaCha8Rng) -> Result<Scenario> {
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
    for attempt in 0..MAX_RESAMPLES {
        let ya = draw(rng, config.alice_y);
        let yb = draw(rng, config.bob_y);
        if let Some(mut s) = build_scenario(config, consts, ya, yb)? {
            s.resampled = attempt;
            return Ok(s);
        }
    }
    Err(Error::Config(format!("no valid geometry after {MAX_RESAMPLES} draws")))
}
