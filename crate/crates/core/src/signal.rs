//! Seeded synthetic sea-level series.
//!
//! Campaign specs draw a single M2 constituent over 1 week to 30 days of
//! hourly samples, amplitude in `[0.1, 3]` m and phase in `[0, 360)` degrees.
//! Intercept, trend and Gaussian noise level are drawn from small fixed
//! ranges (see the `*_RANGE` constants).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::harmonic::{
    constituent_frequency, Constituent, ConstituentSet, HarmonicError, Result, TidalSolution,
    TimeSeries,
};

pub const COUNT_RANGE: (usize, usize) = (168, 720);
pub const AMPLITUDE_RANGE: (f64, f64) = (0.1, 3.0);
pub const INTERCEPT_RANGE: (f64, f64) = (-1.0, 1.0);
pub const TREND_RANGE: (f64, f64) = (-0.001, 0.001);
pub const NOISE_STD_RANGE: (f64, f64) = (0.0, 0.05);

/// Reproducibility seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Derives the seed of stream `index` from this one (splitmix64 finalizer
    /// over `seed + (index + 1) * golden_gamma`).
    pub fn derive(self, index: u64) -> Seed {
        let mut z = self
            .0
            .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// One constituent of a synthetic signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticComponent {
    pub name: String,
    /// Radians per hour.
    pub frequency: f64,
    pub amplitude: f64,
    pub phase_deg: f64,
}

/// Parameters of a synthetic series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub constituents: Vec<SyntheticComponent>,
    pub a0: f64,
    pub a1: f64,
    pub noise_std: f64,
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarmonicError::InvalidInput(msg));
        if self.count < 1 {
            return bad("count must be at least 1".into());
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        if !(self.a0.is_finite() && self.a1.is_finite() && self.start.is_finite()) {
            return bad("a0, a1 and start must be finite".into());
        }
        for c in &self.constituents {
            if !(c.amplitude.is_finite() && c.amplitude >= 0.0) {
                return bad(format!("{}: amplitude must be >= 0", c.name));
            }
            if !(0.0..360.0).contains(&c.phase_deg) {
                return bad(format!("{}: phase must lie in [0, 360)", c.name));
            }
        }
        self.constituent_set().map(|_| ())
    }

    pub fn constituent_set(&self) -> Result<ConstituentSet> {
        ConstituentSet::new(
            self.constituents
                .iter()
                .map(|c| Constituent::new(c.name.clone(), c.frequency))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// The noise-free model as a solution.
    pub fn model(&self) -> Result<TidalSolution> {
        let set = self.constituent_set()?;
        let polar: Vec<(f64, f64)> = self
            .constituents
            .iter()
            .map(|c| (c.amplitude, c.phase_deg))
            .collect();
        Ok(TidalSolution::new(self.a0, self.a1, &set, &polar))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.count)
            .map(|j| self.start + j as f64 * self.step)
            .collect()
    }
}

/// Samples the model at `start + j * step` and adds independent Gaussian
/// noise drawn from `seed`.
pub fn generate(spec: &SyntheticSpec, seed: Seed) -> Result<TimeSeries> {
    spec.validate()?;
    let model = spec.model()?;
    let mut rng = seed.rng();
    let times = spec.times();
    let elevations = times
        .iter()
        .map(|&t| {
            let z: f64 = rng.sample(StandardNormal);
            model.evaluate(t) + spec.noise_std * z
        })
        .collect();
    TimeSeries::new(times, elevations)
}

/// Draws a random single-M2 campaign spec.
pub fn random_campaign_spec(seed: Seed) -> SyntheticSpec {
    let mut rng = seed.rng();
    let count = rng.random_range(COUNT_RANGE.0..=COUNT_RANGE.1);
    let amplitude = rng.random_range(AMPLITUDE_RANGE.0..=AMPLITUDE_RANGE.1);
    let phase_deg = rng.random_range(0.0..360.0);
    let a0 = rng.random_range(INTERCEPT_RANGE.0..=INTERCEPT_RANGE.1);
    let a1 = rng.random_range(TREND_RANGE.0..=TREND_RANGE.1);
    let noise_std = rng.random_range(NOISE_STD_RANGE.0..=NOISE_STD_RANGE.1);
    let m2 = constituent_frequency("M2").expect("M2 is in the catalog");
    SyntheticSpec {
        constituents: vec![SyntheticComponent {
            name: m2.name,
            frequency: m2.frequency,
            amplitude,
            phase_deg,
        }],
        a0,
        a1,
        noise_std,
        start: 0.0,
        step: 1.0,
        count,
    }
}
