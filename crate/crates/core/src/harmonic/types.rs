use serde::{Deserialize, Serialize};

use super::catalog::constituent_frequency;
use super::polar::raw_to_polar;
use super::{HarmonicError, Result};

/// Ordered `(time, elevation)` samples.
///
/// Times are hours and elevations metres. Sample order is preserved as given;
/// monotonic time is only enforced when reading files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct TimeSeries {
    times: Vec<f64>,
    elevations: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSeries {
    times: Vec<f64>,
    elevations: Vec<f64>,
}

impl TryFrom<RawSeries> for TimeSeries {
    type Error = HarmonicError;

    fn try_from(raw: RawSeries) -> Result<Self> {
        TimeSeries::new(raw.times, raw.elevations)
    }
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, elevations: Vec<f64>) -> Result<Self> {
        if times.len() != elevations.len() {
            return Err(HarmonicError::InvalidInput(format!(
                "{} times but {} elevations",
                times.len(),
                elevations.len()
            )));
        }
        if times.is_empty() {
            return Err(HarmonicError::InvalidInput(
                "time series is empty".to_string(),
            ));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(HarmonicError::InvalidInput(format!(
                "non-finite time at sample {i}"
            )));
        }
        if let Some(i) = elevations.iter().position(|y| !y.is_finite()) {
            return Err(HarmonicError::InvalidInput(format!(
                "non-finite elevation at sample {i}"
            )));
        }
        Ok(Self { times, elevations })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max(t) - min(t)`.
    pub fn span(&self) -> f64 {
        let (lo, hi) = self
            .times
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
                (lo.min(t), hi.max(t))
            });
        hi - lo
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.times, self.elevations)
    }
}

/// A named tidal frequency in radians per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constituent {
    pub name: String,
    pub frequency: f64,
}

impl Constituent {
    pub fn new(name: impl Into<String>, frequency: f64) -> Result<Self> {
        let name = name.into();
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(HarmonicError::InvalidInput(format!(
                "constituent {name}: frequency must be positive, got {frequency}"
            )));
        }
        Ok(Self { name, frequency })
    }

    pub fn period_hours(&self) -> f64 {
        std::f64::consts::TAU / self.frequency
    }
}

/// Constituents used to build the model, with distinct names and frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Constituent>", into = "Vec<Constituent>")]
pub struct ConstituentSet {
    members: Vec<Constituent>,
}

impl TryFrom<Vec<Constituent>> for ConstituentSet {
    type Error = HarmonicError;

    fn try_from(members: Vec<Constituent>) -> Result<Self> {
        ConstituentSet::new(members)
    }
}

impl From<ConstituentSet> for Vec<Constituent> {
    fn from(set: ConstituentSet) -> Self {
        set.members
    }
}

impl ConstituentSet {
    pub fn new(members: Vec<Constituent>) -> Result<Self> {
        for (i, a) in members.iter().enumerate() {
            if !(a.frequency.is_finite() && a.frequency > 0.0) {
                return Err(HarmonicError::InvalidInput(format!(
                    "constituent {}: frequency must be positive",
                    a.name
                )));
            }
            for b in &members[i + 1..] {
                if a.name == b.name {
                    return Err(HarmonicError::InvalidInput(format!(
                        "duplicate constituent name {}",
                        a.name
                    )));
                }
                if a.frequency == b.frequency {
                    return Err(HarmonicError::InvalidInput(format!(
                        "constituents {} and {} share frequency {}",
                        a.name, b.name, a.frequency
                    )));
                }
            }
        }
        Ok(Self { members })
    }

    /// Builds a set from catalog names.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let members = names
            .iter()
            .map(|n| constituent_frequency(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(members)
    }

    pub fn members(&self) -> &[Constituent] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Constituent> {
        self.members.iter().find(|c| c.name == name)
    }
}

/// Analysis options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub include_trend: bool,
    /// Fits whose reciprocal condition estimate falls below this are rejected.
    pub min_conditioning: f64,
    pub rayleigh_check: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            include_trend: true,
            min_conditioning: 1e-10,
            rayleigh_check: true,
        }
    }
}

impl FitConfig {
    pub fn with_trend(include_trend: bool) -> Self {
        Self {
            include_trend,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_conditioning > 0.0 && self.min_conditioning < 1.0) {
            return Err(HarmonicError::InvalidInput(format!(
                "min_conditioning must lie in (0, 1), got {}",
                self.min_conditioning
            )));
        }
        Ok(())
    }

    /// Number of unknowns for `n_constituents`.
    pub fn unknowns(&self, n_constituents: usize) -> usize {
        1 + usize::from(self.include_trend) + 2 * n_constituents
    }
}

/// Least-squares coefficients in the real cosine/sine form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCoefficients {
    pub a0: f64,
    /// `None` when the trend term was not fitted.
    pub a1: Option<f64>,
    /// `(B_k, C_k)` per constituent.
    pub pairs: Vec<(f64, f64)>,
}

impl RawCoefficients {
    /// Unpacks a coefficient vector laid out as `[a0, (a1), B1, C1, ...]`.
    pub fn from_beta(beta: &[f64], include_trend: bool, n_constituents: usize) -> Self {
        let offset = 1 + usize::from(include_trend);
        debug_assert_eq!(beta.len(), offset + 2 * n_constituents);
        let pairs = (0..n_constituents)
            .map(|k| (beta[offset + 2 * k], beta[offset + 2 * k + 1]))
            .collect();
        Self {
            a0: beta[0],
            a1: include_trend.then(|| beta[1]),
            pairs,
        }
    }
}

/// Amplitude and phase of one fitted constituent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicComponent {
    pub name: String,
    pub frequency: f64,
    /// Metres, non-negative.
    pub amplitude: f64,
    /// Degrees in `[0, 360)`.
    pub phase_deg: f64,
}

impl HarmonicComponent {
    pub fn constituent(&self) -> Constituent {
        Constituent {
            name: self.name.clone(),
            frequency: self.frequency,
        }
    }
}

/// Fitted intercept, trend and per-constituent amplitude and phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TidalSolution {
    pub a0: f64,
    /// Metres per hour; zero when no trend was fitted.
    pub a1: f64,
    pub components: Vec<HarmonicComponent>,
}

impl TidalSolution {
    /// Builds a solution from `(amplitude, phase_deg)` pairs matched to `set`.
    pub fn new(a0: f64, a1: f64, set: &ConstituentSet, polar: &[(f64, f64)]) -> Self {
        assert_eq!(set.len(), polar.len(), "one (A, phi) pair per constituent");
        let components = set
            .members()
            .iter()
            .zip(polar)
            .map(|(c, &(amplitude, phase_deg))| HarmonicComponent {
                name: c.name.clone(),
                frequency: c.frequency,
                amplitude,
                phase_deg,
            })
            .collect();
        Self { a0, a1, components }
    }

    pub fn from_raw(raw: &RawCoefficients, set: &ConstituentSet) -> Self {
        let polar: Vec<(f64, f64)> = raw.pairs.iter().map(|&(b, c)| raw_to_polar(b, c)).collect();
        Self::new(raw.a0, raw.a1.unwrap_or(0.0), set, &polar)
    }

    pub fn component(&self, name: &str) -> Option<&HarmonicComponent> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.components.iter().map(|c| c.name.as_str()).collect()
    }

    /// `a0 + a1 t + sum A_k cos(sigma_k t + phi_k)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.components
            .iter()
            .fold(self.a0 + self.a1 * t, |acc, c| {
                acc + c.amplitude * (c.frequency * t + c.phase_deg.to_radians()).cos()
            })
    }
}
