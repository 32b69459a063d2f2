use serde::{Deserialize, Serialize};

use super::relation::{Expectation, Quantity};
use super::Tolerance;
use crate::harmonic::TidalSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Satisfied,
    Violated,
    Inconclusive,
}

/// Which check decided the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    None,
    ConstituentSet,
    Relation,
}

/// One compared quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    #[serde(flatten)]
    pub quantity: Quantity,
    pub expected: f64,
    pub observed: f64,
    /// Absolute difference; circular for phases.
    pub delta: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Phase not compared because both amplitudes are below tolerance.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrVerdict {
    pub status: VerdictStatus,
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<Delta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MrVerdict {
    pub fn inconclusive(note: impl Into<String>) -> Self {
        Self {
            status: VerdictStatus::Inconclusive,
            stage: Stage::None,
            details: Vec::new(),
            note: Some(note.into()),
        }
    }

    pub fn constituent_mismatch(expected: &[String], observed: &[String]) -> Self {
        Self {
            status: VerdictStatus::Violated,
            stage: Stage::ConstituentSet,
            details: Vec::new(),
            note: Some(format!(
                "constituents differ: expected {expected:?}, observed {observed:?}"
            )),
        }
    }

    pub fn is_violated(&self) -> bool {
        self.status == VerdictStatus::Violated
    }

    /// Largest failing delta, if any.
    pub fn worst(&self) -> Option<&Delta> {
        self.details
            .iter()
            .filter(|d| !d.passed)
            .max_by(|a, b| a.delta.total_cmp(&b.delta))
    }
}

/// `min(|a - b| mod 360, 360 - |a - b| mod 360)`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(360.0);
    d.min(360.0 - d)
}

fn sorted(names: &[String]) -> Vec<String> {
    let mut v = names.to_vec();
    v.sort();
    v
}

/// Two-stage check of a follow-up output against an expectation.
pub fn assess(expectation: &Expectation, followup: &TidalSolution, tol: &Tolerance) -> MrVerdict {
    let observed_names: Vec<String> = followup.components.iter().map(|c| c.name.clone()).collect();
    if sorted(&expectation.constituents) != sorted(&observed_names) {
        return MrVerdict::constituent_mismatch(&expectation.constituents, &observed_names);
    }

    let mut details = Vec::with_capacity(expectation.constraints.len());
    for c in &expectation.constraints {
        let (observed, tolerance, circular) = match &c.quantity {
            Quantity::Intercept => (followup.a0, tol.amplitude, false),
            Quantity::Trend => (followup.a1, tol.trend, false),
            Quantity::Amplitude(n) => (
                followup.component(n).map_or(f64::NAN, |x| x.amplitude),
                tol.amplitude,
                false,
            ),
            Quantity::Phase(n) => (
                followup.component(n).map_or(f64::NAN, |x| x.phase_deg),
                tol.phase_deg,
                true,
            ),
        };
        let delta = if circular {
            circular_distance(observed, c.expected)
        } else {
            (observed - c.expected).abs()
        };
        let skipped = match (&c.quantity, c.source_amplitude) {
            (Quantity::Phase(n), Some(src_amp)) => {
                let follow_amp = followup.component(n).map_or(f64::NAN, |x| x.amplitude);
                src_amp < tol.amplitude && follow_amp < tol.amplitude
            }
            _ => false,
        };
        details.push(Delta {
            quantity: c.quantity.clone(),
            expected: c.expected,
            observed,
            delta,
            tolerance,
            passed: skipped || delta <= tolerance,
            skipped,
        });
    }

    let violated = details.iter().any(|d| !d.passed);
    MrVerdict {
        status: if violated {
            VerdictStatus::Violated
        } else {
            VerdictStatus::Satisfied
        },
        stage: if violated {
            Stage::Relation
        } else {
            Stage::None
        },
        details,
        note: None,
    }
}
