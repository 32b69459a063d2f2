use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{MrError, MrId, MrOptions, MrParams};
use crate::harmonic::{normalize_degrees, TidalSolution};

/// An output quantity a relation constrains.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "quantity", content = "constituent", rename_all = "snake_case")]
pub enum Quantity {
    Intercept,
    Trend,
    Amplitude(String),
    Phase(String),
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quantity::Intercept => write!(f, "a0"),
            Quantity::Trend => write!(f, "a1"),
            Quantity::Amplitude(n) => write!(f, "A[{n}]"),
            Quantity::Phase(n) => write!(f, "phi[{n}]"),
        }
    }
}

/// Expected value of one follow-up quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub quantity: Quantity,
    pub expected: f64,
    /// Source amplitude of the constituent, for phase constraints; the
    /// phase is skipped when both amplitudes are below tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_amplitude: Option<f64>,
}

/// What the follow-up output must look like.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub mr: MrId,
    /// Constituent names the follow-up output must report.
    pub constituents: Vec<String>,
    pub constraints: Vec<Constraint>,
}

impl Expectation {
    fn push(&mut self, quantity: Quantity, expected: f64) {
        self.constraints.push(Constraint {
            quantity,
            expected,
            source_amplitude: None,
        });
    }

    fn push_phase(&mut self, name: &str, expected: f64, source_amplitude: f64) {
        self.constraints.push(Constraint {
            quantity: Quantity::Phase(name.to_string()),
            expected: normalize_degrees(expected),
            source_amplitude: Some(source_amplitude),
        });
    }
}

/// Constraints on the follow-up output implied by `mr`.
pub fn mr_expected_relation(
    mr: MrId,
    source_output: &TidalSolution,
    params: &MrParams,
    options: &MrOptions,
) -> Result<Expectation, MrError> {
    if params.mr() != mr {
        return Err(MrError::ParamMismatch {
            mr,
            params: *params,
        });
    }
    let s = source_output;
    let mut e = Expectation {
        mr,
        constituents: s.components.iter().map(|c| c.name.clone()).collect(),
        constraints: Vec::new(),
    };

    match *params {
        MrParams::Append { .. } | MrParams::Swap { .. } => {
            e.push(Quantity::Intercept, s.a0);
            e.push(Quantity::Trend, s.a1);
            for c in &s.components {
                e.push(Quantity::Amplitude(c.name.clone()), c.amplitude);
                e.push_phase(&c.name, c.phase_deg, c.amplitude);
            }
        }
        MrParams::Reflect => {
            e.push(Quantity::Intercept, -s.a0);
            e.push(Quantity::Trend, -s.a1);
            if s.components.len() == 1 || options.strict_mr2 {
                for c in &s.components {
                    e.push(Quantity::Amplitude(c.name.clone()), c.amplitude);
                }
            }
            if options.strict_mr2 {
                for c in &s.components {
                    e.push_phase(&c.name, c.phase_deg + 180.0, c.amplitude);
                }
            }
        }
        MrParams::Shift { h } => {
            e.push(Quantity::Intercept, s.a0 + h);
            e.push(Quantity::Trend, s.a1);
            for c in &s.components {
                e.push(Quantity::Amplitude(c.name.clone()), c.amplitude);
                e.push_phase(&c.name, c.phase_deg, c.amplitude);
            }
        }
        MrParams::Scale { gamma } => {
            e.push(Quantity::Intercept, gamma * s.a0);
            e.push(Quantity::Trend, gamma * s.a1);
            for c in &s.components {
                e.push(Quantity::Amplitude(c.name.clone()), gamma * c.amplitude);
                e.push_phase(&c.name, c.phase_deg, c.amplitude);
            }
        }
        MrParams::Cancel => {
            for c in &s.components {
                e.push(Quantity::Amplitude(c.name.clone()), 0.0);
            }
        }
        MrParams::PeriodShift => {
            let sigma =
                s.components
                    .first()
                    .map(|c| c.frequency)
                    .ok_or_else(|| MrError::Precondition {
                        mr,
                        reason: "source output has no constituent".to_string(),
                    })?;
            e.push(Quantity::Intercept, s.a0 - TAU * s.a1 / sigma);
            e.push(Quantity::Trend, s.a1);
            for c in &s.components {
                e.push(Quantity::Amplitude(c.name.clone()), c.amplitude);
                e.push_phase(&c.name, c.phase_deg, c.amplitude);
            }
        }
    }
    Ok(e)
}
