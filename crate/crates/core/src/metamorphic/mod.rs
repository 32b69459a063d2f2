//! Metamorphic relations for tidal analysis.
//!
//! | MR  | follow-up input                         | expected output relation                         |
//! |-----|-----------------------------------------|--------------------------------------------------|
//! | MR1 | append a point predicted by the source  | identical solution                               |
//! | MR2 | negate elevations                       | `a0`, `a1` negate; amplitude unchanged (N = 1)    |
//! | MR3 | add `h` to elevations                   | `a0 + h`, everything else unchanged              |
//! | MR4 | multiply elevations by `gamma > 0`      | `a0`, `a1`, amplitudes scale; phases unchanged   |
//! | MR5 | swap two samples                        | identical solution                               |
//! | MR6 | subtract the fitted constituent         | amplitude of that constituent is zero            |
//! | MR7 | shift all times by one period `2pi/s`   | `a0 - 2pi a1 / s`, everything else unchanged     |
//!
//! MR6 needs a single constituent without trend, MR7 a single constituent
//! with trend. Verdicts are two-stage: the constituent names must match,
//! then every constrained quantity must agree within a [`Tolerance`].

mod assess;
mod campaign;
mod followup;
mod relation;

pub use assess::{assess, circular_distance, Delta, MrVerdict, Stage, VerdictStatus};
pub use campaign::{
    draw_case, run_campaign, CampaignCase, CampaignConfig, CampaignError, CampaignReport,
    CaseRecord, MrOutcome, MrTotals, SourceRun,
};
pub use followup::{draw_params, mr_followup, source_config_for};
pub use relation::{mr_expected_relation, Constraint, Expectation, Quantity};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harmonic::HarmonicError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MrId {
    MR1,
    MR2,
    MR3,
    MR4,
    MR5,
    MR6,
    MR7,
}

impl MrId {
    pub const ALL: [MrId; 7] = [
        MrId::MR1,
        MrId::MR2,
        MrId::MR3,
        MrId::MR4,
        MrId::MR5,
        MrId::MR6,
        MrId::MR7,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn title(self) -> &'static str {
        match self {
            MrId::MR1 => "inserting a predicted point",
            MrId::MR2 => "reflecting the sea level",
            MrId::MR3 => "shifting the sea level",
            MrId::MR4 => "scaling the sea level",
            MrId::MR5 => "swapping samples",
            MrId::MR6 => "cancellation of signals",
            MrId::MR7 => "periodic shift of signals",
        }
    }
}

impl fmt::Display for MrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MR{}", self.index() + 1)
    }
}

impl FromStr for MrId {
    type Err = MrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .trim()
            .strip_prefix("MR")
            .or_else(|| s.trim().strip_prefix("mr"))
            .ok_or_else(|| MrError::UnknownMr(s.to_string()))?;
        match digits.parse::<usize>() {
            Ok(n @ 1..=7) => Ok(MrId::ALL[n - 1]),
            _ => Err(MrError::UnknownMr(s.to_string())),
        }
    }
}

/// Parses a comma-separated list such as `MR1,MR4`.
pub fn parse_mr_list(s: &str) -> Result<Vec<MrId>, MrError> {
    let mut out: Vec<MrId> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Absolute tolerances per quantity class, in native units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Metres; applies to amplitudes and the intercept.
    pub amplitude: f64,
    /// Metres per hour.
    pub trend: f64,
    /// Degrees, circular.
    pub phase_deg: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::uniform(0.01)
    }
}

impl Tolerance {
    pub fn uniform(value: f64) -> Self {
        Self {
            amplitude: value,
            trend: value,
            phase_deg: value,
        }
    }

    pub fn validate(&self) -> Result<(), MrError> {
        for v in [self.amplitude, self.trend, self.phase_deg] {
            if !(v.is_finite() && v > 0.0) {
                return Err(MrError::InvalidParams(format!(
                    "tolerances must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Where MR1 places the appended point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppendTime {
    /// One sampling step after the last sample.
    #[default]
    NextStep,
    /// Uniformly inside the record span.
    WithinRecord,
    /// Uniformly up to one record span past the last sample.
    BeyondRecord,
}

impl FromStr for AppendTime {
    type Err = MrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "next" | "next_step" => Ok(AppendTime::NextStep),
            "within" | "within_record" => Ok(AppendTime::WithinRecord),
            "beyond" | "beyond_record" => Ok(AppendTime::BeyondRecord),
            other => Err(MrError::InvalidParams(format!(
                "unknown append mode '{other}' (next|within|beyond)"
            ))),
        }
    }
}

/// Knobs that change how relations are built or checked.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MrOptions {
    pub append_time: AppendTime,
    /// Also require `phi_f = phi_s + 180` under MR2.
    pub strict_mr2: bool,
}

/// Transformation parameters of one follow-up case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MrParams {
    Append { time: f64 },
    Reflect,
    Shift { h: f64 },
    Scale { gamma: f64 },
    Swap { i: usize, j: usize },
    Cancel,
    PeriodShift,
}

impl MrParams {
    pub fn mr(&self) -> MrId {
        match self {
            MrParams::Append { .. } => MrId::MR1,
            MrParams::Reflect => MrId::MR2,
            MrParams::Shift { .. } => MrId::MR3,
            MrParams::Scale { .. } => MrId::MR4,
            MrParams::Swap { .. } => MrId::MR5,
            MrParams::Cancel => MrId::MR6,
            MrParams::PeriodShift => MrId::MR7,
        }
    }
}

/// Range of the MR3 shift `h`, metres.
pub const SHIFT_RANGE: (f64, f64) = (-5.0, 5.0);
/// Range of the MR4 scale `gamma`.
pub const SCALE_RANGE: (f64, f64) = (0.1, 10.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MrError {
    #[error("unknown metamorphic relation '{0}'")]
    UnknownMr(String),
    #[error("{mr} precondition violated: {reason}")]
    Precondition { mr: MrId, reason: String },
    #[error("parameters {params:?} do not belong to {mr}")]
    ParamMismatch { mr: MrId, params: MrParams },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}
