//! Seeded faults in the analysis pipeline and mutation scoring.
//!
//! Each mutant flips exactly one named fault point in an instrumented copy of
//! the harmonic pipeline ([`MutantEngine`]). With no fault active the copy is
//! bit-identical to [`crate::harmonic::analyze`].
//!
//! [`filter_equivalents`] discards mutants that match the reference on random
//! probes, and [`mutation_campaign`] runs the metamorphic campaign against each
//! remaining mutant to build a kill matrix and per-relation mutation scores.

mod lab;
mod pipeline;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, TapEngine, TapInput};
use crate::harmonic::TidalSolution;
use crate::metamorphic::CampaignError;

pub use lab::{
    filter_equivalents, mutation_campaign, probe_seed, run_mutation_lab, uniqueness_audit,
    FilterOutcome, KillCell, KillMatrix, KillRow, MutationConfig, MutationReport, MutationScore,
    DEFAULT_PROBES, EQUIVALENCE_TOLERANCE,
};

/// Mutation operator class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutantCategory {
    ArrayIndex,
    ConditionIf,
    LogicComparison,
    LogicValue,
    MathOperator,
}

impl MutantCategory {
    pub const ALL: [MutantCategory; 5] = [
        MutantCategory::ArrayIndex,
        MutantCategory::ConditionIf,
        MutantCategory::LogicComparison,
        MutantCategory::LogicValue,
        MutantCategory::MathOperator,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MutantCategory::ArrayIndex => "array_index",
            MutantCategory::ConditionIf => "condition_if",
            MutantCategory::LogicComparison => "logic_comparison",
            MutantCategory::LogicValue => "logic_value",
            MutantCategory::MathOperator => "math_operator",
        }
    }
}

impl fmt::Display for MutantCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fault points of the instrumented pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Fault {
    DesignSincosSwapped,
    DesignTimeLagged,
    DesignTrendReadsElevation,
    DesignDropsLastSample,
    OutputInterceptReadsTrendSlot,
    BacksubSkipsNeighbor,
    QtySkipsLastReflector,
    TrendBranchForced,
    TrendBranchSkipped,
    PhaseWrapForced,
    PhaseWrapSkipped,
    ConditioningGuardSkipped,
    ConditioningCheckInverted,
    DofCheckStrict,
    RayleighCheckInverted,
    ZeroAmplitudeCheckInverted,
    TrendFlagNegated,
    InterceptColumnDisabled,
    RayleighFlagNegated,
    PhaseRefDefect,
    AmplitudeMissingSquares,
    AmplitudeAbsSum,
    PhaseSignFlipped,
    PhaseRadianFactor,
    TrendSignFlipped,
    DesignFrequencyCycles,
    DesignTrendFromLastSample,
    BacksubDivideToMultiply,
}

struct Entry {
    fault: Fault,
    id: &'static str,
    category: MutantCategory,
    site: &'static str,
    description: &'static str,
}

const fn entry(
    fault: Fault,
    id: &'static str,
    category: MutantCategory,
    site: &'static str,
    description: &'static str,
) -> Entry {
    Entry {
        fault,
        id,
        category,
        site,
        description,
    }
}

use MutantCategory::*;

const CATALOG: &[Entry] = &[
    entry(
        Fault::DesignSincosSwapped,
        "design_sincos_swapped",
        ArrayIndex,
        "design.harmonic_columns",
        "cos/sin written to columns [2k+1, 2k] instead of [2k, 2k+1]",
    ),
    entry(
        Fault::DesignTimeLagged,
        "design_time_lagged",
        ArrayIndex,
        "design.sample_time",
        "row j uses times[j - 1] (times[0] for row 0) instead of times[j]",
    ),
    entry(
        Fault::DesignTrendReadsElevation,
        "design_trend_reads_elevation",
        ArrayIndex,
        "design.trend_column",
        "trend column reads elevations[j] instead of times[j]",
    ),
    entry(
        Fault::DesignDropsLastSample,
        "design_drops_last_sample",
        ArrayIndex,
        "design.row_loop",
        "rows 0..m-1 instead of 0..m",
    ),
    entry(
        Fault::OutputInterceptReadsTrendSlot,
        "output_intercept_reads_trend_slot",
        ArrayIndex,
        "unpack.intercept",
        "a0 = beta[1] instead of beta[0]",
    ),
    entry(
        Fault::BacksubSkipsNeighbor,
        "solve_backsub_skips_neighbor",
        ArrayIndex,
        "solve.back_substitution",
        "inner loop starts at j = i + 2 instead of i + 1",
    ),
    entry(
        Fault::QtySkipsLastReflector,
        "solve_qty_skips_last_reflector",
        ArrayIndex,
        "solve.apply_qt",
        "reflectors 0..n-1 applied instead of 0..n",
    ),
    entry(
        Fault::TrendBranchForced,
        "trend_branch_forced",
        ConditionIf,
        "config.trend_branch",
        "if include_trend  ->  if true",
    ),
    entry(
        Fault::TrendBranchSkipped,
        "trend_branch_skipped",
        ConditionIf,
        "config.trend_branch",
        "if include_trend  ->  if false",
    ),
    entry(
        Fault::PhaseWrapForced,
        "phase_wrap_forced",
        ConditionIf,
        "polar.wrap",
        "if wrapped >= 360 (reset to 0)  ->  if true",
    ),
    entry(
        Fault::PhaseWrapSkipped,
        "phase_wrap_skipped",
        ConditionIf,
        "polar.wrap",
        "wrap into [0, 360) skipped; phases left in (-180, 180]",
    ),
    entry(
        Fault::ConditioningGuardSkipped,
        "conditioning_guard_skipped",
        ConditionIf,
        "solve.conditioning_guard",
        "if rcond < min_conditioning (reject)  ->  if false",
    ),
    entry(
        Fault::ConditioningCheckInverted,
        "conditioning_check_inverted",
        LogicComparison,
        "solve.conditioning_guard",
        "reject when rcond >= min_conditioning instead of rcond < min_conditioning",
    ),
    entry(
        Fault::DofCheckStrict,
        "dof_check_strict",
        LogicComparison,
        "solve.dof_check",
        "m < n  ->  m <= n",
    ),
    entry(
        Fault::RayleighCheckInverted,
        "rayleigh_check_inverted",
        LogicComparison,
        "rayleigh.separation",
        "|dsigma| T < 2pi  ->  |dsigma| T >= 2pi",
    ),
    entry(
        Fault::ZeroAmplitudeCheckInverted,
        "zero_amplitude_check_inverted",
        LogicComparison,
        "polar.zero_branch",
        "amplitude == 0  ->  amplitude != 0",
    ),
    entry(
        Fault::TrendFlagNegated,
        "trend_flag_negated",
        LogicValue,
        "config.include_trend",
        "include_trend read as !include_trend",
    ),
    entry(
        Fault::InterceptColumnDisabled,
        "intercept_column_disabled",
        LogicValue,
        "design.intercept_flag",
        "intercept column flag true  ->  false (a0 reported as 0)",
    ),
    entry(
        Fault::RayleighFlagNegated,
        "rayleigh_flag_negated",
        LogicValue,
        "config.rayleigh_check",
        "rayleigh_check read as !rayleigh_check",
    ),
    entry(
        Fault::PhaseRefDefect,
        "phase_ref_defect",
        MathOperator,
        "polar.phase_reference",
        "with the trend fitted, phase referenced to the latest sample time: phi + sigma t_end",
    ),
    entry(
        Fault::AmplitudeMissingSquares,
        "amplitude_missing_squares",
        MathOperator,
        "polar.amplitude",
        "sqrt(B^2 + C^2)  ->  sqrt(|B + C|)",
    ),
    entry(
        Fault::AmplitudeAbsSum,
        "amplitude_abs_sum",
        MathOperator,
        "polar.amplitude",
        "sqrt(B^2 + C^2)  ->  |B| + |C|",
    ),
    entry(
        Fault::PhaseSignFlipped,
        "phase_sign_flipped",
        MathOperator,
        "polar.phase",
        "atan2(-C, B)  ->  atan2(C, B)",
    ),
    entry(
        Fault::PhaseRadianFactor,
        "phase_radian_factor",
        MathOperator,
        "polar.phase",
        "phase reported in radians (degree conversion dropped)",
    ),
    entry(
        Fault::TrendSignFlipped,
        "trend_sign_flipped",
        MathOperator,
        "unpack.trend",
        "a1 = beta[1]  ->  a1 = -beta[1]",
    ),
    entry(
        Fault::DesignFrequencyCycles,
        "design_frequency_cycles",
        MathOperator,
        "design.harmonic_columns",
        "cos(sigma t)  ->  cos(sigma / 2pi * t)",
    ),
    entry(
        Fault::DesignTrendFromLastSample,
        "design_trend_from_last_sample",
        MathOperator,
        "design.trend_column",
        "trend column t  ->  t - t[m-1]",
    ),
    entry(
        Fault::BacksubDivideToMultiply,
        "backsub_divide_to_multiply",
        MathOperator,
        "solve.back_substitution",
        "beta[i] = acc / R[i][i]  ->  acc * R[i][i]",
    ),
];

/// One seeded fault.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantRecord {
    pub id: String,
    pub category: MutantCategory,
    /// Named fault point in the pipeline.
    pub site: String,
    /// Original vs mutated behaviour.
    pub description: String,
}

impl MutantRecord {
    fn from_entry(e: &Entry) -> Self {
        Self {
            id: e.id.to_string(),
            category: e.category,
            site: e.site.to_string(),
            description: e.description.to_string(),
        }
    }
}

/// The built-in mutant catalog.
pub fn list_mutants() -> Vec<MutantRecord> {
    CATALOG.iter().map(MutantRecord::from_entry).collect()
}

#[derive(Debug, Error)]
pub enum FaultError {
    #[error("no mutant with id '{0}' in the catalog")]
    UnknownMutant(String),
    #[error("the equivalence filter needs at least one probe")]
    NoProbes,
    #[error("no mutants to run")]
    NoMutants,
    #[error(transparent)]
    Campaign(#[from] CampaignError),
}

fn lookup(id: &str) -> Result<&'static Entry, FaultError> {
    CATALOG
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| FaultError::UnknownMutant(id.to_string()))
}

/// The analysis pipeline with at most one fault point switched on.
#[derive(Debug, Clone, Default)]
pub struct MutantEngine {
    active: Option<(Fault, MutantRecord)>,
}

/// An engine with the catalog mutant `id` active.
pub fn with_mutant(id: &str) -> Result<MutantEngine, FaultError> {
    MutantEngine::with_mutant(id)
}

impl MutantEngine {
    /// The instrumented pipeline with no fault active.
    pub fn inactive() -> Self {
        Self::default()
    }

    pub fn with_mutant(id: &str) -> Result<Self, FaultError> {
        let e = lookup(id)?;
        Ok(Self {
            active: Some((e.fault, MutantRecord::from_entry(e))),
        })
    }

    pub fn deactivate(&mut self) {
        self.active = None;
    }

    pub fn active(&self) -> Option<&MutantRecord> {
        self.active.as_ref().map(|(_, r)| r)
    }
}

impl FromStr for MutantEngine {
    type Err = FaultError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::with_mutant(s)
    }
}

impl TapEngine for MutantEngine {
    fn analyze(&self, input: &TapInput) -> Result<TidalSolution, EngineError> {
        pipeline::analyze(
            &input.series,
            &input.constituents,
            &input.config,
            self.active.as_ref().map(|(f, _)| *f),
        )
    }

    fn label(&self) -> String {
        match self.active() {
            Some(r) => format!("mutant:{}", r.id),
            None => "reference".to_string(),
        }
    }
}
