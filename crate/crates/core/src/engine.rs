//! The analysis engine seen by the test harness.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harmonic::{self, ConstituentSet, FitConfig, HarmonicError, TidalSolution, TimeSeries};

/// Everything an engine needs for one analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapInput {
    pub series: TimeSeries,
    pub constituents: ConstituentSet,
    pub config: FitConfig,
}

impl TapInput {
    pub fn new(series: TimeSeries, constituents: ConstituentSet, config: FitConfig) -> Self {
        Self {
            series,
            constituents,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Analysis(#[from] HarmonicError),
    #[error("engine timed out after {seconds} s")]
    Timeout { seconds: f64 },
    #[error("protocol error on response line {line}: {message}")]
    Protocol { line: usize, message: String },
    #[error("engine process failed: {0}")]
    Failure(String),
    #[error("engine crashed: {0}")]
    Crash(String),
}

/// A system under test: any tidal analysis program.
///
/// Implementations must tolerate concurrent independent calls.
pub trait TapEngine: Send + Sync {
    fn analyze(&self, input: &TapInput) -> Result<TidalSolution, EngineError>;

    fn label(&self) -> String {
        "engine".to_string()
    }
}

/// The in-process harmonic engine.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceEngine;

impl TapEngine for ReferenceEngine {
    fn analyze(&self, input: &TapInput) -> Result<TidalSolution, EngineError> {
        Ok(harmonic::analyze(
            &input.series,
            &input.constituents,
            &input.config,
        )?)
    }

    fn label(&self) -> String {
        "reference".to_string()
    }
}

impl<E: TapEngine + ?Sized> TapEngine for &E {
    fn analyze(&self, input: &TapInput) -> Result<TidalSolution, EngineError> {
        (**self).analyze(input)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}

impl<E: TapEngine + ?Sized> TapEngine for Box<E> {
    fn analyze(&self, input: &TapInput) -> Result<TidalSolution, EngineError> {
        (**self).analyze(input)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}
