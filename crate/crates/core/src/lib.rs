//! Tidal harmonic analysis with a metamorphic-testing harness.
//!
//! * [`harmonic`]: least-squares harmonic analysis and prediction.
//! * [`signal`]: seeded synthetic sea-level series and random campaign specs.
//! * [`engine`]: the analysis-engine abstraction the harness drives.
//! * [`metamorphic`]: the seven metamorphic relations, verdicts and campaigns.
//! * [`fault`]: seeded faults in the analysis pipeline and mutation scoring.
//! * [`external`]: line-delimited JSON bridge to out-of-process engines.

pub mod engine;
pub mod external;
pub mod fault;
pub mod harmonic;
pub mod metamorphic;
pub mod signal;

pub use engine::{EngineError, ReferenceEngine, TapEngine, TapInput};
pub use harmonic::{
    analyze, predict, Constituent, ConstituentSet, FitConfig, HarmonicError, TidalSolution,
    TimeSeries,
};
