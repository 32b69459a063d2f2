//! Batch execution of metamorphic relations over random source cases.
//!
//! Case `i` derives everything it needs from `master_seed.derive(i)`: the
//! synthetic spec (stream 0), the noise (stream 1) and the parameters of each
//! relation (stream `100 + k`). Cases are independent, so a report does not
//! depend on how many workers produced it.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    assess, draw_params, mr_expected_relation, mr_followup, source_config_for, MrError, MrId,
    MrOptions, MrVerdict, Tolerance, VerdictStatus,
};
use crate::engine::{TapEngine, TapInput};
use crate::harmonic::TidalSolution;
use crate::signal::{generate, random_campaign_spec, Seed, SyntheticSpec};
use crate::TimeSeries;

const SPEC_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const PARAM_STREAM_BASE: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub mrs: Vec<MrId>,
    pub n_cases: usize,
    pub master_seed: Seed,
    pub tolerance: Tolerance,
    #[serde(default)]
    pub options: MrOptions,
    /// Worker threads; not part of the result.
    #[serde(skip, default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            mrs: MrId::ALL.to_vec(),
            n_cases: 100,
            master_seed: Seed(0),
            tolerance: Tolerance::default(),
            options: MrOptions::default(),
            workers: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("a campaign needs at least one case")]
    NoCases,
    #[error("a campaign needs at least one metamorphic relation")]
    NoRelations,
    #[error(transparent)]
    Relation(#[from] MrError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// One random source case.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignCase {
    pub index: usize,
    pub seed: Seed,
    pub spec: SyntheticSpec,
    pub series: TimeSeries,
}

/// Draws source case `index` of the campaign seeded by `master`.
pub fn draw_case(master: Seed, index: usize) -> CampaignCase {
    let seed = master.derive(index as u64);
    let spec = random_campaign_spec(seed.derive(SPEC_STREAM));
    let series = generate(&spec, seed.derive(NOISE_STREAM))
        .expect("random campaign specs are valid by construction");
    CampaignCase {
        index,
        seed,
        spec,
        series,
    }
}

/// Engine run on a source input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRun {
    pub trend: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<TidalSolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Result of one relation on one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrOutcome {
    pub mr: MrId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<super::MrParams>,
    /// `None` when the case was skipped because its source run failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<MrVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followup: Option<TidalSolution>,
    /// The engine failed on the follow-up input.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub crashed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip_reason: Option<String>,
}

impl MrOutcome {
    fn skipped(mr: MrId, reason: String) -> Self {
        Self {
            mr,
            params: None,
            verdict: None,
            followup: None,
            crashed: false,
            skip_reason: Some(reason),
        }
    }

    pub fn status(&self) -> Option<VerdictStatus> {
        self.verdict.as_ref().map(|v| v.status)
    }

    pub fn is_violated(&self) -> bool {
        self.status() == Some(VerdictStatus::Violated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub index: usize,
    pub seed: Seed,
    pub spec: SyntheticSpec,
    pub sources: Vec<SourceRun>,
    pub outcomes: Vec<MrOutcome>,
}

impl CaseRecord {
    pub fn outcome(&self, mr: MrId) -> Option<&MrOutcome> {
        self.outcomes.iter().find(|o| o.mr == mr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrTotals {
    pub mr: MrId,
    pub satisfied: usize,
    pub violated: usize,
    pub inconclusive: usize,
    pub skipped: usize,
    /// Inconclusive outcomes caused by an engine failure on the follow-up.
    pub crashes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub engine: String,
    pub config: CampaignConfig,
    pub totals: Vec<MrTotals>,
    pub cases: Vec<CaseRecord>,
}

impl CampaignReport {
    pub fn totals_for(&self, mr: MrId) -> Option<&MrTotals> {
        self.totals.iter().find(|t| t.mr == mr)
    }

    pub fn total_violations(&self) -> usize {
        self.totals.iter().map(|t| t.violated).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Per-relation verdict counts as a text table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "engine: {}   cases: {}   seed: {}   tolerance: {}",
            self.engine,
            self.config.n_cases,
            self.config.master_seed.0,
            self.config.tolerance.amplitude
        );
        let _ = writeln!(
            out,
            "{:<5} {:<28} {:>9} {:>9} {:>12} {:>8} {:>8}",
            "MR", "relation", "satisfied", "violated", "inconclusive", "skipped", "crashes"
        );
        for t in &self.totals {
            let _ = writeln!(
                out,
                "{:<5} {:<28} {:>9} {:>9} {:>12} {:>8} {:>8}",
                t.mr.to_string(),
                t.mr.title(),
                t.satisfied,
                t.violated,
                t.inconclusive,
                t.skipped,
                t.crashes
            );
        }
        let _ = writeln!(out, "total violations: {}", self.total_violations());
        out
    }
}

/// Runs every selected relation over `config.n_cases` random cases with
/// `engine` as the system under test.
pub fn run_campaign(
    engine: &dyn TapEngine,
    config: &CampaignConfig,
) -> Result<CampaignReport, CampaignError> {
    if config.n_cases == 0 {
        return Err(CampaignError::NoCases);
    }
    if config.mrs.is_empty() {
        return Err(CampaignError::NoRelations);
    }
    config.tolerance.validate()?;

    let cases: Vec<CaseRecord> = if config.workers <= 1 {
        (0..config.n_cases)
            .map(|i| run_case(engine, config, i))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| CampaignError::Pool(e.to_string()))?;
        pool.install(|| {
            (0..config.n_cases)
                .into_par_iter()
                .map(|i| run_case(engine, config, i))
                .collect()
        })
    };

    let totals = config
        .mrs
        .iter()
        .map(|&mr| {
            let mut t = MrTotals {
                mr,
                satisfied: 0,
                violated: 0,
                inconclusive: 0,
                skipped: 0,
                crashes: 0,
            };
            for o in cases.iter().filter_map(|c| c.outcome(mr)) {
                match o.status() {
                    Some(VerdictStatus::Satisfied) => t.satisfied += 1,
                    Some(VerdictStatus::Violated) => t.violated += 1,
                    Some(VerdictStatus::Inconclusive) => t.inconclusive += 1,
                    None => t.skipped += 1,
                }
                if o.crashed {
                    t.crashes += 1;
                }
            }
            t
        })
        .collect();

    Ok(CampaignReport {
        engine: engine.label(),
        config: config.clone(),
        totals,
        cases,
    })
}

fn run_case(engine: &dyn TapEngine, config: &CampaignConfig, index: usize) -> CaseRecord {
    let case = draw_case(config.master_seed, index);
    let constituents = case
        .spec
        .constituent_set()
        .expect("campaign specs carry a valid constituent set");

    let mut sources: Vec<(TapInput, SourceRun)> = Vec::new();
    for trend in [true, false] {
        if !config
            .mrs
            .iter()
            .any(|&mr| source_config_for(mr).include_trend == trend)
        {
            continue;
        }
        let input = TapInput::new(
            case.series.clone(),
            constituents.clone(),
            source_config_for(if trend { MrId::MR1 } else { MrId::MR6 }),
        );
        let run = match engine.analyze(&input) {
            Ok(solution) => SourceRun {
                trend,
                solution: Some(solution),
                error: None,
            },
            Err(e) => SourceRun {
                trend,
                solution: None,
                error: Some(e.to_string()),
            },
        };
        sources.push((input, run));
    }

    let outcomes = config
        .mrs
        .iter()
        .map(|&mr| {
            let trend = source_config_for(mr).include_trend;
            let (input, run) = sources
                .iter()
                .find(|(_, r)| r.trend == trend)
                .expect("source run exists for every selected relation");
            match &run.solution {
                Some(solution) => run_relation(engine, config, &case, mr, input, solution),
                None => MrOutcome::skipped(
                    mr,
                    format!(
                        "source run failed: {}",
                        run.error.as_deref().unwrap_or("unknown error")
                    ),
                ),
            }
        })
        .collect();

    CaseRecord {
        index,
        seed: case.seed,
        spec: case.spec,
        sources: sources.into_iter().map(|(_, r)| r).collect(),
        outcomes,
    }
}

fn run_relation(
    engine: &dyn TapEngine,
    config: &CampaignConfig,
    case: &CampaignCase,
    mr: MrId,
    source: &TapInput,
    source_output: &TidalSolution,
) -> MrOutcome {
    let mut outcome = MrOutcome {
        mr,
        params: None,
        verdict: None,
        followup: None,
        crashed: false,
        skip_reason: None,
    };

    // The source output itself must report the configured constituents.
    let configured: Vec<String> = source
        .constituents
        .members()
        .iter()
        .map(|c| c.name.clone())
        .collect();
    let reported: Vec<String> = source_output
        .components
        .iter()
        .map(|c| c.name.clone())
        .collect();
    let mut a = configured.clone();
    let mut b = reported.clone();
    a.sort();
    b.sort();
    if a != b {
        outcome.verdict = Some(MrVerdict::constituent_mismatch(&configured, &reported));
        return outcome;
    }

    let mut rng = case
        .seed
        .derive(PARAM_STREAM_BASE + mr.index() as u64)
        .rng();
    let params = match draw_params(mr, source, &config.options, &mut rng) {
        Ok(p) => p,
        Err(e) => {
            outcome.verdict = Some(MrVerdict::inconclusive(e.to_string()));
            return outcome;
        }
    };
    outcome.params = Some(params);

    let built = mr_followup(mr, source, source_output, &params).and_then(|followup| {
        mr_expected_relation(mr, source_output, &params, &config.options)
            .map(|expectation| (followup, expectation))
    });
    let (followup, expectation) = match built {
        Ok(pair) => pair,
        Err(e) => {
            outcome.verdict = Some(MrVerdict::inconclusive(e.to_string()));
            return outcome;
        }
    };

    match engine.analyze(&followup) {
        Ok(out) => {
            outcome.verdict = Some(assess(&expectation, &out, &config.tolerance));
            outcome.followup = Some(out);
        }
        Err(e) => {
            outcome.crashed = true;
            outcome.verdict = Some(MrVerdict::inconclusive(format!(
                "engine failed on follow-up: {e}"
            )));
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{EngineError, ReferenceEngine};

    struct Failing;

    impl TapEngine for Failing {
        fn analyze(&self, _: &TapInput) -> Result<TidalSolution, EngineError> {
            Err(EngineError::Failure("always".into()))
        }
    }

    fn small(mrs: Vec<MrId>, n: usize) -> CampaignConfig {
        CampaignConfig {
            mrs,
            n_cases: n,
            master_seed: Seed(2024),
            ..CampaignConfig::default()
        }
    }

    #[test]
    fn rejects_empty_campaigns() {
        assert!(matches!(
            run_campaign(&ReferenceEngine, &small(MrId::ALL.to_vec(), 0)),
            Err(CampaignError::NoCases)
        ));
        assert!(matches!(
            run_campaign(&ReferenceEngine, &small(vec![], 3)),
            Err(CampaignError::NoRelations)
        ));
        let mut cfg = small(MrId::ALL.to_vec(), 3);
        cfg.tolerance = Tolerance::uniform(-1.0);
        assert!(run_campaign(&ReferenceEngine, &cfg).is_err());
    }

    #[test]
    fn reference_engine_is_clean() {
        let report = run_campaign(&ReferenceEngine, &small(MrId::ALL.to_vec(), 10)).unwrap();
        assert_eq!(report.total_violations(), 0, "{}", report.render_table());
        for t in &report.totals {
            assert_eq!(t.satisfied, 10);
        }
    }

    #[test]
    fn failing_source_skips_the_case() {
        let report = run_campaign(&Failing, &small(vec![MrId::MR3, MrId::MR6], 3)).unwrap();
        for t in &report.totals {
            assert_eq!(t.skipped, 3);
            assert_eq!(t.violated, 0);
        }
        assert_eq!(report.cases[0].sources.len(), 2);
    }

    #[test]
    fn follow_up_failure_is_inconclusive() {
        struct ShortOnly;
        impl TapEngine for ShortOnly {
            fn analyze(&self, input: &TapInput) -> Result<TidalSolution, EngineError> {
                // MR3 follow-ups are the only inputs with a large mean level
                let mean =
                    input.series.elevations().iter().sum::<f64>() / input.series.len() as f64;
                if mean.abs() > 1.5 {
                    Err(EngineError::Crash("boom".into()))
                } else {
                    ReferenceEngine.analyze(input)
                }
            }
        }
        let report = run_campaign(&ShortOnly, &small(vec![MrId::MR3], 20)).unwrap();
        let t = report.totals_for(MrId::MR3).unwrap();
        assert!(t.crashes > 0);
        assert_eq!(t.crashes, t.inconclusive);
        assert_eq!(t.violated, 0);
    }

    #[test]
    fn workers_do_not_change_the_report() {
        let mut cfg = small(MrId::ALL.to_vec(), 12);
        let sequential = run_campaign(&ReferenceEngine, &cfg).unwrap().to_json();
        cfg.workers = 4;
        let parallel = run_campaign(&ReferenceEngine, &cfg).unwrap().to_json();
        assert_eq!(sequential, parallel);
    }

    #[test]
    fn cases_are_reproducible() {
        let a = draw_case(Seed(5), 3);
        let b = draw_case(Seed(5), 3);
        assert_eq!(a, b);
        assert_ne!(draw_case(Seed(5), 4).spec, a.spec);
    }

    #[test]
    fn report_round_trips_through_json() {
        let report = run_campaign(&ReferenceEngine, &small(vec![MrId::MR1, MrId::MR7], 2)).unwrap();
        let back: CampaignReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back.to_json(), report.to_json());
        assert!(report.render_table().contains("MR7"));
    }
}
