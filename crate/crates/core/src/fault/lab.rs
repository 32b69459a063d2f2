use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{list_mutants, FaultError, MutantCategory, MutantEngine, MutantRecord};
use crate::engine::{EngineError, ReferenceEngine, TapEngine, TapInput};
use crate::harmonic::{FitConfig, TidalSolution};
use crate::metamorphic::{
    draw_case, run_campaign, CampaignConfig, CampaignError, MrId, MrOptions, Tolerance,
};
use crate::signal::Seed;

pub const DEFAULT_PROBES: usize = 20;

/// Relative tolerance under which a mutant output counts as unchanged.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-12;

/// Probe inputs: each random case fitted with and without the trend term.
fn probe_inputs(n_probes: usize, seed: Seed) -> Vec<TapInput> {
    let mut inputs = Vec::with_capacity(2 * n_probes);
    for p in 0..n_probes {
        let case = draw_case(seed, p);
        let set = case
            .spec
            .constituent_set()
            .expect("campaign specs carry a valid constituent set");
        for trend in [true, false] {
            inputs.push(TapInput::new(
                case.series.clone(),
                set.clone(),
                FitConfig::with_trend(trend),
            ));
        }
    }
    inputs
}

fn close(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
        || (a - b).abs() <= EQUIVALENCE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

fn same_solution(a: &TidalSolution, b: &TidalSolution) -> bool {
    close(a.a0, b.a0)
        && close(a.a1, b.a1)
        && a.components.len() == b.components.len()
        && a.components.iter().zip(&b.components).all(|(x, y)| {
            x.name == y.name
                && close(x.frequency, y.frequency)
                && close(x.amplitude, y.amplitude)
                && close(x.phase_deg, y.phase_deg)
        })
}

/// Both failing with the same message counts as equal; any other failure
/// differs.
fn same_output(
    a: &Result<TidalSolution, EngineError>,
    b: &Result<TidalSolution, EngineError>,
) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => same_solution(x, y),
        (Err(x), Err(y)) => x.to_string() == y.to_string(),
        _ => false,
    }
}

/// Result of the equivalence filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub n_probes: usize,
    pub seed: Seed,
    pub survivors: Vec<MutantRecord>,
    pub equivalent: Vec<MutantRecord>,
}

/// Drops mutants whose outputs match the reference on every probe.
pub fn filter_equivalents(
    mutants: &[MutantRecord],
    n_probes: usize,
    seed: Seed,
) -> Result<FilterOutcome, FaultError> {
    if n_probes == 0 {
        return Err(FaultError::NoProbes);
    }
    let inputs = probe_inputs(n_probes, seed);
    let reference: Vec<_> = inputs.iter().map(|i| ReferenceEngine.analyze(i)).collect();

    let mut survivors = Vec::new();
    let mut equivalent = Vec::new();
    for m in mutants {
        let engine = MutantEngine::with_mutant(&m.id)?;
        let differs = inputs
            .iter()
            .zip(&reference)
            .any(|(input, r)| !same_output(&engine.analyze(input), r));
        if differs {
            survivors.push(m.clone());
        } else {
            equivalent.push(m.clone());
        }
    }
    Ok(FilterOutcome {
        n_probes,
        seed,
        survivors,
        equivalent,
    })
}

/// Pairs of mutants that no probe tells apart.
pub fn uniqueness_audit(
    mutants: &[MutantRecord],
    n_probes: usize,
    seed: Seed,
) -> Result<Vec<(String, String)>, FaultError> {
    if n_probes == 0 {
        return Err(FaultError::NoProbes);
    }
    let inputs = probe_inputs(n_probes, seed);
    let outputs = mutants
        .iter()
        .map(|m| {
            let e = MutantEngine::with_mutant(&m.id)?;
            Ok(inputs.iter().map(|i| e.analyze(i)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, FaultError>>()?;
    let mut clashes = Vec::new();
    for i in 0..mutants.len() {
        for j in i + 1..mutants.len() {
            if outputs[i]
                .iter()
                .zip(&outputs[j])
                .all(|(a, b)| same_output(a, b))
            {
                clashes.push((mutants[i].id.clone(), mutants[j].id.clone()));
            }
        }
    }
    Ok(clashes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub mrs: Vec<MrId>,
    pub n_cases: usize,
    pub master_seed: Seed,
    pub tolerance: Tolerance,
    #[serde(default)]
    pub options: MrOptions,
    /// Probes for the equivalence filter.
    pub probes: usize,
    /// Count follow-up crashes as kills.
    #[serde(default)]
    pub crash_is_kill: bool,
    #[serde(skip, default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            mrs: MrId::ALL.to_vec(),
            n_cases: 100,
            master_seed: Seed(0),
            tolerance: Tolerance::default(),
            options: MrOptions::default(),
            probes: DEFAULT_PROBES,
            crash_is_kill: false,
            workers: 1,
        }
    }
}

impl MutationConfig {
    fn campaign(&self) -> CampaignConfig {
        CampaignConfig {
            mrs: self.mrs.clone(),
            n_cases: self.n_cases,
            master_seed: self.master_seed,
            tolerance: self.tolerance,
            options: self.options,
            workers: 1,
        }
    }
}

/// Kills of one mutant by one relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillCell {
    pub mr: MrId,
    /// Cases with a violated verdict (plus crashes when they count as kills).
    pub kills: usize,
    pub crashes: usize,
    pub killed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillRow {
    pub id: String,
    pub category: MutantCategory,
    pub cells: Vec<KillCell>,
}

impl KillRow {
    pub fn cell(&self, mr: MrId) -> Option<&KillCell> {
        self.cells.iter().find(|c| c.mr == mr)
    }

    pub fn killed_by_any(&self) -> bool {
        self.cells.iter().any(|c| c.killed)
    }

    pub fn killers(&self) -> Vec<MrId> {
        self.cells
            .iter()
            .filter(|c| c.killed)
            .map(|c| c.mr)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillMatrix {
    pub mrs: Vec<MrId>,
    pub n_cases: usize,
    pub rows: Vec<KillRow>,
}

impl KillMatrix {
    pub fn row(&self, id: &str) -> Option<&KillRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    /// Mutant ids killed by `mr`.
    pub fn killed_by(&self, mr: MrId) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.cell(mr).is_some_and(|c| c.killed))
            .map(|r| r.id.as_str())
            .collect()
    }

    /// Mutant ids killed by at least one relation.
    pub fn killed_by_union(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.killed_by_any())
            .map(|r| r.id.as_str())
            .collect()
    }
}

/// `killed / non_equivalent * 100`. `mr` is `None` for the union of all
/// relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationScore {
    pub mr: Option<MrId>,
    pub killed: usize,
    pub non_equivalent: usize,
    pub score: f64,
}

impl MutationScore {
    fn new(mr: Option<MrId>, killed: usize, non_equivalent: usize) -> Self {
        Self {
            mr,
            killed,
            non_equivalent,
            score: 100.0 * killed as f64 / non_equivalent as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationReport {
    pub config: MutationConfig,
    /// Ids removed by the equivalence filter; empty when it was not run.
    pub equivalent: Vec<String>,
    pub matrix: KillMatrix,
    pub scores: Vec<MutationScore>,
    pub union: MutationScore,
}

impl MutationReport {
    pub fn score(&self, mr: MrId) -> Option<&MutationScore> {
        self.scores.iter().find(|s| s.mr == Some(mr))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Per-mutant kill counts and per-relation scores.
    pub fn render_table(&self) -> String {
        let mrs = &self.matrix.mrs;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "mutants: {}   equivalent (filtered): {}   cases: {}   seed: {}",
            self.matrix.rows.len(),
            self.equivalent.len(),
            self.matrix.n_cases,
            self.config.master_seed.0
        );
        let _ = write!(out, "{:<34} {:<17}", "mutant", "category");
        for mr in mrs {
            let _ = write!(out, " {:>5}", mr.to_string());
        }
        out.push('\n');
        for row in &self.matrix.rows {
            let _ = write!(out, "{:<34} {:<17}", row.id, row.category.as_str());
            for &mr in mrs {
                let kills = row.cell(mr).map_or(0, |c| c.kills);
                let _ = write!(out, " {:>5}", kills);
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<34} {:<17}", "killed (M_K)", "");
        for s in &self.scores {
            let _ = write!(out, " {:>5}", s.killed);
        }
        out.push('\n');
        let _ = write!(out, "{:<34} {:<17}", "mutation score %", "");
        for s in &self.scores {
            let _ = write!(out, " {:>5.1}", s.score);
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "all relations: {}/{} killed ({:.1}%)",
            self.union.killed, self.union.non_equivalent, self.union.score
        );
        if !self.equivalent.is_empty() {
            let _ = writeln!(out, "equivalent: {}", self.equivalent.join(", "));
        }
        out
    }
}

/// Runs the metamorphic campaign against every mutant in `mutants`, which are
/// taken to be non-equivalent.
pub fn mutation_campaign(
    mutants: &[MutantRecord],
    config: &MutationConfig,
) -> Result<MutationReport, FaultError> {
    if mutants.is_empty() {
        return Err(FaultError::NoMutants);
    }
    let campaign = config.campaign();
    let run_one = |m: &MutantRecord| -> Result<KillRow, FaultError> {
        let engine = MutantEngine::with_mutant(&m.id)?;
        let report = run_campaign(&engine, &campaign)?;
        let cells = config
            .mrs
            .iter()
            .map(|&mr| {
                let t = report
                    .totals_for(mr)
                    .expect("the campaign covers every configured relation");
                let kills = t.violated + if config.crash_is_kill { t.crashes } else { 0 };
                KillCell {
                    mr,
                    kills,
                    crashes: t.crashes,
                    killed: kills > 0,
                }
            })
            .collect();
        Ok(KillRow {
            id: m.id.clone(),
            category: m.category,
            cells,
        })
    };

    let rows: Vec<KillRow> = if config.workers <= 1 {
        mutants.iter().map(run_one).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| CampaignError::Pool(e.to_string()))?;
        pool.install(|| mutants.par_iter().map(run_one).collect::<Result<_, _>>())?
    };

    let matrix = KillMatrix {
        mrs: config.mrs.clone(),
        n_cases: config.n_cases,
        rows,
    };
    let n = mutants.len();
    let scores = config
        .mrs
        .iter()
        .map(|&mr| MutationScore::new(Some(mr), matrix.killed_by(mr).len(), n))
        .collect();
    let union = MutationScore::new(None, matrix.killed_by_union().len(), n);
    Ok(MutationReport {
        config: config.clone(),
        equivalent: Vec::new(),
        matrix,
        scores,
        union,
    })
}

/// Catalog, equivalence filter, then mutation campaign. The filter uses a
/// seed derived from the master seed.
pub fn run_mutation_lab(config: &MutationConfig) -> Result<MutationReport, FaultError> {
    let filter = filter_equivalents(
        &list_mutants(),
        config.probes,
        probe_seed(config.master_seed),
    )?;
    let mut report = mutation_campaign(&filter.survivors, config)?;
    report.equivalent = filter.equivalent.into_iter().map(|m| m.id).collect();
    Ok(report)
}

/// Seed of the equivalence probes for a campaign seeded by `master`.
pub fn probe_seed(master: Seed) -> Seed {
    master.derive(u64::MAX)
}
