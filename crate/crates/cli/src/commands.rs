use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tapmt_core::external::{self, EngineHandle, ExternalEngine};
use tapmt_core::fault::{
    filter_equivalents, list_mutants, mutation_campaign, probe_seed, MutantEngine, MutationConfig,
    MutationReport,
};
use tapmt_core::harmonic::{
    analyze_detailed, read_series_csv, series_to_csv_string, ConstituentSet, FitConfig,
};
use tapmt_core::metamorphic::{
    parse_mr_list, run_campaign, CampaignConfig, CampaignReport, MrId, MrOptions, Tolerance,
};
use tapmt_core::signal::{generate, random_campaign_spec, Seed, SyntheticSpec};
use tapmt_core::{predict as predict_series, ReferenceEngine, TapEngine, TidalSolution};

use crate::{
    AnalyzeArgs, CampaignArgs, EngineArgs, Format, GenArgs, MtRunArgs, MutantsRunArgs, PredictArgs,
    ReportArgs, ServeArgs,
};

/// Exit code and the text of the final summary line.
pub struct Outcome {
    pub code: u8,
    pub summary: String,
}

impl Outcome {
    fn ok(summary: impl Into<String>) -> Self {
        Self {
            code: 0,
            summary: summary.into(),
        }
    }
}

/// Everything needed to reproduce a campaign run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub master_seed: Seed,
    pub n_cases: usize,
    pub mrs: Vec<MrId>,
    pub tolerance: Tolerance,
    pub engine: EngineHandle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutant: Option<String>,
    pub outputs: Vec<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

pub fn gen(a: GenArgs) -> Result<Outcome> {
    let seed = Seed(a.seed);
    let spec: SyntheticSpec = match &a.spec {
        Some(p) => read_json(p)?,
        None => random_campaign_spec(seed),
    };
    let series = generate(&spec, seed.derive(1)).context("invalid spec")?;
    write_or_print(a.out.as_deref(), &series_to_csv_string(&series))?;
    if let Some(p) = &a.spec_out {
        let text = with_newline(serde_json::to_string_pretty(&spec)?);
        fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(Outcome::ok(format!("{} samples written", series.len())))
}

pub fn analyze(a: AnalyzeArgs) -> Result<Outcome> {
    let series = read_series_csv(&a.input).with_context(|| a.input.display().to_string())?;
    let names: Vec<&str> = a.constituents.split(',').map(str::trim).collect();
    let set = ConstituentSet::from_names(&names)?;
    let config = match &a.config {
        Some(p) => read_json(p)?,
        None => FitConfig::with_trend(!a.no_trend),
    };
    let analysis = analyze_detailed(&series, &set, &config)?;
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
    }
    let text = with_newline(serde_json::to_string_pretty(&analysis.solution)?);
    write_or_print(a.out.as_deref(), &text)?;
    Ok(Outcome::ok(format!(
        "{} constituents fitted to {} samples",
        set.len(),
        series.len()
    )))
}

pub fn predict(a: PredictArgs) -> Result<Outcome> {
    let solution: TidalSolution = read_json(&a.solution)?;
    let times: Vec<f64> = match (&a.times, a.count) {
        (Some(p), _) => read_series_csv(p)
            .with_context(|| p.display().to_string())?
            .times()
            .to_vec(),
        (None, Some(n)) => (0..n).map(|j| a.start + j as f64 * a.step).collect(),
        (None, None) => bail!("give either --times FILE or --count N"),
    };
    let series = predict_series(&solution, &times)?;
    write_or_print(a.out.as_deref(), &series_to_csv_string(&series))?;
    Ok(Outcome::ok(format!("{} predictions written", series.len())))
}

fn campaign_config(c: &CampaignArgs) -> Result<CampaignConfig> {
    if c.cases == 0 {
        bail!("--cases must be at least 1");
    }
    let mrs = match &c.mrs {
        Some(s) => parse_mr_list(s)?,
        None => MrId::ALL.to_vec(),
    };
    let tolerance = Tolerance::uniform(c.tolerance);
    tolerance.validate()?;
    Ok(CampaignConfig {
        mrs,
        n_cases: c.cases,
        master_seed: Seed(c.seed),
        tolerance,
        options: MrOptions {
            append_time: c.mr1_time.parse()?,
            strict_mr2: c.mr2_strict,
        },
        workers: c.workers.max(1),
    })
}

fn build_engine(e: &EngineArgs) -> Result<(Box<dyn TapEngine>, EngineHandle)> {
    if let Some(cmd) = &e.engine_cmd {
        let Some(words) = shlex::split(cmd) else {
            bail!("cannot parse --engine-cmd '{cmd}'");
        };
        let mut handle = EngineHandle::external(words, e.timeout_s);
        handle.persistent = e.persistent;
        let engine = ExternalEngine::new(handle.clone())?;
        return Ok((Box::new(engine), handle));
    }
    let handle = EngineHandle::in_process();
    match &e.mutant {
        Some(id) => Ok((Box::new(MutantEngine::with_mutant(id)?), handle)),
        None => Ok((Box::new(ReferenceEngine), handle)),
    }
}

fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    files
        .iter()
        .map(|(name, text)| {
            let p = dir.join(name);
            fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))?;
            Ok(p)
        })
        .collect()
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let p = dir.join("manifest.json");
    fs::write(&p, with_newline(serde_json::to_string_pretty(manifest)?))
        .with_context(|| format!("cannot write {}", p.display()))
}

pub fn mt_run(a: MtRunArgs) -> Result<Outcome> {
    let config = campaign_config(&a.campaign)?;
    let (engine, handle) = build_engine(&a.engine)?;
    let report = run_campaign(engine.as_ref(), &config)?;

    let json = with_newline(report.to_json());
    let table = report.render_table();
    if let Some(dir) = &a.campaign.out {
        let outputs = write_outputs(
            dir,
            &[("report.json", json.clone()), ("report.txt", table.clone())],
        )?;
        write_manifest(
            dir,
            &RunManifest {
                master_seed: config.master_seed,
                n_cases: config.n_cases,
                mrs: config.mrs.clone(),
                tolerance: config.tolerance,
                engine: handle,
                mutant: a.engine.mutant.clone(),
                outputs,
            },
        )?;
    }
    write_or_print(
        None,
        match a.campaign.format {
            Format::Json => &json,
            Format::Table => &table,
        },
    )?;

    let violations = report.total_violations();
    let crashes: usize = report.totals.iter().map(|t| t.crashes).sum();
    let violated_mrs: Vec<String> = report
        .totals
        .iter()
        .filter(|t| t.violated > 0)
        .map(|t| t.mr.to_string())
        .collect();
    let mut summary = format!(
        "{violations} violations in {} cases across {} relations",
        config.n_cases,
        config.mrs.len()
    );
    if !violated_mrs.is_empty() {
        summary.push_str(&format!(" ({})", violated_mrs.join(", ")));
    }
    if crashes > 0 {
        summary.push_str(&format!(", {crashes} engine crashes"));
    }
    Ok(Outcome {
        code: u8::from(violations > 0),
        summary,
    })
}

pub fn mutants_list(format: Format) -> Result<Outcome> {
    let all = list_mutants();
    let text = match format {
        Format::Json => with_newline(serde_json::to_string_pretty(&all)?),
        Format::Table => {
            let mut s = format!(
                "{:<34} {:<17} {:<26} {}\n",
                "id", "category", "site", "description"
            );
            for m in &all {
                s.push_str(&format!(
                    "{:<34} {:<17} {:<26} {}\n",
                    m.id,
                    m.category.as_str(),
                    m.site,
                    m.description
                ));
            }
            s
        }
    };
    write_or_print(None, &text)?;
    Ok(Outcome::ok(format!("{} mutants", all.len())))
}

pub fn mutants_run(a: MutantsRunArgs) -> Result<Outcome> {
    let c = campaign_config(&a.campaign)?;
    if a.probes == 0 {
        bail!("--probes must be at least 1");
    }
    let mut catalog = list_mutants();
    if let Some(only) = &a.only {
        let wanted: Vec<&str> = only.split(',').map(str::trim).collect();
        for id in &wanted {
            if !catalog.iter().any(|m| m.id == *id) {
                bail!("no mutant with id '{id}' in the catalog");
            }
        }
        catalog.retain(|m| wanted.contains(&m.id.as_str()));
    }
    let config = MutationConfig {
        mrs: c.mrs,
        n_cases: c.n_cases,
        master_seed: c.master_seed,
        tolerance: c.tolerance,
        options: c.options,
        probes: a.probes,
        crash_is_kill: a.crash_is_kill,
        workers: c.workers,
    };
    let filter = filter_equivalents(&catalog, config.probes, probe_seed(config.master_seed))?;
    if filter.survivors.is_empty() {
        bail!(
            "every selected mutant is equivalent on {} probes",
            config.probes
        );
    }
    let mut report = mutation_campaign(&filter.survivors, &config)?;
    report.equivalent = filter.equivalent.into_iter().map(|m| m.id).collect();

    let json = with_newline(report.to_json());
    let table = report.render_table();
    if let Some(dir) = &a.campaign.out {
        let outputs = write_outputs(
            dir,
            &[
                ("mutation_report.json", json.clone()),
                ("mutation_report.txt", table.clone()),
            ],
        )?;
        write_manifest(
            dir,
            &RunManifest {
                master_seed: config.master_seed,
                n_cases: config.n_cases,
                mrs: config.mrs.clone(),
                tolerance: config.tolerance,
                engine: EngineHandle::in_process(),
                mutant: None,
                outputs,
            },
        )?;
    }
    write_or_print(
        None,
        match a.campaign.format {
            Format::Json => &json,
            Format::Table => &table,
        },
    )?;
    Ok(Outcome::ok(format!(
        "{}/{} non-equivalent mutants killed, {} equivalent",
        report.union.killed,
        report.union.non_equivalent,
        report.equivalent.len()
    )))
}

pub fn report(a: ReportArgs) -> Result<Outcome> {
    let text = read_text(&a.input)?;
    if let Ok(r) = serde_json::from_str::<CampaignReport>(&text) {
        let out = match a.format {
            Format::Json => with_newline(r.to_json()),
            Format::Table => r.render_table(),
        };
        write_or_print(None, &out)?;
        return Ok(Outcome::ok(format!(
            "campaign report, {} violations",
            r.total_violations()
        )));
    }
    match serde_json::from_str::<MutationReport>(&text) {
        Ok(r) => {
            let out = match a.format {
                Format::Json => with_newline(r.to_json()),
                Format::Table => r.render_table(),
            };
            write_or_print(None, &out)?;
            Ok(Outcome::ok(format!(
                "mutation report, {}/{} killed",
                r.union.killed, r.union.non_equivalent
            )))
        }
        Err(e) => bail!(
            "{}: neither a campaign nor a mutation report ({e})",
            a.input.display()
        ),
    }
}

pub fn serve(a: ServeArgs) -> Result<Outcome> {
    let engine: Box<dyn TapEngine> = match &a.mutant {
        Some(id) => Box::new(MutantEngine::with_mutant(id)?),
        None => Box::new(ReferenceEngine),
    };
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    external::serve(engine.as_ref(), stdin.lock(), stdout.lock())?;
    Ok(Outcome::ok(format!("served by {}", engine.label())))
}
