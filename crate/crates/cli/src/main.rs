//! `tapmt`: tidal harmonic analysis with metamorphic testing and a mutation lab.
//!
//! Exit status: 0 on success, 1 when a campaign finds violations, 2 on usage or
//! input errors. Every run ends with a one-line summary on stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "tapmt",
    version,
    about = "Tidal analysis with metamorphic testing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic series as CSV.
    Gen(GenArgs),
    /// Fit constituents to a CSV series and write the solution as JSON.
    Analyze(AnalyzeArgs),
    /// Evaluate a solution at given times and write CSV.
    Predict(PredictArgs),
    /// Run the metamorphic campaign against an engine.
    #[command(name = "mt-run")]
    MtRun(MtRunArgs),
    /// Mutant catalog and mutation campaigns.
    #[command(subcommand)]
    Mutants(MutantsCommand),
    /// Re-render a saved campaign or mutation report.
    Report(ReportArgs),
    /// Answer line-delimited JSON engine requests on stdin.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Spec JSON; a random campaign spec is drawn from --seed when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Seed for the noise (and the spec, when drawn).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the spec used as JSON.
    #[arg(long)]
    pub spec_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Input CSV with header `time_hours,elevation_m`.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated catalog constituents.
    #[arg(long, default_value = "M2")]
    pub constituents: String,
    /// Fit configuration JSON (overrides --no-trend).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fit without the linear trend term.
    #[arg(long)]
    pub no_trend: bool,
    /// Output JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Solution JSON as written by `analyze`.
    #[arg(long)]
    pub solution: PathBuf,
    /// CSV whose time column gives the prediction times.
    #[arg(long, conflicts_with_all = ["start", "step", "count"])]
    pub times: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long)]
    pub count: Option<usize>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// External engine command line, e.g. "tapmt serve".
    #[arg(long)]
    pub engine_cmd: Option<String>,
    /// Per-request timeout for the external engine.
    #[arg(long, default_value_t = 30.0)]
    pub timeout_s: f64,
    /// Keep one external process alive for all requests.
    #[arg(long, requires = "engine_cmd")]
    pub persistent: bool,
    /// Run the in-process engine with this catalog mutant active.
    #[arg(long, conflicts_with = "engine_cmd")]
    pub mutant: Option<String>,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    /// Relations to run, e.g. MR1,MR4; all when omitted.
    #[arg(long)]
    pub mrs: Option<String>,
    /// Absolute tolerance for every compared quantity.
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    /// Appended-point time for MR1: next, within or beyond.
    #[arg(long, default_value = "next")]
    pub mr1_time: String,
    /// Also require the 180 degree phase flip in MR2.
    #[arg(long)]
    pub mr2_strict: bool,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Directory for the report, table and manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MtRunArgs {
    #[command(flatten)]
    pub campaign: CampaignArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Subcommand)]
enum MutantsCommand {
    /// Print the mutant catalog.
    List {
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Filter equivalent mutants and run the campaign against the rest.
    Run(MutantsRunArgs),
}

#[derive(Debug, Args)]
pub struct MutantsRunArgs {
    #[command(flatten)]
    pub campaign: CampaignArgs,
    /// Random probes for the equivalence filter.
    #[arg(long, default_value_t = 20)]
    pub probes: usize,
    /// Count follow-up crashes as kills.
    #[arg(long)]
    pub crash_is_kill: bool,
    /// Restrict to these comma-separated mutant ids.
    #[arg(long)]
    pub only: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report JSON written by `mt-run` or `mutants run`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Serve with this catalog mutant active.
    #[arg(long)]
    pub mutant: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return ExitCode::SUCCESS;
            }
            eprintln!("tapmt: usage error (exit 2)");
            return ExitCode::from(2);
        }
    };

    let (name, result) = match cli.command {
        Command::Gen(a) => ("gen", commands::gen(a)),
        Command::Analyze(a) => ("analyze", commands::analyze(a)),
        Command::Predict(a) => ("predict", commands::predict(a)),
        Command::MtRun(a) => ("mt-run", commands::mt_run(a)),
        Command::Mutants(MutantsCommand::List { format }) => {
            ("mutants list", commands::mutants_list(format))
        }
        Command::Mutants(MutantsCommand::Run(a)) => ("mutants run", commands::mutants_run(a)),
        Command::Report(a) => ("report", commands::report(a)),
        Command::Serve(a) => ("serve", commands::serve(a)),
    };

    match result {
        Ok(outcome) => {
            eprintln!("tapmt {name}: {} (exit {})", outcome.summary, outcome.code);
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("tapmt {name}: failed (exit 2)");
            ExitCode::from(2)
        }
    }
}
