//! Command-line front end. Each subcommand prints its resolved configuration as
//! one JSON line on stderr before doing any work, and exits non-zero when any
//! record was rejected.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::augment::AugmentConfig;
use crate::config::{PipelineConfig, DEFAULT_BEAM, DEFAULT_CHUNKS, DEFAULT_TEMPLATE};
use crate::error::{Error, Result};
use crate::io::{count_lines, create, open, read_jsonl};
use crate::metrics::{latency_csv, latency_report, latency_table, CostModel, LatencyReport, StatsAccumulator};
use crate::pipeline::{self, check_counts, zip_lines, zip_tsv, Rejection, Summary};
use crate::sftformat::TemplateRegistry;
use crate::simulator::{
    Candidate, EchoModel, ModelContext, ModelPort, PromptMode, ScriptedModel, SelectStrategy, SimConfig, SimEvent,
    DEFAULT_GAMMA,
};
use crate::trajectory::TrajectoryRecord;

#[derive(Debug, Parser)]
#[command(name = "simulmt", version, about = "Trajectory curation and decoding simulation for simultaneous MT")]
pub struct Cli {
    /// Worker threads; 0 uses every core. Output is identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build meta trajectories from a bitext and Pharaoh alignments.
    Curate(CurateArgs),
    /// Merge and shift meta trajectories.
    Augment(AugmentArgs),
    /// Render trajectories as multi-turn SFT records.
    Format(FormatArgs),
    /// Chunk statistics per trajectory provenance.
    Stats(StatsArgs),
    /// Replay incremental decoding against a scripted or echo model.
    Simulate(SimulateArgs),
    /// Latency and cost-model wall time from an event log.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    #[arg(long, required_unless_present = "tsv", requires = "tgt")]
    pub src: Option<PathBuf>,
    #[arg(long, required_unless_present = "tsv", requires = "src")]
    pub tgt: Option<PathBuf>,
    /// Tab-separated `source<TAB>target` bitext, instead of --src/--tgt.
    #[arg(long, conflicts_with_all = ["src", "tgt"])]
    pub tsv: Option<PathBuf>,
    #[arg(long)]
    pub align: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub delta_min: usize,
    #[arg(long, default_value_t = 10)]
    pub delta_max: usize,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FormatArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = DEFAULT_TEMPLATE)]
    pub template: String,
    /// JSON file with an extra template definition.
    #[arg(long)]
    pub template_file: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub system_msg: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Select {
    Lcp,
    Ralcp,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Prompt {
    Conversational,
    Offline,
}

impl From<Prompt> for PromptMode {
    fn from(p: Prompt) -> Self {
        match p {
            Prompt::Conversational => PromptMode::Conversational,
            Prompt::Offline => PromptMode::Offline,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One whitespace-tokenized source sentence per line.
    #[arg(long)]
    pub src: PathBuf,
    /// `echo`, or a JSONL file with one `{"rounds": [[[word, ...], ...], ...]}` script per source line.
    #[arg(long)]
    pub model: String,
    /// Source words read per round. Several values write one log per value.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = DEFAULT_CHUNKS)]
    pub chunk: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_BEAM)]
    pub beam: usize,
    #[arg(long, value_enum, default_value_t = Select::Ralcp)]
    pub select: Select,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = Prompt::Conversational)]
    pub prompt: Prompt,
    #[arg(long, default_value = DEFAULT_TEMPLATE)]
    pub template: String,
    #[arg(long)]
    pub template_file: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub system_msg: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Simulated cost per recomputed prompt word.
    #[arg(long, default_value_t = 1.0)]
    pub cost_recompute: f64,
    /// Simulated cost per generated target word.
    #[arg(long, default_value_t = 1.0)]
    pub cost_word: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print JSON lines instead of a table.
    #[arg(long)]
    pub json: bool,
}

/// Parses the process arguments and runs.
pub fn main() -> ExitCode {
    run(Cli::parse())
}

pub fn run(cli: Cli) -> ExitCode {
    match dispatch(&cli) {
        Ok(summary) => {
            for r in &summary.rejected {
                log_rejection(r);
            }
            eprintln!(
                "{} written, {} rejected",
                summary.written,
                summary.rejected.len()
            );
            if summary.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn log_rejection(r: &Rejection) {
    if r.reason.starts_with("record ") {
        eprintln!("rejected {}", r.reason);
    } else {
        eprintln!("rejected record {}: {}", r.id, r.reason);
    }
}

fn resolved(command: &str, config: &PipelineConfig, paths: serde_json::Value) {
    let line = json!({ "command": command, "config": config, "paths": paths });
    eprintln!("{line}");
}

fn dispatch(cli: &Cli) -> Result<Summary> {
    let mut config = PipelineConfig {
        workers: cli.workers,
        ..PipelineConfig::default()
    };
    match &cli.command {
        Command::Curate(a) => curate(a, &config),
        Command::Augment(a) => {
            config.augment = AugmentConfig {
                delta_min: a.delta_min,
                delta_max: a.delta_max,
                beta: a.beta,
                rho_min: a.rho_min,
                seed: a.seed,
            };
            resolved("augment", &config, json!({ "in": a.input, "out": a.out }));
            let mut out = create(&a.out)?;
            pipeline::augment(open(&a.input)?, &config.augment, config.workers, &mut out)
        }
        Command::Format(a) => {
            let mut registry = TemplateRegistry::default();
            if let Some(path) = &a.template_file {
                registry.load_json(path)?;
            }
            config.template = a.template.clone();
            config.system_msg = a.system_msg.clone();
            resolved(
                "format",
                &config,
                json!({ "in": a.input, "out": a.out, "template_file": a.template_file }),
            );
            let template = registry.get(&a.template)?;
            let mut out = create(&a.out)?;
            pipeline::format(open(&a.input)?, template, &a.system_msg, config.workers, &mut out)
        }
        Command::Stats(a) => {
            resolved("stats", &config, json!({ "in": a.input }));
            stats(a)
        }
        Command::Simulate(a) => simulate(a, config),
        Command::Eval(a) => {
            resolved(
                "eval",
                &config,
                json!({
                    "events": a.events,
                    "cost_recompute": a.cost_recompute,
                    "cost_word": a.cost_word,
                    "wwt": "simulated cost model",
                }),
            );
            eval(a)
        }
    }
}

fn curate(a: &CurateArgs, config: &PipelineConfig) -> Result<Summary> {
    resolved(
        "curate",
        config,
        json!({ "src": a.src, "tgt": a.tgt, "tsv": a.tsv, "align": a.align, "out": a.out }),
    );
    let aligned = count_lines(&a.align)?;
    match (&a.tsv, &a.src, &a.tgt) {
        (Some(tsv), _, _) => {
            check_counts("bitext/alignment", count_lines(tsv)?, aligned)?;
            let mut out = create(&a.out)?;
            pipeline::curate(zip_tsv(open(tsv)?, open(&a.align)?), config.workers, &mut out)
        }
        (None, Some(src), Some(tgt)) => {
            let sources = count_lines(src)?;
            check_counts("source/target", sources, count_lines(tgt)?)?;
            check_counts("source/alignment", sources, aligned)?;
            let mut out = create(&a.out)?;
            let lines = zip_lines(open(src)?, open(tgt)?, open(&a.align)?);
            pipeline::curate(lines, config.workers, &mut out)
        }
        _ => Err(Error::InvalidConfig("curate needs --src and --tgt, or --tsv".into())),
    }
}

fn stats(a: &StatsArgs) -> Result<Summary> {
    let mut acc = StatsAccumulator::default();
    let mut written = 0;
    for rec in read_jsonl::<TrajectoryRecord, _>(open(&a.input)?) {
        let (_, traj, _) = rec?.into_parts()?;
        acc.add(&traj);
        written += 1;
    }
    let stats = acc.finish()?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    } else {
        print!("{}", stats.to_table());
    }
    Ok(Summary {
        written,
        rejected: Vec::new(),
    })
}

enum CliModel<'a> {
    Echo,
    Scripted(&'a ScriptedModel),
}

impl ModelPort for CliModel<'_> {
    fn generate(&self, ctx: &ModelContext<'_>, beam: usize) -> Result<Vec<Candidate>> {
        match self {
            Self::Echo => EchoModel.generate(ctx, beam),
            Self::Scripted(m) => m.generate(ctx, beam),
        }
    }
}

/// Output path for chunk size `n` when several are simulated: `events.jsonl` -> `events.n5.jsonl`.
pub fn per_chunk_path(out: &Path, n: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("events");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.n{n}.{ext}"),
        None => format!("{stem}.n{n}"),
    };
    out.with_file_name(name)
}

fn simulate(a: &SimulateArgs, mut config: PipelineConfig) -> Result<Summary> {
    let mut registry = TemplateRegistry::default();
    if let Some(path) = &a.template_file {
        registry.load_json(path)?;
    }
    let strategy = match a.select {
        Select::Lcp => SelectStrategy::Lcp,
        Select::Greedy => SelectStrategy::Greedy,
        Select::Ralcp => SelectStrategy::ralcp(a.gamma)?,
    };
    if a.beam == 0 || a.chunk.contains(&0) {
        return Err(Error::InvalidConfig("chunk and beam must be >= 1".into()));
    }
    config.chunks = a.chunk.clone();
    config.beam = a.beam;
    config.gamma = a.gamma;
    config.select = strategy;
    config.template = a.template.clone();
    config.prompt = a.prompt.into();
    config.system_msg = a.system_msg.clone();
    let outputs: Vec<PathBuf> = if a.chunk.len() == 1 {
        vec![a.out.clone()]
    } else {
        a.chunk.iter().map(|&n| per_chunk_path(&a.out, n)).collect()
    };
    resolved(
        "simulate",
        &config,
        json!({ "src": a.src, "model": a.model, "out": outputs, "template_file": a.template_file }),
    );

    let scripts: Option<Vec<ScriptedModel>> = if a.model == "echo" {
        None
    } else {
        let scripts = read_jsonl(open(&a.model)?).collect::<Result<Vec<ScriptedModel>>>()?;
        check_counts("source/model script", count_lines(&a.src)?, scripts.len())?;
        Some(scripts)
    };
    let model_for = |id: usize| -> Result<CliModel<'_>> {
        match &scripts {
            None => Ok(CliModel::Echo),
            Some(s) => s
                .get(id)
                .map(CliModel::Scripted)
                .ok_or(Error::ScriptExhausted { round: 0 }),
        }
    };

    let template = registry.get(&a.template)?.clone();
    let mut total = Summary::default();
    for (&n, path) in a.chunk.iter().zip(&outputs) {
        let cfg = SimConfig {
            chunk: n,
            beam: a.beam,
            strategy,
            prompt_mode: config.prompt,
            system_msg: a.system_msg.clone(),
            template: template.clone(),
        };
        let mut out = create(path)?;
        let s = pipeline::simulate(open(&a.src)?, model_for, &cfg, config.workers, &mut out)?;
        total.written += s.written;
        total.rejected.extend(s.rejected);
    }
    Ok(total)
}

/// Streams an event log and yields one slice per run of consecutive equal ids.
fn for_each_run(reader: impl BufRead, mut f: impl FnMut(&[SimEvent])) -> Result<()> {
    let mut run: Vec<SimEvent> = Vec::new();
    for event in read_jsonl::<SimEvent, _>(reader) {
        let event = event?;
        if run.last().is_some_and(|last| last.id != event.id) {
            f(&run);
            run.clear();
        }
        run.push(event);
    }
    if !run.is_empty() {
        f(&run);
    }
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<Summary> {
    let cost = CostModel {
        per_recomputed_token: a.cost_recompute,
        per_generated_word: a.cost_word,
    };
    let mut reports: Vec<LatencyReport> = Vec::new();
    let mut summary = Summary::default();
    for_each_run(open(&a.events)?, |events| match latency_report(events, cost) {
        Ok(r) => reports.push(r),
        Err(e) => summary.rejected.push(Rejection {
            id: events[0].id,
            reason: e.to_string(),
        }),
    })?;
    if reports.is_empty() && summary.rejected.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    summary.written = reports.len();
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    if a.json {
        for r in &reports {
            writeln!(stdout, "{}", serde_json::to_string(r).expect("report serializes"))?;
        }
    } else {
        write!(stdout, "{}", latency_table(&reports))?;
    }
    if let Some(path) = &a.csv {
        std::fs::write(path, latency_csv(&reports))?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn simulate_defaults_sweep_chunk_sizes() {
        let cli = Cli::parse_from(["simulmt", "simulate", "--src", "s", "--model", "echo", "--out", "o"]);
        let Command::Simulate(a) = cli.command else { panic!() };
        assert_eq!(a.chunk, DEFAULT_CHUNKS);
        assert_eq!(a.beam, 5);
        assert_eq!(a.select, Select::Ralcp);
    }

    #[test]
    fn chunk_list_parses() {
        let cli = Cli::parse_from(["simulmt", "simulate", "--src", "s", "--model", "echo", "--chunk", "3,5", "--out", "o"]);
        let Command::Simulate(a) = cli.command else { panic!() };
        assert_eq!(a.chunk, vec![3, 5]);
    }

    #[test]
    fn per_chunk_paths() {
        assert_eq!(per_chunk_path(Path::new("/x/ev.jsonl"), 5), PathBuf::from("/x/ev.n5.jsonl"));
        assert_eq!(per_chunk_path(Path::new("ev"), 3), PathBuf::from("ev.n3"));
    }
}
