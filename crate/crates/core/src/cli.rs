//! `cohere` command-line front end.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 numeric failure,
//! 3 failed acceptance check in `compare`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ensemble::{
    decoherence_measure, is_coherent, prune_cancelling_pairs, relax_coherence, sample_paths, select_coherent_ensemble,
    Contribution, EndpointSpec, Ensemble, LineSearch, PathSource, Provenance, SampleOptions, SelectOptions,
};
use crate::error::{Error, Result};
use crate::experiments::io::{
    ensemble_from_jsonl, ensemble_to_jsonl, field_to_csv, field_to_json, histogram_to_csv, meta_path, to_json_pretty,
    write_file, OutputMeta,
};
use crate::experiments::{run_double_slit, run_oracle_comparison, EndpointMode, ExperimentConfig};
use crate::lattice::WaveFunctionField;
use crate::propagators::{pathsum_propagate_with, propagate, Method};

/// Events listed in a coherence report unless `--full-events` is given.
pub const EVENT_CAP: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "cohere",
    version,
    about = "Coherent trajectory ensembles on a 1D space-time lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Jsonl,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct WithInput {
    #[command(flatten)]
    common: Common,
    /// Ensemble in trajectory JSONL; sampled from the config when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate the configured packet to `t_end`.
    Propagate {
        #[command(flatten)]
        common: Common,
        /// Overrides `run.method`.
        #[arg(long)]
        method: Option<Method>,
    },
    /// Sample phased random-walk paths.
    Sample {
        #[command(flatten)]
        common: Common,
    },
    /// Decoherence measure of an ensemble.
    Coherence {
        #[command(flatten)]
        args: WithInput,
        /// List every intersection event.
        #[arg(long)]
        full_events: bool,
    },
    /// Remove nearly cancelling arrival pairs, cell by cell.
    Prune {
        #[command(flatten)]
        args: WithInput,
    },
    /// Keep the members whose final phase matches the path-sum wave function.
    Select {
        #[command(flatten)]
        args: WithInput,
    },
    /// Relax member phase offsets towards coherence.
    Relax {
        #[command(flatten)]
        args: WithInput,
    },
    /// Sparse double-slit experiment.
    DoubleSlit {
        #[command(flatten)]
        common: Common,
    },
    /// Oracle comparison and coherent-selection check.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Propagate { common, .. }
            | Command::Sample { common }
            | Command::DoubleSlit { common }
            | Command::Compare { common } => common,
            Command::Coherence { args, .. }
            | Command::Prune { args }
            | Command::Select { args }
            | Command::Relax { args } => &args.common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Propagate { .. } => "propagate",
            Command::Sample { .. } => "sample",
            Command::Coherence { .. } => "coherence",
            Command::Prune { .. } => "prune",
            Command::Select { .. } => "select",
            Command::Relax { .. } => "relax",
            Command::DoubleSlit { .. } => "double-slit",
            Command::Compare { .. } => "compare",
        }
    }
}

struct Ctx<'a> {
    command: &'static str,
    cfg: ExperimentConfig,
    common: &'a Common,
}

impl Ctx<'_> {
    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format> {
        let f = self.common.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Error::validation(format!(
                "`{}` does not support --format {}",
                self.command,
                f.name()
            )))
        }
    }

    fn emit(&self, text: &str, format: Format, method: Option<Method>, provenance: Option<Provenance>) -> Result<()> {
        match &self.common.out {
            None => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                    // A closed downstream pipe (`| head`) is not a failure.
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                    _ => Ok(()),
                }
            }
            Some(path) => {
                write_file(path, text)?;
                let meta = OutputMeta {
                    command: self.command.to_string(),
                    config_hash: self.cfg.hash(),
                    seed: self.cfg.run.seed,
                    method: method.map(|m| m.to_string()),
                    format: format.name().to_string(),
                    provenance,
                };
                write_file(&meta_path(path), &to_json_pretty(&meta))
            }
        }
    }

    fn target(&self) -> Result<WaveFunctionField> {
        pathsum_propagate_with(
            &self.cfg.initial_field()?,
            &self.cfg.lagrangian()?,
            self.cfg.run.max_hop,
            &mut |_, _| {},
        )
    }

    fn sample(&self, target: Option<&WaveFunctionField>) -> Result<Ensemble> {
        let grid = self.cfg.space_time_grid()?;
        let psi0 = self.cfg.initial_field()?;
        let owned;
        let endpoints = match self.cfg.run.endpoints {
            EndpointMode::Free => EndpointSpec::Free,
            EndpointMode::Target => match target {
                Some(t) => EndpointSpec::FromField(t),
                None => {
                    owned = self.target()?;
                    EndpointSpec::FromField(&owned)
                }
            },
        };
        let opts = SampleOptions {
            max_hop: self.cfg.run.max_hop,
            ..SampleOptions::default()
        };
        sample_paths(
            PathSource::Field(&psi0),
            self.cfg.run.n_paths,
            self.cfg.run.seed,
            endpoints,
            &self.cfg.lagrangian()?,
            &grid,
            &opts,
        )
    }

    fn ensemble(&self, input: Option<&Path>, target: Option<&WaveFunctionField>) -> Result<Ensemble> {
        match input {
            Some(path) => {
                let file = File::open(path)
                    .map_err(|e| Error::validation(format!("cannot open --input {}: {e}", path.display())))?;
                ensemble_from_jsonl(
                    BufReader::new(file),
                    self.cfg.space_time_grid()?,
                    Provenance {
                        constraints: format!("read from {}", path.display()),
                        ..Provenance::named("file")
                    },
                )
            }
            None => self.sample(target),
        }
    }
}

#[derive(Serialize)]
struct CoherenceOutput<'a> {
    config_hash: String,
    seed: u64,
    n_members: usize,
    raw_measure: f64,
    smooth_measure: f64,
    n_events: usize,
    epsilon: f64,
    is_coherent: bool,
    mean_circular_variance: f64,
    events_truncated: bool,
    events: &'a [crate::ensemble::IntersectionEvent],
    per_event: &'a [crate::ensemble::EventMeasure],
}

#[derive(Serialize)]
struct PruneCell {
    cell: usize,
    before: usize,
    after: usize,
    removed_pairs: usize,
    residual_bound: f64,
    actual_change: f64,
}

#[derive(Serialize)]
struct PruneOutput {
    config_hash: String,
    seed: u64,
    eps_phase: f64,
    eps_mag: f64,
    total_before: usize,
    total_after: usize,
    residual_bound: f64,
    actual_change: f64,
    cells: Vec<PruneCell>,
}

#[derive(Serialize)]
struct RelaxOutput<'a> {
    config_hash: String,
    seed: u64,
    steps: usize,
    converged: bool,
    history: &'a [f64],
    offsets: &'a [f64],
}

fn execute(cmd: &Command) -> Result<i32> {
    let common = cmd.common();
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    let ctx = Ctx {
        command: cmd.name(),
        cfg,
        common,
    };
    let cfg = &ctx.cfg;
    match cmd {
        Command::Propagate { method, .. } => {
            let format = ctx.format(Format::Csv, &[Format::Csv, Format::Json])?;
            let method = method.unwrap_or(cfg.run.method);
            let psi = propagate(
                method,
                &cfg.initial_field()?,
                &cfg.lagrangian()?,
                &cfg.propagate_options(),
            )?;
            let text = match format {
                Format::Csv => field_to_csv(&psi),
                _ => to_json_pretty(&field_to_json(&psi)),
            };
            ctx.emit(&text, format, Some(method), None)?;
        }
        Command::Sample { .. } => {
            let format = ctx.format(Format::Jsonl, &[Format::Jsonl])?;
            let ens = ctx.sample(None)?;
            ctx.emit(&ensemble_to_jsonl(&ens), format, None, Some(ens.provenance().clone()))?;
        }
        Command::Coherence { args, full_events } => {
            let format = ctx.format(Format::Json, &[Format::Json])?;
            let ens = ctx.ensemble(args.input.as_deref(), None)?;
            let report = decoherence_measure(&ens);
            let shown = if *full_events {
                report.events.len()
            } else {
                report.events.len().min(EVENT_CAP)
            };
            let mean_cv = if report.per_event.is_empty() {
                0.0
            } else {
                report.per_event.iter().map(|e| e.circular_variance).sum::<f64>() / report.per_event.len() as f64
            };
            let out = CoherenceOutput {
                config_hash: cfg.hash(),
                seed: cfg.run.seed,
                n_members: ens.len(),
                raw_measure: report.raw_measure,
                smooth_measure: report.smooth_measure,
                n_events: report.n_events(),
                epsilon: cfg.run.epsilon,
                is_coherent: is_coherent(&ens, cfg.run.epsilon)?,
                mean_circular_variance: mean_cv,
                events_truncated: shown < report.events.len(),
                events: &report.events[..shown],
                per_event: &report.per_event[..shown],
            };
            ctx.emit(&to_json_pretty(&out), format, None, Some(ens.provenance().clone()))?;
        }
        Command::Prune { args } => {
            let format = ctx.format(Format::Json, &[Format::Json])?;
            let ens = ctx.ensemble(args.input.as_deref(), None)?;
            let mut by_cell: Vec<Vec<Contribution>> = vec![Vec::new(); ens.grid().n_x()];
            for m in ens.members() {
                by_cell[m.final_cell()].push(Contribution {
                    id: m.id(),
                    phase: m.final_phase() + m.amplitude_weight().arg(),
                    magnitude: m.amplitude_weight().norm(),
                });
            }
            let mut cells = Vec::new();
            for (cell, list) in by_cell.iter().enumerate().filter(|(_, l)| !l.is_empty()) {
                let outcome = prune_cancelling_pairs(list, cfg.run.prune_eps_phase, cfg.run.prune_eps_mag)?;
                let change: num_complex::Complex64 = outcome.removed.iter().map(|(a, b)| a.value() + b.value()).sum();
                cells.push(PruneCell {
                    cell,
                    before: list.len(),
                    after: outcome.kept.len(),
                    removed_pairs: outcome.removed.len(),
                    residual_bound: outcome.residual_bound,
                    actual_change: change.norm(),
                });
            }
            let out = PruneOutput {
                config_hash: cfg.hash(),
                seed: cfg.run.seed,
                eps_phase: cfg.run.prune_eps_phase,
                eps_mag: cfg.run.prune_eps_mag,
                total_before: cells.iter().map(|c| c.before).sum(),
                total_after: cells.iter().map(|c| c.after).sum(),
                residual_bound: cells.iter().map(|c| c.residual_bound).sum(),
                actual_change: cells.iter().map(|c| c.actual_change).sum(),
                cells,
            };
            ctx.emit(&to_json_pretty(&out), format, None, Some(ens.provenance().clone()))?;
        }
        Command::Select { args } => {
            let format = ctx.format(Format::Jsonl, &[Format::Jsonl, Format::Json])?;
            let target = ctx.target()?;
            let ens = ctx.ensemble(args.input.as_deref(), Some(&target))?;
            let opts = SelectOptions {
                amplitude_floor: cfg.run.amplitude_floor,
            };
            let selected = select_coherent_ensemble(&target, &ens, cfg.run.epsilon, &opts)?;
            let text = match format {
                Format::Jsonl => ensemble_to_jsonl(&selected),
                _ => to_json_pretty(&serde_json::json!({
                    "config_hash": cfg.hash(),
                    "seed": cfg.run.seed,
                    "epsilon": cfg.run.epsilon,
                    "n_input": ens.len(),
                    "n_selected": selected.len(),
                    "empty_selection": selected.provenance().empty_selection,
                    "provenance": selected.provenance(),
                })),
            };
            ctx.emit(
                &text,
                format,
                Some(Method::PathSum),
                Some(selected.provenance().clone()),
            )?;
        }
        Command::Relax { args } => {
            let format = ctx.format(Format::Jsonl, &[Format::Jsonl, Format::Json])?;
            let ens = ctx.ensemble(args.input.as_deref(), None)?;
            let outcome = relax_coherence(&ens, cfg.run.relax_max_steps, &LineSearch::default())?;
            let text = match format {
                Format::Jsonl => ensemble_to_jsonl(&outcome.ensemble),
                _ => to_json_pretty(&RelaxOutput {
                    config_hash: cfg.hash(),
                    seed: cfg.run.seed,
                    steps: outcome.steps,
                    converged: outcome.converged,
                    history: &outcome.history,
                    offsets: &outcome.offsets,
                }),
            };
            ctx.emit(&text, format, None, Some(outcome.ensemble.provenance().clone()))?;
        }
        Command::DoubleSlit { .. } => {
            let format = ctx.format(Format::Csv, &[Format::Csv, Format::Json])?;
            let outcome = run_double_slit(cfg)?;
            let text = match format {
                Format::Csv => histogram_to_csv(&outcome.histogram),
                _ => to_json_pretty(&serde_json::json!({
                    "report": outcome.report,
                    "histogram": outcome.histogram,
                })),
            };
            ctx.emit(&text, format, Some(cfg.run.method), None)?;
            if let (Format::Csv, Some(out)) = (format, &common.out) {
                let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
                name.push(".screen.csv");
                write_file(&out.with_file_name(name), &field_to_csv(&outcome.screen))?;
            }
        }
        Command::Compare { .. } => {
            let format = ctx.format(Format::Json, &[Format::Json])?;
            let report = run_oracle_comparison(cfg)?;
            ctx.emit(&to_json_pretty(&report), format, None, None)?;
            if !report.pass {
                for e in &report.errors {
                    eprintln!("compare: {e}");
                }
                return Ok(3);
            }
        }
    }
    Ok(0)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let workers = cli.command.common().workers;
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
