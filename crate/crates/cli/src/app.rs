//! Argument parsing and subcommand dispatch.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcmu::{
    derive_fshape, export_lp_mc2, export_lp_mc3, generate, left_shift, level_sum_lower_bound, restriction_lower_bounds,
    sample_scenario, simulate, solve_mc2, GeneratorConfig, Instance, Permutation, SolveOptions, TaskId, Time,
};
use thiserror::Error;

use crate::bench::{self, BenchConfig};
use crate::io::{self as files, BenchRecord, InstanceFile, ParseError};
use crate::solvers::{self, SolverKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Input(_) => 1,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<mcmu::Error> for CliError {
    fn from(e: mcmu::Error) -> Self {
        match e {
            mcmu::Error::InvalidCovering(_) | mcmu::Error::Infeasible { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// A time limit stopped a search that still produced a solution.
    TimeLimit,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Done => 0,
            Status::TimeLimit => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mcmu", version, about = "Mixed-criticality match-up scheduling of F-shaped tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LpModel {
    Mc2,
    Mc3,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Criticality levels, 2 or 3.
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    /// Probabilities of each criticality, comma separated; uniform by default.
    #[arg(long, value_delimiter = ',')]
    pub split: Option<Vec<f64>>,
    /// Inclusive range of the first-level time, `lo:hi`.
    #[arg(long, value_parser = parse_range, default_value = "1:11")]
    pub p1: (Time, Time),
    /// Inclusive range of each prolongation, `lo:hi`; repeat once per added level.
    #[arg(long = "prolong", value_parser = parse_range)]
    pub prolong: Vec<(Time, Time)>,
}

impl GenArgs {
    fn config(&self, n: usize, seed: u64) -> Result<GeneratorConfig, CliError> {
        let mut cfg = match self.levels {
            2 => GeneratorConfig::mc2(n, seed),
            3 => GeneratorConfig::mc3(n, seed),
            l => return Err(CliError::Input(format!("--levels must be 2 or 3, got {l}"))),
        };
        if let Some(split) = &self.split {
            cfg.criticality_split = split.clone();
        }
        cfg.p1_range = self.p1;
        if !self.prolong.is_empty() {
            cfg.prolongation_ranges = self.prolong.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_range(s: &str) -> Result<(Time, Time), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("`{s}` is not `lo:hi`"))?;
    let lo = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let hi = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    Ok((lo, hi))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random instance.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve an instance and report the makespan.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "mc2")]
        solver: SolverKind,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Level-sum and restriction lower bounds.
    Bound {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Execute a schedule under a sampled scenario and write the trace as CSV.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        /// Builds the schedule; defaults to mc2 for two levels, bottomup for three, lcf otherwise.
        #[arg(long)]
        solver: Option<SolverKind>,
        /// Explicit task order, space or comma separated; overrides --solver.
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run solvers on generated suites and tabulate the results.
    Bench {
        /// Task counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Instances per size.
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Comma separated.
        #[arg(long, value_delimiter = ',', default_value = "mc2")]
        solvers: Vec<SolverKind>,
        /// Seconds per solver run.
        #[arg(long, default_value_t = 300.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[command(flatten)]
        gen: GenArgs,
        /// Per-run records as CSV.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Where the summary goes; standard output by default.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Turn processing-time distributions into an instance.
    Derive {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the covering model in LP format.
    ExportLp {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to mc2 for at most two levels, mc3 otherwise.
        #[arg(long, value_enum)]
        model: Option<LpModel>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn limit(secs: Option<f64>) -> Result<Option<Duration>, CliError> {
    secs.map(|s| {
        Duration::try_from_secs_f64(s).map_err(|_| CliError::Input(format!("invalid --time-limit {s}")))
    })
    .transpose()
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_instance(path: &Path) -> Result<InstanceFile, CliError> {
    files::read_instance(&read_text(path)?).map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn emit(output: Option<&Path>, body: &[u8]) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, body).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(body).map_err(internal),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(internal)?;
    Ok(buf)
}

fn default_solver(inst: &Instance) -> SolverKind {
    match inst.max_criticality() {
        0..=2 => SolverKind::Mc2,
        3 => SolverKind::BottomUp,
        _ => SolverKind::Lcf,
    }
}

fn parse_order(text: &str) -> Result<Permutation, CliError> {
    let ids = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u32>()
                .map(TaskId)
                .map_err(|e| CliError::Input(format!("--order: `{t}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Permutation::new(ids)?)
}

fn dash<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or("-".into(), |v| v.to_string())
}

pub fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Generate { n, seed, gen, output } => {
            let inst = generate(&gen.config(n, seed)?)?;
            emit(output.as_deref(), files::write_instance(&InstanceFile::new(inst)).as_bytes())?;
            Ok(Status::Done)
        }
        Command::Solve {
            input,
            solver,
            time_limit,
            seed,
            format,
            output,
        } => {
            let file = load_instance(&input)?;
            let opts = SolveOptions {
                time_limit: limit(time_limit)?,
                seed,
            };
            let out = solvers::run(solver, &file.instance, &opts)?;
            let rec = BenchRecord {
                instance: input.file_stem().map_or(String::new(), |s| s.to_string_lossy().into_owned()),
                n: file.instance.len(),
                solver: solver.name().into(),
                elapsed_s: out.elapsed.as_secs_f64(),
                makespan: Some(out.makespan),
                optimal: out.optimal,
                gap_pct: out.gap_pct(),
                certificate: out.certificate.map(|c| c.as_str().into()),
                note: (out.timed_out && !out.optimal).then(|| "time limit".into()),
            };
            let body = match format {
                Format::Csv => csv_bytes(|b| files::write_results(b, std::slice::from_ref(&rec)))?,
                Format::Text => {
                    let order: Vec<String> = out.permutation.order().iter().map(|t| t.to_string()).collect();
                    format!(
                        "solver {}\nmakespan {}\nlower_bound {}\noptimal {}\ngap_pct {}\ncertificate {}\nelapsed_s {:.6}\norder {}\n",
                        rec.solver,
                        out.makespan,
                        out.lower_bound,
                        out.optimal,
                        dash(rec.gap_pct.map(|g| format!("{g:.4}"))),
                        dash(rec.certificate.as_ref()),
                        rec.elapsed_s,
                        order.join(" ")
                    )
                    .into_bytes()
                }
            };
            emit(output.as_deref(), &body)?;
            Ok(if out.timed_out && !out.optimal {
                Status::TimeLimit
            } else {
                Status::Done
            })
        }
        Command::Bound {
            input,
            time_limit,
            seed,
            format,
            output,
        } => {
            let file = load_instance(&input)?;
            let inst = &file.instance;
            let opts = SolveOptions {
                time_limit: limit(time_limit)?,
                seed,
            };
            let level_sum = level_sum_lower_bound(inst);
            let mut exact = true;
            let restriction = if inst.max_criticality() <= 3 {
                Some(restriction_lower_bounds(inst, |i| {
                    let sol = solve_mc2(i, &opts)?;
                    exact &= sol.optimal;
                    Ok(sol.lower_bound)
                })?)
            } else {
                None
            };
            let (minus, plus) = (restriction.map(|b| b.minus), restriction.map(|b| b.plus));
            let body = match format {
                Format::Text => format!("level_sum {level_sum}\nlb_minus {}\nlb_plus {}\n", dash(minus), dash(plus)),
                Format::Csv => format!(
                    "level_sum,lb_minus,lb_plus\n{level_sum},{},{}\n",
                    minus.map_or(String::new(), |v| v.to_string()),
                    plus.map_or(String::new(), |v| v.to_string())
                ),
            };
            emit(output.as_deref(), body.as_bytes())?;
            Ok(if exact { Status::Done } else { Status::TimeLimit })
        }
        Command::Simulate {
            input,
            solver,
            order,
            time_limit,
            seed,
            output,
        } => {
            let file = load_instance(&input)?;
            let inst = &file.instance;
            let mut status = Status::Done;
            let perm = match order {
                Some(text) => parse_order(&text)?,
                None => {
                    let opts = SolveOptions {
                        time_limit: limit(time_limit)?,
                        seed,
                    };
                    let out = solvers::run(solver.unwrap_or_else(|| default_solver(inst)), inst, &opts)?;
                    if out.timed_out && !out.optimal {
                        status = Status::TimeLimit;
                    }
                    out.permutation
                }
            };
            let sched = left_shift(inst, &perm)?;
            let scen = sample_scenario(inst, &file.probabilities_or_uniform(), seed)?;
            let trace = simulate(inst, &sched, &scen)?;
            let records = trace.records(inst, &sched, &scen)?;
            emit(output.as_deref(), &csv_bytes(|b| files::write_trace(b, &records))?)?;
            Ok(status)
        }
        Command::Bench {
            sizes,
            count,
            solvers,
            time_limit,
            seed,
            threads,
            gen,
            output,
            summary,
            format,
        } => {
            let config = BenchConfig {
                sizes,
                count,
                generator: gen.config(0, seed)?,
                solvers,
                time_limit: limit(Some(time_limit))?,
                seed,
                threads,
            };
            let records = bench::run_bench(&config).map_err(CliError::Input)?;
            if let Some(p) = output.as_deref() {
                emit(Some(p), &csv_bytes(|b| files::write_results(b, &records))?)?;
            }
            let rows = bench::summarize(&records);
            let body = match format {
                Format::Text => bench::summary_table(&rows).into_bytes(),
                Format::Csv => csv_bytes(|b| bench::write_summary_csv(b, &rows))?,
            };
            emit(summary.as_deref(), &body)?;
            Ok(Status::Done)
        }
        Command::Derive { input, output } => {
            let text = read_text(&input)?;
            let dists = files::read_distributions(&text).map_err(|source| CliError::Parse {
                path: input.display().to_string(),
                source,
            })?;
            let mut tasks = Vec::with_capacity(dists.tasks.len());
            for t in &dists.tasks {
                let d = derive_fshape(t.id, &t.dist, &dists.levels, t.criticality)?;
                if d.collapsed() {
                    eprintln!(
                        "task {}: equal quantiles, criticality {} reduced to {}",
                        t.id,
                        d.requested,
                        d.shape.criticality()
                    );
                }
                tasks.push(d.shape);
            }
            let inst = Instance::new(tasks)?;
            emit(output.as_deref(), files::write_instance(&InstanceFile::new(inst)).as_bytes())?;
            Ok(Status::Done)
        }
        Command::ExportLp { input, model, output } => {
            let file = load_instance(&input)?;
            let inst = &file.instance;
            let model = model.unwrap_or(if inst.max_criticality() <= 2 {
                LpModel::Mc2
            } else {
                LpModel::Mc3
            });
            let text = match model {
                LpModel::Mc2 => export_lp_mc2(inst)?,
                LpModel::Mc3 => export_lp_mc3(inst)?,
            };
            emit(output.as_deref(), text.as_bytes())?;
            Ok(Status::Done)
        }
    }
}

/// Parses `std::env::args`, runs and maps the result to an exit code.
pub fn main() -> ExitCode {
    // usage errors are input errors, not clap's default code 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
