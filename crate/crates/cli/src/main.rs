//! `qcsp`: solve, validate, convert, generate and benchmark quay crane
//! scheduling instances.

use std::collections::BTreeMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qcsp_core::decomp::{run, section, DriverConfig, SolveReport, Status};
use qcsp_core::master::parse_sequences;
use qcsp_core::model::io::{parse_as, write_canonical, SourceFormat};
use qcsp_core::model::validate_schedule;
use qcsp_core::oracle::{brute_force, generate, GenParams, OracleLimits};
use qcsp_core::slave::parse_schedule;
use qcsp_core::{Instance, Time};
use serde_json::{json, Value};

const OPTIMAL: u8 = 0;
const TIME_LIMIT: u8 = 2;
const INPUT_ERROR: u8 = 3;
const VIOLATIONS: u8 = 4;

#[derive(Parser)]
#[command(name = "qcsp", version, about = "Exact quay crane scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the report.
    Solve {
        path: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        #[arg(long, value_enum, default_value_t = Format::Canonical)]
        from: Format,
    },
    /// Check a schedule against an instance.
    Validate { instance: PathBuf, schedule: PathBuf },
    /// Rewrite an instance in the canonical format.
    Convert {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Canonical)]
        from: Format,
    },
    /// Write a random instance in the canonical format.
    Generate(GenArgs),
    /// Solve every instance file in a directory, one row each.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Instances solved at the same time.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args, Clone)]
struct SolveOpts {
    /// Wall-clock limit in seconds.
    #[arg(long, env = "QCSP_TIME_LIMIT")]
    time_limit: Option<f64>,
    #[arg(long, value_enum, default_value_t = Algorithm::Decomp)]
    algorithm: Algorithm,
    /// Let every crane reach every bay.
    #[arg(long)]
    no_limits: bool,
    #[arg(long, value_enum, default_value_t = Emit::Text)]
    emit: Emit,
    /// Leave wall-clock times out of the output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Decomp,
    Oracle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Text,
    Structured,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Canonical,
    Kim,
    Meisel,
}

impl From<Format> for SourceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Canonical => SourceFormat::Canonical,
            Format::Kim => SourceFormat::Kim,
            Format::Meisel => SourceFormat::Meisel,
        }
    }
}

/// `a` or `a..b` (inclusive).
#[derive(Clone, Debug)]
struct Span<T>(RangeInclusive<T>);

impl<T: FromStr + Copy> FromStr for Span<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<T>().map_err(|_| format!("not a number: {t:?}"));
        match s.split_once("..") {
            Some((a, b)) => Ok(Span(num(a)?..=num(b.trim_start_matches('='))?)),
            None => {
                let v = num(s)?;
                Ok(Span(v..=v))
            }
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "5..7")]
    tasks: Span<usize>,
    #[arg(long, default_value = "2..3")]
    cranes: Span<usize>,
    #[arg(long, default_value = "6..8")]
    bays: Span<usize>,
    #[arg(long, default_value = "0..1")]
    safety: Span<usize>,
    #[arg(long, default_value = "1")]
    travel: Span<Time>,
    #[arg(long, default_value = "1..20")]
    processing: Span<Time>,
    #[arg(long, default_value = "0")]
    ready: Span<Time>,
    #[arg(long, default_value_t = 1.5)]
    tasks_per_bay: f64,
    #[arg(long, default_value_t = 1.0)]
    prec_density: f64,
    #[arg(long, default_value_t = 0.0)]
    nonsim_density: f64,
    #[arg(long, default_value_t = 0.0)]
    fixed_end: f64,
}

/// A failure that maps to an exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn input_error(error: anyhow::Error) -> Failure {
    Failure {
        code: INPUT_ERROR,
        error,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input_error)
}

fn load(path: &Path, from: Format) -> Result<Instance, Failure> {
    let text = read(path)?;
    parse_as(&text, from.into())
        .with_context(|| format!("{}", path.display()))
        .map_err(input_error)
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Optimal => OPTIMAL,
        Status::TimeLimit => TIME_LIMIT,
        Status::InfeasibleInput => INPUT_ERROR,
    }
}

fn solve(inst: &Instance, opts: &SolveOpts) -> anyhow::Result<SolveReport> {
    let inst = if opts.no_limits {
        inst.clone().without_crane_limits()
    } else {
        inst.clone()
    };
    match opts.algorithm {
        Algorithm::Decomp => {
            let time_limit = match opts.time_limit {
                Some(s) if !(s > 0.0 && s.is_finite()) => return Err(anyhow!("time limit must be positive, got {s}")),
                Some(s) => Some(Duration::from_secs_f64(s)),
                None => None,
            };
            let config = DriverConfig {
                time_limit,
                ..DriverConfig::default()
            };
            Ok(run(&inst, &config))
        }
        Algorithm::Oracle => {
            let started = Instant::now();
            let sol = brute_force(&inst, &OracleLimits::default())?;
            Ok(SolveReport::from_oracle(&inst, &sol, started.elapsed()))
        }
    }
}

fn structured(inst: &Instance, report: &SolveReport, timing: bool) -> Value {
    let cuts: BTreeMap<&str, usize> = report.cuts_added.iter().map(|(f, &c)| (f.name(), c)).collect();
    let mut out = json!({
        "status": report.status.name(),
        "lb": report.lb,
        "ub": report.ub,
        "W": report.makespan(),
        "iterations": report.iterations,
        "cuts": cuts,
        "nodes": { "master": report.master_nodes, "slave": report.slave_nodes },
    });
    if let Some(m) = &report.message {
        out["message"] = json!(m);
    }
    if timing {
        out["wall_ms"] = json!(report.wall_ms);
    }
    if let Some(best) = &report.best {
        let routing: Vec<Vec<usize>> = best
            .routing
            .sequences()
            .iter()
            .map(|s| s.iter().map(|&i| i + 1).collect())
            .collect();
        let sched = &best.schedule;
        let tasks: Vec<Value> = (0..inst.n_tasks())
            .map(|i| {
                json!({
                    "task": i + 1,
                    "crane": best.routing.crane_of(i) + 1,
                    "start": sched.start(inst, i),
                    "completion": sched.completion[i],
                })
            })
            .collect();
        out["routing"] = json!(routing);
        out["eta"] = json!(best.routing.eta());
        out["schedule"] = json!({
            "tasks": tasks,
            "cranes": sched.crane_completion,
            "W": sched.makespan,
        });
    }
    out
}

fn cmd_solve(path: &Path, opts: &SolveOpts, from: Format) -> Result<u8, Failure> {
    let inst = load(path, from)?;
    let report = solve(&inst, opts).map_err(input_error)?;
    match opts.emit {
        Emit::Text => print!("{}", report.to_text(&inst, !opts.no_timing)),
        Emit::Structured => println!("{:#}", structured(&inst, &report, !opts.no_timing)),
    }
    Ok(status_code(report.status))
}

fn cmd_validate(instance: &Path, schedule: &Path) -> Result<u8, Failure> {
    let inst = load(instance, Format::Canonical)?;
    let text = read(schedule)?;
    let parsed = parse_schedule(&text)
        .map_err(|e| anyhow!("{}: line {}: {}", schedule.display(), e.line, e.message))
        .map_err(input_error)?;
    let sequences = match section(&text, "routing") {
        Some(block) => parse_sequences(&block, inst.n_cranes())
            .with_context(|| format!("{}: [routing]", schedule.display()))
            .map_err(input_error)?,
        None => parsed.sequences(),
    };
    let violations = validate_schedule(&inst, &sequences, &parsed.schedule)
        .with_context(|| format!("{} does not match {}", schedule.display(), instance.display()))
        .map_err(input_error)?;
    if violations.is_empty() {
        println!("valid");
        return Ok(OPTIMAL);
    }
    for v in &violations {
        println!("{v}");
    }
    Ok(VIOLATIONS)
}

fn cmd_convert(path: &Path, from: Format) -> Result<u8, Failure> {
    let inst = load(path, from)?;
    print!("{}", write_canonical(&inst));
    Ok(OPTIMAL)
}

fn cmd_generate(args: &GenArgs) -> Result<u8, Failure> {
    let params = GenParams {
        n: args.tasks.0.clone(),
        q: args.cranes.0.clone(),
        bays: args.bays.0.clone(),
        safety: args.safety.0.clone(),
        travel: args.travel.0.clone(),
        processing: args.processing.0.clone(),
        ready: args.ready.0.clone(),
        tasks_per_bay: args.tasks_per_bay,
        prec_density: args.prec_density,
        nonsim_density: args.nonsim_density,
        fixed_end: args.fixed_end,
        seed: args.seed,
    };
    let inst = generate(&params).map_err(|e| input_error(e.into()))?;
    print!("{}", write_canonical(&inst));
    Ok(OPTIMAL)
}

struct Row {
    name: String,
    outcome: Result<SolveReport, String>,
}

fn bench_row(path: &Path, opts: &SolveOpts) -> Row {
    let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let outcome = fs::read_to_string(path)
        .map_err(anyhow::Error::from)
        .and_then(|text| Ok(parse_as(&text, SourceFormat::Canonical)?))
        .and_then(|inst| solve(&inst, opts))
        .map_err(|e| format!("{e:#}"));
    Row { name, outcome }
}

fn cmd_bench(dir: &Path, opts: &SolveOpts, jobs: usize) -> Result<u8, Failure> {
    let entries = fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))
        .map_err(input_error)?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();

    let next = Mutex::new(0usize);
    let rows: Vec<Mutex<Option<Row>>> = paths.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, paths.len().max(1)) {
            s.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap_or_else(|e| e.into_inner());
                    *n += 1;
                    *n - 1
                };
                let Some(path) = paths.get(i) else { break };
                let row = bench_row(path, opts);
                *rows[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(row);
            });
        }
    });
    let rows: Vec<Row> = rows
        .into_iter()
        .filter_map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()))
        .collect();

    let timing = !opts.no_timing;
    let mut code = OPTIMAL;
    let fmt = |v: Option<Time>| v.map_or_else(|| "-".to_string(), |t| t.to_string());
    let mut json_rows = Vec::new();
    if opts.emit == Emit::Text {
        let mut header = "name\tstatus\tW\tlb\tub\titerations\tcuts".to_string();
        if timing {
            header.push_str("\ttime_ms");
        }
        println!("{header}");
    }
    for row in &rows {
        match &row.outcome {
            Ok(rep) => {
                code = code.max(status_code(rep.status));
                let cuts: usize = rep.cuts_added.values().sum();
                if opts.emit == Emit::Text {
                    let mut line = format!(
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        row.name,
                        rep.status.name(),
                        fmt(rep.makespan()),
                        fmt(rep.lb),
                        fmt(rep.ub),
                        rep.iterations,
                        cuts
                    );
                    if timing {
                        line.push_str(&format!("\t{}", rep.wall_ms));
                    }
                    println!("{line}");
                } else {
                    let mut v = json!({
                        "name": row.name,
                        "status": rep.status.name(),
                        "W": rep.makespan(),
                        "lb": rep.lb,
                        "ub": rep.ub,
                        "iterations": rep.iterations,
                        "cuts": cuts,
                    });
                    if timing {
                        v["time_ms"] = json!(rep.wall_ms);
                    }
                    json_rows.push(v);
                }
            }
            Err(msg) => {
                code = code.max(INPUT_ERROR);
                if opts.emit == Emit::Text {
                    println!("{}\tERROR\t{}", row.name, msg.replace(['\n', '\t'], " "));
                } else {
                    json_rows.push(json!({ "name": row.name, "status": "ERROR", "error": msg }));
                }
            }
        }
    }
    if opts.emit == Emit::Structured {
        println!("{:#}", Value::Array(json_rows));
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { path, opts, from } => cmd_solve(path, opts, *from),
        Command::Validate { instance, schedule } => cmd_validate(instance, schedule),
        Command::Convert { path, from } => cmd_convert(path, *from),
        Command::Generate(args) => cmd_generate(args),
        Command::Bench { dir, opts, jobs } => cmd_bench(dir, opts, *jobs),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
