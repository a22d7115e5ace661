//! Command-line front end: reconstructs the exact rational form of
//! expressions evaluated as black boxes over prime fields, runs the
//! built-in benchmark suite, and resumes interrupted reconstructions.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ffrec::bench;
use ffrec::driver::{reconstruct, DriverOptions, ReconstructionJob, Verbosity};
use ffrec::expr::Expression;
use ffrec::ffield::FieldElement;

#[derive(Parser)]
#[command(
    name = "ffrec",
    about = "Exact reconstruction of multivariate rational functions from black-box probes over 63-bit prime fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Worker threads for probe evaluation
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Scan for a sparse variable shift before interpolating
    #[arg(long)]
    scan: bool,
    /// Base seed for all random draws
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Emit the report as a JSON object on stdout
    #[arg(long)]
    json: bool,
    /// Directory for per-prime state files (written only for tagged jobs)
    #[arg(long, default_value = "./ff_save")]
    save_dir: PathBuf,
    /// Verbose progress diagnostics on stderr
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct the exact form of an expression treated as a black box
    Reconstruct {
        /// Expression text, or a path to a file containing it
        #[arg(long)]
        expr: String,
        /// Comma-separated variable names, e.g. z1,z2,z3
        #[arg(long)]
        vars: String,
        /// Run every prime as a full interpolation (safe mode)
        #[arg(long)]
        safe: bool,
        /// Tag for state files; enables save/resume
        #[arg(long)]
        tag: Option<String>,
        /// Comma-separated permutation of --vars to reorder variables
        #[arg(long)]
        order: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run a built-in benchmark (f1, f2, f3, or f4) and check the result
    /// against its known closed form
    Bench {
        /// Benchmark name: f1 | f2 | f3 | f4
        which: String,
        /// Comma-separated permutation of the benchmark variables
        #[arg(long)]
        order: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Resume reconstructions from saved state files
    Resume {
        /// Comma-separated state file paths, one job per file
        #[arg(long)]
        files: String,
        /// Expression text or file path; repeat once per state file
        #[arg(long, required = true)]
        expr: Vec<String>,
        /// Comma-separated variable names shared by all expressions
        #[arg(long)]
        vars: String,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn driver_options(common: &CommonOpts) -> DriverOptions {
    DriverOptions {
        threads: common.threads.max(1),
        scan: common.scan,
        save_dir: common.save_dir.clone(),
        seed: common.seed,
        verbosity: if common.verbose {
            Verbosity::Chatty
        } else {
            Verbosity::Important
        },
        fixed_shift: None,
        fixed_anchors: None,
    }
}

/// `--expr` accepts either literal text or a path to a file with the text.
fn load_expr_text(arg: &str) -> Result<String, String> {
    let path = std::path::Path::new(arg);
    if path.is_file() {
        std::fs::read_to_string(path)
            .map(|s| s.trim().to_string())
            .map_err(|e| format!("reading {arg:?}: {e}"))
    } else {
        Ok(arg.to_string())
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect()
}

fn apply_order(vars: Vec<String>, order: &Option<String>) -> Result<Vec<String>, String> {
    match order {
        None => Ok(vars),
        Some(o) => bench::permute_vars(&vars, &split_list(o)),
    }
}

fn emit_report(report: &bench::RunReport, json: bool) {
    if json {
        let obj = serde_json::json!({
            "function": report.function,
            "probes": report.probes,
            "primes": report.primes,
            "wall_ms": report.wall_ms as u64,
            "seed": report.seed,
            "verified": report.verified,
        });
        println!("{obj}");
    } else {
        println!("{}", report.function);
        eprintln!(
            "probes: {}  primes: {}  wall_ms: {}  seed: {}  verified: {}",
            report.probes, report.primes, report.wall_ms, report.seed, report.verified
        );
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Reconstruct {
            expr,
            vars,
            safe,
            tag,
            order,
            common,
        } => {
            let text = load_expr_text(&expr)?;
            let vars = apply_order(split_list(&vars), &order)?;
            if vars.is_empty() {
                return Err("--vars must name at least one variable".into());
            }
            let options = driver_options(&common);
            let parsed = Expression::parse(&text, &vars).map_err(|e| e.to_string())?;
            let job = ReconstructionJob::new(0, vars.len(), tag);
            if safe {
                job.set_safe_mode();
            }
            let black_box = |point: &[FieldElement]| vec![parsed.evaluate(point)];
            let start = Instant::now();
            let outcomes = reconstruct(std::slice::from_ref(&job), &black_box, &options)
                .map_err(|e| e.to_string())?;
            let report = bench::RunReport {
                function: outcomes[0].function.render(&vars),
                probes: outcomes[0].probes,
                primes: outcomes[0].primes,
                wall_ms: start.elapsed().as_millis(),
                seed: outcomes[0].seed,
                verified: outcomes[0].verified,
                matched: None,
            };
            emit_report(&report, common.json);
            Ok(exit_for(report.verified && report.matched != Some(false)))
        }
        Command::Bench {
            which,
            order,
            common,
        } => {
            let spec = bench::spec(&which)
                .ok_or_else(|| format!("unknown benchmark {which:?}; expected f1..f4"))?;
            let vars = apply_order(spec.vars.clone(), &order)?;
            let options = driver_options(&common);
            let report = bench::run_expression(&spec.text, &vars, &options, None, true)?;
            emit_report(&report, common.json);
            match report.matched {
                Some(true) => eprintln!("{}: result matches the closed form", spec.name),
                _ => eprintln!("{}: result DOES NOT match the closed form", spec.name),
            }
            Ok(exit_for(report.verified && report.matched == Some(true)))
        }
        Command::Resume {
            files,
            expr,
            vars,
            common,
        } => {
            let vars = split_list(&vars);
            let paths = split_list(&files);
            if paths.len() != expr.len() {
                return Err(format!(
                    "{} state file(s) but {} --expr value(s)",
                    paths.len(),
                    expr.len()
                ));
            }
            let mut parsed = Vec::new();
            for text in &expr {
                let text = load_expr_text(text)?;
                parsed.push(Expression::parse(&text, &vars).map_err(|e| e.to_string())?);
            }
            let jobs: Vec<ReconstructionJob> = paths
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    ReconstructionJob::resume(std::path::Path::new(p), i)
                        .map_err(|e| e.to_string())
                })
                .collect::<Result<_, _>>()?;
            let options = driver_options(&common);
            let black_box = |point: &[FieldElement]| {
                parsed.iter().map(|e| e.evaluate(point)).collect::<Vec<_>>()
            };
            let start = Instant::now();
            let outcomes =
                reconstruct(&jobs, &black_box, &options).map_err(|e| e.to_string())?;
            let wall_ms = start.elapsed().as_millis();
            let mut all_verified = true;
            for outcome in &outcomes {
                let report = bench::RunReport {
                    function: outcome.function.render(&vars),
                    probes: outcome.probes,
                    primes: outcome.primes,
                    wall_ms,
                    seed: outcome.seed,
                    verified: outcome.verified,
                    matched: None,
                };
                emit_report(&report, common.json);
                all_verified &= outcome.verified;
            }
            Ok(exit_for(all_verified))
        }
    }
}

fn exit_for(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
