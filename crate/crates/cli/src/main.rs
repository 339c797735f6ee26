//! Batch command-line front end for the congruence-equation solver.
//!
//! Exit codes: 0 consistent/ok, 1 inconsistent (or failed check),
//! 2 undecided, 64 usage error, 65 data error, 70 internal error
//! (budget exhausted).

use std::io::Read;
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use xtax_core::dsl::parse_blocksum;
use xtax_core::engine::{CongruenceEngine, EngineConfig, WitnessMode, DEFAULT_SEED};
use xtax_core::error::Error;
use xtax_core::invariants::{census, rank_identity_check, tau_upsilon};
use xtax_core::io::{
    chain_to_json, decision_to_json, matrix_to_json, read_matrix_csv, read_matrix_json,
    status_str, verify_report_to_json, witness_to_json,
};
use xtax_core::matrix::Matrix;
use xtax_core::reduction::{reduce, ReductionContext};
use xtax_core::solver::{
    decide_with_seed, solve, verify, DecisionStatus, SolveTarget, SolverContext, VerifyMode,
};

const EXIT_OK: u8 = 0;
const EXIT_INCONSISTENT: u8 = 1;
const EXIT_UNDECIDED: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_INTERNAL: u8 = 70;

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

#[derive(Parser)]
#[command(
    name = "xtax",
    about = "Decide and solve X^T A X = B for A given as a sum of canonical blocks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format; JSON is the stable contract.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Write the result to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Seed for the randomized searches (fixed default, reproducible).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Residual tolerance for numeric verification
    /// (default 1e-9, or the XTAX_TOLERANCE environment variable).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct TargetArgs {
    /// Target rank: solve/decide X^T A X = I_m.
    #[arg(long)]
    m: Option<usize>,
    /// Path of a symmetric matrix B (JSON or CSV; "-" for stdin).
    #[arg(long = "B")]
    b: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the census, tau, upsilon and the rank-identity cross-check.
    Analyze { blocksum: String },
    /// Decide consistency without constructing a solution.
    Decide {
        blocksum: String,
        #[command(flatten)]
        target: TargetArgs,
    },
    /// Decide and construct a verified solution.
    Solve {
        blocksum: String,
        #[command(flatten)]
        target: TargetArgs,
    },
    /// Check X^T A X = B for explicit matrices.
    Verify {
        /// A: matrix file path, or a block-sum expression.
        #[arg(long = "A")]
        a: String,
        /// X: matrix file path.
        #[arg(long = "X")]
        x: String,
        /// B: matrix file path.
        #[arg(long = "B")]
        b: String,
        /// Require an exact (residual-zero) match.
        #[arg(long)]
        exact: bool,
    },
    /// Find P with P^T A P = B for two matrix files.
    Congruence {
        #[arg(long = "A")]
        a: String,
        #[arg(long = "B")]
        b: String,
    },
    /// Run the absorption pipeline and print the chain and end case.
    Reduce { blocksum: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own help/version exits are not usage errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::from(EXIT_OK);
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok((payload, code)) => {
            if let Err(e) = emit(&payload) {
                eprintln!("error writing output: {e}");
                return ExitCode::from(EXIT_INTERNAL);
            }
            ExitCode::from(code)
        }
        Err(err) => {
            let code = error_code(&err);
            if format == OutputFormat::Json {
                let v = json!({"error": {"message": err.to_string(), "exit_code": code}});
                eprintln!("{v}");
            } else {
                eprintln!("error: {err}");
            }
            ExitCode::from(code)
        }
    }
}

struct Output {
    text: String,
    out: Option<String>,
}

fn emit(payload: &Output) -> std::io::Result<()> {
    match &payload.out {
        Some(path) => std::fs::write(path, format!("{}\n", payload.text)),
        None => {
            println!("{}", payload.text);
            Ok(())
        }
    }
}

fn error_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. }
        | Error::InvalidBlock(_)
        | Error::Io(_)
        | Error::NotSymmetric
        | Error::NotExact
        | Error::InvalidRequest(_)
        | Error::Dimension { .. }
        | Error::Singular => EXIT_DATA,
        Error::NotSimilar | Error::NotCongruent => EXIT_INCONSISTENT,
        Error::ConstructionBudget(_)
        | Error::CongruenceNotFound
        | Error::SimilaritySearchExhausted
        | Error::SqrtFailure(_)
        | Error::Census(_)
        | Error::UnpairedH4
        | Error::UnsupportedAbsorption(_) => EXIT_INTERNAL,
    }
}

fn run(cli: Cli) -> Result<(Output, u8), Error> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let tolerance = cli
        .tolerance
        .or_else(|| {
            std::env::var("XTAX_TOLERANCE")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(1e-9);
    let cfg = EngineConfig {
        seed,
        tolerance,
        ..Default::default()
    };
    let fmt = cli.format;
    let wrap = |text: String, code: u8| -> (Output, u8) {
        (
            Output {
                text,
                out: cli.out.clone(),
            },
            code,
        )
    };

    match &cli.command {
        Command::Analyze { blocksum } => {
            let (sum, warnings) = parse_blocksum(blocksum)?;
            let c = census(&sum);
            let inv = tau_upsilon(&sum)?;
            let (lhs, rhs, equal) = rank_identity_check(&sum)?;
            let payload = match fmt {
                OutputFormat::Json => json!({
                    "input": blocksum,
                    "canonical": sum.to_string(),
                    "warnings": warnings,
                    "n": c.n,
                    "census": {
                        "j1": c.j1,
                        "j_odd": c.j_odd,
                        "gamma_odd": c.gamma_odd,
                        "gamma_even": c.gamma_even,
                        "h_minus": c.h_minus,
                        "h_plus": c.h_plus,
                    },
                    "tau": inv.tau,
                    "upsilon": inv.upsilon,
                    "min_bound": inv.min(),
                    "rank_identity": {"lhs": lhs, "rhs": rhs, "equal": equal},
                })
                .to_string(),
                OutputFormat::Text => {
                    let mut s = String::new();
                    for w in &warnings {
                        s.push_str(&format!("warning: {w}\n"));
                    }
                    s.push_str(&format!("canonical: {sum}\n"));
                    s.push_str(&format!(
                        "n = {}, census: j1 = {}, j_odd = {}, gamma_odd = {}, gamma_even = {}, h- = {}, h+ = {}\n",
                        c.n, c.j1, c.j_odd, c.gamma_odd, c.gamma_even, c.h_minus, c.h_plus
                    ));
                    s.push_str(&format!(
                        "tau = {}, upsilon = {}, min = {}\n",
                        inv.tau,
                        inv.upsilon,
                        inv.min()
                    ));
                    s.push_str(&format!(
                        "rank identity: n - rank(A + A^T) = {lhs}, j_odd + gamma_even + 2*h- = {rhs} ({})",
                        if equal { "equal" } else { "MISMATCH" }
                    ));
                    s
                }
            };
            Ok(wrap(payload, EXIT_OK))
        }
        Command::Decide { blocksum, target } => {
            let (sum, warnings) = parse_blocksum(blocksum)?;
            let m = resolve_rank(target, &sum)?;
            let mut decision = decide_with_seed(&sum, m, seed)?;
            for w in warnings.into_iter().rev() {
                decision.notes.insert(0, w);
            }
            let code = status_code(decision.status);
            let payload = match fmt {
                OutputFormat::Json => decision_to_json(&decision).to_string(),
                OutputFormat::Text => {
                    let mut s = format!(
                        "status: {} (m = {}, tau = {}, upsilon = {}, min = {})",
                        status_str(decision.status),
                        decision.m,
                        decision.tau,
                        decision.upsilon,
                        decision.min_bound
                    );
                    for note in &decision.notes {
                        s.push_str(&format!("\nnote: {note}"));
                    }
                    s
                }
            };
            Ok(wrap(payload, code))
        }
        Command::Solve { blocksum, target } => {
            let (sum, warnings) = parse_blocksum(blocksum)?;
            let solve_target = resolve_target(target)?;
            let mut ctx = SolverContext::with_config(cfg);
            let mut decision = solve(&sum, &solve_target, &mut ctx)?;
            for w in warnings.into_iter().rev() {
                decision.notes.insert(0, w);
            }
            let budget_gap = decision.status == DecisionStatus::Consistent
                && decision.x.is_none()
                && decision.m > 0;
            let code = if budget_gap {
                EXIT_INTERNAL
            } else {
                status_code(decision.status)
            };
            let payload = match fmt {
                OutputFormat::Json => decision_to_json(&decision).to_string(),
                OutputFormat::Text => {
                    let mut s = format!(
                        "status: {} (m = {}, tau = {}, upsilon = {}, min = {})",
                        status_str(decision.status),
                        decision.m,
                        decision.tau,
                        decision.upsilon,
                        decision.min_bound
                    );
                    for note in &decision.notes {
                        s.push_str(&format!("\nnote: {note}"));
                    }
                    if let Some(r) = decision.residual {
                        s.push_str(&format!("\nresidual: {r:e}"));
                    }
                    if let Some(x) = &decision.x {
                        s.push_str(&format!("\nX = {}", matrix_to_json(x)));
                    }
                    s
                }
            };
            Ok(wrap(payload, code))
        }
        Command::Verify { a, x, b, exact } => {
            let a_mat = read_matrix_or_blocksum(a)?;
            let x_mat = read_matrix_file(x)?;
            let b_mat = read_matrix_file(b)?;
            let mode = if *exact {
                VerifyMode::Exact
            } else {
                VerifyMode::Tolerance(tolerance)
            };
            let report = verify(&a_mat, &x_mat, &b_mat, mode)?;
            let code = if report.pass { EXIT_OK } else { EXIT_INCONSISTENT };
            let payload = match fmt {
                OutputFormat::Json => verify_report_to_json(&report).to_string(),
                OutputFormat::Text => format!(
                    "pass: {} (residual {:e}{})",
                    report.pass,
                    report.residual,
                    if report.exact { ", exact" } else { "" }
                ),
            };
            Ok(wrap(payload, code))
        }
        Command::Congruence { a, b } => {
            let a_mat = read_matrix_or_blocksum(a)?;
            let b_mat = read_matrix_or_blocksum(b)?;
            let mut engine = CongruenceEngine::new(cfg);
            match engine.find_congruence(&a_mat, &b_mat) {
                Ok(w) => {
                    let payload = match fmt {
                        OutputFormat::Json => {
                            let mut v = witness_to_json(&w);
                            v.as_object_mut()
                                .expect("object")
                                .insert("congruent".into(), json!(true));
                            v.to_string()
                        }
                        OutputFormat::Text => format!(
                            "congruent: P found ({}, residual {:e})",
                            match w.mode {
                                WitnessMode::Exact => "exact",
                                WitnessMode::Numeric => "numeric",
                            },
                            w.residual
                        ),
                    };
                    Ok(wrap(payload, EXIT_OK))
                }
                Err(Error::NotCongruent) => {
                    let payload = match fmt {
                        OutputFormat::Json => {
                            json!({"congruent": false, "seed": seed}).to_string()
                        }
                        OutputFormat::Text => "not congruent (cosquares are not similar)".into(),
                    };
                    Ok(wrap(payload, EXIT_INCONSISTENT))
                }
                Err(e) => Err(e),
            }
        }
        Command::Reduce { blocksum } => {
            let (sum, warnings) = parse_blocksum(blocksum)?;
            let mut ctx = ReductionContext::with_config(cfg);
            let (chain, end, tag) = reduce(&sum, &mut ctx)?;
            let residual = chain.verify()?;
            let payload = match fmt {
                OutputFormat::Json => json!({
                    "input": blocksum,
                    "warnings": warnings,
                    "case": format!("{tag:?}"),
                    "end": end.to_string(),
                    "steps": chain_to_json(&chain),
                    "composed_X": matrix_to_json(chain.composed_x()),
                    "residual": residual,
                    "seed": seed,
                })
                .to_string(),
                OutputFormat::Text => {
                    let mut s = String::new();
                    for w in &warnings {
                        s.push_str(&format!("warning: {w}\n"));
                    }
                    for (i, step) in chain.steps().iter().enumerate() {
                        s.push_str(&format!(
                            "step {}: {} ~> {} [{:?}]\n",
                            i + 1,
                            step.source,
                            step.target,
                            step.justification
                        ));
                    }
                    s.push_str(&format!("case: {tag:?}\nend: {end}"));
                    s
                }
            };
            Ok(wrap(payload, EXIT_OK))
        }
    }
}

fn status_code(status: DecisionStatus) -> u8 {
    match status {
        DecisionStatus::Consistent => EXIT_OK,
        DecisionStatus::Inconsistent => EXIT_INCONSISTENT,
        DecisionStatus::Undecided => EXIT_UNDECIDED,
    }
}

fn resolve_rank(target: &TargetArgs, _sum: &xtax_core::BlockSum) -> Result<usize, Error> {
    match (&target.m, &target.b) {
        (Some(m), None) => Ok(*m),
        (None, Some(path)) => {
            let b = read_matrix_file(path)?;
            if !b.is_symmetric() {
                return Err(Error::NotSymmetric);
            }
            Ok(b.rank()?)
        }
        _ => Err(Error::InvalidRequest(
            "exactly one of --m or --B is required".into(),
        )),
    }
}

fn resolve_target(target: &TargetArgs) -> Result<SolveTarget, Error> {
    match (&target.m, &target.b) {
        (Some(m), None) => Ok(SolveTarget::IdentityRank(*m)),
        (None, Some(path)) => Ok(SolveTarget::Symmetric(read_matrix_file(path)?)),
        _ => Err(Error::InvalidRequest(
            "exactly one of --m or --B is required".into(),
        )),
    }
}

fn read_source(path: &str) -> Result<String, Error> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Error::Io(format!("stdin: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
    }
}

/// Reads a matrix from a JSON or CSV file ("-" for stdin). Extension
/// decides the format; otherwise the first non-blank byte does.
fn read_matrix_file(path: &str) -> Result<Matrix, Error> {
    let content = read_source(path)?;
    let is_csv = Path::new(path)
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or_else(|| !content.trim_start().starts_with('['));
    if is_csv {
        read_matrix_csv(&content)
    } else {
        read_matrix_json(&content)
    }
}

/// A-side inputs may be a matrix file or a block-sum expression.
fn read_matrix_or_blocksum(arg: &str) -> Result<Matrix, Error> {
    if arg == "-" || Path::new(arg).exists() {
        return read_matrix_file(arg);
    }
    match parse_blocksum(arg) {
        Ok((sum, _)) => Ok(sum.materialize()),
        Err(_) => Err(Error::Io(format!(
            "'{arg}' is neither an existing matrix file nor a valid block-sum expression"
        ))),
    }
}
