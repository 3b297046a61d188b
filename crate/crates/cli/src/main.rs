//! `sl2geo`: completeness reports, trajectories, portraits, scans and self-checks for
//! left-invariant metrics on SL(2).
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error.

mod input;
mod portrait;
mod report;
mod scan;
mod trajectory;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sl2geo::integrator::{ComplexPath, IntegratorOptions};
use sl2geo::normal_form::Case;

use crate::input::{load_phi, PhiInput};

#[derive(Parser)]
#[command(name = "sl2geo", version, about = "Geodesic completeness of left-invariant metrics on SL(2)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Map file (see README for the format).
    #[arg(long)]
    input: PathBuf,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Normal form, metric verdict, idempotents and singular points at infinity (JSON).
    Classify {
        #[command(flatten)]
        io: InputArgs,
    },
    /// Integrate the geodesic flow and write a CSV trajectory.
    Integrate {
        #[command(flatten)]
        io: InputArgs,
        /// Initial momentum in the standard basis; complex components as re:im.
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        /// Real time span t0,t1 (real mode).
        #[arg(long, allow_hyphen_values = true)]
        tspan: Option<String>,
        /// Complex-time ray theta,rmax (complex mode).
        #[arg(long, allow_hyphen_values = true)]
        ray: Option<String>,
        /// Closed polyline of complex times, one re,im per line (complex mode).
        #[arg(long = "loop")]
        loop_file: Option<PathBuf>,
        /// Relative and absolute step tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Maximal existence interval of the geodesic through --z0 (JSON, real mode).
    Verdict {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
    },
    /// Idempotent rays with growth constants (JSON).
    Idempotents {
        #[command(flatten)]
        io: InputArgs,
    },
    /// Singular points and sampled leaves of the foliation at infinity (CSV, real mode).
    Portrait {
        #[command(flatten)]
        io: InputArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 24)]
        leaves: usize,
    },
    /// Grid scan of the completeness region (CSV).
    Scan {
        /// 1 scans (nu1, nu2, nu3); 3 scans (eta, nu, zeta).
        #[arg(long, default_value_t = 1)]
        case: u8,
        #[arg(long, default_value = "0.1,3", allow_hyphen_values = true)]
        range: String,
        #[arg(long, default_value_t = 21)]
        count: usize,
        /// Cross-check each grid point by integration.
        #[arg(long)]
        numeric: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the self-check suites; exit 1 if any fails.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturb the Killing Gram matrix used by the invariance suite.
        #[arg(long, default_value_t = 0.0)]
        perturb_gram: f64,
        /// Drift bound for the conservation suite.
        #[arg(long, default_value_t = 1e-8)]
        drift_bound: f64,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialise") + "\n"
}

fn pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let v = input::reals(s, 2, what)?;
    Ok((v[0], v[1]))
}

fn real_only(phi: PhiInput, what: &str) -> Result<nalgebra::Matrix3<f64>> {
    match phi {
        PhiInput::Real(m) => Ok(m),
        PhiInput::Complex(_) => bail!("{what} is available in real mode only"),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Classify { io } => {
            let r = match load_phi(&io.input)? {
                PhiInput::Real(m) => report::classify_real(&m)?,
                PhiInput::Complex(m) => report::classify_complex(&m)?,
            };
            emit(io.out.as_deref(), &json(&r))?;
        }
        Command::Integrate { io, z0, tspan, ray, loop_file, tol } => {
            let mut opts = IntegratorOptions::default();
            if let Some(t) = tol {
                opts.rel_tol = t;
                opts.abs_tol = t;
            }
            opts.validate().map_err(|e| input::InputError(e.to_string()))?;
            let csv = match load_phi(&io.input)? {
                PhiInput::Real(m) => {
                    if ray.is_some() || loop_file.is_some() {
                        bail!("--ray and --loop need a complex-mode map");
                    }
                    let span = pair(tspan.as_deref().unwrap_or("0,10"), "--tspan")?;
                    trajectory::real(&m, &input::real_vector(&z0)?, span, &opts)?
                }
                PhiInput::Complex(m) => {
                    let path = match (ray, loop_file) {
                        (Some(r), None) => {
                            let (theta, r_max) = pair(&r, "--ray")?;
                            ComplexPath::Ray { theta, r_max }
                        }
                        (None, Some(p)) => ComplexPath::Loop(input::load_loop(&p)?),
                        _ => bail!("complex mode needs exactly one of --ray or --loop"),
                    };
                    trajectory::complex(&m, &input::complex_vector(&z0)?, &path, &opts)?
                }
            };
            emit(io.out.as_deref(), &csv)?;
        }
        Command::Verdict { io, z0 } => {
            let m = real_only(load_phi(&io.input)?, "verdict")?;
            emit(io.out.as_deref(), &json(&report::verdict(&m, &input::real_vector(&z0)?)?))?;
        }
        Command::Idempotents { io } => {
            let r = match load_phi(&io.input)? {
                PhiInput::Real(m) => report::idempotents_real(&m)?,
                PhiInput::Complex(m) => report::idempotents_complex(&m)?,
            };
            emit(io.out.as_deref(), &json(&r))?;
        }
        Command::Portrait { io, seed, leaves } => {
            let m = real_only(load_phi(&io.input)?, "portrait")?;
            emit(io.out.as_deref(), &portrait::portrait(&m, seed, leaves)?)?;
        }
        Command::Scan { case, range, count, numeric, seed, out } => {
            let case = Case::from_number(case).context("unknown case")?;
            let (lo, hi) = pair(&range, "--range")?;
            let (csv, disagreements) = scan::scan(&scan::Grid { case, lo, hi, count }, numeric, seed)?;
            emit(out.as_deref(), &csv)?;
            if numeric {
                eprintln!("{disagreements} disagreement rows");
            }
        }
        Command::Verify { seed, perturb_gram, drift_bound } => {
            let faults = verify::Faults { gram_perturbation: perturb_gram, drift_bound };
            let results = verify::run(seed, &faults);
            for s in &results {
                println!("{}: {}/{} {}", s.name, s.passed, s.total, if s.ok() { "ok" } else { "FAILED" });
            }
            let ok = results.iter().all(verify::SuiteResult::ok);
            println!("verify: {}", if ok { "pass" } else { "fail" });
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
