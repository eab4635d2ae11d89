//! Command-line driver: configuration ingestion, command dispatch and
//! report emission for `polykin`.

pub mod commands;
pub mod config;
pub mod io;
pub mod report;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::{KernelQuery, OracleTarget, SpectrumSource};
use crate::config::{Resolved, DEFAULTS_HELP};
use crate::report::{Status, VerificationReport};

/// Exit code of a run whose checks failed.
pub const EXIT_FAIL: i32 = 1;
/// Exit code of a run that could not complete (bad config, I/O, refusal).
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "polykin",
    version,
    about = "Linearized collision operator for polyatomic gas mixtures with discrete internal energy levels",
    after_help = DEFAULTS_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (JSON, "schema": 1).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to output.directory of the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it. Default: all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides mc.seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cheap identity suite: cross-section relations, kinematic conservation
    /// and the mass-ratio inequality. Writes validate.json.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Collision frequency over a speed sweep. Writes nu.csv.
    Nu {
        #[command(flatten)]
        common: Common,
        /// Species index; all species when omitted.
        #[arg(long)]
        species: Option<usize>,
        /// Level index within --species; all levels when omitted.
        #[arg(long)]
        level: Option<usize>,
        /// Comma-separated speeds; defaults to the nu_sweep section.
        #[arg(long, value_delimiter = ',')]
        speeds: Option<Vec<f64>>,
    },
    /// Kernel values at one pair of velocities. Writes kernel.json.
    Kernel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        alpha: usize,
        #[arg(long, default_value_t = 0)]
        beta: usize,
        #[arg(long, default_value_t = 0)]
        i: usize,
        #[arg(long, default_value_t = 0)]
        j: usize,
        /// ξ as x,y,z.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.4, -0.3, 0.2])]
        xi: Vec<f64>,
        /// ξ* as x,y,z.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [-0.5, 0.1, 0.6])]
        xs: Vec<f64>,
    },
    /// Dense Λ, K and L at grid.points. Writes lambda.bin, k.bin, l.bin and
    /// assembly.json.
    Assemble {
        #[command(flatten)]
        common: Common,
    },
    /// Spectral report of L. Writes spectrum.json.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Read lambda.bin, k.bin and l.bin from this directory instead of
        /// assembling.
        #[arg(long, conflicts_with = "lambda_only")]
        from_dumps: Option<PathBuf>,
        /// Analyse L = Λ with K dropped.
        #[arg(long)]
        lambda_only: bool,
    },
    /// Full acceptance suite at the scale of the configuration. Writes
    /// verify.json.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Identity checks only: no assembly, no kernel Monte Carlo, at most
        /// 5 conservation and 20 entropy distributions.
        #[arg(long)]
        quick: bool,
    },
    /// One Monte Carlo oracle against its quadrature. Writes
    /// oracle-<target>.json.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        target: OracleTarget,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Self::Validate { common }
            | Self::Nu { common, .. }
            | Self::Kernel { common, .. }
            | Self::Assemble { common }
            | Self::Spectrum { common, .. }
            | Self::Verify { common, .. }
            | Self::Oracle { common, .. } => common,
        }
    }
}

fn load(common: &Common) -> Result<(Resolved, PathBuf)> {
    let mut cfg = Resolved::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg = cfg.with_seed(seed);
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.config.output.directory.clone());
    Ok((cfg, out))
}

fn print_report(rep: &VerificationReport, path: &Path) {
    for c in &rep.checks {
        let mark = if c.status.is_pass() { "pass" } else { "FAIL" };
        println!("[{mark}] c{:02} {} residual={:e} threshold={:e}", c.criterion, c.name, c.residual, c.threshold);
    }
    println!("status: {:?}; report written to {}", rep.status, path.display());
}

fn exit_code(status: Status) -> i32 {
    if status.is_pass() {
        0
    } else {
        EXIT_FAIL
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let common = cli.command.common().clone();
    let (cfg, out) = load(&common)?;
    let body = move || -> Result<i32> {
        match cli.command {
            Command::Validate { .. } => {
                let rep = commands::cmd_validate(&cfg);
                let path = out.join("validate.json");
                io::write_json(&path, &rep)?;
                print_report(&rep, &path);
                Ok(exit_code(rep.status))
            }
            Command::Verify { quick, .. } => {
                let rep = commands::cmd_verify(&cfg, quick)?;
                let path = out.join("verify.json");
                io::write_json(&path, &rep)?;
                print_report(&rep, &path);
                for s in rep.criteria() {
                    println!("criterion {:>2} {:<45} {:?}", s.criterion, s.title, s.status);
                }
                Ok(exit_code(rep.status))
            }
            Command::Nu { species, level, speeds, .. } => {
                let csv = commands::cmd_nu(&cfg, species, level, speeds.as_deref())?;
                let path = out.join("nu.csv");
                io::write_atomic(&path, csv.as_str().as_bytes())?;
                println!("wrote {}", path.display());
                Ok(0)
            }
            Command::Kernel { alpha, beta, i, j, xi, xs, .. } => {
                let q = KernelQuery {
                    alpha,
                    beta,
                    i,
                    j,
                    xi: [xi[0], xi[1], xi[2]],
                    xs: [xs[0], xs[1], xs[2]],
                };
                let vals = commands::cmd_kernel(&cfg, q)?;
                let path = out.join("kernel.json");
                io::write_json(&path, &vals)?;
                println!("k1={:e} k2={:e} k3={:?} kb={:e}; wrote {}", vals.k1, vals.k2, vals.k3, vals.kb, path.display());
                Ok(0)
            }
            Command::Assemble { .. } => {
                let res = commands::cmd_assemble(&cfg, &out)?;
                let path = out.join("assembly.json");
                io::write_json(&path, &res)?;
                println!(
                    "dim {} asymmetry {:e} ({:.1} s); wrote {}",
                    res.report.dim,
                    res.report.asymmetry,
                    res.timings.assembly_seconds,
                    path.display()
                );
                Ok(if res.report.asymmetry_ok { 0 } else { EXIT_FAIL })
            }
            Command::Spectrum { from_dumps, lambda_only, .. } => {
                let source = match (from_dumps, lambda_only) {
                    (Some(dir), _) => SpectrumSource::Dumps(dir),
                    (None, true) => SpectrumSource::LambdaOnly,
                    (None, false) => SpectrumSource::Assemble,
                };
                let res = commands::cmd_spectrum(&cfg, source)?;
                let path = out.join("spectrum.json");
                io::write_json(&path, &res)?;
                println!(
                    "null dim {} (expected {}), lambda {:.6}, nu- {:.6}, nu+ {:.6}; wrote {}",
                    res.report.null_space.dim_estimate,
                    res.report.null_space.expected_dim,
                    res.report.lambda_coercivity,
                    res.report.nu_minus,
                    res.report.nu_plus,
                    path.display()
                );
                Ok(0)
            }
            Command::Oracle { target, .. } => {
                let rep = commands::cmd_oracle(&cfg, target)?;
                let name = serde_json::to_value(target)?;
                let path = out.join(format!("oracle-{}.json", name.as_str().unwrap_or("target")));
                io::write_json(&path, &rep)?;
                println!("max |z| = {:.3} ({:?}); wrote {}", rep.max_abs_z, rep.status, path.display());
                Ok(exit_code(rep.status))
            }
        }
    };
    match common.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .context("building the worker pool")?
            .install(body),
        None => body(),
    }
}
