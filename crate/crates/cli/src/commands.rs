//! The subcommands. Each returns its result; [`crate::run`] writes files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use polykin_core::linearized_operator::{
    assemble, kernel_k1, kernel_k2, kernel_k3, kernel_kb, nu_with, AssemblyReport, BlockOperator, DiagonalOperator,
    MatrixKind,
};
use polykin_core::mc_oracle::{mc_kernel_k1, mc_kernel_k2, mc_kernel_k3, mc_nu, McConfig};
use polykin_core::mixture_model::weighted_null_basis;
use polykin_core::spectral_analysis::{spectral_report, SpectralInputs, SpectralReport};
use polykin_core::Vec3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Resolved;
use crate::io::{load_dump, save_dump, Cell, Csv};
use crate::report::{Status, VerificationReport};
use crate::verify::{self, KernelPoint};

pub fn cmd_validate(cfg: &Resolved) -> VerificationReport {
    verify::validate(cfg)
}

pub fn cmd_verify(cfg: &Resolved, quick: bool) -> Result<VerificationReport> {
    verify::verify(cfg, quick)
}

/// Which (species, level) rows a ν sweep covers.
fn level_selection(cfg: &Resolved, alpha: Option<usize>, level: Option<usize>) -> Result<Vec<(usize, usize)>> {
    let mix = &cfg.mixture;
    let s = mix.num_species();
    if let Some(a) = alpha {
        ensure!(a < s, "species index {a} out of range (the mixture has {s} species)");
    }
    if let Some(i) = level {
        let a = alpha.context("--level needs --species")?;
        let r = mix.level_count(a);
        ensure!(i < r, "level index {i} out of range (species {a} has {r} levels)");
    }
    Ok(mix
        .levels_flat()
        .filter(|&(a, i)| alpha.is_none_or(|x| x == a) && level.is_none_or(|x| x == i))
        .collect())
}

/// ν over a speed sweep: columns speed, species, level, nu,
/// nu_over_1_plus_speed.
pub fn cmd_nu(cfg: &Resolved, alpha: Option<usize>, level: Option<usize>, speeds: Option<&[f64]>) -> Result<Csv> {
    let rows = level_selection(cfg, alpha, level)?;
    let sweep = cfg.config.nu_sweep.speeds();
    let speeds = speeds.unwrap_or(&sweep);
    ensure!(
        speeds.iter().all(|s| s.is_finite() && *s >= 0.0),
        "speeds must be finite and nonnegative"
    );
    let mut csv = Csv::new(&["speed", "species", "level", "nu", "nu_over_1_plus_speed"]);
    for &(a, i) in &rows {
        for &v in speeds {
            let nu = nu_with(&cfg.mixture, &cfg.config.cross_section, a, i, v, &cfg.config.quadrature.nu);
            csv.row(&[Cell::Float(v), Cell::Int(a), Cell::Int(i), Cell::Float(nu), Cell::Float(nu / (1.0 + v))]);
        }
    }
    Ok(csv)
}

/// Where the kernels are evaluated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelQuery {
    pub alpha: usize,
    pub beta: usize,
    pub i: usize,
    pub j: usize,
    pub xi: [f64; 3],
    pub xs: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelValues {
    pub query: KernelQuery,
    pub route: polykin_core::linearized_operator::KernelRoute,
    pub k1: f64,
    pub k2: f64,
    /// Same-species kernel with `j` read as a level of α; absent when α
    /// has fewer than `j + 1` levels.
    pub k3: Option<f64>,
    pub kb: f64,
    /// k^{(β)} with the roles of the partners exchanged.
    pub kb_swapped: f64,
    pub config: serde_json::Value,
}

pub fn cmd_kernel(cfg: &Resolved, q: KernelQuery) -> Result<KernelValues> {
    let mix = &cfg.mixture;
    let s = mix.num_species();
    ensure!(q.alpha < s && q.beta < s, "species index out of range (the mixture has {s} species)");
    ensure!(q.i < mix.level_count(q.alpha), "level i out of range for species {}", q.alpha);
    ensure!(q.j < mix.level_count(q.beta), "level j out of range for species {}", q.beta);
    let (xi, xs) = (Vec3::from(q.xi), Vec3::from(q.xs));
    ensure!(xi != xs, "kernels are evaluated at distinct velocities only");
    let ctx = cfg.kernel_context();
    let (a, b, i, j) = (q.alpha, q.beta, q.i, q.j);
    Ok(KernelValues {
        route: ctx.route(),
        k1: kernel_k1(&ctx, a, b, i, j, &xi, &xs, None),
        k2: kernel_k2(&ctx, a, b, i, j, &xi, &xs, None),
        k3: (j < mix.level_count(a)).then(|| kernel_k3(&ctx, a, b, i, j, &xi, &xs, None)),
        kb: kernel_kb(&ctx, a, b, i, j, &xi, &xs, None),
        kb_swapped: kernel_kb(&ctx, b, a, j, i, &xs, &xi, None),
        query: q,
        config: cfg.config.effective_json(),
    })
}

/// JSON companion of the matrix dumps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssemblyOutput {
    pub report: AssemblyReport,
    pub timings: Timings,
    pub memory: Memory,
    pub files: Vec<PathBuf>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub assembly_seconds: f64,
    pub write_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Memory {
    pub entries_per_matrix: usize,
    pub cap: usize,
    pub bytes: usize,
}

/// Assembles Λ, K and L at the configured grid and writes the three dumps
/// into `dir`.
pub fn cmd_assemble(cfg: &Resolved, dir: &Path) -> Result<AssemblyOutput> {
    let ctx = cfg.kernel_context();
    let grid = cfg.grid(cfg.config.grid.points);
    let opts = cfg.assembly_options();
    let t0 = Instant::now();
    let asm = assemble(&ctx, &grid, &opts)?;
    let assembly_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let files = vec![
        save_dump(dir, MatrixKind::Lambda, &asm.lambda.to_dense())?,
        save_dump(dir, MatrixKind::K, &asm.k)?,
        save_dump(dir, MatrixKind::L, &asm.l)?,
    ];
    Ok(AssemblyOutput {
        memory: Memory {
            entries_per_matrix: asm.report.entries_per_matrix,
            cap: opts.memory_cap,
            bytes: asm.report.bytes,
        },
        report: asm.report,
        timings: Timings {
            assembly_seconds,
            write_seconds: t1.elapsed().as_secs_f64(),
        },
        files,
        config: cfg.config.effective_json(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumOutput {
    pub points: usize,
    pub source: String,
    pub report: SpectralReport,
    pub config: serde_json::Value,
}

/// Where the spectral stage takes its operators from.
#[derive(Debug, Clone)]
pub enum SpectrumSource {
    Assemble,
    Dumps(PathBuf),
    /// K = 0, L = Λ.
    LambdaOnly,
}

fn diagonal_of(m: &BlockOperator) -> Result<DiagonalOperator> {
    let n = m.dim();
    for r in 0..n {
        ensure!(
            m.row(r).iter().enumerate().all(|(c, &v)| c == r || v == 0.0),
            "the Λ dump is not diagonal (row {r})"
        );
    }
    Ok(DiagonalOperator::new((0..n).map(|d| m.get(d, d)).collect()))
}

pub fn cmd_spectrum(cfg: &Resolved, source: SpectrumSource) -> Result<SpectrumOutput> {
    let n = cfg.config.grid.points;
    let grid = cfg.grid(n);
    let levels = cfg.mixture.num_levels();
    let dim = levels * grid.num_nodes();
    let ctx = cfg.kernel_context();
    let (lambda, k, l, asymmetry, kernels, label) = match &source {
        SpectrumSource::Assemble => {
            let asm = assemble(&ctx, &grid, &cfg.assembly_options())?;
            (asm.lambda, asm.k, asm.l, Some(asm.report.asymmetry), Some(&ctx), "assembled".to_string())
        }
        SpectrumSource::Dumps(dir) => {
            let lam = load_dump(dir, MatrixKind::Lambda)?;
            let k = load_dump(dir, MatrixKind::K)?;
            let l = load_dump(dir, MatrixKind::L)?;
            for (name, m) in [("lambda", &lam), ("k", &k), ("l", &l)] {
                if m.dim() != dim {
                    bail!(
                        "dimension mismatch: {name}.bin has dimension {}, the configuration implies {dim} ({levels} levels x {n}^3 nodes)",
                        m.dim()
                    );
                }
            }
            (diagonal_of(&lam)?, k, l, None, Some(&ctx), format!("dumps:{}", dir.display()))
        }
        SpectrumSource::LambdaOnly => {
            let lambda = polykin_core::linearized_operator::assemble_lambda(&ctx, &grid, &cfg.config.quadrature.nu);
            let l = lambda.to_dense();
            (lambda, BlockOperator::zeros(dim), l, Some(0.0), None, "lambda_only".to_string())
        }
    };
    let invariants = weighted_null_basis(&cfg.mixture, &grid);
    let report = spectral_report(&SpectralInputs {
        lambda: &lambda,
        k: &k,
        l: &l,
        grid: &grid,
        levels,
        invariants: &invariants,
        gap_factor: cfg.config.spectral.null_gap_factor,
        asymmetry,
        kernels,
    })?;
    Ok(SpectrumOutput {
        points: n,
        source: label,
        report,
        config: cfg.config.effective_json(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum OracleTarget {
    Nu,
    KernelK1,
    KernelK2,
    KernelK3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OraclePoint {
    pub at: serde_json::Value,
    pub estimate: f64,
    pub stderr: f64,
    pub quadrature: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub target: OracleTarget,
    pub samples: u64,
    pub seed: u64,
    pub z_threshold: f64,
    pub max_abs_z: f64,
    pub status: Status,
    pub points: Vec<OraclePoint>,
    pub config: serde_json::Value,
}

/// Compares one Monte Carlo oracle with its quadrature at random points.
pub fn cmd_oracle(cfg: &Resolved, target: OracleTarget) -> Result<OracleReport> {
    let mix = &cfg.mixture;
    let mc = cfg.config.mc.config();
    let ctx = cfg.kernel_context();
    let mut r = polykin_core::mc_oracle::sample_rng(mc.seed ^ 0x0c0f_fee0, u64::MAX);
    let count = match target {
        OracleTarget::Nu => cfg.config.mc.nu_points,
        _ => cfg.config.mc.points,
    };
    let mut points = Vec::with_capacity(count);
    for p in 0..count {
        let seeded = McConfig {
            seed: mc.seed.wrapping_add(p as u64),
            ..mc
        };
        let (at, q, est) = match target {
            OracleTarget::Nu => {
                let alpha = r.random_range(0..mix.num_species());
                let i = r.random_range(0..mix.level_count(alpha));
                let speed: f64 = r.random_range(0.0..4.0 / mix.mass(alpha).sqrt());
                let q = nu_with(mix, &ctx.model, alpha, i, speed, &cfg.config.quadrature.nu);
                let est = mc_nu(mix, &ctx.model, alpha, i, speed, &seeded);
                (serde_json::json!({"alpha": alpha, "i": i, "speed": speed}), q, est)
            }
            _ => {
                let kp = KernelPoint::random(mix, &mut r);
                let (xi, xs) = kp.velocities();
                let (a, b, i) = (kp.alpha, kp.beta, kp.i);
                let (q, est) = match target {
                    OracleTarget::KernelK1 => (
                        kernel_k1(&ctx, a, b, i, kp.j, &xi, &xs, None),
                        mc_kernel_k1(&ctx, a, b, i, kp.j, &xi, &xs, &seeded),
                    ),
                    OracleTarget::KernelK2 => (
                        kernel_k2(&ctx, a, b, i, kp.j, &xi, &xs, None),
                        mc_kernel_k2(&ctx, a, b, i, kp.j, &xi, &xs, &seeded),
                    ),
                    _ => (
                        kernel_k3(&ctx, a, b, i, kp.j_alpha, &xi, &xs, None),
                        mc_kernel_k3(&ctx, a, b, i, kp.j_alpha, &xi, &xs, &seeded),
                    ),
                };
                (serde_json::to_value(kp)?, q, est)
            }
        };
        points.push(OraclePoint {
            at,
            estimate: est.mean,
            stderr: est.stderr,
            quadrature: q,
            z: est.z_score(q),
        });
    }
    let max_abs_z = points.iter().map(|p| p.z.abs()).fold(0.0, f64::max);
    Ok(OracleReport {
        target,
        samples: mc.samples,
        seed: mc.seed,
        z_threshold: 3.0,
        max_abs_z,
        status: Status::from_bool(max_abs_z <= 3.0),
        points,
        config: cfg.config.effective_json(),
    })
}
