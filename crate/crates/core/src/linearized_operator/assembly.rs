//! Dense assembly of Λ, K and L = Λ − K on a velocity grid.
//!
//! Rows and columns are indexed by `ι(α,i)·N³ + node`. Entry
//! `K[(α,i,n),(β,j,m)]` is `h³` times the combined kernel at `(ξ_n, ξ_m)`.
//! The coincident node `m = n` carries the 1/|g| singularity of the
//! plane-integrated kernels; [`DiagonalRule`] selects how it is treated.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::kernels::{kernel_row, kernel_row_regular_at_coincidence, kernel_row_singular, KernelContext, KernelRoute};
use super::nu::{nu_with, NuQuadrature};
use crate::grid::VelocityGrid;
use crate::quadrature::composite_rule;
use crate::Vec3;

/// Treatment of the coincident node ξ_n = ξ_m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalRule {
    /// The coincident node contributes nothing.
    Skip,
    /// The coincident node carries the part of the singular integral that
    /// the lattice sum misses, calibrated so that the discrete row integrates
    /// `S(ξ_n, ξ*) e^{−m|ξ* − ξ_n|²/4}` exactly, plus `h³` times the regular
    /// part of the kernel at coincidence.
    #[default]
    Corrected,
}

/// Rule for the exact integrals of the diagonal calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRule {
    /// Panels in the cosine of the angle to ξ_n.
    #[serde(default = "default_mu_panels")]
    pub mu_panels: usize,
    /// Panel width in |ξ* − ξ_n|.
    #[serde(default = "default_rho_panel")]
    pub rho_panel: f64,
    /// Gauss–Legendre order per panel in both variables.
    #[serde(default = "default_order")]
    pub order: usize,
    /// The calibration weight is cut where `m|ξ* − ξ_n|²/4` reaches this.
    #[serde(default = "default_exponent")]
    pub exponent: f64,
}

fn default_mu_panels() -> usize {
    32
}
fn default_rho_panel() -> f64 {
    0.25
}
fn default_order() -> usize {
    8
}
fn default_exponent() -> f64 {
    40.0
}

impl Default for CalibrationRule {
    fn default() -> Self {
        Self {
            mu_panels: default_mu_panels(),
            rho_panel: default_rho_panel(),
            order: default_order(),
            exponent: default_exponent(),
        }
    }
}

/// Assembly settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyOptions {
    #[serde(default)]
    pub diagonal: DiagonalRule,
    #[serde(default)]
    pub calibration: CalibrationRule,
    /// Largest admissible number of entries of one dense matrix.
    #[serde(default = "default_memory_cap")]
    pub memory_cap: usize,
    /// Failure threshold for the pre-symmetrization asymmetry of K.
    #[serde(default = "default_asymmetry_tolerance")]
    pub asymmetry_tolerance: f64,
    #[serde(default)]
    pub nu: NuQuadrature,
}

fn default_memory_cap() -> usize {
    80_000_000
}
fn default_asymmetry_tolerance() -> f64 {
    1e-6
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            diagonal: DiagonalRule::default(),
            calibration: CalibrationRule::default(),
            memory_cap: default_memory_cap(),
            asymmetry_tolerance: default_asymmetry_tolerance(),
            nu: NuQuadrature::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("dense assembly needs {required} entries per matrix, above the cap of {cap}")]
    MemoryCap { required: usize, cap: usize },
}

/// The multiplication operator Λ: one ν value per (level, node).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    values: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.values.iter().zip(v).map(|(a, b)| a * b).collect()
    }

    /// Λ as a dense matrix.
    pub fn to_dense(&self) -> BlockOperator {
        let mut m = BlockOperator::zeros(self.dim());
        for (k, &v) in self.values.iter().enumerate() {
            m.set(k, k, v);
        }
        m
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    dim: usize,
    data: Vec<f64>,
}

impl BlockOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// # Panics
    /// If `data.len() != dim²`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data must hold dim² entries");
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim, "vector length must match the matrix");
        self.data
            .par_chunks(self.dim.max(1))
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// ‖A − Aᵀ‖_F / ‖A‖_F (0 for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut diff = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                let d = self.get(r, c) - self.get(c, r);
                diff += 2.0 * d * d;
            }
        }
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            0.0
        } else {
            diff.sqrt() / norm
        }
    }

    /// Replaces A by (A + Aᵀ)/2, exactly symmetric, and returns the
    /// asymmetry measured before.
    pub fn symmetrize(&mut self) -> f64 {
        let asym = self.asymmetry();
        let n = self.dim;
        for r in 0..n {
            for c in r + 1..n {
                let v = 0.5 * (self.get(r, c) + self.get(c, r));
                self.set(r, c, v);
                self.set(c, r, v);
            }
        }
        asym
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim;
        (0..n).all(|r| (r + 1..n).all(|c| self.get(r, c) == self.get(c, r)))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Diagnostics recorded during assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyReport {
    pub dim: usize,
    pub levels: usize,
    pub nodes: usize,
    pub spacing: f64,
    pub half_width: f64,
    pub diagonal_rule: DiagonalRule,
    pub route: KernelRoute,
    /// ‖K − Kᵀ‖_F / ‖K‖_F before symmetrization.
    pub asymmetry: f64,
    pub asymmetry_tolerance: f64,
    pub asymmetry_ok: bool,
    pub entries_per_matrix: usize,
    pub bytes: usize,
    pub k_frobenius: f64,
}

/// Λ, K and L with the assembly diagnostics.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub lambda: DiagonalOperator,
    pub k: BlockOperator,
    pub l: BlockOperator,
    pub report: AssemblyReport,
}

/// Index of the cube-symmetry orbit of a node: the sorted distances of its
/// axis indices from the nearest face.
fn orbit_key(grid: &VelocityGrid, node: usize) -> [usize; 3] {
    let n = grid.points_per_axis();
    let mut k = grid.axis_indices(node).map(|a| a.min(n - 1 - a));
    k.sort_unstable();
    k
}

fn orbits(grid: &VelocityGrid) -> (Vec<usize>, Vec<usize>) {
    let mut reps: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    for node in 0..grid.num_nodes() {
        reps.entry(orbit_key(grid, node)).or_insert(node);
    }
    let keys: Vec<[usize; 3]> = reps.keys().copied().collect();
    let rep_nodes = reps.values().copied().collect();
    let class = (0..grid.num_nodes())
        .map(|node| keys.binary_search(&orbit_key(grid, node)).expect("every node has an orbit"))
        .collect();
    (rep_nodes, class)
}

/// ν at every (level, node), computed once per node orbit.
pub fn assemble_lambda(ctx: &KernelContext, grid: &VelocityGrid, quad: &NuQuadrature) -> DiagonalOperator {
    let mix = &ctx.mix;
    let (reps, class) = orbits(grid);
    let nodes = grid.num_nodes();
    let table: Vec<Vec<f64>> = reps
        .par_iter()
        .map(|&node| {
            let speed = grid.node(node).norm();
            mix.levels_flat()
                .map(|(a, i)| nu_with(mix, &ctx.model, a, i, speed, quad))
                .collect()
        })
        .collect();
    let mut values = vec![0.0; mix.num_levels() * nodes];
    for lvl in 0..mix.num_levels() {
        for node in 0..nodes {
            values[lvl * nodes + node] = table[class[node]][lvl];
        }
    }
    DiagonalOperator::new(values)
}

/// Diagonal blocks for one node: an r×r matrix (row-major) that the
/// coincident entry of every level pair receives.
fn calibrated_diagonal(ctx: &KernelContext, grid: &VelocityGrid, rule: &CalibrationRule, node: usize) -> Vec<f64> {
    let mix = &ctx.mix;
    let r = mix.num_levels();
    let h = grid.spacing();
    let h3 = grid.weight();
    let xi = grid.node(node);
    let closed = ctx.route() == KernelRoute::ClosedForm;
    let row_fn = |a: usize, xs: &Vec3, out: &mut [f64]| {
        let (alpha, i) = mix.unflatten(a);
        out.iter_mut().for_each(|v| *v = 0.0);
        if closed {
            kernel_row_singular(ctx, alpha, i, &xi, xs, out);
        } else {
            kernel_row(ctx, alpha, i, &xi, xs, out);
        }
    };
    let col_mass: Vec<f64> = (0..r).map(|b| mix.mass(mix.unflatten(b).0)).collect();
    let rho_max = (rule.exponent * 4.0 / mix.min_mass()).sqrt();

    // exact integral in (ρ, μ) about the axis through ξ_n
    let axis = if xi.norm() > 0.0 { xi / xi.norm() } else { Vec3::z() };
    let perp = {
        let trial = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let p = trial - axis * axis.dot(&trial);
        p / p.norm()
    };
    let mu_rule = composite_rule(-1.0, 1.0, &[], 2.0 / rule.mu_panels as f64, rule.order);
    let rho_rule = composite_rule(0.0, rho_max, &[], rule.rho_panel, rule.order);
    let mut exact = vec![0.0; r * r];
    let mut buf = vec![0.0; r];
    for &(rho, wr) in &rho_rule {
        for &(mu, wm) in &mu_rule {
            let u = axis * mu + perp * (1.0 - mu * mu).max(0.0).sqrt();
            let xs = xi - u * rho;
            for a in 0..r {
                row_fn(a, &xs, &mut buf);
                for b in 0..r {
                    let psi = (-0.25 * col_mass[b] * rho * rho).exp();
                    exact[a * r + b] += 2.0 * PI * wr * wm * rho * rho * psi * buf[b];
                }
            }
        }
    }

    // the same integral by the lattice rule without the coincident node
    let reach = (rho_max / h).floor() as i64;
    let mut lattice = vec![0.0; r * r];
    for vx in -reach..=reach {
        for vy in -reach..=reach {
            for vz in -reach..=reach {
                if vx == 0 && vy == 0 && vz == 0 {
                    continue;
                }
                let v = Vec3::new(vx as f64, vy as f64, vz as f64) * h;
                let rho = v.norm();
                if rho > rho_max {
                    continue;
                }
                let xs = xi - v;
                for a in 0..r {
                    row_fn(a, &xs, &mut buf);
                    for b in 0..r {
                        let psi = (-0.25 * col_mass[b] * rho * rho).exp();
                        lattice[a * r + b] += h3 * psi * buf[b];
                    }
                }
            }
        }
    }

    let mut d: Vec<f64> = exact.iter().zip(&lattice).map(|(e, l)| e - l).collect();
    if closed {
        for a in 0..r {
            let (alpha, i) = mix.unflatten(a);
            buf.iter_mut().for_each(|v| *v = 0.0);
            kernel_row_regular_at_coincidence(ctx, alpha, i, &xi, &mut buf);
            for b in 0..r {
                d[a * r + b] += h3 * buf[b];
            }
        }
    }
    let mut sym = d.clone();
    for a in 0..r {
        for b in 0..r {
            sym[a * r + b] = 0.5 * (d[a * r + b] + d[b * r + a]);
        }
    }
    sym
}

/// K with the configured diagonal rule, before symmetrization.
pub fn assemble_k(ctx: &KernelContext, grid: &VelocityGrid, opts: &AssemblyOptions) -> Result<BlockOperator, AssemblyError> {
    let mix = &ctx.mix;
    let r = mix.num_levels();
    let nodes = grid.num_nodes();
    let dim = r * nodes;
    check_memory(dim, opts.memory_cap)?;
    let h3 = grid.weight();
    let diag: Option<(Vec<Vec<f64>>, Vec<usize>)> = match opts.diagonal {
        DiagonalRule::Skip => None,
        DiagonalRule::Corrected => {
            let (reps, class) = orbits(grid);
            let table = reps
                .par_iter()
                .map(|&node| calibrated_diagonal(ctx, grid, &opts.calibration, node))
                .collect();
            Some((table, class))
        }
    };
    let pts: Vec<Vec3> = grid.nodes().collect();
    let mut k = BlockOperator::zeros(dim);
    k.data_mut()
        .par_chunks_mut(dim.max(1))
        .enumerate()
        .for_each(|(row, out)| {
            let (a, n) = (row / nodes, row % nodes);
            let (alpha, i) = mix.unflatten(a);
            let xi = pts[n];
            let mut buf = vec![0.0; r];
            for (m, xs) in pts.iter().enumerate() {
                if m == n {
                    if let Some((table, class)) = &diag {
                        let d = &table[class[n]];
                        for b in 0..r {
                            out[b * nodes + m] = d[a * r + b];
                        }
                    }
                    continue;
                }
                kernel_row(ctx, alpha, i, &xi, xs, &mut buf);
                for b in 0..r {
                    out[b * nodes + m] = h3 * buf[b];
                }
            }
        });
    Ok(k)
}

fn check_memory(dim: usize, cap: usize) -> Result<(), AssemblyError> {
    let required = dim.saturating_mul(dim);
    if required > cap {
        return Err(AssemblyError::MemoryCap { required, cap });
    }
    Ok(())
}

/// Λ, K (symmetrized) and L = Λ − K.
pub fn assemble(ctx: &KernelContext, grid: &VelocityGrid, opts: &AssemblyOptions) -> Result<Assembly, AssemblyError> {
    let dim = ctx.mix.num_levels() * grid.num_nodes();
    check_memory(dim, opts.memory_cap)?;
    let lambda = assemble_lambda(ctx, grid, &opts.nu);
    let mut k = assemble_k(ctx, grid, opts)?;
    let asymmetry = k.symmetrize();
    let l = linearized_from(&lambda, &k);
    let report = AssemblyReport {
        dim,
        levels: ctx.mix.num_levels(),
        nodes: grid.num_nodes(),
        spacing: grid.spacing(),
        half_width: grid.half_width(),
        diagonal_rule: opts.diagonal,
        route: ctx.route(),
        asymmetry,
        asymmetry_tolerance: opts.asymmetry_tolerance,
        asymmetry_ok: asymmetry <= opts.asymmetry_tolerance,
        entries_per_matrix: dim * dim,
        bytes: 2 * dim * dim * std::mem::size_of::<f64>(),
        k_frobenius: k.frobenius_norm(),
    };
    Ok(Assembly { lambda, k, l, report })
}

/// L = Λ − K.
pub fn linearized_from(lambda: &DiagonalOperator, k: &BlockOperator) -> BlockOperator {
    assert_eq!(lambda.dim(), k.dim(), "Λ and K must have the same dimension");
    let mut l = k.clone();
    l.data_mut().iter_mut().for_each(|v| *v = -*v);
    for (d, &v) in lambda.values().iter().enumerate() {
        let cur = l.get(d, d);
        l.set(d, d, v + cur);
    }
    l
}
