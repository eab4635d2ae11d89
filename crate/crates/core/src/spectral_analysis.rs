//! Spectral checks of the assembled operators: nonnegativity of L, the null
//! space spanned by the weighted collision invariants, the coercivity
//! constant, the collision-frequency bounds and compactness surrogates.
//!
//! For an even number of points per axis the grid is invariant under the
//! eight axis reflections, and so are Λ and K. The operators are therefore
//! block diagonal in the basis of reflection characters, with eight blocks of
//! size `r·(N/2)³`. Whatever the reduction misses is measured and reported
//! as leakage; above a small threshold the dense matrix is decomposed
//! instead.

use faer::{Mat, Side};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::VelocityGrid;
use crate::linearized_operator::kernels::{kernel_k1, KernelContext};
use crate::linearized_operator::{BlockOperator, DiagonalOperator};

/// Relative leakage above which the parity reduction is abandoned.
pub const LEAKAGE_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix of dimension {found} does not match the expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A column of an orthonormal basis, stored sparsely as (index, weight).
type SparseColumn = Vec<(usize, f64)>;

/// An orthonormal basis split into invariant blocks.
#[derive(Debug, Clone)]
pub struct Reduction {
    dim: usize,
    blocks: Vec<Vec<SparseColumn>>,
}

impl Reduction {
    /// The trivial reduction: one block, the standard basis.
    pub fn dense(dim: usize) -> Self {
        Self {
            dim,
            blocks: vec![(0..dim).map(|k| vec![(k, 1.0)]).collect()],
        }
    }

    /// Characters of the reflection group for `levels` fields on `grid`;
    /// `None` for an odd number of points per axis.
    pub fn parity(grid: &VelocityGrid, levels: usize) -> Option<Self> {
        let n = grid.points_per_axis();
        if !n.is_multiple_of(2) {
            return None;
        }
        let half = n / 2;
        let nodes = grid.num_nodes();
        let scale = 1.0 / 8f64.sqrt();
        let mut blocks = vec![Vec::new(); 8];
        for (t, block) in blocks.iter_mut().enumerate() {
            for lvl in 0..levels {
                for px in 0..half {
                    for py in 0..half {
                        for pz in 0..half {
                            let col = (0..8usize)
                                .map(|s| {
                                    let pick = |bit: usize, p: usize| {
                                        if s >> bit & 1 == 1 {
                                            half - 1 - p
                                        } else {
                                            half + p
                                        }
                                    };
                                    let node = grid.flat_index(pick(0, px), pick(1, py), pick(2, pz));
                                    let sign = if (s & t).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                                    (lvl * nodes + node, sign * scale)
                                })
                                .collect();
                            block.push(col);
                        }
                    }
                }
            }
        }
        Some(Self {
            dim: levels * nodes,
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Bᵀ A B restricted to block `b`.
    pub fn project(&self, a: &BlockOperator, b: usize) -> Mat<f64> {
        let cols = &self.blocks[b];
        Mat::from_fn(cols.len(), cols.len(), |r, c| {
            let mut acc = 0.0;
            for &(i, wi) in &cols[r] {
                for &(j, wj) in &cols[c] {
                    acc += wi * wj * a.get(i, j);
                }
            }
            acc
        })
    }

    /// Coordinates of a full vector in block `b`.
    pub fn restrict(&self, v: &[f64], b: usize) -> Vec<f64> {
        self.blocks[b]
            .iter()
            .map(|col| col.iter().map(|&(i, w)| w * v[i]).sum())
            .collect()
    }

    /// The full vector with coordinates `y` in block `b`.
    pub fn extend(&self, y: &[f64], b: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for (col, &c) in self.blocks[b].iter().zip(y) {
            for &(i, w) in col {
                v[i] += w * c;
            }
        }
        v
    }
}

/// Eigenpairs of a symmetric matrix, block by block.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// All eigenvalues, ascending.
    pub values: Vec<f64>,
    /// (block, index within the block) of each entry of `values`.
    origin: Vec<(usize, usize)>,
    block_vectors: Vec<Mat<f64>>,
    reduction: Reduction,
    /// ‖AV − VD‖_F / ‖A‖_F including the reduction leakage.
    pub residual: f64,
    /// Reflection defect of A (see [`reflection_defect`]); 0 without reduction.
    pub leakage: f64,
    /// Whether the reflection reduction was used.
    pub reduced: bool,
}

impl Eigensystem {
    /// The eigenvector of the `k`-th smallest eigenvalue as a full vector.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        let (b, idx) = self.origin[k];
        let m = &self.block_vectors[b];
        let y: Vec<f64> = (0..m.nrows()).map(|r| m.read(r, idx)).collect();
        self.reduction.extend(&y, b)
    }
}

fn check_finite(a: &BlockOperator) -> Result<(), SpectralError> {
    if a.all_finite() {
        Ok(())
    } else {
        Err(SpectralError::NonFinite)
    }
}

/// ‖A − RAR‖_F summed in quadrature over the three axis reflections R of
/// the grid, relative to ‖A‖_F. It vanishes exactly when the parity blocks
/// decouple.
pub fn reflection_defect(a: &BlockOperator, grid: &VelocityGrid, levels: usize) -> f64 {
    let nodes = grid.num_nodes();
    let n = grid.points_per_axis();
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for axis in 0..3 {
        let image: Vec<usize> = (0..levels * nodes)
            .map(|idx| {
                let (lvl, node) = (idx / nodes, idx % nodes);
                let mut ax = grid.axis_indices(node);
                ax[axis] = n - 1 - ax[axis];
                lvl * nodes + grid.flat_index(ax[0], ax[1], ax[2])
            })
            .collect();
        for r in 0..a.dim() {
            let row = a.row(r);
            let img = a.row(image[r]);
            for (c, &v) in row.iter().enumerate() {
                let d = v - img[image[c]];
                acc += d * d;
            }
        }
    }
    acc.sqrt() / norm
}

/// `leakage` is the relative size of the part of A outside the blocks.
fn decompose_blocks(a: &BlockOperator, reduction: Reduction, leakage: f64) -> Eigensystem {
    let norm = a.frobenius_norm();
    let mut values = Vec::with_capacity(a.dim());
    let mut origin = Vec::with_capacity(a.dim());
    let mut block_vectors = Vec::with_capacity(reduction.num_blocks());
    let mut res2 = 0.0;
    for b in 0..reduction.num_blocks() {
        let m = reduction.project(a, b);
        let evd = m.selfadjoint_eigendecomposition(Side::Lower);
        let u = evd.u().to_owned();
        let s = evd.s().column_vector().to_owned();
        let d = Mat::from_fn(u.nrows(), u.ncols(), |r, c| u.read(r, c) * s.read(c));
        res2 += (&m * &u - d).norm_l2().powi(2);
        for k in 0..s.nrows() {
            values.push(s.read(k));
            origin.push((b, k));
        }
        block_vectors.push(u);
    }
    let leak2 = (leakage * norm).powi(2);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]).then(origin[x].cmp(&origin[y])));
    let rel = |x: f64| if norm == 0.0 { 0.0 } else { x / norm };
    Eigensystem {
        values: order.iter().map(|&k| values[k]).collect(),
        origin: order.iter().map(|&k| origin[k]).collect(),
        block_vectors,
        reduced: reduction.num_blocks() > 1,
        reduction,
        residual: rel((res2 + leak2).sqrt()),
        leakage,
    }
}

/// Full ascending eigendecomposition of a symmetric matrix. Uses the
/// reflection reduction when `grid` and `levels` describe the matrix and the
/// leakage is negligible.
pub fn eigensolve(a: &BlockOperator, grid: Option<(&VelocityGrid, usize)>) -> Result<Eigensystem, SpectralError> {
    check_finite(a)?;
    if let Some((g, levels)) = grid {
        let expected = levels * g.num_nodes();
        if expected != a.dim() {
            return Err(SpectralError::DimensionMismatch {
                expected,
                found: a.dim(),
            });
        }
        if let Some(red) = Reduction::parity(g, levels) {
            let leakage = reflection_defect(a, g, levels);
            if leakage <= LEAKAGE_TOLERANCE {
                return Ok(decompose_blocks(a, red, leakage));
            }
        }
    }
    Ok(decompose_blocks(a, Reduction::dense(a.dim()), 0.0))
}

/// Null-space diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpaceReport {
    /// Largest k ≤ scan limit with max_{m≤k} |λ_m| ≤ λ_{k+1}/gap_factor.
    pub dim_estimate: usize,
    pub expected_dim: usize,
    pub gap_factor: f64,
    /// λ_{expected+1} / max_{m≤expected} |λ_m|.
    pub separation: f64,
    /// ‖Lv‖/‖Λv‖ per weighted invariant.
    pub residuals: Vec<f64>,
    /// Principal angles (radians, ascending) between the span of the
    /// `expected_dim` lowest eigenvectors and the weighted invariants.
    pub principal_angles: Vec<f64>,
}

/// Gap-based estimate of the null dimension.
pub fn null_dim_estimate(values: &[f64], gap_factor: f64, scan: usize) -> usize {
    let mut best = 0;
    let mut running = 0.0f64;
    for k in 1..=scan.min(values.len().saturating_sub(1)) {
        running = running.max(values[k - 1].abs());
        if running * gap_factor <= values[k] {
            best = k;
        }
    }
    best
}

/// Orthonormalizes the columns of `vs` (modified Gram–Schmidt), dropping
/// columns whose remainder falls below `drop` times their original norm.
fn orthonormalize(vs: &[Vec<f64>], drop: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let n0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n0 == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let d: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(x, qq)| *x -= d * qq);
            }
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > drop * n0 {
            w.iter_mut().for_each(|x| *x /= n);
            out.push(w);
        }
    }
    out
}

/// Principal angles between two sets of orthonormal vectors.
pub fn principal_angles(u: &[Vec<f64>], q: &[Vec<f64>]) -> Vec<f64> {
    if u.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::<f64>::from_fn(u.len(), q.len(), |r, c| u[r].iter().zip(&q[c]).map(|(a, b)| a * b).sum());
    let mut angles: Vec<f64> = m
        .singular_values()
        .iter()
        .map(|&s: &f64| s.clamp(-1.0, 1.0).acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Null dimension, invariant residuals and principal angles.
pub fn null_space_report(
    l: &BlockOperator,
    lambda: &DiagonalOperator,
    eig: &Eigensystem,
    invariants: &[Vec<f64>],
    gap_factor: f64,
) -> NullSpaceReport {
    let expected = invariants.len();
    let scan = (3 * expected).max(expected + 1);
    let dim_estimate = null_dim_estimate(&eig.values, gap_factor, scan);
    let separation = if eig.values.len() > expected {
        let top = eig.values[..expected].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if top == 0.0 {
            f64::INFINITY
        } else {
            eig.values[expected] / top
        }
    } else {
        f64::NAN
    };
    let residuals = invariants
        .iter()
        .map(|v| {
            let lv = l.matvec(v);
            let dv = lambda.apply(v);
            let nl = lv.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nd = dv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nd == 0.0 {
                0.0
            } else {
                nl / nd
            }
        })
        .collect();
    let k = expected.min(eig.values.len());
    let u: Vec<Vec<f64>> = (0..k).map(|m| eig.vector(m)).collect();
    let q = orthonormalize(invariants, 1e-10);
    NullSpaceReport {
        dim_estimate,
        expected_dim: expected,
        gap_factor,
        separation,
        residuals,
        principal_angles: principal_angles(&u, &q),
    }
}

/// min (h, Lh)/(h, Λh) over h orthogonal to the weighted invariants.
///
/// With y = Λ^{1/2}h the quotient becomes a Rayleigh quotient of
/// Ã = Λ^{−1/2}LΛ^{−1/2} over y orthogonal to U = span Λ^{−1/2}V. The
/// minimum is the smallest eigenvalue of PÃP + cUUᵀ with P = I − UUᵀ and
/// c above the spectrum of Ã. When L coincides with Λ the quotient is
/// identically one and 1 is returned without a decomposition.
pub fn coercivity_lambda(
    l: &BlockOperator,
    lambda: &DiagonalOperator,
    invariants: &[Vec<f64>],
    grid: Option<(&VelocityGrid, usize)>,
) -> Result<f64, SpectralError> {
    check_finite(l)?;
    let dim = l.dim();
    if lambda.values().iter().any(|&v| v <= 0.0) {
        return Ok(f64::NAN);
    }
    let is_lambda = (0..dim).all(|r| (0..dim).all(|c| l.get(r, c) == if r == c { lambda.values()[r] } else { 0.0 }));
    if is_lambda {
        return Ok(1.0);
    }
    let inv_sqrt: Vec<f64> = lambda.values().iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut scaled = l.clone();
    for r in 0..dim {
        for c in 0..dim {
            let v = l.get(r, c) * inv_sqrt[r] * inv_sqrt[c];
            scaled.set(r, c, v);
        }
    }
    let vs: Vec<Vec<f64>> = invariants
        .iter()
        .map(|v| v.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect())
        .collect();
    let reduction = grid
        .filter(|&(g, levels)| reflection_defect(&scaled, g, levels) <= LEAKAGE_TOLERANCE)
        .and_then(|(g, levels)| Reduction::parity(g, levels))
        .unwrap_or_else(|| Reduction::dense(dim));
    let shift = 2.0 * scaled.frobenius_norm() + 1.0;
    let mut best = f64::INFINITY;
    for b in 0..reduction.num_blocks() {
        let a = reduction.project(&scaled, b);
        let n = a.nrows();
        let local: Vec<Vec<f64>> = vs.iter().map(|v| reduction.restrict(v, b)).collect();
        let u = orthonormalize(&local, 1e-8);
        // P A P + c U Uᵀ
        let mut pa = a.clone();
        if !u.is_empty() {
            let umat = Mat::from_fn(n, u.len(), |r, c| u[c][r]);
            let p = Mat::<f64>::identity(n, n) - &umat * umat.transpose();
            pa = &p * &a * &p + &umat * umat.transpose() * faer::scale(shift);
        }
        let ev = pa.selfadjoint_eigenvalues(Side::Lower);
        if let Some(min) = ev.into_iter().reduce(f64::min) {
            best = best.min(min);
        }
    }
    Ok(best)
}

/// ν₋ = min ν/(1+|ξ|), ν₊ = max ν/(1+|ξ|) over all levels and nodes.
pub fn nu_bounds(lambda: &DiagonalOperator, grid: &VelocityGrid) -> (f64, f64) {
    let nodes = grid.num_nodes();
    let speeds: Vec<f64> = grid.nodes().map(|x| x.norm()).collect();
    lambda
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| v / (1.0 + speeds[k % nodes]))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Singular-value diagnostics of K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvDecay {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// √(Σσ²).
    pub hs_norm: f64,
    /// Σ_{k > dim/2} σ_k² / Σ σ_k² (0 for K = 0).
    pub tail_fraction: f64,
}

/// Singular values of symmetric K, taken as |eigenvalues|.
pub fn sv_decay(k: &BlockOperator, grid: Option<(&VelocityGrid, usize)>) -> Result<SvDecay, SpectralError> {
    let eig = eigensolve(k, grid)?;
    Ok(sv_from_eigenvalues(&eig.values))
}

pub fn sv_from_eigenvalues(values: &[f64]) -> SvDecay {
    let mut sv: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let tail: f64 = sv.iter().skip(sv.len() / 2).map(|s| s * s).sum();
    SvDecay {
        hs_norm: total.sqrt(),
        tail_fraction: if total == 0.0 { 0.0 } else { tail / total },
        singular_values: sv,
    }
}

/// Σ over level pairs and distinct nodes of h⁶ (k^{(β,1)})²: the grid
/// estimate of ∬ (k^{(β,1)})² dξ dξ*.
pub fn k1_hs_quadrature(ctx: &KernelContext, grid: &VelocityGrid) -> f64 {
    use rayon::prelude::*;
    let mix = &ctx.mix;
    let pts: Vec<_> = grid.nodes().collect();
    let w2 = grid.weight() * grid.weight();
    let per_node: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|n| {
            let mut acc = 0.0;
            for (m, xs) in pts.iter().enumerate() {
                if m == n {
                    continue;
                }
                for (alpha, i) in mix.levels_flat() {
                    for (beta, j) in mix.levels_flat() {
                        let v = kernel_k1(ctx, alpha, beta, i, j, &pts[n], xs, None);
                        acc += v * v;
                    }
                }
            }
            acc
        })
        .collect();
    w2 * per_node.iter().sum::<f64>()
}

/// Everything the spectral stage reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Eigenvalues of L, ascending.
    pub eigenvalues: Vec<f64>,
    pub l_frobenius: f64,
    /// min eigenvalue / ‖L‖_F.
    pub min_eigenvalue_relative: f64,
    pub reconstruction_residual: f64,
    pub parity_reduced: bool,
    pub null_space: NullSpaceReport,
    pub lambda_coercivity: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
    /// Singular values of K, descending.
    pub singular_values: Vec<f64>,
    pub hs_norm_estimate: f64,
    pub sv_tail_fraction: f64,
    /// Grid estimate of ∬ (k^{(β,1)})²; absent when not requested.
    pub k1_hs_quadrature: Option<f64>,
    /// Pre-symmetrization asymmetry of K, when known.
    pub asymmetry_metric: Option<f64>,
}

/// Inputs of [`spectral_report`].
pub struct SpectralInputs<'a> {
    pub lambda: &'a DiagonalOperator,
    pub k: &'a BlockOperator,
    pub l: &'a BlockOperator,
    pub grid: &'a VelocityGrid,
    pub levels: usize,
    pub invariants: &'a [Vec<f64>],
    pub gap_factor: f64,
    pub asymmetry: Option<f64>,
    /// When present, the k^{(β,1)} Hilbert–Schmidt quadrature is computed.
    pub kernels: Option<&'a KernelContext>,
}

pub fn spectral_report(inp: &SpectralInputs) -> Result<SpectralReport, SpectralError> {
    let g = Some((inp.grid, inp.levels));
    let eig = eigensolve(inp.l, g)?;
    let l_norm = inp.l.frobenius_norm();
    let null_space = null_space_report(inp.l, inp.lambda, &eig, inp.invariants, inp.gap_factor);
    let lambda_coercivity = coercivity_lambda(inp.l, inp.lambda, inp.invariants, g)?;
    let (nu_minus, nu_plus) = nu_bounds(inp.lambda, inp.grid);
    let sv = sv_decay(inp.k, g)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    Ok(SpectralReport {
        min_eigenvalue_relative: if l_norm == 0.0 { 0.0 } else { min / l_norm },
        eigenvalues: eig.values.clone(),
        l_frobenius: l_norm,
        reconstruction_residual: eig.residual,
        parity_reduced: eig.reduced,
        null_space,
        lambda_coercivity,
        nu_minus,
        nu_plus,
        hs_norm_estimate: sv.hs_norm,
        sv_tail_fraction: sv.tail_fraction,
        singular_values: sv.singular_values,
        k1_hs_quadrature: inp.kernels.map(|ctx| k1_hs_quadrature(ctx, inp.grid)),
        asymmetry_metric: inp.asymmetry,
    })
}
