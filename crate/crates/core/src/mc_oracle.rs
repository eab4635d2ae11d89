//! Monte Carlo estimators for ν, the kernel families and the weak bracket,
//! plus the randomized search for violations of the mass-weighted energy
//! inequality.
//!
//! Sample `k` draws from its own ChaCha8 stream `k` under the configured
//! seed, and per-sample values are reduced with a fixed pairwise tree, so
//! results do not depend on how samples are spread over threads.
//!
//! Importance densities are Gaussians whose variance is twice that of the
//! Maxwellian factor they cover. The widening keeps the weight ratio bounded
//! when the integrand grows with the relative speed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cross_sections::CrossSectionModel;
use crate::kinematics::{
    swapped_plane_post_state, partner_plane_post_state, partner_sphere_post_state, mass_ratio_gap_with_rho, mass_ratio_rho,
    omega_post_state, plane_basis, CollisionPair, MassRatioSample,
};
use crate::linearized_operator::KernelContext;
use crate::mixture_model::{enumerate_channels, CollisionChannel, Mixture};
use crate::nonlinear_collision::DistributionProvider;
use crate::Vec3;

/// Smallest admissible sample count.
pub const MIN_SAMPLES: u64 = 10_000;

/// Variance factor of the importance Gaussians.
const WIDENING: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("at least {MIN_SAMPLES} samples are required, got {0}")]
    TooFewSamples(u64),
}

/// Sample count and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Result<Self, McError> {
        if samples < MIN_SAMPLES {
            return Err(McError::TooFewSamples(samples));
        }
        Ok(Self { samples, seed })
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0x5eed,
        }
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl McEstimate {
    /// (mean − reference)/σ, where σ combines the standard error with a
    /// rounding floor of 1e−12 relative, so that estimators with zero
    /// variance compare at roundoff level.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.mean - reference;
        let floor = 1e-12 * reference.abs().max(self.mean.abs());
        let sigma = (self.stderr * self.stderr + floor * floor).sqrt();
        if sigma == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY * diff.signum()
            }
        } else {
            diff / sigma
        }
    }
}

/// Sum with a fixed binary tree.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// The random stream of sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Evaluates `f` on every sample stream and reduces deterministically.
pub fn estimate<F>(cfg: &McConfig, f: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let values: Vec<f64> = (0..cfg.samples)
        .into_par_iter()
        .map(|k| f(&mut sample_rng(cfg.seed, k)))
        .collect();
    summarize(&values)
}

fn summarize(values: &[f64]) -> McEstimate {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let dev: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = if values.len() > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
    McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        samples: values.len() as u64,
    }
}

fn normal3(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = normal3(rng);
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Isotropic Gaussian with per-axis variance `var`, as (sample, density).
fn gaussian3(rng: &mut ChaCha8Rng, centre: &Vec3, var: f64) -> (Vec3, f64) {
    let z = normal3(rng);
    let x = centre + z * var.sqrt();
    let density = (-0.5 * z.norm_squared()).exp() / (2.0 * PI * var).powf(1.5);
    (x, density)
}

/// Planar Gaussian around `centre` in the plane spanned by `(e1, e2)`.
fn gaussian2(rng: &mut ChaCha8Rng, centre: &Vec3, e1: &Vec3, e2: &Vec3, var: f64) -> (Vec3, f64) {
    let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    let w = centre + (e1 * a + e2 * b) * var.sqrt();
    let density = (-0.5 * (a * a + b * b)).exp() / (2.0 * PI * var);
    (w, density)
}

/// ν_{α,i}(|ξ|): ξ* is drawn per partner species from a widened Gaussian.
pub fn mc_nu(mix: &Mixture, model: &CrossSectionModel, alpha: usize, i: usize, speed: f64, cfg: &McConfig) -> McEstimate {
    let xi = Vec3::new(0.0, 0.0, speed);
    estimate(cfg, |rng| {
        let z = normal3(rng);
        let mut acc = 0.0;
        for beta in 0..mix.num_species() {
            let var = WIDENING / mix.mass(beta);
            let xs = z * var.sqrt();
            let density = (-0.5 * z.norm_squared()).exp() / (2.0 * PI * var).powf(1.5);
            let g = (xi - xs).norm();
            for j in 0..mix.level_count(beta) {
                let m = mix.sqrt_maxwellian(beta, j, &xs).powi(2);
                for k in 0..mix.level_count(alpha) {
                    for l in 0..mix.level_count(beta) {
                        let ch = CollisionChannel::new(mix, alpha, beta, i, j, k, l);
                        acc += m * 4.0 * PI * model.speed_sigma(mix, &ch, g) / density;
                    }
                }
            }
        }
        acc
    })
}

/// k^{(β,1)}_{αβ,ij}(ξ, ξ*) with ω uniform on S².
pub fn mc_kernel_k1(
    ctx: &KernelContext,
    alpha: usize,
    beta: usize,
    i: usize,
    j: usize,
    xi: &Vec3,
    xs: &Vec3,
    cfg: &McConfig,
) -> McEstimate {
    assert!(xi != xs, "kernels are evaluated at distinct velocities only");
    let mix = &ctx.mix;
    let g = (xi - xs).norm();
    let n = (xi - xs) / g;
    let amp = mix.sqrt_maxwellian(alpha, i, xi) * mix.sqrt_maxwellian(beta, j, xs) * g;
    estimate(cfg, |rng| {
        let om = unit_vector(rng);
        let mut acc = 0.0;
        for k in 0..mix.level_count(alpha) {
            for l in 0..mix.level_count(beta) {
                let ch = CollisionChannel::new(mix, alpha, beta, i, j, k, l);
                acc += 4.0 * PI * ctx.model.sigma(mix, &ch, g, om.dot(&n));
            }
        }
        amp * acc
    })
}

fn plane_centre(xi: &Vec3, xs: &Vec3) -> Vec3 {
    let n = (xi - xs) / (xi - xs).norm();
    let c = 0.5 * (xi + xs);
    -(c - n * c.dot(&n))
}

/// k^{(α)}_{αβ,ij}(ξ, ξ*) with w drawn from a Gaussian on the plane
/// orthogonal to g.
pub fn mc_kernel_k3(
    ctx: &KernelContext,
    alpha: usize,
    beta: usize,
    i: usize,
    j: usize,
    xi: &Vec3,
    xs: &Vec3,
    cfg: &McConfig,
) -> McEstimate {
    assert!(xi != xs, "kernels are evaluated at distinct velocities only");
    let mix = &ctx.mix;
    let (ma, mb) = (mix.mass(alpha), mix.mass(beta));
    let pair = CollisionPair::new(*xi, *xs, ma, ma);
    let (e1, e2) = plane_basis(xi, xs);
    let centre = plane_centre(xi, xs);
    let pref = (ma + mb) * (ma + mb) / (mb * mb) / pair.g_norm;
    let var = WIDENING / mb;
    estimate(cfg, |rng| {
        let (w, density) = gaussian2(rng, &centre, &e1, &e2, var);
        let mut acc = 0.0;
        for k in 0..mix.level_count(beta) {
            for l in 0..mix.level_count(beta) {
                let ch = CollisionChannel::new(mix, alpha, beta, i, k, j, l);
                let Some(post) = swapped_plane_post_state(mix, &pair, &ch, &w).open() else {
                    continue;
                };
                let g_in = (xi - post.xi_prime).norm();
                let ratio = (mix.weight(alpha, i) * mix.weight(beta, k) / (mix.weight(alpha, j) * mix.weight(beta, l))).sqrt();
                let mm = mix.sqrt_maxwellian(beta, k, &post.xi_prime) * mix.sqrt_maxwellian(beta, l, &post.xi_star_prime);
                acc += g_in * mm / post.g_prime_norm * ratio * ctx.model.sigma(mix, &ch, g_in, 0.0);
            }
        }
        pref * acc / density
    })
}

/// k^{(β,2)}_{αβ,ij}(ξ, ξ*): ω uniform on S² for unequal masses, a planar
/// Gaussian for equal masses.
pub fn mc_kernel_k2(
    ctx: &KernelContext,
    alpha: usize,
    beta: usize,
    i: usize,
    j: usize,
    xi: &Vec3,
    xs: &Vec3,
    cfg: &McConfig,
) -> McEstimate {
    assert!(xi != xs, "kernels are evaluated at distinct velocities only");
    let mix = &ctx.mix;
    let (ma, mb) = (mix.mass(alpha), mix.mass(beta));
    let pair = CollisionPair::new(*xi, *xs, ma, mb);
    let ratio = |k: usize, l: usize| {
        (mix.weight(alpha, i) * mix.weight(beta, l) / (mix.weight(alpha, k) * mix.weight(beta, j))).sqrt()
    };
    if ma != mb {
        let pref = (ma + mb) * (ma + mb) / ((ma - mb) * (ma - mb));
        return estimate(cfg, |rng| {
            let om = unit_vector(rng);
            let mut acc = 0.0;
            for k in 0..mix.level_count(alpha) {
                for l in 0..mix.level_count(beta) {
                    let ch = CollisionChannel::new(mix, alpha, beta, i, l, k, j);
                    let Some(post) = partner_sphere_post_state(mix, &pair, &ch, &om).open() else {
                        continue;
                    };
                    let g_in = (xi - post.xi_star_prime).norm();
                    let g_out = (post.xi_prime - xs).norm();
                    if g_in == 0.0 || g_out == 0.0 {
                        continue;
                    }
                    let mm = mix.sqrt_maxwellian(alpha, k, &post.xi_prime) * mix.sqrt_maxwellian(beta, l, &post.xi_star_prime);
                    acc += mm * g_in * post.g_prime_norm / g_out * ratio(k, l) * ctx.model.sigma(mix, &ch, g_in, 0.0);
                }
            }
            4.0 * PI * pref * acc
        });
    }
    let (e1, e2) = plane_basis(xi, xs);
    let centre = plane_centre(xi, xs);
    let pref = 4.0 / pair.g_norm;
    let var = WIDENING / ma;
    estimate(cfg, |rng| {
        let (w, density) = gaussian2(rng, &centre, &e1, &e2, var);
        let mut acc = 0.0;
        for k in 0..mix.level_count(alpha) {
            for l in 0..mix.level_count(beta) {
                let ch = CollisionChannel::new(mix, alpha, beta, i, l, k, j);
                let Some(post) = partner_plane_post_state(mix, &pair, &ch, &w).open() else {
                    continue;
                };
                let g_in = (xi - post.xi_star_prime).norm();
                let mm = mix.sqrt_maxwellian(alpha, k, &post.xi_prime) * mix.sqrt_maxwellian(beta, l, &post.xi_star_prime);
                acc += g_in * mm / post.g_prime_norm * ratio(k, l) * ctx.model.sigma(mix, &ch, g_in, 0.0);
            }
        }
        pref * acc / density
    })
}

/// (Q(f,f), g) in the symmetrized form
/// ¼ Σ ∫ φ_iφ_j σ|g| (f′f′*/(φ_kφ_l) − ff*/(φ_iφ_j)) (g + g* − g′ − g′*)
/// over ξ, ξ* ∈ ℝ³ and ω ∈ S². Each sample draws a channel uniformly, ξ and
/// ξ* from widened Gaussians of the channel's species and ω uniformly.
pub fn mc_weak_bracket(
    f: &dyn DistributionProvider,
    g: &dyn DistributionProvider,
    mix: &Mixture,
    model: &CrossSectionModel,
    cfg: &McConfig,
) -> McEstimate {
    let channels = enumerate_channels(mix);
    let count = channels.len() as f64;
    estimate(cfg, |rng| {
        let ch = &channels[rng.random_range(0..channels.len())];
        let (ma, mb) = (mix.mass(ch.alpha), mix.mass(ch.beta));
        let (xi, p1) = gaussian3(rng, &Vec3::zeros(), WIDENING / ma);
        let (xs, p2) = gaussian3(rng, &Vec3::zeros(), WIDENING / mb);
        let om = unit_vector(rng);
        let pair = CollisionPair::new(xi, xs, ma, mb);
        if pair.g_norm == 0.0 {
            return 0.0;
        }
        let Some(post) = omega_post_state(mix, &pair, ch, &om).open() else {
            return 0.0;
        };
        let (phi_ij, phi_kl) = (
            mix.weight(ch.alpha, ch.i) * mix.weight(ch.beta, ch.j),
            mix.weight(ch.alpha, ch.k) * mix.weight(ch.beta, ch.l),
        );
        let pre = f.value(ch.alpha, ch.i, &xi) * f.value(ch.beta, ch.j, &xs) / phi_ij;
        let postv = f.value(ch.alpha, ch.k, &post.xi_prime) * f.value(ch.beta, ch.l, &post.xi_star_prime) / phi_kl;
        let delta = g.value(ch.alpha, ch.i, &xi) + g.value(ch.beta, ch.j, &xs)
            - g.value(ch.alpha, ch.k, &post.xi_prime)
            - g.value(ch.beta, ch.l, &post.xi_star_prime);
        let gs = pair.g_norm * model.sigma_iso(mix, ch, pair.g_norm);
        0.25 * phi_ij * gs * (postv - pre) * delta * 4.0 * PI * count / (p1 * p2)
    })
}

/// Sampling boxes of the randomized inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassRatioBoxes {
    /// ξ and w̃ are uniform in [−v, v]³.
    pub velocity_half_width: f64,
    /// q is uniform in [0, q_max].
    pub q_max: f64,
    /// ΔI is uniform in this interval.
    pub delta_i_range: (f64, f64),
}

impl Default for MassRatioBoxes {
    fn default() -> Self {
        Self {
            velocity_half_width: 5.0,
            q_max: 10.0,
            delta_i_range: (-2.0, 2.0),
        }
    }
}

/// Outcome of the randomized inequality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassRatioResult {
    pub min_gap: f64,
    pub argmin: MassRatioSample,
    pub rho: f64,
    pub samples: u64,
}

/// Draws samples uniformly over the boxes and returns the smallest gap.
/// `rho` overrides the closed-form ρ (negative controls).
pub fn mass_ratio_random_check(
    m_alpha: f64,
    m_beta: f64,
    boxes: &MassRatioBoxes,
    cfg: &McConfig,
    rho: Option<f64>,
) -> MassRatioResult {
    assert!(m_alpha != m_beta, "the inequality concerns unequal masses");
    let rho = rho.unwrap_or_else(|| mass_ratio_rho(m_alpha, m_beta));
    let v = boxes.velocity_half_width;
    let draw = |k: u64| {
        let mut rng = sample_rng(cfg.seed, k);
        let mut cube = || Vec3::new(rng.random_range(-v..=v), rng.random_range(-v..=v), rng.random_range(-v..=v));
        let xi = cube();
        let w = cube();
        let eta = unit_vector(&mut rng);
        let q = rng.random_range(0.0..=boxes.q_max);
        let (lo, hi) = boxes.delta_i_range;
        let delta_i = if q == 0.0 { 0.0 } else { rng.random_range(lo..=hi) };
        MassRatioSample::construct(m_alpha, m_beta, xi, eta, q, delta_i, w)
    };
    let best = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let s = draw(k);
            (mass_ratio_gap_with_rho(&s, rho), k)
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    MassRatioResult {
        min_gap: best.0,
        argmin: draw(best.1),
        rho,
        samples: cfg.samples,
    }
}
