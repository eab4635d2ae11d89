//! Collision frequency ν_{α,i}(|ξ|).
//!
//! ν_{α,i}(|ξ|) = Σ_β Σ_{j,k,l} ∫ M_{β,j}(ξ*) |g| ∫_{S²} σ dω dξ*. With ξ*
//! in spherical coordinates about ξ, the angle integral becomes a
//! one-dimensional integral over |g| ∈ [| |ξ| − r |, |ξ| + r], which is
//! closed form for hard spheres. The remaining radial integral uses a
//! composite Gauss–Legendre rule split at the kinks of the integrand.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::cross_sections::CrossSectionModel;
use crate::mixture_model::{CollisionChannel, Mixture};
use crate::quadrature::{composite_rule, gauss_legendre};

/// Radial rule for ν.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuQuadrature {
    /// Truncation radius of |ξ*|; `None` means 8/√(min m).
    #[serde(default)]
    pub radius: Option<f64>,
    /// Largest panel width of the composite rule.
    #[serde(default = "default_panel")]
    pub panel: f64,
    /// Gauss–Legendre order per panel.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Normalize the partner Maxwellian by q_α instead of q_β. Off by
    /// default.
    #[serde(default)]
    pub literal_q_alpha: bool,
}

fn default_panel() -> f64 {
    0.5
}

fn default_order() -> usize {
    10
}

impl Default for NuQuadrature {
    fn default() -> Self {
        Self {
            radius: None,
            panel: default_panel(),
            order: default_order(),
            literal_q_alpha: false,
        }
    }
}

impl NuQuadrature {
    pub fn effective_radius(&self, mix: &Mixture) -> f64 {
        self.radius.unwrap_or(8.0 / mix.min_mass().sqrt())
    }
}

fn unit_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16, -1.0, 1.0))
}

/// ∫_{|s−r|}^{s+r} 4π|g|σ(g) g dg / (s r): the angle-integrated cross section
/// for the channel; at s = 0 the limit 2·4π|g|σ(r).
fn angular_integral(model: &CrossSectionModel, mix: &Mixture, ch: &CollisionChannel, s: f64, r: f64) -> f64 {
    let a = 2.0 * ch.delta_i_tilde;
    let phi = mix.weight(ch.alpha, ch.i) * mix.weight(ch.beta, ch.j);
    let c = model.strength(ch.alpha, ch.beta);
    if s * r < 1e-12 {
        let g = s + r;
        if g <= 0.0 {
            return 0.0;
        }
        return 2.0 * 4.0 * PI * model.speed_sigma(mix, ch, g);
    }
    let (g_lo, g_hi) = ((s - r).abs(), s + r);
    match model {
        CrossSectionModel::HardSphere { .. } => {
            let prim = |g: f64| {
                let u2 = g * g - a;
                if u2 <= 0.0 {
                    0.0
                } else {
                    u2 * u2.sqrt() / 3.0
                }
            };
            4.0 * PI * c / phi * (prim(g_hi) - prim(g_lo)) / (s * r)
        }
        CrossSectionModel::GradBounded { gamma, .. } => {
            // u = √(g² − a), g dg = u du
            let u_of = |g: f64| (g * g - a).max(0.0).sqrt();
            let (u_lo, u_hi) = (u_of(g_lo), u_of(g_hi));
            if u_hi <= u_lo {
                return 0.0;
            }
            let integrand = |u: f64| {
                let g = (u * u + a).sqrt();
                u * (u + g.powf(0.5 * gamma - 1.0) * u.powf(0.5 * gamma))
            };
            let (mid, half) = (0.5 * (u_lo + u_hi), 0.5 * (u_hi - u_lo));
            let sum: f64 = unit_rule()
                .iter()
                .map(|&(x, w)| half * w * integrand(mid + half * x))
                .sum();
            4.0 * PI * c / phi * sum / (s * r)
        }
    }
}

/// ν_{α,i} at speed |ξ| = `speed` with the default radial rule.
pub fn nu(mix: &Mixture, model: &CrossSectionModel, alpha: usize, i: usize, speed: f64) -> f64 {
    nu_with(mix, model, alpha, i, speed, &NuQuadrature::default())
}

/// ν_{α,i} at speed |ξ| = `speed`.
///
/// # Panics
/// If `speed` is negative or not finite.
pub fn nu_with(mix: &Mixture, model: &CrossSectionModel, alpha: usize, i: usize, speed: f64, quad: &NuQuadrature) -> f64 {
    assert!(speed >= 0.0 && speed.is_finite(), "speed must be finite and nonnegative");
    let radius = quad.effective_radius(mix);
    let s = speed;
    let mut total = 0.0;
    for beta in 0..mix.num_species() {
        let mb = mix.mass(beta);
        let mut amp = mix.maxwellian_amplitude(beta);
        if quad.literal_q_alpha {
            amp *= mix.partition_function(beta, 1.0) / mix.partition_function(alpha, 1.0);
        }
        for j in 0..mix.level_count(beta) {
            let pre = 2.0 * PI * amp * mix.weight(beta, j) * (-mix.energy(beta, j)).exp();
            for k in 0..mix.level_count(alpha) {
                for l in 0..mix.level_count(beta) {
                    let ch = CollisionChannel::new(mix, alpha, beta, i, j, k, l);
                    let a = 2.0 * ch.delta_i_tilde;
                    let mut breaks = vec![s];
                    if a > 0.0 {
                        let ra = a.sqrt();
                        breaks.extend([s + ra, s - ra, ra - s]);
                    }
                    let rule = composite_rule(0.0, radius, &breaks, quad.panel, quad.order);
                    let sum: f64 = rule
                        .iter()
                        .map(|&(r, w)| w * r * r * (-0.5 * mb * r * r).exp() * angular_integral(model, mix, &ch, s, r))
                        .sum();
                    total += pre * sum;
                }
            }
        }
    }
    total
}
