//! Scattering cross sections: the hard-sphere-like family and the isotropic
//! family saturating the Grad-type bound, with microreversibility and
//! symmetry-relation checks.

use serde::{Deserialize, Serialize};

use crate::mixture_model::{CollisionChannel, Mixture, ModelError};

/// Cross-section family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum CrossSectionModel {
    /// σ = C_{αβ} √(|g|² − 2Δ̃I) / (|g| φ_i φ_j) on open channels.
    HardSphere { c: Vec<Vec<f64>> },
    /// σ = C (Ψ + Ψ^{γ/2}) / (|g|² φ_i φ_j) with Ψ = |g| √(|g|² − 2Δ̃I).
    GradBounded { c: f64, gamma: f64 },
}

impl CrossSectionModel {
    /// Hard spheres with the same constant for every species pair.
    pub fn uniform_hard_sphere(s: usize, c: f64) -> Self {
        Self::HardSphere { c: vec![vec![c; s]; s] }
    }

    /// Checks shape and sign constraints. Symmetry of C is reported by
    /// [`symmetry_residuals`] rather than rejected, so that asymmetric
    /// matrices can be used as negative controls.
    pub fn validate(&self, mix: &Mixture) -> Result<(), ModelError> {
        let err = |field: &str, reason: String| ModelError::InvalidField {
            field: field.into(),
            reason,
        };
        match self {
            Self::HardSphere { c } => {
                let s = mix.num_species();
                if c.len() != s || c.iter().any(|row| row.len() != s) {
                    return Err(err("cross_section.c", format!("expected a {s}x{s} matrix")));
                }
                if c.iter().flatten().any(|&v| !(v >= 0.0 && v.is_finite())) {
                    return Err(err("cross_section.c", "entries must be finite and nonnegative".into()));
                }
            }
            Self::GradBounded { c, gamma } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(err("cross_section.c", "must be finite and nonnegative".into()));
                }
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return Err(err("cross_section.gamma", format!("must lie in (0,1), got {gamma}")));
                }
            }
        }
        Ok(())
    }

    /// The constant multiplying the cross section of species pair (α, β).
    pub fn strength(&self, alpha: usize, beta: usize) -> f64 {
        match self {
            Self::HardSphere { c } => c[alpha][beta],
            Self::GradBounded { c, .. } => *c,
        }
    }

    /// The same family with every constant multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::HardSphere { c } => Self::HardSphere {
                c: c.iter().map(|row| row.iter().map(|v| v * factor).collect()).collect(),
            },
            Self::GradBounded { c, gamma } => Self::GradBounded {
                c: c * factor,
                gamma: *gamma,
            },
        }
    }

    pub fn is_hard_sphere(&self) -> bool {
        matches!(self, Self::HardSphere { .. })
    }

    /// σ_{ij,kl}(|g|, cos θ); zero on closed channels. Both families are
    /// isotropic, so `cos_theta` is unused.
    pub fn sigma(&self, mix: &Mixture, ch: &CollisionChannel, g_norm: f64, cos_theta: f64) -> f64 {
        let _ = cos_theta;
        self.sigma_iso(mix, ch, g_norm)
    }

    /// σ for isotropic families.
    pub fn sigma_iso(&self, mix: &Mixture, ch: &CollisionChannel, g_norm: f64) -> f64 {
        debug_assert!(g_norm > 0.0, "sigma requires a positive relative speed");
        let gp2 = g_norm * g_norm - 2.0 * ch.delta_i_tilde;
        if gp2 <= 0.0 {
            return 0.0;
        }
        let phi = mix.weight(ch.alpha, ch.i) * mix.weight(ch.beta, ch.j);
        match self {
            Self::HardSphere { c } => c[ch.alpha][ch.beta] * gp2.sqrt() / (g_norm * phi),
            Self::GradBounded { c, gamma } => {
                let psi = g_norm * gp2.sqrt();
                c * (psi + psi.powf(0.5 * gamma)) / (g_norm * g_norm * phi)
            }
        }
    }

    /// |g| σ(|g|), the combination entering every collision integral.
    /// Finite as |g| → 0 for the hard-sphere family.
    pub fn speed_sigma(&self, mix: &Mixture, ch: &CollisionChannel, g_norm: f64) -> f64 {
        let gp2 = g_norm * g_norm - 2.0 * ch.delta_i_tilde;
        if gp2 <= 0.0 {
            return 0.0;
        }
        let phi = mix.weight(ch.alpha, ch.i) * mix.weight(ch.beta, ch.j);
        match self {
            Self::HardSphere { c } => c[ch.alpha][ch.beta] * gp2.sqrt() / phi,
            Self::GradBounded { .. } => g_norm * self.sigma_iso(mix, ch, g_norm),
        }
    }
}

/// Ψ = |g| √(|g|² − 2Δ̃I) on open channels, 0 otherwise.
pub fn psi(ch: &CollisionChannel, g_norm: f64) -> f64 {
    let gp2 = g_norm * g_norm - 2.0 * ch.delta_i_tilde;
    if gp2 <= 0.0 {
        0.0
    } else {
        g_norm * gp2.sqrt()
    }
}

/// φ_iφ_j|g|²σ_{ij,kl}(|g|) − φ_kφ_l|g′|²σ_{kl,ij}(|g′|), relative to the
/// larger term; `None` on closed channels.
pub fn microreversibility_residual(model: &CrossSectionModel, mix: &Mixture, ch: &CollisionChannel, g_norm: f64) -> Option<f64> {
    if !ch.is_open(g_norm) {
        return None;
    }
    let rev = ch.reversed(mix);
    let gp = (g_norm * g_norm - 2.0 * ch.delta_i_tilde).sqrt();
    if gp <= 0.0 {
        return None;
    }
    let fwd = mix.weight(ch.alpha, ch.i) * mix.weight(ch.beta, ch.j) * g_norm * g_norm * model.sigma_iso(mix, ch, g_norm);
    let bwd = mix.weight(ch.alpha, ch.k) * mix.weight(ch.beta, ch.l) * gp * gp * model.sigma_iso(mix, &rev, gp);
    let scale = fwd.abs().max(bwd.abs());
    Some(if scale == 0.0 { 0.0 } else { (fwd - bwd).abs() / scale })
}

/// Worst relative residuals of the symmetry relations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SymmetryReport {
    /// Exchange of the two collision partners: σ^{αβ}_{ij,kl} = σ^{βα}_{ji,lk}.
    pub partner_exchange: f64,
    /// Same-species relabelling: σ^{αα}_{ij,kl}(cos θ) = σ^{αα}_{ji,kl}(−cos θ).
    pub same_species: f64,
    /// Angle reflection cos θ → −cos θ with all labels fixed, same species.
    pub angle_reflection: f64,
    pub samples: usize,
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Evaluates the symmetry relations over the given channels, speeds and
/// angle cosines.
pub fn symmetry_residuals(
    model: &CrossSectionModel,
    mix: &Mixture,
    channels: &[CollisionChannel],
    speeds: &[f64],
    cosines: &[f64],
) -> SymmetryReport {
    let mut rep = SymmetryReport::default();
    for ch in channels {
        let swapped = CollisionChannel::new(mix, ch.beta, ch.alpha, ch.j, ch.i, ch.l, ch.k);
        for &g in speeds {
            for &ct in cosines {
                rep.samples += 1;
                let s = model.sigma(mix, ch, g, ct);
                rep.partner_exchange = rep.partner_exchange.max(rel(s, model.sigma(mix, &swapped, g, ct)));
                if ch.alpha == ch.beta {
                    let relabel = CollisionChannel::new(mix, ch.alpha, ch.alpha, ch.j, ch.i, ch.k, ch.l);
                    rep.same_species = rep.same_species.max(rel(s, model.sigma(mix, &relabel, g, -ct)));
                    rep.angle_reflection = rep.angle_reflection.max(rel(s, model.sigma(mix, ch, g, -ct)));
                }
            }
        }
    }
    rep
}
