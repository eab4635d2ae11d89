//! Mixture description, channel enumeration, Maxwellians and collision invariants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::VelocityGrid;
use crate::Vec3;

/// Validation failures raised while building a mixture.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid {field}: {reason}")]
    InvalidField { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidField {
        field: field.into(),
        reason: reason.into(),
    }
}

/// One molecular species: mass, internal energy levels with degeneracy
/// weights, and number density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Species {
    pub mass: f64,
    pub levels: Vec<f64>,
    pub weights: Vec<f64>,
    pub density: f64,
}

/// A validated mixture. Levels of every species are stored in ascending
/// order and the flat level index runs species-major, then level.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    species: Vec<Species>,
    temperature: f64,
    offsets: Vec<usize>,
}

impl Mixture {
    /// Validates the species list and fixes the flat level indexing.
    pub fn new(species: Vec<Species>, temperature: f64) -> Result<Self, ModelError> {
        if species.is_empty() {
            return Err(invalid("species", "the species list is empty"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(invalid("temperature", format!("must be positive, got {temperature}")));
        }
        let mut sorted = Vec::with_capacity(species.len());
        for (a, sp) in species.into_iter().enumerate() {
            if !(sp.mass > 0.0 && sp.mass.is_finite()) {
                return Err(invalid(format!("species[{a}].mass"), format!("must be positive, got {}", sp.mass)));
            }
            if !(sp.density > 0.0 && sp.density.is_finite()) {
                return Err(invalid(
                    format!("species[{a}].density"),
                    format!("must be positive, got {}", sp.density),
                ));
            }
            if sp.levels.is_empty() {
                return Err(invalid(format!("species[{a}].levels"), "at least one level is required"));
            }
            if sp.levels.len() != sp.weights.len() {
                return Err(invalid(
                    format!("species[{a}].weights"),
                    format!("{} weights for {} levels", sp.weights.len(), sp.levels.len()),
                ));
            }
            for (i, &e) in sp.levels.iter().enumerate() {
                if !(e >= 0.0 && e.is_finite()) {
                    return Err(invalid(format!("species[{a}].levels[{i}]"), format!("must be nonnegative, got {e}")));
                }
            }
            for (i, &w) in sp.weights.iter().enumerate() {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(invalid(format!("species[{a}].weights[{i}]"), format!("must be positive, got {w}")));
                }
            }
            let mut order: Vec<usize> = (0..sp.levels.len()).collect();
            order.sort_by(|&x, &y| sp.levels[x].total_cmp(&sp.levels[y]));
            sorted.push(Species {
                mass: sp.mass,
                levels: order.iter().map(|&k| sp.levels[k]).collect(),
                weights: order.iter().map(|&k| sp.weights[k]).collect(),
                density: sp.density,
            });
        }
        let mut offsets = Vec::with_capacity(sorted.len() + 1);
        let mut acc = 0;
        for sp in &sorted {
            offsets.push(acc);
            acc += sp.levels.len();
        }
        offsets.push(acc);
        Ok(Self {
            species: sorted,
            temperature,
            offsets,
        })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Number of species `s`.
    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    /// Total number of levels `r = Σ r_α`.
    pub fn num_levels(&self) -> usize {
        self.offsets[self.species.len()]
    }

    /// Number of levels `r_α` of one species.
    pub fn level_count(&self, alpha: usize) -> usize {
        self.species[alpha].levels.len()
    }

    pub fn mass(&self, alpha: usize) -> f64 {
        self.species[alpha].mass
    }

    pub fn density(&self, alpha: usize) -> f64 {
        self.species[alpha].density
    }

    pub fn energy(&self, alpha: usize, i: usize) -> f64 {
        self.species[alpha].levels[i]
    }

    pub fn weight(&self, alpha: usize, i: usize) -> f64 {
        self.species[alpha].weights[i]
    }

    pub fn min_mass(&self) -> f64 {
        self.species.iter().map(|s| s.mass).fold(f64::INFINITY, f64::min)
    }

    /// Flat level index ι(α,i).
    pub fn flatten(&self, alpha: usize, i: usize) -> usize {
        debug_assert!(i < self.level_count(alpha));
        self.offsets[alpha] + i
    }

    /// Inverse of [`Mixture::flatten`].
    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        assert!(idx < self.num_levels(), "flat level index {idx} out of range");
        let alpha = self.offsets.partition_point(|&o| o <= idx) - 1;
        (alpha, idx - self.offsets[alpha])
    }

    /// Iterator over `(α, i)` in flat order.
    pub fn levels_flat(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_levels()).map(move |k| self.unflatten(k))
    }

    /// Partition function q_α(T) = Σ_i φ_i e^{−I_i/T}.
    pub fn partition_function(&self, alpha: usize, t: f64) -> f64 {
        let sp = &self.species[alpha];
        sp.levels
            .iter()
            .zip(&sp.weights)
            .map(|(&e, &w)| w * (-e / t).exp())
            .sum()
    }

    /// Amplitude `n_α m_α^{3/2} / ((2π)^{3/2} q_α)` of the linearization
    /// Maxwellian (u = 0, T = 1).
    pub fn maxwellian_amplitude(&self, alpha: usize) -> f64 {
        let m = self.mass(alpha);
        self.density(alpha) * m.powf(1.5) / ((2.0 * PI).powf(1.5) * self.partition_function(alpha, 1.0))
    }

    /// Square root of the linearization Maxwellian M_{α,i}(ξ) at u = 0, T = 1.
    pub fn sqrt_maxwellian(&self, alpha: usize, i: usize, xi: &Vec3) -> f64 {
        let m = self.mass(alpha);
        (self.maxwellian_amplitude(alpha) * self.weight(alpha, i)).sqrt()
            * (-0.25 * m * xi.norm_squared() - 0.5 * self.energy(alpha, i)).exp()
    }
}

/// One element of the channel set: species `alpha`, `beta`; pre-collision
/// levels `i` (of α) and `j` (of β); post-collision levels `k` (of α) and
/// `l` (of β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionChannel {
    pub alpha: usize,
    pub beta: usize,
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    /// ΔI = I_k^α + I_l^β − I_i^α − I_j^β.
    pub delta_i: f64,
    /// ((m_α+m_β)/(m_α m_β)) ΔI.
    pub delta_i_tilde: f64,
    /// ((m_α−m_β)/(m_α m_β)) ΔI, present only for unequal masses.
    pub delta_i_hat: Option<f64>,
}

impl CollisionChannel {
    pub fn new(mix: &Mixture, alpha: usize, beta: usize, i: usize, j: usize, k: usize, l: usize) -> Self {
        let (ma, mb) = (mix.mass(alpha), mix.mass(beta));
        let delta_i = mix.energy(alpha, k) + mix.energy(beta, l) - mix.energy(alpha, i) - mix.energy(beta, j);
        let delta_i_tilde = (ma + mb) / (ma * mb) * delta_i;
        let delta_i_hat = (ma != mb).then(|| (ma - mb) / (ma * mb) * delta_i);
        Self {
            alpha,
            beta,
            i,
            j,
            k,
            l,
            delta_i,
            delta_i_tilde,
            delta_i_hat,
        }
    }

    /// Whether the channel is energetically open at relative speed `g_norm`.
    pub fn is_open(&self, g_norm: f64) -> bool {
        g_norm * g_norm > 2.0 * self.delta_i_tilde
    }

    /// The reverse channel (post and pre levels exchanged).
    pub fn reversed(&self, mix: &Mixture) -> Self {
        Self::new(mix, self.alpha, self.beta, self.k, self.l, self.i, self.j)
    }
}

/// All channels, ordered by (α, β, i, j, k, l).
pub fn enumerate_channels(mix: &Mixture) -> Vec<CollisionChannel> {
    let s = mix.num_species();
    let mut out = Vec::new();
    for alpha in 0..s {
        for beta in 0..s {
            let (ra, rb) = (mix.level_count(alpha), mix.level_count(beta));
            for i in 0..ra {
                for j in 0..rb {
                    for k in 0..ra {
                        for l in 0..rb {
                            out.push(CollisionChannel::new(mix, alpha, beta, i, j, k, l));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Parameters of a general Maxwellian.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumParams {
    pub densities: Vec<f64>,
    pub bulk_velocity: Vec3,
    pub temperature: f64,
}

impl EquilibriumParams {
    pub fn new(mix: &Mixture, densities: Vec<f64>, bulk_velocity: Vec3, temperature: f64) -> Result<Self, ModelError> {
        if densities.len() != mix.num_species() {
            return Err(invalid(
                "densities",
                format!("{} entries for {} species", densities.len(), mix.num_species()),
            ));
        }
        if let Some(a) = densities.iter().position(|&n| !(n > 0.0 && n.is_finite())) {
            return Err(invalid(format!("densities[{a}]"), "must be positive"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(invalid("temperature", "must be positive"));
        }
        Ok(Self {
            densities,
            bulk_velocity,
            temperature,
        })
    }

    /// The equilibrium used for linearization: mixture densities, u = 0, T = 1.
    pub fn linearization(mix: &Mixture) -> Self {
        Self {
            densities: mix.species().iter().map(|s| s.density).collect(),
            bulk_velocity: Vec3::zeros(),
            temperature: 1.0,
        }
    }
}

/// Maxwellian component M_{α,i}(ξ) for general (n, u, T).
pub fn maxwellian(mix: &Mixture, params: &EquilibriumParams, alpha: usize, i: usize, xi: &Vec3) -> f64 {
    let t = params.temperature;
    let m = mix.mass(alpha);
    let q = mix.partition_function(alpha, t);
    let c2 = (xi - params.bulk_velocity).norm_squared();
    params.densities[alpha] * mix.weight(alpha, i) * m.powf(1.5) / ((2.0 * PI * t).powf(1.5) * q)
        * (-(m * c2 + 2.0 * mix.energy(alpha, i)) / (2.0 * t)).exp()
}

/// Value of invariant number `q` (0..s+4) at level (α,i) and velocity ξ:
/// e_1..e_s, then m ξ_x, m ξ_y, m ξ_z, then m|ξ|² + 2I.
pub fn invariant_value(mix: &Mixture, q: usize, alpha: usize, i: usize, xi: &Vec3) -> f64 {
    let s = mix.num_species();
    let m = mix.mass(alpha);
    if q < s {
        if q == alpha {
            1.0
        } else {
            0.0
        }
    } else if q < s + 3 {
        m * xi[q - s]
    } else {
        assert_eq!(q, s + 3, "invariant index out of range");
        m * xi.norm_squared() + 2.0 * mix.energy(alpha, i)
    }
}

/// The s+4 collision invariants sampled on the grid in flat layout
/// (level-major, then node).
pub fn collision_invariants(mix: &Mixture, grid: &VelocityGrid) -> Vec<Vec<f64>> {
    sampled_invariants(mix, grid, false)
}

/// The collision invariants multiplied pointwise by M^{1/2} (u = 0, T = 1).
pub fn weighted_null_basis(mix: &Mixture, grid: &VelocityGrid) -> Vec<Vec<f64>> {
    sampled_invariants(mix, grid, true)
}

fn sampled_invariants(mix: &Mixture, grid: &VelocityGrid, weighted: bool) -> Vec<Vec<f64>> {
    let nn = grid.num_nodes();
    let count = mix.num_species() + 4;
    (0..count)
        .map(|q| {
            let mut field = vec![0.0; mix.num_levels() * nn];
            for (lvl, (alpha, i)) in mix.levels_flat().enumerate() {
                for n in 0..nn {
                    let xi = grid.node(n);
                    let w = if weighted { mix.sqrt_maxwellian(alpha, i, &xi) } else { 1.0 };
                    field[lvl * nn + n] = invariant_value(mix, q, alpha, i, &xi) * w;
                }
            }
            field
        })
        .collect()
}
