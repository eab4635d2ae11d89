//! The nonlinear collision operator Q(f,f), its symmetrized weak form, the
//! entropy production and the quadratic term Γ of the perturbation equation.

use rayon::prelude::*;
use thiserror::Error;

use crate::cross_sections::CrossSectionModel;
pub use crate::grid::VelocityGrid;
use crate::kinematics::{omega_post_state, CollisionPair};
use crate::mixture_model::{enumerate_channels, invariant_value, maxwellian, CollisionChannel, EquilibriumParams, Mixture};
pub use crate::quadrature::SphereQuadrature;
use crate::Vec3;

/// A distribution f = (f_{α,i}) that can be evaluated anywhere in velocity
/// space. Closures `(α, i, ξ) -> value` are providers.
pub trait DistributionProvider: Sync {
    fn value(&self, alpha: usize, i: usize, xi: &Vec3) -> f64;
}

impl<F> DistributionProvider for F
where
    F: Fn(usize, usize, &Vec3) -> f64 + Sync,
{
    fn value(&self, alpha: usize, i: usize, xi: &Vec3) -> f64 {
        self(alpha, i, xi)
    }
}

/// A Maxwellian with arbitrary (n, u, T).
pub struct MaxwellianProvider<'a> {
    pub mix: &'a Mixture,
    pub params: EquilibriumParams,
}

impl DistributionProvider for MaxwellianProvider<'_> {
    fn value(&self, alpha: usize, i: usize, xi: &Vec3) -> f64 {
        maxwellian(self.mix, &self.params, alpha, i, xi)
    }
}

/// One collision invariant as a provider.
pub struct InvariantProvider<'a> {
    pub mix: &'a Mixture,
    pub index: usize,
}

impl DistributionProvider for InvariantProvider<'_> {
    fn value(&self, alpha: usize, i: usize, xi: &Vec3) -> f64 {
        invariant_value(self.mix, self.index, alpha, i, xi)
    }
}

/// M^{1/2} h at the linearization equilibrium.
pub struct WeightedPerturbation<'a, H: DistributionProvider> {
    pub mix: &'a Mixture,
    pub h: &'a H,
}

impl<H: DistributionProvider> DistributionProvider for WeightedPerturbation<'_, H> {
    fn value(&self, alpha: usize, i: usize, xi: &Vec3) -> f64 {
        self.mix.sqrt_maxwellian(alpha, i, xi) * self.h.value(alpha, i, xi)
    }
}

/// Grid-sampled distribution in flat layout, trilinearly interpolated
/// between nodes and zero outside the node lattice and outside [−R, R]³.
#[derive(Debug, Clone)]
pub struct GridDistribution {
    grid: VelocityGrid,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl GridDistribution {
    pub fn new(mix: &Mixture, grid: &VelocityGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mix.num_levels() * grid.num_nodes(), "field length mismatch");
        let offsets = (0..mix.num_species()).map(|a| mix.flatten(a, 0)).collect();
        Self {
            grid: grid.clone(),
            offsets,
            values,
        }
    }

    /// Samples a provider at every node.
    pub fn sample(mix: &Mixture, grid: &VelocityGrid, f: &dyn DistributionProvider) -> Self {
        let nn = grid.num_nodes();
        let mut values = vec![0.0; mix.num_levels() * nn];
        for (lvl, (a, i)) in mix.levels_flat().enumerate() {
            for n in 0..nn {
                values[lvl * nn + n] = f.value(a, i, &grid.node(n));
            }
        }
        Self::new(mix, grid, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl DistributionProvider for GridDistribution {
    fn value(&self, alpha: usize, i: usize, xi: &Vec3) -> f64 {
        if !self.grid.contains(xi) {
            return 0.0;
        }
        let n = self.grid.points_per_axis() as isize;
        let (h, r) = (self.grid.spacing(), self.grid.half_width());
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for c in 0..3 {
            let t = (xi[c] + r) / h - 0.5;
            let f = t.floor();
            base[c] = f as isize;
            frac[c] = t - f;
        }
        let block = (self.offsets[alpha] + i) * self.grid.num_nodes();
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = [0isize; 3];
            for c in 0..3 {
                let up = (corner >> c) & 1 == 1;
                idx[c] = base[c] + up as isize;
                w *= if up { frac[c] } else { 1.0 - frac[c] };
            }
            if w == 0.0 || idx.iter().any(|&k| k < 0 || k >= n) {
                continue;
            }
            let flat = self.grid.flat_index(idx[0] as usize, idx[1] as usize, idx[2] as usize);
            acc += w * self.values[block + flat];
        }
        acc
    }
}

/// Shared inputs of the nonlinear evaluations.
#[derive(Clone, Copy)]
pub struct CollisionSetup<'a> {
    pub mix: &'a Mixture,
    pub model: &'a CrossSectionModel,
    pub grid: &'a VelocityGrid,
    pub squad: &'a SphereQuadrature,
}

/// Gain and loss parts of Q_i^α at one velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CollisionTerms {
    pub gain: f64,
    pub loss: f64,
}

impl CollisionTerms {
    pub fn value(&self) -> f64 {
        self.gain - self.loss
    }
}

/// Gain and loss parts of Q_i^α(f,f)(ξ): grid quadrature over ξ*, sphere
/// quadrature over ω. Coincident velocities are skipped.
pub fn q_collision_terms(
    f: &dyn DistributionProvider,
    setup: &CollisionSetup,
    alpha: usize,
    i: usize,
    xi: &Vec3,
) -> CollisionTerms {
    let CollisionSetup { mix, model, grid, squad } = *setup;
    let hw = grid.weight();
    let f_here = f.value(alpha, i, xi);
    let mut terms = CollisionTerms::default();
    for beta in 0..mix.num_species() {
        let (ra, rb) = (mix.level_count(alpha), mix.level_count(beta));
        for m in 0..grid.num_nodes() {
            let xs = grid.node(m);
            let pair = CollisionPair::new(*xi, xs, mix.mass(alpha), mix.mass(beta));
            if pair.g_norm == 0.0 {
                continue;
            }
            for j in 0..rb {
                let f_star = f.value(beta, j, &xs);
                let phi_ij = mix.weight(alpha, i) * mix.weight(beta, j);
                for k in 0..ra {
                    for l in 0..rb {
                        let ch = CollisionChannel::new(mix, alpha, beta, i, j, k, l);
                        let gs = pair.g_norm * model.sigma_iso(mix, &ch, pair.g_norm);
                        if gs == 0.0 {
                            continue;
                        }
                        let phi_kl = mix.weight(alpha, k) * mix.weight(beta, l);
                        for (om, wq) in squad.iter() {
                            let Some(post) = omega_post_state(mix, &pair, &ch, om).open() else {
                                continue;
                            };
                            let w = hw * wq * gs;
                            terms.gain += w * f.value(alpha, k, &post.xi_prime) * f.value(beta, l, &post.xi_star_prime)
                                * (phi_ij / phi_kl);
                            terms.loss += w * f_here * f_star;
                        }
                    }
                }
            }
        }
    }
    terms
}

/// Q_i^α(f,f)(ξ).
pub fn q_collision(f: &dyn DistributionProvider, setup: &CollisionSetup, alpha: usize, i: usize, xi: &Vec3) -> f64 {
    q_collision_terms(f, setup, alpha, i, xi).value()
}

/// Value of a bracket together with the sum of absolute contributions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BracketValue {
    pub value: f64,
    pub scale: f64,
}

/// Visits every quadrature sample (ξ_n, ξ_m, ω, channel) of the symmetrized
/// weak form. The callback receives the channel, the four velocities, and
/// the sample weight φ_iφ_j σ|g| h⁶ w_ω.
fn for_each_sample<A, F>(setup: &CollisionSetup, init: A, visit: F) -> Vec<A>
where
    A: Clone + Send + Sync,
    F: Fn(&mut A, &CollisionChannel, [&Vec3; 4], f64) + Sync,
{
    let CollisionSetup { mix, model, grid, squad } = *setup;
    let channels = enumerate_channels(mix);
    let hw2 = grid.weight() * grid.weight();
    (0..grid.num_nodes())
        .into_par_iter()
        .map(|n| {
            let mut acc = init.clone();
            let xi = grid.node(n);
            for m in 0..grid.num_nodes() {
                let xs = grid.node(m);
                if m == n {
                    continue;
                }
                for ch in &channels {
                    let pair = CollisionPair::new(xi, xs, mix.mass(ch.alpha), mix.mass(ch.beta));
                    let gs = pair.g_norm * model.sigma_iso(mix, ch, pair.g_norm);
                    if gs == 0.0 {
                        continue;
                    }
                    let phi = mix.weight(ch.alpha, ch.i) * mix.weight(ch.beta, ch.j);
                    for (om, wq) in squad.iter() {
                        let Some(post) = omega_post_state(mix, &pair, ch, om).open() else {
                            continue;
                        };
                        visit(&mut acc, ch, [&xi, &xs, &post.xi_prime, &post.xi_star_prime], hw2 * wq * gs * phi);
                    }
                }
            }
            acc
        })
        .collect()
}

fn ratio_terms(f: &dyn DistributionProvider, mix: &Mixture, ch: &CollisionChannel, v: [&Vec3; 4]) -> (f64, f64) {
    let pre = f.value(ch.alpha, ch.i, v[0]) * f.value(ch.beta, ch.j, v[1])
        / (mix.weight(ch.alpha, ch.i) * mix.weight(ch.beta, ch.j));
    let post = f.value(ch.alpha, ch.k, v[2]) * f.value(ch.beta, ch.l, v[3])
        / (mix.weight(ch.alpha, ch.k) * mix.weight(ch.beta, ch.l));
    (pre, post)
}

/// (Q(f,f), g) for each test function, evaluated in the symmetrized form
/// ¼ Σ ∫ (f′f′*/(φ_kφ_l) − ff*/(φ_iφ_j)) (g + g* − g′ − g′*) dA with one
/// shared sample set per (ξ, ξ*, ω, channel).
pub fn weak_bracket(
    f: &dyn DistributionProvider,
    tests: &[&dyn DistributionProvider],
    setup: &CollisionSetup,
) -> Vec<BracketValue> {
    let mix = setup.mix;
    let parts = for_each_sample(setup, vec![BracketValue::default(); tests.len()], |acc, ch, v, w| {
        let (pre, post) = ratio_terms(f, mix, ch, v);
        let amp = 0.25 * w * (post - pre);
        if amp == 0.0 {
            return;
        }
        for (slot, g) in acc.iter_mut().zip(tests) {
            let vals = [
                g.value(ch.alpha, ch.i, v[0]),
                g.value(ch.beta, ch.j, v[1]),
                g.value(ch.alpha, ch.k, v[2]),
                g.value(ch.beta, ch.l, v[3]),
            ];
            slot.value += amp * (vals[0] + vals[1] - vals[2] - vals[3]);
            slot.scale += amp.abs() * vals.iter().map(|x| x.abs()).sum::<f64>();
        }
    });
    let mut out = vec![BracketValue::default(); tests.len()];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            o.value += v.value;
            o.scale += v.scale;
        }
    }
    out
}

/// (Q(f,f), g) by direct quadrature: Σ_n h³ Σ_{α,i} g_{α,i}(ξ_n) Q_i^α(ξ_n).
pub fn direct_bracket(f: &dyn DistributionProvider, g: &dyn DistributionProvider, setup: &CollisionSetup) -> f64 {
    let CollisionSetup { mix, grid, .. } = *setup;
    let parts: Vec<f64> = (0..grid.num_nodes())
        .into_par_iter()
        .map(|n| {
            let xi = grid.node(n);
            mix.levels_flat()
                .map(|(a, i)| g.value(a, i, &xi) * q_collision(f, setup, a, i, &xi))
                .sum::<f64>()
        })
        .collect();
    grid.weight() * parts.iter().sum::<f64>()
}

/// A nonpositive distribution value met by the entropy evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("distribution value {value} at species {alpha}, level {level}, velocity ({x}, {y}, {z}) is not positive")]
pub struct DomainError {
    pub alpha: usize,
    pub level: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub value: f64,
}

/// Entropy production (Q(f,f), log(f/φ)). Each sample contributes
/// −¼ w X (x − 1) log x with X = ff*/(φ_iφ_j) and x = X′/X, so the
/// result is nonpositive sample by sample.
pub fn entropy_production(f: &dyn DistributionProvider, setup: &CollisionSetup) -> Result<BracketValue, DomainError> {
    let mix = setup.mix;
    let parts = for_each_sample(setup, Ok(BracketValue::default()), |acc: &mut Result<BracketValue, DomainError>, ch, v, w| {
        let Ok(slot) = acc else { return };
        let roles = [(ch.alpha, ch.i), (ch.beta, ch.j), (ch.alpha, ch.k), (ch.beta, ch.l)];
        let mut vals = [0.0; 4];
        for (r, &(a, lvl)) in roles.iter().enumerate() {
            let val = f.value(a, lvl, v[r]);
            if !(val > 0.0) {
                *acc = Err(DomainError {
                    alpha: a,
                    level: lvl,
                    x: v[r].x,
                    y: v[r].y,
                    z: v[r].z,
                    value: val,
                });
                return;
            }
            vals[r] = val;
        }
        let pre = vals[0] * vals[1] / (mix.weight(ch.alpha, ch.i) * mix.weight(ch.beta, ch.j));
        let post = vals[2] * vals[3] / (mix.weight(ch.alpha, ch.k) * mix.weight(ch.beta, ch.l));
        let x = post / pre;
        let term = -0.25 * w * pre * (x - 1.0) * x.ln();
        slot.value += term;
        slot.scale += 0.25 * w * (pre + post);
    });
    let mut out = BracketValue::default();
    for p in parts {
        let p = p?;
        out.value += p.value;
        out.scale += p.scale;
    }
    Ok(out)
}

/// Γ_{α,i}(h,h)(ξ) = M_{α,i}^{−1/2} Q_i^α(M^{1/2}h, M^{1/2}h) at the
/// linearization equilibrium.
pub fn gamma<H: DistributionProvider>(h: &H, setup: &CollisionSetup, alpha: usize, i: usize, xi: &Vec3) -> f64 {
    let f = WeightedPerturbation { mix: setup.mix, h };
    q_collision(&f, setup, alpha, i, xi) / setup.mix.sqrt_maxwellian(alpha, i, xi)
}

/// (Γ(h,h), M^{1/2}ψ) for every collision invariant ψ, computed through the
/// symmetrized weak form.
pub fn gamma_invariant_brackets<H: DistributionProvider>(h: &H, setup: &CollisionSetup) -> Vec<BracketValue> {
    let f = WeightedPerturbation { mix: setup.mix, h };
    let inv: Vec<InvariantProvider> = (0..setup.mix.num_species() + 4)
        .map(|index| InvariantProvider { mix: setup.mix, index })
        .collect();
    let tests: Vec<&dyn DistributionProvider> = inv.iter().map(|p| p as &dyn DistributionProvider).collect();
    weak_bracket(&f, &tests, setup)
}
