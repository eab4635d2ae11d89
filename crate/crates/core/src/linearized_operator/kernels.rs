//! The three kernel families of the integral part K.
//!
//! Index conventions follow the linearized operator
//! `K_{α,i} h = Σ_β Σ_j ∫ k^{(α)}_{αβ,ij} h_{α,j*} + (k^{(β,2)}_{αβ,ij} − k^{(β,1)}_{αβ,ij}) h_{β,j*} dξ*`:
//! in [`kernel_k3`] both `i` and `j` are levels of α and β is the partner
//! species; in [`kernel_k1`] and [`kernel_k2`] `i` is a level of α and `j`
//! a level of β.
//!
//! Hard-sphere kernels have closed forms: the plane integrals reduce to a
//! Gaussian and the sphere integral to 4π sinh κ / κ. The quadrature routes
//! evaluate the same integrals through the collision parametrizations and
//! work for every isotropic family.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cross_sections::CrossSectionModel;
use crate::kinematics::{
    swapped_plane_post_state, partner_plane_post_state, partner_sphere_post_state, plane_basis, CollisionPair,
};
use crate::mixture_model::{CollisionChannel, Mixture};
use crate::quadrature::{PlaneQuadrature, SphereQuadrature};
use crate::Vec3;

/// How kernel values are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelRoute {
    /// Closed forms for hard spheres, quadrature otherwise.
    #[default]
    Auto,
    ClosedForm,
    Quadrature,
}

/// Mixture, model, quadrature rules and precomputed constants.
#[derive(Debug, Clone)]
pub struct KernelContext {
    pub mix: Mixture,
    pub model: CrossSectionModel,
    /// Rule for the ω integral of k^{(β,1)}.
    pub squad: SphereQuadrature,
    /// Rule for the sphere integral of k^{(β,2)} with unequal masses.
    pub k2_squad: SphereQuadrature,
    pub pquad: PlaneQuadrature,
    route: KernelRoute,
    amp: Vec<f64>,
    half_boltzmann: Vec<Vec<f64>>,
    inv_sqrt_phi: Vec<Vec<f64>>,
}

impl KernelContext {
    pub fn new(
        mix: Mixture,
        model: CrossSectionModel,
        squad: SphereQuadrature,
        k2_squad: SphereQuadrature,
        pquad: PlaneQuadrature,
        route: KernelRoute,
    ) -> Self {
        let route = match (route, model.is_hard_sphere()) {
            (KernelRoute::Auto, true) => KernelRoute::ClosedForm,
            (KernelRoute::Auto, false) => KernelRoute::Quadrature,
            (KernelRoute::ClosedForm, false) => panic!("closed-form kernels exist only for hard spheres"),
            (r, _) => r,
        };
        let s = mix.num_species();
        let amp = (0..s).map(|a| mix.maxwellian_amplitude(a)).collect();
        let half_boltzmann = (0..s)
            .map(|a| mix.species()[a].levels.iter().map(|e| (-0.5 * e).exp()).collect())
            .collect();
        let inv_sqrt_phi = (0..s)
            .map(|a| mix.species()[a].weights.iter().map(|w| 1.0 / w.sqrt()).collect())
            .collect();
        Self {
            mix,
            model,
            squad,
            k2_squad,
            pquad,
            route,
            amp,
            half_boltzmann,
            inv_sqrt_phi,
        }
    }

    /// Default rules: 6×12 sphere, 24×48 sphere for k^{(β,2)}, 24×16 plane
    /// with cutoff 7/√(min m).
    pub fn with_defaults(mix: Mixture, model: CrossSectionModel) -> Self {
        let pquad = PlaneQuadrature::with_defaults(mix.min_mass());
        Self::new(
            mix,
            model,
            SphereQuadrature::default(),
            SphereQuadrature::new(24, 48),
            pquad,
            KernelRoute::Auto,
        )
    }

    /// The resolved route (never `Auto`).
    pub fn route(&self) -> KernelRoute {
        self.route
    }

    /// The same context evaluated along another route.
    pub fn with_route(&self, route: KernelRoute) -> Self {
        Self::new(
            self.mix.clone(),
            self.model.clone(),
            self.squad.clone(),
            self.k2_squad.clone(),
            self.pquad.clone(),
            route,
        )
    }

    fn resolve(&self, route: Option<KernelRoute>) -> KernelRoute {
        match route.unwrap_or(self.route) {
            KernelRoute::Auto => self.route,
            KernelRoute::ClosedForm => {
                assert!(self.model.is_hard_sphere(), "closed-form kernels exist only for hard spheres");
                KernelRoute::ClosedForm
            }
            KernelRoute::Quadrature => KernelRoute::Quadrature,
        }
    }

    fn level_index(&self, alpha: usize, i: usize) -> usize {
        self.mix.flatten(alpha, i)
    }
}

fn check_distinct(xi: &Vec3, xs: &Vec3) {
    assert!(xi != xs, "kernels are evaluated at distinct velocities only");
}

/// k^{(β,1)}_{αβ,ij}(ξ, ξ*) = (M_{α,i} M_{β,j*})^{1/2} |g| Σ_{k,l} ∫ σ_{ij,kl} dω.
pub fn kernel_k1(
    ctx: &KernelContext,
    alpha: usize,
    beta: usize,
    i: usize,
    j: usize,
    xi: &Vec3,
    xs: &Vec3,
    route: Option<KernelRoute>,
) -> f64 {
    check_distinct(xi, xs);
    let mix = &ctx.mix;
    let g = (xi - xs).norm();
    let amp = (mix.sqrt_maxwellian(alpha, i, xi) * mix.sqrt_maxwellian(beta, j, xs)) * g;
    let mut acc = 0.0;
    for k in 0..mix.level_count(alpha) {
        for l in 0..mix.level_count(beta) {
            let ch = CollisionChannel::new(mix, alpha, beta, i, j, k, l);
            acc += match ctx.resolve(route) {
                KernelRoute::Quadrature => {
                    let n = (xi - xs) / g;
                    ctx.squad
                        .iter()
                        .map(|(om, w)| w * ctx.model.sigma(mix, &ch, g, om.dot(&n)))
                        .sum::<f64>()
                }
                _ => 4.0 * PI * ctx.model.sigma_iso(mix, &ch, g),
            };
        }
    }
    amp * acc
}

/// k^{(α)}_{αβ,ij}(ξ, ξ*): the gain kernel whose perturbation sits on the
/// second species-α velocity, integrated over the plane orthogonal to g.
pub fn kernel_k3(
    ctx: &KernelContext,
    alpha: usize,
    beta: usize,
    i: usize,
    j: usize,
    xi: &Vec3,
    xs: &Vec3,
    route: Option<KernelRoute>,
) -> f64 {
    check_distinct(xi, xs);
    match ctx.resolve(route) {
        KernelRoute::Quadrature => k3_quadrature(ctx, alpha, beta, i, j, xi, xs),
        _ => k3_closed(ctx, alpha, beta, i, j, xi, xs),
    }
}

/// k^{(β,2)}_{αβ,ij}(ξ, ξ*): the gain kernel whose perturbation sits on the
/// species-β velocity. Unequal masses integrate over a sphere, equal masses
/// over the plane orthogonal to g.
pub fn kernel_k2(
    ctx: &KernelContext,
    alpha: usize,
    beta: usize,
    i: usize,
    j: usize,
    xi: &Vec3,
    xs: &Vec3,
    route: Option<KernelRoute>,
) -> f64 {
    check_distinct(xi, xs);
    let equal = ctx.mix.mass(alpha) == ctx.mix.mass(beta);
    match (ctx.resolve(route), equal) {
        (KernelRoute::Quadrature, true) => k2_equal_quadrature(ctx, alpha, beta, i, j, xi, xs),
        (KernelRoute::Quadrature, false) => k2_sphere_quadrature(ctx, alpha, beta, i, j, xi, xs),
        (_, true) => k2_equal_closed(ctx, alpha, beta, i, j, xi, xs),
        (_, false) => k2_sphere_closed(ctx, alpha, beta, i, j, xi, xs),
    }
}

/// The combined kernel k^{(β)} = k^{(β,2)} − k^{(β,1)}.
pub fn kernel_kb(
    ctx: &KernelContext,
    alpha: usize,
    beta: usize,
    i: usize,
    j: usize,
    xi: &Vec3,
    xs: &Vec3,
    route: Option<KernelRoute>,
) -> f64 {
    kernel_k2(ctx, alpha, beta, i, j, xi, xs, route) - kernel_k1(ctx, alpha, beta, i, j, xi, xs, route)
}

fn k3_closed(ctx: &KernelContext, alpha: usize, beta: usize, i: usize, j: usize, xi: &Vec3, xs: &Vec3) -> f64 {
    let mix = &ctx.mix;
    let (ma, mb) = (mix.mass(alpha), mix.mass(beta));
    let gv = xi - xs;
    let g = gv.norm();
    let cn = 0.5 * (xi + xs).dot(&gv) / g;
    let pref = (ma + mb) * (ma + mb) / (mb * mb) * (2.0 * PI / mb) * ctx.model.strength(alpha, beta) * ctx.amp[beta]
        * ctx.inv_sqrt_phi[alpha][i]
        * ctx.inv_sqrt_phi[alpha][j]
        / g;
    let tail = ma * ma * g * g / (8.0 * mb);
    let (ei, ej) = (mix.energy(alpha, i), mix.energy(alpha, j));
    let mut acc = 0.0;
    for k in 0..mix.level_count(beta) {
        for l in 0..mix.level_count(beta) {
            let d = ei + mix.energy(beta, k) - ej - mix.energy(beta, l);
            let t = cn + d / (ma * g);
            acc += ctx.half_boltzmann[beta][k] * ctx.half_boltzmann[beta][l] * (-0.5 * mb * t * t - tail).exp();
        }
    }
    pref * acc
}

fn k2_equal_closed(ctx: &KernelContext, alpha: usize, beta: usize, i: usize, j: usize, xi: &Vec3, xs: &Vec3) -> f64 {
    let mix = &ctx.mix;
    let m = mix.mass(alpha);
    let gv = xi - xs;
    let g = gv.norm();
    let cn = 0.5 * (xi + xs).dot(&gv) / g;
    let pref = 4.0 * (2.0 * PI / m) * ctx.model.strength(alpha, beta) * (ctx.amp[alpha] * ctx.amp[beta]).sqrt()
        * ctx.inv_sqrt_phi[alpha][i]
        * ctx.inv_sqrt_phi[beta][j]
        / g;
    let tail = m * g * g / 8.0;
    let (ei, ej) = (mix.energy(alpha, i), mix.energy(beta, j));
    let mut acc = 0.0;
    for k in 0..mix.level_count(alpha) {
        for l in 0..mix.level_count(beta) {
            let d = mix.energy(alpha, k) + ej - ei - mix.energy(beta, l);
            let t = cn - d / (m * g);
            acc += ctx.half_boltzmann[alpha][k] * ctx.half_boltzmann[beta][l] * (-0.5 * m * t * t - tail).exp();
        }
    }
    pref * acc
}

/// 4π e^{−x} sinh(κ)/κ without overflow.
fn sphere_exp_average(kappa: f64, x: f64) -> f64 {
    if kappa < 1e-6 {
        4.0 * PI * (-x).exp() * (1.0 + kappa * kappa / 6.0)
    } else {
        4.0 * PI * (kappa - x).exp() * (-(-2.0 * kappa).exp_m1()) / (2.0 * kappa)
    }
}

fn k2_sphere_closed(ctx: &KernelContext, alpha: usize, beta: usize, i: usize, j: usize, xi: &Vec3, xs: &Vec3) -> f64 {
    let mix = &ctx.mix;
    let (ma, mb) = (mix.mass(alpha), mix.mass(beta));
    let dm = ma - mb;
    let gv = xi - xs;
    let g2 = gv.norm_squared();
    let gc = (xi * ma - xs * mb) / dm;
    let gc2 = gc.norm_squared();
    let gcn = gc2.sqrt();
    let pref = (ma + mb) * (ma + mb) / (dm * dm) * ctx.model.strength(alpha, beta) * (ctx.amp[alpha] * ctx.amp[beta]).sqrt()
        * ctx.inv_sqrt_phi[alpha][i]
        * ctx.inv_sqrt_phi[beta][j];
    let (ei, ej) = (mix.energy(alpha, i), mix.energy(beta, j));
    let mut acc = 0.0;
    for k in 0..mix.level_count(alpha) {
        for l in 0..mix.level_count(beta) {
            let d = mix.energy(alpha, k) + ej - ei - mix.energy(beta, l);
            let gp2 = g2 + 2.0 * dm / (ma * mb) * d;
            if gp2 <= 0.0 {
                continue;
            }
            let gp = gp2.sqrt();
            let x = 0.25 * ((ma + mb) * gc2 + ma * mb * (ma + mb) * gp2 / (dm * dm));
            let kappa = ma * mb * gp * gcn / dm.abs();
            acc += ctx.half_boltzmann[alpha][k] * ctx.half_boltzmann[beta][l] * gp * sphere_exp_average(kappa, x);
        }
    }
    pref * acc
}

/// Regular part of the kernel row at coincident velocities (closed forms):
/// k^{(β,2)} for unequal masses minus k^{(β,1)}, both finite at ξ = ξ*.
fn regular_closed(ctx: &KernelContext, alpha: usize, beta: usize, i: usize, j: usize, xi: &Vec3, xs: &Vec3) -> f64 {
    let mix = &ctx.mix;
    let mut v = 0.0;
    if mix.mass(alpha) != mix.mass(beta) {
        v += k2_sphere_closed(ctx, alpha, beta, i, j, xi, xs);
    }
    let g = (xi - xs).norm();
    let amp = 4.0 * PI * mix.sqrt_maxwellian(alpha, i, xi) * mix.sqrt_maxwellian(beta, j, xs);
    let mut acc = 0.0;
    for k in 0..mix.level_count(alpha) {
        for l in 0..mix.level_count(beta) {
            let ch = CollisionChannel::new(mix, alpha, beta, i, j, k, l);
            acc += ctx.model.speed_sigma(mix, &ch, g);
        }
    }
    v - amp * acc
}

fn plane_frame(xi: &Vec3, xs: &Vec3) -> (Vec3, Vec3, Vec3) {
    let gv = xi - xs;
    let n = gv / gv.norm();
    let c = 0.5 * (xi + xs);
    let c_perp = c - n * c.dot(&n);
    let (e1, e2) = plane_basis(xi, xs);
    (-c_perp, e1, e2)
}

fn k3_quadrature(ctx: &KernelContext, alpha: usize, beta: usize, i: usize, j: usize, xi: &Vec3, xs: &Vec3) -> f64 {
    let mix = &ctx.mix;
    let (ma, mb) = (mix.mass(alpha), mix.mass(beta));
    let pair = CollisionPair::new(*xi, *xs, ma, ma);
    let (centre, e1, e2) = plane_frame(xi, xs);
    let pref = (ma + mb) * (ma + mb) / (mb * mb) / pair.g_norm;
    let mut acc = 0.0;
    for k in 0..mix.level_count(beta) {
        for l in 0..mix.level_count(beta) {
            let ch = CollisionChannel::new(mix, alpha, beta, i, k, j, l);
            let ratio = (mix.weight(alpha, i) * mix.weight(beta, k) / (mix.weight(alpha, j) * mix.weight(beta, l))).sqrt();
            ctx.pquad.for_each(&centre, &e1, &e2, |w, wt| {
                let Some(post) = swapped_plane_post_state(mix, &pair, &ch, &w).open() else {
                    return;
                };
                let g_in = (xi - post.xi_prime).norm();
                let s = ctx.model.sigma(mix, &ch, g_in, 0.0);
                if s == 0.0 {
                    return;
                }
                let mm = mix.sqrt_maxwellian(beta, k, &post.xi_prime) * mix.sqrt_maxwellian(beta, l, &post.xi_star_prime);
                acc += wt * g_in * mm / post.g_prime_norm * ratio * s;
            });
        }
    }
    pref * acc
}

fn k2_equal_quadrature(ctx: &KernelContext, alpha: usize, beta: usize, i: usize, j: usize, xi: &Vec3, xs: &Vec3) -> f64 {
    let mix = &ctx.mix;
    let m = mix.mass(alpha);
    let pair = CollisionPair::new(*xi, *xs, m, m);
    let (centre, e1, e2) = plane_frame(xi, xs);
    let pref = 4.0 / pair.g_norm;
    let mut acc = 0.0;
    for k in 0..mix.level_count(alpha) {
        for l in 0..mix.level_count(beta) {
            let ch = CollisionChannel::new(mix, alpha, beta, i, l, k, j);
            let ratio = (mix.weight(alpha, i) * mix.weight(beta, l) / (mix.weight(alpha, k) * mix.weight(beta, j))).sqrt();
            ctx.pquad.for_each(&centre, &e1, &e2, |w, wt| {
                let Some(post) = partner_plane_post_state(mix, &pair, &ch, &w).open() else {
                    return;
                };
                let g_in = (xi - post.xi_star_prime).norm();
                let s = ctx.model.sigma(mix, &ch, g_in, 0.0);
                if s == 0.0 {
                    return;
                }
                let mm = mix.sqrt_maxwellian(alpha, k, &post.xi_prime) * mix.sqrt_maxwellian(beta, l, &post.xi_star_prime);
                acc += wt * g_in * mm / post.g_prime_norm * ratio * s;
            });
        }
    }
    pref * acc
}

fn k2_sphere_quadrature(ctx: &KernelContext, alpha: usize, beta: usize, i: usize, j: usize, xi: &Vec3, xs: &Vec3) -> f64 {
    let mix = &ctx.mix;
    let (ma, mb) = (mix.mass(alpha), mix.mass(beta));
    let pair = CollisionPair::new(*xi, *xs, ma, mb);
    let pref = (ma + mb) * (ma + mb) / ((ma - mb) * (ma - mb));
    let mut acc = 0.0;
    for k in 0..mix.level_count(alpha) {
        for l in 0..mix.level_count(beta) {
            let ch = CollisionChannel::new(mix, alpha, beta, i, l, k, j);
            let ratio = (mix.weight(alpha, i) * mix.weight(beta, l) / (mix.weight(alpha, k) * mix.weight(beta, j))).sqrt();
            for (om, wq) in ctx.k2_squad.iter() {
                let Some(post) = partner_sphere_post_state(mix, &pair, &ch, om).open() else {
                    continue;
                };
                let g_in = (xi - post.xi_star_prime).norm();
                let g_out = (post.xi_prime - xs).norm();
                if g_in == 0.0 || g_out == 0.0 {
                    continue;
                }
                let s = ctx.model.sigma(mix, &ch, g_in, 0.0);
                let mm = mix.sqrt_maxwellian(alpha, k, &post.xi_prime) * mix.sqrt_maxwellian(beta, l, &post.xi_star_prime);
                acc += wq * mm * g_in * post.g_prime_norm / g_out * ratio * s;
            }
        }
    }
    pref * acc
}

/// Row of the combined kernel for the (α,i) row at (ξ, ξ*): entry ι(β,j) is
/// δ_{αβ} Σ_γ k^{(α)}_{αγ,ij} + k^{(β,2)}_{αβ,ij} − k^{(β,1)}_{αβ,ij}.
pub fn kernel_row(ctx: &KernelContext, alpha: usize, i: usize, xi: &Vec3, xs: &Vec3, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    kernel_row_singular(ctx, alpha, i, xi, xs, out);
    let mix = &ctx.mix;
    for beta in 0..mix.num_species() {
        for j in 0..mix.level_count(beta) {
            let col = ctx.level_index(beta, j);
            out[col] += match ctx.route {
                KernelRoute::Quadrature => {
                    let k2 = if mix.mass(alpha) != mix.mass(beta) {
                        k2_sphere_quadrature(ctx, alpha, beta, i, j, xi, xs)
                    } else {
                        0.0
                    };
                    k2 - kernel_k1(ctx, alpha, beta, i, j, xi, xs, Some(KernelRoute::Quadrature))
                }
                _ => regular_closed(ctx, alpha, beta, i, j, xi, xs),
            };
        }
    }
}

/// Part of [`kernel_row`] carrying the 1/|g| singularity: k^{(α)} for every
/// partner, and k^{(β,2)} for partners of equal mass. Adds into `out`.
pub fn kernel_row_singular(ctx: &KernelContext, alpha: usize, i: usize, xi: &Vec3, xs: &Vec3, out: &mut [f64]) {
    let mix = &ctx.mix;
    let quad = ctx.route == KernelRoute::Quadrature;
    for j in 0..mix.level_count(alpha) {
        let col = ctx.level_index(alpha, j);
        for gamma in 0..mix.num_species() {
            out[col] += if quad {
                k3_quadrature(ctx, alpha, gamma, i, j, xi, xs)
            } else {
                k3_closed(ctx, alpha, gamma, i, j, xi, xs)
            };
        }
    }
    for beta in 0..mix.num_species() {
        if mix.mass(alpha) != mix.mass(beta) {
            continue;
        }
        for j in 0..mix.level_count(beta) {
            let col = ctx.level_index(beta, j);
            out[col] += if quad {
                k2_equal_quadrature(ctx, alpha, beta, i, j, xi, xs)
            } else {
                k2_equal_closed(ctx, alpha, beta, i, j, xi, xs)
            };
        }
    }
}

/// Part of [`kernel_row`] without the 1/|g| singularity, evaluated at
/// coincident velocities. Available for the closed-form route only.
pub fn kernel_row_regular_at_coincidence(ctx: &KernelContext, alpha: usize, i: usize, xi: &Vec3, out: &mut [f64]) {
    assert_eq!(ctx.route, KernelRoute::ClosedForm, "coincident-velocity limits need closed forms");
    let mix = &ctx.mix;
    for beta in 0..mix.num_species() {
        for j in 0..mix.level_count(beta) {
            out[ctx.level_index(beta, j)] += regular_closed(ctx, alpha, beta, i, j, xi, xi);
        }
    }
}
