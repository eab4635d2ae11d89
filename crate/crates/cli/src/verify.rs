//! The acceptance suite. Every criterion is evaluated at the scale of one
//! configuration; [`verify`] runs them all and [`validate`] the cheap
//! identity subset.

use std::f64::consts::PI;
use std::time::Instant;

use polykin_core::cross_sections::{microreversibility_residual, symmetry_residuals};
use polykin_core::kinematics::{
    swapped_plane_post_state, partner_plane_post_state, partner_sphere_post_state, check_conservation, mass_ratio_rho,
    omega_post_state, plane_basis, CollisionPair, Pairing,
};
use polykin_core::linearized_operator::{
    assemble, kernel_k1, kernel_k2, kernel_k3, kernel_kb, nu_with, write_dump, Assembly, KernelContext, MatrixKind,
    NuQuadrature,
};
use polykin_core::mc_oracle::{
    mass_ratio_random_check, mc_kernel_k1, mc_kernel_k2, mc_kernel_k3, mc_nu, mc_weak_bracket, sample_rng, McConfig,
    MIN_SAMPLES,
};
use polykin_core::mixture_model::{enumerate_channels, weighted_null_basis, EquilibriumParams};
use polykin_core::nonlinear_collision::{
    entropy_production, q_collision_terms, weak_bracket, CollisionSetup, DistributionProvider, InvariantProvider,
    MaxwellianProvider,
};
use polykin_core::spectral_analysis::{coercivity_lambda, spectral_report, SpectralInputs};
use polykin_core::{CrossSectionModel, Mixture, Species, Vec3, VelocityGrid};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::Resolved;
use crate::report::{CheckRecord, VerificationReport};

/// Random-stream tags, one per check family.
mod stream {
    pub const DISTRIBUTIONS: u64 = 1;
    pub const SYMMETRY: u64 = 2;
    pub const KINEMATICS: u64 = 3;
    pub const NU_POINTS: u64 = 4;
    pub const KERNEL_PAIRS: u64 = 5;
    pub const ORACLE_POINTS: u64 = 6;
}

/// A generator for check family `tag`, independent of the MC sample streams.
fn rng(seed: u64, tag: u64) -> impl Rng {
    sample_rng(seed ^ 0x9e37_79b9_7f4a_7c15, u64::MAX - tag)
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

/// Positive test distribution: per level, a sum of two isotropic Gaussians
/// with random amplitudes, centres and widths.
#[derive(Debug, Clone)]
pub struct GaussianBlobs {
    amps: Vec<Vec<[f64; 2]>>,
    centres: [Vec3; 2],
    widths: [f64; 2],
    masses: Vec<f64>,
}

impl GaussianBlobs {
    pub fn random(mix: &Mixture, rng: &mut impl Rng) -> Self {
        let amps = (0..mix.num_species())
            .map(|a| {
                (0..mix.level_count(a))
                    .map(|_| [rng.random_range(0.2..1.5), rng.random_range(0.05..0.8)])
                    .collect()
            })
            .collect();
        let mut centre = || Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let centres = [centre() * 0.5, centre()];
        let widths = [rng.random_range(0.8..1.3), rng.random_range(0.6..1.1)];
        Self {
            amps,
            centres,
            widths,
            masses: (0..mix.num_species()).map(|a| mix.mass(a)).collect(),
        }
    }
}

impl DistributionProvider for GaussianBlobs {
    fn value(&self, alpha: usize, i: usize, xi: &Vec3) -> f64 {
        let m = self.masses[alpha];
        let a = &self.amps[alpha][i];
        (0..2)
            .map(|b| {
                let s2 = self.widths[b] * self.widths[b] / m;
                a[b] * (-(xi - self.centres[b]).norm_squared() / (2.0 * s2)).exp()
            })
            .sum()
    }
}

/// The three equilibria of the annihilation checks.
fn maxwellian_settings(mix: &Mixture) -> Vec<EquilibriumParams> {
    let s = mix.num_species();
    let n0: Vec<f64> = (0..s).map(|a| mix.density(a)).collect();
    let n1: Vec<f64> = (0..s).map(|a| 0.5 + 0.75 * a as f64).collect();
    let n2: Vec<f64> = (0..s).map(|a| 1.7 - 0.4 * a as f64 / s as f64).collect();
    vec![
        EquilibriumParams::new(mix, n0, Vec3::zeros(), 1.0).expect("valid"),
        EquilibriumParams::new(mix, n1, Vec3::new(0.3, -0.2, 0.1), 1.3).expect("valid"),
        EquilibriumParams::new(mix, n2, Vec3::new(-0.4, 0.1, 0.25), 0.7).expect("valid"),
    ]
}

struct IdentitySetup {
    grid: VelocityGrid,
    squad: polykin_core::quadrature::SphereQuadrature,
}

impl IdentitySetup {
    fn new(cfg: &Resolved) -> Self {
        Self {
            grid: cfg.grid(cfg.config.checks.identity_points),
            squad: cfg.config.checks.identity_sphere.build(),
        }
    }

    fn setup<'a>(&'a self, cfg: &'a Resolved) -> CollisionSetup<'a> {
        CollisionSetup {
            mix: &cfg.mixture,
            model: &cfg.config.cross_section,
            grid: &self.grid,
            squad: &self.squad,
        }
    }

    fn echo(&self) -> serde_json::Value {
        let (p, a) = self.squad.orders();
        json!({"grid_points": self.grid.points_per_axis(), "half_width": self.grid.half_width(), "sphere": [p, a]})
    }
}

/// Criterion 1: Q(M,M) = 0 relative to the loss term, node by node.
pub fn maxwellian_annihilation(cfg: &Resolved) -> Vec<CheckRecord> {
    use rayon::prelude::*;
    let id = IdentitySetup::new(cfg);
    let setup = id.setup(cfg);
    let mix = &cfg.mixture;
    maxwellian_settings(mix)
        .into_iter()
        .enumerate()
        .map(|(k, params)| {
            let echo = json!({"densities": params.densities, "bulk_velocity": params.bulk_velocity.as_slice(),
                "temperature": params.temperature, "identity": id.echo()});
            let m = MaxwellianProvider { mix, params };
            let worst = (0..id.grid.num_nodes())
                .into_par_iter()
                .map(|n| {
                    let xi = id.grid.node(n);
                    mix.levels_flat()
                        .map(|(a, i)| {
                            let t = q_collision_terms(&m, &setup, a, i, &xi);
                            if t.loss == 0.0 {
                                t.gain.abs()
                            } else {
                                (t.gain - t.loss).abs() / t.loss
                            }
                        })
                        .fold(0.0f64, f64::max)
                })
                .reduce(|| 0.0, f64::max);
            CheckRecord::at_most(1, format!("maxwellian_annihilation[{k}]"), worst, 1e-12).with_config(echo)
        })
        .collect()
}

/// Criterion 2: the weak form vanishes against every invariant.
pub fn conservation(cfg: &Resolved) -> Vec<CheckRecord> {
    let id = IdentitySetup::new(cfg);
    let setup = id.setup(cfg);
    let mix = &cfg.mixture;
    let invariants: Vec<InvariantProvider> = (0..mix.num_species() + 4).map(|index| InvariantProvider { mix, index }).collect();
    let tests: Vec<&dyn DistributionProvider> = invariants.iter().map(|p| p as &dyn DistributionProvider).collect();
    let mut r = rng(cfg.config.mc.seed, stream::DISTRIBUTIONS);
    let count = cfg.config.checks.distributions;
    let mut worst = 0.0f64;
    for _ in 0..count {
        let f = GaussianBlobs::random(mix, &mut r);
        for b in weak_bracket(&f, &tests, &setup) {
            let rel = if b.scale == 0.0 { b.value.abs() } else { b.value.abs() / b.scale };
            worst = worst.max(rel);
        }
    }
    vec![CheckRecord::at_most(2, "invariant_brackets", worst, 1e-12)
        .with_config(json!({"distributions": count, "invariants": tests.len(), "identity": id.echo()}))]
}

/// Criterion 3: entropy production is nonpositive and vanishes at equilibrium.
pub fn entropy_sign(cfg: &Resolved) -> Vec<CheckRecord> {
    let id = IdentitySetup::new(cfg);
    let setup = id.setup(cfg);
    let mix = &cfg.mixture;
    let mut r = rng(cfg.config.mc.seed, stream::DISTRIBUTIONS + 100);
    let count = cfg.config.checks.entropy_distributions;
    let mut largest = f64::NEG_INFINITY;
    let mut domain_ok = true;
    for _ in 0..count {
        let f = GaussianBlobs::random(mix, &mut r);
        match entropy_production(&f, &setup) {
            Ok(b) => largest = largest.max(b.value),
            Err(_) => domain_ok = false,
        }
    }
    let mut out = vec![
        CheckRecord::condition(3, "entropy_domain", domain_ok, 0.0).with_config(json!({"distributions": count})),
        CheckRecord::at_most(3, "entropy_production_max", largest, 0.0)
            .with_config(json!({"distributions": count, "identity": id.echo()})),
    ];
    let mut worst = 0.0f64;
    for params in maxwellian_settings(mix) {
        let m = MaxwellianProvider { mix, params };
        match entropy_production(&m, &setup) {
            Ok(b) => worst = worst.max(if b.scale == 0.0 { b.value.abs() } else { b.value.abs() / b.scale }),
            Err(_) => worst = f64::INFINITY,
        }
    }
    out.push(CheckRecord::at_most(3, "entropy_production_maxwellian", worst, 1e-12).with_config(json!({"settings": 3})));
    out
}

/// The model of the configuration and a default of the other family.
fn both_families(cfg: &Resolved) -> Vec<(&'static str, CrossSectionModel)> {
    let s = cfg.mixture.num_species();
    match &cfg.config.cross_section {
        m @ CrossSectionModel::HardSphere { .. } => vec![
            ("hard_sphere", m.clone()),
            ("grad_bounded", CrossSectionModel::GradBounded { c: 1.0, gamma: 0.5 }),
        ],
        m @ CrossSectionModel::GradBounded { .. } => vec![
            ("hard_sphere", CrossSectionModel::uniform_hard_sphere(s, 1.0)),
            ("grad_bounded", m.clone()),
        ],
    }
}

/// Criterion 4: microreversibility and the symmetry relations.
pub fn cross_section_identities(cfg: &Resolved) -> Vec<CheckRecord> {
    let mix = &cfg.mixture;
    let channels = enumerate_channels(mix);
    let samples = cfg.config.checks.symmetry_samples;
    let scale = 5.0 / mix.min_mass().sqrt();
    let mut out = Vec::new();
    for (k, (family, model)) in both_families(cfg).into_iter().enumerate() {
        let mut r = rng(cfg.config.mc.seed, stream::SYMMETRY + 10 * k as u64);
        let (mut mr, mut partner, mut same, mut reflect) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..samples {
            let ch = &channels[r.random_range(0..channels.len())];
            // Kinetic energy above the threshold of the channel and of its
            // reverse; nearer the threshold the reverse speed loses digits
            // to cancellation (relative error ≈ ε|ΔĨ|/base²).
            let base: f64 = r.random_range(0.04 * scale..scale);
            let g = (2.0 * ch.delta_i_tilde.max(0.0) + base * base).sqrt();
            let ct: f64 = r.random_range(-1.0..=1.0);
            if let Some(res) = microreversibility_residual(&model, mix, ch, g) {
                mr = mr.max(res);
            }
            let rep = symmetry_residuals(&model, mix, std::slice::from_ref(ch), &[g], &[ct]);
            partner = partner.max(rep.partner_exchange);
            same = same.max(rep.same_species);
            reflect = reflect.max(rep.angle_reflection);
        }
        let echo = json!({"family": family, "samples": samples});
        out.push(CheckRecord::at_most(4, format!("microreversibility[{family}]"), mr, 1e-13).with_config(echo.clone()));
        out.push(CheckRecord::at_most(4, format!("symmetry_partner_exchange[{family}]"), partner, 1e-13).with_config(echo.clone()));
        out.push(CheckRecord::at_most(4, format!("symmetry_same_species[{family}]"), same, 1e-13).with_config(echo.clone()));
        out.push(CheckRecord::at_most(4, format!("symmetry_angle_reflection[{family}]"), reflect, 1e-13).with_config(echo));
    }
    out
}

/// A mixture with both an equal-mass and an unequal-mass pair and several
/// levels, so that every parametrization is exercised whatever the
/// configuration holds.
pub fn kinematic_mixture() -> Mixture {
    let sp = |mass: f64, levels: Vec<f64>| Species {
        weights: vec![1.0; levels.len()],
        levels,
        mass,
        density: 1.0,
    };
    Mixture::new(
        vec![sp(1.0, vec![0.0, 0.7]), sp(3.0, vec![0.0, 0.4, 1.1]), sp(1.0, vec![0.2, 0.9])],
        1.0,
    )
    .expect("valid mixture")
}

fn random_vec(r: &mut impl Rng, half: f64) -> Vec3 {
    Vec3::new(r.random_range(-half..half), r.random_range(-half..half), r.random_range(-half..half))
}

fn random_unit(r: &mut impl Rng) -> Vec3 {
    loop {
        let v = random_vec(r, 1.0);
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

#[derive(Default)]
struct KinematicTally {
    worst: f64,
    open: usize,
    drawn: usize,
}

/// Criterion 5: every parametrization conserves momentum and energy.
pub fn kinematic_conservation(cfg: &Resolved) -> Vec<CheckRecord> {
    let builtin = kinematic_mixture();
    let samples = cfg.config.checks.kinematic_samples;
    let mut tallies: [KinematicTally; 4] = Default::default();
    let names = ["omega", "swapped_plane", "partner_sphere", "partner_plane"];
    for (mi, mix) in [&cfg.mixture, &builtin].into_iter().enumerate() {
        let channels = enumerate_channels(mix);
        let unequal: Vec<_> = channels.iter().filter(|c| c.delta_i_hat.is_some()).collect();
        let equal: Vec<_> = channels.iter().filter(|c| c.delta_i_hat.is_none()).collect();
        let half = 4.0 / mix.min_mass().sqrt();
        let mut r = rng(cfg.config.mc.seed, stream::KINEMATICS + 10 * mi as u64);
        for _ in 0..samples {
            let xi = random_vec(&mut r, half);
            let xs = random_vec(&mut r, half);
            if xi == xs {
                continue;
            }
            // ω parametrization
            let ch = &channels[r.random_range(0..channels.len())];
            let (ma, mb) = (mix.mass(ch.alpha), mix.mass(ch.beta));
            let pair = CollisionPair::new(xi, xs, ma, mb);
            let om = random_unit(&mut r);
            tally(&mut tallies[0], omega_post_state(mix, &pair, ch, &om).open(), |p| {
                check_conservation(mix, &pair, p, ch, Pairing::Omega).relative()
            });
            // two velocities of species α, w in the plane orthogonal to g
            let pair = CollisionPair::new(xi, xs, ma, ma);
            let (e1, e2) = plane_basis(&xi, &xs);
            let w = e1 * r.random_range(-half..half) + e2 * r.random_range(-half..half);
            tally(&mut tallies[1], swapped_plane_post_state(mix, &pair, ch, &w).open(), |p| {
                check_conservation(mix, &pair, p, ch, Pairing::SwappedPartner).relative()
            });
            if !unequal.is_empty() {
                let ch = unequal[r.random_range(0..unequal.len())];
                let pair = CollisionPair::new(xi, xs, mix.mass(ch.alpha), mix.mass(ch.beta));
                let om = random_unit(&mut r);
                tally(&mut tallies[2], partner_sphere_post_state(mix, &pair, ch, &om).open(), |p| {
                    check_conservation(mix, &pair, p, ch, Pairing::SharedPartner).relative()
                });
            }
            if !equal.is_empty() {
                let ch = equal[r.random_range(0..equal.len())];
                let m = mix.mass(ch.alpha);
                let pair = CollisionPair::new(xi, xs, m, m);
                let w = e1 * r.random_range(-half..half) + e2 * r.random_range(-half..half);
                tally(&mut tallies[3], partner_plane_post_state(mix, &pair, ch, &w).open(), |p| {
                    check_conservation(mix, &pair, p, ch, Pairing::SharedPartner).relative()
                });
            }
        }
    }
    tallies
        .iter()
        .zip(names)
        .map(|(t, name)| {
            CheckRecord::at_most(5, format!("conservation[{name}]"), t.worst, 1e-12)
                .with_config(json!({"drawn": t.drawn, "open": t.open, "mixtures": ["config", "builtin"]}))
        })
        .chain(tallies.iter().zip(names).map(|(t, name)| {
            CheckRecord::at_least(5, format!("open_collisions[{name}]"), t.open as f64, samples as f64 / 10.0)
        }))
        .collect()
}

fn tally<P>(t: &mut KinematicTally, post: Option<P>, residual: impl FnOnce(&P) -> f64) {
    t.drawn += 1;
    if let Some(p) = post {
        t.open += 1;
        t.worst = t.worst.max(residual(&p));
    }
}

/// The monatomic unit mixture of the analytic anchors.
pub fn monatomic_unit() -> (Mixture, CrossSectionModel) {
    let mix = Mixture::new(
        vec![Species {
            mass: 1.0,
            levels: vec![0.0],
            weights: vec![1.0],
            density: 1.0,
        }],
        1.0,
    )
    .expect("valid mixture");
    (mix, CrossSectionModel::uniform_hard_sphere(1, 1.0))
}

/// Criterion 6: analytic values of ν for unit hard spheres, and the ν
/// oracle on the same mixture.
pub fn nu_anchors(cfg: &Resolved, with_mc: bool) -> Vec<CheckRecord> {
    let (mix, model) = monatomic_unit();
    let quad = NuQuadrature {
        radius: None,
        ..cfg.config.quadrature.nu.clone()
    };
    let nu0 = nu_with(&mix, &model, 0, 0, 0.0, &quad);
    let exact0 = 8.0 * (2.0 * PI).sqrt();
    let nu20 = nu_with(&mix, &model, 0, 0, 20.0, &quad);
    let mut out = vec![
        CheckRecord::at_most(6, "nu_zero_speed", rel_diff(nu0, exact0), 1e-6)
            .with_config(json!({"value": nu0, "exact": exact0})),
        CheckRecord::at_most(6, "nu_large_speed_slope", rel_diff(nu20 / 20.0, 4.0 * PI), 5e-3)
            .with_config(json!({"speed": 20.0, "value": nu20 / 20.0, "limit": 4.0 * PI})),
    ];
    if with_mc {
        let mut r = rng(cfg.config.mc.seed, stream::NU_POINTS);
        let mc = cfg.config.mc.config();
        let mut worst = 0.0f64;
        let mut points = Vec::new();
        for p in 0..cfg.config.mc.nu_points {
            let speed: f64 = r.random_range(0.0..6.0);
            let q = nu_with(&mix, &model, 0, 0, speed, &quad);
            let est = mc_nu(&mix, &model, 0, 0, speed, &McConfig { seed: mc.seed.wrapping_add(p as u64), ..mc });
            let z = est.z_score(q);
            worst = worst.max(z.abs());
            points.push(json!({"speed": speed, "quadrature": q, "mean": est.mean, "stderr": est.stderr, "z": z}));
        }
        out.push(
            CheckRecord::at_most(6, "nu_oracle_monatomic", worst, 3.0)
                .with_config(json!({"samples": mc.samples, "points": points})),
        );
    }
    out
}

/// A random kernel evaluation point: species, levels and two distinct
/// velocities in a box of half width 1.5/√(min m).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelPoint {
    pub alpha: usize,
    pub beta: usize,
    pub i: usize,
    /// Level of β for k^{(β,1)}, k^{(β,2)}; level of α for k^{(α)}.
    pub j: usize,
    pub j_alpha: usize,
    pub xi: [f64; 3],
    pub xs: [f64; 3],
}

impl KernelPoint {
    pub fn random(mix: &Mixture, r: &mut impl Rng) -> Self {
        let s = mix.num_species();
        let alpha = r.random_range(0..s);
        let beta = r.random_range(0..s);
        let half = 1.5 / mix.min_mass().sqrt();
        let xi = random_vec(r, half);
        let mut xs = random_vec(r, half);
        while xs == xi {
            xs = random_vec(r, half);
        }
        Self {
            alpha,
            beta,
            i: r.random_range(0..mix.level_count(alpha)),
            j: r.random_range(0..mix.level_count(beta)),
            j_alpha: r.random_range(0..mix.level_count(alpha)),
            xi: [xi.x, xi.y, xi.z],
            xs: [xs.x, xs.y, xs.z],
        }
    }

    pub fn velocities(&self) -> (Vec3, Vec3) {
        (Vec3::from(self.xi), Vec3::from(self.xs))
    }
}

/// Criterion 8, pointwise part: swap symmetry of k^{(α)} and k^{(β)}.
pub fn kernel_swap_symmetry(cfg: &Resolved, ctx: &KernelContext) -> Vec<CheckRecord> {
    let mut r = rng(cfg.config.mc.seed, stream::KERNEL_PAIRS);
    let pairs = cfg.config.checks.kernel_pairs;
    let (mut w3, mut wb) = (0.0f64, 0.0f64);
    for _ in 0..pairs {
        let p = KernelPoint::random(&cfg.mixture, &mut r);
        let (xi, xs) = p.velocities();
        let a = kernel_k3(ctx, p.alpha, p.beta, p.i, p.j_alpha, &xi, &xs, None);
        let b = kernel_k3(ctx, p.alpha, p.beta, p.j_alpha, p.i, &xs, &xi, None);
        w3 = w3.max(rel_diff(a, b));
        let a = kernel_kb(ctx, p.alpha, p.beta, p.i, p.j, &xi, &xs, None);
        let b = kernel_kb(ctx, p.beta, p.alpha, p.j, p.i, &xs, &xi, None);
        wb = wb.max(rel_diff(a, b));
    }
    let echo = json!({"pairs": pairs, "route": ctx.route()});
    vec![
        CheckRecord::at_most(8, "swap_symmetry_same_species_kernel", w3, 1e-10).with_config(echo.clone()),
        CheckRecord::at_most(8, "swap_symmetry_partner_kernel", wb, 1e-10).with_config(echo),
    ]
}

/// Criterion 9: ν and the three kernel families against their oracles.
pub fn oracle_equivalence(cfg: &Resolved, ctx: &KernelContext) -> Vec<CheckRecord> {
    let mix = &cfg.mixture;
    let mc = cfg.config.mc.config();
    let count = cfg.config.mc.points;
    let mut r = rng(cfg.config.mc.seed, stream::ORACLE_POINTS);
    let mut rows: [Vec<serde_json::Value>; 4] = Default::default();
    let mut worst = [0.0f64; 4];
    for p in 0..count {
        let seeded = McConfig {
            seed: mc.seed.wrapping_add(1000 + p as u64),
            ..mc
        };
        let alpha = r.random_range(0..mix.num_species());
        let i = r.random_range(0..mix.level_count(alpha));
        let speed: f64 = r.random_range(0.0..4.0 / mix.mass(alpha).sqrt());
        let q = nu_with(mix, &ctx.model, alpha, i, speed, &cfg.config.quadrature.nu);
        let est = mc_nu(mix, &ctx.model, alpha, i, speed, &seeded);
        record(&mut rows[0], &mut worst[0], json!({"alpha": alpha, "i": i, "speed": speed}), q, est);

        let kp = KernelPoint::random(mix, &mut r);
        let (xi, xs) = kp.velocities();
        let q = kernel_k1(ctx, kp.alpha, kp.beta, kp.i, kp.j, &xi, &xs, None);
        let est = mc_kernel_k1(ctx, kp.alpha, kp.beta, kp.i, kp.j, &xi, &xs, &seeded);
        record(&mut rows[1], &mut worst[1], json!(kp), q, est);
        let q = kernel_k2(ctx, kp.alpha, kp.beta, kp.i, kp.j, &xi, &xs, None);
        let est = mc_kernel_k2(ctx, kp.alpha, kp.beta, kp.i, kp.j, &xi, &xs, &seeded);
        record(&mut rows[2], &mut worst[2], json!(kp), q, est);
        let q = kernel_k3(ctx, kp.alpha, kp.beta, kp.i, kp.j_alpha, &xi, &xs, None);
        let est = mc_kernel_k3(ctx, kp.alpha, kp.beta, kp.i, kp.j_alpha, &xi, &xs, &seeded);
        record(&mut rows[3], &mut worst[3], json!(kp), q, est);
    }
    ["nu", "kernel_k1", "kernel_k2", "kernel_k3"]
        .into_iter()
        .zip(rows)
        .zip(worst)
        .map(|((name, rows), w)| {
            CheckRecord::at_most(9, format!("oracle[{name}]"), w, 3.0)
                .with_config(json!({"samples": mc.samples, "points": rows}))
        })
        .collect()
}

fn record(rows: &mut Vec<serde_json::Value>, worst: &mut f64, at: serde_json::Value, q: f64, est: polykin_core::mc_oracle::McEstimate) {
    let z = est.z_score(q);
    *worst = worst.max(z.abs());
    rows.push(json!({"at": at, "quadrature": q, "mean": est.mean, "stderr": est.stderr, "z": z}));
}

/// ((√a − √b)/(√a + √b))², written out independently of the library.
fn rho_reference(a: f64, b: f64) -> f64 {
    let d = (a.sqrt() - b.sqrt()) / (a.sqrt() + b.sqrt());
    d * d
}

/// Criterion 13: the mass-ratio inequality, its ρ and a negative control.
pub fn mass_ratio_inequality(cfg: &Resolved) -> Vec<CheckRecord> {
    let l3 = &cfg.config.mass_ratio;
    let mc = McConfig {
        samples: l3.samples,
        seed: cfg.config.mc.seed,
    };
    let mut out = Vec::new();
    for &ratio in &l3.ratios {
        for (ma, mb) in [(ratio, 1.0), (1.0, ratio)] {
            let res = mass_ratio_random_check(ma, mb, &l3.boxes, &mc, None);
            let echo = json!({"m_alpha": ma, "m_beta": mb, "samples": mc.samples, "boxes": l3.boxes});
            out.push(
                CheckRecord::at_least(13, format!("min_gap[{ma}:{mb}]"), res.min_gap, -1e-12)
                    .with_config(echo.clone()),
            );
            let rho = mass_ratio_rho(ma, mb);
            out.push(CheckRecord::condition(
                13,
                format!("rho_closed_form[{ma}:{mb}]"),
                rho == rho_reference(ma, mb),
                (rho - rho_reference(ma, mb)).abs(),
            ));
            let control = mass_ratio_random_check(ma, mb, &l3.boxes, &mc, Some(1.0));
            out.push(
                CheckRecord::above(13, format!("negative_control_rho_one[{ma}:{mb}]"), -control.min_gap, 0.0)
                    .with_config(echo),
            );
        }
    }
    out
}

/// Summary of one grid size of the refinement study.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementPoint {
    pub points: usize,
    pub dim: usize,
    pub asymmetry: f64,
    pub min_eigenvalue_relative: f64,
    pub null_dim_estimate: usize,
    pub expected_null_dim: usize,
    pub separation: f64,
    pub invariant_residuals: Vec<f64>,
    pub lambda_coercivity: f64,
    /// Coercivity of L = Λ (K dropped); exactly one by construction.
    pub lambda_without_k: Option<f64>,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub sv_tail_fraction: f64,
    pub k1_hs_quadrature: f64,
    pub assembly_seconds: f64,
    pub spectral_seconds: f64,
}

/// Assembles and analyses L at every grid size of the study, keeping only
/// the summaries.
pub fn refinement_study(cfg: &Resolved, ctx: &KernelContext) -> anyhow::Result<Vec<RefinementPoint>> {
    let opts = cfg.assembly_options();
    let mut out = Vec::new();
    for (k, &n) in cfg.config.grid.refinement.iter().enumerate() {
        let grid = cfg.grid(n);
        let t0 = Instant::now();
        let Assembly { lambda, k: kmat, l, report } = assemble(ctx, &grid, &opts)?;
        let assembly_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let invariants = weighted_null_basis(&cfg.mixture, &grid);
        let levels = cfg.mixture.num_levels();
        let sr = spectral_report(&SpectralInputs {
            lambda: &lambda,
            k: &kmat,
            l: &l,
            grid: &grid,
            levels,
            invariants: &invariants,
            gap_factor: cfg.config.spectral.null_gap_factor,
            asymmetry: Some(report.asymmetry),
            kernels: Some(ctx),
        })?;
        drop((kmat, l));
        let lambda_without_k = if k == 0 {
            Some(coercivity_lambda(&lambda.to_dense(), &lambda, &invariants, Some((&grid, levels)))?)
        } else {
            None
        };
        out.push(RefinementPoint {
            points: n,
            dim: report.dim,
            asymmetry: report.asymmetry,
            min_eigenvalue_relative: sr.min_eigenvalue_relative,
            null_dim_estimate: sr.null_space.dim_estimate,
            expected_null_dim: sr.null_space.expected_dim,
            separation: sr.null_space.separation,
            invariant_residuals: sr.null_space.residuals.clone(),
            lambda_coercivity: sr.lambda_coercivity,
            lambda_without_k,
            nu_minus: sr.nu_minus,
            nu_plus: sr.nu_plus,
            sv_tail_fraction: sr.sv_tail_fraction,
            k1_hs_quadrature: sr.k1_hs_quadrature.unwrap_or(f64::NAN),
            assembly_seconds,
            spectral_seconds: t1.elapsed().as_secs_f64(),
        });
    }
    Ok(out)
}

/// Criteria 7, 8 (assembled part), 10, 11 and 12 from the refinement study.
pub fn refinement_checks(cfg: &Resolved, study: &[RefinementPoint]) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let (prev, last) = (&study[study.len() - 2], &study[study.len() - 1]);
    let pair = json!({"coarse": prev.points, "fine": last.points});
    for p in study {
        let at = json!({"points": p.points});
        out.push(CheckRecord::above(7, format!("nu_minus_positive[N={}]", p.points), p.nu_minus, 0.0).with_config(at.clone()));
        out.push(CheckRecord::condition(7, format!("nu_plus_finite[N={}]", p.points), p.nu_plus.is_finite(), p.nu_plus).with_config(at));
    }
    out.push(
        CheckRecord::at_most(7, "nu_bound_ratio_stability", rel_change(prev.nu_plus / prev.nu_minus, last.nu_plus / last.nu_minus), 0.1)
            .with_config(pair.clone()),
    );

    let tight = cfg.is_monatomic_hard_sphere();
    let tol = if tight { 1e-10 } else { cfg.config.spectral.asymmetry_threshold };
    for p in study {
        out.push(
            CheckRecord::at_most(8, format!("assembled_asymmetry[N={}]", p.points), p.asymmetry, tol)
                .with_config(json!({"points": p.points, "monatomic_hard_sphere": tight})),
        );
    }

    out.push(
        CheckRecord::condition(
            10,
            format!("null_dimension[N={}]", last.points),
            last.null_dim_estimate == last.expected_null_dim,
            last.null_dim_estimate as f64,
        )
        .with_config(json!({"expected": last.expected_null_dim})),
    );
    out.push(
        CheckRecord::at_least(10, format!("null_gap[N={}]", last.points), last.separation, cfg.config.spectral.null_gap_factor)
            .with_config(json!({"points": last.points})),
    );
    for q in 0..last.invariant_residuals.len() {
        let seq: Vec<f64> = study.iter().map(|p| p.invariant_residuals[q]).collect();
        let ok = seq.windows(2).all(|w| w[1] < w[0]);
        let worst_ratio = seq.windows(2).map(|w| w[1] / w[0]).fold(0.0f64, f64::max);
        out.push(
            CheckRecord::condition(10, format!("invariant_residual_decrease[{q}]"), ok, worst_ratio)
                .with_config(json!({"residuals": seq})),
        );
    }

    for p in study {
        out.push(
            CheckRecord::at_least(11, format!("min_eigenvalue[N={}]", p.points), p.min_eigenvalue_relative, -1e-8)
                .with_config(json!({"points": p.points, "relative_to": "frobenius_norm"})),
        );
        let lam = p.lambda_coercivity;
        out.push(CheckRecord::condition(11, format!("coercivity_in_unit_interval[N={}]", p.points), lam > 0.0 && lam < 1.0, lam));
    }
    out.push(
        CheckRecord::at_most(11, "coercivity_stability", rel_change(prev.lambda_coercivity, last.lambda_coercivity), 0.2)
            .with_config(pair.clone()),
    );
    if let Some(lk) = study[0].lambda_without_k {
        out.push(CheckRecord::condition(11, "coercivity_without_k", lk == 1.0, lk).with_config(json!({"points": study[0].points})));
    }

    out.push(
        CheckRecord::at_most(12, "k1_hilbert_schmidt_change", rel_change(prev.k1_hs_quadrature, last.k1_hs_quadrature), 0.05)
            .with_config(pair),
    );
    let tails: Vec<f64> = study.iter().map(|p| p.sv_tail_fraction).collect();
    out.push(
        CheckRecord::condition(12, "sv_tail_fraction_decrease", tails.windows(2).all(|w| w[1] < w[0]), *tails.last().unwrap())
            .with_config(json!({"tail_fractions": tails})),
    );
    out
}

fn rel_change(coarse: f64, fine: f64) -> f64 {
    (fine - coarse).abs() / coarse.abs()
}

fn dump_bytes(a: &Assembly) -> Vec<u8> {
    let mut buf = Vec::new();
    write_dump(&mut buf, MatrixKind::Lambda, &a.lambda.to_dense()).expect("in-memory write");
    write_dump(&mut buf, MatrixKind::K, &a.k).expect("in-memory write");
    write_dump(&mut buf, MatrixKind::L, &a.l).expect("in-memory write");
    buf
}

/// Criterion 14: assembly and every oracle are bitwise reproducible across
/// runs and worker counts.
pub fn determinism(cfg: &Resolved, ctx: &KernelContext) -> anyhow::Result<Vec<CheckRecord>> {
    let n = cfg.config.grid.refinement[0];
    let grid = cfg.grid(n);
    let opts = cfg.assembly_options();
    let runs: Vec<Vec<u8>> = [1usize, 3]
        .into_iter()
        .map(|w| with_workers(w, || assemble(ctx, &grid, &opts).map(|a| dump_bytes(&a))))
        .collect::<Result<_, _>>()?;
    let mut out = vec![CheckRecord::condition(14, "assembly_dumps_bitwise", runs[0] == runs[1], runs[0].len() as f64)
        .with_config(json!({"points": n, "workers": [1, 3]}))];

    let mix = &cfg.mixture;
    let mc = McConfig {
        samples: MIN_SAMPLES,
        seed: cfg.config.mc.seed,
    };
    let mut r = rng(cfg.config.mc.seed, stream::ORACLE_POINTS + 100);
    let kp = KernelPoint::random(mix, &mut r);
    let (xi, xs) = kp.velocities();
    let blobs = GaussianBlobs::random(mix, &mut r);
    let inv = InvariantProvider { mix, index: mix.num_species() + 3 };
    let ratio = cfg.config.mass_ratio.ratios.first().copied().unwrap_or(2.0);
    let oracle_run = || {
        let l3 = mass_ratio_random_check(ratio, 1.0, &cfg.config.mass_ratio.boxes, &mc, None);
        vec![
            mc_nu(mix, &ctx.model, kp.alpha, kp.i, 0.7, &mc),
            mc_kernel_k1(ctx, kp.alpha, kp.beta, kp.i, kp.j, &xi, &xs, &mc),
            mc_kernel_k2(ctx, kp.alpha, kp.beta, kp.i, kp.j, &xi, &xs, &mc),
            mc_kernel_k3(ctx, kp.alpha, kp.beta, kp.i, kp.j_alpha, &xi, &xs, &mc),
            mc_weak_bracket(&blobs, &inv, mix, &ctx.model, &mc),
        ]
        .into_iter()
        .flat_map(|e| [e.mean.to_bits(), e.stderr.to_bits()])
        .chain([l3.min_gap.to_bits()])
        .collect::<Vec<u64>>()
    };
    let a = with_workers(1, oracle_run);
    let b = with_workers(3, oracle_run);
    let c = with_workers(1, oracle_run);
    out.push(
        CheckRecord::condition(14, "oracles_bitwise", a == b && a == c, a.len() as f64)
            .with_config(json!({"samples": mc.samples, "workers": [1, 3, 1], "oracles": ["nu", "kernel_k1", "kernel_k2", "kernel_k3", "weak_bracket", "mass_ratio"]})),
    );
    Ok(out)
}

/// The cheap identity suite: cross-section relations, kinematic
/// conservation and the mass-ratio inequality.
pub fn validate(cfg: &Resolved) -> VerificationReport {
    let mut rep = VerificationReport::new("validate", cfg.config.effective_json());
    rep.extend(cross_section_identities(cfg));
    rep.extend(kinematic_conservation(cfg));
    rep.extend(mass_ratio_inequality(cfg));
    rep.finish()
}

/// Random distributions of the conservation and entropy checks in quick mode.
pub const QUICK_DISTRIBUTIONS: usize = 5;
pub const QUICK_ENTROPY_DISTRIBUTIONS: usize = 20;

/// Every criterion at the scale of `cfg`. With `quick`, only the identity
/// checks that need neither assembly nor Monte Carlo sampling of kernels,
/// with fewer random distributions.
pub fn verify(cfg: &Resolved, quick: bool) -> anyhow::Result<VerificationReport> {
    let reduced;
    let cfg = if quick {
        let mut c = cfg.clone();
        c.config.checks.distributions = c.config.checks.distributions.min(QUICK_DISTRIBUTIONS);
        c.config.checks.entropy_distributions = c.config.checks.entropy_distributions.min(QUICK_ENTROPY_DISTRIBUTIONS);
        reduced = c;
        &reduced
    } else {
        cfg
    };
    let mut rep = VerificationReport::new(if quick { "verify --quick" } else { "verify" }, cfg.config.effective_json());
    let ctx = cfg.kernel_context();
    rep.extend(maxwellian_annihilation(cfg));
    rep.extend(conservation(cfg));
    rep.extend(entropy_sign(cfg));
    rep.extend(cross_section_identities(cfg));
    rep.extend(kinematic_conservation(cfg));
    rep.extend(nu_anchors(cfg, !quick));
    rep.extend(kernel_swap_symmetry(cfg, &ctx));
    rep.extend(mass_ratio_inequality(cfg));
    if !quick {
        rep.extend(oracle_equivalence(cfg, &ctx));
        let study = refinement_study(cfg, &ctx)?;
        rep.extend(refinement_checks(cfg, &study));
        rep.attachments.insert("refinement".into(), serde_json::to_value(&study)?);
        rep.extend(determinism(cfg, &ctx)?);
    }
    Ok(rep.finish())
}
