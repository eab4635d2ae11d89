mod common;

use std::f64::consts::PI;

use common::{desk, equal_mass, grad, hard_sphere, monatomic, rel};
use polykin_core::linearized_operator::{
    kernel_k1, kernel_k2, kernel_k3, kernel_kb, kernel_row, nu, nu_with, KernelContext, KernelRoute, NuQuadrature,
};
use polykin_core::{CrossSectionModel, Mixture, Vec3};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn hs_context(mix: Mixture) -> KernelContext {
    let model = hard_sphere(&mix);
    KernelContext::with_defaults(mix, model)
}

#[test]
fn nu_at_rest_monatomic() {
    let mix = monatomic();
    let v = nu(&mix, &hard_sphere(&mix), 0, 0, 0.0);
    let exact = 8.0 * (2.0 * PI).sqrt();
    assert!(rel(v, exact) < 1e-6, "{v} vs {exact}");
    // frozen value
    assert!((v - 20.053026197048).abs() < 1e-9, "{v}");
}

#[test]
fn nu_large_speed_slope() {
    let mix = monatomic();
    let v = nu(&mix, &hard_sphere(&mix), 0, 0, 20.0);
    assert!(rel(v / 20.0, 4.0 * PI) < 5e-3);
    // hard-sphere collision frequency grows like |ξ| + 1/|ξ| at large speed
    let exact = 4.0 * PI * (20.0 + 1.0 / 20.0);
    assert!(rel(v, exact) < 1e-6, "{v} vs {exact}");
}

#[test]
fn nu_scales_linearly_with_strength() {
    let mix = desk();
    let base = nu(&mix, &hard_sphere(&mix), 1, 1, 1.3);
    let doubled = nu(&mix, &hard_sphere(&mix).scaled(2.0), 1, 1, 1.3);
    assert!(rel(doubled, 2.0 * base) < 1e-14);
    let zero = CrossSectionModel::HardSphere { c: vec![vec![0.0; 2]; 2] };
    assert_eq!(nu(&mix, &zero, 0, 0, 1.0), 0.0);
}

#[test]
fn nu_is_isotropic_in_speed_only_and_positive() {
    let mix = desk();
    for model in [hard_sphere(&mix), grad()] {
        let mut prev = 0.0;
        for k in 0..10 {
            let v = nu(&mix, &model, 0, 1, 0.7 * k as f64);
            assert!(v > 0.0 && v.is_finite());
            if k > 2 {
                assert!(v > prev, "collision frequency should grow at large speed");
            }
            prev = v;
        }
    }
}

#[test]
fn nu_truncation_radius_converges() {
    let mix = desk();
    let model = hard_sphere(&mix);
    let wide = NuQuadrature { radius: Some(12.0), ..NuQuadrature::default() };
    let a = nu_with(&mix, &model, 1, 0, 0.8, &NuQuadrature::default());
    let b = nu_with(&mix, &model, 1, 0, 0.8, &wide);
    assert!(rel(a, b) < 1e-8, "{a} vs {b}");
    let literal = NuQuadrature { literal_q_alpha: true, ..NuQuadrature::default() };
    let c = nu_with(&mix, &model, 1, 0, 0.8, &literal);
    assert!(rel(a, c) > 1e-3, "the alternative normalization must differ on this mixture");
}

#[test]
fn k1_frozen_example() {
    let ctx = hs_context(monatomic());
    let v = kernel_k1(&ctx, 0, 0, 0, 0, &Vec3::new(1.0, 0.0, 0.0), &Vec3::zeros(), None);
    let exact = 4.0 * PI * (2.0 * PI).powf(-1.5) * (-0.25f64).exp();
    assert!(rel(v, exact) < 1e-14, "{v} vs {exact}");
    assert!((v - 0.62139).abs() < 1e-5);
}

#[test]
fn only_open_channels_contribute_to_k1() {
    // Ground-state pair below every excitation threshold: only the elastic
    // channel is open and its hard-sphere σ equals 1.
    let mix = Mixture::new(vec![common::species(1.0, &[0.0, 5.0], &[1.0, 1.0], 1.0)], 1.0).unwrap();
    let ctx = hs_context(mix);
    let (xi, xs) = (Vec3::new(0.01, 0.0, 0.0), Vec3::zeros());
    let v = kernel_k1(&ctx, 0, 0, 0, 0, &xi, &xs, None);
    let elastic = 4.0 * PI * ctx.mix.sqrt_maxwellian(0, 0, &xi) * ctx.mix.sqrt_maxwellian(0, 0, &xs) * 0.01;
    assert!(rel(v, elastic) < 1e-14);
}

#[test]
fn routes_agree() {
    let pts = [
        (Vec3::new(0.4, -0.3, 0.2), Vec3::new(-0.5, 0.1, 0.6)),
        (Vec3::new(1.2, 0.3, -0.7), Vec3::new(0.1, -0.9, 0.4)),
        (Vec3::new(0.05, 0.0, 0.0), Vec3::new(0.0, 0.02, 0.0)),
    ];
    for mix in [desk(), equal_mass()] {
        let ctx = hs_context(mix.clone());
        assert_eq!(ctx.route(), KernelRoute::ClosedForm);
        for a in 0..mix.num_species() {
            for b in 0..mix.num_species() {
                for i in 0..mix.level_count(a) {
                    for j in 0..mix.level_count(b) {
                        for (xi, xs) in &pts {
                            let pair = |r| {
                                (
                                    kernel_k1(&ctx, a, b, i, j, xi, xs, Some(r)),
                                    kernel_k2(&ctx, a, b, i, j, xi, xs, Some(r)),
                                )
                            };
                            let (c, q) = (pair(KernelRoute::ClosedForm), pair(KernelRoute::Quadrature));
                            assert!(rel(c.0, q.0) < 1e-12);
                            assert!(rel(c.1, q.1) < 1e-9, "k2 {} vs {}", c.1, q.1);
                        }
                    }
                }
                for i in 0..mix.level_count(a) {
                    for j in 0..mix.level_count(a) {
                        let (xi, xs) = pts[1];
                        let c = kernel_k3(&ctx, a, b, i, j, &xi, &xs, Some(KernelRoute::ClosedForm));
                        let q = kernel_k3(&ctx, a, b, i, j, &xi, &xs, Some(KernelRoute::Quadrature));
                        assert!(rel(c, q) < 1e-9, "k3 {c} vs {q}");
                    }
                }
            }
        }
    }
}

#[test]
#[should_panic(expected = "only for hard spheres")]
fn closed_form_requires_hard_spheres() {
    let ctx = KernelContext::with_defaults(monatomic(), grad());
    assert_eq!(ctx.route(), KernelRoute::Quadrature);
    ctx.with_route(KernelRoute::ClosedForm);
}

#[test]
#[should_panic(expected = "distinct velocities")]
fn coincident_velocities_are_rejected() {
    let ctx = hs_context(monatomic());
    let xi = Vec3::new(0.1, 0.2, 0.3);
    kernel_k1(&ctx, 0, 0, 0, 0, &xi, &xi, None);
}

#[test]
fn kernel_row_layout() {
    let mix = desk();
    let ctx = hs_context(mix.clone());
    let (xi, xs) = (Vec3::new(0.4, -0.3, 0.2), Vec3::new(-0.5, 0.1, 0.6));
    let mut row = vec![0.0; mix.num_levels()];
    kernel_row(&ctx, 0, 1, &xi, &xs, &mut row);
    assert!(row.iter().all(|v| v.is_finite()));
    let norm: f64 = row.iter().map(|v| v.abs()).sum();
    assert!(norm > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn k1_swap_symmetry(xi in vec3(2.0), xs in vec3(2.0), hs in any::<bool>()) {
        prop_assume!((xi - xs).norm() > 1e-3);
        let mix = desk();
        let model = if hs { hard_sphere(&mix) } else { grad() };
        let ctx = KernelContext::with_defaults(mix.clone(), model);
        for a in 0..2 { for b in 0..2 { for i in 0..2 { for j in 0..2 {
            let x = kernel_k1(&ctx, a, b, i, j, &xi, &xs, None);
            let y = kernel_k1(&ctx, b, a, j, i, &xs, &xi, None);
            prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300) + 1e-300);
            prop_assert!(x >= 0.0);
        }}}}
    }

    #[test]
    fn k3_and_kb_swap_symmetry(xi in vec3(2.0), xs in vec3(2.0), hs in any::<bool>()) {
        prop_assume!((xi - xs).norm() > 1e-2);
        let mix = desk();
        let model = if hs { hard_sphere(&mix) } else { grad() };
        let ctx = KernelContext::with_defaults(mix.clone(), model);
        let scale = 1.0f64;
        for a in 0..2 { for b in 0..2 { for i in 0..2 { for j in 0..2 {
            let x = kernel_k3(&ctx, a, b, i, j, &xi, &xs, None);
            let y = kernel_k3(&ctx, a, b, j, i, &xs, &xi, None);
            prop_assert!((x - y).abs() <= 1e-10 * scale.max(x.abs()), "k3 {} vs {}", x, y);
            prop_assert!(x >= 0.0);
            let u = kernel_kb(&ctx, a, b, i, j, &xi, &xs, None);
            let v = kernel_kb(&ctx, b, a, j, i, &xs, &xi, None);
            prop_assert!((u - v).abs() <= 1e-10 * scale.max(u.abs()), "kb {} vs {}", u, v);
        }}}}
    }

    #[test]
    fn equal_mass_k2_swap_symmetry(xi in vec3(2.0), xs in vec3(2.0)) {
        prop_assume!((xi - xs).norm() > 1e-2);
        let mix = equal_mass();
        let ctx = hs_context(mix.clone());
        for a in 0..2 { for b in 0..2 {
            for i in 0..mix.level_count(a) { for j in 0..mix.level_count(b) {
                let u = kernel_kb(&ctx, a, b, i, j, &xi, &xs, None);
                let v = kernel_kb(&ctx, b, a, j, i, &xs, &xi, None);
                prop_assert!((u - v).abs() <= 1e-10 * u.abs().max(1.0));
            }}
        }}
    }
}
