mod common;

use common::{desk, equal_mass, species};
use polykin_core::kinematics::{
    check_conservation, mass_ratio_gap, mass_ratio_gap_with_rho, mass_ratio_rho, omega_post_state, partner_plane_post_state,
    partner_sphere_post_state, plane_basis, swapped_plane_post_state, Collision, CollisionPair, MassRatioSample, Pairing,
};
use polykin_core::mixture_model::enumerate_channels;
use polykin_core::{Mixture, Vec3};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("nonzero", |v| v.norm() > 1e-3).prop_map(|v| v / v.norm())
}

/// Component of `v` in the plane spanned by `plane_basis(xi, xs)`.
fn in_plane(xi: &Vec3, xs: &Vec3, a: f64, b: f64) -> Vec3 {
    let (e1, e2) = plane_basis(xi, xs);
    e1 * a + e2 * b
}

#[test]
fn omega_collision_example() {
    let mix = Mixture::new(vec![species(1.0, &[0.0], &[1.0], 1.0)], 1.0).unwrap();
    let ch = enumerate_channels(&mix)[0];
    let pair = CollisionPair::new(Vec3::new(1.0, 0.0, 0.0), Vec3::zeros(), 1.0, 1.0);
    let post = omega_post_state(&mix, &pair, &ch, &Vec3::new(0.0, 1.0, 0.0)).open().unwrap();
    assert!((post.xi_prime - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    assert!((post.xi_star_prime - Vec3::new(0.5, -0.5, 0.0)).norm() < 1e-15);
    assert_eq!(post.g_prime_norm, 1.0);
}

#[test]
fn endothermic_channel_closes_below_threshold() {
    let mix = desk();
    let ch = polykin_core::CollisionChannel::new(&mix, 0, 1, 0, 0, 1, 1);
    let slow = CollisionPair::new(Vec3::new(0.1, 0.0, 0.0), Vec3::zeros(), 1.0, 2.0);
    let om = Vec3::new(0.0, 0.0, 1.0);
    assert_eq!(omega_post_state(&mix, &slow, &ch, &om), Collision::Closed);
    assert_eq!(partner_sphere_post_state(&mix, &slow, &ch, &om), Collision::Closed);
}

#[test]
fn plane_basis_is_orthonormal_and_order_independent() {
    let (xi, xs) = (Vec3::new(0.3, -1.0, 2.0), Vec3::new(-0.4, 0.5, 0.1));
    let (e1, e2) = plane_basis(&xi, &xs);
    let n = (xi - xs).normalize();
    for (a, b) in [(e1, e1), (e2, e2)] {
        assert!((a.dot(&b) - 1.0).abs() < 1e-15);
    }
    assert!(e1.dot(&e2).abs() < 1e-15);
    assert!(e1.dot(&n).abs() < 1e-15 && e2.dot(&n).abs() < 1e-15);
    assert_eq!(plane_basis(&xs, &xi), (e1, e2));
}

#[test]
fn mass_ratio_rho_values() {
    assert_eq!(mass_ratio_rho(1.0, 1.0), 0.0);
    let r = mass_ratio_rho(4.0, 1.0);
    assert!((r - 1.0 / 9.0).abs() < 1e-16);
    assert_eq!(mass_ratio_rho(1.0, 4.0), r);
}

#[test]
fn mass_ratio_gap_at_rho_one_can_be_negative() {
    // Elastic, ξ′ = 0: with ρ = 1 the gap is 2 m_α (|ξ′|² − |ξ|²) = −4.
    let s = MassRatioSample::construct(
        2.0,
        1.0,
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        1.0,
        0.0,
        Vec3::new(0.0, 1.0, 0.0),
    );
    assert_eq!(s.xi_prime, Vec3::zeros());
    assert!((mass_ratio_gap_with_rho(&s, 1.0) + 4.0).abs() < 1e-12);
    assert!(mass_ratio_gap(&s) >= 0.0);
}

proptest! {
    #[test]
    fn omega_parametrization_conserves(k in 0usize..64, xi in vec3(4.0), xs in vec3(4.0), om in unit()) {
        let mix = desk();
        let ch = enumerate_channels(&mix)[k];
        let pair = CollisionPair::new(xi, xs, mix.mass(ch.alpha), mix.mass(ch.beta));
        if let Some(post) = omega_post_state(&mix, &pair, &ch, &om).open() {
            prop_assert!(check_conservation(&mix, &pair, &post, &ch, Pairing::Omega).relative() <= 1e-12);
        }
    }

    #[test]
    fn swapped_plane_parametrization_conserves(
        k in 0usize..64, xi in vec3(4.0), xs in vec3(4.0), a in -4.0f64..4.0, b in -4.0f64..4.0,
    ) {
        let mix = desk();
        let ch = enumerate_channels(&mix)[k];
        prop_assume!((xi - xs).norm() > 1e-3);
        let pair = CollisionPair::new(xi, xs, mix.mass(ch.alpha), mix.mass(ch.alpha));
        let w = in_plane(&xi, &xs, a, b);
        if let Some(post) = swapped_plane_post_state(&mix, &pair, &ch, &w).open() {
            prop_assert!(check_conservation(&mix, &pair, &post, &ch, Pairing::SwappedPartner).relative() <= 1e-12);
        }
    }

    #[test]
    fn partner_sphere_parametrization_conserves(k in 0usize..64, xi in vec3(4.0), xs in vec3(4.0), om in unit()) {
        let mix = desk();
        let ch = enumerate_channels(&mix)[k];
        prop_assume!(ch.alpha != ch.beta);
        let pair = CollisionPair::new(xi, xs, mix.mass(ch.alpha), mix.mass(ch.beta));
        if let Some(post) = partner_sphere_post_state(&mix, &pair, &ch, &om).open() {
            let r = check_conservation(&mix, &pair, &post, &ch, Pairing::SharedPartner).relative();
            prop_assert!(r <= 1e-12, "residual {}", r);
        }
    }

    #[test]
    fn partner_plane_parametrization_conserves(
        k in 0usize..36, xi in vec3(4.0), xs in vec3(4.0), a in -4.0f64..4.0, b in -4.0f64..4.0,
    ) {
        let mix = equal_mass();
        let chans = enumerate_channels(&mix);
        let ch = chans[k % chans.len()];
        prop_assume!((xi - xs).norm() > 1e-3);
        let pair = CollisionPair::new(xi, xs, 1.0, 1.0);
        let w = in_plane(&xi, &xs, a, b);
        if let Some(post) = partner_plane_post_state(&mix, &pair, &ch, &w).open() {
            prop_assert!(check_conservation(&mix, &pair, &post, &ch, Pairing::SharedPartner).relative() <= 1e-12);
        }
    }

    #[test]
    fn mass_ratio_inequality_holds(
        ratio in prop::sample::select(vec![0.1, 0.25, 0.5, 2.0, 4.0, 10.0]),
        xi in vec3(5.0),
        eta in unit(),
        q in 0.0f64..10.0,
        delta_i in -2.0f64..2.0,
        w in vec3(5.0),
    ) {
        let s = MassRatioSample::construct(ratio, 1.0, xi, eta, q, if q == 0.0 { 0.0 } else { delta_i }, w);
        let gap = mass_ratio_gap(&s);
        let scale = ratio * xi.norm_squared() + s.xi_star.norm_squared() + 1.0;
        prop_assert!(gap >= -1e-12 * scale, "gap {}", gap);
    }

    #[test]
    fn mass_ratio_sample_conserves(
        ratio in 0.2f64..5.0, xi in vec3(3.0), eta in unit(), q in 0.01f64..5.0, delta_i in -2.0f64..2.0, w in vec3(3.0),
    ) {
        let s = MassRatioSample::construct(ratio, 1.0, xi, eta, q, delta_i, w);
        // (ξ, ξ*′) → (ξ′, ξ*)
        let p_in = s.xi * ratio + s.xi_star_prime;
        let p_out = s.xi_prime * ratio + s.xi_star;
        let e_in = ratio * s.xi.norm_squared() + s.xi_star_prime.norm_squared();
        let e_out = ratio * s.xi_prime.norm_squared() + s.xi_star.norm_squared() + 2.0 * delta_i;
        prop_assert!((p_in - p_out).norm() <= 1e-12 * (1.0 + p_in.norm()) * (1.0 + ratio));
        prop_assert!((e_in - e_out).abs() <= 1e-11 * (1.0 + e_in));
    }
}
