mod common;

use common::{desk, grad, hard_sphere, monatomic, rel};
use polykin_core::cross_sections::{microreversibility_residual, psi, symmetry_residuals};
use polykin_core::mixture_model::enumerate_channels;
use polykin_core::{CollisionChannel, CrossSectionModel};
use proptest::prelude::*;

#[test]
fn hard_sphere_value() {
    let mix = desk();
    let model = CrossSectionModel::HardSphere { c: vec![vec![1.0, 0.5], vec![0.5, 2.0]] };
    let ch = CollisionChannel::new(&mix, 1, 1, 0, 1, 1, 1);
    let g: f64 = 3.0;
    // φ_0 = 1, φ_1 = 2 for species 1; ΔĨ = (2+2)/4 · 0.5
    let expected = 2.0 * (g * g - 1.0).sqrt() / (g * 2.0);
    assert!(rel(model.sigma_iso(&mix, &ch, g), expected) < 1e-15);
    assert!(rel(model.speed_sigma(&mix, &ch, g), g * expected) < 1e-15);
}

#[test]
fn grad_value() {
    let mix = monatomic();
    let ch = CollisionChannel::new(&mix, 0, 0, 0, 0, 0, 0);
    let g: f64 = 1.7;
    let p = g * g;
    let expected = (p + p.powf(0.25)) / (g * g);
    assert!(rel(grad().sigma_iso(&mix, &ch, g), expected) < 1e-15);
    assert_eq!(psi(&ch, g), p);
}

#[test]
fn closed_channels_vanish() {
    let mix = desk();
    let ch = CollisionChannel::new(&mix, 0, 0, 0, 0, 1, 1);
    let g = (2.0 * ch.delta_i_tilde).sqrt() * 0.999;
    for model in [hard_sphere(&mix), grad()] {
        assert_eq!(model.sigma_iso(&mix, &ch, g), 0.0);
        assert_eq!(model.speed_sigma(&mix, &ch, g), 0.0);
    }
    assert_eq!(psi(&ch, g), 0.0);
    assert!(microreversibility_residual(&hard_sphere(&mix), &mix, &ch, g).is_none());
}

#[test]
fn hard_sphere_speed_sigma_is_finite_at_zero_speed() {
    let mix = monatomic();
    let ch = CollisionChannel::new(&mix, 0, 0, 0, 0, 0, 0);
    assert_eq!(hard_sphere(&mix).speed_sigma(&mix, &ch, 0.0), 0.0);
    assert!((hard_sphere(&mix).speed_sigma(&mix, &ch, 1e-8) - 1e-8).abs() < 1e-20);
}

#[test]
fn validation() {
    let mix = desk();
    assert!(hard_sphere(&mix).validate(&mix).is_ok());
    assert!(CrossSectionModel::HardSphere { c: vec![vec![1.0]] }.validate(&mix).is_err());
    assert!(CrossSectionModel::HardSphere { c: vec![vec![1.0, -1.0], vec![-1.0, 1.0]] }
        .validate(&mix)
        .is_err());
    assert!(CrossSectionModel::HardSphere { c: vec![vec![0.0; 2]; 2] }.validate(&mix).is_ok());
    assert!(CrossSectionModel::GradBounded { c: 1.0, gamma: 1.0 }.validate(&mix).is_err());
    assert!(CrossSectionModel::GradBounded { c: 1.0, gamma: 0.0 }.validate(&mix).is_err());
    assert!(grad().validate(&mix).is_ok());
}

#[test]
fn scaling_multiplies_every_strength() {
    let m = CrossSectionModel::HardSphere { c: vec![vec![1.0, 0.5], vec![0.5, 2.0]] }.scaled(3.0);
    assert_eq!(m.strength(0, 1), 1.5);
    assert_eq!(m.strength(1, 1), 6.0);
    assert_eq!(grad().scaled(0.5), CrossSectionModel::GradBounded { c: 0.5, gamma: 0.5 });
}

#[test]
fn asymmetric_strengths_break_partner_exchange() {
    let mix = desk();
    let model = CrossSectionModel::HardSphere { c: vec![vec![1.0, 0.5], vec![0.7, 1.0]] };
    let rep = symmetry_residuals(&model, &mix, &enumerate_channels(&mix), &[3.0, 5.0], &[0.3]);
    assert!(rep.partner_exchange > 0.2);
    assert_eq!(rep.same_species, 0.0);
}

proptest! {
    #[test]
    fn microreversibility_holds(k in 0usize..64, base in 0.3f64..6.0, hs in any::<bool>()) {
        let mix = desk();
        let chans = enumerate_channels(&mix);
        let ch = chans[k];
        let g = (2.0 * ch.delta_i_tilde.max(0.0) + base * base).sqrt();
        let model = if hs { hard_sphere(&mix) } else { grad() };
        let r = microreversibility_residual(&model, &mix, &ch, g).unwrap();
        prop_assert!(r <= 1e-13, "residual {}", r);
    }

    #[test]
    fn symmetry_relations_hold(g in 0.1f64..8.0, ct in -1.0f64..1.0) {
        let mix = desk();
        for model in [hard_sphere(&mix), grad()] {
            let rep = symmetry_residuals(&model, &mix, &enumerate_channels(&mix), &[g], &[ct]);
            prop_assert!(rep.partner_exchange <= 1e-13);
            prop_assert!(rep.same_species <= 1e-13);
            prop_assert!(rep.angle_reflection <= 1e-13);
        }
    }

    #[test]
    fn cross_sections_are_nonnegative(k in 0usize..64, g in 0.0f64..8.0) {
        let mix = desk();
        let ch = enumerate_channels(&mix)[k];
        let g = g.max(1e-9);
        prop_assert!(hard_sphere(&mix).sigma_iso(&mix, &ch, g) >= 0.0);
        prop_assert!(grad().sigma_iso(&mix, &ch, g) >= 0.0);
    }
}
