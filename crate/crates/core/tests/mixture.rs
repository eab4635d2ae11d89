mod common;

use common::{desk, monatomic, species};
use polykin_core::mixture_model::{collision_invariants, enumerate_channels, maxwellian, weighted_null_basis};
use polykin_core::{CollisionChannel, EquilibriumParams, Mixture, ModelError, Vec3, VelocityGrid};
use proptest::prelude::*;

#[test]
fn rejects_empty_species_list() {
    assert!(matches!(Mixture::new(vec![], 1.0), Err(ModelError::InvalidField { field, .. }) if field == "species"));
}

#[test]
fn rejects_bad_fields() {
    let cases = [
        (species(0.0, &[0.0], &[1.0], 1.0), "species[0].mass"),
        (species(1.0, &[0.0], &[1.0], -1.0), "species[0].density"),
        (species(1.0, &[], &[], 1.0), "species[0].levels"),
        (species(1.0, &[0.0, 1.0], &[1.0], 1.0), "species[0].weights"),
        (species(1.0, &[-0.5], &[1.0], 1.0), "species[0].levels[0]"),
        (species(1.0, &[0.0], &[0.0], 1.0), "species[0].weights[0]"),
        (species(f64::NAN, &[0.0], &[1.0], 1.0), "species[0].mass"),
    ];
    for (sp, expected) in cases {
        match Mixture::new(vec![sp], 1.0) {
            Err(ModelError::InvalidField { field, .. }) => assert_eq!(field, expected),
            other => panic!("expected an error on {expected}, got {other:?}"),
        }
    }
    assert!(Mixture::new(vec![species(1.0, &[0.0], &[1.0], 1.0)], 0.0).is_err());
}

#[test]
fn levels_are_sorted_with_their_weights() {
    let mix = Mixture::new(vec![species(1.0, &[2.0, 0.0, 1.0], &[3.0, 1.0, 2.0], 1.0)], 1.0).unwrap();
    assert_eq!(mix.species()[0].levels, vec![0.0, 1.0, 2.0]);
    assert_eq!(mix.species()[0].weights, vec![1.0, 2.0, 3.0]);
}

#[test]
fn equal_level_energies_are_accepted() {
    let mix = Mixture::new(vec![species(1.0, &[0.5, 0.5], &[1.0, 1.0], 1.0)], 1.0).unwrap();
    assert_eq!(mix.num_levels(), 2);
}

#[test]
fn flat_index_round_trip() {
    let mix = desk();
    assert_eq!(mix.num_levels(), 4);
    for (k, (alpha, i)) in mix.levels_flat().enumerate() {
        assert_eq!(mix.flatten(alpha, i), k);
        assert_eq!(mix.unflatten(k), (alpha, i));
    }
}

#[test]
fn channel_count_and_order() {
    let mix = desk();
    let chans = enumerate_channels(&mix);
    // Σ_{α,β} (r_α r_β)²
    assert_eq!(chans.len(), 4 * 16);
    let key = |c: &CollisionChannel| (c.alpha, c.beta, c.i, c.j, c.k, c.l);
    assert!(chans.windows(2).all(|w| key(&w[0]) < key(&w[1])));
}

#[test]
fn channel_energy_bookkeeping() {
    let mix = desk();
    let ch = CollisionChannel::new(&mix, 0, 1, 0, 0, 1, 1);
    assert_eq!(ch.delta_i, 1.5);
    assert!((ch.delta_i_tilde - 1.5 * 1.5).abs() < 1e-15);
    assert!((ch.delta_i_hat.unwrap() - (-0.5 * 1.5)).abs() < 1e-15);
    assert!(!ch.is_open(2.0f64.sqrt() * 1.5 - 1e-9));
    assert!(ch.is_open(2.0f64.sqrt() * 1.5 + 1e-9));
    let rev = ch.reversed(&mix);
    assert_eq!((rev.i, rev.j, rev.k, rev.l), (1, 1, 0, 0));
    assert_eq!(rev.delta_i, -1.5);
    assert!(CollisionChannel::new(&mix, 0, 0, 0, 1, 1, 0).delta_i_hat.is_none());
}

#[test]
fn partition_function_and_amplitude() {
    let mix = desk();
    let q1 = 1.0 + 2.0 * (-0.5f64).exp();
    assert!((mix.partition_function(1, 1.0) - q1).abs() < 1e-15);
    let amp = 2f64.powf(1.5) / ((2.0 * std::f64::consts::PI).powf(1.5) * q1);
    assert!((mix.maxwellian_amplitude(1) - amp).abs() < 1e-14 * amp);
}

#[test]
fn maxwellian_moments_on_a_grid() {
    let mix = desk();
    let params = EquilibriumParams::new(&mix, vec![0.8, 1.3], Vec3::new(0.2, -0.1, 0.3), 1.2).unwrap();
    let grid = VelocityGrid::new(9.0, 48);
    for alpha in 0..2 {
        let (mut n, mut p) = (0.0, Vec3::zeros());
        for i in 0..mix.level_count(alpha) {
            for xi in grid.nodes() {
                let f = maxwellian(&mix, &params, alpha, i, &xi) * grid.weight();
                n += f;
                p += xi * f;
            }
        }
        assert!((n - params.densities[alpha]).abs() < 1e-10, "density {n}");
        assert!((p / n - params.bulk_velocity).norm() < 1e-10, "velocity {}", p / n);
    }
}

#[test]
fn sqrt_maxwellian_matches_maxwellian() {
    let mix = desk();
    let eq = EquilibriumParams::linearization(&mix);
    let xi = Vec3::new(0.3, 0.7, -1.1);
    for (alpha, i) in mix.levels_flat() {
        let m = maxwellian(&mix, &eq, alpha, i, &xi);
        assert!((mix.sqrt_maxwellian(alpha, i, &xi).powi(2) - m).abs() < 1e-15 * m);
    }
}

#[test]
fn invariant_layout() {
    let mix = desk();
    let grid = VelocityGrid::new(3.0, 4);
    let inv = collision_invariants(&mix, &grid);
    let weighted = weighted_null_basis(&mix, &grid);
    assert_eq!(inv.len(), mix.num_species() + 4);
    let nn = grid.num_nodes();
    for (lvl, (alpha, i)) in mix.levels_flat().enumerate() {
        for n in 0..nn {
            let xi = grid.node(n);
            let idx = lvl * nn + n;
            assert_eq!(inv[alpha][idx], 1.0);
            assert_eq!(inv[1 - alpha][idx], 0.0);
            assert_eq!(inv[3][idx], mix.mass(alpha) * xi[1]);
            let e = mix.mass(alpha) * xi.norm_squared() + 2.0 * mix.energy(alpha, i);
            assert!((inv[5][idx] - e).abs() < 1e-14 * e);
            assert!((weighted[5][idx] - e * mix.sqrt_maxwellian(alpha, i, &xi)).abs() < 1e-14);
        }
    }
}

#[test]
fn monatomic_has_one_level() {
    let mix = monatomic();
    assert_eq!((mix.num_species(), mix.num_levels()), (1, 1));
    assert_eq!(enumerate_channels(&mix).len(), 1);
}

proptest! {
    #[test]
    fn unflatten_inverts_flatten(counts in prop::collection::vec(1usize..5, 1..5)) {
        let sp: Vec<_> = counts
            .iter()
            .map(|&r| species(1.0, &vec![0.0; r], &vec![1.0; r], 1.0))
            .collect();
        let mix = Mixture::new(sp, 1.0).unwrap();
        prop_assert_eq!(mix.num_levels(), counts.iter().sum::<usize>());
        for k in 0..mix.num_levels() {
            let (a, i) = mix.unflatten(k);
            prop_assert_eq!(mix.flatten(a, i), k);
        }
    }

    #[test]
    fn reversed_channel_negates_energy_change(
        levels in prop::collection::vec(0.0f64..3.0, 1..4),
        m in 0.5f64..4.0,
        k in 0usize..16,
    ) {
        let r = levels.len();
        let mix = Mixture::new(
            vec![species(1.0, &levels, &vec![1.0; r], 1.0), species(m, &levels, &vec![1.0; r], 1.0)],
            1.0,
        ).unwrap();
        let chans = enumerate_channels(&mix);
        let ch = chans[k % chans.len()];
        let rev = ch.reversed(&mix);
        prop_assert!((rev.delta_i + ch.delta_i).abs() <= 1e-14 * (1.0 + ch.delta_i.abs()));
        let back = rev.reversed(&mix);
        prop_assert_eq!((back.i, back.j, back.k, back.l), (ch.i, ch.j, ch.k, ch.l));
    }
}
