mod common;

use common::{desk, equal_mass, grad, hard_sphere};
use polykin_core::nonlinear_collision::{
    entropy_production, gamma_invariant_brackets, q_collision_terms, weak_bracket, CollisionSetup, DistributionProvider,
    GridDistribution, InvariantProvider, MaxwellianProvider,
};
use polykin_core::quadrature::SphereQuadrature;
use polykin_core::{CrossSectionModel, EquilibriumParams, Mixture, Vec3, VelocityGrid};
use proptest::prelude::*;

/// Two Gaussian bumps per level with mass-scaled widths.
#[derive(Debug, Clone)]
struct Bumps {
    amps: Vec<[f64; 2]>,
    centre: Vec3,
    masses: Vec<f64>,
    offsets: Vec<usize>,
}

impl DistributionProvider for Bumps {
    fn value(&self, alpha: usize, i: usize, xi: &Vec3) -> f64 {
        let m = self.masses[alpha];
        let a = self.amps[self.offsets[alpha] + i];
        a[0] * (-0.5 * m * xi.norm_squared()).exp() + a[1] * (-m * (xi - self.centre).norm_squared()).exp()
    }
}

fn bumps(mix: &Mixture) -> impl Strategy<Value = Bumps> {
    let masses: Vec<f64> = (0..mix.num_species()).map(|a| mix.mass(a)).collect();
    let offsets: Vec<usize> = (0..mix.num_species()).map(|a| mix.flatten(a, 0)).collect();
    (
        prop::collection::vec((0.2f64..1.5, 0.05f64..0.8).prop_map(|(a, b)| [a, b]), mix.num_levels()),
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
    )
        .prop_map(move |(amps, (x, y, z))| Bumps {
            amps,
            centre: Vec3::new(x, y, z),
            masses: masses.clone(),
            offsets: offsets.clone(),
        })
}

struct Fixture {
    mix: Mixture,
    model: CrossSectionModel,
    grid: VelocityGrid,
    squad: SphereQuadrature,
}

impl Fixture {
    fn new(mix: Mixture, model: CrossSectionModel) -> Self {
        Self {
            grid: VelocityGrid::new(VelocityGrid::default_half_width(mix.min_mass()), 4),
            squad: SphereQuadrature::new(2, 4),
            mix,
            model,
        }
    }

    fn setup(&self) -> CollisionSetup<'_> {
        CollisionSetup {
            mix: &self.mix,
            model: &self.model,
            grid: &self.grid,
            squad: &self.squad,
        }
    }
}

fn fixtures() -> Vec<Fixture> {
    let d = desk();
    let e = equal_mass();
    vec![
        Fixture::new(d.clone(), hard_sphere(&d)),
        Fixture::new(d, grad()),
        Fixture::new(e.clone(), hard_sphere(&e)),
    ]
}

#[test]
fn maxwellians_are_annihilated_node_by_node() {
    for fx in fixtures() {
        let params = EquilibriumParams::new(&fx.mix, vec![0.7, 1.4], Vec3::new(0.3, -0.2, 0.1), 1.3).unwrap();
        let m = MaxwellianProvider { mix: &fx.mix, params };
        for n in 0..fx.grid.num_nodes() {
            let xi = fx.grid.node(n);
            for (a, i) in fx.mix.levels_flat() {
                let t = q_collision_terms(&m, &fx.setup(), a, i, &xi);
                assert!(t.loss > 0.0);
                assert!((t.gain - t.loss).abs() <= 1e-12 * t.loss, "{t:?}");
            }
        }
    }
}

#[test]
fn maxwellian_entropy_production_vanishes() {
    for fx in fixtures() {
        let m = MaxwellianProvider { mix: &fx.mix, params: EquilibriumParams::linearization(&fx.mix) };
        let e = entropy_production(&m, &fx.setup()).unwrap();
        assert!(e.value.abs() <= 1e-12 * e.scale.max(1.0), "{e:?}");
    }
}

#[test]
fn entropy_rejects_nonpositive_distributions() {
    let fx = &fixtures()[0];
    let f = |_: usize, _: usize, xi: &Vec3| xi[0];
    let err = entropy_production(&f, &fx.setup()).unwrap_err();
    assert!(err.value <= 0.0);
}

#[test]
fn grid_distribution_reproduces_nodes() {
    let fx = &fixtures()[0];
    let m = MaxwellianProvider { mix: &fx.mix, params: EquilibriumParams::linearization(&fx.mix) };
    let g = GridDistribution::sample(&fx.mix, &fx.grid, &m);
    for n in 0..fx.grid.num_nodes() {
        let xi = fx.grid.node(n);
        assert_eq!(g.value(1, 1, &xi), m.value(1, 1, &xi));
    }
    assert_eq!(g.value(0, 0, &Vec3::new(100.0, 0.0, 0.0)), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn weak_form_conserves_invariants(f in bumps(&desk())) {
        for fx in fixtures().into_iter().take(2) {
            let inv: Vec<InvariantProvider> =
                (0..fx.mix.num_species() + 4).map(|index| InvariantProvider { mix: &fx.mix, index }).collect();
            let tests: Vec<&dyn DistributionProvider> = inv.iter().map(|p| p as &dyn DistributionProvider).collect();
            for b in weak_bracket(&f, &tests, &fx.setup()) {
                prop_assert!(b.value.abs() <= 1e-12 * b.scale, "{:?}", b);
            }
        }
    }

    #[test]
    fn entropy_production_is_nonpositive(f in bumps(&desk())) {
        for fx in fixtures().into_iter().take(2) {
            let e = entropy_production(&f, &fx.setup()).unwrap();
            prop_assert!(e.value <= 0.0, "{:?}", e);
        }
    }

    #[test]
    fn quadratic_term_is_orthogonal_to_invariants(f in bumps(&desk())) {
        let fx = &fixtures()[0];
        for b in gamma_invariant_brackets(&f, &fx.setup()) {
            prop_assert!(b.value.abs() <= 1e-12 * b.scale.max(f64::MIN_POSITIVE), "{:?}", b);
        }
    }
}
