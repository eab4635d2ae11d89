//! Fixtures shared by the integration tests.

#![allow(dead_code)]

use polykin_core::{CrossSectionModel, Mixture, Species};

pub fn species(mass: f64, levels: &[f64], weights: &[f64], density: f64) -> Species {
    Species {
        mass,
        levels: levels.to_vec(),
        weights: weights.to_vec(),
        density,
    }
}

/// Single species, one level, m = n = φ = 1.
pub fn monatomic() -> Mixture {
    Mixture::new(vec![species(1.0, &[0.0], &[1.0], 1.0)], 1.0).unwrap()
}

/// Two species of masses 1 and 2, two levels each.
pub fn desk() -> Mixture {
    Mixture::new(
        vec![
            species(1.0, &[0.0, 1.0], &[1.0, 1.0], 1.0),
            species(2.0, &[0.0, 0.5], &[1.0, 2.0], 1.0),
        ],
        1.0,
    )
    .unwrap()
}

/// Two species of equal mass, unequal level counts.
pub fn equal_mass() -> Mixture {
    Mixture::new(
        vec![
            species(1.0, &[0.0, 1.0], &[1.0, 1.0], 1.0),
            species(1.0, &[0.0], &[1.0], 0.7),
        ],
        1.0,
    )
    .unwrap()
}

pub fn hard_sphere(mix: &Mixture) -> CrossSectionModel {
    CrossSectionModel::uniform_hard_sphere(mix.num_species(), 1.0)
}

pub fn grad() -> CrossSectionModel {
    CrossSectionModel::GradBounded { c: 1.0, gamma: 0.5 }
}

pub fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}
