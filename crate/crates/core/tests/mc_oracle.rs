mod common;

use std::f64::consts::PI;

use common::{desk, equal_mass, hard_sphere, monatomic};
use polykin_core::linearized_operator::{kernel_k1, kernel_k2, kernel_k3, nu, KernelContext};
use polykin_core::mc_oracle::{
    estimate, mass_ratio_random_check, mc_kernel_k1, mc_kernel_k2, mc_kernel_k3, mc_nu, mc_weak_bracket, pairwise_sum,
    sample_rng, McConfig, McError, McEstimate, MassRatioBoxes, MIN_SAMPLES,
};
use polykin_core::nonlinear_collision::{DistributionProvider, InvariantProvider, MaxwellianProvider};
use polykin_core::{EquilibriumParams, Vec3};
use proptest::prelude::*;
use rand::Rng;

const SAMPLES: u64 = 200_000;

fn cfg(seed: u64) -> McConfig {
    McConfig::new(SAMPLES, seed).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn too_few_samples_are_refused() {
    assert_eq!(McConfig::new(MIN_SAMPLES - 1, 0), Err(McError::TooFewSamples(MIN_SAMPLES - 1)));
    assert!(McConfig::new(MIN_SAMPLES, 0).is_ok());
}

#[test]
fn z_score_has_a_roundoff_floor() {
    let exact = McEstimate { mean: 2.0, stderr: 0.0, samples: 10 };
    assert_eq!(exact.z_score(2.0), 0.0);
    assert!(exact.z_score(2.0 * (1.0 + 1e-15)).abs() < 1e-2);
    assert!(exact.z_score(3.0).abs() > 1e9);
    let noisy = McEstimate { mean: 1.0, stderr: 0.5, samples: 10 };
    assert!((noisy.z_score(2.0) + 2.0).abs() < 1e-12);
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let a: u64 = sample_rng(7, 3).random();
    let b: u64 = sample_rng(7, 3).random();
    let c: u64 = sample_rng(7, 4).random();
    let d: u64 = sample_rng(8, 3).random();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_ne!(a, d);
}

#[test]
fn estimate_of_a_uniform_mean() {
    let e = estimate(&cfg(1), |rng| rng.random::<f64>());
    assert!(e.z_score(0.5).abs() < 4.0);
    assert!((e.stderr - (1.0 / 12.0f64 / SAMPLES as f64).sqrt()).abs() < 1e-5);
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let mix = desk();
    let model = hard_sphere(&mix);
    let run = || mc_nu(&mix, &model, 1, 0, 0.7, &McConfig::new(MIN_SAMPLES * 3, 11).unwrap());
    let one = in_pool(1, run);
    let three = in_pool(3, run);
    assert_eq!(one.mean.to_bits(), three.mean.to_bits());
    assert_eq!(one.stderr.to_bits(), three.stderr.to_bits());
}

#[test]
fn nu_oracle_monatomic_at_rest() {
    let mix = monatomic();
    let e = mc_nu(&mix, &hard_sphere(&mix), 0, 0, 0.0, &cfg(2));
    assert!(e.z_score(8.0 * (2.0 * PI).sqrt()).abs() <= 3.0, "{e:?}");
}

#[test]
fn nu_oracle_agrees_with_quadrature() {
    let mix = desk();
    let model = hard_sphere(&mix);
    for (alpha, i, speed) in [(0, 1, 0.4), (1, 0, 1.9), (1, 1, 3.5)] {
        let e = mc_nu(&mix, &model, alpha, i, speed, &cfg(3 + alpha as u64));
        let q = nu(&mix, &model, alpha, i, speed);
        assert!(e.z_score(q).abs() <= 3.0, "{e:?} vs {q}");
    }
}

#[test]
fn kernel_oracles_agree_with_quadrature() {
    let (xi, xs) = (Vec3::new(0.4, -0.3, 0.2), Vec3::new(-0.5, 0.1, 0.6));
    for mix in [desk(), equal_mass()] {
        let ctx = KernelContext::with_defaults(mix.clone(), hard_sphere(&mix));
        let k1 = mc_kernel_k1(&ctx, 0, 1, 1, 0, &xi, &xs, &cfg(20));
        assert!(k1.z_score(kernel_k1(&ctx, 0, 1, 1, 0, &xi, &xs, None)).abs() <= 3.0, "{k1:?}");
        let k2 = mc_kernel_k2(&ctx, 1, 0, 0, 1, &xi, &xs, &cfg(21));
        let q2 = kernel_k2(&ctx, 1, 0, 0, 1, &xi, &xs, None);
        assert!(k2.z_score(q2).abs() <= 3.0, "{k2:?} vs {q2}");
        let k3 = mc_kernel_k3(&ctx, 0, 1, 0, 1, &xi, &xs, &cfg(22));
        let q3 = kernel_k3(&ctx, 0, 1, 0, 1, &xi, &xs, None);
        assert!(k3.z_score(q3).abs() <= 3.0, "{k3:?} vs {q3}");
    }
}

#[test]
fn weak_bracket_oracle_vanishes_at_equilibrium() {
    let mix = desk();
    let model = hard_sphere(&mix);
    let m = MaxwellianProvider { mix: &mix, params: EquilibriumParams::linearization(&mix) };
    let g = InvariantProvider { mix: &mix, index: 5 };
    let e = mc_weak_bracket(&m, &g as &dyn DistributionProvider, &mix, &model, &cfg(30));
    // the integrand cancels sample by sample
    assert!(e.mean.abs() < 1e-20 && e.stderr < 1e-20, "{e:?}");
}

#[test]
fn mass_ratio_check_and_its_control() {
    let mc = McConfig::new(100_000, 5).unwrap();
    for (ma, mb) in [(2.0, 1.0), (1.0, 4.0), (10.0, 1.0)] {
        let r = mass_ratio_random_check(ma, mb, &MassRatioBoxes::default(), &mc, None);
        assert!(r.min_gap >= -1e-12, "{ma}/{mb}: {}", r.min_gap);
        let control = mass_ratio_random_check(ma, mb, &MassRatioBoxes::default(), &mc, Some(1.0));
        assert!(control.min_gap < 0.0);
        assert_eq!(control.rho, 1.0);
    }
}

proptest! {
    #[test]
    fn pairwise_sum_matches_naive_sum(v in prop::collection::vec(-1e3f64..1e3, 0..300)) {
        let naive: f64 = v.iter().sum();
        let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-12 * scale);
    }
}
