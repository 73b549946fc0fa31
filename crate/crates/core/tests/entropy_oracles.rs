mod common;

use std::f64::consts::{E, PI};

use common::{normal_set, rng, uniform_set};
use encdi::entropy::{
    kl_entropy, kl_joint_entropy, mi_score, mutual_information, EntropyOptions,
};
use encdi::obfuscate::{apply_obfuscation, ObfuscationSpec};
use encdi::repio::RepresentationSet;
use encdi::synth::{generate_world, random_baseline, SyntheticWorldConfig};
use encdi::Error;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_entropy(d: usize) -> f64 {
    0.5 * d as f64 * (2.0 * PI * E).ln()
}

fn scaled(set: &RepresentationSet<f64>, c: f64) -> RepresentationSet<f64> {
    RepresentationSet::new(set.data().iter().map(|v| v * c).collect(), set.n_rows(), set.dim()).unwrap()
}

/// `a = x`, `b = rho x + sqrt(1 - rho^2) z`.
fn correlated_pair(n: usize, rho: f64, seed: u64) -> (RepresentationSet<f64>, RepresentationSet<f64>) {
    let mut r = rng(seed);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = r.sample(StandardNormal);
        let z: f64 = r.sample(StandardNormal);
        a.push(x);
        b.push(rho * x + (1.0 - rho * rho).sqrt() * z);
    }
    (RepresentationSet::new(a, n, 1).unwrap(), RepresentationSet::new(b, n, 1).unwrap())
}

#[test]
fn gaussian_and_uniform_closed_forms() {
    let raw = EntropyOptions::raw();
    let h = kl_entropy(&normal_set(20_000, 1, 1), &raw).unwrap().value;
    assert!((h / gaussian_entropy(1) - 1.0).abs() < 0.03, "{h}");
    let h = kl_entropy(&uniform_set(20_000, 1, 2), &raw).unwrap().value;
    assert!(h.abs() < 0.05, "{h}");
}

#[test]
fn joint_entropy_of_independent_normals() {
    let raw = EntropyOptions::raw();
    let a = normal_set(20_000, 1, 3);
    let b = normal_set(20_000, 1, 4);
    let h = kl_joint_entropy(&a, &b, &raw).unwrap().value;
    assert!((h / gaussian_entropy(2) - 1.0).abs() < 0.05, "{h}");
    // single draws scatter by about 0.02 nats, so judge the median of five
    let mis: Vec<f64> = (0..5)
        .map(|s| mutual_information(&normal_set(20_000, 1, 20 + s), &normal_set(20_000, 1, 40 + s), &raw).unwrap())
        .collect();
    let mi = common::median(mis);
    assert!(mi.abs() < 0.05, "{mi}");
}

#[test]
fn correlated_normals_mutual_information() {
    let raw = EntropyOptions::raw();
    let (a, b) = correlated_pair(20_000, 0.9, 5);
    let mi = mutual_information(&a, &b, &raw).unwrap();
    let want = -0.5 * (1.0f64 - 0.81).ln();
    assert!((mi - want).abs() < 0.1, "{mi} vs {want}");
    let independent = mutual_information(&a, &normal_set(20_000, 1, 6), &raw).unwrap();
    assert!(mutual_information(&a, &a, &raw).unwrap() > independent);
    let swapped = mutual_information(&b, &a, &raw).unwrap();
    assert!((mi - swapped).abs() < 1e-9);
}

#[test]
fn self_joint_scales_distances_by_sqrt_two() {
    let raw = EntropyOptions::raw();
    let a = normal_set(500, 3, 7);
    let h = kl_entropy(&a, &raw).unwrap();
    let hj = kl_joint_entropy(&a, &a, &raw).unwrap();
    // Same neighbors at √2 times the distance, in twice the dimension.
    let d = 3.0;
    let n = 500.0f64;
    let ln_b = |k: f64| 0.5 * k * PI.ln() - encdi::special::ln_gamma(1.0 + 0.5 * k);
    let mean_ln_r = (h.value - (n - 1.0).ln() - ln_b(d) - encdi::special::EULER_GAMMA) / d;
    let want = (n - 1.0).ln() + 2.0 * d * (mean_ln_r + 0.5 * 2f64.ln()) + ln_b(2.0 * d) + encdi::special::EULER_GAMMA;
    assert!((hj.value - want).abs() < 1e-9, "{} vs {want}", hj.value);
}

#[test]
fn scaling_shifts_entropy_by_d_ln_c() {
    let raw = EntropyOptions::raw();
    let a = normal_set(20_000, 2, 8);
    let h1 = kl_entropy(&a, &raw).unwrap().value;
    let h2 = kl_entropy(&scaled(&a, 2.0), &raw).unwrap().value;
    assert!((h2 - h1 - 2.0 * 2f64.ln()).abs() < 0.05);
}

#[test]
fn shuffle_leaves_entropies_unchanged() {
    let a = normal_set(800, 6, 9);
    let b = normal_set(800, 5, 10);
    for opts in [EntropyOptions::raw(), EntropyOptions::default()] {
        let sb = apply_obfuscation(&b, &ObfuscationSpec::shuffle(3)).unwrap();
        let h = kl_entropy(&b, &opts).unwrap().value;
        let hs = kl_entropy(&sb, &opts).unwrap().value;
        assert!((h - hs).abs() < 1e-9);
        let j = kl_joint_entropy(&a, &b, &opts).unwrap().value;
        let js = kl_joint_entropy(&a, &sb, &opts).unwrap().value;
        assert!((j - js).abs() < 1e-9);
    }
}

#[test]
fn shape_errors() {
    let a = normal_set(10, 2, 1);
    let b = normal_set(11, 2, 1);
    assert!(matches!(kl_joint_entropy(&a, &b, &EntropyOptions::raw()), Err(Error::RowCountMismatch { .. })));
    let one = normal_set(1, 2, 1);
    assert!(matches!(kl_entropy(&one, &EntropyOptions::raw()), Err(Error::TooFewRows { .. })));
}

fn small_world(seed: u64) -> SyntheticWorldConfig {
    SyntheticWorldConfig { dim: 16, n_clusters: 8, n_p1: 400, n_p2: 50, n_n: 50, seed, ..Default::default() }
}

#[test]
fn score_bounds() {
    let w = generate_world::<f64>(&small_world(1)).unwrap();
    let v = &w.victim.p1;
    let base = random_baseline(v.n_rows(), v.dim(), 99).unwrap();
    let opts = EntropyOptions::default();
    assert_eq!(mi_score(v, v, &base, &opts).unwrap().s, 1.0);
    assert_eq!(mi_score(v, &base, &base, &opts).unwrap().s, 0.0);
    assert!(matches!(mi_score(v, v, v, &opts), Err(Error::DegenerateBounds { .. })));
}

#[test]
fn stolen_scores_above_independent() {
    let opts = EntropyOptions::default();
    let mut wins = 0;
    for seed in 0..100 {
        let w = generate_world::<f64>(&small_world(seed)).unwrap();
        let v = &w.victim.p1;
        let base = random_baseline(v.n_rows(), v.dim(), seed).unwrap();
        let s = mi_score(v, &w.stolen.p1, &base, &opts).unwrap().s;
        let i = mi_score(v, &w.independent.p1, &base, &opts).unwrap().s;
        wins += usize::from(s > i);
    }
    assert!(wins >= 95, "{wins}");
}

#[test]
fn heavy_noise_destroys_the_score() {
    // signal stdev per coordinate is about sqrt(2); noise 20 is over 10x that
    let cfg = SyntheticWorldConfig { steal_noise: 20.0, ..small_world(4) };
    let w = generate_world::<f64>(&cfg).unwrap();
    let v = &w.victim.p1;
    let base = random_baseline(v.n_rows(), v.dim(), 4).unwrap();
    let s = mi_score(v, &w.stolen.p1, &base, &EntropyOptions::default()).unwrap().s;
    assert!(s < 0.2, "{s}");
}
