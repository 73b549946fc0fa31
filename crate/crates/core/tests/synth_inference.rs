mod common;

use common::{median, rng};
use encdi::entropy::{mi_score, EntropyOptions};
use encdi::gmm::{CovarianceKind, GmmFitConfig};
use encdi::inference::{run_dataset_inference, run_suite, Decision, Suspect, InferenceOptions};
use encdi::repio::RepresentationSet;
use encdi::similarity::{cosine_score, SimilarityOptions};
use encdi::stats::{ks_uniform, welch_one_sided};
use encdi::synth::{emulate_stealing, generate_world, random_baseline, StealMap, SyntheticWorldConfig};
use encdi::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

fn world(dim: usize, n: usize, rho: f64, seed: u64) -> SyntheticWorldConfig {
    SyntheticWorldConfig { dim, n_clusters: 8, n_p1: n, n_p2: n, n_n: n, gap_rho: rho, seed, ..Default::default() }
}

fn diag(k: usize, seed: u64) -> GmmFitConfig {
    GmmFitConfig { k, covariance_kind: CovarianceKind::Diagonal, seed, ..Default::default() }
}

fn mean_center_distance(set: &RepresentationSet<f64>, centers: &[f64], labels: &[usize]) -> f64 {
    let d = set.dim();
    let total: f64 = set
        .rows()
        .zip(labels)
        .map(|(r, &l)| r.iter().zip(&centers[l * d..(l + 1) * d]).map(|(x, c)| (x - c).powi(2)).sum::<f64>().sqrt())
        .sum();
    total / set.n_rows() as f64
}

#[test]
fn membership_gap_ratio() {
    let w = generate_world::<f64>(&world(64, 5000, 0.9, 3)).unwrap();
    let gt = &w.ground_truth;
    let p1 = mean_center_distance(&w.victim.p1, &gt.victim_centers, &gt.labels_p1);
    let n = mean_center_distance(&w.victim.n, &gt.victim_centers, &gt.labels_n);
    // oracle: Monte-Carlo ratio of radial means of rho*z and z in 64 dims
    let mut r = rng(77);
    let mut radial = |scale: f64| {
        (0..20_000)
            .map(|_| (0..64).map(|_| (scale * r.sample::<f64, _>(StandardNormal)).powi(2)).sum::<f64>().sqrt())
            .sum::<f64>()
    };
    let oracle = radial(0.9) / radial(1.0);
    assert!(p1 < n);
    assert!((p1 / n / oracle - 1.0).abs() < 0.02, "{} vs {oracle}", p1 / n);
}

#[test]
fn no_gap_means_exchangeable_splits() {
    let p: Vec<f64> = (0..200)
        .map(|seed| {
            let w = generate_world::<f64>(&world(8, 60, 1.0, seed)).unwrap();
            let proj = |s: &RepresentationSet<f64>| -> Vec<f64> { s.rows().map(|r| r.iter().sum::<f64>()).collect() };
            welch_one_sided(&proj(&w.victim.p1), &proj(&w.victim.n)).unwrap().p_value
        })
        .collect();
    assert!(ks_uniform(&p).unwrap().p_value > 0.01);
}

#[test]
fn identity_copy_has_unit_cosine() {
    let w = generate_world::<f64>(&world(16, 100, 0.9, 1)).unwrap();
    let s = emulate_stealing(&w.victim.p1, StealMap::Identity, 0.0, 5).unwrap();
    assert_eq!(cosine_score(&w.victim.p1, &s, &SimilarityOptions::default()).unwrap(), 1.0);
}

#[test]
fn rotation_hides_from_cosine_but_not_from_mi_or_inference() {
    let cfg = SyntheticWorldConfig { steal_noise: 0.0, ..world(64, 1000, 0.9, 2) };
    let w = generate_world::<f64>(&cfg).unwrap();
    let opts = SimilarityOptions::default();
    let c = cosine_score(&w.victim.p1, &w.stolen.p1, &opts).unwrap();
    assert!(c < 0.2, "{c}");
    let base = random_baseline(w.victim.p1.n_rows(), 64, 2).unwrap();
    let s = mi_score(&w.victim.p1, &w.stolen.p1, &base, &EntropyOptions::default()).unwrap().s;
    assert!(s > 0.8, "{s}");
    let v = run_dataset_inference(&w.victim.p1, &w.victim.p2, &w.victim.n, &diag(10, 2), 0.05).unwrap();
    let st = run_dataset_inference(&w.stolen.p1, &w.stolen.p2, &w.stolen.n, &diag(10, 2), 0.05).unwrap();
    assert_eq!(v.decision, Decision::Stolen);
    assert_eq!(st.decision, Decision::Stolen);
}

#[test]
fn victim_with_gap_is_flagged() {
    let w = generate_world::<f64>(&world(64, 2000, 0.9, 11)).unwrap();
    let v = run_dataset_inference(&w.victim.p1, &w.victim.p2, &w.victim.n, &diag(10, 11), 0.05).unwrap();
    assert_eq!(v.decision, Decision::Stolen);
    assert!(v.p_value() < 0.05);
    assert!(v.u_p > v.u_n);
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    assert!((v.u_p - mean(&v.audit.p1_log_liks)).abs() < 1e-12);
    assert!((v.u_n - mean(&v.audit.n_log_liks)).abs() < 1e-12);
    assert_eq!(v.record("victim").decision, Decision::Stolen);
}

#[test]
fn independent_suspect_without_gap_is_calibrated() {
    let inconclusive = (0..100)
        .filter(|&seed| {
            let w = generate_world::<f64>(&world(16, 400, 1.0, seed)).unwrap();
            let s = &w.independent;
            run_dataset_inference(&s.p1, &s.p2, &s.n, &diag(8, seed), 0.05).unwrap().decision == Decision::Inconclusive
        })
        .count();
    assert!(inconclusive >= 90, "{inconclusive}");
}

#[test]
fn wrong_dimension_is_rejected() {
    let w = generate_world::<f64>(&world(8, 50, 0.9, 1)).unwrap();
    let other = generate_world::<f64>(&world(6, 50, 0.9, 1)).unwrap();
    let r = run_dataset_inference(&w.victim.p1, &w.victim.p2, &other.victim.n, &diag(2, 1), 0.05);
    assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
}

#[test]
fn suite_keeps_order_and_isolates_failures() {
    let w = generate_world::<f64>(&world(64, 2000, 0.9, 5)).unwrap();
    let options = InferenceOptions { gmm: diag(10, 5), ..Default::default() };
    let suspects: Vec<Suspect<'_, f64>> = [("victim", &w.victim), ("stolen", &w.stolen), ("independent", &w.independent)]
        .into_iter()
        .map(|(label, s)| Suspect { label, p1: &s.p1, p2: &s.p2, n: &s.n })
        .collect();
    let out = run_suite(&suspects, &options);
    let decisions: Vec<Decision> = out.iter().map(|(_, r)| r.as_ref().unwrap().decision).collect();
    assert_eq!(decisions, vec![Decision::Stolen, Decision::Stolen, Decision::Inconclusive]);
    assert_eq!(out.iter().map(|(l, _)| l.as_str()).collect::<Vec<_>>(), vec!["victim", "stolen", "independent"]);

    assert!(run_suite::<f64>(&[], &options).is_empty());

    let tiny = w.victim.p2.select_rows(&[0, 1, 2]).unwrap();
    let mixed = [suspects[0], Suspect { label: "broken", p1: &w.victim.p1, p2: &tiny, n: &w.victim.n }, suspects[2]];
    let out = run_suite(&mixed, &options);
    assert!(out[0].1.is_ok() && out[2].1.is_ok());
    assert!(matches!(out[1].1, Err(Error::TooFewRows { .. })));
}

#[test]
fn p_value_falls_as_the_gap_widens() {
    let medians: Vec<f64> = [1.0, 0.95, 0.9, 0.8]
        .iter()
        .map(|&rho| {
            median(
                (0..20)
                    .map(|seed| {
                        let w = generate_world::<f64>(&world(16, 400, rho, seed)).unwrap();
                        let v = &w.victim;
                        run_dataset_inference(&v.p1, &v.p2, &v.n, &diag(8, seed), 0.05).unwrap().p_value()
                    })
                    .collect(),
            )
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}

#[test]
fn score_rises_as_steal_noise_falls() {
    let medians: Vec<f64> = [2.0, 0.5, 0.0]
        .iter()
        .map(|&noise| {
            median(
                (0..20)
                    .map(|seed| {
                        let cfg = SyntheticWorldConfig { steal_noise: noise, ..world(16, 300, 0.9, seed) };
                        let w = generate_world::<f64>(&cfg).unwrap();
                        let base = random_baseline(300, 16, seed).unwrap();
                        mi_score(&w.victim.p1, &w.stolen.p1, &base, &EntropyOptions::default()).unwrap().s
                    })
                    .collect(),
            )
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] >= w[0]), "{medians:?}");
}

fn permuted(set: &RepresentationSet<f64>, seed: u64) -> RepresentationSet<f64> {
    let mut idx: Vec<usize> = (0..set.n_rows()).collect();
    idx.shuffle(&mut rng(seed));
    set.select_rows(&idx).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn row_order_does_not_matter(seed in 0u64..1000, perm_seed in any::<u64>()) {
        let w = generate_world::<f64>(&world(8, 120, 0.9, seed)).unwrap();
        let s = &w.stolen;
        let cfg = diag(4, seed);
        let a = run_dataset_inference(&s.p1, &s.p2, &s.n, &cfg, 0.05).unwrap();
        let b = run_dataset_inference(&permuted(&s.p1, perm_seed), &s.p2, &permuted(&s.n, perm_seed ^ 1), &cfg, 0.05).unwrap();
        prop_assert!((a.u_p - b.u_p).abs() < 1e-12);
        prop_assert!((a.u_n - b.u_n).abs() < 1e-12);
        prop_assert!((a.t_result.t_statistic - b.t_result.t_statistic).abs() < 1e-12);
        prop_assert!((a.p_value() - b.p_value()).abs() < 1e-12);
    }

    #[test]
    fn decision_matches_threshold(seed in 0u64..1000, alpha in 0.001f64..0.5) {
        let w = generate_world::<f64>(&world(8, 60, 0.95, seed)).unwrap();
        let v = &w.victim;
        let r = run_dataset_inference(&v.p1, &v.p2, &v.n, &diag(3, seed), alpha).unwrap();
        prop_assert_eq!(r.decision == Decision::Stolen, r.p_value() < alpha);
    }
}
