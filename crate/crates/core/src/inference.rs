//! Ownership resolution.
//!
//! The defender splits the private set into P1 and P2. For each suspect
//! encoder a fresh density model is fitted on the suspect's P2
//! representations. Its log-likelihoods on P1 (seen in training by a victim
//! or a copy of it) are then compared with those on held-out data N by a
//! one-sided Welch test. A small p-value means the suspect's
//! representations of private training data are unusually likely, which is
//! the footprint of the victim's overfitting.
//!
//! The splits handed in must come from the same distribution: P1, P2 and N
//! drawn i.i.d. as in a standard train/validation split. Nothing here
//! augments inputs; the sets are used as given.

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gmm::{fit_gmm, CovarianceKind, GmmFitConfig};
use crate::preprocess::{PipelineOptions, PreprocessRecord};
use crate::repio::RepresentationSet;
use crate::rng::substream;
use crate::stats::{welch_one_sided, TTestResult};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub p1_indices: Vec<usize>,
    pub p2_indices: Vec<usize>,
    pub fraction_p2: f64,
    pub seed: u64,
}

/// Uniformly random partition of `0..n_private` into P1 and P2, with
/// `round(n_private * fraction_p2)` indices in P2. Both lists are sorted.
pub fn make_split(n_private: usize, fraction_p2: f64, seed: u64) -> Result<SplitPlan> {
    if n_private < 4 {
        return Err(Error::TooFewRows { needed: 4, found: n_private });
    }
    if !(fraction_p2 > 0.0 && fraction_p2 < 1.0) {
        return Err(Error::BadFraction(fraction_p2));
    }
    let n_p2 = (n_private as f64 * fraction_p2).round() as usize;
    if n_p2 < 2 || n_private - n_p2 < 2 {
        return Err(Error::BadFraction(fraction_p2));
    }
    let mut order: Vec<usize> = (0..n_private).collect();
    order.shuffle(&mut substream(seed, "private-split"));
    let mut p2_indices = order[..n_p2].to_vec();
    let mut p1_indices = order[n_p2..].to_vec();
    p2_indices.sort_unstable();
    p1_indices.sort_unstable();
    Ok(SplitPlan { p1_indices, p2_indices, fraction_p2, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceOptions {
    pub gmm: GmmFitConfig,
    pub alpha: f64,
    pub pipeline: PipelineOptions,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        Self { gmm: GmmFitConfig::default(), alpha: 0.05, pipeline: PipelineOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Stolen,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmSummary {
    pub k: usize,
    pub covariance_kind: CovarianceKind,
    /// Mean log-likelihood of the training split under the fitted model.
    pub final_train_mean_log_lik: f64,
    pub iterations: usize,
}

/// The vectors the verdict was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct InferenceAudit<T: Scalar> {
    /// Rows of P1 and N that entered the test, in the order scored.
    pub p1_rows_used: Vec<usize>,
    pub n_rows_used: Vec<usize>,
    pub p1_log_liks: Vec<T>,
    pub n_log_liks: Vec<T>,
    pub fit_log: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OwnershipVerdict<T: Scalar> {
    /// Mean log-likelihood over the P1 rows used.
    pub u_p: T,
    /// Mean log-likelihood over the N rows used.
    pub u_n: T,
    pub t_result: TTestResult<T>,
    pub alpha: f64,
    pub decision: Decision,
    pub gmm_summary: GmmSummary,
    pub n_p1: usize,
    pub n_n: usize,
    pub seed: u64,
    pub audit: InferenceAudit<T>,
}

/// Flat, serialization-ready form of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub label: String,
    pub u_p: f64,
    pub u_n: f64,
    pub t: f64,
    pub dof: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: Decision,
    pub k: usize,
    pub covariance_kind: CovarianceKind,
    pub n_p1: usize,
    pub n_n: usize,
    pub seed: u64,
}

impl<T: Scalar> OwnershipVerdict<T> {
    pub fn is_stolen(&self) -> bool {
        self.decision == Decision::Stolen
    }

    pub fn p_value(&self) -> f64 {
        self.t_result.p_value.as_f64()
    }

    pub fn record(&self, label: impl Into<String>) -> VerdictRecord {
        VerdictRecord {
            label: label.into(),
            u_p: self.u_p.as_f64(),
            u_n: self.u_n.as_f64(),
            t: self.t_result.t_statistic.as_f64(),
            dof: self.t_result.dof.as_f64(),
            p_value: self.p_value(),
            alpha: self.alpha,
            decision: self.decision,
            k: self.gmm_summary.k,
            covariance_kind: self.gmm_summary.covariance_kind,
            n_p1: self.n_p1,
            n_n: self.n_n,
            seed: self.seed,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::BadConfig(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Picks `m` of `n` rows, all of them in order when `m == n`.
fn subsample(n: usize, m: usize, seed: u64, label: &str) -> Vec<usize> {
    if m >= n {
        return (0..n).collect();
    }
    let mut idx = index::sample(&mut substream(seed, label), n, m).into_vec();
    idx.sort_unstable();
    idx
}

/// Runs the test with the default preprocessing (row l2 normalization).
pub fn run_dataset_inference<T: Scalar>(
    reps_p1: &RepresentationSet<T>,
    reps_p2: &RepresentationSet<T>,
    reps_n: &RepresentationSet<T>,
    gmm_config: &GmmFitConfig,
    alpha: f64,
) -> Result<OwnershipVerdict<T>> {
    let options = InferenceOptions { gmm: gmm_config.clone(), alpha, pipeline: PipelineOptions::default() };
    run_dataset_inference_with(reps_p1, reps_p2, reps_n, &options)
}

/// Fits preprocessing and the mixture on P2, scores P1 and N, and tests
/// `H0: u_p <= u_n`. When P1 and N differ in size the larger one is
/// subsampled, seeded from the mixture seed, so both samples have
/// `min(|P1|, |N|)` rows.
pub fn run_dataset_inference_with<T: Scalar>(
    reps_p1: &RepresentationSet<T>,
    reps_p2: &RepresentationSet<T>,
    reps_n: &RepresentationSet<T>,
    options: &InferenceOptions,
) -> Result<OwnershipVerdict<T>> {
    check_alpha(options.alpha)?;
    let d = reps_p2.dim();
    for other in [reps_p1, reps_n] {
        if other.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: other.dim() });
        }
    }
    let seed = options.gmm.seed;
    let preprocessing = PreprocessRecord::fit(reps_p2, &options.pipeline)?;
    let train = preprocessing.apply(reps_p2)?;
    let model = fit_gmm(&train, &options.gmm)?.with_preprocessing(preprocessing);

    let m = reps_p1.n_rows().min(reps_n.n_rows());
    let p1_rows_used = subsample(reps_p1.n_rows(), m, seed, "p1-subsample");
    let n_rows_used = subsample(reps_n.n_rows(), m, seed, "n-subsample");
    let p1 = reps_p1.select_rows(&p1_rows_used)?;
    let n = reps_n.select_rows(&n_rows_used)?;
    let p1_log_liks = model.per_point_log_likelihoods(&p1)?;
    let n_log_liks = model.per_point_log_likelihoods(&n)?;

    let t_result = welch_one_sided(&p1_log_liks, &n_log_liks)?;
    let decision = if t_result.p_value.as_f64() < options.alpha { Decision::Stolen } else { Decision::Inconclusive };
    Ok(OwnershipVerdict {
        u_p: t_result.mean_a,
        u_n: t_result.mean_b,
        alpha: options.alpha,
        decision,
        gmm_summary: GmmSummary {
            k: model.k(),
            covariance_kind: model.covariance_kind(),
            final_train_mean_log_lik: model.final_log_likelihood().map_or(f64::NAN, |v| v.as_f64()),
            iterations: model.fit_log().len(),
        },
        n_p1: p1.n_rows(),
        n_n: n.n_rows(),
        seed,
        audit: InferenceAudit {
            p1_rows_used,
            n_rows_used,
            p1_log_liks,
            n_log_liks,
            fit_log: model.fit_log().to_vec(),
        },
        t_result,
    })
}

/// One suspect encoder's representations of the three splits.
#[derive(Debug, Clone, Copy)]
pub struct Suspect<'a, T: Scalar> {
    pub label: &'a str,
    pub p1: &'a RepresentationSet<T>,
    pub p2: &'a RepresentationSet<T>,
    pub n: &'a RepresentationSet<T>,
}

/// Runs every suspect independently, each with its own mixture. Results
/// come back in input order; a failing suspect does not affect the others.
pub fn run_suite<T: Scalar>(
    suspects: &[Suspect<'_, T>],
    options: &InferenceOptions,
) -> Vec<(String, Result<OwnershipVerdict<T>>)> {
    suspects
        .par_iter()
        .map(|s| (s.label.to_string(), run_dataset_inference_with(s.p1, s.p2, s.n, options)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        let plan = make_split(10, 0.5, 3).unwrap();
        assert_eq!((plan.p1_indices.len(), plan.p2_indices.len()), (5, 5));
        let mut all: Vec<usize> = plan.p1_indices.iter().chain(&plan.p2_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(plan, make_split(10, 0.5, 3).unwrap());
        assert!(matches!(make_split(10, 0.0, 3), Err(Error::BadFraction(_))));
        assert!(matches!(make_split(10, 1.0, 3), Err(Error::BadFraction(_))));
        assert!(matches!(make_split(10, 0.05, 3), Err(Error::BadFraction(_))));
        assert!(matches!(make_split(3, 0.5, 3), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn subsample_is_sorted_and_distinct() {
        let s = subsample(100, 30, 1, "x");
        assert_eq!(s.len(), 30);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample(5, 5, 1, "x"), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn bad_alpha_and_dimension() {
        let a = RepresentationSet::new((0..40).map(|i| (i as f64 * 0.7).sin() + 2.0).collect(), 20, 2).unwrap();
        let b = RepresentationSet::new((0..60).map(|i| (i as f64 * 0.3).cos() + 2.0).collect(), 20, 3).unwrap();
        let cfg = GmmFitConfig { k: 2, ..Default::default() };
        assert!(matches!(run_dataset_inference(&a, &a, &b, &cfg, 0.05), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(run_dataset_inference(&a, &a, &a, &cfg, 0.0), Err(Error::BadConfig(_))));
    }
}
