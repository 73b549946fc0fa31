//! Pairwise similarity between two encoders' representations of the same
//! inputs: absolute cosine score, l2 score, lp distances and histograms.
//!
//! By default each row is centered (its own mean subtracted) and scaled to
//! unit l2 norm first. For unit vectors `‖a − b‖₂ = √(2(1 − sim(a, b)))`, so
//! the l2 score `1 − ½‖a − b‖₂` and the cosine score determine each other.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::preprocess::{center_rows, l2_normalize_rows};
use crate::repio::RepresentationSet;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimilarityOptions {
    /// Skip centering and normalization.
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SimilarityReport<T: Scalar> {
    /// Mean over pairs of |cos(a_i, b_i)|.
    pub cosine_score: T,
    pub cosine_stderr: T,
    /// Mean over pairs of 1 − ½‖a_i − b_i‖₂.
    pub l2_score: T,
    pub l2_score_stderr: T,
    pub l1_mean: T,
    pub l1_stderr: T,
    pub l2_mean: T,
    pub l2_stderr: T,
    pub linf_mean: T,
    pub linf_stderr: T,
    pub n_pairs: usize,
    /// |cos(a_i, b_i)| per pair, in row order.
    pub per_pair_cosine: Vec<T>,
    pub per_pair_l2_score: Vec<T>,
}

/// Equal-width histogram; `edges.len() == counts.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Histogram<T: Scalar> {
    pub edges: Vec<T>,
    pub counts: Vec<usize>,
}

impl<T: Scalar> Histogram<T> {
    /// `bin_left,bin_right,count` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "bin_left,bin_right,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{},{}", self.edges[i].as_f64(), self.edges[i + 1].as_f64(), c)?;
        }
        Ok(())
    }
}

/// `√(2(1 − sim))`: distance between unit vectors with cosine `sim`.
pub fn unit_distance_from_cosine<T: Scalar>(sim: T) -> T {
    (T::of(2.0) * (T::one() - sim)).max(T::zero()).sqrt()
}

/// `|1 − 2(1 − score)²|`: the cosine score implied by an l2 score.
pub fn cosine_from_l2_score<T: Scalar>(score: T) -> T {
    let g = T::one() - score;
    (T::one() - T::of(2.0) * g * g).abs()
}

fn check_pair<T: Scalar>(a: &RepresentationSet<T>, b: &RepresentationSet<T>) -> Result<()> {
    if a.n_rows() != b.n_rows() {
        return Err(Error::RowCountMismatch { left: a.n_rows(), right: b.n_rows() });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

fn prepare<T: Scalar>(set: &RepresentationSet<T>, options: &SimilarityOptions) -> Result<RepresentationSet<T>> {
    if options.raw {
        Ok(set.clone())
    } else {
        l2_normalize_rows(&center_rows(set))
    }
}

fn prepared_pair<T: Scalar>(
    a: &RepresentationSet<T>,
    b: &RepresentationSet<T>,
    options: &SimilarityOptions,
) -> Result<(RepresentationSet<T>, RepresentationSet<T>)> {
    check_pair(a, b)?;
    Ok((prepare(a, options)?, prepare(b, options)?))
}

fn pair_cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let dot: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: T = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let nb: T = b.iter().map(|&x| x * x).sum::<T>().sqrt();
    let c = dot / (na * nb);
    c.max(-T::one()).min(T::one())
}

fn pair_distance<T: Scalar>(a: &[T], b: &[T], p: Norm) -> T {
    let diffs = a.iter().zip(b).map(|(&x, &y)| (x - y).abs());
    match p {
        Norm::L1 => diffs.sum(),
        Norm::L2 => diffs.map(|v| v * v).sum::<T>().sqrt(),
        Norm::LInf => diffs.fold(T::zero(), T::max),
    }
}

/// Mean and standard error (sample stdev / √N).
fn mean_stderr<T: Scalar>(v: &[T]) -> (T, T) {
    let n = T::of_usize(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    if v.len() < 2 {
        return (mean, T::zero());
    }
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one());
    (mean, (var / n).sqrt())
}

/// |cos| per pair after preprocessing.
pub fn per_pair_cosine<T: Scalar>(
    reps_a: &RepresentationSet<T>,
    reps_b: &RepresentationSet<T>,
    options: &SimilarityOptions,
) -> Result<Vec<T>> {
    let (a, b) = prepared_pair(reps_a, reps_b, options)?;
    Ok(a.rows().zip(b.rows()).map(|(x, y)| pair_cosine(x, y).abs()).collect())
}

/// Mean absolute cosine similarity over aligned pairs.
pub fn cosine_score<T: Scalar>(
    reps_a: &RepresentationSet<T>,
    reps_b: &RepresentationSet<T>,
    options: &SimilarityOptions,
) -> Result<T> {
    let per = per_pair_cosine(reps_a, reps_b, options)?;
    Ok(mean_stderr(&per).0)
}

pub fn per_pair_l2_score<T: Scalar>(
    reps_a: &RepresentationSet<T>,
    reps_b: &RepresentationSet<T>,
    options: &SimilarityOptions,
) -> Result<Vec<T>> {
    let (a, b) = prepared_pair(reps_a, reps_b, options)?;
    let half = T::of(0.5);
    Ok(a.rows()
        .zip(b.rows())
        .map(|(x, y)| T::one() - half * pair_distance(x, y, Norm::L2))
        .collect())
}

/// Mean of `1 − ½‖â − b̂‖₂` over aligned pairs.
pub fn l2_score<T: Scalar>(
    reps_a: &RepresentationSet<T>,
    reps_b: &RepresentationSet<T>,
    options: &SimilarityOptions,
) -> Result<T> {
    Ok(mean_stderr(&per_pair_l2_score(reps_a, reps_b, options)?).0)
}

/// `(mean, stderr)` of the per-pair lp distance.
pub fn lp_distances<T: Scalar>(
    reps_a: &RepresentationSet<T>,
    reps_b: &RepresentationSet<T>,
    p: Norm,
    options: &SimilarityOptions,
) -> Result<(T, T)> {
    let (a, b) = prepared_pair(reps_a, reps_b, options)?;
    let per: Vec<T> = a.rows().zip(b.rows()).map(|(x, y)| pair_distance(x, y, p)).collect();
    Ok(mean_stderr(&per))
}

/// Every score at once, preprocessing the inputs a single time.
pub fn similarity_report<T: Scalar>(
    reps_a: &RepresentationSet<T>,
    reps_b: &RepresentationSet<T>,
    options: &SimilarityOptions,
) -> Result<SimilarityReport<T>> {
    let (a, b) = prepared_pair(reps_a, reps_b, options)?;
    let half = T::of(0.5);
    let n = a.n_rows();
    let mut cos = Vec::with_capacity(n);
    let mut l1 = Vec::with_capacity(n);
    let mut l2 = Vec::with_capacity(n);
    let mut linf = Vec::with_capacity(n);
    for (x, y) in a.rows().zip(b.rows()) {
        cos.push(pair_cosine(x, y).abs());
        l1.push(pair_distance(x, y, Norm::L1));
        l2.push(pair_distance(x, y, Norm::L2));
        linf.push(pair_distance(x, y, Norm::LInf));
    }
    let l2_scores: Vec<T> = l2.iter().map(|&d| T::one() - half * d).collect();
    let (cosine_score, cosine_stderr) = mean_stderr(&cos);
    let (l2_score, l2_score_stderr) = mean_stderr(&l2_scores);
    let (l1_mean, l1_stderr) = mean_stderr(&l1);
    let (l2_mean, l2_stderr) = mean_stderr(&l2);
    let (linf_mean, linf_stderr) = mean_stderr(&linf);
    Ok(SimilarityReport {
        cosine_score,
        cosine_stderr,
        l2_score,
        l2_score_stderr,
        l1_mean,
        l1_stderr,
        l2_mean,
        l2_stderr,
        linf_mean,
        linf_stderr,
        n_pairs: n,
        per_pair_cosine: cos,
        per_pair_l2_score: l2_scores,
    })
}

/// Equal-width histogram over `range`, or over `[min, max]` of the data when
/// `range` is `None`. Values outside a fixed range land in the edge bins, so
/// counts always sum to the input length.
pub fn pair_histogram<T: Scalar>(scores: &[T], n_bins: usize, range: Option<(T, T)>) -> Result<Histogram<T>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if n_bins == 0 {
        return Err(Error::BadConfig("n_bins must be at least 1".into()));
    }
    let (lo, mut hi) = match range {
        Some((lo, hi)) if hi > lo => (lo, hi),
        Some(_) => return Err(Error::BadConfig("histogram range must have hi > lo".into())),
        None => {
            let lo = scores.iter().copied().fold(T::infinity(), T::min);
            let hi = scores.iter().copied().fold(T::neg_infinity(), T::max);
            (lo, hi)
        }
    };
    if hi <= lo {
        hi = lo + T::one();
    }
    let nb = T::of_usize(n_bins);
    let width = (hi - lo) / nb;
    let edges: Vec<T> = (0..=n_bins).map(|i| lo + width * T::of_usize(i)).collect();
    let mut counts = vec![0usize; n_bins];
    for &s in scores {
        let pos = ((s - lo) / width).floor();
        let idx = if pos < T::zero() { 0 } else { pos.to_usize().unwrap_or(n_bins - 1).min(n_bins - 1) };
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}
