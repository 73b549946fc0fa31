//! Kozachenko–Leonenko nearest-neighbor entropy and the mutual-information
//! score between two encoders.
//!
//! For rows `y_1..y_N` in `d` dimensions with nearest-neighbor distances
//! `R_k`, the estimate is
//!
//! ```text
//! H = mean_k ln((N - 1) R_k^d) + ln B_d + γ,    B_d = π^{d/2} / Γ(1 + d/2)
//! ```
//!
//! in nats. Joint entropy concatenates index-aligned rows and uses the summed
//! dimension. Neighbors are found exactly by scanning all pairs.
//!
//! Inputs are the representations themselves: any augmentation of the
//! underlying examples happens upstream, before encoding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::preprocess::{center_rows, l2_normalize_rows};
use crate::repio::RepresentationSet;
use crate::special::{ln_unit_ball_volume, EULER_GAMMA};
use crate::{Error, Result, Scalar};

/// Nearest-neighbor distances below this are clamped up to it.
pub const ZERO_DISTANCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyMode {
    /// Center every row, then scale it to unit l2 norm.
    #[default]
    Normalized,
    /// Use the rows as given.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntropyOptions {
    pub mode: EntropyMode,
    /// Drop columns that hold the same value in every row before anything
    /// else. They carry no information but would otherwise inflate `d`.
    pub drop_constant_columns: bool,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self { mode: EntropyMode::Normalized, drop_constant_columns: true }
    }
}

impl EntropyOptions {
    pub fn raw() -> Self {
        Self { mode: EntropyMode::Raw, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EntropyEstimate<T: Scalar> {
    /// Differential entropy in nats.
    pub value: T,
    pub n_points: usize,
    /// Dimension the estimate was computed in.
    pub dim: usize,
    /// Rows whose nearest-neighbor distance was clamped.
    pub n_clamped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MutualInfoScore<T: Scalar> {
    /// I(victim, suspect) in nats.
    pub i_raw: T,
    /// I(victim, random baseline).
    pub i_min: T,
    /// I(victim, victim).
    pub i_max: T,
    /// `(i_raw - i_min) / (i_max - i_min)` clamped to [0, 1].
    pub s: T,
}

/// Entropy terms behind one mutual-information value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MutualInfoParts<T: Scalar> {
    pub h_a: EntropyEstimate<T>,
    pub h_b: EntropyEstimate<T>,
    pub h_joint: EntropyEstimate<T>,
    pub mi: T,
}

fn drop_constant_columns<T: Scalar>(set: &RepresentationSet<T>) -> RepresentationSet<T> {
    let first = set.row(0);
    let keep: Vec<usize> = (0..set.dim())
        .filter(|&j| set.rows().any(|r| r[j] != first[j]))
        .collect();
    if keep.len() == set.dim() || keep.is_empty() {
        return set.clone();
    }
    let mut data = Vec::with_capacity(set.n_rows() * keep.len());
    for row in set.rows() {
        data.extend(keep.iter().map(|&j| row[j]));
    }
    set.with_data(data, keep.len())
}

/// Applies `options` to a set, giving the rows the estimator actually sees.
pub fn prepare<T: Scalar>(set: &RepresentationSet<T>, options: &EntropyOptions) -> Result<RepresentationSet<T>> {
    let base = if options.drop_constant_columns {
        drop_constant_columns(set)
    } else {
        set.clone()
    };
    match options.mode {
        EntropyMode::Raw => Ok(base),
        EntropyMode::Normalized => l2_normalize_rows(&center_rows(&base)),
    }
}

/// Euclidean distance from every row to its nearest other row.
pub fn nearest_neighbor_distances<T: Scalar>(set: &RepresentationSet<T>) -> Vec<T> {
    let n = set.n_rows();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let q = set.row(i);
            let mut best = T::infinity();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let mut acc = T::zero();
                for (&a, &b) in q.iter().zip(set.row(j)) {
                    let c = a - b;
                    acc += c * c;
                    if acc >= best {
                        break;
                    }
                }
                if acc < best {
                    best = acc;
                }
            }
            best.sqrt()
        })
        .collect()
}

/// Estimate on rows that are already prepared.
pub fn kl_entropy_prepared<T: Scalar>(set: &RepresentationSet<T>) -> Result<EntropyEstimate<T>> {
    let n = set.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    let d = set.dim();
    let eps = T::of(ZERO_DISTANCE_CLAMP);
    let dists = nearest_neighbor_distances(set);
    let mut n_clamped = 0;
    let mut sum_ln_r = T::zero();
    for &r in &dists {
        let r = if r < eps {
            n_clamped += 1;
            eps
        } else {
            r
        };
        sum_ln_r += r.ln();
    }
    let mean_ln_z = T::of_usize(n - 1).ln() + T::of_usize(d) * sum_ln_r / T::of_usize(n);
    let value = mean_ln_z + ln_unit_ball_volume::<T>(d) + T::of(EULER_GAMMA);
    Ok(EntropyEstimate { value, n_points: n, dim: d, n_clamped })
}

pub fn kl_entropy<T: Scalar>(reps: &RepresentationSet<T>, options: &EntropyOptions) -> Result<EntropyEstimate<T>> {
    if reps.n_rows() < 2 {
        return Err(Error::TooFewRows { needed: 2, found: reps.n_rows() });
    }
    kl_entropy_prepared(&prepare(reps, options)?)
}

/// Joint entropy of index-aligned sets, each prepared on its own and then
/// concatenated row by row.
pub fn kl_joint_entropy<T: Scalar>(
    reps_a: &RepresentationSet<T>,
    reps_b: &RepresentationSet<T>,
    options: &EntropyOptions,
) -> Result<EntropyEstimate<T>> {
    check_aligned(reps_a, reps_b)?;
    let joint = prepare(reps_a, options)?.concat_columns(&prepare(reps_b, options)?)?;
    kl_entropy_prepared(&joint)
}

fn check_aligned<T: Scalar>(a: &RepresentationSet<T>, b: &RepresentationSet<T>) -> Result<()> {
    if a.n_rows() != b.n_rows() {
        return Err(Error::RowCountMismatch { left: a.n_rows(), right: b.n_rows() });
    }
    if a.n_rows() < 2 {
        return Err(Error::TooFewRows { needed: 2, found: a.n_rows() });
    }
    Ok(())
}

/// `H(a) + H(b) - H(a, b)` with every term reported.
pub fn mutual_information_parts<T: Scalar>(
    reps_a: &RepresentationSet<T>,
    reps_b: &RepresentationSet<T>,
    options: &EntropyOptions,
) -> Result<MutualInfoParts<T>> {
    check_aligned(reps_a, reps_b)?;
    let pa = prepare(reps_a, options)?;
    let pb = prepare(reps_b, options)?;
    let h_a = kl_entropy_prepared(&pa)?;
    let h_b = kl_entropy_prepared(&pb)?;
    let h_joint = kl_entropy_prepared(&pa.concat_columns(&pb)?)?;
    let mi = h_a.value + h_b.value - h_joint.value;
    Ok(MutualInfoParts { h_a, h_b, h_joint, mi })
}

pub fn mutual_information<T: Scalar>(
    reps_a: &RepresentationSet<T>,
    reps_b: &RepresentationSet<T>,
    options: &EntropyOptions,
) -> Result<T> {
    Ok(mutual_information_parts(reps_a, reps_b, options)?.mi)
}

/// Normalized mutual-information score of a suspect against a victim.
///
/// The floor is the victim's MI with a randomly initialized encoder, the
/// ceiling its MI with itself. All three sets must be row-aligned.
pub fn mi_score<T: Scalar>(
    reps_victim: &RepresentationSet<T>,
    reps_suspect: &RepresentationSet<T>,
    reps_random_baseline: &RepresentationSet<T>,
    options: &EntropyOptions,
) -> Result<MutualInfoScore<T>> {
    check_aligned(reps_victim, reps_suspect)?;
    check_aligned(reps_victim, reps_random_baseline)?;
    let pv = prepare(reps_victim, options)?;
    let h_v = kl_entropy_prepared(&pv)?.value;
    let mi_with = |other: &RepresentationSet<T>| -> Result<T> {
        let po = prepare(other, options)?;
        let h_o = kl_entropy_prepared(&po)?.value;
        let h_j = kl_entropy_prepared(&pv.concat_columns(&po)?)?.value;
        Ok(h_v + h_o - h_j)
    };
    let i_max = mi_with(reps_victim)?;
    let i_min = mi_with(reps_random_baseline)?;
    if !(i_max > i_min) {
        return Err(Error::DegenerateBounds { i_min: i_min.as_f64(), i_max: i_max.as_f64() });
    }
    let i_raw = mi_with(reps_suspect)?;
    let s = ((i_raw - i_min) / (i_max - i_min)).max(T::zero()).min(T::one());
    Ok(MutualInfoScore { i_raw, i_min, i_max, s })
}
