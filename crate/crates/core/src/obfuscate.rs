//! Output obfuscations an attacker may apply to a stolen encoder's
//! representations: a column shuffle, zero padding, and an elementwise
//! affine map. Each is a single fixed remapping of the whole set and can be
//! undone given the spec.

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::repio::RepresentationSet;
use crate::rng::substream;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObfuscationKind {
    Shuffle,
    Pad,
    Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadMode {
    /// Zeros after the original columns.
    #[default]
    Append,
    /// Original columns keep their order but land at seeded positions.
    RandomPositions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationSpec {
    pub kind: ObfuscationKind,
    pub seed: u64,
    /// Output dimension; pad only.
    pub pad_target_dim: usize,
    pub pad_mode: PadMode,
    /// Transform only.
    pub scale: f64,
    pub offset: f64,
}

impl ObfuscationSpec {
    pub fn shuffle(seed: u64) -> Self {
        Self { kind: ObfuscationKind::Shuffle, seed, pad_target_dim: 0, pad_mode: PadMode::Append, scale: 1.0, offset: 0.0 }
    }

    pub fn pad(target_dim: usize, mode: PadMode, seed: u64) -> Self {
        Self { kind: ObfuscationKind::Pad, pad_target_dim: target_dim, pad_mode: mode, ..Self::shuffle(seed) }
    }

    pub fn transform(scale: f64, offset: f64) -> Self {
        Self { kind: ObfuscationKind::Transform, scale, offset, ..Self::shuffle(0) }
    }

    /// Checks the spec against an input of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self.kind {
            ObfuscationKind::Shuffle => Ok(()),
            ObfuscationKind::Pad if self.pad_target_dim <= dim => Err(Error::BadSpec(format!(
                "pad target dimension {} must exceed input dimension {dim}",
                self.pad_target_dim
            ))),
            ObfuscationKind::Pad => Ok(()),
            ObfuscationKind::Transform if self.scale == 0.0 || !self.scale.is_finite() => {
                Err(Error::BadSpec(format!("transform scale must be finite and non-zero, got {}", self.scale)))
            }
            ObfuscationKind::Transform if !self.offset.is_finite() => {
                Err(Error::BadSpec(format!("transform offset must be finite, got {}", self.offset)))
            }
            ObfuscationKind::Transform => Ok(()),
        }
    }
}

/// Seeded permutation of `0..dim`; output column `j` takes input column `perm[j]`.
pub fn column_permutation(dim: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..dim).collect();
    perm.shuffle(&mut substream(seed, "obfuscate-shuffle"));
    perm
}

/// Output columns that receive the input's columns, in increasing order.
pub fn pad_positions(dim: usize, target_dim: usize, mode: PadMode, seed: u64) -> Vec<usize> {
    match mode {
        PadMode::Append => (0..dim).collect(),
        PadMode::RandomPositions => {
            let mut pos = index::sample(&mut substream(seed, "obfuscate-pad"), target_dim, dim).into_vec();
            pos.sort_unstable();
            pos
        }
    }
}

/// `out[i][j] = set[i][perm[j]]`.
pub fn apply_column_permutation<T: Scalar>(set: &RepresentationSet<T>, perm: &[usize]) -> Result<RepresentationSet<T>> {
    if perm.len() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), found: perm.len() });
    }
    let mut data = Vec::with_capacity(set.data().len());
    for row in set.rows() {
        data.extend(perm.iter().map(|&p| row[p]));
    }
    Ok(set.with_data(data, perm.len()))
}

fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (j, &p) in perm.iter().enumerate() {
        inv[p] = j;
    }
    inv
}

pub fn apply_obfuscation<T: Scalar>(reps: &RepresentationSet<T>, spec: &ObfuscationSpec) -> Result<RepresentationSet<T>> {
    spec.validate(reps.dim())?;
    match spec.kind {
        ObfuscationKind::Shuffle => apply_column_permutation(reps, &column_permutation(reps.dim(), spec.seed)),
        ObfuscationKind::Pad => {
            let target = spec.pad_target_dim;
            let pos = pad_positions(reps.dim(), target, spec.pad_mode, spec.seed);
            let mut data = vec![T::zero(); reps.n_rows() * target];
            for (out, row) in data.chunks_exact_mut(target).zip(reps.rows()) {
                for (&p, &v) in pos.iter().zip(row) {
                    out[p] = v;
                }
            }
            Ok(reps.with_data(data, target))
        }
        ObfuscationKind::Transform => {
            let (a, c) = (T::of(spec.scale), T::of(spec.offset));
            Ok(reps.with_data(reps.data().iter().map(|&x| a * x + c).collect(), reps.dim()))
        }
    }
}

/// Undoes [`apply_obfuscation`]. `original_dim` is the dimension before
/// obfuscation, needed to rebuild the pad layout.
pub fn invert_obfuscation<T: Scalar>(
    obfuscated: &RepresentationSet<T>,
    spec: &ObfuscationSpec,
    original_dim: usize,
) -> Result<RepresentationSet<T>> {
    spec.validate(original_dim)?;
    match spec.kind {
        ObfuscationKind::Shuffle => {
            if obfuscated.dim() != original_dim {
                return Err(Error::DimensionMismatch { expected: original_dim, found: obfuscated.dim() });
            }
            let perm = column_permutation(original_dim, spec.seed);
            apply_column_permutation(obfuscated, &invert_permutation(&perm))
        }
        ObfuscationKind::Pad => {
            if obfuscated.dim() != spec.pad_target_dim {
                return Err(Error::DimensionMismatch { expected: spec.pad_target_dim, found: obfuscated.dim() });
            }
            let pos = pad_positions(original_dim, spec.pad_target_dim, spec.pad_mode, spec.seed);
            let mut data = Vec::with_capacity(obfuscated.n_rows() * original_dim);
            for row in obfuscated.rows() {
                data.extend(pos.iter().map(|&p| row[p]));
            }
            Ok(obfuscated.with_data(data, original_dim))
        }
        ObfuscationKind::Transform => {
            let (a, c) = (T::of(spec.scale), T::of(spec.offset));
            Ok(obfuscated.with_data(obfuscated.data().iter().map(|&y| (y - c) / a).collect(), obfuscated.dim()))
        }
    }
}
