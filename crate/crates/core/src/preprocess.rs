//! Row centering, row l2 normalization and per-dimension standardization.

use serde::{Deserialize, Serialize};

use crate::repio::RepresentationSet;
use crate::{Error, Result, Scalar};

/// Rows whose l2 norm falls below this are rejected by [`l2_normalize_rows`].
pub const MIN_ROW_NORM: f64 = 1e-12;
pub const DEFAULT_STDEV_FLOOR: f64 = 1e-8;

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StandardizationStats<T: Scalar> {
    pub means: Vec<T>,
    pub stdevs: Vec<T>,
}

impl<T: Scalar> StandardizationStats<T> {
    pub fn dim(&self) -> usize {
        self.means.len()
    }
}

/// Subtracts each row's own mean from its entries.
pub fn center_rows<T: Scalar>(set: &RepresentationSet<T>) -> RepresentationSet<T> {
    let d = T::of_usize(set.dim());
    let mut out = Vec::with_capacity(set.data().len());
    for row in set.rows() {
        let mean = row.iter().copied().sum::<T>() / d;
        out.extend(row.iter().map(|&v| v - mean));
    }
    set.with_data(out, set.dim())
}

pub fn l2_normalize_rows<T: Scalar>(set: &RepresentationSet<T>) -> Result<RepresentationSet<T>> {
    let mut out = Vec::with_capacity(set.data().len());
    for (i, row) in set.rows().enumerate() {
        let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm >= T::of(MIN_ROW_NORM)) {
            return Err(Error::ZeroNormRow { row: i });
        }
        out.extend(row.iter().map(|&v| v / norm));
    }
    Ok(set.with_data(out, set.dim()))
}

/// Per-column statistics, two-pass, summed in row order.
pub fn fit_standardization<T: Scalar>(set: &RepresentationSet<T>) -> Result<StandardizationStats<T>> {
    let n = set.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    let d = set.dim();
    let nf = T::of_usize(n);
    let mut means = vec![T::zero(); d];
    for row in set.rows() {
        for (m, &v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= nf;
    }
    let mut vars = vec![T::zero(); d];
    for row in set.rows() {
        for ((s, &m), &v) in vars.iter_mut().zip(&means).zip(row) {
            let c = v - m;
            *s += c * c;
        }
    }
    let stdevs = vars.into_iter().map(|s| (s / nf).sqrt()).collect();
    Ok(StandardizationStats { means, stdevs })
}

/// `(x - mean) / max(stdev, floor)` column by column.
pub fn apply_standardization<T: Scalar>(
    set: &RepresentationSet<T>,
    stats: &StandardizationStats<T>,
    floor: T,
) -> Result<RepresentationSet<T>> {
    if stats.dim() != set.dim() || stats.stdevs.len() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: stats.dim(),
            found: set.dim(),
        });
    }
    let scales: Vec<T> = stats.stdevs.iter().map(|&s| s.max(floor)).collect();
    let mut out = Vec::with_capacity(set.data().len());
    for row in set.rows() {
        out.extend(
            row.iter()
                .zip(&stats.means)
                .zip(&scales)
                .map(|((&v, &m), &s)| (v - m) / s),
        );
    }
    Ok(set.with_data(out, set.dim()))
}

/// Which preprocessing steps to run before density estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Standardize with statistics fitted on the estimator's training split.
    pub standardize: bool,
    pub l2_normalize: bool,
    pub stdev_floor: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            standardize: false,
            l2_normalize: true,
            stdev_floor: DEFAULT_STDEV_FLOOR,
        }
    }
}

/// The preprocessing a fitted model expects its inputs to go through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PreprocessRecord<T: Scalar> {
    pub standardization: Option<StandardizationStats<T>>,
    pub stdev_floor: T,
    pub l2_normalize: bool,
}

impl<T: Scalar> Default for PreprocessRecord<T> {
    /// Identity: no step is applied.
    fn default() -> Self {
        Self {
            standardization: None,
            stdev_floor: T::of(DEFAULT_STDEV_FLOOR),
            l2_normalize: false,
        }
    }
}

impl<T: Scalar> PreprocessRecord<T> {
    /// Fits the pipeline on `train` (standardization statistics come from
    /// this set only).
    pub fn fit(train: &RepresentationSet<T>, options: &PipelineOptions) -> Result<Self> {
        let standardization = if options.standardize {
            Some(fit_standardization(train)?)
        } else {
            None
        };
        Ok(Self {
            standardization,
            stdev_floor: T::of(options.stdev_floor),
            l2_normalize: options.l2_normalize,
        })
    }

    pub fn apply(&self, set: &RepresentationSet<T>) -> Result<RepresentationSet<T>> {
        let mut out = match &self.standardization {
            Some(stats) => apply_standardization(set, stats, self.stdev_floor)?,
            None => set.clone(),
        };
        if self.l2_normalize {
            out = l2_normalize_rows(&out)?;
        }
        Ok(out)
    }

    pub fn is_identity(&self) -> bool {
        self.standardization.is_none() && !self.l2_normalize
    }
}
