//! Gaussian mixture density estimator fitted by expectation–maximization.
//!
//! A [`GmmModel`] carries the preprocessing pipeline it was trained behind.
//! [`GmmModel::log_density`] works in model space (already preprocessed
//! vectors); the set-level scoring functions run the recorded pipeline first.

mod fit;
mod init;
mod io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::preprocess::PreprocessRecord;
use crate::repio::RepresentationSet;
use crate::special::log_sum_exp;
use crate::{Error, Result, Scalar};

pub use fit::fit_gmm;
pub use io::{decode_model, encode_model, load_model, save_model, GMM_MAGIC, GMM_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    Diagonal,
    Full,
}

impl std::fmt::Display for CovarianceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CovarianceKind::Diagonal => "diagonal",
            CovarianceKind::Full => "full",
        })
    }
}

/// Per-component covariances, flattened.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariances<T> {
    /// `k x d` variances.
    Diagonal(Vec<T>),
    /// `k` row-major `d x d` matrices.
    Full(Vec<T>),
}

impl<T> Covariances<T> {
    pub fn kind(&self) -> CovarianceKind {
        match self {
            Covariances::Diagonal(_) => CovarianceKind::Diagonal,
            Covariances::Full(_) => CovarianceKind::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmFitConfig {
    pub k: usize,
    pub covariance_kind: CovarianceKind,
    pub max_iters: usize,
    /// Stop once `|Δ mean-log-lik| / max(1, |mean-log-lik|)` drops below this.
    pub rel_tol: f64,
    /// Added to every covariance diagonal in each M-step.
    pub reg_floor: f64,
    pub n_init: usize,
    pub seed: u64,
}

impl Default for GmmFitConfig {
    fn default() -> Self {
        Self {
            k: 10,
            covariance_kind: CovarianceKind::Full,
            max_iters: 200,
            rel_tol: 1e-5,
            reg_floor: 1e-6,
            n_init: 1,
            seed: 0,
        }
    }
}

impl GmmFitConfig {
    /// Defaults scaled to the representation width: 10 full-covariance
    /// components up to 512 dimensions, 50 diagonal ones beyond.
    pub fn for_dim(dim: usize) -> Self {
        if dim <= 512 {
            Self::default()
        } else {
            Self {
                k: 50,
                covariance_kind: CovarianceKind::Diagonal,
                ..Self::default()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadConfig(m.to_owned()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol must be positive");
        }
        if !(self.reg_floor > 0.0) || !self.reg_floor.is_finite() {
            return bad("reg_floor must be positive and finite");
        }
        if self.n_init == 0 {
            return bad("n_init must be at least 1");
        }
        Ok(())
    }
}

/// Cached per-component quantities for density evaluation.
#[derive(Debug, Clone, PartialEq)]
enum Factor<T> {
    Diagonal { inv_var: Vec<T>, log_norm: T },
    Full { chol: Vec<T>, log_norm: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel<T: Scalar> {
    weights: Vec<T>,
    means: Vec<T>,
    covariances: Covariances<T>,
    dim: usize,
    pub preprocessing: PreprocessRecord<T>,
    fit_log: Vec<T>,
    reseed_iters: Vec<usize>,
    log_weights: Vec<T>,
    factors: Vec<Factor<T>>,
}

impl<T: Scalar> GmmModel<T> {
    /// Assembles a model from explicit parameters.
    ///
    /// Weights must be non-negative and sum to 1 within 1e-9. Diagonal
    /// variances must be positive; full covariances must be symmetric
    /// positive definite.
    pub fn from_parts(weights: Vec<T>, means: Vec<T>, covariances: Covariances<T>, dim: usize) -> Result<Self> {
        let k = weights.len();
        if k == 0 || dim == 0 {
            return Err(Error::BadConfig("mixture needs k >= 1 and dim >= 1".into()));
        }
        if means.len() != k * dim {
            return Err(Error::DimensionMismatch { expected: k * dim, found: means.len() });
        }
        let expected_cov = match &covariances {
            Covariances::Diagonal(_) => k * dim,
            Covariances::Full(_) => k * dim * dim,
        };
        let cov_len = match &covariances {
            Covariances::Diagonal(v) | Covariances::Full(v) => v.len(),
        };
        if cov_len != expected_cov {
            return Err(Error::DimensionMismatch { expected: expected_cov, found: cov_len });
        }
        let total: T = weights.iter().copied().sum();
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite())
            || (total - T::one()).abs().as_f64() > 1e-9_f64.max(T::epsilon().as_f64() * 4.0 * k as f64)
        {
            return Err(Error::BadConfig("weights must be a probability vector".into()));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::BadConfig("means must be finite".into()));
        }
        if let Covariances::Full(c) = &covariances {
            for j in 0..k {
                let m = &c[j * dim * dim..(j + 1) * dim * dim];
                for a in 0..dim {
                    for b in 0..a {
                        if m[a * dim + b] != m[b * dim + a] {
                            return Err(Error::BadConfig(format!("covariance {j} is not symmetric")));
                        }
                    }
                }
            }
        }
        let factors = build_factors(&covariances, k, dim)?;
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            weights,
            means,
            covariances,
            dim,
            preprocessing: PreprocessRecord::default(),
            fit_log: Vec::new(),
            reseed_iters: Vec::new(),
            log_weights,
            factors,
        })
    }

    pub fn with_preprocessing(mut self, record: PreprocessRecord<T>) -> Self {
        self.preprocessing = record;
        self
    }

    pub(crate) fn with_fit_log(mut self, log: Vec<T>, reseeds: Vec<usize>) -> Self {
        self.fit_log = log;
        self.reseed_iters = reseeds;
        self
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn means(&self) -> &[T] {
        &self.means
    }

    pub fn mean(&self, j: usize) -> &[T] {
        &self.means[j * self.dim..(j + 1) * self.dim]
    }

    pub fn covariances(&self) -> &Covariances<T> {
        &self.covariances
    }

    pub fn covariance_kind(&self) -> CovarianceKind {
        self.covariances.kind()
    }

    /// Mean training log-likelihood after each E-step.
    pub fn fit_log(&self) -> &[T] {
        &self.fit_log
    }

    /// Indices into [`fit_log`](Self::fit_log) whose entry follows an
    /// empty-component re-seed. The log is monotone between these points.
    pub fn reseed_iters(&self) -> &[usize] {
        &self.reseed_iters
    }

    /// Mean log-likelihood on the training data at the returned parameters.
    pub fn final_log_likelihood(&self) -> Option<T> {
        self.fit_log.last().copied()
    }

    /// `log w_j + log N(x; μ_j, Σ_j)` for every component, into `out`.
    fn component_log_probs(&self, x: &[T], out: &mut [T], scratch: &mut [T]) {
        let half = T::of(0.5);
        for (j, (o, factor)) in out.iter_mut().zip(&self.factors).enumerate() {
            let mu = self.mean(j);
            let (quad, log_norm) = match factor {
                Factor::Diagonal { inv_var, log_norm } => {
                    let mut q = T::zero();
                    for ((&xi, &mi), &iv) in x.iter().zip(mu).zip(inv_var) {
                        let c = xi - mi;
                        q += c * c * iv;
                    }
                    (q, *log_norm)
                }
                Factor::Full { chol, log_norm } => {
                    for ((s, &xi), &mi) in scratch.iter_mut().zip(x).zip(mu) {
                        *s = xi - mi;
                    }
                    let (centered, work) = scratch.split_at_mut(self.dim);
                    let q = linalg::forward_solve_sq_norm(chol, self.dim, centered, work);
                    (q, *log_norm)
                }
            };
            *o = self.log_weights[j] + log_norm - half * quad;
        }
    }

    /// log Σ_j w_j N(x; μ_j, Σ_j) in nats, for a point already in model space.
    pub fn log_density(&self, point: &[T]) -> Result<T> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: point.len() });
        }
        let mut buf = vec![T::zero(); self.k()];
        let mut scratch = vec![T::zero(); 2 * self.dim];
        self.component_log_probs(point, &mut buf, &mut scratch);
        Ok(log_sum_exp(&buf))
    }

    /// Log densities of already-preprocessed rows, evaluated in parallel.
    fn log_densities_model_space(&self, set: &RepresentationSet<T>) -> Vec<T> {
        let k = self.k();
        let d = self.dim;
        (0..set.n_rows())
            .into_par_iter()
            .map_init(
                || (vec![T::zero(); k], vec![T::zero(); 2 * d]),
                |(buf, scratch), i| {
                    self.component_log_probs(set.row(i), buf, scratch);
                    log_sum_exp(buf)
                },
            )
            .collect()
    }

    /// Runs the recorded preprocessing, then scores every row.
    pub fn per_point_log_likelihoods(&self, set: &RepresentationSet<T>) -> Result<Vec<T>> {
        if set.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: set.dim() });
        }
        if self.preprocessing.is_identity() {
            return Ok(self.log_densities_model_space(set));
        }
        let prepared = self.preprocessing.apply(set)?;
        Ok(self.log_densities_model_space(&prepared))
    }

    pub fn mean_log_likelihood(&self, set: &RepresentationSet<T>) -> Result<T> {
        let ll = self.per_point_log_likelihoods(set)?;
        Ok(ll.iter().copied().sum::<T>() / T::of_usize(ll.len()))
    }
}

fn build_factors<T: Scalar>(cov: &Covariances<T>, k: usize, d: usize) -> Result<Vec<Factor<T>>> {
    let ln_2pi = (T::of(2.0) * T::PI()).ln();
    let half = T::of(0.5);
    let dd = T::of_usize(d);
    (0..k)
        .map(|j| match cov {
            Covariances::Diagonal(v) => {
                let var = &v[j * d..(j + 1) * d];
                if var.iter().any(|&s| !(s > T::zero()) || !s.is_finite()) {
                    return Err(Error::DegenerateComponent { component: j });
                }
                let log_det: T = var.iter().map(|s| s.ln()).sum();
                Ok(Factor::Diagonal {
                    inv_var: var.iter().map(|&s| T::one() / s).collect(),
                    log_norm: -half * (dd * ln_2pi + log_det),
                })
            }
            Covariances::Full(m) => {
                let chol = linalg::cholesky(&m[j * d * d..(j + 1) * d * d], d)
                    .ok_or(Error::DegenerateComponent { component: j })?;
                let log_det = linalg::chol_log_det(&chol, d);
                Ok(Factor::Full { chol, log_norm: -half * (dd * ln_2pi + log_det) })
            }
        })
        .collect()
}

/// Free-function form of [`GmmModel::log_density`].
pub fn log_density<T: Scalar>(model: &GmmModel<T>, point: &[T]) -> Result<T> {
    model.log_density(point)
}

/// Free-function form of [`GmmModel::mean_log_likelihood`].
pub fn mean_log_likelihood<T: Scalar>(model: &GmmModel<T>, set: &RepresentationSet<T>) -> Result<T> {
    model.mean_log_likelihood(set)
}

/// Free-function form of [`GmmModel::per_point_log_likelihoods`].
pub fn per_point_log_likelihoods<T: Scalar>(model: &GmmModel<T>, set: &RepresentationSet<T>) -> Result<Vec<T>> {
    model.per_point_log_likelihoods(set)
}
