//! k-means++ seeding followed by one hard-assignment pass.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::{CovarianceKind, Covariances};
use crate::repio::RepresentationSet;
use crate::rng::StreamRng;
use crate::Scalar;

pub(super) struct InitialParams<T> {
    pub weights: Vec<T>,
    pub means: Vec<T>,
    pub covariances: Covariances<T>,
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Picks `k` seed rows from a subsample of at most `10·k·d` rows.
pub(super) fn kmeans_plus_plus<T: Scalar>(data: &RepresentationSet<T>, k: usize, rng: &mut StreamRng) -> Vec<T> {
    let n = data.n_rows();
    let d = data.dim();
    let m = n.min(10 * k * d).max(k);
    let pool: Vec<usize> = if m < n {
        let mut idx = index::sample(rng, n, m).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..n).collect()
    };

    let mut centers = Vec::with_capacity(k * d);
    let first = pool[rng.random_range(0..pool.len())];
    centers.extend_from_slice(data.row(first));
    let mut nearest: Vec<f64> = pool.iter().map(|&i| sq_dist(data.row(i), data.row(first)).as_f64()).collect();

    for _ in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = pool.len() - 1;
            for (p, &w) in nearest.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = p;
                    break;
                }
            }
            chosen
        } else {
            // every pooled row coincides with a center already
            rng.random_range(0..pool.len())
        };
        let c = data.row(pool[pick]);
        centers.extend_from_slice(c);
        for (slot, &i) in nearest.iter_mut().zip(&pool) {
            *slot = slot.min(sq_dist(data.row(i), c).as_f64());
        }
    }
    centers
}

/// One assignment pass over all rows: counts, means and covariances of the
/// induced hard clusters. Clusters with fewer than two members fall back to
/// the seed center and the global per-dimension variance.
pub(super) fn initial_params<T: Scalar>(
    data: &RepresentationSet<T>,
    k: usize,
    kind: CovarianceKind,
    reg: T,
    rng: &mut StreamRng,
) -> InitialParams<T> {
    let n = data.n_rows();
    let d = data.dim();
    let seeds = kmeans_plus_plus(data, k, rng);

    let labels: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = data.row(i);
            let mut best = 0;
            let mut best_d = T::infinity();
            for j in 0..k {
                let dist = sq_dist(x, &seeds[j * d..(j + 1) * d]);
                if dist < best_d {
                    best_d = dist;
                    best = j;
                }
            }
            best
        })
        .collect();

    let mut counts = vec![0usize; k];
    let mut means = vec![T::zero(); k * d];
    for (i, &j) in labels.iter().enumerate() {
        counts[j] += 1;
        for (m, &v) in means[j * d..(j + 1) * d].iter_mut().zip(data.row(i)) {
            *m += v;
        }
    }
    for j in 0..k {
        let slot = &mut means[j * d..(j + 1) * d];
        if counts[j] == 0 {
            slot.copy_from_slice(&seeds[j * d..(j + 1) * d]);
        } else {
            let c = T::of_usize(counts[j]);
            slot.iter_mut().for_each(|m| *m /= c);
        }
    }

    let global_var = global_variance(data);
    let mut diag = vec![T::zero(); k * d];
    let mut full = match kind {
        CovarianceKind::Full => vec![T::zero(); k * d * d],
        CovarianceKind::Diagonal => Vec::new(),
    };
    for (i, &j) in labels.iter().enumerate() {
        if counts[j] < 2 {
            continue;
        }
        let x = data.row(i);
        let mu = &means[j * d..(j + 1) * d];
        match kind {
            CovarianceKind::Diagonal => {
                for ((s, &xv), &mv) in diag[j * d..(j + 1) * d].iter_mut().zip(x).zip(mu) {
                    *s += (xv - mv) * (xv - mv);
                }
            }
            CovarianceKind::Full => {
                let m = &mut full[j * d * d..(j + 1) * d * d];
                for a in 0..d {
                    let ca = x[a] - mu[a];
                    for b in 0..=a {
                        m[a * d + b] += ca * (x[b] - mu[b]);
                    }
                }
            }
        }
    }
    let covariances = match kind {
        CovarianceKind::Diagonal => {
            for j in 0..k {
                let slot = &mut diag[j * d..(j + 1) * d];
                if counts[j] < 2 {
                    slot.copy_from_slice(&global_var);
                } else {
                    let c = T::of_usize(counts[j]);
                    slot.iter_mut().for_each(|s| *s /= c);
                }
                slot.iter_mut().for_each(|s| *s += reg);
            }
            Covariances::Diagonal(diag)
        }
        CovarianceKind::Full => {
            for j in 0..k {
                let m = &mut full[j * d * d..(j + 1) * d * d];
                if counts[j] < 2 {
                    m.iter_mut().for_each(|v| *v = T::zero());
                    for a in 0..d {
                        m[a * d + a] = global_var[a];
                    }
                } else {
                    let c = T::of_usize(counts[j]);
                    for a in 0..d {
                        for b in 0..=a {
                            let v = m[a * d + b] / c;
                            m[a * d + b] = v;
                            m[b * d + a] = v;
                        }
                    }
                }
                for a in 0..d {
                    m[a * d + a] += reg;
                }
            }
            Covariances::Full(full)
        }
    };

    let denom = T::of_usize(counts.iter().map(|&c| c.max(1)).sum());
    let weights = counts.iter().map(|&c| T::of_usize(c.max(1)) / denom).collect();
    InitialParams { weights, means, covariances }
}

/// Population variance of every column.
pub(super) fn global_variance<T: Scalar>(data: &RepresentationSet<T>) -> Vec<T> {
    let d = data.dim();
    let n = T::of_usize(data.n_rows());
    let mut mean = vec![T::zero(); d];
    for row in data.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![T::zero(); d];
    for row in data.rows() {
        for ((s, &m), &v) in var.iter_mut().zip(&mean).zip(row) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    var
}
