use rayon::prelude::*;

use super::init::{global_variance, initial_params};
use super::{CovarianceKind, Covariances, GmmFitConfig, GmmModel};
use crate::repio::RepresentationSet;
use crate::rng::indexed_substream;
use crate::special::log_sum_exp;
use crate::{Error, Result, Scalar};

/// Effective responsibility mass below which a component counts as empty.
const EMPTY_COMPONENT_MASS: f64 = 1e-8;

/// Fits a mixture by EM, keeping the best of `n_init` restarts.
///
/// `data` must already be in model space; the returned model's
/// preprocessing record is the identity until the caller attaches one.
/// Restarts are compared on final mean log-likelihood, ties going to the
/// earliest restart.
pub fn fit_gmm<T: Scalar>(data: &RepresentationSet<T>, config: &GmmFitConfig) -> Result<GmmModel<T>> {
    config.validate()?;
    if data.n_rows() < config.k {
        return Err(Error::TooFewRows { needed: config.k, found: data.n_rows() });
    }
    let mut best: Option<GmmModel<T>> = None;
    let mut first_err = None;
    for restart in 0..config.n_init {
        match fit_once(data, config, restart as u64) {
            Ok(model) => {
                let better = match &best {
                    None => true,
                    Some(b) => model.final_log_likelihood() > b.final_log_likelihood(),
                };
                if better {
                    best = Some(model);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one restart ran"))
}

struct Params<T> {
    weights: Vec<T>,
    means: Vec<T>,
    covariances: Covariances<T>,
}

fn fit_once<T: Scalar>(data: &RepresentationSet<T>, config: &GmmFitConfig, restart: u64) -> Result<GmmModel<T>> {
    let n = data.n_rows();
    let d = data.dim();
    let k = config.k;
    let reg = T::of(config.reg_floor);
    let mut rng = indexed_substream(config.seed, "gmm-init", restart);
    let init = initial_params(data, k, config.covariance_kind, reg, &mut rng);
    let mut params = Params { weights: init.weights, means: init.means, covariances: init.covariances };

    let global_var = global_variance(data);
    let mut log = Vec::new();
    let mut reseeds = Vec::new();
    let mut resp = vec![T::zero(); n * k];
    let mut row_ll = vec![T::zero(); n];
    let nf = T::of_usize(n);

    for iter in 0..config.max_iters {
        let model = GmmModel::from_parts(
            params.weights.clone(),
            params.means.clone(),
            params.covariances.clone(),
            d,
        )?;

        // E-step: rows are independent, the reduction below runs in row order.
        resp.par_chunks_mut(k)
            .zip(row_ll.par_iter_mut())
            .enumerate()
            .for_each_init(
                || vec![T::zero(); 2 * d],
                |scratch, (i, (r, ll))| {
                    model.component_log_probs(data.row(i), r, scratch);
                    let total = log_sum_exp(r);
                    for v in r.iter_mut() {
                        *v = (*v - total).exp();
                    }
                    *ll = total;
                },
            );
        let mean_ll = row_ll.iter().copied().sum::<T>() / nf;
        if !mean_ll.is_finite() {
            return Err(Error::DegenerateComponent { component: 0 });
        }
        let converged = log.last().is_some_and(|&prev: &T| {
            (mean_ll - prev).abs() / mean_ll.abs().max(T::one()) < T::of(config.rel_tol)
        });
        log.push(mean_ll);
        if converged || iter + 1 == config.max_iters {
            return Ok(model.with_fit_log(log, reseeds));
        }

        let reseeded = m_step(data, &resp, &row_ll, &mut params, config.covariance_kind, reg, &global_var);
        if reseeded {
            reseeds.push(log.len());
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Updates `params` in place. Returns true when an empty component had to be
/// re-seeded.
fn m_step<T: Scalar>(
    data: &RepresentationSet<T>,
    resp: &[T],
    row_ll: &[T],
    params: &mut Params<T>,
    kind: CovarianceKind,
    reg: T,
    global_var: &[T],
) -> bool {
    let n = data.n_rows();
    let d = data.dim();
    let k = params.weights.len();
    let nf = T::of_usize(n);

    // One task per component; each sums over rows in order.
    let stats: Vec<(T, Vec<T>, Vec<T>)> = (0..k)
        .into_par_iter()
        .map(|j| {
            let mut mass = T::zero();
            let mut mean = vec![T::zero(); d];
            for i in 0..n {
                let r = resp[i * k + j];
                if r == T::zero() {
                    continue;
                }
                mass += r;
                for (m, &x) in mean.iter_mut().zip(data.row(i)) {
                    *m += r * x;
                }
            }
            if mass.as_f64() < EMPTY_COMPONENT_MASS {
                return (mass, mean, Vec::new());
            }
            mean.iter_mut().for_each(|m| *m /= mass);
            let cov = match kind {
                CovarianceKind::Diagonal => {
                    let mut var = vec![T::zero(); d];
                    for i in 0..n {
                        let r = resp[i * k + j];
                        if r == T::zero() {
                            continue;
                        }
                        for ((s, &x), &m) in var.iter_mut().zip(data.row(i)).zip(&mean) {
                            *s += r * (x - m) * (x - m);
                        }
                    }
                    var.iter_mut().for_each(|s| *s = *s / mass + reg);
                    var
                }
                CovarianceKind::Full => {
                    let mut cov = vec![T::zero(); d * d];
                    let mut c = vec![T::zero(); d];
                    for i in 0..n {
                        let r = resp[i * k + j];
                        if r == T::zero() {
                            continue;
                        }
                        for ((cv, &x), &m) in c.iter_mut().zip(data.row(i)).zip(&mean) {
                            *cv = x - m;
                        }
                        for a in 0..d {
                            let ra = r * c[a];
                            let row = &mut cov[a * d..a * d + a + 1];
                            for (slot, &cb) in row.iter_mut().zip(&c[..=a]) {
                                *slot += ra * cb;
                            }
                        }
                    }
                    for a in 0..d {
                        for b in 0..=a {
                            let v = cov[a * d + b] / mass;
                            cov[a * d + b] = v;
                            cov[b * d + a] = v;
                        }
                        cov[a * d + a] += reg;
                    }
                    cov
                }
            };
            (mass, mean, cov)
        })
        .collect();

    let mut empty = Vec::new();
    for (j, (mass, mean, cov)) in stats.into_iter().enumerate() {
        if cov.is_empty() {
            empty.push(j);
            continue;
        }
        params.weights[j] = mass / nf;
        params.means[j * d..(j + 1) * d].copy_from_slice(&mean);
        match &mut params.covariances {
            Covariances::Diagonal(v) => v[j * d..(j + 1) * d].copy_from_slice(&cov),
            Covariances::Full(v) => v[j * d * d..(j + 1) * d * d].copy_from_slice(&cov),
        }
    }

    if !empty.is_empty() {
        // Re-seed each empty component on the worst-explained rows.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| row_ll[a].partial_cmp(&row_ll[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        for (slot, &j) in empty.iter().enumerate() {
            let i = order[slot.min(n - 1)];
            params.means[j * d..(j + 1) * d].copy_from_slice(data.row(i));
            params.weights[j] = T::one() / nf;
            match &mut params.covariances {
                Covariances::Diagonal(v) => {
                    for (s, &g) in v[j * d..(j + 1) * d].iter_mut().zip(global_var) {
                        *s = g + reg;
                    }
                }
                Covariances::Full(v) => {
                    let m = &mut v[j * d * d..(j + 1) * d * d];
                    m.iter_mut().for_each(|x| *x = T::zero());
                    for a in 0..d {
                        m[a * d + a] = global_var[a] + reg;
                    }
                }
            }
        }
    }

    let total: T = params.weights.iter().copied().sum();
    params.weights.iter_mut().for_each(|w| *w /= total);
    !empty.is_empty()
}
