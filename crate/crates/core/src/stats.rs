//! One-sided Welch t-test and the Student-t survival function behind it.

use serde::{Deserialize, Serialize};

use crate::special::inc_beta_split;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TTestResult<T: Scalar> {
    /// Welch t statistic for `mean_a - mean_b`.
    pub t_statistic: T,
    /// Welch–Satterthwaite degrees of freedom.
    pub dof: T,
    /// P(T >= t) under H0: mean_a <= mean_b.
    pub p_value: T,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: T,
    pub mean_b: T,
    /// Both samples were constant; t is ±inf and p is 0 or 1.
    pub degenerate: bool,
}

/// `P(T > t)` for Student's t with `dof` degrees of freedom.
pub fn student_t_sf<T: Scalar>(t: T, dof: T) -> Result<T> {
    if !(dof > T::zero()) || dof.is_nan() {
        return Err(Error::InvalidDof(dof.as_f64()));
    }
    if t.is_nan() {
        return Ok(T::nan());
    }
    if t == T::zero() {
        return Ok(T::of(0.5));
    }
    if t.is_infinite() {
        return Ok(if t > T::zero() { T::zero() } else { T::one() });
    }
    let t2 = t * t;
    let denom = dof + t2;
    // P(|T| > |t|) = I_x(dof/2, 1/2) with x = dof/(dof+t^2)
    let two_sided = inc_beta_split(dof / denom, t2 / denom, dof * T::of(0.5), T::of(0.5));
    let tail = T::of(0.5) * two_sided;
    Ok(if t > T::zero() { tail } else { T::one() - tail })
}

fn mean_and_var<T: Scalar>(x: &[T]) -> (T, T) {
    let n = T::of_usize(x.len());
    let mean = x.iter().copied().sum::<T>() / n;
    let ss: T = x.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - T::one()))
}

/// Welch test of H0: mean(a) <= mean(b) against mean(a) > mean(b).
pub fn welch_one_sided<T: Scalar>(a: &[T], b: &[T]) -> Result<TTestResult<T>> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::TooFewSamples { n_a: a.len(), n_b: b.len() });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::BadConfig("samples must be finite".into()));
    }
    let (ma, va) = mean_and_var(a);
    let (mb, vb) = mean_and_var(b);
    let na = T::of_usize(a.len());
    let nb = T::of_usize(b.len());
    let sa = va / na;
    let sb = vb / nb;
    let se2 = sa + sb;
    let base = TTestResult {
        t_statistic: T::zero(),
        dof: na + nb - T::of(2.0),
        p_value: T::of(0.5),
        n_a: a.len(),
        n_b: b.len(),
        mean_a: ma,
        mean_b: mb,
        degenerate: false,
    };
    if se2 == T::zero() {
        if ma == mb {
            return Err(Error::ZeroVariance);
        }
        let up = ma > mb;
        return Ok(TTestResult {
            t_statistic: if up { T::infinity() } else { T::neg_infinity() },
            p_value: if up { T::zero() } else { T::one() },
            degenerate: true,
            ..base
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / (na - T::one()) + sb * sb / (nb - T::one()));
    let p = student_t_sf(t, dof)?;
    Ok(TTestResult { t_statistic: t, dof, p_value: p, ..base })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test of `values` against Uniform(0, 1),
/// using the asymptotic Kolmogorov distribution with Stephens' correction.
pub fn ks_uniform<T: Scalar>(values: &[T]) -> Result<KsResult> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.as_f64()).collect();
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::BadConfig("NaN in KS input".into()));
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = x.clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_sf(lambda) })
}

/// Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² λ²).
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
