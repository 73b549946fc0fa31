#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use encdi::repio::RepresentationSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_set(n: usize, d: usize, seed: u64) -> RepresentationSet<f64> {
    let mut r = rng(seed);
    let data = (0..n * d).map(|_| r.sample(StandardNormal)).collect();
    RepresentationSet::new(data, n, d).unwrap()
}

pub fn uniform_set(n: usize, d: usize, seed: u64) -> RepresentationSet<f64> {
    let mut r = rng(seed);
    let u = Uniform::new(0.0, 1.0).unwrap();
    let data = (0..n * d).map(|_| r.sample(u)).collect();
    RepresentationSet::new(data, n, d).unwrap()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`. The interval with
/// the largest error estimate is bisected until the summed estimate is below
/// `tol`, or after a fixed number of splits.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let piece = |lo: f64, hi: f64| {
        let (value, err) = gk15(f, lo, hi);
        Piece { lo, hi, value, err }
    };
    let first = piece(a, b);
    let mut total_err = first.err;
    let mut heap = BinaryHeap::from([first]);
    for _ in 0..5000 {
        if total_err <= tol {
            break;
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.lo + worst.hi);
        let (l, r) = (piece(worst.lo, mid), piece(mid, worst.hi));
        total_err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
    }
    let mut pieces = heap.into_vec();
    pieces.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    pieces.iter().map(|p| p.value).sum()
}

/// `∫_a^∞ f`, mapping `x = a + (1 - s) / s` onto `s ∈ (0, 1]`.
pub fn integrate_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let x = a + (1.0 - s) / s;
        f(x) / (s * s)
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// Student-t survival function by quadrature of the unnormalized density,
/// normalized by the quadrature of its total mass.
pub fn t_sf_by_quadrature(t: f64, dof: f64) -> f64 {
    let g = move |x: f64| (1.0 + x * x / dof).powf(-(dof + 1.0) / 2.0);
    let half = integrate_to_infinity(&g, 0.0, 1e-14);
    let tail = integrate_to_infinity(&g, t.abs(), 1e-14) / (2.0 * half);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}
