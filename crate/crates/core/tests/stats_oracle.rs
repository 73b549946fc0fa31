mod common;

use common::{integrate, integrate_to_infinity, rng, t_sf_by_quadrature};
use encdi::stats::{ks_uniform, student_t_sf, welch_one_sided};
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn quadrature_self_check() {
    assert!((integrate(&|x| x.powi(20), 0.0, 1.0, 1e-15) - 1.0 / 21.0).abs() < 1e-15);
    assert!((integrate_to_infinity(&|x| (-x).exp(), 0.0, 1e-15) - 1.0).abs() < 1e-13);
    let cauchy = integrate_to_infinity(&|x| 1.0 / (1.0 + x * x), 0.0, 1e-15);
    assert!((cauchy - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
}

#[test]
fn survival_function_matches_quadrature() {
    for &dof in &[1.0, 2.0, 3.5, 10.0, 100.0, 1e4] {
        for i in 0..=40 {
            let t = -10.0 + 0.5 * i as f64;
            let got = student_t_sf(t, dof).unwrap();
            let want = t_sf_by_quadrature(t, dof);
            assert!((got - want).abs() < 1e-9, "t={t} dof={dof}: {got} vs {want}");
        }
    }
}

#[test]
fn reference_points() {
    let p = student_t_sf(1.0f64, 10.0).unwrap();
    assert!((p - 0.17045).abs() < 5e-6, "{p}");
    assert!((p - t_sf_by_quadrature(1.0, 10.0)).abs() < 1e-9);
    let p = student_t_sf(2.228f64, 10.0).unwrap();
    assert!((p - 0.025).abs() < 1e-4, "{p}");
}

#[test]
fn shifted_ramp_p_value_matches_quadrature() {
    let b: Vec<f64> = (0..10).map(f64::from).collect();
    let a: Vec<f64> = b.iter().map(|v| v + 10.0).collect();
    let r = welch_one_sided(&a, &b).unwrap();
    assert!(r.p_value < 1e-5);
    assert!((r.p_value - t_sf_by_quadrature(r.t_statistic, r.dof)).abs() < 1e-12);
}

#[test]
fn null_p_values_are_uniform() {
    let mut r = rng(2024);
    let p: Vec<f64> = (0..2000)
        .map(|_| {
            let a: Vec<f64> = (0..30).map(|_| r.sample(StandardNormal)).collect();
            let b: Vec<f64> = (0..25).map(|_| r.sample::<f64, _>(StandardNormal) * 1.5).collect();
            welch_one_sided(&a, &b).unwrap().p_value
        })
        .collect();
    let ks = ks_uniform(&p).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}
