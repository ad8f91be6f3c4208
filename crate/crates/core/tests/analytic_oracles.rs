use std::f64::consts::{PI, TAU};

use mintube::analytic::{
    catenoid_mesh, catenoid_total_curvature, ncatenoid_lifetime, ncatenoid_profile, profile_height,
    AnalyticError, CatenoidSpec, ProfileExtent,
};
use mintube::mesh::total_curvature;
use statrs::function::beta::beta;

fn agm(mut a: f64, mut b: f64) -> f64 {
    // quadratic convergence: a dozen rounds reach the last ulp
    for _ in 0..12 {
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    a
}

/// Complete elliptic integral of the first kind, modulus `k`.
fn elliptic_k(k: f64) -> f64 {
    PI / (2.0 * agm(1.0, (1.0 - k * k).sqrt()))
}

/// `2f₀∫₁^∞ ds/√(s^{2m} − 1)` in closed form: `x = s^{−2m}` turns the
/// integral into `B(1/2 − 1/(2m), 1/2)/(2m)`.
fn lifetime_beta(n: usize, f0: f64) -> f64 {
    let m = (n - 2) as f64;
    2.0 * f0 * beta(0.5 - 0.5 / m, 0.5) / (2.0 * m)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let inner: f64 = (1..panels)
        .map(|k| if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * k as f64))
        .sum();
    h / 3.0 * (f(a) + f(b) + inner)
}

#[test]
fn four_dimensional_lifetime_is_an_elliptic_integral() {
    // ∫₁^∞ ds/√(s⁴ − 1) = K(1/√2)/√2
    let oracle = 2.0 * elliptic_k(0.5f64.sqrt()) / 2f64.sqrt();
    assert!((oracle - 2.622_057_554).abs() < 1e-8);
    let got = ncatenoid_lifetime(4, 1.0).unwrap();
    assert!((got - oracle).abs() / oracle < 1e-10, "{got} vs {oracle}");
}

#[test]
fn lifetimes_match_beta_function_and_decrease() {
    let mut previous = f64::INFINITY;
    for n in 4..=9 {
        let got = ncatenoid_lifetime(n, 1.0).unwrap();
        let oracle = lifetime_beta(n, 1.0);
        assert!(
            (got - oracle).abs() / oracle < 1e-9,
            "n={n}: {got} vs {oracle}"
        );
        assert!(got < previous);
        previous = got;
    }
}

#[test]
fn lifetime_scales_with_neck() {
    for n in 4..=7 {
        let base = ncatenoid_lifetime(n, 1.0).unwrap();
        for f0 in [0.25, 2.0, 7.5] {
            let scaled = ncatenoid_lifetime(n, f0).unwrap();
            assert!((scaled - f0 * base).abs() <= 1e-12 * f0 * base);
        }
    }
}

#[test]
fn three_dimensional_catenoid_is_unbounded() {
    assert!(matches!(
        ncatenoid_lifetime(3, 1.0),
        Err(AnalyticError::InfiniteLifetime)
    ));
    // n = 3 profile is cosh, so the height at radius F is acosh(F)
    for cap in [10.0, 1e3, 1e6] {
        let h = profile_height(3, 1.0, cap).unwrap();
        assert!((h - f64::acosh(cap)).abs() < 1e-8 * h, "{h}");
    }
    assert!(profile_height(3, 1.0, 1e3).unwrap() > 5.0);
    // while for n = 4 the height saturates at half the life-time
    let half = 0.5 * ncatenoid_lifetime(4, 1.0).unwrap();
    let h = profile_height(4, 1.0, 1e6).unwrap();
    assert!(h < half && half - h < 1e-5);
}

#[test]
fn profiles_satisfy_first_integral() {
    for n in 3..=7 {
        let p = ncatenoid_profile(n, 1.3, ProfileExtent::RadiusCap(20.0), 200).unwrap();
        assert!(p.first_integral_residual() < 1e-8, "n={n}");
        assert_eq!(p.neck(), 1.3);
    }
}

#[test]
fn catenoid_total_curvature_quadrature() {
    for (a, v1, v2) in [(1.0, -1.0, 1.0), (2.0, -0.5, 1.5), (0.7, 0.0, 3.0)] {
        let oracle = simpson(|v: f64| TAU / a / (v / a).cosh().powi(2), v1, v2, 2000);
        let closed = catenoid_total_curvature(a, v1, v2).unwrap();
        assert!((closed - oracle).abs() < 1e-10, "{closed} vs {oracle}");
    }
    assert!(
        (catenoid_total_curvature(1.0, f64::NEG_INFINITY, f64::INFINITY).unwrap() - 2.0 * TAU)
            .abs()
            < 1e-15
    );
}

#[test]
fn discrete_total_curvature_converges_on_catenoid() {
    // the discrete sum covers interior vertices only, so compare errors
    // across resolutions rather than against a tight fixed tolerance
    let errs: Vec<f64> = [(32, 16), (64, 32), (128, 64)]
        .into_iter()
        .map(|(nu, nv)| {
            let m = catenoid_mesh(&CatenoidSpec {
                neck_radius: 1.0,
                v_min: -1.0,
                v_max: 1.0,
                nu,
                nv,
            })
            .unwrap();
            let exact = catenoid_total_curvature(1.0, -1.0, 1.0).unwrap();
            (total_curvature(&m).g - exact).abs() / exact
        })
        .collect();
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    assert!(errs[2] < 0.05, "{errs:?}");
}
