//! Closed-form and quadrature-based minimal tubes with known invariants:
//! the catenoid in ℝ³ and the rotational (n−1)-dimensional catenoids in ℝⁿ.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::mesh::{MeshError, TriMesh};
use crate::quadrature::{integrate, QuadratureError};
use crate::Vec3;

/// Absolute and relative tolerance of the profile quadratures.
pub const QUAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("resolution {nu}x{nv} too coarse (need nu >= 8, nv >= 2)")]
    Resolution { nu: usize, nv: usize },
    #[error("the 2-dimensional catenoid (n = 3) has infinite life-time")]
    InfiniteLifetime,
    #[error("requested half-height {requested} reaches the asymptote at {limit}")]
    BeyondAsymptote { requested: f64, limit: f64 },
    #[error("profile integration failed")]
    Integration(#[from] QuadratureError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Catenoid `(a·cosh(v/a)·cos u, a·cosh(v/a)·sin u, v)` over `v ∈ [v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatenoidSpec {
    pub neck_radius: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub nu: usize,
    pub nv: usize,
}

impl CatenoidSpec {
    pub fn validate(&self) -> Result<(), AnalyticError> {
        if !(self.neck_radius > 0.0 && self.neck_radius.is_finite()) {
            return Err(AnalyticError::Invalid(format!(
                "neck radius must be positive, got {}",
                self.neck_radius
            )));
        }
        if !(self.v_min < self.v_max) || !self.v_min.is_finite() || !self.v_max.is_finite() {
            return Err(AnalyticError::Invalid(format!(
                "need finite v_min < v_max, got [{}, {}]",
                self.v_min, self.v_max
            )));
        }
        if self.nu < 8 || self.nv < 2 {
            return Err(AnalyticError::Resolution {
                nu: self.nu,
                nv: self.nv,
            });
        }
        Ok(())
    }

    pub fn point(&self, u: f64, v: f64) -> Vec3 {
        let a = self.neck_radius;
        let r = a * (v / a).cosh();
        Vec3::new(r * u.cos(), r * u.sin(), v)
    }
}

/// Triangulated catenoid band with `nu·(nv+1)` vertices and outward normals.
pub fn catenoid_mesh(spec: &CatenoidSpec) -> Result<TriMesh, AnalyticError> {
    spec.validate()?;
    let dv = (spec.v_max - spec.v_min) / spec.nv as f64;
    Ok(TriMesh::from_tube_grid(spec.nu, spec.nv, |i, j| {
        let u = TAU * i as f64 / spec.nu as f64;
        let v = if j == spec.nv {
            spec.v_max
        } else {
            spec.v_min + dv * j as f64
        };
        spec.point(u, v)
    })?)
}

/// Flow vector of the catenoid with neck radius `a`: `(0, 0, 2πa)`.
pub fn catenoid_flux(a: f64) -> Vec3 {
    Vec3::new(0.0, 0.0, TAU * a)
}

/// `∬(−K)` over the band `v1 ≤ x₃ ≤ v2`: `2π(tanh(v2/a) − tanh(v1/a))`.
/// Infinite limits are allowed.
pub fn catenoid_total_curvature(a: f64, v1: f64, v2: f64) -> Result<f64, AnalyticError> {
    if !(a > 0.0) || v1 > v2 || v1.is_nan() || v2.is_nan() {
        return Err(AnalyticError::Invalid(format!(
            "need a > 0 and v1 <= v2, got a={a}, [{v1}, {v2}]"
        )));
    }
    Ok(TAU * ((v2 / a).tanh() - (v1 / a).tanh()))
}

/// `(s^{2m} − 1)` for `s = 1 + ε²`, accurate for small ε.
fn neck_gap(eps: f64, m: usize) -> f64 {
    (2.0 * m as f64 * (eps * eps).ln_1p()).exp_m1()
}

/// Integrand of `t(ε)` after substituting `f = f₀(1 + ε²)`; finite at the neck.
fn height_integrand(eps: f64, m: usize) -> f64 {
    if eps == 0.0 {
        return 2.0 / (2.0 * m as f64).sqrt();
    }
    2.0 * eps / neck_gap(eps, m).sqrt()
}

/// Axial height above the neck at which the profile radius reaches `f₀(1+ε²)`.
fn height_at(eps_from: f64, eps_to: f64, m: usize, f0: f64) -> Result<f64, AnalyticError> {
    let r = integrate(
        |e| height_integrand(e, m),
        eps_from,
        eps_to,
        QUAD_TOL,
        QUAD_TOL,
    )?;
    Ok(f0 * r.value)
}

/// One sample `(t, f, f′)` of a rotational profile.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProfileSample {
    pub t: f64,
    pub f: f64,
    pub df: f64,
}

/// Profile radius `f(t)` of the (n−1)-dimensional catenoid in ℝⁿ with neck `f₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    n: usize,
    f0: f64,
    samples: Vec<ProfileSample>,
}

impl ProfileCurve {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neck(&self) -> f64 {
        self.f0
    }

    /// Samples in increasing `t`, symmetric about the neck.
    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    /// Largest relative deviation of `f^{n−2}/√(1+f′²)` from `f₀^{n−2}`.
    pub fn first_integral_residual(&self) -> f64 {
        let m = (self.n - 2) as i32;
        let target = self.f0.powi(m);
        self.samples
            .iter()
            .map(|s| (s.f.powi(m) / (1.0 + s.df * s.df).sqrt() - target).abs() / target)
            .fold(0.0, f64::max)
    }
}

/// How far from the neck the profile extends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileExtent {
    /// Up to `|t| = span`, sampled uniformly in `t`.
    HalfHeight(f64),
    /// Up to radius `f = cap`, sampled uniformly in `ε = √(f/f₀ − 1)`.
    RadiusCap(f64),
}

fn check_profile_args(n: usize, f0: f64) -> Result<usize, AnalyticError> {
    if n < 3 {
        return Err(AnalyticError::Invalid(format!(
            "ambient dimension must be >= 3, got {n}"
        )));
    }
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(AnalyticError::Invalid(format!(
            "neck radius must be positive, got {f0}"
        )));
    }
    Ok(n - 2)
}

/// Integrates `f′ = √((f/f₀)^{2(n−2)} − 1)` from the neck `f(0) = f₀` and
/// extends it symmetrically to `t < 0`. `count` samples are taken on each
/// side of the neck.
pub fn ncatenoid_profile(
    n: usize,
    f0: f64,
    extent: ProfileExtent,
    count: usize,
) -> Result<ProfileCurve, AnalyticError> {
    let m = check_profile_args(n, f0)?;
    if count < 2 {
        return Err(AnalyticError::Invalid("need at least 2 samples".into()));
    }
    let mut eps = Vec::with_capacity(count);
    let mut ts = Vec::with_capacity(count);
    match extent {
        ProfileExtent::RadiusCap(cap) => {
            if !(cap > f0) {
                return Err(AnalyticError::Invalid(format!(
                    "radius cap {cap} must exceed the neck {f0}"
                )));
            }
            let e_max = (cap / f0 - 1.0).sqrt();
            let mut t = 0.0;
            for k in 0..count {
                let e = e_max * k as f64 / (count - 1) as f64;
                if k > 0 {
                    t += height_at(eps[k - 1], e, m, f0)?;
                }
                eps.push(e);
                ts.push(t);
            }
        }
        ProfileExtent::HalfHeight(span) => {
            if !(span > 0.0 && span.is_finite()) {
                return Err(AnalyticError::Invalid(format!(
                    "half-height must be positive, got {span}"
                )));
            }
            if m >= 2 {
                let limit = 0.5 * ncatenoid_lifetime(n, f0)?;
                if span >= limit {
                    return Err(AnalyticError::BeyondAsymptote {
                        requested: span,
                        limit,
                    });
                }
            }
            let mut e_prev = 0.0;
            let mut t_prev = 0.0;
            for k in 0..count {
                let target = span * k as f64 / (count - 1) as f64;
                let e = solve_height(target, e_prev, t_prev, m, f0)?;
                eps.push(e);
                ts.push(target);
                e_prev = e;
                t_prev = target;
            }
        }
    }

    let mut samples = Vec::with_capacity(2 * count - 1);
    for k in (1..count).rev() {
        let f = f0 * (1.0 + eps[k] * eps[k]);
        samples.push(ProfileSample {
            t: -ts[k],
            f,
            df: -neck_gap(eps[k], m).sqrt(),
        });
    }
    for k in 0..count {
        samples.push(ProfileSample {
            t: ts[k],
            f: f0 * (1.0 + eps[k] * eps[k]),
            df: neck_gap(eps[k], m).sqrt(),
        });
    }
    Ok(ProfileCurve { n, f0, samples })
}

/// Finds ε with `t(ε) = target`, starting from a known point `(e0, t0)`
/// with `t0 <= target`. Safeguarded Newton on the monotone map ε ↦ t.
fn solve_height(target: f64, e0: f64, t0: f64, m: usize, f0: f64) -> Result<f64, AnalyticError> {
    if target == t0 {
        return Ok(e0);
    }
    // bracket
    let mut lo = (e0, t0);
    let mut step = (target - t0) / (f0 * height_integrand(e0, m));
    let mut hi = loop {
        let e = lo.0 + step;
        let t = t0 + height_at(e0, e, m, f0)?;
        if t >= target {
            break (e, t);
        }
        lo = (e, t);
        step *= 2.0;
        if !e.is_finite() || e > 1e12 {
            return Err(AnalyticError::Invalid(format!(
                "height {target} not reached"
            )));
        }
    };
    for _ in 0..200 {
        let (el, tl) = lo;
        let (eh, th) = hi;
        let mut e = el + (target - tl) * (eh - el) / (th - tl);
        if !(e > el && e < eh) {
            e = 0.5 * (el + eh);
        }
        let t = tl + height_at(el, e, m, f0)?;
        if (t - target).abs() <= 1e-14 * target.max(1.0) || (eh - el) <= 1e-15 * eh {
            return Ok(e);
        }
        if t < target {
            lo = (e, t);
        } else {
            hi = (e, t);
        }
    }
    Ok(0.5 * (lo.0 + hi.0))
}

/// Height above the neck where the radius of the profile reaches `cap`.
/// Grows without bound in `cap` for n = 3 and saturates for n ≥ 4.
pub fn profile_height(n: usize, f0: f64, cap: f64) -> Result<f64, AnalyticError> {
    let m = check_profile_args(n, f0)?;
    if !(cap >= f0) {
        return Err(AnalyticError::Invalid(format!(
            "radius cap {cap} below the neck {f0}"
        )));
    }
    height_at(0.0, (cap / f0 - 1.0).sqrt(), m, f0)
}

/// Life-time `2f₀∫₁^∞ ds/√(s^{2(n−2)} − 1)` of the (n−1)-catenoid, n ≥ 4.
///
/// The substitution `s = 1/(1 − w²)` maps the infinite range onto
/// `w ∈ [0, 1]` with a smooth integrand, so no tail truncation is needed.
pub fn ncatenoid_lifetime(n: usize, f0: f64) -> Result<f64, AnalyticError> {
    let m = check_profile_args(n, f0)?;
    if m < 2 {
        return Err(AnalyticError::InfiniteLifetime);
    }
    let integrand = |w: f64| {
        if w == 0.0 {
            return 2.0 / (2.0 * m as f64).sqrt();
        }
        let w2 = w * w;
        let u_pow = (1.0 - w2).powi(m as i32 - 2);
        let gap = -(2.0 * m as f64 * (-w2).ln_1p()).exp_m1();
        2.0 * w * u_pow / gap.sqrt()
    };
    let r = integrate(integrand, 0.0, 1.0, 1e-13, 1e-12)?;
    Ok(2.0 * f0 * r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catenoid_counts_and_surface() {
        let spec = CatenoidSpec {
            neck_radius: 1.0,
            v_min: -1.0,
            v_max: 1.0,
            nu: 64,
            nv: 32,
        };
        let m = catenoid_mesh(&spec).unwrap();
        assert_eq!(m.vertex_count(), 64 * 33);
        assert_eq!(m.boundary_loops().len(), 2);
        for p in m.vertices() {
            let r2 = p.x * p.x + p.y * p.y;
            assert!((r2 - p.z.cosh().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn catenoid_spec_validation() {
        let good = CatenoidSpec {
            neck_radius: 1.0,
            v_min: -1.0,
            v_max: 1.0,
            nu: 8,
            nv: 2,
        };
        assert!(good.validate().is_ok());
        assert!(CatenoidSpec { nu: 7, ..good }.validate().is_err());
        assert!(CatenoidSpec { nv: 1, ..good }.validate().is_err());
        assert!(CatenoidSpec {
            neck_radius: 0.0,
            ..good
        }
        .validate()
        .is_err());
        assert!(CatenoidSpec {
            v_max: -1.0,
            ..good
        }
        .validate()
        .is_err());
    }

    #[test]
    fn flux_and_curvature_closed_forms() {
        assert_eq!(catenoid_flux(2.0), Vec3::new(0.0, 0.0, 2.0 * TAU));
        assert_eq!(catenoid_total_curvature(1.0, 0.3, 0.3).unwrap(), 0.0);
        let full = catenoid_total_curvature(1.0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((full - 2.0 * TAU).abs() < 1e-15);
        assert!(catenoid_total_curvature(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn lifetime_rejects_n3() {
        assert_eq!(
            ncatenoid_lifetime(3, 1.0),
            Err(AnalyticError::InfiniteLifetime)
        );
    }

    #[test]
    fn profile_n3_is_cosh() {
        let p = ncatenoid_profile(3, 1.0, ProfileExtent::HalfHeight(3.0), 61).unwrap();
        assert_eq!(p.samples().len(), 121);
        for s in p.samples() {
            assert!((s.f - s.t.cosh()).abs() < 1e-8 * s.f, "t={} f={}", s.t, s.f);
            assert!((s.df - s.t.sinh()).abs() < 1e-7 * s.f);
        }
        assert!(p.first_integral_residual() < 1e-12);
    }

    #[test]
    fn profile_beyond_asymptote_rejected() {
        let err = ncatenoid_profile(4, 1.0, ProfileExtent::HalfHeight(1.4), 10).unwrap_err();
        assert!(matches!(err, AnalyticError::BeyondAsymptote { .. }));
    }
}
