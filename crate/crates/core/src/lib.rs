//! Numerical toolkit for embedded minimal tubes: exterior-algebra
//! identities, flow vectors of cross-sections, Gauss-image diameters,
//! capacities and life-time bounds, checked on analytic catenoids,
//! higher-dimensional catenoid profiles and discrete minimal annuli.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod exterior;
pub mod flux;
pub mod linsolve;
pub mod mesh;
pub mod par;
pub mod quadrature;
pub mod report;
pub mod solver;

/// Points and vectors in ℝ³.
pub type Vec3 = nalgebra::Vector3<f64>;
