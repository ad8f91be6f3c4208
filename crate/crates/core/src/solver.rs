//! Discrete minimal annuli spanning two circles in parallel horizontal planes.
//!
//! The surface is relaxed by descent on total area. The area gradient at the
//! free vertices is `−Lx` for the cotangent Laplacian `L`; it is
//! preconditioned by solving with the cotangent stiffness matrix of the
//! current mesh (boundary held fixed) and refined with a short L-BFGS
//! history. Steps are accepted through Armijo backtracking on area, so the
//! area never increases. With no history this is the classical
//! harmonic-map iteration for discrete minimal surfaces.

use std::f64::consts::TAU;

use serde::Serialize;
use thiserror::Error;

use crate::linsolve::{LinearSolveError, SpdFactor};
use crate::mesh::{voronoi_areas, CotanLaplacian, MeshError, TriMesh, TriangleGeometry};
use crate::{par, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid annulus problem: {0}")]
    InvalidProblem(String),
    #[error("no annulus: neck pinched to {neck_ratio:.3e} of the boundary circumference at iteration {iteration}")]
    NoAnnulus { iteration: usize, neck_ratio: f64 },
    #[error("mesh degenerated at iteration {iteration}: min triangle quality {quality:.3e}")]
    Degenerate { iteration: usize, quality: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linear(#[from] LinearSolveError),
}

/// Horizontal circle: centre and radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Circle {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self {
            center: center.into(),
            radius,
        }
    }

    pub fn point(&self, u: f64) -> Vec3 {
        Vec3::from(self.center) + Vec3::new(self.radius * u.cos(), self.radius * u.sin(), 0.0)
    }

    pub fn height(&self) -> f64 {
        self.center[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Target for the normalized residual `max_i ‖(Lx)_i‖·h̄/A_i`.
    pub tolerance: f64,
    /// Sufficient-decrease constant of the line search.
    pub armijo: f64,
    /// Smallest trial step before the search gives up.
    pub min_step: f64,
    /// Run a tangential smoothing pass every this many iterations.
    pub smoothing_interval: Option<usize>,
    /// Abort when a triangle's quality `4√3·A/Σℓ²` drops below this.
    pub min_quality: f64,
    /// Report "no annulus" when the shortest ring falls below this
    /// fraction of the smaller boundary circumference.
    pub pinch_ratio: f64,
    /// Number of quasi-Newton correction pairs kept; 0 gives plain
    /// Laplacian-preconditioned descent.
    pub memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            tolerance: 1e-6,
            armijo: 1e-4,
            min_step: 1e-12,
            smoothing_interval: None,
            min_quality: 1e-3,
            pinch_ratio: 0.05,
            memory: 8,
        }
    }
}

/// Two circles in distinct horizontal planes, `circle0` below `circle1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusProblem {
    pub circle0: Circle,
    pub circle1: Circle,
    pub nu: usize,
    pub nv: usize,
}

impl AnnulusProblem {
    pub fn new(
        circle0: Circle,
        circle1: Circle,
        nu: usize,
        nv: usize,
    ) -> Result<Self, SolverError> {
        let p = Self {
            circle0,
            circle1,
            nu,
            nv,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds a problem from a list of boundary circles, which must have
    /// exactly two entries.
    pub fn from_circles(circles: &[Circle], nu: usize, nv: usize) -> Result<Self, SolverError> {
        match circles {
            [c0, c1] => Self::new(*c0, *c1, nu, nv),
            _ => Err(SolverError::InvalidProblem(format!(
                "an annulus needs exactly two boundary circles, got {}",
                circles.len()
            ))),
        }
    }

    /// Circles of radii `r0`, `r1` at heights `t1 < t2`, the upper one
    /// shifted by `offset` along x₁.
    pub fn offset_circles(
        r0: f64,
        r1: f64,
        t1: f64,
        t2: f64,
        offset: f64,
        nu: usize,
        nv: usize,
    ) -> Result<Self, SolverError> {
        Self::new(
            Circle::new(Vec3::new(0.0, 0.0, t1), r0),
            Circle::new(Vec3::new(offset, 0.0, t2), r1),
            nu,
            nv,
        )
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidProblem(m));
        for c in [&self.circle0, &self.circle1] {
            if !(c.radius > 0.0 && c.radius.is_finite()) || !c.center.iter().all(|x| x.is_finite())
            {
                return bad(format!(
                    "circle {c:?} must have finite centre and positive radius"
                ));
            }
        }
        if !(self.circle0.height() < self.circle1.height()) {
            return bad(format!(
                "circles must lie in distinct planes with t1 < t2, got {} and {}",
                self.circle0.height(),
                self.circle1.height()
            ));
        }
        if self.nu < 8 || self.nv < 2 {
            return bad(format!(
                "resolution {}x{} too coarse (need nu >= 8, nv >= 2)",
                self.nu, self.nv
            ));
        }
        Ok(())
    }

    pub fn heights(&self) -> (f64, f64) {
        (self.circle0.height(), self.circle1.height())
    }
}

/// Tube-grid mesh with its ring structure.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusMesh {
    pub mesh: TriMesh,
    pub nu: usize,
    pub nv: usize,
}

impl AnnulusMesh {
    /// Length of each ring of the grid, bottom to top.
    pub fn ring_perimeters(&self) -> Vec<f64> {
        ring_perimeters(self.mesh.vertices(), self.nu, self.nv)
    }
}

fn ring_perimeters(x: &[Vec3], nu: usize, nv: usize) -> Vec<f64> {
    (0..=nv)
        .map(|j| {
            (0..nu)
                .map(|i| (x[j * nu + (i + 1) % nu] - x[j * nu + i]).norm())
                .sum()
        })
        .collect()
}

/// Ruled surface joining the two circles at equal angular parameter.
pub fn initial_annulus(problem: &AnnulusProblem) -> Result<AnnulusMesh, SolverError> {
    problem.validate()?;
    let (nu, nv) = (problem.nu, problem.nv);
    let mesh = TriMesh::from_tube_grid(nu, nv, |i, j| {
        let u = TAU * i as f64 / nu as f64;
        let s = j as f64 / nv as f64;
        let (p0, p1) = (problem.circle0.point(u), problem.circle1.point(u));
        // endpoints exactly on the circles
        match j {
            0 => p0,
            j if j == nv => p1,
            _ => p0 * (1.0 - s) + p1 * s,
        }
    })?;
    Ok(AnnulusMesh { mesh, nu, nv })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterationCap,
    LineSearchStalled,
}

/// Per-run convergence record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_area: f64,
    /// Area before the first step and after every accepted step.
    pub area_history: Vec<f64>,
    /// Normalized residual at the start of every iteration.
    pub residual_history: Vec<f64>,
    pub step_history: Vec<f64>,
    pub options: SolverOptions,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Area gradient at the free vertices with its Laplacian preconditioner.
struct Linearization {
    residual: f64,
    gradient: Vec<Vec3>,
    factor: SpdFactor,
}

/// Limited-memory quasi-Newton history; the inverse Laplacian of the
/// current mesh serves as the initial inverse Hessian.
struct Memory {
    pairs: std::collections::VecDeque<(Vec<Vec3>, Vec<Vec3>, f64)>,
    capacity: usize,
}

fn dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

impl Memory {
    fn new(capacity: usize) -> Self {
        Self {
            pairs: Default::default(),
            capacity,
        }
    }

    fn push(&mut self, s: Vec<Vec3>, y: Vec<Vec3>) {
        let sy = dot(&s, &y);
        if self.capacity == 0 || !(sy > 1e-300) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    fn direction(&self, lin: &Linearization) -> Result<Vec<Vec3>, SolverError> {
        let mut q = lin.gradient.clone();
        let mut alpha = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qk, yk) in q.iter_mut().zip(y) {
                *qk -= yk * a;
            }
            alpha.push(a);
        }
        let rhs: Vec<Vec<f64>> = (0..3).map(|c| q.iter().map(|v| v[c]).collect()).collect();
        let sol = lin.factor.solve(&rhs)?;
        let mut r: Vec<Vec3> = (0..q.len())
            .map(|k| Vec3::new(sol[0][k], sol[1][k], sol[2][k]))
            .collect();
        for ((s, y, rho), a) in self.pairs.iter().zip(alpha.iter().rev()) {
            let b = rho * dot(y, &r);
            for (rk, sk) in r.iter_mut().zip(s) {
                *rk += sk * (a - b);
            }
        }
        Ok(r.into_iter().map(|v| -v).collect())
    }
}

fn triangle_quality(p: [Vec3; 3]) -> f64 {
    let g = TriangleGeometry::new(p);
    let l2 =
        (p[1] - p[0]).norm_squared() + (p[2] - p[1]).norm_squared() + (p[0] - p[2]).norm_squared();
    4.0 * 3f64.sqrt() * g.area / l2
}

fn min_quality(tris: &[[usize; 3]], x: &[Vec3]) -> f64 {
    par::map(tris, |t| triangle_quality([x[t[0]], x[t[1]], x[t[2]]]))
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn total_area(tris: &[[usize; 3]], x: &[Vec3]) -> f64 {
    par::map(tris, |t| {
        0.5 * (x[t[1]] - x[t[0]]).cross(&(x[t[2]] - x[t[0]])).norm()
    })
    .into_iter()
    .sum()
}

/// Normalized residual, area gradient `−Lx` and the factored cotangent
/// stiffness matrix restricted to the free vertices.
fn linearize(
    mesh: &TriMesh,
    fixed: &[bool],
    unknown: &[usize],
    free: &[usize],
) -> Result<Linearization, SolverError> {
    let x = mesh.vertices();
    let lap = CotanLaplacian::new(mesh);
    let areas = voronoi_areas(mesh);
    let lx = lap.apply(x);
    let h = mesh.mean_edge_length();
    let residual = free
        .iter()
        .map(|&v| lx[v].norm() * h / areas[v])
        .fold(0.0, f64::max);

    let nf = free.len();
    let mut diag = vec![0.0; nf];
    let mut lower = Vec::with_capacity(nf + lap.edges().len());
    for &(i, j, w) in lap.edges() {
        match (fixed[i], fixed[j]) {
            (false, false) => {
                let (a, b) = (unknown[i], unknown[j]);
                diag[a] += w;
                diag[b] += w;
                lower.push((a.max(b), a.min(b), -w));
            }
            (false, true) => diag[unknown[i]] += w,
            (true, false) => diag[unknown[j]] += w,
            (true, true) => {}
        }
    }
    lower.extend(diag.iter().enumerate().map(|(k, &d)| (k, k, d)));
    Ok(Linearization {
        residual,
        gradient: free.iter().map(|&v| -lx[v]).collect(),
        factor: SpdFactor::new(nf, &lower)?,
    })
}

fn tangential_smoothing(mesh: &TriMesh, free: &[usize]) -> Result<Vec<Vec3>, SolverError> {
    let x = mesh.vertices();
    let normals = crate::mesh::vertex_normals(mesh)?;
    let mut sum = vec![Vec3::zeros(); x.len()];
    let mut count = vec![0usize; x.len()];
    let lap = CotanLaplacian::new(mesh);
    for &(i, j, _) in lap.edges() {
        sum[i] += x[j];
        sum[j] += x[i];
        count[i] += 1;
        count[j] += 1;
    }
    let mut out = x.to_vec();
    for &v in free {
        let delta = sum[v] / count[v] as f64 - x[v];
        let n = normals[v];
        out[v] += 0.5 * (delta - n * n.dot(&delta));
    }
    Ok(out)
}

/// Relaxes the interior of `start` toward a discrete minimal surface.
/// Boundary vertices are never written.
pub fn minimize_area(
    start: &AnnulusMesh,
    options: &SolverOptions,
) -> Result<(AnnulusMesh, ConvergenceReport), SolverError> {
    let (nu, nv) = (start.nu, start.nv);
    let fixed = start.mesh.boundary_mask();
    let mut unknown = vec![usize::MAX; fixed.len()];
    let mut free = Vec::new();
    for (v, &f) in fixed.iter().enumerate() {
        if !f {
            unknown[v] = free.len();
            free.push(v);
        }
    }
    let perimeters = ring_perimeters(start.mesh.vertices(), nu, nv);
    let boundary_len = perimeters[0].min(perimeters[nv]);

    let mut mesh = start.mesh.clone();
    let mut area = total_area(mesh.triangles(), mesh.vertices());
    let mut report = ConvergenceReport {
        status: SolveStatus::IterationCap,
        iterations: 0,
        final_residual: f64::NAN,
        final_area: area,
        area_history: vec![area],
        residual_history: Vec::new(),
        step_history: Vec::new(),
        options: *options,
    };

    let mut memory = Memory::new(options.memory);
    let mut previous: Option<(Vec<Vec3>, Vec<Vec3>)> = None;
    for iteration in 0..=options.max_iterations {
        let lin = linearize(&mesh, &fixed, &unknown, &free)?;
        report.residual_history.push(lin.residual);
        report.final_residual = lin.residual;
        if lin.residual <= options.tolerance {
            report.status = SolveStatus::Converged;
            break;
        }
        if iteration == options.max_iterations {
            break;
        }
        let position: Vec<Vec3> = free.iter().map(|&v| mesh.vertices()[v]).collect();
        if let Some((x0, g0)) = previous.take() {
            let s = position.iter().zip(&x0).map(|(a, b)| a - b).collect();
            let y = lin.gradient.iter().zip(&g0).map(|(a, b)| a - b).collect();
            memory.push(s, y);
        }
        let mut direction = memory.direction(&lin)?;
        let mut slope = -dot(&lin.gradient, &direction);
        if !(slope > 0.0) {
            // quasi-Newton direction lost descent: restart from the
            // plain preconditioned gradient
            memory.pairs.clear();
            direction = memory.direction(&lin)?;
            slope = -dot(&lin.gradient, &direction);
        }

        let mut s = 1.0;
        let accepted = loop {
            let mut trial = mesh.vertices().to_vec();
            for (&v, d) in free.iter().zip(&direction) {
                trial[v] += d * s;
            }
            let trial_area = total_area(mesh.triangles(), &trial);
            let decrease = options.armijo * s * slope;
            if trial_area.is_finite()
                && (trial_area <= area - decrease
                    || (decrease <= 1e-14 * area && trial_area <= area))
            {
                break Some((trial, trial_area));
            }
            s *= 0.5;
            if s < options.min_step {
                break None;
            }
        };
        let Some((next, next_area)) = accepted else {
            report.status = SolveStatus::LineSearchStalled;
            break;
        };
        previous = Some((position, lin.gradient));

        let quality = min_quality(mesh.triangles(), &next);
        let neck = ring_perimeters(&next, nu, nv)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
            / boundary_len;
        if neck < options.pinch_ratio {
            return Err(SolverError::NoAnnulus {
                iteration: iteration + 1,
                neck_ratio: neck,
            });
        }
        if !(quality >= options.min_quality) {
            return Err(SolverError::Degenerate {
                iteration: iteration + 1,
                quality,
            });
        }
        mesh = mesh.with_vertices(next)?;
        area = next_area;
        report.iterations = iteration + 1;
        report.area_history.push(area);
        report.step_history.push(s);

        if let Some(k) = options.smoothing_interval {
            if k > 0 && (iteration + 1) % k == 0 {
                mesh = mesh.with_vertices(tangential_smoothing(&mesh, &free)?)?;
                area = total_area(mesh.triangles(), mesh.vertices());
                memory.pairs.clear();
                previous = None;
            }
        }
    }
    report.final_area = area;
    if !report.converged() {
        return Err(SolverError::NotConverged {
            iterations: report.iterations,
            residual: report.final_residual,
        });
    }
    Ok((AnnulusMesh { mesh, nu, nv }, report))
}

/// Convenience: build the initial ruled annulus and relax it.
pub fn solve_annulus(
    problem: &AnnulusProblem,
    options: &SolverOptions,
) -> Result<(AnnulusMesh, ConvergenceReport), SolverError> {
    minimize_area(&initial_annulus(problem)?, options)
}
