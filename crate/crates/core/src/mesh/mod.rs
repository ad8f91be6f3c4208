//! Oriented triangle meshes in ℝ³ and the discrete operators used on them.

mod capacity;
mod geometry;
pub mod obj;
mod slice;

use std::collections::HashMap;

use thiserror::Error;

use crate::linsolve::LinearSolveError;
use crate::Vec3;

pub use capacity::{harmonic_capacity, CapacityReport};
pub use geometry::{
    gauss_image_diameter, gauss_image_length, mean_curvature_vectors, total_curvature,
    vertex_normals, voronoi_areas, CotanLaplacian, GaussDiameter, TotalCurvature, TriangleGeometry,
};
pub use slice::{
    cycles_are_embedded, slice, slice_with_normals, CrossSectionCycle, Segment, Slice,
    CYCLE_ORTHO_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {vertex}, but the mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        vertex: usize,
        count: usize,
    },
    #[error("triangle {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteVertex(usize),
    #[error("triangle {triangle} is degenerate (area {area:.3e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("non-manifold edge ({a}, {b}) shared by {count} triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("edge ({a}, {b}) is traversed in the same direction by both incident triangles")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("boundary vertex {0} is non-manifold")]
    NonManifoldBoundaryVertex(usize),
    #[error("mesh has no triangles")]
    Empty,
    #[error("vertex {0} has a zero-area star")]
    ZeroAreaStar(usize),
    #[error("grid resolution {nu}x{nv} too coarse (need nu >= 3, nv >= 1)")]
    Resolution { nu: usize, nv: usize },
    #[error("slice level {level} outside the open height range ({min}, {max})")]
    LevelOutOfRange { level: f64, min: f64, max: f64 },
    #[error("could not find a regular level near {0}")]
    IrregularLevel(f64),
    #[error("degenerate plane intersection in triangle {0}")]
    DegenerateIntersection(usize),
    #[error("surface normal is vertical on the slice in triangle {0}; conormal undefined")]
    VerticalNormal(usize),
    #[error("cross-section invariant violated: {0}")]
    CycleInvariant(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("boundary loop {index} does not exist (mesh has {count})")]
    NoSuchLoop { index: usize, count: usize },
    #[error("capacity needs exactly two distinct boundary loops, mesh has {0}")]
    BoundaryCount(usize),
    #[error("vertex {0} is not connected to any boundary loop; system is singular")]
    Disconnected(usize),
    #[error(transparent)]
    Linear(#[from] LinearSolveError),
}

/// Oriented, manifold triangle mesh. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
}

impl TriMesh {
    /// Validates manifoldness, orientation and non-degeneracy, and derives
    /// the boundary loops.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        if let Some(i) = vertices
            .iter()
            .position(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(MeshError::NonFiniteVertex(i));
        }
        let count = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= count {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        vertex: v,
                        count,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex(t));
            }
        }
        let diag2 = bbox_diagonal(&vertices).powi(2);
        for (t, tri) in triangles.iter().enumerate() {
            let area = triangle_area(&vertices, tri);
            if !(area > 1e-14 * diag2) {
                return Err(MeshError::DegenerateTriangle { triangle: t, area });
            }
        }

        let mut directed: HashMap<(usize, usize), usize> =
            HashMap::with_capacity(3 * triangles.len());
        for tri in &triangles {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        // check in triangle order so reported edges are deterministic
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let fwd = directed[&(a, b)];
                let back = directed.get(&(b, a)).copied().unwrap_or(0);
                if fwd + back > 2 {
                    return Err(MeshError::NonManifoldEdge {
                        a: a.min(b),
                        b: a.max(b),
                        count: fwd + back,
                    });
                }
                if fwd > 1 {
                    return Err(MeshError::InconsistentOrientation {
                        a: a.min(b),
                        b: a.max(b),
                    });
                }
            }
        }

        let mut next: HashMap<usize, usize> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if !directed.contains_key(&(b, a)) && next.insert(a, b).is_some() {
                    return Err(MeshError::NonManifoldBoundaryVertex(a));
                }
            }
        }
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut seen = vec![false; count];
        let mut boundary_loops = Vec::new();
        for s in starts {
            if seen[s] {
                continue;
            }
            let mut lp = Vec::new();
            let mut v = s;
            loop {
                if seen[v] {
                    if v != s {
                        return Err(MeshError::NonManifoldBoundaryVertex(v));
                    }
                    break;
                }
                seen[v] = true;
                lp.push(v);
                v = *next
                    .get(&v)
                    .ok_or(MeshError::NonManifoldBoundaryVertex(v))?;
            }
            boundary_loops.push(lp);
        }

        Ok(Self {
            vertices,
            triangles,
            boundary_loops,
        })
    }

    /// Periodic grid of `nu × (nv+1)` vertices, `position(i, j)` for angular
    /// index `i` and ring `j`. Vertex index is `j·nu + i`. Quads are split
    /// along alternating diagonals in a checkerboard pattern; with `u`
    /// counter-clockwise and `j` increasing upward the normals point along
    /// `∂u × ∂v`.
    pub fn from_tube_grid<F>(nu: usize, nv: usize, position: F) -> Result<Self, MeshError>
    where
        F: Fn(usize, usize) -> Vec3,
    {
        if nu < 3 || nv < 1 {
            return Err(MeshError::Resolution { nu, nv });
        }
        let mut vertices = Vec::with_capacity(nu * (nv + 1));
        for j in 0..=nv {
            for i in 0..nu {
                vertices.push(position(i, j));
            }
        }
        let idx = |i: usize, j: usize| j * nu + (i % nu);
        let mut triangles = Vec::with_capacity(2 * nu * nv);
        for j in 0..nv {
            for i in 0..nu {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                if (i + j) % 2 == 0 {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                } else {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Marks vertices lying on any boundary loop.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for lp in &self.boundary_loops {
            for &v in lp {
                mask[v] = true;
            }
        }
        mask
    }

    /// Range of the axial coordinate x₃.
    pub fn height_range(&self) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v.z), hi.max(v.z))
            })
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| triangle_area(&self.vertices, t))
            .sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        for t in &self.triangles {
            for k in 0..3 {
                total += (self.vertices[t[(k + 1) % 3]] - self.vertices[t[k]]).norm();
            }
        }
        total / (3 * self.triangles.len()) as f64
    }

    /// Mean x₃ of a boundary loop.
    pub fn loop_height(&self, index: usize) -> Option<f64> {
        let lp = self.boundary_loops.get(index)?;
        Some(lp.iter().map(|&v| self.vertices[v].z).sum::<f64>() / lp.len() as f64)
    }

    /// Same connectivity with new positions; re-validated.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self, MeshError> {
        Self::new(vertices, self.triangles.clone())
    }
}

pub(crate) fn triangle_area(vertices: &[Vec3], t: &[usize; 3]) -> f64 {
    let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn bbox_diagonal(vertices: &[Vec3]) -> f64 {
    if vertices.is_empty() {
        return 0.0;
    }
    let mut lo = vertices[0];
    let mut hi = vertices[0];
    for v in vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    (hi - lo).norm()
}
