use std::f64::consts::{PI, TAU};

use super::{MeshError, TriMesh};
use crate::{par, Vec3};

/// Corner angles, cotangents and area of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    pub angles: [f64; 3],
    pub cots: [f64; 3],
    pub area: f64,
    /// Unit face normal (orientation-bearing).
    pub normal: Vec3,
}

impl TriangleGeometry {
    pub fn new(p: [Vec3; 3]) -> Self {
        let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
        let double_area = cross.norm();
        let mut angles = [0.0; 3];
        let mut cots = [0.0; 3];
        for k in 0..3 {
            let e1 = p[(k + 1) % 3] - p[k];
            let e2 = p[(k + 2) % 3] - p[k];
            let d = e1.dot(&e2);
            let s = e1.cross(&e2).norm();
            angles[k] = s.atan2(d);
            cots[k] = d / s;
        }
        Self {
            angles,
            cots,
            area: 0.5 * double_area,
            normal: cross / double_area,
        }
    }

    pub fn of(mesh: &TriMesh, t: usize) -> Self {
        let tri = mesh.triangles[t];
        let v = &mesh.vertices;
        Self::new([v[tri[0]], v[tri[1]], v[tri[2]]])
    }
}

fn all_geometry(mesh: &TriMesh) -> Vec<TriangleGeometry> {
    par::map_range(mesh.triangles.len(), |t| TriangleGeometry::of(mesh, t))
}

/// Angle-weighted unit vertex normals.
pub fn vertex_normals(mesh: &TriMesh) -> Result<Vec<Vec3>, MeshError> {
    let geo = all_geometry(mesh);
    let mut acc = vec![Vec3::zeros(); mesh.vertices.len()];
    for (tri, g) in mesh.triangles.iter().zip(&geo) {
        for k in 0..3 {
            acc[tri[k]] += g.normal * g.angles[k];
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(i, n)| {
            let len = n.norm();
            if len > 1e-300 {
                Ok(n / len)
            } else {
                Err(MeshError::ZeroAreaStar(i))
            }
        })
        .collect()
}

/// Mixed Voronoi vertex areas. Non-obtuse triangles contribute their
/// Voronoi regions; obtuse ones split half to the obtuse corner and a
/// quarter to each other corner.
pub fn voronoi_areas(mesh: &TriMesh) -> Vec<f64> {
    let geo = all_geometry(mesh);
    let mut areas = vec![0.0; mesh.vertices.len()];
    for (tri, g) in mesh.triangles.iter().zip(&geo) {
        let obtuse = g.angles.iter().position(|&a| a > 0.5 * PI);
        for k in 0..3 {
            let share = match obtuse {
                Some(o) if o == k => 0.5 * g.area,
                Some(_) => 0.25 * g.area,
                None => {
                    let (i, j, l) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    let v = &mesh.vertices;
                    // edge k→k+1 is opposite corner k+2, edge k→k+2 opposite k+1
                    0.125
                        * ((v[j] - v[i]).norm_squared() * g.cots[(k + 2) % 3]
                            + (v[l] - v[i]).norm_squared() * g.cots[(k + 1) % 3])
                }
            };
            areas[tri[k]] += share;
        }
    }
    areas
}

/// Cotangent Laplacian as a list of undirected edges `(i, j, w)` with
/// `i < j` and `w = ½(cot α + cot β)`, sorted by `(i, j)`.
#[derive(Debug, Clone)]
pub struct CotanLaplacian {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl CotanLaplacian {
    pub fn new(mesh: &TriMesh) -> Self {
        let geo = all_geometry(mesh);
        Self::from_geometry(mesh, &geo)
    }

    fn from_geometry(mesh: &TriMesh, geo: &[TriangleGeometry]) -> Self {
        let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(3 * geo.len());
        for (tri, g) in mesh.triangles.iter().zip(geo) {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                raw.push((a.min(b), a.max(b), 0.5 * g.cots[k]));
            }
        }
        // stable sort keeps per-edge summation in triangle order
        raw.sort_by_key(|&(i, j, _)| (i, j));
        let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(raw.len() / 2 + 1);
        for (i, j, w) in raw {
            match edges.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += w,
                _ => edges.push((i, j, w)),
            }
        }
        Self {
            n: mesh.vertices.len(),
            edges,
        }
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of edges with negative weight (non-Delaunay configurations).
    pub fn negative_weights(&self) -> usize {
        self.edges.iter().filter(|e| e.2 < 0.0).count()
    }

    /// `(L x)_i = Σ_j w_ij (x_j − x_i)`; the negated area gradient when `x`
    /// are the vertex positions.
    pub fn apply(&self, x: &[Vec3]) -> Vec<Vec3> {
        let mut out = vec![Vec3::zeros(); self.n];
        for &(i, j, w) in &self.edges {
            let d = (x[j] - x[i]) * w;
            out[i] += d;
            out[j] -= d;
        }
        out
    }

    /// `Σ_edges w_ij (φ_i − φ_j)²`, the Dirichlet energy of the
    /// piecewise-linear interpolant of `phi`.
    pub fn dirichlet_energy(&self, phi: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j, w)| w * (phi[i] - phi[j]).powi(2))
            .sum()
    }
}

/// Pointwise mean-curvature vectors `(L x)_i / A_i` with mixed Voronoi
/// areas. Equals `−2H·γ` for a smooth surface (sign fixed by orientation).
pub fn mean_curvature_vectors(mesh: &TriMesh) -> Vec<Vec3> {
    let lap = CotanLaplacian::new(mesh);
    let areas = voronoi_areas(mesh);
    lap.apply(&mesh.vertices)
        .into_iter()
        .zip(areas)
        .map(|(v, a)| v / a)
        .collect()
}

/// Total curvature `G = Σ(−angle defect)` over interior vertices.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TotalCurvature {
    pub g: f64,
    /// Sum of positive angle defects that were clamped to zero.
    pub clamped_positive: f64,
    pub interior_vertices: usize,
}

pub fn total_curvature(mesh: &TriMesh) -> TotalCurvature {
    let geo = all_geometry(mesh);
    let mut angle_sum = vec![0.0; mesh.vertices.len()];
    for (tri, g) in mesh.triangles.iter().zip(&geo) {
        for k in 0..3 {
            angle_sum[tri[k]] += g.angles[k];
        }
    }
    let boundary = mesh.boundary_mask();
    let mut g = 0.0;
    let mut clamped = 0.0;
    let mut interior = 0;
    for (v, sum) in angle_sum.into_iter().enumerate() {
        if boundary[v] {
            continue;
        }
        interior += 1;
        let defect = TAU - sum;
        if defect <= 0.0 {
            g -= defect;
        } else {
            clamped += defect;
        }
    }
    TotalCurvature {
        g,
        clamped_positive: clamped,
        interior_vertices: interior,
    }
}

/// Spherical angle between unit vectors, accurate near 0 and π.
#[inline]
pub(crate) fn sphere_angle(a: &Vec3, b: &Vec3) -> f64 {
    2.0 * (a - b).norm().atan2((a + b).norm())
}

/// Spherical diameter of a finite point set with the realizing pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussDiameter {
    pub angle: f64,
    pub i: usize,
    pub j: usize,
}

/// Exact pairwise scan for the largest angle between unit normals.
pub fn gauss_image_diameter(normals: &[Vec3]) -> Result<GaussDiameter, MeshError> {
    if normals.is_empty() {
        return Err(MeshError::EmptyInput("normals"));
    }
    let rows = par::map_range(normals.len(), |i| {
        let mut best = (0.0, i);
        for (j, nj) in normals.iter().enumerate().skip(i + 1) {
            let a = sphere_angle(&normals[i], nj);
            if a > best.0 {
                best = (a, j);
            }
        }
        best
    });
    let mut out = GaussDiameter {
        angle: 0.0,
        i: 0,
        j: 0,
    };
    for (i, (a, j)) in rows.into_iter().enumerate() {
        if a > out.angle {
            out = GaussDiameter { angle: a, i, j };
        }
    }
    Ok(out)
}

/// Length of the closed spherical polygon through consecutive segment
/// normals of a closed cycle.
pub fn gauss_image_length(cycle: &super::CrossSectionCycle) -> Result<f64, MeshError> {
    if !cycle.is_closed() {
        return Err(MeshError::CycleInvariant(
            "Gauss image length needs a closed cycle".into(),
        ));
    }
    let segs = cycle.segments();
    if segs.len() < 2 {
        return Err(MeshError::CycleInvariant(
            "Gauss image length needs at least two segments".into(),
        ));
    }
    Ok((0..segs.len())
        .map(|k| sphere_angle(&segs[k].normal, &segs[(k + 1) % segs.len()].normal))
        .sum())
}
