use std::collections::HashMap;

use super::geometry::vertex_normals;
use super::{MeshError, TriMesh};
use crate::{par, Vec3};

/// Orthogonality tolerance for the per-segment frame `(τ, γ, ν)`.
pub const CYCLE_ORTHO_TOL: f64 = 1e-8;

const SNAP_FRACTION: f64 = 1e-9;
const NUDGE_FRACTION: f64 = 1e-7;

/// One straight piece of a cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub midpoint: Vec3,
    /// Unit direction of travel, horizontal.
    pub tangent: Vec3,
    /// Unit surface normal γ.
    pub normal: Vec3,
    /// Unit conormal ν: tangent to the surface, normal to the cycle, pointing up.
    pub conormal: Vec3,
    pub length: f64,
}

impl Segment {
    /// Builds the frame from a chord and an approximate surface normal.
    /// The normal is made orthogonal to the chord and ν is the normalised
    /// tangential part of e₃.
    pub fn from_chord(start: Vec3, end: Vec3, approx_normal: Vec3) -> Option<Self> {
        let chord = end - start;
        let length = chord.norm();
        if !(length > 0.0) {
            return None;
        }
        let tangent = chord / length;
        let n = approx_normal - tangent * tangent.dot(&approx_normal);
        let normal = n.try_normalize(1e-300)?;
        let up = Vec3::z() - normal * normal.z;
        let conormal = up.try_normalize(1e-14)?;
        Some(Self {
            midpoint: 0.5 * (start + end),
            tangent,
            normal,
            conormal,
            length,
        })
    }
}

/// Ordered polyline component of a plane section with its per-segment frames.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionCycle {
    level: f64,
    closed: bool,
    points: Vec<Vec3>,
    segments: Vec<Segment>,
}

impl CrossSectionCycle {
    /// Checks the frame invariants: ν ⊥ τ, ν ⊥ γ, ⟨ν, e₃⟩ > 0, unit
    /// vectors, and head-to-tail segments. `points` has one entry per
    /// segment for closed cycles and one more for open ones.
    pub fn new(
        level: f64,
        closed: bool,
        points: Vec<Vec3>,
        segments: Vec<Segment>,
    ) -> Result<Self, MeshError> {
        let expected = if closed {
            segments.len()
        } else {
            segments.len() + 1
        };
        if segments.is_empty() || points.len() != expected {
            return Err(MeshError::CycleInvariant(format!(
                "{} points for {} segments (closed: {closed})",
                points.len(),
                segments.len()
            )));
        }
        let scale = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
        for (k, s) in segments.iter().enumerate() {
            let unit = |v: &Vec3| (v.norm() - 1.0).abs() <= CYCLE_ORTHO_TOL;
            if !(unit(&s.tangent) && unit(&s.normal) && unit(&s.conormal)) {
                return Err(MeshError::CycleInvariant(format!(
                    "segment {k}: frame not unit"
                )));
            }
            if s.conormal.dot(&s.tangent).abs() > CYCLE_ORTHO_TOL
                || s.conormal.dot(&s.normal).abs() > CYCLE_ORTHO_TOL
            {
                return Err(MeshError::CycleInvariant(format!(
                    "segment {k}: conormal not orthogonal"
                )));
            }
            if !(s.conormal.z > 0.0) {
                return Err(MeshError::CycleInvariant(format!(
                    "segment {k}: conormal not upward"
                )));
            }
            let a = points[k];
            let b = points[(k + 1) % points.len()];
            let tol = 1e-9 * scale;
            if (s.midpoint - 0.5 * (a + b)).norm() > tol || ((b - a).norm() - s.length).abs() > tol
            {
                return Err(MeshError::CycleInvariant(format!(
                    "segment {k}: not head-to-tail"
                )));
            }
        }
        Ok(Self {
            level,
            closed,
            points,
            segments,
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn normals(&self) -> Vec<Vec3> {
        self.segments.iter().map(|s| s.normal).collect()
    }

    /// Image under the rotation by `angle` about the x₃-axis.
    pub fn rotated_about_axis(&self, angle: f64) -> Self {
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), angle);
        Self {
            level: self.level,
            closed: self.closed,
            points: self.points.iter().map(|p| rot * p).collect(),
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    midpoint: rot * s.midpoint,
                    tangent: rot * s.tangent,
                    normal: rot * s.normal,
                    conormal: rot * s.conormal,
                    length: s.length,
                })
                .collect(),
        }
    }

    /// No two non-adjacent segments cross in the slicing plane.
    pub fn is_embedded(&self) -> bool {
        cycles_are_embedded(std::slice::from_ref(self))
    }
}

fn segments_cross(a0: Vec3, a1: Vec3, b0: Vec3, b1: Vec3) -> bool {
    let orient = |p: Vec3, q: Vec3, r: Vec3| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    (d1 > 0.0) != (d2 > 0.0)
        && (d3 > 0.0) != (d4 > 0.0)
        && d1 != 0.0
        && d2 != 0.0
        && d3 != 0.0
        && d4 != 0.0
}

/// True when the union of the cycles has no self-intersections in the plane.
pub fn cycles_are_embedded(cycles: &[CrossSectionCycle]) -> bool {
    let mut segs: Vec<(usize, usize, Vec3, Vec3)> = Vec::new();
    for (c, cy) in cycles.iter().enumerate() {
        let n = cy.points.len();
        for k in 0..cy.segments.len() {
            segs.push((c, k, cy.points[k], cy.points[(k + 1) % n]));
        }
    }
    let bad = par::map_range(segs.len(), |i| {
        let (ci, ki, a0, a1) = segs[i];
        segs.iter().skip(i + 1).any(|&(cj, kj, b0, b1)| {
            if ci == cj {
                let n = cycles[ci].segments.len();
                let adjacent = kj == ki + 1 || (cycles[ci].closed && ki == 0 && kj == n - 1);
                if adjacent {
                    return false;
                }
            }
            segments_cross(a0, a1, b0, b1)
        })
    });
    !bad.into_iter().any(|b| b)
}

/// Result of slicing at a requested level.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub requested: f64,
    /// Level actually used; differs from `requested` after a nudge.
    pub level: f64,
    pub nudged: bool,
    pub cycles: Vec<CrossSectionCycle>,
}

/// Slices `mesh` by the plane `x₃ = t`.
pub fn slice(mesh: &TriMesh, t: f64) -> Result<Slice, MeshError> {
    let normals = vertex_normals(mesh)?;
    slice_with_normals(mesh, &normals, t)
}

struct RawSegment {
    start_edge: (usize, usize),
    end_edge: (usize, usize),
    start: Vec3,
    end: Vec3,
    start_normal: Vec3,
    end_normal: Vec3,
}

/// [`slice`] with precomputed vertex normals.
pub fn slice_with_normals(mesh: &TriMesh, normals: &[Vec3], t: f64) -> Result<Slice, MeshError> {
    let (lo, hi) = mesh.height_range();
    let range = hi - lo;
    if !(t > lo && t < hi) {
        return Err(MeshError::LevelOutOfRange {
            level: t,
            min: lo,
            max: hi,
        });
    }
    let snap = SNAP_FRACTION * range;
    let mut level = t;
    let mut tries = 0;
    while mesh.vertices.iter().any(|v| (v.z - level).abs() < snap) {
        tries += 1;
        level = t + tries as f64 * NUDGE_FRACTION * range;
        if tries > 16 || level >= hi {
            return Err(MeshError::IrregularLevel(t));
        }
    }

    let v = &mesh.vertices;
    let raw: Vec<Result<Option<RawSegment>, MeshError>> =
        par::map_range(mesh.triangles.len(), |ti| {
            let tri = mesh.triangles[ti];
            let above = tri.map(|i| v[i].z > level);
            if above.iter().all(|&a| a) || above.iter().all(|&a| !a) {
                return Ok(None);
            }
            let mut ascending = None;
            let mut descending = None;
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if above[k] == above[(k + 1) % 3] {
                    continue;
                }
                let lambda = (level - v[a].z) / (v[b].z - v[a].z);
                let p = v[a] + (v[b] - v[a]) * lambda;
                let n = (normals[a] * (1.0 - lambda) + normals[b] * lambda)
                    .try_normalize(1e-300)
                    .ok_or(MeshError::DegenerateIntersection(ti))?;
                let key = (a.min(b), a.max(b));
                if above[(k + 1) % 3] {
                    ascending = Some((key, p, n));
                } else {
                    descending = Some((key, p, n));
                }
            }
            let (start_edge, start, start_normal) =
                descending.ok_or(MeshError::DegenerateIntersection(ti))?;
            let (end_edge, end, end_normal) =
                ascending.ok_or(MeshError::DegenerateIntersection(ti))?;
            Ok(Some(RawSegment {
                start_edge,
                end_edge,
                start,
                end,
                start_normal,
                end_normal,
            }))
        });
    let mut raws = Vec::new();
    let mut owners = Vec::new();
    for (ti, r) in raw.into_iter().enumerate() {
        if let Some(s) = r? {
            raws.push(s);
            owners.push(ti);
        }
    }

    let by_start: HashMap<(usize, usize), usize> = raws
        .iter()
        .enumerate()
        .map(|(i, s)| (s.start_edge, i))
        .collect();
    let ends: std::collections::HashSet<(usize, usize)> = raws.iter().map(|s| s.end_edge).collect();
    // open chains begin where no segment ends; walk those first
    let mut order: Vec<usize> = (0..raws.len())
        .filter(|&i| !ends.contains(&raws[i].start_edge))
        .collect();
    order.extend(0..raws.len());

    let mut used = vec![false; raws.len()];
    let mut cycles = Vec::new();
    for first in order {
        if used[first] {
            continue;
        }
        let mut chain = Vec::new();
        let mut cur = first;
        let closed = loop {
            used[cur] = true;
            chain.push(cur);
            match by_start.get(&raws[cur].end_edge) {
                Some(&nxt) if nxt == first => break true,
                Some(&nxt) if !used[nxt] => cur = nxt,
                Some(_) => return Err(MeshError::DegenerateIntersection(owners[cur])),
                None => break false,
            }
        };
        let mut points: Vec<Vec3> = chain.iter().map(|&i| raws[i].start).collect();
        if !closed {
            points.push(raws[*chain.last().expect("non-empty")].end);
        }
        let mut segments = Vec::with_capacity(chain.len());
        for &i in &chain {
            let r = &raws[i];
            let approx = r.start_normal + r.end_normal;
            let s = Segment::from_chord(r.start, r.end, approx)
                .ok_or(MeshError::VerticalNormal(owners[i]))?;
            if s.length <= 1e-14 * range {
                return Err(MeshError::DegenerateIntersection(owners[i]));
            }
            segments.push(s);
        }
        cycles.push(CrossSectionCycle::new(level, closed, points, segments)?);
    }

    Ok(Slice {
        requested: t,
        level,
        nudged: level != t,
        cycles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn cylinder(nu: usize, nv: usize) -> TriMesh {
        TriMesh::from_tube_grid(nu, nv, |i, j| {
            let u = i as f64 / nu as f64 * TAU;
            Vec3::new(u.cos(), u.sin(), j as f64 / nv as f64)
        })
        .unwrap()
    }

    #[test]
    fn cylinder_slice_is_one_closed_cycle() {
        let m = cylinder(32, 4);
        let s = slice(&m, 0.3).unwrap();
        assert!(!s.nudged);
        assert_eq!(s.cycles.len(), 1);
        let c = &s.cycles[0];
        assert!(c.is_closed());
        assert_eq!(c.segments().len(), 64);
        // each quad is cut into two collinear pieces along the ring chord
        assert!((c.length() - 32.0 * 2.0 * (TAU / 64.0).sin()).abs() < 1e-12);
        for s in c.segments() {
            assert!((s.conormal - Vec3::z()).norm() < 1e-12);
            // τ = ν × γ orientation (counter-clockwise from above)
            assert!(s.tangent.dot(&s.conormal.cross(&s.normal)) > 0.999);
        }
        assert!(c.is_embedded());
    }

    #[test]
    fn vertex_level_is_nudged() {
        let m = cylinder(16, 4);
        let s = slice(&m, 0.5).unwrap();
        assert!(s.nudged);
        assert!(s.level > 0.5 && s.level - 0.5 < 1e-6);
    }

    #[test]
    fn out_of_range_rejected() {
        let m = cylinder(16, 4);
        assert!(matches!(
            slice(&m, 1.5),
            Err(MeshError::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            slice(&m, 0.0),
            Err(MeshError::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn rotation_preserves_invariants() {
        let m = cylinder(16, 2);
        let c = &slice(&m, 0.25).unwrap().cycles[0];
        let r = c.rotated_about_axis(0.7);
        CrossSectionCycle::new(r.level(), true, r.points().to_vec(), r.segments().to_vec())
            .unwrap();
    }

    #[test]
    fn self_crossing_detected() {
        // figure-eight in the plane
        let pts = [
            Vec3::new(0., 0., 0.),
            Vec3::new(1., 1., 0.),
            Vec3::new(1., 0., 0.),
            Vec3::new(0., 1., 0.),
        ];
        let segs: Vec<Segment> = (0..4)
            .map(|k| {
                let (a, b) = (pts[k], pts[(k + 1) % 4]);
                let t = (b - a).normalize();
                Segment::from_chord(a, b, Vec3::new(t.y, -t.x, 0.0)).unwrap()
            })
            .collect();
        let c = CrossSectionCycle::new(0.0, true, pts.to_vec(), segs).unwrap();
        assert!(!c.is_embedded());
    }
}
