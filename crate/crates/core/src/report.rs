//! Self-describing analysis report of a tube mesh, serialised as JSON with a
//! CSV table of per-slice records.

use std::io::{self, Write};

use serde::Serialize;

use crate::flux::{
    flow_angle, flow_vector_union, lifetime_bound, optimal_q, theorem1_for_slice,
    verify_capacity_law, verify_eq17, verify_identity_11, verify_identity_12, CapacityLaw,
    FluxError, LifetimeBound,
};
use crate::mesh::{slice_with_normals, total_curvature, vertex_normals, TotalCurvature, TriMesh};
use crate::{par, Vec3};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything measured on one simple component of one slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceRecord {
    pub requested: f64,
    pub t: f64,
    pub nudged: bool,
    pub component: usize,
    pub segments: usize,
    pub length: f64,
    pub flow_x: f64,
    pub flow_y: f64,
    pub flow_z: f64,
    pub alpha: f64,
    pub diameter: f64,
    pub two_alpha: f64,
    pub theorem1_margin: f64,
    pub witness_chord: f64,
    pub chord_bound: f64,
    pub gauss_length: f64,
    pub four_alpha: f64,
    pub eq17_margin: f64,
    /// Identity residuals for the optimal `q`, relative to `length·‖q‖`.
    pub identity11: f64,
    pub identity12_plus: f64,
    pub identity12_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One pass/fail comparison with the tolerance it used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubeReport {
    pub schema: u32,
    pub source: String,
    /// Caller-supplied run parameters, echoed verbatim.
    pub config: serde_json::Value,
    pub vertices: usize,
    pub triangles: usize,
    pub height_range: [f64; 2],
    /// Mean of the per-level flow vectors.
    #[serde(rename = "J")]
    pub flow: [f64; 3],
    #[serde(rename = "J_norm")]
    pub flow_norm: f64,
    pub alpha: f64,
    /// Largest pairwise distance between per-level flow vectors.
    pub flow_deviation: f64,
    pub slices: Vec<SliceRecord>,
    #[serde(rename = "G")]
    pub total_curvature: TotalCurvature,
    pub capacity: Option<CapacityLaw>,
    pub lifetime_bound: LifetimeBound,
    /// Discretization error estimate from a refinement study, if one ran.
    pub eps_disc: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl TubeReport {
    pub fn check(&mut self, name: &str, value: f64, relation: Relation, threshold: f64) -> bool {
        let passed = match relation {
            Relation::AtMost => value <= threshold,
            Relation::AtLeast => value >= threshold,
        };
        self.checks.push(Check {
            name: name.to_owned(),
            value,
            relation,
            threshold,
            passed,
        });
        self.passed &= passed;
        passed
    }

    pub fn min_theorem1_margin(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.theorem1_margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_eq17_margin(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.eq17_margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_identity_residual(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.identity11.max(s.identity12_plus).max(s.identity12_minus))
            .fold(0.0, f64::max)
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)
    }

    pub fn write_slice_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.slices {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest change of the per-slice theorem margins between two reports
/// sliced at the same levels, used as the discretization error estimate.
pub fn refinement_delta(coarse: &TubeReport, fine: &TubeReport) -> Option<f64> {
    if coarse.slices.len() != fine.slices.len() || coarse.slices.is_empty() {
        return None;
    }
    Some(
        coarse
            .slices
            .iter()
            .zip(&fine.slices)
            .map(|(a, b)| {
                (a.theorem1_margin - b.theorem1_margin)
                    .abs()
                    .max((a.eq17_margin - b.eq17_margin).abs())
            })
            .fold(0.0, f64::max),
    )
}

/// The two boundary levels when the mesh is an annulus with horizontal
/// boundary loops, lower first.
pub fn slab_levels(mesh: &TriMesh) -> Option<(f64, f64)> {
    let loops = mesh.boundary_loops();
    if loops.len() != 2 {
        return None;
    }
    let tol = 1e-9 * mesh.bbox_diagonal();
    let mut h = [0.0; 2];
    for (k, lp) in loops.iter().enumerate() {
        let z = mesh.loop_height(k)?;
        if lp.iter().any(|&v| (mesh.vertices()[v].z - z).abs() > tol) {
            return None;
        }
        h[k] = z;
    }
    (h[0] != h[1]).then(|| (h[0].min(h[1]), h[0].max(h[1])))
}

/// Slices `mesh` at every level and runs the flux checks.
pub fn analyze(mesh: &TriMesh, source: &str, levels: &[f64]) -> Result<TubeReport, FluxError> {
    if levels.is_empty() {
        return Err(FluxError::NoLevels);
    }
    let normals = vertex_normals(mesh)?;
    let per_level = par::map(
        levels,
        |&t| -> Result<(Vec3, Vec<SliceRecord>), FluxError> {
            let s = slice_with_normals(mesh, &normals, t)?;
            let flow = flow_vector_union(&s.cycles)?;
            let theorem1 = theorem1_for_slice(&s)?;
            let mut records = Vec::with_capacity(s.cycles.len());
            for (cycle, th) in s.cycles.iter().zip(theorem1) {
                let eq17 = verify_eq17(cycle)?;
                let q = optimal_q(&Vec3::from(th.flow))?;
                let id11 = verify_identity_11(cycle, &q)?;
                let id12 = verify_identity_12(cycle, &q)?;
                records.push(SliceRecord {
                    requested: t,
                    t: s.level,
                    nudged: s.nudged,
                    component: th.component,
                    segments: cycle.segments().len(),
                    length: cycle.length(),
                    flow_x: th.flow[0],
                    flow_y: th.flow[1],
                    flow_z: th.flow[2],
                    alpha: th.alpha,
                    diameter: th.diameter,
                    two_alpha: 2.0 * th.alpha,
                    theorem1_margin: th.margin,
                    witness_chord: th.witness_chord,
                    chord_bound: th.chord_bound,
                    gauss_length: eq17.gauss_length,
                    four_alpha: eq17.four_alpha,
                    eq17_margin: eq17.margin,
                    identity11: id11.relative(),
                    identity12_plus: id12.plus.relative(),
                    identity12_minus: id12.minus.relative(),
                });
            }
            Ok((flow, records))
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let flows: Vec<Vec3> = per_level.iter().map(|p| p.0).collect();
    let flow = flows.iter().fold(Vec3::zeros(), |a, b| a + b) / flows.len() as f64;
    let mut flow_deviation: f64 = 0.0;
    for (a, ja) in flows.iter().enumerate() {
        for jb in &flows[a + 1..] {
            flow_deviation = flow_deviation.max((ja - jb).norm());
        }
    }
    let alpha = flow_angle(&flow)?;
    let g = total_curvature(mesh);
    let capacity = match slab_levels(mesh) {
        Some((t1, t2)) => Some(verify_capacity_law(mesh, t1, t2)?),
        None => None,
    };
    let (lo, hi) = mesh.height_range();
    let mut report = TubeReport {
        schema: SCHEMA_VERSION,
        source: source.to_owned(),
        config: serde_json::Value::Null,
        vertices: mesh.vertex_count(),
        triangles: mesh.triangles().len(),
        height_range: [lo, hi],
        flow: flow.into(),
        flow_norm: flow.norm(),
        alpha,
        flow_deviation,
        slices: per_level.into_iter().flat_map(|p| p.1).collect(),
        total_curvature: g,
        capacity,
        lifetime_bound: lifetime_bound(&flow, g.g)?,
        eps_disc: None,
        checks: Vec::new(),
        passed: true,
    };
    let identity = (flow.norm() * alpha.cos() - flow.z).abs();
    report.check(
        "norm_cos_alpha_equals_J3",
        identity,
        Relation::AtMost,
        1e-12 * flow.norm().max(1.0),
    );
    Ok(report)
}
