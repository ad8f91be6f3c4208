//! Flow vectors of cross-sections and the inequalities they control.
//!
//! For a cycle `Σ` the flow vector is `J(Σ) = ∫_Σ ν ds`, the integral of the
//! upward conormal. On a minimal surface it does not depend on the slice
//! level, and its tilt `α` away from the axis bounds the spread of the Gauss
//! image of every slice and the axial extent of the whole tube.

use serde::Serialize;
use thiserror::Error;

use crate::exterior::{pi_v, ExteriorError, SubspaceFrame};
use crate::mesh::{
    gauss_image_diameter, gauss_image_length, harmonic_capacity, slice, CapacityReport,
    CrossSectionCycle, MeshError, Slice, TriMesh,
};
use crate::{par, Vec3};

/// Tilt angles at or below this count as zero: the tube is treated as
/// axially symmetric and the life-time bound as unbounded.
pub const ALPHA_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluxError {
    #[error("cycle has no segments")]
    EmptyCycle,
    #[error("flow vector has non-positive axial component {0:.3e}")]
    NonPositiveAxial(f64),
    #[error("cycle must be closed")]
    OpenCycle,
    #[error("slice at {0} is not embedded")]
    NotEmbedded(f64),
    #[error("no slice levels given")]
    NoLevels,
    #[error("total curvature must be non-negative, got {0}")]
    NegativeCurvature(f64),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("mesh boundary is not a slab between {t1} and {t2}: {reason}")]
    NotASlab { t1: f64, t2: f64, reason: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

/// `Σ ν·ds` over the segments (midpoint rule).
pub fn flow_vector(cycle: &CrossSectionCycle) -> Result<Vec3, FluxError> {
    if cycle.segments().is_empty() {
        return Err(FluxError::EmptyCycle);
    }
    Ok(cycle
        .segments()
        .iter()
        .fold(Vec3::zeros(), |acc, s| acc + s.conormal * s.length))
}

/// Flow vector of a multi-component cycle: the sum over components.
pub fn flow_vector_union(cycles: &[CrossSectionCycle]) -> Result<Vec3, FluxError> {
    if cycles.is_empty() {
        return Err(FluxError::EmptyCycle);
    }
    cycles
        .iter()
        .try_fold(Vec3::zeros(), |acc, c| Ok(acc + flow_vector(c)?))
}

/// Angle between `j` and e₃, in `[0, π/2)`.
pub fn flow_angle(j: &Vec3) -> Result<f64, FluxError> {
    if !(j.z > 0.0) {
        return Err(FluxError::NonPositiveAxial(j.z));
    }
    // atan2 keeps full relative accuracy for tiny tilts, unlike acos
    Ok(j.xy().norm().atan2(j.z))
}

/// Unit `q ⊥ J` maximising `q₃`: the normalised part of e₃ orthogonal to
/// `J`. When `J` is (numerically) vertical every horizontal direction is
/// optimal and e₁, made orthogonal to `J`, is returned.
pub fn optimal_q(j: &Vec3) -> Result<Vec3, FluxError> {
    let alpha = flow_angle(j)?;
    let jhat = j.normalize();
    let seed = if alpha > ALPHA_ZERO_TOL {
        Vec3::z()
    } else {
        Vec3::x()
    };
    Ok((seed - jhat * jhat.dot(&seed)).normalize())
}

/// Brute-force `max q₃` over `samples` unit vectors evenly spaced on the
/// great circle orthogonal to `j`.
pub fn max_tilt_brute_force(j: &Vec3, samples: usize) -> Result<f64, FluxError> {
    if samples == 0 {
        return Err(FluxError::Hypothesis("need at least one sample".into()));
    }
    let jhat = j
        .try_normalize(0.0)
        .ok_or_else(|| FluxError::Hypothesis("J must be non-zero".into()))?;
    let helper = if jhat.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let b1 = (helper - jhat * jhat.dot(&helper)).normalize();
    let b2 = jhat.cross(&b1);
    Ok((0..samples)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / samples as f64;
            (b1 * th.cos() + b2 * th.sin()).z
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Level-by-level flow vectors and their largest pairwise deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowInvariance {
    /// Levels actually sliced (after any nudge).
    pub levels: Vec<f64>,
    pub flows: Vec<[f64; 3]>,
    pub max_deviation: f64,
}

pub fn verify_flow_invariance(mesh: &TriMesh, levels: &[f64]) -> Result<FlowInvariance, FluxError> {
    if levels.is_empty() {
        return Err(FluxError::NoLevels);
    }
    let per_level = par::map(levels, |&t| -> Result<(f64, Vec3), FluxError> {
        let s = slice(mesh, t)?;
        Ok((s.level, flow_vector_union(&s.cycles)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut max_deviation: f64 = 0.0;
    for (a, (_, ja)) in per_level.iter().enumerate() {
        for (_, jb) in &per_level[a + 1..] {
            max_deviation = max_deviation.max((ja - jb).norm());
        }
    }
    Ok(FlowInvariance {
        levels: per_level.iter().map(|p| p.0).collect(),
        flows: per_level.iter().map(|p| p.1.into()).collect(),
        max_deviation,
    })
}

/// `π_T(q)` for the line `T` spanned by a unit tangent.
pub fn tangent_projection(tangent: &Vec3, q: &Vec3) -> Result<Vec3, FluxError> {
    let frame = SubspaceFrame::new(3, vec![tangent.as_slice().to_vec()])?;
    let v = pi_v(&frame, q.as_slice())?.to_vector();
    Ok(Vec3::new(v[0], v[1], v[2]))
}

/// Signed integral with the scale `length·‖q‖` it should be compared to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub integral: f64,
    pub scale: f64,
}

impl IdentityResidual {
    pub fn residual(&self) -> f64 {
        self.integral.abs()
    }

    /// `|integral| / (length·‖q‖)`, or 0 when the scale vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual() / self.scale
        } else {
            0.0
        }
    }
}

fn closed_segments(cycle: &CrossSectionCycle) -> Result<(), FluxError> {
    if !cycle.is_closed() {
        return Err(FluxError::OpenCycle);
    }
    if cycle.segments().is_empty() {
        return Err(FluxError::EmptyCycle);
    }
    Ok(())
}

/// `∫_Σ ⟨π_T(q), e₃⟩ ds`, which vanishes for every `q` on a closed cycle.
pub fn verify_identity_11(
    cycle: &CrossSectionCycle,
    q: &Vec3,
) -> Result<IdentityResidual, FluxError> {
    closed_segments(cycle)?;
    let mut integral = 0.0;
    for s in cycle.segments() {
        integral += tangent_projection(&s.tangent, q)?.z * s.length;
    }
    Ok(IdentityResidual {
        integral,
        scale: cycle.length() * q.norm(),
    })
}

/// The pair `∫_Σ ⟨π_T(q), γ ± e₃⟩ ds` for `q` with its `J(Σ)` component
/// removed first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Identity12 {
    pub q_used: [f64; 3],
    pub plus: IdentityResidual,
    pub minus: IdentityResidual,
}

pub fn verify_identity_12(cycle: &CrossSectionCycle, q: &Vec3) -> Result<Identity12, FluxError> {
    closed_segments(cycle)?;
    let jhat = flow_vector(cycle)?.normalize();
    let q = q - jhat * jhat.dot(q);
    let (mut plus, mut minus) = (0.0, 0.0);
    for s in cycle.segments() {
        let p = tangent_projection(&s.tangent, &q)?;
        plus += p.dot(&(s.normal + Vec3::z())) * s.length;
        minus += p.dot(&(s.normal - Vec3::z())) * s.length;
    }
    let scale = cycle.length() * q.norm();
    Ok(Identity12 {
        q_used: q.into(),
        plus: IdentityResidual {
            integral: plus,
            scale,
        },
        minus: IdentityResidual {
            integral: minus,
            scale,
        },
    })
}

/// Gauss-image diameter against twice the tilt for one simple component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Record {
    pub level: f64,
    pub component: usize,
    pub flow: [f64; 3],
    pub alpha: f64,
    pub diameter: f64,
    /// `diameter − 2α`.
    pub margin: f64,
    /// Segment indices of the two normals realising the diameter.
    pub witness: (usize, usize),
    /// Euclidean distance of the witnessing normals.
    pub witness_chord: f64,
    /// `2q₃/‖q‖` for the optimal `q ⊥ J`, which equals `2 sin α`.
    pub chord_bound: f64,
}

/// Checks every component of an already computed slice.
pub fn theorem1_for_slice(s: &Slice) -> Result<Vec<Theorem1Record>, FluxError> {
    if !crate::mesh::cycles_are_embedded(&s.cycles) {
        return Err(FluxError::NotEmbedded(s.level));
    }
    s.cycles
        .iter()
        .enumerate()
        .map(|(component, cycle)| {
            closed_segments(cycle)?;
            let j = flow_vector(cycle)?;
            let alpha = flow_angle(&j)?;
            let normals = cycle.normals();
            let d = gauss_image_diameter(&normals)?;
            let q = optimal_q(&j)?;
            Ok(Theorem1Record {
                level: s.level,
                component,
                flow: j.into(),
                alpha,
                diameter: d.angle,
                margin: d.angle - 2.0 * alpha,
                witness: (d.i, d.j),
                witness_chord: (normals[d.i] - normals[d.j]).norm(),
                chord_bound: 2.0 * q.z / q.norm(),
            })
        })
        .collect()
}

pub fn verify_theorem1(mesh: &TriMesh, t: f64) -> Result<Vec<Theorem1Record>, FluxError> {
    theorem1_for_slice(&slice(mesh, t)?)
}

/// Length of the Gauss image of a slice against `4α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eq17Record {
    pub level: f64,
    pub gauss_length: f64,
    pub four_alpha: f64,
    pub margin: f64,
}

pub fn verify_eq17(cycle: &CrossSectionCycle) -> Result<Eq17Record, FluxError> {
    closed_segments(cycle)?;
    let gauss_length = gauss_image_length(cycle)?;
    let four_alpha = 4.0 * flow_angle(&flow_vector(cycle)?)?;
    Ok(Eq17Record {
        level: cycle.level(),
        gauss_length,
        four_alpha,
        margin: gauss_length - four_alpha,
    })
}

/// Measured capacity of a slab against the flux predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityLaw {
    pub t1: f64,
    pub t2: f64,
    /// Axial flux measured on the mid-level slice.
    pub flux_axial: f64,
    pub energy: f64,
    /// `(t₂ − t₁)/J₃`.
    pub predicted: f64,
    /// `|energy − predicted| / predicted`.
    pub relative_error: f64,
    /// `J₃/(t₂ − t₁)`, the Dirichlet energy of `(x₃ − t₁)/(t₂ − t₁)`
    /// obtained from the coarea formula; harmonic because `x₃` is.
    pub coarea_energy: f64,
    /// `|energy − coarea_energy| / coarea_energy`.
    pub coarea_relative_error: f64,
    pub solve: CapacityReport,
}

/// Mesh must be an annulus whose two boundary loops lie at `t1` and `t2`.
pub fn verify_capacity_law(mesh: &TriMesh, t1: f64, t2: f64) -> Result<CapacityLaw, FluxError> {
    let not_slab = |reason: String| FluxError::NotASlab { t1, t2, reason };
    if !(t1 < t2) {
        return Err(not_slab("need t1 < t2".into()));
    }
    let loops = mesh.boundary_loops();
    if loops.len() != 2 {
        return Err(not_slab(format!("{} boundary loops", loops.len())));
    }
    let tol = 1e-9 * (t2 - t1).max(mesh.bbox_diagonal());
    let at = |t: f64| {
        (0..2).find(|&k| {
            loops[k]
                .iter()
                .all(|&v| (mesh.vertices()[v].z - t).abs() <= tol)
        })
    };
    let (lo, hi) = match (at(t1), at(t2)) {
        (Some(a), Some(b)) if a != b => (a, b),
        _ => {
            return Err(not_slab(
                "boundary loops are not horizontal at the given levels".into(),
            ))
        }
    };
    let mid = slice(mesh, 0.5 * (t1 + t2))?;
    let flux_axial = flow_vector_union(&mid.cycles)?.z;
    if !(flux_axial > 0.0) {
        return Err(FluxError::NonPositiveAxial(flux_axial));
    }
    let solve = harmonic_capacity(mesh, lo, hi)?;
    let predicted = (t2 - t1) / flux_axial;
    let coarea_energy = flux_axial / (t2 - t1);
    Ok(CapacityLaw {
        t1,
        t2,
        flux_axial,
        energy: solve.energy,
        predicted,
        relative_error: (solve.energy - predicted).abs() / predicted,
        coarea_energy,
        coarea_relative_error: (solve.energy - coarea_energy).abs() / coarea_energy,
        solve,
    })
}

/// Upper bound on the axial extent of a minimal tube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LifetimeBound {
    /// `α = 0`: no finite bound.
    Unbounded,
    Finite {
        value: f64,
        /// Set when `G = 0` with `α > 0`, which no minimal tube realises.
        flat_contradiction: bool,
    },
}

impl LifetimeBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Unbounded => None,
            Self::Finite { value, .. } => Some(*value),
        }
    }
}

/// `‖J‖·G·cos α / (16α²)`.
pub fn lifetime_bound(j: &Vec3, g: f64) -> Result<LifetimeBound, FluxError> {
    if !(g >= 0.0) {
        return Err(FluxError::NegativeCurvature(g));
    }
    let alpha = flow_angle(j)?;
    if alpha <= ALPHA_ZERO_TOL {
        return Ok(LifetimeBound::Unbounded);
    }
    Ok(LifetimeBound::Finite {
        value: j.norm() * g * alpha.cos() / (16.0 * alpha * alpha),
        flat_contradiction: g == 0.0,
    })
}

/// Angle of a sum of vectors to `e` and the largest angle of a summand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumAngle {
    pub alpha_sum: f64,
    pub alpha_max: f64,
}

fn angle_to(v: &Vec3, e: &Vec3) -> f64 {
    v.cross(e).norm().atan2(v.dot(e))
}

/// Requires `⟨vᵢ, e⟩ ≥ 0`, `vᵢ ≠ 0`, `Σvᵢ ≠ 0` and a unit `e`.
pub fn sum_angle_bound(vectors: &[Vec3], e: &Vec3) -> Result<SumAngle, FluxError> {
    if vectors.is_empty() {
        return Err(FluxError::Hypothesis("empty vector system".into()));
    }
    if (e.norm() - 1.0).abs() > 1e-10 {
        return Err(FluxError::Hypothesis(format!("e has norm {}", e.norm())));
    }
    let mut sum = Vec3::zeros();
    let mut alpha_max: f64 = 0.0;
    for (i, v) in vectors.iter().enumerate() {
        if *v == Vec3::zeros() {
            return Err(FluxError::Hypothesis(format!("vector {i} is zero")));
        }
        if v.dot(e) < 0.0 {
            return Err(FluxError::Hypothesis(format!(
                "vector {i} has negative component along e"
            )));
        }
        sum += v;
        alpha_max = alpha_max.max(angle_to(v, e));
    }
    if sum == Vec3::zeros() {
        return Err(FluxError::Hypothesis("vectors sum to zero".into()));
    }
    Ok(SumAngle {
        alpha_sum: angle_to(&sum, e),
        alpha_max,
    })
}
