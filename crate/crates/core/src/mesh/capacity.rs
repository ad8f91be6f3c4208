use super::geometry::CotanLaplacian;
use super::{MeshError, TriMesh};
use crate::linsolve::SpdFactor;

/// Harmonic 0/1 solution between two boundary loops and its energy.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CapacityReport {
    /// Dirichlet energy of the discrete harmonic function.
    pub energy: f64,
    pub negative_weights: usize,
    /// Largest excursion of the solution outside [0, 1]; zero when the
    /// discrete maximum principle holds.
    pub max_principle_violation: f64,
    #[serde(skip)]
    pub potential: Vec<f64>,
}

/// Solves the cotangent-Laplace equation with φ = 0 on `loop0` and φ = 1 on
/// `loop1` and returns its Dirichlet energy, the discrete capacity of the
/// condenser (equivalently the module of the curves joining the loops).
pub fn harmonic_capacity(
    mesh: &TriMesh,
    loop0: usize,
    loop1: usize,
) -> Result<CapacityReport, MeshError> {
    let count = mesh.boundary_loops.len();
    for index in [loop0, loop1] {
        if index >= count {
            return Err(MeshError::NoSuchLoop { index, count });
        }
    }
    if count != 2 || loop0 == loop1 {
        return Err(MeshError::BoundaryCount(count));
    }

    let n = mesh.vertices.len();
    let mut phi = vec![0.0; n];
    let mut fixed = vec![false; n];
    for &v in &mesh.boundary_loops[loop0] {
        fixed[v] = true;
    }
    for &v in &mesh.boundary_loops[loop1] {
        fixed[v] = true;
        phi[v] = 1.0;
    }

    let lap = CotanLaplacian::new(mesh);
    check_connected(n, lap.edges(), &fixed)?;

    let mut unknown = vec![usize::MAX; n];
    let mut free = Vec::new();
    for v in 0..n {
        if !fixed[v] {
            unknown[v] = free.len();
            free.push(v);
        }
    }
    if !free.is_empty() {
        let mut lower = Vec::with_capacity(free.len() + lap.edges().len());
        let mut diag = vec![0.0; free.len()];
        let mut rhs = vec![0.0; free.len()];
        for &(i, j, w) in lap.edges() {
            match (fixed[i], fixed[j]) {
                (false, false) => {
                    let (a, b) = (unknown[i], unknown[j]);
                    diag[a] += w;
                    diag[b] += w;
                    lower.push((a.max(b), a.min(b), -w));
                }
                (false, true) => {
                    diag[unknown[i]] += w;
                    rhs[unknown[i]] += w * phi[j];
                }
                (true, false) => {
                    diag[unknown[j]] += w;
                    rhs[unknown[j]] += w * phi[i];
                }
                (true, true) => {}
            }
        }
        lower.extend(diag.iter().enumerate().map(|(k, &d)| (k, k, d)));
        let sol = SpdFactor::new(free.len(), &lower)?.solve(&[rhs])?;
        for (k, &v) in free.iter().enumerate() {
            phi[v] = sol[0][k];
        }
    }

    let violation = phi.iter().fold(0.0f64, |m, &p| m.max(-p).max(p - 1.0));
    Ok(CapacityReport {
        energy: lap.dirichlet_energy(&phi),
        negative_weights: lap.negative_weights(),
        max_principle_violation: violation,
        potential: phi,
    })
}

fn check_connected(
    n: usize,
    edges: &[(usize, usize, f64)],
    fixed: &[bool],
) -> Result<(), MeshError> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j, _) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut reached = fixed.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&v| fixed[v]).collect();
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !reached[w] {
                reached[w] = true;
                stack.push(w);
            }
        }
    }
    match reached.iter().position(|r| !r) {
        Some(v) => Err(MeshError::Disconnected(v)),
        None => Ok(()),
    }
}
