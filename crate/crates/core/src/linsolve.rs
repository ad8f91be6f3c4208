//! Sparse symmetric positive-definite solves via a direct Cholesky factorization.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearSolveError {
    #[error("matrix assembly failed: {0}")]
    Assembly(String),
    #[error("matrix is not positive definite (Cholesky breakdown)")]
    NotPositiveDefinite,
    #[error("right-hand side has length {got}, expected {expected}")]
    RhsLength { got: usize, expected: usize },
}

/// Factorized sparse SPD matrix.
pub struct SpdFactor {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SpdFactor {
    /// Factorizes the symmetric matrix given by its lower-triangle entries
    /// `(row, col, value)` with `row >= col`. Duplicate entries are summed.
    pub fn new(n: usize, lower: &[(usize, usize, f64)]) -> Result<Self, LinearSolveError> {
        let triplets: Vec<Triplet<usize, usize, f64>> = lower
            .iter()
            .map(|&(r, c, v)| {
                debug_assert!(r >= c);
                Triplet::new(r, c, v)
            })
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| LinearSolveError::Assembly(format!("{e:?}")))?;
        let llt = mat
            .sp_cholesky(Side::Lower)
            .map_err(|_| LinearSolveError::NotPositiveDefinite)?;
        Ok(Self { n, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves for several right-hand sides at once.
    pub fn solve(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LinearSolveError> {
        for r in rhs {
            if r.len() != self.n {
                return Err(LinearSolveError::RhsLength {
                    got: r.len(),
                    expected: self.n,
                });
            }
        }
        let mut b = Mat::<f64>::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        self.llt.solve_in_place(b.as_mut());
        let out: Vec<Vec<f64>> = (0..rhs.len())
            .map(|j| (0..self.n).map(|i| b[(i, j)]).collect())
            .collect();
        if out.iter().flatten().any(|x| !x.is_finite()) {
            return Err(LinearSolveError::NotPositiveDefinite);
        }
        Ok(out)
    }
}
