//! Dense exterior algebra Λ(ℝⁿ) for 2 ≤ n ≤ 8.
//!
//! A [`Multivector`] stores one coefficient per basis blade. Blades are
//! indexed by a bitmask over the axes (axis `i` is bit `i`), and the stored
//! orientation of every blade is the increasing axis order, so
//! `e₂∧e₀` is kept as `−1` on mask `0b101`.
//!
//! The inner product makes basis blades orthonormal, the interior product is
//! the adjoint of left wedge multiplication, and the Hodge star is
//! `*x = x ⌟ ω` with `ω = e₁∧⋯∧eₙ`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Smallest supported ambient dimension.
pub const MIN_DIM: usize = 2;
/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;
/// Gram-matrix tolerance for [`SubspaceFrame`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExteriorError {
    #[error("ambient dimension {0} outside supported range {MIN_DIM}..={MAX_DIM}")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("frame is not orthonormal (max Gram deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },
    #[error("frame vectors are linearly dependent")]
    DependentVectors,
    #[error("frame has {k} vectors but ambient dimension is {dim}")]
    TooManyVectors { k: usize, dim: usize },
}

fn check_dim(dim: usize) -> Result<(), ExteriorError> {
    if (MIN_DIM..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(ExteriorError::UnsupportedDimension(dim))
    }
}

fn check_same(left: usize, right: usize) -> Result<(), ExteriorError> {
    if left == right {
        Ok(())
    } else {
        Err(ExteriorError::DimensionMismatch { left, right })
    }
}

/// Sign of `e_a ∧ e_b` relative to the canonical blade `e_{a∪b}`, for
/// disjoint masks. Counts the transpositions needed to sort the
/// concatenated axis list.
#[inline]
pub fn reorder_sign(a: u32, b: u32) -> f64 {
    debug_assert_eq!(a & b, 0);
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let axis = rest.trailing_zeros();
        // axes of `a` strictly above this axis of `b` must hop over it
        swaps += (a >> (axis + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Element of Λ(ℝⁿ) with dense blade storage.
#[derive(Clone, PartialEq)]
pub struct Multivector {
    dim: usize,
    coeffs: Vec<f64>,
}

impl Multivector {
    pub fn zero(dim: usize) -> Result<Self, ExteriorError> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            coeffs: vec![0.0; 1 << dim],
        })
    }

    pub fn scalar(dim: usize, value: f64) -> Result<Self, ExteriorError> {
        let mut m = Self::zero(dim)?;
        m.coeffs[0] = value;
        Ok(m)
    }

    /// Builds a multivector from its full coefficient array (length `2ⁿ`).
    pub fn from_coeffs(dim: usize, coeffs: Vec<f64>) -> Result<Self, ExteriorError> {
        check_dim(dim)?;
        check_same(1 << dim, coeffs.len()).map_err(|_| ExteriorError::DimensionMismatch {
            left: 1 << dim,
            right: coeffs.len(),
        })?;
        Ok(Self { dim, coeffs })
    }

    /// The 0-based basis vector `e_{axis+1}`.
    pub fn basis(dim: usize, axis: usize) -> Result<Self, ExteriorError> {
        Self::blade(dim, &[axis], 1.0)
    }

    /// `coeff · e_{i₁} ∧ ⋯ ∧ e_{i_k}` for 0-based axes in any order.
    /// Repeated axes give zero.
    pub fn blade(dim: usize, axes: &[usize], coeff: f64) -> Result<Self, ExteriorError> {
        let mut m = Self::zero(dim)?;
        let mut mask = 0u32;
        let mut sign = 1.0;
        for &axis in axes {
            if axis >= dim {
                return Err(ExteriorError::AxisOutOfRange { axis, dim });
            }
            let bit = 1u32 << axis;
            if mask & bit != 0 {
                return Ok(m);
            }
            sign *= reorder_sign(mask, bit);
            mask |= bit;
        }
        m.coeffs[mask as usize] = sign * coeff;
        Ok(m)
    }

    /// Grade-1 element with the given components.
    pub fn vector(components: &[f64]) -> Result<Self, ExteriorError> {
        let mut m = Self::zero(components.len())?;
        for (axis, &c) in components.iter().enumerate() {
            m.coeffs[1 << axis] = c;
        }
        Ok(m)
    }

    /// Volume form `ω = e₁∧⋯∧eₙ`.
    pub fn pseudoscalar(dim: usize) -> Result<Self, ExteriorError> {
        let mut m = Self::zero(dim)?;
        m.coeffs[(1 << dim) - 1] = 1.0;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> f64 {
        self.coeffs[mask]
    }

    /// Coefficient of the canonical blade over the given axes.
    pub fn blade_coeff(&self, axes: &[usize]) -> f64 {
        let mask: usize = axes.iter().map(|&a| 1usize << a).sum();
        self.coeffs[mask]
    }

    pub fn grade_part(&self, k: usize) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(mask, &c)| {
                if mask.count_ones() as usize == k {
                    c
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            dim: self.dim,
            coeffs,
        }
    }

    /// The single grade carrying nonzero coefficients, if there is one.
    /// Zero is reported as grade 0.
    pub fn grade(&self) -> Option<usize> {
        let mut found = None;
        for (mask, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                let k = mask.count_ones() as usize;
                match found {
                    None => found = Some(k),
                    Some(g) if g != k => return None,
                    _ => {}
                }
            }
        }
        Some(found.unwrap_or(0))
    }

    /// Grade-1 coefficients as a plain vector.
    pub fn to_vector(&self) -> Vec<f64> {
        (0..self.dim).map(|axis| self.coeffs[1 << axis]).collect()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, ExteriorError> {
        check_same(self.dim, other.dim)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            dim: self.dim,
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, ExteriorError> {
        self.try_add(&-other)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

impl fmt::Debug for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Multivector(n={}; ", self.dim)?;
        let mut first = true;
        for (mask, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            if mask == 0 {
                continue;
            }
            write!(f, "·e")?;
            for axis in 0..self.dim {
                if mask & (1 << axis) != 0 {
                    write!(f, "{}", axis + 1)?;
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

impl Neg for Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

/// Panics on dimension mismatch; use [`Multivector::try_add`] otherwise.
impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, rhs: &Multivector) -> Multivector {
        self.try_add(rhs)
            .expect("multivector dimensions must match")
    }
}

/// Panics on dimension mismatch; use [`Multivector::try_sub`] otherwise.
impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, rhs: &Multivector) -> Multivector {
        self.try_sub(rhs)
            .expect("multivector dimensions must match")
    }
}

impl Mul<f64> for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: f64) -> Multivector {
        self.scale(rhs)
    }
}

fn nonzero(m: &Multivector) -> impl Iterator<Item = (u32, f64)> + '_ {
    m.coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(mask, &c)| (mask as u32, c))
}

/// Exterior product `a ∧ b`.
pub fn wedge(a: &Multivector, b: &Multivector) -> Result<Multivector, ExteriorError> {
    check_same(a.dim, b.dim)?;
    let mut out = vec![0.0; a.coeffs.len()];
    for (ma, ca) in nonzero(a) {
        for (mb, cb) in nonzero(b) {
            if ma & mb == 0 {
                out[(ma | mb) as usize] += reorder_sign(ma, mb) * ca * cb;
            }
        }
    }
    Ok(Multivector {
        dim: a.dim,
        coeffs: out,
    })
}

/// Blade-orthonormal inner product. Mixed grades pair only equal-grade parts.
pub fn inner(x: &Multivector, y: &Multivector) -> Result<f64, ExteriorError> {
    check_same(x.dim, y.dim)?;
    Ok(x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a * b).sum())
}

/// Interior product `u ⌟ y`, characterised by `⟨x, u ⌟ y⟩ = ⟨u ∧ x, y⟩`.
pub fn interior(u: &Multivector, y: &Multivector) -> Result<Multivector, ExteriorError> {
    check_same(u.dim, y.dim)?;
    let mut out = vec![0.0; u.coeffs.len()];
    for (mu, cu) in nonzero(u) {
        for (my, cy) in nonzero(y) {
            if mu & my == mu {
                let rest = my & !mu;
                out[rest as usize] += reorder_sign(mu, rest) * cu * cy;
            }
        }
    }
    Ok(Multivector {
        dim: u.dim,
        coeffs: out,
    })
}

/// Hodge star `*x = x ⌟ ω`, mapping grade k to grade n−k.
pub fn hodge(x: &Multivector) -> Multivector {
    let full = (1u32 << x.dim) - 1;
    let mut out = vec![0.0; x.coeffs.len()];
    for (mask, c) in nonzero(x) {
        let rest = full & !mask;
        out[rest as usize] += reorder_sign(mask, rest) * c;
    }
    Multivector {
        dim: x.dim,
        coeffs: out,
    }
}

/// Ordered orthonormal vectors `v₁,…,v_k` spanning an oriented subspace of ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceFrame {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SubspaceFrame {
    /// Wraps vectors that must already be orthonormal to within
    /// [`ORTHONORMAL_TOL`].
    pub fn new(dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self, ExteriorError> {
        check_dim(dim)?;
        if vectors.len() > dim {
            return Err(ExteriorError::TooManyVectors {
                k: vectors.len(),
                dim,
            });
        }
        for v in &vectors {
            check_same(dim, v.len())?;
        }
        let mut deviation: f64 = 0.0;
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((dot(a, b) - target).abs());
            }
        }
        if deviation > ORTHONORMAL_TOL {
            return Err(ExteriorError::NotOrthonormal { deviation });
        }
        Ok(Self { dim, vectors })
    }

    /// Orthonormalises `vectors` in order by modified Gram–Schmidt with one
    /// re-orthogonalisation pass. Orientation follows the input order.
    pub fn gram_schmidt(dim: usize, vectors: &[Vec<f64>]) -> Result<Self, ExteriorError> {
        check_dim(dim)?;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
        for v in vectors {
            check_same(dim, v.len())?;
            let scale = dot(v, v).sqrt();
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let p = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= p * bi);
                }
            }
            let norm = dot(&w, &w).sqrt();
            if !(norm > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
                return Err(ExteriorError::DependentVectors);
            }
            w.iter_mut().for_each(|x| *x /= norm);
            basis.push(w);
        }
        Self::new(dim, basis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

/// `σ(V) = v₁ ∧ ⋯ ∧ v_k`.
pub fn volume_form(frame: &SubspaceFrame) -> Multivector {
    let mut acc = Multivector::scalar(frame.dim, 1.0).expect("frame dim validated");
    for v in &frame.vectors {
        let vm = Multivector::vector(v).expect("frame dim validated");
        acc = wedge(&acc, &vm).expect("same dim");
    }
    acc
}

/// `π_V(ξ) = *(σ(V) ∧ ξ)`, a multivector of grade `n − k − 1`.
pub fn pi_v(frame: &SubspaceFrame, xi: &[f64]) -> Result<Multivector, ExteriorError> {
    check_same(frame.dim, xi.len())?;
    let sigma = volume_form(frame);
    let x = Multivector::vector(xi)?;
    Ok(hodge(&wedge(&sigma, &x)?))
}

/// Orthogonal projection of `x` onto `V^⊥`, computed as `σ(V) ⌟ (σ(V) ∧ x)`.
pub fn project_complement(frame: &SubspaceFrame, x: &[f64]) -> Result<Vec<f64>, ExteriorError> {
    check_same(frame.dim, x.len())?;
    let sigma = volume_form(frame);
    let xm = Multivector::vector(x)?;
    Ok(interior(&sigma, &wedge(&sigma, &xm)?)?.to_vector())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, axis: usize) -> Multivector {
        Multivector::basis(dim, axis).unwrap()
    }

    #[test]
    fn wedge_basis_examples() {
        let e12 = wedge(&e(3, 0), &e(3, 1)).unwrap();
        assert_eq!(e12.blade_coeff(&[0, 1]), 1.0);
        assert_eq!(wedge(&e(3, 0), &e(3, 0)).unwrap().max_abs(), 0.0);
        let e21 = wedge(&e(3, 1), &e(3, 0)).unwrap();
        assert_eq!(e21, -&e12);
    }

    #[test]
    fn wedge_rejects_mismatch() {
        assert_eq!(
            wedge(&e(3, 0), &e(4, 0)),
            Err(ExteriorError::DimensionMismatch { left: 3, right: 4 })
        );
        assert!(inner(&e(3, 0), &e(4, 0)).is_err());
        assert!(interior(&e(3, 0), &e(4, 0)).is_err());
    }

    #[test]
    fn inner_examples() {
        let e12 = Multivector::blade(3, &[0, 1], 1.0).unwrap();
        assert_eq!(inner(&e12, &e12).unwrap(), 1.0);
        assert_eq!(inner(&e(3, 0), &e(3, 1)).unwrap(), 0.0);
        let x = &Multivector::blade(3, &[0, 2], 2.0).unwrap() + &e(3, 1);
        let y = Multivector::blade(3, &[0, 2], 3.0).unwrap();
        assert_eq!(inner(&x, &y).unwrap(), 6.0);
    }

    #[test]
    fn hodge_examples() {
        let star = hodge(&e(3, 0));
        assert_eq!(star, Multivector::blade(3, &[1, 2], 1.0).unwrap());
        let e12 = Multivector::blade(4, &[0, 1], 1.0).unwrap();
        assert_eq!(hodge(&hodge(&e12)), e12);
        let e1 = e(4, 0);
        // k(n-k) = 3 is odd
        assert_eq!(hodge(&hodge(&e1)), -&e1);
    }

    #[test]
    fn interior_examples() {
        let e12 = Multivector::blade(3, &[0, 1], 1.0).unwrap();
        assert_eq!(interior(&e(3, 0), &e12).unwrap(), e(3, 1));
        assert_eq!(interior(&e(3, 2), &e12).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn blade_from_unsorted_axes() {
        let b = Multivector::blade(4, &[3, 1, 0], 1.0).unwrap();
        // (3,1,0) -> (0,1,3) is an odd permutation
        assert_eq!(b.blade_coeff(&[0, 1, 3]), -1.0);
        assert_eq!(b.grade(), Some(3));
        assert_eq!(Multivector::blade(4, &[1, 1], 1.0).unwrap().max_abs(), 0.0);
        assert!(Multivector::blade(3, &[3], 1.0).is_err());
    }

    #[test]
    fn dimension_bounds() {
        assert!(Multivector::zero(1).is_err());
        assert!(Multivector::zero(9).is_err());
        assert_eq!(Multivector::zero(8).unwrap().coeffs().len(), 256);
    }

    #[test]
    fn volume_form_orientation() {
        let f = SubspaceFrame::new(3, vec![vec![1., 0., 0.], vec![0., 1., 0.]]).unwrap();
        assert_eq!(
            volume_form(&f),
            Multivector::blade(3, &[0, 1], 1.0).unwrap()
        );
        let g = SubspaceFrame::new(3, vec![vec![0., 1., 0.], vec![1., 0., 0.]]).unwrap();
        assert_eq!(
            volume_form(&g),
            Multivector::blade(3, &[0, 1], -1.0).unwrap()
        );
    }

    #[test]
    fn frame_rejects_non_orthonormal() {
        let err = SubspaceFrame::new(3, vec![vec![1., 0., 0.], vec![1., 1., 0.]]).unwrap_err();
        assert!(matches!(err, ExteriorError::NotOrthonormal { .. }));
        assert_eq!(
            SubspaceFrame::gram_schmidt(3, &[vec![1., 2., 3.], vec![2., 4., 6.]]),
            Err(ExteriorError::DependentVectors)
        );
    }

    #[test]
    fn pi_v_examples() {
        let v = SubspaceFrame::new(3, vec![vec![1., 0., 0.]]).unwrap();
        assert_eq!(pi_v(&v, &[0., 1., 0.]).unwrap(), e(3, 2));
        assert_eq!(pi_v(&v, &[2., 0., 0.]).unwrap().max_abs(), 0.0);
        let w = SubspaceFrame::new(4, vec![vec![1., 0., 0., 0.], vec![0., 1., 0., 0.]]).unwrap();
        // *(e1∧e2∧e3) = e4 with ω = e1∧e2∧e3∧e4
        assert_eq!(pi_v(&w, &[0., 0., 1., 0.]).unwrap(), e(4, 3));
    }

    #[test]
    fn project_complement_examples() {
        let v = SubspaceFrame::new(3, vec![vec![1., 0., 0.], vec![0., 1., 0.]]).unwrap();
        assert_eq!(
            project_complement(&v, &[1., 2., 3.]).unwrap(),
            vec![0., 0., 3.]
        );
        assert_eq!(
            project_complement(&v, &[1., 2., 0.]).unwrap(),
            vec![0., 0., 0.]
        );
        assert!(project_complement(&v, &[1., 2.]).is_err());
    }

    #[test]
    fn debug_format_lists_blades() {
        let x = &Multivector::blade(3, &[0, 2], 2.0).unwrap() + &e(3, 1);
        assert_eq!(format!("{x:?}"), "Multivector(n=3; 1·e2 + 2·e13)");
    }
}
