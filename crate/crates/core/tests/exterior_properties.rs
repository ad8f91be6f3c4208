use mintube::exterior::{
    hodge, inner, interior, pi_v, project_complement, wedge, Multivector, SubspaceFrame,
};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn graded(dim: usize, k: usize, raw: &[f64]) -> Multivector {
    let coeffs = raw
        .iter()
        .enumerate()
        .map(|(mask, &c)| {
            if (mask as u32).count_ones() as usize == k {
                c
            } else {
                0.0
            }
        })
        .collect();
    Multivector::from_coeffs(dim, coeffs).unwrap()
}

fn raw(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1 << dim)
}

/// (n, k, x, y) with x and y of pure grade k.
fn same_grade_pair() -> impl Strategy<Value = (usize, usize, Multivector, Multivector)> {
    (3usize..=6)
        .prop_flat_map(|n| (Just(n), 0..=n, raw(n), raw(n)))
        .prop_map(|(n, k, a, b)| (n, k, graded(n, k, &a), graded(n, k, &b)))
}

fn vecs(dim: usize, count: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, dim), count)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x − A(AᵀA)⁻¹Aᵀx` via the normal equations, solved by Gaussian
/// elimination with partial pivoting.
fn gram_projection(basis: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let k = basis.len();
    let mut m: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| dot(&basis[i], &basis[j])).collect();
            row.push(dot(&basis[i], x));
            row
        })
        .collect();
    for c in 0..k {
        let p = (c..k)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        m.swap(c, p);
        for r in 0..k {
            if r != c {
                let f = m[r][c] / m[c][c];
                let pivot = m[c].clone();
                m[r].iter_mut().zip(&pivot).skip(c).for_each(|(x, p)| *x -= f * p);
            }
        }
    }
    let coef: Vec<f64> = (0..k).map(|i| m[i][k] / m[i][i]).collect();
    let mut out = x.to_vec();
    for (b, c) in basis.iter().zip(coef) {
        out.iter_mut().zip(b).for_each(|(o, bi)| *o -= c * bi);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn double_hodge_sign((n, k, x, _y) in same_grade_pair()) {
        let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
        let back = hodge(&hodge(&x));
        prop_assert!(back.try_sub(&x.scale(sign)).unwrap().max_abs() <= TOL);
    }

    #[test]
    fn wedge_with_hodge_is_inner_times_volume((n, _k, x, y) in same_grade_pair()) {
        let lhs = wedge(&x, &hodge(&y)).unwrap();
        let rhs = Multivector::pseudoscalar(n).unwrap().scale(inner(&x, &y).unwrap());
        prop_assert!(lhs.try_sub(&rhs).unwrap().max_abs() <= TOL);
    }

    #[test]
    fn hodge_is_isometry((_n, _k, x, y) in same_grade_pair()) {
        let a = inner(&hodge(&x), &hodge(&y)).unwrap();
        let b = inner(&x, &y).unwrap();
        prop_assert!((a - b).abs() <= TOL);
    }

    #[test]
    fn interior_is_adjoint_of_wedge(
        (u, x, y) in (3usize..=6)
            .prop_flat_map(|n| (Just(n), 0..=n).prop_flat_map(|(n, r)| (Just(n), Just(r), 0..=n - r)))
            .prop_flat_map(|(n, r, k)| (Just(n), Just(r), Just(k), raw(n), raw(n), raw(n)))
            .prop_map(|(n, r, k, a, b, c)| (graded(n, r, &a), graded(n, k, &b), graded(n, r + k, &c)))
    ) {
        let lhs = inner(&wedge(&u, &x).unwrap(), &y).unwrap();
        let rhs = inner(&x, &interior(&u, &y).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= TOL);
    }

    #[test]
    fn interior_of_hodge_is_hodge_of_wedge(
        (a, b) in (3usize..=6)
            .prop_flat_map(|n| (Just(n), 0..=n).prop_flat_map(|(n, r)| (Just(n), Just(r), 0..=n - r)))
            .prop_flat_map(|(n, r, k)| (Just(n), Just(r), Just(k), raw(n), raw(n)))
            .prop_map(|(n, r, k, p, q)| (graded(n, r, &p), graded(n, k, &q)))
    ) {
        let lhs = interior(&a, &hodge(&b)).unwrap();
        let rhs = hodge(&wedge(&b, &a).unwrap());
        prop_assert!(lhs.try_sub(&rhs).unwrap().max_abs() <= TOL);
    }

    #[test]
    fn complement_projection_matches_gram(
        (n, basis, x) in (3usize..=6)
            .prop_flat_map(|n| (Just(n), 1..n))
            .prop_flat_map(|(n, k)| (Just(n), vecs(n, k), prop::collection::vec(-1.0..1.0f64, n)))
    ) {
        let Ok(frame) = SubspaceFrame::gram_schmidt(n, &basis) else {
            return Ok(());
        };
        let got = project_complement(&frame, &x).unwrap();
        // oracle works from the raw, non-orthonormal spanning set
        let want = gram_projection(&basis, &x);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10);
        }
    }

    #[test]
    fn projection_onto_codim_two_frame(
        (n, raw_basis, q) in (3usize..=6)
            .prop_flat_map(|n| (Just(n), vecs(n, n), prop::collection::vec(-1.0..1.0f64, n)))
    ) {
        let Ok(full) = SubspaceFrame::gram_schmidt(n, &raw_basis) else {
            return Ok(());
        };
        let (xi, eta) = (&full.vectors()[0], &full.vectors()[1]);
        let t = SubspaceFrame::new(n, full.vectors()[2..].to_vec()).unwrap();
        let p = pi_v(&t, &q).unwrap();
        if p.max_abs() > 0.0 {
            prop_assert_eq!(p.grade(), Some(1));
        }
        let lhs = dot(&q, xi).abs();
        let rhs = dot(eta, &p.to_vector()).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }
}
