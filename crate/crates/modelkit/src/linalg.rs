//! Dense complex linear algebra kernel used by every module.
//!
//! Conventions fixed project-wide:
//! * inner products are conjugate-linear in the second slot,
//!   `inner(u, v) = sum_i u_i * conj(v_i)`;
//! * defect norms are entrywise max-norms;
//! * a solve fails (instead of returning garbage) when the smallest
//!   singular value drops below `SV_RATIO * largest`.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative singular-value threshold below which a matrix is treated as singular.
pub const SV_RATIO: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `sum_i u_i conj(v_i)`; conjugate-linear in `v`.
pub fn inner(u: &CVector, v: &CVector) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum()
}

pub fn vec_norm(u: &CVector) -> f64 {
    inner(u, u).re.max(0.0).sqrt()
}

/// Entrywise max-norm.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

pub fn vec_max_abs(a: &CVector) -> f64 {
    a.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

pub fn is_finite_matrix(a: &CMatrix) -> bool {
    a.iter().all(|e| e.re.is_finite() && e.im.is_finite())
}

pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Max-norm of `A - A*`.
pub fn hermitian_defect(a: &CMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(max_abs(&(a - a.adjoint())))
}

#[derive(Debug, Clone)]
pub struct HermitianCheck {
    pub defect: f64,
    pub scale: f64,
    pub pass: bool,
}

/// Reports `max|A - A*|` and pass/fail at a relative 1e-12 tolerance.
pub fn hermitize_check(a: &CMatrix) -> Result<HermitianCheck> {
    let defect = hermitian_defect(a)?;
    let scale = max_abs(a).max(1e-300);
    Ok(HermitianCheck {
        defect,
        scale,
        pass: defect <= 1e-12 * scale.max(1.0),
    })
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

pub fn min_max_sv(a: &CMatrix) -> (f64, f64) {
    let sv = singular_values(a);
    let max = sv.first().copied().unwrap_or(0.0);
    let min = sv.last().copied().unwrap_or(0.0);
    (min, max)
}

/// Operator (spectral) norm.
pub fn op_norm(a: &CMatrix) -> f64 {
    min_max_sv(a).1
}

/// Number of singular values above `rel_tol * max`.
pub fn numerical_rank(a: &CMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

/// Pivoted-LU solve with a singular-value guard and one step of iterative
/// refinement. `AX = B`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "solve: A is {}x{}, B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let (min_sv, max_sv) = min_max_sv(a);
    if max_sv == 0.0 || min_sv < SV_RATIO * max_sv {
        return Err(Error::SingularMatrix {
            ratio: if max_sv == 0.0 { 0.0 } else { min_sv / max_sv },
        });
    }
    let lu = a.clone().full_piv_lu();
    let mut x = lu.solve(b).ok_or(Error::SingularMatrix {
        ratio: min_sv / max_sv,
    })?;
    // one refinement pass
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Ok(x)
}

pub fn solve_vec(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let bm = CMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let x = solve(a, &bm)?;
    Ok(CVector::from_column_slice(x.as_slice()))
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &identity(a.nrows()))
}

/// Eigenvalues of a Hermitian matrix, ascending. The input is symmetrised
/// first so tiny Hermiticity defects do not poison the iteration.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let h = (a + a.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    let mut ev: Vec<f64> = se.eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(ev)
}

/// Hermitian eigendecomposition `A = U diag(vals) U*`, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let h = (a + a.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut u = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        u.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((vals, u))
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let schur =
        nalgebra::linalg::Schur::try_new(a.clone(), 1e-14, 100_000).ok_or(Error::EigenFailed)?;
    let ev = schur.eigenvalues().ok_or(Error::EigenFailed)?;
    Ok(ev.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitize_identity_passes() {
        let a = identity(4);
        let r = hermitize_check(&a).unwrap();
        assert_eq!(r.defect, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn hermitize_pauli_passes() {
        // [[0, i], [-i, 0]]
        let a = CMatrix::from_row_slice(2, 2, &[cr(0.0), I, -I, cr(0.0)]);
        let r = hermitize_check(&a).unwrap();
        assert_eq!(r.defect, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn hermitize_skew_fails_with_defect_two() {
        // [[0, i], [i, 0]]: A - A* = [[0, 2i], [2i, 0]], max-norm 2.
        let a = CMatrix::from_row_slice(2, 2, &[cr(0.0), I, I, cr(0.0)]);
        let r = hermitize_check(&a).unwrap();
        assert!((r.defect - 2.0).abs() < 1e-15);
        assert!(!r.pass);
    }

    #[test]
    fn hermitize_rejects_non_square() {
        let a = CMatrix::zeros(2, 3);
        assert!(matches!(
            hermitize_check(&a),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn solve_refines_and_guards() {
        let a = CMatrix::from_row_slice(2, 2, &[cr(2.0), I, -I, cr(3.0)]);
        let b = CVector::from_vec(vec![cr(1.0), c(0.0, -2.0)]);
        let x = solve_vec(&a, &b).unwrap();
        let r = &a * &x - &b;
        assert!(vec_max_abs(&r) < 1e-14);

        let singular = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(2.0), cr(2.0), cr(4.0)]);
        assert!(matches!(
            solve_vec(&singular, &b),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn eigenvalues_of_upper_triangular() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.5), cr(2.0), cr(0.0), c(3.0, -1.0)]);
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((ev[0] - c(1.0, 0.5)).norm() < 1e-12);
        assert!((ev[1] - c(3.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn rank_detects_deficiency() {
        let mut a = CMatrix::zeros(4, 4);
        a[(0, 0)] = cr(1.0);
        a[(1, 1)] = cr(2.0);
        a[(2, 2)] = cr(1e-14);
        assert_eq!(numerical_rank(&a, 1e-10), 2);
    }
}
