//! The boundary triple (A0, Pi, Lambda): solution operator, M-function,
//! traces, Green identity and the structural probes built on them.
//!
//! A [`DecomposedVector`] carries a chosen splitting `u = A0^{-1} f + Pi phi`;
//! the traces and the action of the full operator `A` are defined on the
//! decomposition, which makes every algebraic identity below exact in exact
//! arithmetic.

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eigen, hermitian_eigenvalues, inner, max_abs, numerical_rank, vec_max_abs,
    CMatrix, CVector,
};
use num_complex::Complex64;

/// Relative threshold for "z collides with the spectrum of A0".
const FREQ_SV_RATIO: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DecomposedVector {
    pub f: CVector,
    pub phi: CVector,
}

impl DecomposedVector {
    pub fn zero(dim_h: usize, dim_e: usize) -> Self {
        Self {
            f: CVector::zeros(dim_h),
            phi: CVector::zeros(dim_e),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            f: &self.f + &other.f,
            phi: &self.phi + &other.phi,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            f: &self.f * s,
            phi: &self.phi * s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckRecord {
    pub name: &'static str,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CheckRecord>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Finite representation of the triple, with the spectral factorisation of
/// the Hermitian `A0` cached so that every frequency-dependent object costs
/// O(dimH^2) per evaluation.
#[derive(Debug, Clone)]
pub struct TripleDescriptor {
    pub dim_h: usize,
    pub dim_e: usize,
    pub a0: CMatrix,
    pub a0_inv: CMatrix,
    pub pi: CMatrix,
    pub lambda: CMatrix,
    pub label: String,
    /// Eigenvalues of `A0`, ascending.
    evals: Vec<f64>,
    /// Unitary eigenvector matrix, `A0 = U diag(evals) U*`.
    u: CMatrix,
    /// Cached `U* Pi`.
    u_adj_pi: CMatrix,
}

impl TripleDescriptor {
    pub fn new(a0: CMatrix, pi: CMatrix, lambda: CMatrix, label: impl Into<String>) -> Result<Self> {
        let dim_h = a0.nrows();
        if !a0.is_square() {
            return Err(Error::NonSquare {
                rows: a0.nrows(),
                cols: a0.ncols(),
            });
        }
        if pi.nrows() != dim_h {
            return Err(Error::DimensionMismatch("Pi must be dimH x dimE".into()));
        }
        let dim_e = pi.ncols();
        if lambda.nrows() != dim_e || lambda.ncols() != dim_e {
            return Err(Error::DimensionMismatch("Lambda must be dimE x dimE".into()));
        }
        let (evals, u) = hermitian_eigen(&a0)?;
        let min_abs = evals.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
        let max_abs_ev = evals.iter().map(|d| d.abs()).fold(0.0, f64::max);
        if min_abs <= 1e-12 * max_abs_ev {
            return Err(Error::InvalidScenario(
                "A0 is not invertible (0 in its numerical spectrum)".into(),
            ));
        }
        let inv_diag: Vec<Complex64> = evals.iter().map(|d| linalg::cr(1.0 / d)).collect();
        let a0_inv = &u * CMatrix::from_diagonal(&CVector::from_vec(inv_diag)) * u.adjoint();
        let u_adj_pi = u.adjoint() * &pi;
        Ok(Self {
            dim_h,
            dim_e,
            a0,
            a0_inv,
            pi,
            lambda,
            label: label.into(),
            evals,
            u,
            u_adj_pi,
        })
    }

    pub fn eigenvalues_a0(&self) -> &[f64] {
        &self.evals
    }

    /// All invariant checks with defect norms; failures are carried in the
    /// report, not raised.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let scale_a0 = max_abs(&self.a0).max(1.0);

        let herm_a0 = linalg::hermitian_defect(&self.a0).unwrap_or(f64::INFINITY);
        checks.push(CheckRecord {
            name: "a0_hermitian",
            defect: herm_a0,
            tolerance: 1e-12 * scale_a0,
            pass: herm_a0 <= 1e-12 * scale_a0,
        });

        let prod = &self.a0 * &self.a0_inv - linalg::identity(self.dim_h);
        let inv_defect = max_abs(&prod);
        checks.push(CheckRecord {
            name: "a0_times_a0inv",
            defect: inv_defect,
            tolerance: 1e-10,
            pass: inv_defect <= 1e-10,
        });

        let (min_sv, max_sv) = linalg::min_max_sv(&self.pi);
        let pi_ratio = if max_sv > 0.0 { min_sv / max_sv } else { 0.0 };
        checks.push(CheckRecord {
            name: "pi_trivial_kernel",
            defect: pi_ratio,
            tolerance: 1e-10,
            pass: pi_ratio > 1e-10,
        });

        let herm_l = linalg::hermitian_defect(&self.lambda).unwrap_or(f64::INFINITY);
        let scale_l = max_abs(&self.lambda).max(1.0);
        checks.push(CheckRecord {
            name: "lambda_hermitian",
            defect: herm_l,
            tolerance: 1e-12 * scale_l,
            pass: herm_l <= 1e-12 * scale_l,
        });

        let finite = linalg::is_finite_matrix(&self.a0)
            && linalg::is_finite_matrix(&self.pi)
            && linalg::is_finite_matrix(&self.lambda);
        checks.push(CheckRecord {
            name: "finite_entries",
            defect: if finite { 0.0 } else { f64::INFINITY },
            tolerance: 0.5,
            pass: finite,
        });

        ValidationReport { checks }
    }

    /// Diagonal weights `1/(1 - z/d_i)` of `(I - z A0^{-1})^{-1}`, guarded
    /// against z sitting on the spectrum of A0. The singular values of
    /// `I - z A0^{-1}` are exactly `|1 - z/d_i|`.
    fn freq_weights(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let mut min_s = f64::INFINITY;
        let mut max_s: f64 = 0.0;
        let mut w = Vec::with_capacity(self.dim_h);
        for &d in &self.evals {
            let denom = Complex64::new(1.0, 0.0) - z / linalg::cr(d);
            let s = denom.norm();
            min_s = min_s.min(s);
            max_s = max_s.max(s);
            w.push(denom);
        }
        if min_s <= FREQ_SV_RATIO * max_s {
            return Err(Error::SingularFrequency { re: z.re, im: z.im });
        }
        Ok(w.into_iter().map(|d| Complex64::new(1.0, 0.0) / d).collect())
    }

    pub fn apply_freq_vec(&self, z: Complex64, x: &CVector) -> Result<CVector> {
        let w = self.freq_weights(z)?;
        let mut y = self.u.adjoint() * x;
        for (i, wi) in w.iter().enumerate() {
            y[i] *= wi;
        }
        Ok(&self.u * y)
    }

    /// `(A0 - z)^{-1} h`.
    pub fn a0_resolvent(&self, z: Complex64, h: &CVector) -> Result<CVector> {
        let _guard = self.freq_weights(z)?;
        let mut y = self.u.adjoint() * h;
        for (i, &d) in self.evals.iter().enumerate() {
            y[i] /= linalg::cr(d) - z;
        }
        Ok(&self.u * y)
    }

    /// Assembled solution-operator matrix `G(z) = (I - z A0^{-1})^{-1} Pi`
    /// (dimH x dimE).
    pub fn solution_matrix(&self, z: Complex64) -> Result<CMatrix> {
        let w = self.freq_weights(z)?;
        let mut y = self.u_adj_pi.clone();
        for (i, wi) in w.iter().enumerate() {
            for j in 0..y.ncols() {
                y[(i, j)] *= wi;
            }
        }
        Ok(&self.u * y)
    }

    /// `G(zbar)* h = Pi* (I - z A0^{-1})^{-1} h`.
    pub fn solution_matrix_adjoint_apply(&self, z: Complex64, h: &CVector) -> Result<CVector> {
        let w = self.freq_weights(z)?;
        let mut y = self.u.adjoint() * h;
        for (i, wi) in w.iter().enumerate() {
            y[i] *= wi;
        }
        Ok(self.u_adj_pi.adjoint() * y)
    }

    /// Solution of the abstract BVP `(A - z)u = 0`, `trace0(u) = phi`, as a
    /// decomposition: `f = z (I - z A0^{-1})^{-1} Pi phi`.
    pub fn gamma(&self, z: Complex64, phi: &CVector) -> Result<DecomposedVector> {
        if phi.len() != self.dim_e {
            return Err(Error::DimensionMismatch("gamma: phi has wrong dim".into()));
        }
        let pi_phi = &self.pi * phi;
        let f = self.apply_freq_vec(z, &pi_phi)? * z;
        Ok(DecomposedVector {
            f,
            phi: phi.clone(),
        })
    }

    /// `A (A0^{-1} f + Pi phi) = f`.
    pub fn a_apply(&self, d: &DecomposedVector) -> CVector {
        d.f.clone()
    }

    /// `u = A0^{-1} f + Pi phi`.
    pub fn assemble(&self, d: &DecomposedVector) -> CVector {
        &self.a0_inv * &d.f + &self.pi * &d.phi
    }

    pub fn trace0(&self, d: &DecomposedVector) -> CVector {
        d.phi.clone()
    }

    /// `trace1 = Pi* f + Lambda phi`.
    pub fn trace1(&self, d: &DecomposedVector) -> CVector {
        self.pi.adjoint() * &d.f + &self.lambda * &d.phi
    }

    /// `M(z) = Lambda + z Pi* (I - z A0^{-1})^{-1} Pi`.
    pub fn m_function(&self, z: Complex64) -> Result<CMatrix> {
        let w = self.freq_weights(z)?;
        let mut y = self.u_adj_pi.clone();
        for (i, wi) in w.iter().enumerate() {
            for j in 0..y.ncols() {
                y[(i, j)] *= wi * z;
            }
        }
        Ok(&self.lambda + self.u_adj_pi.adjoint() * y)
    }

    /// Green identity defect `|<Au,v> - <u,Av> - <t1 u, t0 v> + <t0 u, t1 v>|`
    /// together with the scale of the four terms.
    pub fn green_defect(&self, du: &DecomposedVector, dv: &DecomposedVector) -> (f64, f64) {
        let u = self.assemble(du);
        let v = self.assemble(dv);
        let au = self.a_apply(du);
        let av = self.a_apply(dv);
        let t0u = self.trace0(du);
        let t1u = self.trace1(du);
        let t0v = self.trace0(dv);
        let t1v = self.trace1(dv);
        let lhs1 = inner(&au, &v);
        let lhs2 = inner(&u, &av);
        let rhs1 = inner(&t1u, &t0v);
        let rhs2 = inner(&t0u, &t1v);
        let defect = (lhs1 - lhs2 - rhs1 + rhs2).norm();
        let scale = lhs1
            .norm()
            .max(lhs2.norm())
            .max(rhs1.norm())
            .max(rhs2.norm())
            .max(1e-30);
        (defect, scale)
    }

    /// `|| Im M(z) - Im z * G(z)* G(z) ||` (max-norm) plus the smallest
    /// eigenvalue of `Im M(z)`; requires `Im z > 0`.
    pub fn herglotz_defect(&self, z: Complex64) -> Result<HerglotzReport> {
        if z.im <= 0.0 {
            return Err(Error::WrongHalfPlane {
                re: z.re,
                im: z.im,
                what: "herglotz_defect (needs Im z > 0)",
            });
        }
        let m = self.m_function(z)?;
        let im_m = (&m - m.adjoint()).scale(0.5) * Complex64::new(0.0, -1.0);
        let g = self.solution_matrix(z)?;
        let gram = g.adjoint() * &g;
        let defect = max_abs(&(&im_m - gram.scale(z.im)));
        let scale = max_abs(&im_m).max(1.0);
        let min_eig = hermitian_eigenvalues(&im_m)?
            .first()
            .copied()
            .unwrap_or(0.0);
        Ok(HerglotzReport {
            defect,
            scale,
            min_im_eigenvalue: min_eig,
        })
    }

    /// Numerical rank of the stacked solution-operator ranges
    /// `[G(z_1) ... G(z_r)]`; rank == dimH is the finite surrogate for
    /// simplicity of the minimal symmetric restriction.
    pub fn simplicity_probe(&self, zs: &[Complex64]) -> Result<SimplicityReport> {
        let mut stacked = CMatrix::zeros(self.dim_h, zs.len() * self.dim_e);
        for (j, &z) in zs.iter().enumerate() {
            let g = self.solution_matrix(z)?;
            for c in 0..self.dim_e {
                stacked.set_column(j * self.dim_e + c, &g.column(c));
            }
        }
        let rank = numerical_rank(&stacked, 1e-10);
        Ok(SimplicityReport {
            rank,
            dim_h: self.dim_h,
            certified: rank == self.dim_h,
        })
    }
}

#[derive(Debug, Clone)]
pub struct HerglotzReport {
    pub defect: f64,
    pub scale: f64,
    pub min_im_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct SimplicityReport {
    pub rank: usize,
    pub dim_h: usize,
    pub certified: bool,
}

/// Convenience: max-norm distance between matrices relative to their scale.
pub fn rel_defect(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = max_abs(a).max(max_abs(b)).max(1e-30);
    max_abs(&(a - b)) / scale
}

pub fn vec_rel_defect(a: &CVector, b: &CVector) -> f64 {
    let scale = vec_max_abs(a).max(vec_max_abs(b)).max(1e-30);
    vec_max_abs(&(a - b)) / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr};
    use crate::scenarios::{build_interval_laplacian, build_random_triple, exact_interval_m};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_cvec(seed: u64, n: usize) -> CVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn gamma_at_zero_is_the_lift() {
        let t = build_random_triple(1, 10, 2).unwrap();
        let phi = rand_cvec(1, 2);
        let d = t.gamma(cr(0.0), &phi).unwrap();
        assert_eq!(vec_max_abs(&d.f), 0.0);
        let u = t.assemble(&d);
        let lift = &t.pi * &phi;
        assert!(vec_rel_defect(&u, &lift) < 1e-14);
        // trace0 recovers phi exactly as stored data
        assert_eq!(t.trace0(&d).as_slice(), phi.as_slice());
    }

    #[test]
    fn gamma_solves_the_homogeneous_problem() {
        let t = build_random_triple(2, 16, 3).unwrap();
        let z = c(0.0, 2.0);
        let phi = rand_cvec(2, 3);
        let d = t.gamma(z, &phi).unwrap();
        let residual = t.a_apply(&d) - t.assemble(&d) * z;
        assert!(vec_max_abs(&residual) <= 1e-10 * vec_max_abs(&d.f).max(1.0));
    }

    #[test]
    fn a_extends_a0_and_kills_the_lift() {
        let t = build_random_triple(3, 12, 2).unwrap();
        let f = rand_cvec(3, 12);
        let d = DecomposedVector {
            f: f.clone(),
            phi: CVector::zeros(2),
        };
        // A u = f = A0 (A0^{-1} f)
        let u = t.assemble(&d);
        assert!(vec_rel_defect(&t.a_apply(&d), &(&t.a0 * u)) < 1e-9);
        // trace0 of a dom(A0) element vanishes; trace1 is Pi* f
        assert_eq!(vec_max_abs(&t.trace0(&d)), 0.0);
        assert!(vec_rel_defect(&t.trace1(&d), &(t.pi.adjoint() * &f)) < 1e-14);

        let d2 = DecomposedVector {
            f: CVector::zeros(12),
            phi: rand_cvec(4, 2),
        };
        assert_eq!(vec_max_abs(&t.a_apply(&d2)), 0.0);
    }

    #[test]
    fn m_function_at_zero_is_lambda() {
        let t = build_random_triple(5, 10, 3).unwrap();
        let m0 = t.m_function(cr(0.0)).unwrap();
        assert!(rel_defect(&m0, &t.lambda) < 1e-13);
    }

    #[test]
    fn m_function_symmetry_and_difference_identity() {
        let t = build_random_triple(6, 16, 3).unwrap();
        // M(z)* = M(zbar)
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(0.1..3.0));
            let m = t.m_function(z).unwrap();
            let mc = t.m_function(z.conj()).unwrap();
            assert!(rel_defect(&m.adjoint(), &mc) < 1e-10);
        }
        // M(z) - M(w) = (z - w) G(zbar)* G(w)
        let z = c(1.0, 2.0);
        let w = c(3.0, -1.0);
        let lhs = t.m_function(z).unwrap() - t.m_function(w).unwrap();
        let gz = t.solution_matrix(z.conj()).unwrap();
        let gw = t.solution_matrix(w).unwrap();
        let rhs = (gz.adjoint() * gw) * (z - w);
        assert!(rel_defect(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn trace1_of_gamma_is_m() {
        let t = build_random_triple(7, 12, 2).unwrap();
        let z = c(0.7, 1.1);
        let phi = rand_cvec(7, 2);
        let d = t.gamma(z, &phi).unwrap();
        let lhs = t.trace1(&d);
        let rhs = t.m_function(z).unwrap() * &phi;
        assert!(vec_rel_defect(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn green_identity_on_random_pairs() {
        let t = build_random_triple(8, 16, 3).unwrap();
        for seed in 0..50u64 {
            let du = DecomposedVector {
                f: rand_cvec(300 + seed, 16),
                phi: rand_cvec(400 + seed, 3),
            };
            let dv = DecomposedVector {
                f: rand_cvec(500 + seed, 16),
                phi: rand_cvec(600 + seed, 3),
            };
            let (defect, scale) = t.green_defect(&du, &dv);
            assert!(defect <= 1e-10 * scale, "defect {defect:e} at scale {scale:e}");
        }
        // both phi = 0: both sides vanish identically
        let du = DecomposedVector {
            f: rand_cvec(1000, 16),
            phi: CVector::zeros(3),
        };
        let dv = DecomposedVector {
            f: rand_cvec(1001, 16),
            phi: CVector::zeros(3),
        };
        let (defect, scale) = t.green_defect(&du, &dv);
        assert!(defect <= 1e-12 * scale);
    }

    #[test]
    fn herglotz_structure() {
        let t = build_random_triple(9, 16, 3).unwrap();
        let r = t.herglotz_defect(c(0.0, 1.0)).unwrap();
        assert!(r.defect <= 1e-10 * r.scale);
        assert!(r.min_im_eigenvalue >= -1e-10);
        assert!(matches!(
            t.herglotz_defect(cr(1.0)),
            Err(Error::WrongHalfPlane { .. })
        ));
        // interval scenario
        let ti = build_interval_laplacian(32).unwrap();
        let ri = ti.herglotz_defect(c(0.0, 1.0)).unwrap();
        assert!(ri.min_im_eigenvalue >= -1e-10);
    }

    #[test]
    fn simplicity_probe_special_cases() {
        // generic full-width Pi certifies with a single frequency
        let t = build_random_triple(10, 6, 6).unwrap();
        let probe = t.simplicity_probe(&[c(0.3, 1.0)]).unwrap();
        assert!(probe.certified);

        // diagonal A0 with distinct entries and rank-one coupling needs many
        // frequencies (Vandermonde-type argument)
        let n = 6;
        let a0 = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                cr(1.0 + i as f64)
            } else {
                cr(0.0)
            }
        });
        let mut pi = CMatrix::zeros(n, 1);
        pi[(0, 0)] = cr(1.0);
        // rank-one coupling hits only the first coordinate; rotate so it
        // couples every eigenvector
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut pi_full = CMatrix::zeros(n, 1);
        for i in 0..n {
            pi_full[(i, 0)] = c(rng.gen_range(0.2..1.0), rng.gen_range(-0.5..0.5));
        }
        let lam = CMatrix::from_row_slice(1, 1, &[cr(0.4)]);
        let t_full =
            TripleDescriptor::new(a0.clone(), pi_full, lam.clone(), "diag-full").unwrap();
        let zs: Vec<Complex64> = (0..n).map(|j| c(0.11 + j as f64, 1.0)).collect();
        assert!(t_full.simplicity_probe(&zs).unwrap().certified);

        // a repeated eigenvalue with rank-one coupling leaves a reducing
        // subspace: rank < dimH for every sample count
        let mut a0_rep = a0;
        a0_rep[(1, 1)] = a0_rep[(0, 0)];
        let t_rep = TripleDescriptor::new(a0_rep, pi, lam, "diag-repeated").unwrap();
        let zs: Vec<Complex64> = (0..2 * n).map(|j| c(0.17 + 0.9 * j as f64, 1.3)).collect();
        let probe = t_rep.simplicity_probe(&zs).unwrap();
        assert!(probe.rank < n);
    }

    #[test]
    fn interval_m_against_independent_fd_oracle() {
        // Richardson-extrapolated second-order finite-difference solve of
        // -u'' = z u with Dirichlet data, flux recovered by a one-sided
        // second-order difference; fully independent of the triple path.
        fn oracle_dtn(z: Complex64, n: usize) -> CMatrix {
            let h = 1.0 / (n as f64 + 1.0);
            // tridiagonal Thomas solve of (A0 - z) u = h^{-2} (data coupling)
            let solve_tridiag = |phi0: Complex64, phi1: Complex64| -> Vec<Complex64> {
                let diag = cr(2.0 / (h * h)) - z;
                let off = cr(-1.0 / (h * h));
                let mut rhs = vec![Complex64::new(0.0, 0.0); n];
                rhs[0] = phi0 / cr(h * h);
                rhs[n - 1] = phi1 / cr(h * h);
                // forward elimination
                let mut cp = vec![Complex64::new(0.0, 0.0); n];
                let mut dp = vec![Complex64::new(0.0, 0.0); n];
                cp[0] = off / diag;
                dp[0] = rhs[0] / diag;
                for i in 1..n {
                    let m = diag - off * cp[i - 1];
                    cp[i] = off / m;
                    dp[i] = (rhs[i] - off * dp[i - 1]) / m;
                }
                let mut u = vec![Complex64::new(0.0, 0.0); n];
                u[n - 1] = dp[n - 1];
                for i in (0..n - 1).rev() {
                    u[i] = dp[i] - cp[i] * u[i + 1];
                }
                u
            };
            let flux = |u: &[Complex64], phi0: Complex64, phi1: Complex64| -> (Complex64, Complex64) {
                // -du/dn at 0 is u'(0), at 1 is -u'(1); one-sided 2nd order
                let at0 = (-cr(3.0) * phi0 + cr(4.0) * u[0] - u[1]) / cr(2.0 * h);
                let at1 = -((cr(3.0) * phi1 - cr(4.0) * u[n - 1] + u[n - 2]) / cr(2.0 * h));
                (at0, at1)
            };
            let u10 = solve_tridiag(cr(1.0), cr(0.0));
            let (m00, m10) = flux(&u10, cr(1.0), cr(0.0));
            let u01 = solve_tridiag(cr(0.0), cr(1.0));
            let (m01, m11) = flux(&u01, cr(0.0), cr(1.0));
            CMatrix::from_row_slice(2, 2, &[m00, m01, m10, m11])
        }
        for z in [
            cr(std::f64::consts::PI.powi(2) / 4.0),
            cr(-2.0),
            c(1.5, 1.0),
        ] {
            let coarse = oracle_dtn(z, 4000);
            let fine = oracle_dtn(z, 8000);
            let extrapolated = (fine.scale(4.0) - coarse).scale(1.0 / 3.0);
            let exact = exact_interval_m(z).unwrap();
            assert!(
                rel_defect(&extrapolated, &exact) < 1e-9,
                "oracle vs closed form at z={z}: {:e}",
                rel_defect(&extrapolated, &exact)
            );
        }
        // and the quarter-pi^2 landmark value
        let z = cr(std::f64::consts::PI.powi(2) / 4.0);
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[
                cr(0.0),
                cr(std::f64::consts::PI / 2.0),
                cr(std::f64::consts::PI / 2.0),
                cr(0.0),
            ],
        );
        let t = build_interval_laplacian(128).unwrap();
        let m = t.m_function(z).unwrap();
        assert!(rel_defect(&m, &expect) < 1e-3);
    }

    #[test]
    fn validation_report_passes_on_scenarios() {
        for t in [
            build_random_triple(11, 8, 1).unwrap(),
            build_random_triple(12, 16, 3).unwrap(),
            build_interval_laplacian(16).unwrap(),
        ] {
            let report = t.validate();
            assert!(report.all_pass(), "{}: {:?}", t.label, report.checks);
        }
    }
}
