//! Boundary conditions `alpha G0 u + beta G1 u = 0`, the Krein resolvent of
//! the induced extension, the dissipative operator `L` and its adjoint, the
//! abstract BVP solver, and singular-value scans over the admissible
//! frequency set.

use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, identity, inverse, max_abs, solve, solve_vec, CMatrix, CVector};
use crate::par;
use crate::triple::{DecomposedVector, TripleDescriptor};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative singular-value threshold declaring `B + M(z)` singular, i.e.
/// `z` outside the admissible set.
pub const QB_SV_RATIO: f64 = 1e-10;

/// A boundary condition `(alpha, beta)` with invertible `beta`, reduced to
/// the bounded parameter `B = beta^{-1} alpha`.
#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    pub alpha: CMatrix,
    pub beta: CMatrix,
    pub b: CMatrix,
    pub label: String,
}

impl BoundaryCondition {
    pub fn new(alpha: CMatrix, beta: CMatrix, label: impl Into<String>) -> Result<Self> {
        let dim = alpha.nrows();
        if !alpha.is_square() || !beta.is_square() || beta.nrows() != dim {
            return Err(Error::InvalidBoundaryCondition(
                "alpha and beta must be square matrices of equal size".into(),
            ));
        }
        let (min_sv, max_sv) = linalg::min_max_sv(&beta);
        if max_sv == 0.0 || min_sv <= 1e-10 * max_sv {
            return Err(Error::InvalidBoundaryCondition(format!(
                "beta is not invertible (sv ratio {:e})",
                if max_sv == 0.0 { 0.0 } else { min_sv / max_sv }
            )));
        }
        let b = solve(&beta, &alpha)?;
        if !linalg::is_finite_matrix(&b) {
            return Err(Error::InvalidBoundaryCondition("B is not finite".into()));
        }
        let recon_defect = max_abs(&(&beta * &b - &alpha));
        let scale = max_abs(&alpha).max(max_abs(&beta)).max(1.0);
        if recon_defect > 1e-12 * scale * linalg::op_norm(&b).max(1.0) {
            return Err(Error::InvalidBoundaryCondition(format!(
                "beta * B differs from alpha by {recon_defect:e}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            b,
            label: label.into(),
        })
    }

    pub fn from_b(b: CMatrix, label: impl Into<String>) -> Result<Self> {
        let beta = identity(b.nrows());
        Self::new(b.clone(), beta, label)
    }

    pub fn dim_e(&self) -> usize {
        self.alpha.nrows()
    }

    /// `B = -iI`: the maximal dissipative extension.
    pub fn dissipative(dim_e: usize) -> Self {
        let alpha = CMatrix::from_diagonal_element(dim_e, dim_e, c(0.0, -1.0));
        Self::new(alpha, identity(dim_e), "dissipative").unwrap()
    }

    /// `B = +iI`: the adjoint extension.
    pub fn adjoint_type(dim_e: usize) -> Self {
        let alpha = CMatrix::from_diagonal_element(dim_e, dim_e, c(0.0, 1.0));
        Self::new(alpha, identity(dim_e), "adjoint").unwrap()
    }

    /// `B = 0` (trace1 = 0), the Neumann-type condition.
    pub fn neumann(dim_e: usize) -> Self {
        Self::new(CMatrix::zeros(dim_e, dim_e), identity(dim_e), "neumann").unwrap()
    }

    /// `alpha = I`, `beta = eps I`: the near-Dirichlet regularisation.
    pub fn dirichlet_eps(dim_e: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidBoundaryCondition(
                "dirichlet_eps needs eps > 0".into(),
            ));
        }
        Self::new(
            identity(dim_e),
            CMatrix::from_diagonal_element(dim_e, dim_e, cr(eps)),
            format!("dirichlet_eps({eps})"),
        )
    }

    /// Random Hermitian `B` (self-adjoint extension), deterministic in the
    /// seed.
    pub fn hermitian_random(seed: u64, dim_e: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = CMatrix::from_fn(dim_e, dim_e, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let b = (&x + x.adjoint()).scale(0.5);
        Self::from_b(b, format!("hermitian_random({seed})")).unwrap()
    }
}

fn check_dims(t: &TripleDescriptor, bc: &BoundaryCondition) -> Result<()> {
    if bc.dim_e() != t.dim_e {
        return Err(Error::DimensionMismatch(format!(
            "boundary condition has dimE {}, triple has {}",
            bc.dim_e(),
            t.dim_e
        )));
    }
    Ok(())
}

/// `B + M(z)` with its singular-value diagnostics.
pub fn boundary_operator(
    t: &TripleDescriptor,
    bc: &BoundaryCondition,
    z: Complex64,
) -> Result<(CMatrix, f64, f64)> {
    check_dims(t, bc)?;
    let m = t.m_function(z)?;
    let bm = &bc.b + m;
    let (min_sv, max_sv) = linalg::min_max_sv(&bm);
    Ok((bm, min_sv, max_sv))
}

/// `Q_B(z) = -(B + M(z))^{-1}`; fails with [`Error::SingularBoundaryOperator`]
/// when `z` is outside the admissible set (candidate spectrum).
pub fn q_function(t: &TripleDescriptor, bc: &BoundaryCondition, z: Complex64) -> Result<CMatrix> {
    let (bm, min_sv, max_sv) = boundary_operator(t, bc, z)?;
    if min_sv <= QB_SV_RATIO * max_sv {
        return Err(Error::SingularBoundaryOperator {
            re: z.re,
            im: z.im,
            min_sv,
            threshold: QB_SV_RATIO * max_sv,
        });
    }
    Ok(-inverse(&bm)?)
}

/// Krein resolvent of the extension selected by `bc`, returned as a
/// decomposition. The trace part is computed first
/// (`phi = Q_B(z) G(zbar)* h`) so the boundary-condition residual
/// `B trace0 + trace1 = 0` is exactly checkable.
pub fn krein_resolvent(
    t: &TripleDescriptor,
    bc: &BoundaryCondition,
    z: Complex64,
    h: &CVector,
) -> Result<DecomposedVector> {
    let q = q_function(t, bc, z)?;
    let traces = t.solution_matrix_adjoint_apply(z, h)?;
    let phi = &q * traces;
    let f_free = t.apply_freq_vec(z, h)?;
    let f = f_free + t.gamma(z, &phi)?.f;
    Ok(DecomposedVector { f, phi })
}

/// `(L - z)^{-1} h` for the dissipative extension, `Im z < 0`.
pub fn l_resolvent(t: &TripleDescriptor, z: Complex64, h: &CVector) -> Result<DecomposedVector> {
    if z.im >= 0.0 {
        return Err(Error::WrongHalfPlane {
            re: z.re,
            im: z.im,
            what: "l_resolvent (needs Im z < 0)",
        });
    }
    krein_resolvent(t, &BoundaryCondition::dissipative(t.dim_e), z, h)
}

/// `(L* - z)^{-1} h`, `Im z > 0`.
pub fn lstar_resolvent(
    t: &TripleDescriptor,
    z: Complex64,
    h: &CVector,
) -> Result<DecomposedVector> {
    if z.im <= 0.0 {
        return Err(Error::WrongHalfPlane {
            re: z.re,
            im: z.im,
            what: "lstar_resolvent (needs Im z > 0)",
        });
    }
    krein_resolvent(t, &BoundaryCondition::adjoint_type(t.dim_e), z, h)
}

/// Solve `(A - z)u = f`, `alpha trace0 u + beta trace1 u = phi`.
pub fn solve_bvp(
    t: &TripleDescriptor,
    bc: &BoundaryCondition,
    z: Complex64,
    f: &CVector,
    phi: &CVector,
) -> Result<DecomposedVector> {
    check_dims(t, bc)?;
    let m = t.m_function(z)?;
    let op = &bc.alpha + &bc.beta * m;
    let (min_sv, max_sv) = linalg::min_max_sv(&op);
    if max_sv == 0.0 || min_sv <= QB_SV_RATIO * max_sv {
        return Err(Error::SingularBoundaryOperator {
            re: z.re,
            im: z.im,
            min_sv,
            threshold: QB_SV_RATIO * max_sv,
        });
    }
    let rhs = phi - &bc.beta * t.solution_matrix_adjoint_apply(z, f)?;
    let psi = solve_vec(&op, &rhs)?;
    let f_part = t.apply_freq_vec(z, f)? + t.gamma(z, &psi)?.f;
    Ok(DecomposedVector { f: f_part, phi: psi })
}

/// Reassemble the generator from its resolvent: `A = zI + R(z)^{-1}` where
/// `R(z)` is the assembled Krein resolvent. Independent of `z` up to
/// conditioning, which is the check that the Krein formula really is a
/// resolvent.
pub fn reconstruct_generator(
    t: &TripleDescriptor,
    bc: &BoundaryCondition,
    z: Complex64,
) -> Result<CMatrix> {
    let r = resolvent_matrix(t, bc, z)?;
    Ok(CMatrix::from_diagonal_element(t.dim_h, t.dim_h, z) + inverse(&r)?)
}

/// Dense `(A_B - z)^{-1}` as a dimH x dimH matrix.
pub fn resolvent_matrix(
    t: &TripleDescriptor,
    bc: &BoundaryCondition,
    z: Complex64,
) -> Result<CMatrix> {
    let q = q_function(t, bc, z)?;
    let g = t.solution_matrix(z)?;
    let g_adj = t.solution_matrix(z.conj())?.adjoint();
    let mut r = &g * q * g_adj;
    // (A0 - z)^{-1} added spectrally
    let id = identity(t.dim_h);
    let mut a0_res = CMatrix::zeros(t.dim_h, t.dim_h);
    for (j, col) in id.column_iter().enumerate() {
        let col_v = t.a0_resolvent(z, &CVector::from_column_slice(col.as_slice()))?;
        a0_res.set_column(j, &col_v);
    }
    r += a0_res;
    Ok(r)
}

/// One point of a singular-value scan of `B + M(z)`.
#[derive(Debug, Clone)]
pub struct ResolventSample {
    pub z: Complex64,
    pub min_sv: Option<f64>,
    pub op_norm: Option<f64>,
    pub in_qb: Option<bool>,
    pub error: Option<String>,
}

/// Scan a frequency grid; per-point failures are recorded, never raised.
pub fn spectrum_scan(
    t: &TripleDescriptor,
    bc: &BoundaryCondition,
    grid: &[Complex64],
) -> Vec<ResolventSample> {
    par::map(grid, |&z| sample_point(t, bc, z))
}

/// Sequential twin of [`spectrum_scan`], kept for benchmarking.
pub fn spectrum_scan_seq(
    t: &TripleDescriptor,
    bc: &BoundaryCondition,
    grid: &[Complex64],
) -> Vec<ResolventSample> {
    par::map_seq(grid, |&z| sample_point(t, bc, z))
}

fn sample_point(t: &TripleDescriptor, bc: &BoundaryCondition, z: Complex64) -> ResolventSample {
    match boundary_operator(t, bc, z) {
        Ok((_, min_sv, max_sv)) => ResolventSample {
            z,
            min_sv: Some(min_sv),
            op_norm: Some(max_sv),
            in_qb: Some(min_sv > QB_SV_RATIO * max_sv),
            error: None,
        },
        Err(e) => ResolventSample {
            z,
            min_sv: None,
            op_norm: None,
            in_qb: None,
            error: Some(e.to_string()),
        },
    }
}

/// Candidate spectrum from a scan along a 1D path. Two detectors feed the
/// refinement stage:
///
/// * local minima of the min-singular-value below `1e-6 * median`, refined
///   by golden-section descent between the neighbouring grid points;
/// * for real segments, a log-distance descent anchored at each eigenvalue
///   of `A0` inside the range. Large boundary parameters (near-Dirichlet)
///   push the roots of `det(B + M)` into needle-thin basins next to the
///   poles of `M`, which no uniform grid resolves; in the coordinate
///   `s = log10 |z - pole|` the dip is wide and unimodal.
///
/// Refined points are accepted only if their min-singular-value clears the
/// same `1e-6 * median` bar, then deduplicated to half a grid step.
pub fn candidates_from_scan(
    t: &TripleDescriptor,
    bc: &BoundaryCondition,
    grid: &[Complex64],
    scan: &[ResolventSample],
) -> Vec<Complex64> {
    let mut valid: Vec<f64> = scan.iter().filter_map(|s| s.min_sv).collect();
    if valid.len() < 3 {
        return Vec::new();
    }
    valid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = valid[valid.len() / 2];
    let threshold = 1e-6 * median;
    let min_sv_at = |z: Complex64| -> f64 {
        match boundary_operator(t, bc, z) {
            Ok((_, min_sv, _)) => min_sv,
            Err(_) => f64::INFINITY,
        }
    };

    let mut out: Vec<Complex64> = Vec::new();
    for i in 1..scan.len() - 1 {
        let (Some(prev), Some(cur), Some(next)) =
            (scan[i - 1].min_sv, scan[i].min_sv, scan[i + 1].min_sv)
        else {
            continue;
        };
        if cur <= prev && cur <= next && cur < threshold {
            let a = grid[i - 1];
            let b = grid[i + 1];
            let f = |s: f64| min_sv_at(a + (b - a) * cr(s));
            let s_min = golden_section_min(&f, 0.0, 1.0, 1e-10);
            let z = a + (b - a) * cr(s_min);
            if min_sv_at(z) < threshold {
                out.push(z);
            }
        }
    }

    // pole-anchored needles (real segments only)
    let real_grid = grid.iter().all(|z| z.im == 0.0);
    if real_grid && grid.len() >= 2 {
        let lo = grid.first().unwrap().re.min(grid.last().unwrap().re);
        let hi = grid.first().unwrap().re.max(grid.last().unwrap().re);
        let step = (hi - lo) / (grid.len() - 1) as f64;
        for &pole in t.eigenvalues_a0() {
            if pole <= lo || pole >= hi {
                continue;
            }
            let scale = pole.abs().max(1.0);
            for side in [1.0, -1.0] {
                let f = |s: f64| min_sv_at(cr(pole + side * scale * 10f64.powf(s)));
                // pre-scan in quarter-decade steps: the dip is about one
                // decade wide, the plateaus on both sides carry no gradient
                let ub = (step / scale).log10();
                let mut best = (f64::INFINITY, ub);
                let mut s = -13.0;
                while s < ub {
                    let v = f(s);
                    if v < best.0 {
                        best = (v, s);
                    }
                    s += 0.25;
                }
                let s_min = golden_section_min(&f, best.1 - 0.3, best.1 + 0.3, 1e-10);
                let z = cr(pole + side * scale * 10f64.powf(s_min));
                if min_sv_at(z) < threshold {
                    out.push(z);
                }
            }
        }
    }

    out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut deduped: Vec<Complex64> = Vec::new();
    let grid_step = if grid.len() >= 2 {
        (grid[1] - grid[0]).norm()
    } else {
        1e-6
    };
    for z in out {
        if deduped
            .last()
            .map(|p| (z - p).norm() > 0.5 * grid_step)
            .unwrap_or(true)
        {
            deduped.push(z);
        }
    }
    deduped
}

fn golden_section_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c1 = b - inv_phi * (b - a);
    let mut c2 = a + inv_phi * (b - a);
    let mut f1 = f(c1);
    let mut f2 = f(c2);
    while (b - a).abs() > tol {
        if f1 < f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = f(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = f(c2);
        }
    }
    0.5 * (a + b)
}
