//! The self-adjoint dilation on `L^2(R_-, E) + H + L^2(R_+, E)`: explicit
//! half-line resolvent kernels, the dilation resolvent assembled from them,
//! and the checks that it really is a self-adjoint extension of the
//! dissipative operator.

use crate::charfun::{char_function_matrix, char_star_matrix};
use crate::error::{Error, Result};
use crate::extensions::{l_resolvent, lstar_resolvent};
use crate::linalg::{self, c, cr, inner, solve_vec, vec_norm, CMatrix, CVector};
use crate::quad::{derivative_at_nodes, gauss_legendre, quad_inner, GridFunction, HalfLine};
use crate::triple::{DecomposedVector, TripleDescriptor};
use num_complex::Complex64;

/// Required decay of truncated exponential tails: `e^{-|Im z| X} < 1e-12`.
const TAIL_LOG: f64 = 27.631021115928547; // ln(1e12)

/// Minimal distance from the real axis for channel operations.
const MIN_IM: f64 = 0.05;

/// The four half-line momentum operators: `i d/dx` on the full Sobolev
/// space of a half-line or on the subspace vanishing at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfLineKind {
    /// `W^1_2(R_+)`, resolvent set is the upper half-plane.
    DPlus,
    /// `W^1_2(R_-)`, resolvent set is the lower half-plane.
    DMinus,
    /// Vanishing boundary value on `R_+`, resolvent set lower.
    DPlus0,
    /// Vanishing boundary value on `R_-`, resolvent set upper.
    DMinus0,
}

impl HalfLineKind {
    fn side(self) -> HalfLine {
        match self {
            HalfLineKind::DPlus | HalfLineKind::DPlus0 => HalfLine::Plus,
            HalfLineKind::DMinus | HalfLineKind::DMinus0 => HalfLine::Minus,
        }
    }

    fn needs_lower_z(self) -> bool {
        matches!(self, HalfLineKind::DMinus | HalfLineKind::DPlus0)
    }
}

fn check_channel_z(z: Complex64) -> Result<()> {
    if z.im.abs() < MIN_IM {
        return Err(Error::DomainTooShallow {
            product: z.im.abs(),
            required: MIN_IM,
        });
    }
    Ok(())
}

/// Resolvent of a half-line momentum operator applied to a sampled
/// function: quadrature evaluation of the Volterra kernels, e.g.
/// `(d+0 - z)^{-1} h (x) = -i ∫_0^x e^{-iz(x-t)} h(t) dt` for `Im z < 0`.
/// The kernel is always evaluated with `|e^{-iz(x-t)}| <= 1`, panel by
/// panel, so nothing overflows for any admissible `z`.
pub fn halfline_resolvent(
    kind: HalfLineKind,
    z: Complex64,
    h: &GridFunction,
) -> Result<GridFunction> {
    check_channel_z(z)?;
    if kind.needs_lower_z() && z.im >= 0.0 {
        return Err(Error::WrongHalfPlane {
            re: z.re,
            im: z.im,
            what: "halfline_resolvent (this kind resolves in C_-)",
        });
    }
    if !kind.needs_lower_z() && z.im <= 0.0 {
        return Err(Error::WrongHalfPlane {
            re: z.re,
            im: z.im,
            what: "halfline_resolvent (this kind resolves in C_+)",
        });
    }
    if h.grid.half != kind.side() {
        return Err(Error::GridMismatch(
            "grid half-line does not match the operator".into(),
        ));
    }

    let forward = kind.needs_lower_z();
    let grid = h.grid.clone();
    let (sub_x, sub_w) = gauss_legendre(grid.panel_order + 2);
    let mut values = vec![CVector::zeros(h.dim_e); grid.len()];
    let i_unit = c(0.0, 1.0);

    // interpolate h within panel `p` (barycentric Lagrange on the panel
    // nodes)
    let bary = |range: std::ops::Range<usize>, t: f64| -> CVector {
        let nodes = &grid.nodes[range.clone()];
        let mut weights = vec![0.0f64; nodes.len()];
        for i in 0..nodes.len() {
            let mut w = 1.0;
            for j in 0..nodes.len() {
                if i != j {
                    w *= nodes[i] - nodes[j];
                }
            }
            weights[i] = 1.0 / w;
        }
        let mut num = CVector::zeros(h.dim_e);
        let mut den = Complex64::new(0.0, 0.0);
        for (i, &x) in nodes.iter().enumerate() {
            let d = t - x;
            if d.abs() < 1e-300 {
                return h.values[range.start + i].clone();
            }
            let wi = cr(weights[i] / d);
            num += &h.values[range.start + i] * wi;
            den += wi;
        }
        num / den
    };

    // integral of e^{-iz(target - t)} h(t) over [lo, hi] with target outside
    // or at the boundary of [lo, hi] on the decaying side
    let segment = |range: std::ops::Range<usize>, lo: f64, hi: f64, target: f64| -> CVector {
        let mut acc = CVector::zeros(h.dim_e);
        if hi - lo <= 0.0 {
            return acc;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (&sx, &sw) in sub_x.iter().zip(sub_w.iter()) {
            let t = mid + half * sx;
            let kernel = (-i_unit * z * cr(target - t)).exp() * cr(sw * half);
            acc += bary(range.clone(), t) * kernel;
        }
        acc
    };

    if forward {
        // f(x) = e^{-iz(x-a)} f(a) - i ∫_a^x e^{-iz(x-t)} h(t) dt, panels
        // swept left to right (kernel decays since x >= t)
        let mut carry = CVector::zeros(h.dim_e);
        for p in 0..grid.panels {
            let (range, a, b) = grid.panel(p);
            for j in range.clone() {
                let x = grid.nodes[j];
                let prop = (-i_unit * z * cr(x - a)).exp();
                values[j] = &carry * prop - segment(range.clone(), a, x, x) * i_unit;
            }
            let prop = (-i_unit * z * cr(b - a)).exp();
            carry = &carry * prop - segment(range.clone(), a, b, b) * i_unit;
        }
        // carry now holds f at the right end of the last panel
        let boundary_value_at_0 = match kind {
            HalfLineKind::DMinus => carry, // right end is the origin
            _ => CVector::zeros(h.dim_e),  // DPlus0 vanishes at 0 by domain
        };
        Ok(GridFunction {
            grid,
            dim_e: h.dim_e,
            values,
            boundary_value_at_0,
        })
    } else {
        // f(x) = e^{-iz(x-b)} f(b) + i ∫_x^b e^{-iz(x-t)} h(t) dt, panels
        // swept right to left (kernel decays since x <= t)
        let mut carry = CVector::zeros(h.dim_e);
        for p in (0..grid.panels).rev() {
            let (range, a, b) = grid.panel(p);
            for j in range.clone().rev() {
                let x = grid.nodes[j];
                let prop = (-i_unit * z * cr(x - b)).exp();
                values[j] = &carry * prop + segment(range.clone(), x, b, x) * i_unit;
            }
            let prop = (-i_unit * z * cr(a - b)).exp();
            carry = &carry * prop + segment(range.clone(), a, b, a) * i_unit;
        }
        let boundary_value_at_0 = match kind {
            HalfLineKind::DPlus => carry, // left end is the origin
            _ => CVector::zeros(h.dim_e), // DMinus0 vanishes at 0 by domain
        };
        Ok(GridFunction {
            grid,
            dim_e: h.dim_e,
            values,
            boundary_value_at_0,
        })
    }
}

/// Interior component of a dilation-space element.
#[derive(Debug, Clone)]
pub enum InteriorPart {
    Vector(CVector),
    Decomposed(DecomposedVector),
}

impl InteriorPart {
    pub fn assemble(&self, t: &TripleDescriptor) -> CVector {
        match self {
            InteriorPart::Vector(v) => v.clone(),
            InteriorPart::Decomposed(d) => t.assemble(d),
        }
    }

    pub fn decomposed(&self) -> Option<&DecomposedVector> {
        match self {
            InteriorPart::Decomposed(d) => Some(d),
            InteriorPart::Vector(_) => None,
        }
    }
}

/// An element of the dilation space, with boundary-matching defects stored
/// when the element was produced as a member of the operator domain.
#[derive(Debug, Clone)]
pub struct DilationElement {
    pub v_minus: GridFunction,
    pub u: InteriorPart,
    pub v_plus: GridFunction,
    /// `(minus, plus)` matching defects of `trace1 u -+ i trace0 u =
    /// sqrt(2) v_{-+}(0)`, when tagged in-domain.
    pub domain_tag: Option<(f64, f64)>,
}

impl DilationElement {
    pub fn new(v_minus: GridFunction, u: InteriorPart, v_plus: GridFunction) -> Result<Self> {
        if v_minus.grid.half != HalfLine::Minus || v_plus.grid.half != HalfLine::Plus {
            return Err(Error::GridMismatch(
                "dilation element wants a minus-grid and a plus-grid".into(),
            ));
        }
        if v_minus.dim_e != v_plus.dim_e {
            return Err(Error::DimensionMismatch("channel dimE mismatch".into()));
        }
        Ok(Self {
            v_minus,
            u,
            v_plus,
            domain_tag: None,
        })
    }

    /// Element `(0, h, 0)` supported in the interior space.
    pub fn from_interior(
        h: CVector,
        minus: std::sync::Arc<crate::quad::QuadratureGrid>,
        plus: std::sync::Arc<crate::quad::QuadratureGrid>,
        dim_e: usize,
    ) -> Result<Self> {
        Self::new(
            GridFunction::zero(minus, dim_e),
            InteriorPart::Vector(h),
            GridFunction::zero(plus, dim_e),
        )
    }

    pub fn zero_like(&self, t: &TripleDescriptor) -> Self {
        Self {
            v_minus: GridFunction::zero(self.v_minus.grid.clone(), self.v_minus.dim_e),
            u: InteriorPart::Vector(CVector::zeros(t.dim_h)),
            v_plus: GridFunction::zero(self.v_plus.grid.clone(), self.v_plus.dim_e),
            domain_tag: None,
        }
    }
}

/// Inner product of the dilation space: channel quadratures plus the
/// interior inner product; conjugate-linear in `e2`.
pub fn dilation_inner(
    t: &TripleDescriptor,
    e1: &DilationElement,
    e2: &DilationElement,
) -> Result<Complex64> {
    let u1 = e1.u.assemble(t);
    let u2 = e2.u.assemble(t);
    Ok(quad_inner(&e1.v_minus, &e2.v_minus)? + inner(&u1, &u2) + quad_inner(&e1.v_plus, &e2.v_plus)?)
}

pub fn dilation_norm(t: &TripleDescriptor, e: &DilationElement) -> f64 {
    dilation_inner(t, e, e)
        .map(|v| v.re.max(0.0).sqrt())
        .unwrap_or(0.0)
}

fn exp_tail(
    grid: std::sync::Arc<crate::quad::QuadratureGrid>,
    dim_e: usize,
    z: Complex64,
    coeff: &CVector,
) -> GridFunction {
    let i_unit = c(0.0, 1.0);
    GridFunction::from_fn(grid, dim_e, |x| coeff * (-i_unit * z * cr(x)).exp())
        .expect("exp tail sampling cannot fail")
}

/// `(dilation - z)^{-1}` applied to `elem`, `z` off the real axis. The
/// interior part of the output is carried as a decomposition so traces are
/// exact; boundary-matching defects are stored in the element tag.
pub fn dilation_resolvent(
    t: &TripleDescriptor,
    z: Complex64,
    elem: &DilationElement,
) -> Result<DilationElement> {
    check_channel_z(z)?;
    let x_min = elem.v_minus.grid.x_max;
    let x_plus = elem.v_plus.grid.x_max;
    let product = z.im.abs() * x_min.min(x_plus);
    if product < TAIL_LOG {
        return Err(Error::DomainTooShallow {
            product,
            required: TAIL_LOG,
        });
    }
    let h = elem.u.assemble(t);
    let dim_e = t.dim_e;
    let sqrt2 = cr(std::f64::consts::SQRT_2);
    let m = t.m_function(z)?;
    let m_shift = |sign: f64| {
        &m + CMatrix::from_diagonal_element(dim_e, dim_e, c(0.0, sign))
    };

    let (v_minus, d, v_plus) = if z.im < 0.0 {
        let f_minus = halfline_resolvent(HalfLineKind::DMinus, z, &elem.v_minus)?;
        let beta = f_minus.boundary_value_at_0.clone();
        let psi = solve_vec(&m_shift(-1.0), &beta)? * sqrt2;
        let d_l = l_resolvent(t, z, &h)?;
        let d = d_l.add(&t.gamma(z, &psi)?);
        let coeff = t.trace0(&d_l) * c(0.0, 1.0) * sqrt2 + char_star_matrix(t, z)? * beta;
        let f_plus = halfline_resolvent(HalfLineKind::DPlus0, z, &elem.v_plus)?
            .add(&exp_tail(elem.v_plus.grid.clone(), dim_e, z, &coeff))?;
        (f_minus, d, f_plus)
    } else {
        let f_plus = halfline_resolvent(HalfLineKind::DPlus, z, &elem.v_plus)?;
        let beta = f_plus.boundary_value_at_0.clone();
        let psi = solve_vec(&m_shift(1.0), &beta)? * sqrt2;
        let d_l = lstar_resolvent(t, z, &h)?;
        let d = d_l.add(&t.gamma(z, &psi)?);
        let coeff =
            t.trace0(&d_l) * c(0.0, -1.0) * sqrt2 + char_function_matrix(t, z)? * beta;
        let f_minus = halfline_resolvent(HalfLineKind::DMinus0, z, &elem.v_minus)?
            .add(&exp_tail(elem.v_minus.grid.clone(), dim_e, z, &coeff))?;
        (f_minus, d, f_plus)
    };

    let (dm, dp) = matching_defects(t, &d, &v_minus, &v_plus);
    Ok(DilationElement {
        v_minus,
        u: InteriorPart::Decomposed(d),
        v_plus,
        domain_tag: Some((dm, dp)),
    })
}

/// `|| trace1 u -+ i trace0 u - sqrt(2) v_{-+}(0) ||` for the two channels.
pub fn matching_defects(
    t: &TripleDescriptor,
    d: &DecomposedVector,
    v_minus: &GridFunction,
    v_plus: &GridFunction,
) -> (f64, f64) {
    let t0 = t.trace0(d);
    let t1 = t.trace1(d);
    let sqrt2 = cr(std::f64::consts::SQRT_2);
    let minus = &t1 - &t0 * c(0.0, 1.0) - &v_minus.boundary_value_at_0 * sqrt2;
    let plus = &t1 + &t0 * c(0.0, 1.0) - &v_plus.boundary_value_at_0 * sqrt2;
    (linalg::vec_max_abs(&minus), linalg::vec_max_abs(&plus))
}

/// `|| P_H (dilation - z)^{-1} (0, h, 0) - (L - z)^{-1} h ||` for
/// `Im z < 0`; exact modulo roundoff since the interior channel carries no
/// quadrature.
pub fn dilation_property_defect(
    t: &TripleDescriptor,
    z: Complex64,
    h: &CVector,
    minus: std::sync::Arc<crate::quad::QuadratureGrid>,
    plus: std::sync::Arc<crate::quad::QuadratureGrid>,
) -> Result<f64> {
    if z.im >= 0.0 {
        return Err(Error::WrongHalfPlane {
            re: z.re,
            im: z.im,
            what: "dilation_property_defect (needs Im z < 0)",
        });
    }
    let elem = DilationElement::from_interior(h.clone(), minus, plus, t.dim_e)?;
    let out = dilation_resolvent(t, z, &elem)?;
    let lhs = out.u.assemble(t);
    let rhs = t.assemble(&l_resolvent(t, z, h)?);
    Ok(linalg::vec_max_abs(&(lhs - rhs)) / vec_norm(h).max(1e-300))
}

/// `|<R(z) e1, e2> - <e1, R(zbar) e2>|` over the dilation space, plus the
/// scale of the two terms: the quadrature-limited self-adjointness witness.
pub fn symmetry_defect(
    t: &TripleDescriptor,
    z: Complex64,
    e1: &DilationElement,
    e2: &DilationElement,
) -> Result<(f64, f64)> {
    let r1 = dilation_resolvent(t, z, e1)?;
    let r2 = dilation_resolvent(t, z.conj(), e2)?;
    let lhs = dilation_inner(t, &r1, e2)?;
    let rhs = dilation_inner(t, e1, &r2)?;
    Ok(((lhs - rhs).norm(), lhs.norm().max(rhs.norm()).max(1e-30)))
}

/// Collocation residuals of `(dilation - z) f = h`: max over interior
/// nodes of `i f' - z f - h` per channel (4th-order finite differences)
/// and the exact interior residual `A f - z f - h`.
#[derive(Debug, Clone)]
pub struct ApplyResiduals {
    pub channel_minus: f64,
    pub interior: f64,
    pub channel_plus: f64,
}

pub fn apply_residuals(
    t: &TripleDescriptor,
    z: Complex64,
    input: &DilationElement,
    output: &DilationElement,
) -> Result<ApplyResiduals> {
    let channel = |f: &GridFunction, h: &GridFunction| -> f64 {
        let derivs = derivative_at_nodes(f);
        let mut worst: f64 = 0.0;
        for (j, df) in derivs {
            let r = df * c(0.0, 1.0) - &f.values[j] * z - &h.values[j];
            worst = worst.max(linalg::vec_max_abs(&r));
        }
        worst
    };
    let d = output
        .u
        .decomposed()
        .ok_or_else(|| Error::DimensionMismatch("output interior lacks a decomposition".into()))?;
    let h = input.u.assemble(t);
    let interior_res = t.a_apply(d) - t.assemble(d) * z - &h;
    Ok(ApplyResiduals {
        channel_minus: channel(&output.v_minus, &input.v_minus),
        interior: linalg::vec_max_abs(&interior_res),
        channel_plus: channel(&output.v_plus, &input.v_plus),
    })
}

/// Full-rank probe of the two-frequency solution-range family: applying the
/// traces to a vanishing combination of `gamma(z+)(M(z+)+iI)^{-1}` and
/// `gamma(z-)(M(z-)-iI)^{-1}` gives a stacked `2 dimE x 2 dimE` system whose
/// rank certifies linear independence.
pub fn g_span_independence(
    t: &TripleDescriptor,
    z_plus: Complex64,
    z_minus: Complex64,
) -> Result<bool> {
    if z_plus.im <= 0.0 || z_minus.im >= 0.0 {
        return Err(Error::WrongHalfPlane {
            re: z_plus.re,
            im: z_plus.im,
            what: "g_span_independence (needs z+ upper, z- lower)",
        });
    }
    let dim = t.dim_e;
    let mp = t.m_function(z_plus)?;
    let mm = t.m_function(z_minus)?;
    let ip = linalg::inverse(&(&mp + CMatrix::from_diagonal_element(dim, dim, c(0.0, 1.0))))?;
    let im = linalg::inverse(&(&mm - CMatrix::from_diagonal_element(dim, dim, c(0.0, 1.0))))?;
    let mut stacked = CMatrix::zeros(2 * dim, 2 * dim);
    stacked.view_mut((0, 0), (dim, dim)).copy_from(&ip);
    stacked.view_mut((0, dim), (dim, dim)).copy_from(&im);
    stacked
        .view_mut((dim, 0), (dim, dim))
        .copy_from(&(&mp * &ip));
    stacked
        .view_mut((dim, dim), (dim, dim))
        .copy_from(&(&mm * &im));
    let (min_sv, max_sv) = linalg::min_max_sv(&stacked);
    Ok(min_sv > 1e-10 * max_sv)
}
