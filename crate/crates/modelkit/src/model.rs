//! The two-component model space with weight `[[I, S*], [S, I]]`: model
//! elements as structured rationals plus half-line channel transforms, the
//! maps `F+-` and `Phi`, the projection onto the model subspace `K`, and
//! the resolvent representations verified on boundary traces.
//!
//! Inner products and projections on the structured class are evaluated by
//! contour residues; `S` enters only through its values (and first
//! derivative, at coincident poles) at points of its analytic half-plane,
//! so no Hilbert transform is ever needed.

use crate::charfun::{
    char_function_matrix, char_star_matrix, gamma0_l_resolvent_apply,
    gamma0_lstar_resolvent_apply, theta_at_real, theta_hat, theta_hat_at_real, theta,
};
use crate::dilation::DilationElement;
use crate::error::{Error, Result};
use crate::extensions::{krein_resolvent, lstar_resolvent, BoundaryCondition};
use crate::hardy::StructuredHardyFunction;
use crate::linalg::{self, c, cr, inner, solve_vec, vec_norm, CMatrix, CVector};
use crate::quad::{fourier_at, fourier_on_grid, gauss_legendre, GridFunction, HalfLine};
use crate::triple::{DecomposedVector, TripleDescriptor};
use num_complex::Complex64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// One slot of a model element: rational part plus an optional channel
/// transform. The first (`gtilde`) slot may only carry transforms of
/// positive half-line functions, the second (`g`) slot negative ones; this
/// keeps every weighted cross integral contour-closable.
#[derive(Debug, Clone)]
pub struct ModelFunction {
    pub dim_e: usize,
    pub rational: StructuredHardyFunction,
    pub channel: Option<GridFunction>,
}

impl ModelFunction {
    pub fn zero(dim_e: usize) -> Self {
        Self {
            dim_e,
            rational: StructuredHardyFunction::zero(dim_e),
            channel: None,
        }
    }

    pub fn from_rational(rational: StructuredHardyFunction) -> Self {
        Self {
            dim_e: rational.dim_e,
            rational,
            channel: None,
        }
    }

    /// Pointwise value at real `k`.
    pub fn eval(&self, k: f64) -> CVector {
        let mut v = self.rational.eval(cr(k));
        if let Some(ch) = &self.channel {
            v += fourier_on_grid(ch, k);
        }
        v
    }

}

/// An element of the weighted two-component space.
#[derive(Debug, Clone)]
pub struct ModelElement {
    pub gtilde: ModelFunction,
    pub g: ModelFunction,
}

impl ModelElement {
    pub fn new(gtilde: ModelFunction, g: ModelFunction) -> Result<Self> {
        if gtilde.dim_e != g.dim_e {
            return Err(Error::DimensionMismatch("model element slots".into()));
        }
        if let Some(ch) = &gtilde.channel {
            if ch.grid.half != HalfLine::Plus {
                return Err(Error::GridMismatch(
                    "gtilde channel must live on the positive half-line".into(),
                ));
            }
        }
        if let Some(ch) = &g.channel {
            if ch.grid.half != HalfLine::Minus {
                return Err(Error::GridMismatch(
                    "g channel must live on the negative half-line".into(),
                ));
            }
        }
        Ok(Self { gtilde, g })
    }

    pub fn zero(dim_e: usize) -> Self {
        Self {
            gtilde: ModelFunction::zero(dim_e),
            g: ModelFunction::zero(dim_e),
        }
    }

    pub fn dim_e(&self) -> usize {
        self.gtilde.dim_e
    }

    pub fn eval(&self, k: f64) -> (CVector, CVector) {
        (self.gtilde.eval(k), self.g.eval(k))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            gtilde: ModelFunction {
                dim_e: self.gtilde.dim_e,
                rational: self.gtilde.rational.scale(s),
                channel: self.gtilde.channel.as_ref().map(|ch| ch.scale(s)),
            },
            g: ModelFunction {
                dim_e: self.g.dim_e,
                rational: self.g.rational.scale(s),
                channel: self.g.channel.as_ref().map(|ch| ch.scale(s)),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weight {
    Id,
    S,
    SStar,
}

impl Weight {
    /// Half-plane where the weight is analytic: `S` upper, `S*` lower,
    /// `None` when the identity leaves the choice free.
    fn forced_up(self) -> Option<bool> {
        match self {
            Weight::S => Some(true),
            Weight::SStar => Some(false),
            Weight::Id => None,
        }
    }
}

fn weight_value(t: &TripleDescriptor, w: Weight, z: Complex64) -> Result<Option<CMatrix>> {
    match w {
        Weight::Id => Ok(None),
        Weight::S => Ok(Some(char_function_matrix(t, z)?)),
        Weight::SStar => Ok(Some(char_star_matrix(t, z)?)),
    }
}

/// Derivative of the weight at `z` (for coincident-pole residues):
/// `S' = 2i (M+i)^{-1} M' (M+i)^{-1}`, `S*' = -2i (M-i)^{-1} M' (M-i)^{-1}`,
/// with `M'(z) = G(zbar)* G(z)`.
fn weight_derivative(t: &TripleDescriptor, w: Weight, z: Complex64) -> Result<Option<CMatrix>> {
    match w {
        Weight::Id => Ok(None),
        Weight::S | Weight::SStar => {
            let m = t.m_function(z)?;
            let g = t.solution_matrix(z)?;
            let g_adj = t.solution_matrix(z.conj())?.adjoint();
            let m_prime = g_adj * g;
            let (shift, sign) = match w {
                Weight::S => (c(0.0, 1.0), c(0.0, 2.0)),
                Weight::SStar => (c(0.0, -1.0), c(0.0, -2.0)),
                Weight::Id => unreachable!(),
            };
            let shifted = &m + CMatrix::from_diagonal_element(t.dim_e, t.dim_e, shift);
            let inv = linalg::inverse(&shifted)?;
            Ok(Some((&inv * m_prime * &inv) * sign))
        }
    }
}

/// Exact value of `integral <W(k) a(k), b(k)> dk` over the real line for
/// hybrid slot functions, by closing the contour in the half-plane where
/// every factor is analytic. Channel parts contribute trough their
/// evaluations at the rational poles; channel-channel cross terms vanish
/// identically or reduce to the half-line inner product.
fn weighted_cross_integral(
    t: &TripleDescriptor,
    w: Weight,
    a: &ModelFunction,
    b: &ModelFunction,
) -> Result<Complex64> {
    if a.rational.constant.is_some() || b.rational.constant.is_some() {
        return Err(Error::ConstantTerm);
    }
    // The integral splits over sub-pairs of parts; each sub-pair is closed
    // in a half-plane where every factor in it is analytic and every
    // channel transform is evaluated on its decaying side. A weighted
    // sub-pair has no choice; identity-weight sub-pairs pick the side that
    // suits their channel.
    let in_side = |up: bool, p: Complex64| if up { p.im > 0.0 } else { p.im < 0.0 };
    let orient = |up: bool| if up { c(0.0, TWO_PI) } else { -c(0.0, TWO_PI) };
    let mut acc = Complex64::new(0.0, 0.0);

    // rational x rational
    let up = w.forced_up().unwrap_or(true);
    for ta in &a.rational.terms {
        for tb in &b.rational.terms {
            let p = ta.pole;
            let qbar = tb.pole.conj();
            let pa = in_side(up, p);
            let pb = in_side(up, qbar);
            if !pa && !pb {
                continue;
            }
            if (p - qbar).norm() < 1e-14 * p.norm().max(1.0) {
                // double pole inside the contour: residue of
                // phi(k)/(k-p)^2 is phi'(p)
                if pa {
                    let phi_prime = match weight_derivative(t, w, p)? {
                        Some(sd) => inner(&(sd * &ta.residue), &tb.residue),
                        None => Complex64::new(0.0, 0.0),
                    };
                    acc += orient(up) * phi_prime;
                }
                continue;
            }
            if pa {
                let sv = weight_value(t, w, p)?;
                let num = match sv {
                    Some(s) => inner(&(s * &ta.residue), &tb.residue),
                    None => inner(&ta.residue, &tb.residue),
                };
                acc += orient(up) * num / (p - qbar);
            }
            if pb {
                let sv = weight_value(t, w, qbar)?;
                let num = match sv {
                    Some(s) => inner(&(s * &ta.residue), &tb.residue),
                    None => inner(&ta.residue, &tb.residue),
                };
                acc += orient(up) * num / (qbar - p);
            }
        }
    }

    // rational (a) x channel (b): conj(b(k)) continues by Schwarz
    // reflection into the half-plane opposite the channel, so close there;
    // only a's poles on that side contribute, with b evaluated in its
    // decaying half-plane at the conjugated pole.
    if let Some(ch) = &b.channel {
        let up = w
            .forced_up()
            .unwrap_or(ch.grid.half == HalfLine::Minus);
        debug_assert_eq!(up, ch.grid.half == HalfLine::Minus, "slot convention");
        for ta in &a.rational.terms {
            if !in_side(up, ta.pole) {
                continue;
            }
            let sv = weight_value(t, w, ta.pole)?;
            let weighted = match sv {
                Some(s) => s * &ta.residue,
                None => ta.residue.clone(),
            };
            acc += orient(up) * inner(&weighted, &fourier_at(ch, ta.pole.conj()));
        }
    }

    // channel (a) x rational (b): close on the channel's analytic side;
    // conj(b) has poles at conj(q)
    if let Some(ch) = &a.channel {
        let up = w.forced_up().unwrap_or(ch.grid.half == HalfLine::Plus);
        debug_assert_eq!(up, ch.grid.half == HalfLine::Plus, "slot convention");
        for tb in &b.rational.terms {
            let qbar = tb.pole.conj();
            if !in_side(up, qbar) {
                continue;
            }
            let sv = weight_value(t, w, qbar)?;
            let a_val = fourier_at(ch, qbar);
            let weighted = match sv {
                Some(s) => s * a_val,
                None => a_val,
            };
            acc += orient(up) * inner(&weighted, &tb.residue);
        }
    }

    // channel x channel: same side reduces by Parseval to the half-line
    // inner product; opposite sides are Hardy-orthogonal (the integrand is
    // analytic in a full half-plane with 1/k^2 decay)
    if let (Some(ca), Some(cb)) = (&a.channel, &b.channel) {
        if ca.grid.half == cb.grid.half {
            match w {
                Weight::Id => acc += crate::quad::quad_inner(ca, cb)?,
                Weight::S | Weight::SStar => {
                    // the slot convention pairs weighted terms with opposite
                    // channel sides only
                    return Err(Error::GridMismatch(
                        "weighted same-side channel pairing is not representable".into(),
                    ));
                }
            }
        }
    }

    Ok(acc)
}

/// Exact model inner product
/// `integral <[[I, S*],[S, I]] (gt1, g1), (gt2, g2)> dk`, conjugate-linear
/// in `e2`.
pub fn model_inner(t: &TripleDescriptor, e1: &ModelElement, e2: &ModelElement) -> Result<Complex64> {
    if e1.dim_e() != e2.dim_e() || e1.dim_e() != t.dim_e {
        return Err(Error::DimensionMismatch("model_inner".into()));
    }
    Ok(weighted_cross_integral(t, Weight::Id, &e1.gtilde, &e2.gtilde)?
        + weighted_cross_integral(t, Weight::SStar, &e1.g, &e2.gtilde)?
        + weighted_cross_integral(t, Weight::S, &e1.gtilde, &e2.g)?
        + weighted_cross_integral(t, Weight::Id, &e1.g, &e2.g)?)
}

pub fn model_norm(t: &TripleDescriptor, e: &ModelElement) -> Result<f64> {
    Ok(model_inner(t, e, e)?.re.max(0.0).sqrt())
}

/// Direct quadrature of the weighted inner product on a symmetric
/// composite Gauss-Legendre grid over `[-k_max, k_max]`; errors out if a
/// node collides with the exceptional set. Slowly convergent (tails decay
/// like `1/k^2`) but implementation-independent of the residue path.
pub fn model_inner_sampled(
    t: &TripleDescriptor,
    e1: &ModelElement,
    e2: &ModelElement,
    k_max: f64,
    panels: usize,
) -> Result<Complex64> {
    let (gx, gw) = gauss_legendre(8);
    let width = 2.0 * k_max / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let a = -k_max + p as f64 * width;
        let mid = a + 0.5 * width;
        for (&x, &wq) in gx.iter().zip(gw.iter()) {
            let k = mid + 0.5 * width * x;
            if t
                .eigenvalues_a0()
                .iter()
                .any(|&d| (k - d).abs() <= 1e-4 * d.abs().max(1.0))
            {
                return Err(Error::PoleOnRealAxis { re: k });
            }
            let s = char_function_matrix(t, cr(k))?;
            let (a1, b1) = e1.eval(k);
            let (a2, b2) = e2.eval(k);
            let w_top = &a1 + s.adjoint() * &b1;
            let w_bot = &s * &a1 + &b1;
            let val = inner(&w_top, &a2) + inner(&w_bot, &b2);
            acc += val * cr(wq * 0.5 * width);
        }
    }
    Ok(acc)
}

/// Smallest eigenvalue of the model weight `[[I, S*(k)],[S(k), I]]` over
/// the sampled real frequencies.
pub fn weight_positivity(t: &TripleDescriptor, k_samples: &[f64]) -> Result<f64> {
    let mut min_eig = f64::INFINITY;
    for &k in k_samples {
        let s = char_function_matrix(t, cr(k))?;
        let dim = t.dim_e;
        let mut w = CMatrix::zeros(2 * dim, 2 * dim);
        w.view_mut((0, 0), (dim, dim)).copy_from(&linalg::identity(dim));
        w.view_mut((dim, dim), (dim, dim))
            .copy_from(&linalg::identity(dim));
        w.view_mut((0, dim), (dim, dim)).copy_from(&s.adjoint());
        w.view_mut((dim, 0), (dim, dim)).copy_from(&s);
        let eigs = linalg::hermitian_eigenvalues(&w)?;
        min_eig = min_eig.min(eigs[0]);
    }
    Ok(min_eig)
}

/// `F+` of a dilation element at real `k`:
/// `-(1/sqrt(pi)) trace0 (L - k)^{-1} v + S*(k) vhat_-(k) + vhat_+(k)`.
pub fn f_plus(t: &TripleDescriptor, elem: &DilationElement, k: f64) -> Result<CVector> {
    let v = elem.u.assemble(t);
    let mut out = gamma0_l_resolvent_apply(t, cr(k), &v)? * cr(-1.0 / std::f64::consts::PI.sqrt());
    out += char_star_matrix(t, cr(k))? * fourier_on_grid(&elem.v_minus, k);
    out += fourier_on_grid(&elem.v_plus, k);
    Ok(out)
}

/// `F-` of a dilation element at real `k`:
/// `-(1/sqrt(pi)) trace0 (L* - k)^{-1} v + vhat_-(k) + S(k) vhat_+(k)`.
pub fn f_minus(t: &TripleDescriptor, elem: &DilationElement, k: f64) -> Result<CVector> {
    let v = elem.u.assemble(t);
    let mut out =
        gamma0_lstar_resolvent_apply(t, cr(k), &v)? * cr(-1.0 / std::f64::consts::PI.sqrt());
    out += fourier_on_grid(&elem.v_minus, k);
    out += char_function_matrix(t, cr(k))? * fourier_on_grid(&elem.v_plus, k);
    Ok(out)
}

/// Analytic continuation of `F+ (0, h, 0)` into the lower half-plane.
pub fn f_plus_interior_at(t: &TripleDescriptor, h: &CVector, z: Complex64) -> Result<CVector> {
    Ok(gamma0_l_resolvent_apply(t, z, h)? * cr(-1.0 / std::f64::consts::PI.sqrt()))
}

/// Analytic continuation of `F- (0, h, 0)` into the upper half-plane.
pub fn f_minus_interior_at(t: &TripleDescriptor, h: &CVector, z: Complex64) -> Result<CVector> {
    Ok(gamma0_lstar_resolvent_apply(t, z, h)? * cr(-1.0 / std::f64::consts::PI.sqrt()))
}

/// A frequency/vector pair generating one summand
/// `sqrt(2) gamma(zeta) (M(zeta) +- iI)^{-1} w` of the sampled
/// solution-range family (`+` for `Im zeta > 0`).
#[derive(Debug, Clone)]
pub struct GSpanTerm {
    pub zeta: Complex64,
    pub w: CVector,
}

/// The two-frequency parameter block of the model map.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub z_plus: Complex64,
    pub z_minus: Complex64,
    pub w_plus: CVector,
    pub w_minus: CVector,
}

impl ModelParams {
    pub fn new(
        z_plus: Complex64,
        z_minus: Complex64,
        w_plus: CVector,
        w_minus: CVector,
    ) -> Result<Self> {
        if z_plus.im <= 0.0 || z_minus.im >= 0.0 {
            return Err(Error::WrongHalfPlane {
                re: z_plus.re,
                im: z_plus.im,
                what: "ModelParams (needs Im z+ > 0 > Im z-)",
            });
        }
        Ok(Self {
            z_plus,
            z_minus,
            w_plus,
            w_minus,
        })
    }

    pub fn terms(&self) -> Vec<GSpanTerm> {
        vec![
            GSpanTerm {
                zeta: self.z_plus,
                w: self.w_plus.clone(),
            },
            GSpanTerm {
                zeta: self.z_minus,
                w: self.w_minus.clone(),
            },
        ]
    }
}

/// The interior vector generated by a list of span terms, as a
/// decomposition.
pub fn g_span_vector(t: &TripleDescriptor, terms: &[GSpanTerm]) -> Result<DecomposedVector> {
    let mut acc = DecomposedVector::zero(t.dim_h, t.dim_e);
    let sqrt2 = cr(std::f64::consts::SQRT_2);
    for term in terms {
        let m = t.m_function(term.zeta)?;
        let shift = if term.zeta.im > 0.0 {
            c(0.0, 1.0)
        } else {
            c(0.0, -1.0)
        };
        let shifted = &m + CMatrix::from_diagonal_element(t.dim_e, t.dim_e, shift);
        let e = solve_vec(&shifted, &term.w)? * sqrt2;
        acc = acc.add(&t.gamma(term.zeta, &e)?);
    }
    Ok(acc)
}

/// Solve for the coefficient vectors that express `u` in the span of the
/// given frequencies; fails with [`Error::NotInSpan`] when the residual
/// exceeds `1e-8 ||u||`.
pub fn decompose_in_span(
    t: &TripleDescriptor,
    zetas: &[Complex64],
    u: &CVector,
) -> Result<Vec<GSpanTerm>> {
    let cols = zetas.len() * t.dim_e;
    let mut stacked = CMatrix::zeros(t.dim_h, cols);
    let sqrt2 = cr(std::f64::consts::SQRT_2);
    for (j, &zeta) in zetas.iter().enumerate() {
        let m = t.m_function(zeta)?;
        let shift = if zeta.im > 0.0 { c(0.0, 1.0) } else { c(0.0, -1.0) };
        let shifted = &m + CMatrix::from_diagonal_element(t.dim_e, t.dim_e, shift);
        let block = (t.solution_matrix(zeta)? * linalg::inverse(&shifted)?) * sqrt2;
        for col in 0..t.dim_e {
            stacked.set_column(j * t.dim_e + col, &block.column(col));
        }
    }
    let svd = nalgebra::linalg::SVD::new(stacked.clone(), true, true);
    let sol = svd
        .solve(&CMatrix::from_column_slice(u.len(), 1, u.as_slice()), 1e-13)
        .map_err(|_| Error::EigenFailed)?;
    let w_all = CVector::from_column_slice(sol.as_slice());
    let residual = vec_norm(&(&stacked * &w_all - u)) / vec_norm(u).max(1e-300);
    if residual > 1e-8 {
        return Err(Error::NotInSpan { residual });
    }
    Ok(zetas
        .iter()
        .enumerate()
        .map(|(j, &zeta)| GSpanTerm {
            zeta,
            w: CVector::from_fn(t.dim_e, |i, _| w_all[j * t.dim_e + i]),
        })
        .collect())
}

/// The model map on channel data plus a span-generated interior vector:
/// Cauchy-kernel corrections at the span frequencies on top of the channel
/// transforms.
pub fn phi_map(
    t: &TripleDescriptor,
    terms: &[GSpanTerm],
    v_minus: Option<&GridFunction>,
    v_plus: Option<&GridFunction>,
) -> Result<ModelElement> {
    let dim = t.dim_e;
    let amp = c(0.0, 1.0) / cr(TWO_PI.sqrt()); // i / sqrt(2 pi)
    let mut gtilde = StructuredHardyFunction::zero(dim);
    let mut g = StructuredHardyFunction::zero(dim);
    // residue signs are pinned by the weight identity
    // [[I, S*], [S, I]] Phi = (F+, F-), checked numerically in the tests
    for term in terms {
        if term.zeta.im > 0.0 {
            let s_val = char_function_matrix(t, term.zeta)?;
            gtilde.push_term(term.zeta, &term.w * -amp)?;
            g.push_term(term.zeta, (s_val * &term.w) * amp)?;
        } else {
            let s_star = char_star_matrix(t, term.zeta)?;
            gtilde.push_term(term.zeta, (s_star * &term.w) * -amp)?;
            g.push_term(term.zeta, &term.w * amp)?;
        }
    }
    ModelElement::new(
        ModelFunction {
            dim_e: dim,
            rational: gtilde,
            channel: v_plus.cloned(),
        },
        ModelFunction {
            dim_e: dim,
            rational: g,
            channel: v_minus.cloned(),
        },
    )
}

/// Residual of the weight identity `W(k) Phi v = (F+ v, F- v)` at the
/// sampled frequencies, relative to the element scale.
pub fn phi_weight_identity_defect(
    t: &TripleDescriptor,
    terms: &[GSpanTerm],
    v_minus: &GridFunction,
    v_plus: &GridFunction,
    k_samples: &[f64],
) -> Result<f64> {
    let e = phi_map(t, terms, Some(v_minus), Some(v_plus))?;
    let d = g_span_vector(t, terms)?;
    let elem = DilationElement::new(
        v_minus.clone(),
        crate::dilation::InteriorPart::Decomposed(d),
        v_plus.clone(),
    )?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1e-30;
    for &k in k_samples {
        let s = char_function_matrix(t, cr(k))?;
        let (gt, g) = e.eval(k);
        let top = &gt + s.adjoint() * &g;
        let bot = &s * &gt + &g;
        let fp = f_plus(t, &elem, k)?;
        let fm = f_minus(t, &elem, k)?;
        worst = worst
            .max(linalg::vec_max_abs(&(&top - &fp)))
            .max(linalg::vec_max_abs(&(&bot - &fm)));
        scale = scale.max(vec_norm(&fp)).max(vec_norm(&fm));
    }
    Ok(worst / scale)
}

/// Orthogonal projection onto the model subspace `K` by the
/// Cauchy-evaluation rule; exact residue algebra on the structured class,
/// with channel parts projecting away identically.
pub fn pk_project(t: &TripleDescriptor, e: &ModelElement) -> Result<ModelElement> {
    let dim = e.dim_e();
    // collect residues per pole for both slots
    #[derive(Clone)]
    struct PoleData {
        pole: Complex64,
        a: CVector, // gtilde residue
        b: CVector, // g residue
    }
    let mut poles: Vec<PoleData> = Vec::new();
    let find = |p: Complex64, poles: &mut Vec<PoleData>| -> usize {
        if let Some(i) = poles.iter().position(|pd| (pd.pole - p).norm() == 0.0) {
            i
        } else {
            poles.push(PoleData {
                pole: p,
                a: CVector::zeros(dim),
                b: CVector::zeros(dim),
            });
            poles.len() - 1
        }
    };
    for term in &e.gtilde.rational.terms {
        let i = find(term.pole, &mut poles);
        poles[i].a += &term.residue;
    }
    for term in &e.g.rational.terms {
        let i = find(term.pole, &mut poles);
        poles[i].b += &term.residue;
    }

    let mut gtilde = StructuredHardyFunction::zero(dim);
    let mut g = StructuredHardyFunction::zero(dim);
    for pd in &poles {
        if pd.pole.im < 0.0 {
            // P+(gtilde + S* g) keeps [a + S*(p) b]/(k - p); subtract from
            // gtilde
            let s_star = char_star_matrix(t, pd.pole)?;
            let kept = &pd.a + s_star * &pd.b;
            let new_a = &pd.a - kept;
            if linalg::vec_max_abs(&new_a) > 0.0 {
                gtilde.push_term(pd.pole, new_a)?;
            }
            if linalg::vec_max_abs(&pd.b) > 0.0 {
                g.push_term(pd.pole, pd.b.clone())?;
            }
        } else {
            // P-(S gtilde + g) keeps [S(q) a + b]/(k - q); subtract from g
            let s = char_function_matrix(t, pd.pole)?;
            let kept = s * &pd.a + &pd.b;
            let new_b = &pd.b - kept;
            if linalg::vec_max_abs(&pd.a) > 0.0 {
                gtilde.push_term(pd.pole, pd.a.clone())?;
            }
            if linalg::vec_max_abs(&new_b) > 0.0 {
                g.push_term(pd.pole, new_b)?;
            }
        }
    }
    ModelElement::new(ModelFunction::from_rational(gtilde), ModelFunction::from_rational(g))
}

/// Membership defect in `K`: the Cauchy transforms of `gtilde + S* g` into
/// the upper half-plane and of `S gtilde + g` into the lower one, sampled
/// at the probe points (both vanish exactly on `K`).
pub fn in_k_defect(
    t: &TripleDescriptor,
    e: &ModelElement,
    probes_upper: &[Complex64],
    probes_lower: &[Complex64],
) -> Result<f64> {
    let dim = e.dim_e();
    let mut worst: f64 = 0.0;
    for &z in probes_upper {
        if z.im <= 0.0 {
            return Err(Error::WrongHalfPlane {
                re: z.re,
                im: z.im,
                what: "in_k_defect upper probe",
            });
        }
        // P+(gtilde + S* g) continued to z: lower-pole residues plus the
        // plus-channel transform
        let mut val = CVector::zeros(dim);
        for term in &e.gtilde.rational.terms {
            if term.pole.im < 0.0 {
                val += &term.residue * (cr(1.0) / (z - term.pole));
            }
        }
        for term in &e.g.rational.terms {
            if term.pole.im < 0.0 {
                let s_star = char_star_matrix(t, term.pole)?;
                val += (s_star * &term.residue) * (cr(1.0) / (z - term.pole));
            }
        }
        if let Some(ch) = &e.gtilde.channel {
            val += fourier_at(ch, z);
        }
        worst = worst.max(linalg::vec_max_abs(&val));
    }
    for &z in probes_lower {
        if z.im >= 0.0 {
            return Err(Error::WrongHalfPlane {
                re: z.re,
                im: z.im,
                what: "in_k_defect lower probe",
            });
        }
        let mut val = CVector::zeros(dim);
        for term in &e.g.rational.terms {
            if term.pole.im > 0.0 {
                val += &term.residue * (cr(1.0) / (z - term.pole));
            }
        }
        for term in &e.gtilde.rational.terms {
            if term.pole.im > 0.0 {
                let s = char_function_matrix(t, term.pole)?;
                val += (s * &term.residue) * (cr(1.0) / (z - term.pole));
            }
        }
        if let Some(ch) = &e.g.channel {
            val += fourier_at(ch, z);
        }
        worst = worst.max(linalg::vec_max_abs(&val));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventSide {
    Plus,
    Minus,
}

/// Defect of the boundary-trace resolvent representation: compares
/// `F± applied to (A_B - lambda)^{-1} h` against
/// `(k - lambda)^{-1} [F± h (k) - Theta(k) Theta(lambda)^{-1} F± h (lambda)]`
/// at the sampled real frequencies (`Theta` hatted or not according to the
/// side of `k`-factor and the half-plane of `lambda`). All terms are dense
/// algebra; the pass tolerance is `1e-8` relative.
pub fn model_resolvent_defect(
    t: &TripleDescriptor,
    bc: &BoundaryCondition,
    lambda: Complex64,
    h: &CVector,
    k_samples: &[f64],
    side: ResolventSide,
) -> Result<f64> {
    if lambda.im == 0.0 {
        return Err(Error::WrongHalfPlane {
            re: lambda.re,
            im: lambda.im,
            what: "model_resolvent_defect (lambda off the real axis)",
        });
    }
    let u = t.assemble(&krein_resolvent(t, bc, lambda, h)?);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    // Theta(lambda)^{-1} F(lambda) with the factor matching lambda's
    // half-plane
    let lambda_part: CVector = if lambda.im < 0.0 {
        let th = theta(t, bc, lambda)?;
        let f_l = gamma0_l_resolvent_apply(t, lambda, h)? * cr(-1.0 / sqrt_pi);
        &th.theta_inv * f_l
    } else {
        let th = theta_hat(t, bc, lambda)?;
        let f_l = gamma0_lstar_resolvent_apply(t, lambda, h)? * cr(-1.0 / sqrt_pi);
        &th.theta_inv * f_l
    };
    let scale = vec_norm(h).max(1e-300);
    let mut worst: f64 = 0.0;
    for &k in k_samples {
        let (lhs, fk, theta_k) = match side {
            ResolventSide::Plus => (
                gamma0_l_resolvent_apply(t, cr(k), &u)? * cr(-1.0 / sqrt_pi),
                gamma0_l_resolvent_apply(t, cr(k), h)? * cr(-1.0 / sqrt_pi),
                theta_at_real(t, bc, k)?,
            ),
            ResolventSide::Minus => (
                gamma0_lstar_resolvent_apply(t, cr(k), &u)? * cr(-1.0 / sqrt_pi),
                gamma0_lstar_resolvent_apply(t, cr(k), h)? * cr(-1.0 / sqrt_pi),
                theta_hat_at_real(t, bc, k)?,
            ),
        };
        let rhs = (fk - theta_k * &lambda_part) * (cr(1.0) / (cr(k) - lambda));
        worst = worst.max(linalg::vec_max_abs(&(lhs - rhs)));
    }
    Ok(worst / scale)
}

/// Toeplitz representation check for the adjoint dissipative operator:
/// with `f(k) = F- (0, h, 0)(k)` and `f(z)` its continuation,
/// `F- (0, (L* - z)^{-1} h, 0)(k) = (f(k) - f(z))/(k - z)` exactly.
pub fn toeplitz_check(
    t: &TripleDescriptor,
    z: Complex64,
    h: &CVector,
    k_samples: &[f64],
) -> Result<f64> {
    if z.im <= 0.0 {
        return Err(Error::WrongHalfPlane {
            re: z.re,
            im: z.im,
            what: "toeplitz_check (needs Im z > 0)",
        });
    }
    let u = t.assemble(&lstar_resolvent(t, z, h)?);
    let f_z = f_minus_interior_at(t, h, z)?;
    let scale = vec_norm(h).max(1e-300);
    let mut worst: f64 = 0.0;
    for &k in k_samples {
        let lhs = f_minus_interior_at(t, &u, cr(k))?;
        let f_k = f_minus_interior_at(t, h, cr(k))?;
        let rhs = (f_k - &f_z) * (cr(1.0) / (cr(k) - z));
        worst = worst.max(linalg::vec_max_abs(&(lhs - rhs)));
    }
    Ok(worst / scale)
}
