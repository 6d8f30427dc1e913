//! Rational E-valued functions with off-axis poles: the structured class on
//! which the Riesz projections onto the Hardy spaces have exact closed form.
//!
//! Orientation (fixed by the Fourier convention `vhat(k) = (2pi)^{-1/2}
//! integral v(x) e^{ikx} dx`): transforms of functions on the positive
//! half-line are analytic in the upper half-plane, so a Cauchy kernel
//! `c/(k - p)` lies in `H^2_+` iff `Im p < 0`.

use crate::error::{Error, Result};
use crate::linalg::CVector;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardyHalf {
    /// `H^2_+`: analytic in the upper half-plane (poles below the axis).
    Upper,
    /// `H^2_-`: analytic in the lower half-plane (poles above the axis).
    Lower,
}

#[derive(Debug, Clone)]
pub struct HardyTerm {
    pub pole: Complex64,
    pub residue: CVector,
}

/// `f(k) = sum_j c_j / (k - p_j) + const`, all `Im p_j != 0`.
#[derive(Debug, Clone)]
pub struct StructuredHardyFunction {
    pub dim_e: usize,
    pub terms: Vec<HardyTerm>,
    pub constant: Option<CVector>,
}

impl StructuredHardyFunction {
    pub fn zero(dim_e: usize) -> Self {
        Self {
            dim_e,
            terms: Vec::new(),
            constant: None,
        }
    }

    pub fn push_term(&mut self, pole: Complex64, residue: CVector) -> Result<()> {
        if pole.im == 0.0 {
            return Err(Error::PoleOnRealAxis { re: pole.re });
        }
        if residue.len() != self.dim_e {
            return Err(Error::DimensionMismatch(format!(
                "residue has dim {}, expected {}",
                residue.len(),
                self.dim_e
            )));
        }
        self.terms.push(HardyTerm { pole, residue });
        Ok(())
    }

    pub fn with_term(dim_e: usize, pole: Complex64, residue: CVector) -> Result<Self> {
        let mut f = Self::zero(dim_e);
        f.push_term(pole, residue)?;
        Ok(f)
    }

    pub fn set_constant(&mut self, c: CVector) -> Result<()> {
        if c.len() != self.dim_e {
            return Err(Error::DimensionMismatch(
                "constant term has wrong E-dimension".into(),
            ));
        }
        self.constant = Some(c);
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_none()
    }

    pub fn eval(&self, k: Complex64) -> CVector {
        let mut acc = match &self.constant {
            Some(c) => c.clone(),
            None => CVector::zeros(self.dim_e),
        };
        for t in &self.terms {
            acc += &t.residue * (Complex64::new(1.0, 0.0) / (k - t.pole));
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim_e != other.dim_e {
            return Err(Error::DimensionMismatch("hardy add".into()));
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.constant = match (&self.constant, &other.constant) {
            (None, None) => None,
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => Some(a + b),
        };
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim_e: self.dim_e,
            terms: self
                .terms
                .iter()
                .map(|t| HardyTerm {
                    pole: t.pole,
                    residue: &t.residue * s,
                })
                .collect(),
            constant: self.constant.as_ref().map(|c| c * s),
        }
    }

    /// Riesz projection by residue bookkeeping: `Upper` keeps poles with
    /// `Im p < 0`, `Lower` keeps `Im p > 0`. Constant terms are only legal
    /// when the caller promises they cancel in a difference
    /// (`allow_constant`); they belong to neither Hardy class and are
    /// dropped from the projection.
    pub fn riesz_project(&self, half: HardyHalf, allow_constant: bool) -> Result<Self> {
        if self.constant.is_some() && !allow_constant {
            return Err(Error::ConstantTerm);
        }
        let keep = |p: Complex64| match half {
            HardyHalf::Upper => p.im < 0.0,
            HardyHalf::Lower => p.im > 0.0,
        };
        let mut out = Self::zero(self.dim_e);
        for t in &self.terms {
            if t.pole.im == 0.0 {
                return Err(Error::PoleOnRealAxis { re: t.pole.re });
            }
            if keep(t.pole) {
                out.terms.push(t.clone());
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr};

    fn res(v: &[f64]) -> CVector {
        CVector::from_vec(v.iter().map(|&x| cr(x)).collect())
    }

    #[test]
    fn single_pole_lower_half_is_upper_hardy() {
        let f =
            StructuredHardyFunction::with_term(1, c(1.0, -1.0), res(&[2.0])).unwrap();
        let up = f.riesz_project(HardyHalf::Upper, false).unwrap();
        let lo = f.riesz_project(HardyHalf::Lower, false).unwrap();
        assert_eq!(up.terms.len(), 1);
        assert!(lo.terms.is_empty());
    }

    #[test]
    fn single_pole_upper_half_is_lower_hardy() {
        let f =
            StructuredHardyFunction::with_term(1, c(2.0, 3.0), res(&[1.0])).unwrap();
        let up = f.riesz_project(HardyHalf::Upper, false).unwrap();
        let lo = f.riesz_project(HardyHalf::Lower, false).unwrap();
        assert!(up.terms.is_empty());
        assert_eq!(lo.terms.len(), 1);
    }

    #[test]
    fn projections_partition_exactly() {
        let mut f = StructuredHardyFunction::zero(2);
        f.push_term(c(1.0, -1.0), res(&[1.0, 0.5])).unwrap();
        f.push_term(c(1.0, 1.0), res(&[0.0, 2.0])).unwrap();
        f.push_term(c(-3.0, 0.25), res(&[1.0, 1.0])).unwrap();
        let up = f.riesz_project(HardyHalf::Upper, false).unwrap();
        let lo = f.riesz_project(HardyHalf::Lower, false).unwrap();
        let sum = up.add(&lo).unwrap();
        // evaluation at random real points agrees exactly
        for k in [-7.3, -1.0, 0.2, 0.9, 2.4, 3.3, 8.1, 11.0, -4.4, 6.6] {
            let a = f.eval(cr(k));
            let b = sum.eval(cr(k));
            assert_eq!((a - b).norm(), 0.0);
        }
        // idempotence and annihilation, term-by-term
        let upup = up.riesz_project(HardyHalf::Upper, false).unwrap();
        assert_eq!(upup.terms.len(), up.terms.len());
        let uplo = up.riesz_project(HardyHalf::Lower, false).unwrap();
        assert!(uplo.terms.is_empty());
    }

    #[test]
    fn real_pole_rejected() {
        let r = StructuredHardyFunction::with_term(1, cr(2.0), res(&[1.0]));
        assert!(matches!(r, Err(Error::PoleOnRealAxis { .. })));
    }

    #[test]
    fn constant_needs_flag() {
        let mut f = StructuredHardyFunction::zero(1);
        f.set_constant(res(&[1.0])).unwrap();
        assert!(matches!(
            f.riesz_project(HardyHalf::Upper, false),
            Err(Error::ConstantTerm)
        ));
        assert!(f.riesz_project(HardyHalf::Upper, true).is_ok());
    }
}
