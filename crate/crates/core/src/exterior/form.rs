use std::collections::BTreeMap;

use super::{check_dim, count_below, full_mask, AlgebraError};
use crate::scalar::Scalar;

/// An element of `Λ(E*)`, stored as a map from increasing index sets to
/// coefficients. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorForm<T: Scalar> {
    dim: usize,
    terms: BTreeMap<u32, T>,
}

impl<T: Scalar> ExteriorForm<T> {
    pub fn zero(dim: usize) -> Result<Self, AlgebraError> {
        check_dim(dim)?;
        Ok(Self { dim, terms: BTreeMap::new() })
    }

    pub fn one(dim: usize) -> Result<Self, AlgebraError> {
        Self::basis(dim, 0)
    }

    /// The monomial `e^{i_1} ∧ … ∧ e^{i_k}` for the indices in `mask`.
    pub fn basis(dim: usize, mask: u32) -> Result<Self, AlgebraError> {
        let mut form = Self::zero(dim)?;
        if mask & !full_mask(dim) != 0 {
            return Err(AlgebraError::IndexOutOfRange { index: 31 - mask.leading_zeros() as usize, dim });
        }
        form.terms.insert(mask, T::one());
        Ok(form)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &T)> {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mask: u32) -> T {
        self.terms.get(&mask).cloned().unwrap_or_else(T::zero)
    }

    pub(crate) fn add_term(&mut self, mask: u32, coeff: T) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(mask).or_insert_with(T::zero);
        *entry = entry.clone() + coeff;
        if entry.is_zero() {
            self.terms.remove(&mask);
        }
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (u32, T)>) -> Result<Self, AlgebraError> {
        let mut form = Self::zero(dim)?;
        for (mask, coeff) in terms {
            if mask & !full_mask(dim) != 0 {
                return Err(AlgebraError::IndexOutOfRange { index: 31 - mask.leading_zeros() as usize, dim });
            }
            form.add_term(mask, coeff);
        }
        Ok(form)
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.dim != other.dim {
            return Err(AlgebraError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, factor: &T) -> Self {
        let mut out = Self { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in self.terms() {
            out.add_term(m, c.clone() * factor.clone());
        }
        out
    }

    /// `e^i ∧ ω`.
    pub fn ext(&self, index: usize) -> Self {
        let bit = 1u32 << index;
        let mut out = Self { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in self.terms() {
            if m & bit != 0 {
                continue;
            }
            let coeff = if count_below(m, index) % 2 == 1 { -c.clone() } else { c.clone() };
            out.add_term(m | bit, coeff);
        }
        out
    }

    /// Interior product `ι_{e_i} ω`.
    pub fn int(&self, index: usize) -> Self {
        let bit = 1u32 << index;
        let mut out = Self { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in self.terms() {
            if m & bit == 0 {
                continue;
            }
            let coeff = if count_below(m, index) % 2 == 1 { -c.clone() } else { c.clone() };
            out.add_term(m & !bit, coeff);
        }
        out
    }

    /// Terms of form degree exactly `degree`.
    pub fn degree_part(&self, degree: u32) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter(|(m, _)| m.count_ones() == degree).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ExteriorForm<U> {
        let mut out = ExteriorForm { dim: self.dim, terms: BTreeMap::new() };
        for (m, c) in self.terms() {
            out.add_term(m, f(c));
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64_lossy().abs()).fold(0.0, f64::max)
    }
}

impl ExteriorForm<f64> {
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim
            && self.terms.keys().chain(other.terms.keys()).all(|m| (self.coefficient(*m) - other.coefficient(*m)).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, Rational};

    #[test]
    fn ext_then_int_recovers_basis_vector() {
        let one = ExteriorForm::<Rational>::one(3).unwrap();
        let e1 = one.ext(1);
        assert_eq!(e1, ExteriorForm::basis(3, 0b010).unwrap());
        assert_eq!(e1.int(1), one);
        assert!(e1.ext(1).is_zero());
    }

    #[test]
    fn signs_follow_index_order() {
        // e^2 ∧ e^0 = -e^0 ∧ e^2
        let f = ExteriorForm::<Rational>::one(3).unwrap().ext(0).ext(2);
        assert_eq!(f.coefficient(0b101), rational(-1, 1));
        // ι_{e_2}(e^0 ∧ e^2) = -e^0
        let g = ExteriorForm::<Rational>::basis(3, 0b101).unwrap().int(2);
        assert_eq!(g.coefficient(0b001), rational(-1, 1));
    }

    #[test]
    fn rejects_out_of_range_mask() {
        assert!(ExteriorForm::<f64>::basis(2, 0b100).is_err());
        assert!(ExteriorForm::<f64>::zero(0).is_err());
    }
}
