use std::collections::BTreeMap;

use super::{check_dim, full_mask, inversion_parity, AlgebraError, BiGradedElement, ExteriorForm};
use crate::scalar::Scalar;

/// A letter of a Clifford word: `c(e_i)` or `ĉ(e_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    C(usize),
    Hat(usize),
}

/// A polynomial in the operators `c(e_i) = e^i∧ − ι_{e_i}` and
/// `ĉ(e_i) = e^i∧ + ι_{e_i}` on `Λ(E*)`.
///
/// Words are stored in canonical order (all `c` ascending, then all `ĉ`
/// ascending, each letter at most once), keyed by `(c mask, ĉ mask)`.
/// Products are reduced with
/// `c_i c_j + c_j c_i = −2δ_ij`, `ĉ_i ĉ_j + ĉ_j ĉ_i = 2δ_ij`,
/// `c_i ĉ_j + ĉ_j c_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordElement<T: Scalar> {
    dim: usize,
    terms: BTreeMap<(u32, u32), T>,
}

fn word_product(a: (u32, u32), b: (u32, u32)) -> ((u32, u32), bool) {
    let (c1, h1) = a;
    let (c2, h2) = b;
    let mut negative = (h1.count_ones() * c2.count_ones()) % 2 == 1;
    negative ^= inversion_parity(c1, c2);
    negative ^= inversion_parity(h1, h2);
    // c_i c_i = -1, ĉ_i ĉ_i = +1
    negative ^= (c1 & c2).count_ones() % 2 == 1;
    ((c1 ^ c2, h1 ^ h2), negative)
}

impl<T: Scalar> CliffordElement<T> {
    pub fn zero(dim: usize) -> Result<Self, AlgebraError> {
        check_dim(dim)?;
        Ok(Self { dim, terms: BTreeMap::new() })
    }

    pub fn identity(dim: usize) -> Result<Self, AlgebraError> {
        Self::scalar(dim, T::one())
    }

    pub fn scalar(dim: usize, value: T) -> Result<Self, AlgebraError> {
        let mut out = Self::zero(dim)?;
        out.add_term((0, 0), value);
        Ok(out)
    }

    /// The product of the given letters, in the given order.
    pub fn word(dim: usize, letters: &[Letter]) -> Result<Self, AlgebraError> {
        let mut out = Self::identity(dim)?;
        for l in letters {
            let (i, key) = match *l {
                Letter::C(i) => (i, (1u32 << i.min(31), 0)),
                Letter::Hat(i) => (i, (0, 1u32 << i.min(31))),
            };
            if i >= dim {
                return Err(AlgebraError::IndexOutOfRange { index: i, dim });
            }
            let letter = Self { dim, terms: BTreeMap::from([(key, T::one())]) };
            out = out.product(&letter)?;
        }
        Ok(out)
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = ((u32, u32), T)>) -> Result<Self, AlgebraError> {
        let mut out = Self::zero(dim)?;
        let mask = full_mask(dim);
        for (key, c) in terms {
            if (key.0 | key.1) & !mask != 0 {
                return Err(AlgebraError::IndexOutOfRange { index: 31 - (key.0 | key.1).leading_zeros() as usize, dim });
            }
            out.add_term(key, c);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), &T)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, c_mask: u32, hat_mask: u32) -> T {
        self.terms.get(&(c_mask, hat_mask)).cloned().unwrap_or_else(T::zero)
    }

    pub(crate) fn add_term(&mut self, key: (u32, u32), coeff: T) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert_with(T::zero);
        *entry = entry.clone() + coeff;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    fn check_same(&self, other_dim: usize) -> Result<(), AlgebraError> {
        if self.dim != other_dim {
            Err(AlgebraError::DimensionMismatch { left: self.dim, right: other_dim })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same(other.dim)?;
        let mut out = self.clone();
        for (k, c) in other.terms() {
            out.add_term(k, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.add(&other.scale(&-T::one()))
    }

    pub fn scale(&self, factor: &T) -> Self {
        let mut out = Self { dim: self.dim, terms: BTreeMap::new() };
        for (k, c) in self.terms() {
            out.add_term(k, c.clone() * factor.clone());
        }
        out
    }

    pub fn product(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same(other.dim)?;
        let mut out = Self { dim: self.dim, terms: BTreeMap::new() };
        for (ka, ca) in self.terms() {
            for (kb, cb) in other.terms() {
                let (key, neg) = word_product(ka, kb);
                let c = ca.clone() * cb.clone();
                out.add_term(key, if neg { -c } else { c });
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.product(other)?.sub(&other.product(self)?)
    }

    /// Applies the operator to a form; letters act right to left.
    pub fn apply(&self, form: &ExteriorForm<T>) -> Result<ExteriorForm<T>, AlgebraError> {
        self.check_same(form.dim())?;
        let mut out = ExteriorForm::zero(self.dim)?;
        for ((c_mask, h_mask), coeff) in self.terms() {
            let mut v = form.scale(coeff);
            for i in (0..self.dim).rev().filter(|i| h_mask & (1 << i) != 0) {
                v = v.ext(i).add(&v.int(i))?;
            }
            for i in (0..self.dim).rev().filter(|i| c_mask & (1 << i) != 0) {
                v = v.ext(i).add(&v.int(i).scale(&-T::one()))?;
            }
            out = out.add(&v)?;
        }
        Ok(out)
    }

    /// `Tr_s` over `Λ(E*)`. Only the full word contributes:
    /// `Tr_s[c_1 ĉ_1 ⋯ c_n ĉ_n] = (−2)^n`, and the canonical word
    /// `c_1⋯c_n ĉ_1⋯ĉ_n` differs from it by `(−1)^{n(n−1)/2}`.
    pub fn supertrace(&self) -> T {
        let n = self.dim;
        let full = full_mask(n);
        let coeff = self.coefficient(full, full);
        let magnitude = T::from_u64(1u64 << n).expect("small integer");
        let negative = (n % 2 == 1) ^ ((n * (n - 1) / 2) % 2 == 1);
        let value = coeff * magnitude;
        if negative {
            -value
        } else {
            value
        }
    }

    /// `Tr_s` computed from the action on the monomial basis.
    pub fn supertrace_by_action(&self) -> Result<T, AlgebraError> {
        let mut total = T::zero();
        for mask in 0..=full_mask(self.dim) {
            let image = self.apply(&ExteriorForm::basis(self.dim, mask)?)?;
            let diag = image.coefficient(mask);
            if mask.count_ones() % 2 == 1 {
                total = total - diag;
            } else {
                total = total + diag;
            }
        }
        Ok(total)
    }

    /// Associated-graded symbol `c_i ↦ e^i`, `ĉ_i ↦ ê^i`, applied word by word.
    pub fn symbol(&self) -> BiGradedElement<T> {
        BiGradedElement::from_terms(self.dim, self.terms().map(|(k, c)| (k, c.clone()))).expect("valid masks")
    }

    /// Symbol restricted to the top filtration degree present.
    pub fn symbol_top(&self) -> BiGradedElement<T> {
        let top = self.terms.keys().map(|(c, h)| c.count_ones() + h.count_ones()).max().unwrap_or(0);
        let kept = self.terms().filter(|((c, h), _)| c.count_ones() + h.count_ones() == top);
        BiGradedElement::from_terms(self.dim, kept.map(|(k, c)| (k, c.clone()))).expect("valid masks")
    }

    /// Inverse of [`symbol`](Self::symbol): `e^i ↦ c(e_i)`, `ê^i ↦ ĉ(e_i)`.
    pub fn quantize(element: &BiGradedElement<T>) -> Self {
        let mut out = Self { dim: element.dim(), terms: BTreeMap::new() };
        for (k, c) in element.terms() {
            out.add_term(k, c.clone());
        }
        out
    }

    /// `ι_{e_i} e^i∧ = ½(1 − c_i ĉ_i)`.
    pub fn tangential_projection(dim: usize, index: usize) -> Result<Self, AlgebraError> {
        let half = T::from_ratio(1, 2);
        let cc = Self::word(dim, &[Letter::C(index), Letter::Hat(index)])?;
        Ok(Self::identity(dim)?.sub(&cc)?.scale(&half))
    }

    /// `e^i∧ ι_{e_i} = ½(1 + c_i ĉ_i)`.
    pub fn normal_projection(dim: usize, index: usize) -> Result<Self, AlgebraError> {
        let half = T::from_ratio(1, 2);
        let cc = Self::word(dim, &[Letter::C(index), Letter::Hat(index)])?;
        Ok(Self::identity(dim)?.add(&cc)?.scale(&half))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, Rational};
    use Letter::{Hat, C};

    fn w(n: usize, l: &[Letter]) -> CliffordElement<Rational> {
        CliffordElement::word(n, l).unwrap()
    }

    #[test]
    fn c1_on_one_is_e1() {
        let one = ExteriorForm::<Rational>::one(2).unwrap();
        assert_eq!(w(2, &[C(1)]).apply(&one).unwrap(), ExteriorForm::basis(2, 0b10).unwrap());
    }

    #[test]
    fn squares_of_generators() {
        let omega = ExteriorForm::from_terms(3, [(0b011, rational(2, 3)), (0b100, rational(-1, 1)), (0, rational(5, 1))]).unwrap();
        let cc = w(3, &[C(1), C(1)]).apply(&omega).unwrap();
        assert_eq!(cc, omega.scale(&rational(-1, 1)));
        let hh = w(3, &[Hat(1), Hat(1)]).apply(&omega).unwrap();
        assert_eq!(hh, omega);
    }

    #[test]
    fn c_and_chat_anticommute() {
        let lhs = w(3, &[C(1), Hat(2)]).add(&w(3, &[Hat(2), C(1)])).unwrap();
        assert!(lhs.is_zero());
        let same = w(3, &[C(1), Hat(1)]).add(&w(3, &[Hat(1), C(1)])).unwrap();
        assert!(same.is_zero());
    }

    #[test]
    fn identity_is_neutral() {
        let x = w(3, &[C(0), Hat(2)]).add(&w(3, &[C(1)]).scale(&rational(3, 2))).unwrap();
        let id = CliffordElement::identity(3).unwrap();
        assert_eq!(id.product(&x).unwrap(), x);
        assert_eq!(x.product(&id).unwrap(), x);
    }

    #[test]
    fn projections_match_ext_int() {
        let n = 3;
        let p = CliffordElement::<Rational>::tangential_projection(n, 0).unwrap();
        let q = CliffordElement::<Rational>::normal_projection(n, 0).unwrap();
        for mask in 0..8u32 {
            let b = ExteriorForm::basis(n, mask).unwrap();
            assert_eq!(p.apply(&b).unwrap(), b.ext(0).int(0));
            assert_eq!(q.apply(&b).unwrap(), b.int(0).ext(0));
        }
    }

    #[test]
    fn supertrace_formula_matches_action() {
        for n in 1..=4 {
            let letters: Vec<Letter> = (0..n).flat_map(|i| [C(i), Hat(i)]).collect();
            let full = w(n, &letters);
            let expected = rational((-2i64).pow(n as u32), 1);
            assert_eq!(full.supertrace(), expected);
            assert_eq!(full.supertrace_by_action().unwrap(), expected);
        }
    }

    #[test]
    fn identity_has_zero_supertrace() {
        for n in 1..=5 {
            assert_eq!(CliffordElement::<Rational>::identity(n).unwrap().supertrace(), rational(0, 1));
        }
    }
}
