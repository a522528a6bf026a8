use std::collections::BTreeMap;

use super::{check_dim, count_below, full_mask, inversion_parity, AlgebraError, ExteriorForm};
use crate::scalar::Scalar;

/// A generator of `Λ(E*) ⊗ Λ̂(E*)`: either `e^i` or `ê^i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    E(usize),
    Hat(usize),
}

/// An element of the bi-graded algebra `Λ(E*) ⊗ Λ̂(E*)`.
///
/// All generators, hatted or not, anticommute with each other (graded
/// tensor product). A monomial is stored in canonical order: unhatted
/// indices ascending, then hatted indices ascending. The key is the pair
/// of bit masks `(unhatted, hatted)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGradedElement<T: Scalar> {
    dim: usize,
    terms: BTreeMap<(u32, u32), T>,
}

/// Sign and canonical key of the product of two canonical monomials, or
/// `None` when a generator repeats.
pub(crate) fn monomial_product(a: (u32, u32), b: (u32, u32)) -> Option<((u32, u32), bool)> {
    let (u1, h1) = a;
    let (u2, h2) = b;
    if u1 & u2 != 0 || h1 & h2 != 0 {
        return None;
    }
    // u1 h1 u2 h2 -> u1 u2 h1 h2 -> sorted
    let mut negative = (h1.count_ones() * u2.count_ones()) % 2 == 1;
    negative ^= inversion_parity(u1, u2);
    negative ^= inversion_parity(h1, h2);
    Some(((u1 | u2, h1 | h2), negative))
}

impl<T: Scalar> BiGradedElement<T> {
    pub fn zero(dim: usize) -> Result<Self, AlgebraError> {
        check_dim(dim)?;
        Ok(Self { dim, terms: BTreeMap::new() })
    }

    pub fn scalar(dim: usize, value: T) -> Result<Self, AlgebraError> {
        let mut out = Self::zero(dim)?;
        out.add_term((0, 0), value);
        Ok(out)
    }

    pub fn one(dim: usize) -> Result<Self, AlgebraError> {
        Self::scalar(dim, T::one())
    }

    /// `coeff · g_1 ∧ g_2 ∧ … ∧ g_k` for generators given in any order.
    pub fn monomial(dim: usize, generators: &[Generator], coeff: T) -> Result<Self, AlgebraError> {
        let mut out = Self::one(dim)?;
        for g in generators {
            let (i, key) = match *g {
                Generator::E(i) => (i, (1u32 << i.min(31), 0)),
                Generator::Hat(i) => (i, (0, 1u32 << i.min(31))),
            };
            if i >= dim {
                return Err(AlgebraError::IndexOutOfRange { index: i, dim });
            }
            let mut next = Self::zero(dim)?;
            for (k, c) in out.terms() {
                if let Some((key2, neg)) = monomial_product(k, key) {
                    next.add_term(key2, if neg { -c.clone() } else { c.clone() });
                }
            }
            out = next;
        }
        Ok(out.scale(&coeff))
    }

    /// Builds an element from canonical `(unhatted mask, hatted mask)` keys.
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

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, unhatted: u32, hatted: u32) -> T {
        self.terms.get(&(unhatted, hatted)).cloned().unwrap_or_else(T::zero)
    }

    pub fn scalar_part(&self) -> T {
        self.coefficient(0, 0)
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

    fn check_same(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.dim != other.dim {
            Err(AlgebraError::DimensionMismatch { left: self.dim, right: other.dim })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (k, c) in other.terms() {
            out.add_term(k, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-T::one())
    }

    pub fn scale(&self, factor: &T) -> Self {
        let mut out = Self { dim: self.dim, terms: BTreeMap::new() };
        for (k, c) in self.terms() {
            out.add_term(k, c.clone() * factor.clone());
        }
        out
    }

    /// Graded-commutative product.
    pub fn wedge(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same(other)?;
        let mut out = Self { dim: self.dim, terms: BTreeMap::new() };
        for (ka, ca) in self.terms() {
            for (kb, cb) in other.terms() {
                if let Some((key, neg)) = monomial_product(ka, kb) {
                    let c = ca.clone() * cb.clone();
                    out.add_term(key, if neg { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// `Σ_{k=0}^{2n} a^k / k!`; the series terminates because `a` has no
    /// degree-zero part.
    pub fn nilpotent_exp(&self) -> Result<Self, AlgebraError> {
        if !self.scalar_part().is_zero() {
            return Err(AlgebraError::ScalarPart);
        }
        let mut result = Self::one(self.dim)?;
        let mut power = Self::one(self.dim)?;
        let mut k = 1u64;
        loop {
            power = power.wedge(self)?.scale(&(T::one() / T::from_u64(k).expect("small integer")));
            if power.is_zero() {
                break;
            }
            result = result.add(&power)?;
            k += 1;
        }
        Ok(result)
    }

    /// `e^i ∧` acting on the unhatted factor (left multiplication).
    pub fn ext(&self, index: usize) -> Self {
        let bit = 1u32 << index;
        let mut out = Self { dim: self.dim, terms: BTreeMap::new() };
        for ((u, h), c) in self.terms() {
            if u & bit != 0 {
                continue;
            }
            let c = if count_below(u, index) % 2 == 1 { -c.clone() } else { c.clone() };
            out.add_term((u | bit, h), c);
        }
        out
    }

    /// `ι_{e_i}` acting on the unhatted factor as a graded derivation.
    pub fn int(&self, index: usize) -> Self {
        let bit = 1u32 << index;
        let mut out = Self { dim: self.dim, terms: BTreeMap::new() };
        for ((u, h), c) in self.terms() {
            if u & bit == 0 {
                continue;
            }
            let c = if count_below(u, index) % 2 == 1 { -c.clone() } else { c.clone() };
            out.add_term((u & !bit, h), c);
        }
        out
    }

    /// The tangential projection `ι_{e_i} e^i ∧`: keeps the terms whose
    /// unhatted part does not contain `e^i`.
    pub fn tangential_part(&self, index: usize) -> Self {
        self.filter(|(u, _)| u & (1 << index) == 0)
    }

    /// The normal projection `e^i ∧ ι_{e_i}`.
    pub fn normal_part(&self, index: usize) -> Self {
        self.filter(|(u, _)| u & (1 << index) != 0)
    }

    pub fn filter(&self, keep: impl Fn((u32, u32)) -> bool) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter(|(k, _)| keep(**k)).map(|(k, c)| (*k, c.clone())).collect(),
        }
    }

    /// Terms of bidegree `(p, q)` only.
    pub fn bidegree_part(&self, p: u32, q: u32) -> Self {
        self.filter(|(u, h)| u.count_ones() == p && h.count_ones() == q)
    }

    pub fn is_bidegree(&self, p: u32, q: u32) -> bool {
        self.terms.keys().all(|(u, h)| u.count_ones() == p && h.count_ones() == q)
    }

    /// Coefficients of the full hatted volume `ê^0 ∧ … ∧ ê^{n-1}`, as a form.
    pub fn top_hatted(&self) -> ExteriorForm<T> {
        let top = full_mask(self.dim);
        ExteriorForm::from_terms(
            self.dim,
            self.terms.iter().filter(|((_, h), _)| *h == top).map(|((u, _), c)| (*u, c.clone())),
        )
        .expect("masks already validated")
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> BiGradedElement<U> {
        let mut out = BiGradedElement { dim: self.dim, terms: BTreeMap::new() };
        for (k, c) in self.terms() {
            out.add_term(k, f(c));
        }
        out
    }

    pub fn to_f64(&self) -> BiGradedElement<f64> {
        self.map_scalar(|c| c.to_f64_lossy())
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64_lossy().abs()).fold(0.0, f64::max)
    }
}

impl BiGradedElement<f64> {
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.sub(other).map(|d| d.max_abs() <= tol).unwrap_or(false)
    }
}
