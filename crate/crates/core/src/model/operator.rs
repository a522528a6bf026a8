use crate::exterior::{BiGradedElement, CliffordElement, Letter};
use crate::scalar::Scalar;

/// An endomorphism of `Λ(E*) ⊗ Λ̂(E*)` of the form `ω ↦ A∧ω + P(B∧ω)`,
/// where `P = ι_{e_0} e^0∧` is the tangential projection on the unhatted
/// factor and `A`, `B` are even. Every model kernel value has this shape.
///
/// `B` is stored through its tangential part, which makes the
/// representation unique.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelValue<T: Scalar> {
    pub plain: BiGradedElement<T>,
    pub projected: BiGradedElement<T>,
}

impl<T: Scalar> KernelValue<T> {
    pub fn new(plain: BiGradedElement<T>, projected: BiGradedElement<T>) -> Self {
        Self { plain, projected: projected.tangential_part(0) }
    }

    pub fn zero(dim: usize) -> Self {
        let z = BiGradedElement::zero(dim).expect("valid dimension");
        Self { plain: z.clone(), projected: z }
    }

    pub fn identity(dim: usize) -> Self {
        Self::left(BiGradedElement::one(dim).expect("valid dimension"))
    }

    /// `P = ι_{e_0} e^0∧`.
    pub fn projector(dim: usize) -> Self {
        Self::new(BiGradedElement::zero(dim).expect("valid"), BiGradedElement::one(dim).expect("valid"))
    }

    /// Left multiplication `L_A`.
    pub fn left(a: BiGradedElement<T>) -> Self {
        let z = BiGradedElement::zero(a.dim()).expect("valid dimension");
        Self { plain: a, projected: z }
    }

    /// `c(e_0) ĉ(e_0) = 1 − 2P` acting on the unhatted factor.
    pub fn normal_clifford_square(dim: usize) -> Self {
        let one = BiGradedElement::one(dim).expect("valid");
        Self::new(one.clone(), one.scale(&T::from_i64(-2).expect("small")))
    }

    pub fn dim(&self) -> usize {
        self.plain.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.plain.is_zero() && self.projected.is_zero()
    }

    pub fn apply(&self, omega: &BiGradedElement<T>) -> BiGradedElement<T> {
        let a = self.plain.wedge(omega).expect("same dimension");
        let b = self.projected.wedge(omega).expect("same dimension").tangential_part(0);
        a.add(&b).expect("same dimension")
    }

    /// Composition `self ∘ other`:
    /// `(L_A + P L_B)(L_C + P L_D) = L_{AC + A_0 D} + P L_{A_t D + BC + B_t D}`,
    /// with `A_t`, `A_0` the tangential and normal parts of `A`.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (&self.plain, &self.projected);
        let (c, d) = (&other.plain, &other.projected);
        let w = |x: &BiGradedElement<T>, y: &BiGradedElement<T>| x.wedge(y).expect("same dimension");
        let plain = w(a, c).add(&w(&a.normal_part(0), d)).expect("dim");
        let projected = w(&a.tangential_part(0), d).add(&w(b, c)).expect("dim").add(&w(b, d)).expect("dim");
        Self::new(plain, projected)
    }

    /// `L_X ∘ self`.
    pub fn left_multiply(&self, x: &BiGradedElement<T>) -> Self {
        Self::left(x.clone()).compose(self)
    }

    /// `self ∘ L_X`.
    pub fn right_multiply(&self, x: &BiGradedElement<T>) -> Self {
        self.compose(&Self::left(x.clone()))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.plain.add(&other.plain).expect("dim"), self.projected.add(&other.projected).expect("dim"))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.plain.sub(&other.plain).expect("dim"), self.projected.sub(&other.projected).expect("dim"))
    }

    pub fn scale(&self, factor: &T) -> Self {
        Self { plain: self.plain.scale(factor), projected: self.projected.scale(factor) }
    }

    /// The corresponding element of the Clifford algebra acting on `Λ(E*)`
    /// (for the unhatted factor), with `P = ½(1 − c_0 ĉ_0)`.
    pub fn projector_clifford(dim: usize) -> CliffordElement<T> {
        let id = CliffordElement::identity(dim).expect("valid");
        let w = CliffordElement::word(dim, &[Letter::C(0), Letter::Hat(0)]).expect("valid");
        id.sub(&w).expect("dim").scale(&T::from_ratio(1, 2))
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U + Copy) -> KernelValue<U> {
        KernelValue { plain: self.plain.map_scalar(f), projected: self.projected.map_scalar(f) }
    }
}

impl KernelValue<f64> {
    pub fn max_abs(&self) -> f64 {
        self.plain.max_abs().max(self.projected.max_abs())
    }

    /// Largest coefficient difference.
    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::Generator::{Hat, E};
    use crate::scalar::{rational, Rational};

    fn basis(n: usize) -> Vec<BiGradedElement<Rational>> {
        let mut out = vec![];
        for u in 0..(1u32 << n) {
            for h in 0..(1u32 << n) {
                out.push(BiGradedElement::from_terms(n, [((u, h), rational(1, 1))]).unwrap());
            }
        }
        out
    }

    #[test]
    fn projector_is_idempotent_and_matches_definition() {
        let p = KernelValue::<Rational>::projector(2);
        assert_eq!(p.compose(&p), p);
        for w in basis(2) {
            let expected = w.ext(0).int(0);
            assert_eq!(p.apply(&w), expected);
        }
    }

    #[test]
    fn compose_agrees_with_sequential_application() {
        let n = 2;
        let r = |c: i64| rational(c, 1);
        let a = BiGradedElement::monomial(n, &[E(0), Hat(1)], r(2)).unwrap().wedge(
            &BiGradedElement::monomial(n, &[E(1), Hat(0)], r(1)).unwrap(),
        ).unwrap().add(&BiGradedElement::one(n).unwrap()).unwrap();
        let b = BiGradedElement::monomial(n, &[E(0), E(1)], r(3)).unwrap().add(&BiGradedElement::scalar(n, r(-1)).unwrap()).unwrap();
        let x = KernelValue::new(a.clone(), b.clone());
        let y = KernelValue::new(b, a);
        let xy = x.compose(&y);
        for w in basis(n) {
            assert_eq!(xy.apply(&w), x.apply(&y.apply(&w)));
        }
    }

    #[test]
    fn normal_clifford_square_matches_clifford_action() {
        let n = 2;
        let k = KernelValue::<Rational>::normal_clifford_square(n);
        let w = CliffordElement::word(n, &[Letter::C(0), Letter::Hat(0)]).unwrap();
        for mask in 0..4u32 {
            let form = crate::exterior::ExteriorForm::basis(n, mask).unwrap();
            let via_clifford = w.apply(&form).unwrap();
            let bi = BiGradedElement::from_terms(n, [((mask, 0), rational(1, 1))]).unwrap();
            let via_kernel = k.apply(&bi);
            assert_eq!(via_kernel.coefficient(mask, 0), via_clifford.coefficient(mask));
        }
    }
}
