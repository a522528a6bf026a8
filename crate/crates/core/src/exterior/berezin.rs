use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{BiGradedElement, ExteriorForm};
use crate::scalar::Scalar;

/// Sign convention of the Berezin integral in odd dimensions, where no
/// closed-manifold observable pins it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OddSign {
    /// `κ_n = (−1)^{n(n+1)/2} π^{−n/2}`, the same closed form as in even
    /// dimensions.
    #[default]
    Standard,
    Opposite,
}

/// The Berezin integral `Λ(E*) ⊗ Λ̂(E*) → Λ(E*)`: extract the coefficient
/// of `ê^0 ∧ ⋯ ∧ ê^{n−1}` and multiply by `κ_n`.
///
/// In even dimension `κ_n = (−1)^{n(n+1)/2} π^{−n/2}` makes
/// `∫^B exp(−R)` the Euler form, integrating to `χ` on closed manifolds.
/// It equals `(4π)^{−n/2}` times the supertrace of the quantized top
/// monomial, so the heat-kernel and Euler-form normalizations agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Berezin {
    pub odd_sign: OddSign,
    /// Extra multiplicative factor; `1.0` except in sensitivity checks.
    pub scale: f64,
}

impl Default for Berezin {
    fn default() -> Self {
        Self { odd_sign: OddSign::Standard, scale: 1.0 }
    }
}

impl Berezin {
    pub fn kappa(&self, n: usize) -> f64 {
        let sign = if (n * (n + 1) / 2) % 2 == 1 { -1.0 } else { 1.0 };
        let odd_flip = if n % 2 == 1 && self.odd_sign == OddSign::Opposite { -1.0 } else { 1.0 };
        self.scale * sign * odd_flip * PI.powf(-(n as f64) / 2.0)
    }

    /// Normalized Berezin integral.
    pub fn integrate<T: Scalar>(&self, element: &BiGradedElement<T>) -> ExteriorForm<f64> {
        let k = self.kappa(element.dim());
        element.top_hatted().map_scalar(|c| c.to_f64_lossy() * k)
    }

    /// Coefficient extraction without `κ_n`; exact for rational input.
    pub fn top_coefficients<T: Scalar>(element: &BiGradedElement<T>) -> ExteriorForm<T> {
        element.top_hatted()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{CliffordElement, Generator, Letter};
    use crate::scalar::Rational;

    #[test]
    fn low_hatted_degree_integrates_to_zero() {
        let a = BiGradedElement::<f64>::monomial(3, &[Generator::E(0), Generator::Hat(1), Generator::Hat(2)], 2.0).unwrap();
        assert!(Berezin::default().integrate(&a).is_zero());
    }

    #[test]
    fn kappa_matches_supertrace_normalization() {
        for n in 1..=6usize {
            let letters: Vec<Letter> = (0..n).map(Letter::C).chain((0..n).map(Letter::Hat)).collect();
            let w = CliffordElement::<Rational>::word(n, &letters).unwrap();
            let st = w.supertrace().to_f64_lossy();
            let expected = (4.0 * PI).powf(-(n as f64) / 2.0) * st;
            assert!((Berezin::default().kappa(n) - expected).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn odd_sign_only_affects_odd_dimensions() {
        let flipped = Berezin { odd_sign: OddSign::Opposite, scale: 1.0 };
        assert_eq!(flipped.kappa(2), Berezin::default().kappa(2));
        assert_eq!(flipped.kappa(3), -Berezin::default().kappa(3));
    }
}
