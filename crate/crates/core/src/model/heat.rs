use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use libm::erfc;

use super::{HalfSpacePoint, ModelError};

/// Normal-direction factor of a scalar half-space kernel, a sum of
/// one-dimensional Gaussians `(4πτ)^{-1/2} e^{-(x'-a)²/4τ}` (method of images).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Dirichlet,
    Neumann,
    /// Neumann minus Dirichlet: twice the image term.
    Jump,
    /// Whole-line Gaussian, no image.
    Free,
}

impl Profile {
    /// `(coefficient, σ)` pairs: the Gaussians are centred at `σx`.
    pub fn images(&self) -> &'static [(f64, f64)] {
        match self {
            Profile::Dirichlet => &[(1.0, 1.0), (-1.0, -1.0)],
            Profile::Neumann => &[(1.0, 1.0), (1.0, -1.0)],
            Profile::Jump => &[(2.0, -1.0)],
            Profile::Free => &[(1.0, 1.0)],
        }
    }

    /// `(coefficient, centre)` pairs in the variable `x'` for source `x`.
    pub fn terms(&self, x: f64) -> Vec<(f64, f64)> {
        self.images().iter().map(|&(c, sigma)| (c, sigma * x)).collect()
    }

    pub fn eval(&self, tau: f64, x: f64, xp: f64) -> f64 {
        let norm = (4.0 * PI * tau).sqrt();
        let s: f64 = self.terms(x).iter().map(|(c, a)| c * (-(xp - a) * (xp - a) / (4.0 * tau)).exp()).sum();
        s / norm
    }

    /// `∂/∂x` of [`Profile::eval`].
    pub fn eval_dx(&self, tau: f64, x: f64, xp: f64) -> f64 {
        let norm = (4.0 * PI * tau).sqrt();
        let s: f64 = self
            .images()
            .iter()
            .map(|&(c, sigma)| {
                let a = sigma * x;
                c * sigma * (xp - a) / (2.0 * tau) * (-(xp - a) * (xp - a) / (4.0 * tau)).exp()
            })
            .sum();
        s / norm
    }
}

/// Whole-space heat kernel `(4πt)^{-d/2} e^{-r²/4t}` in `d` dimensions.
pub fn free_gaussian(t: f64, d: usize, dist_sq: f64) -> f64 {
    (4.0 * PI * t).powf(-(d as f64) / 2.0) * (-dist_sq / (4.0 * t)).exp()
}

fn scalar_kernel(profile: Profile, t: f64, p: &HalfSpacePoint, q: &HalfSpacePoint) -> Result<f64, ModelError> {
    if !(t > 0.0) {
        return Err(ModelError::NonPositiveTime(t));
    }
    if p.dim() != q.dim() {
        return Err(ModelError::DimensionMismatch(p.dim(), q.dim()));
    }
    let tangential = free_gaussian(t, p.dim() - 1, p.tangential_distance_sq(q));
    Ok(profile.eval(t, p.x, q.x) * tangential)
}

/// `(4πt)^{-n/2} (e^{-(x-x')²/4t} − e^{-(x+x')²/4t}) e^{-|y-y'|²/4t}`.
pub fn k_dirichlet(t: f64, p: &HalfSpacePoint, q: &HalfSpacePoint) -> Result<f64, ModelError> {
    scalar_kernel(Profile::Dirichlet, t, p, q)
}

/// `(4πt)^{-n/2} (e^{-(x-x')²/4t} + e^{-(x+x')²/4t}) e^{-|y-y'|²/4t}`.
pub fn k_neumann(t: f64, p: &HalfSpacePoint, q: &HalfSpacePoint) -> Result<f64, ModelError> {
    scalar_kernel(Profile::Neumann, t, p, q)
}

/// `∫_0^∞ exp(−(u−a)²/4α − (u−c)²/4β) du`
/// `= e^{−(a−c)²/4(α+β)} · ½√(π/k) · erfc(−m√k)`, with `k = (α+β)/4αβ`
/// and `m = (βa + αc)/(α+β)`.
pub fn half_line_gaussian_product(a: f64, alpha: f64, c: f64, beta: f64) -> f64 {
    let sum = alpha + beta;
    let k = sum / (4.0 * alpha * beta);
    let m = (beta * a + alpha * c) / sum;
    (-(a - c) * (a - c) / (4.0 * sum)).exp() * 0.5 * (PI / k).sqrt() * erfc(-m * k.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_kronrod, QuadratureSpec};
    use approx::assert_relative_eq;

    fn pt(x: f64, y: &[f64]) -> HalfSpacePoint {
        HalfSpacePoint::new(x, y.to_vec()).unwrap()
    }

    #[test]
    fn dirichlet_vanishes_on_boundary() {
        for &t in &[0.1, 1.0, 3.0] {
            let v = k_dirichlet(t, &pt(0.0, &[0.3]), &pt(0.7, &[-0.2])).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn neumann_normal_derivative_vanishes_on_boundary() {
        let h = 1e-4;
        let q = pt(0.6, &[0.1, 0.2]);
        let plus = k_neumann(0.7, &pt(h, &[0.0, 0.5]), &q).unwrap();
        // Even extension: the value at −h equals the value at +h.
        let minus = Profile::Neumann.eval(0.7, -h, 0.6) * free_gaussian(0.7, 2, 0.1 * 0.1 + 0.3 * 0.3);
        assert!(((plus - minus) / (2.0 * h)).abs() < 1e-10);
        assert_eq!(Profile::Neumann.eval_dx(0.7, 0.0, 0.6), 0.0);
    }

    #[test]
    fn images_sum_to_twice_free_gaussian() {
        for &(x, xp) in &[(0.3, 0.5), (1.0, 0.2), (2.0, 2.5)] {
            let p = pt(x, &[0.1]);
            let q = pt(xp, &[-0.4]);
            let sum = k_dirichlet(0.8, &p, &q).unwrap() + k_neumann(0.8, &p, &q).unwrap();
            let free = free_gaussian(0.8, 2, (x - xp) * (x - xp) + 0.25);
            assert_relative_eq!(sum, 2.0 * free, max_relative = 1e-14);
        }
    }

    #[test]
    fn neumann_conserves_heat() {
        let spec = QuadratureSpec::with_tolerance(1e-12);
        for &(t, x) in &[(0.5, 0.0), (1.0, 0.7), (2.0, 3.0)] {
            let total = gauss_kronrod(|xp| Profile::Neumann.eval(t, x, xp), 0.0, x + 40.0, &[x], &spec).unwrap();
            assert_relative_eq!(total.value, 1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert!(k_neumann(0.0, &pt(0.1, &[]), &pt(0.1, &[])).is_err());
        assert!(k_dirichlet(-1.0, &pt(0.1, &[]), &pt(0.1, &[])).is_err());
    }

    #[test]
    fn closed_form_half_line_product_matches_quadrature() {
        let spec = QuadratureSpec::with_tolerance(1e-13);
        for &(a, al, c, be) in &[(0.3, 0.2, -0.5, 0.7), (1.2, 0.9, 0.4, 0.05), (-0.4, 0.3, -0.1, 0.3)] {
            let f = |u: f64| (-(u - a) * (u - a) / (4.0 * al) - (u - c) * (u - c) / (4.0 * be)).exp();
            let q = gauss_kronrod(f, 0.0, 30.0, &[a, c], &spec).unwrap();
            assert_relative_eq!(half_line_gaussian_product(a, al, c, be), q.value, max_relative = 1e-12);
        }
    }
}
