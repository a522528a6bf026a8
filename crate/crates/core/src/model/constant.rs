use std::f64::consts::PI;

use serde::Serialize;
use libm::erfc;

use super::{BoundaryCondition, ModelError};
use crate::quadrature::{accept_near_edge, gauss_kronrod, gaussian_breakpoints, gauss_kronrod_par, tanh_sinh_with_distances, Estimate, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FRoute {
    /// Double integral over `(s, x′)`.
    Direct,
    /// `x′` integral in closed form, one-dimensional `s` integral.
    Erfc,
}

/// `f(x) = −∫_0^1 ∫_0^∞ (e^{−(x−x′)²/4s} + e^{−(x+x′)²/4s}) 2 e^{−(x+x′)²/4(1−s)} dx′ ds`.
pub fn f_of_x(x: f64, route: FRoute, spec: &QuadratureSpec) -> Result<Estimate, ModelError> {
    match route {
        FRoute::Direct => f_of_x_direct(x, spec),
        FRoute::Erfc => f_of_x_erfc(x, spec),
    }
}

fn f_integrand(x: f64, xp: f64, s: f64, one_minus_s: f64) -> f64 {
    let a = x - xp;
    let b = x + xp;
    ((-a * a / (4.0 * s)).exp() + (-b * b / (4.0 * s)).exp()) * 2.0 * (-b * b / (4.0 * one_minus_s)).exp()
}

/// Direct evaluation: tanh-sinh in `s`, adaptive Gauss–Kronrod in `x′`.
pub fn f_of_x_direct(x: f64, spec: &QuadratureSpec) -> Result<Estimate, ModelError> {
    check_x(x)?;
    let hi = x + 2.0 * spec.certified_radius();
    let inner = spec.inner(0.1);
    let failure = std::sync::Mutex::new(None);
    let est = tanh_sinh_with_distances(
        |_, ds, d1s| {
            let bp = gaussian_breakpoints(&[0.0, x], &[(4.0 * ds).sqrt(), (4.0 * d1s).sqrt()], 0.0, hi);
            match accept_near_edge(gauss_kronrod(|xp| f_integrand(x, xp, ds, d1s), 0.0, hi, &bp, &inner), ds.min(d1s), spec) {
                Ok(v) => v,
                Err(e) => {
                    *failure.lock().expect("lock") = Some(e);
                    f64::NAN
                }
            }
        },
        0.0,
        1.0,
        spec,
        false,
    );
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e.into());
    }
    Ok(est?.scale(-1.0))
}

/// Error-function route:
/// `f(x) = −2 ∫_0^1 √(πs(1−s)) [e^{−x²} erfc(−x(1−2s)/2√(s(1−s))) + erfc(x/2√(s(1−s)))] ds`.
pub fn f_of_x_erfc(x: f64, spec: &QuadratureSpec) -> Result<Estimate, ModelError> {
    check_x(x)?;
    let e = (-x * x).exp();
    let est = tanh_sinh_with_distances(
        |_, s, d1s| {
            let root = (s * d1s).sqrt();
            let z = x / (2.0 * root);
            // 1 − 2s = (1 − s) − s without cancellation near either end.
            (PI * s * d1s).sqrt() * (e * erfc(-z * (d1s - s)) + erfc(z))
        },
        0.0,
        1.0,
        spec,
        false,
    )?;
    Ok(est.scale(-2.0))
}

fn check_x(x: f64) -> Result<(), ModelError> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::OutsideHalfSpace(x))
    }
}

/// Coefficient `f̃(x)` of `(4π)^{−(n−1)/2} R_0 e^{−R}` in the diagonal of the
/// model solution at `t = 1`:
///
/// absolute: `f̃ = −(4π)^{−1/2} ∫_0^1 [e^{−x²} erfc(x(1−2s)/2√(s(1−s))) − erfc(x/2√(s(1−s)))] ds`,
///
/// relative: `f̃ = +(4π)^{−1/2} ∫_0^1 [e^{−x²} erfc(x(1−2s)/2√(s(1−s))) + erfc(x/2√(s(1−s)))] ds`.
pub fn diagonal_profile(bc: BoundaryCondition, x: f64, spec: &QuadratureSpec) -> Result<f64, ModelError> {
    check_x(x)?;
    let e = (-x * x).exp();
    let sign = match bc {
        BoundaryCondition::Absolute => -1.0,
        BoundaryCondition::Relative => 1.0,
    };
    let est = tanh_sinh_with_distances(
        |_, s, d1s| {
            let z = x / (2.0 * (s * d1s).sqrt());
            e * erfc(z * (d1s - s)) + sign * erfc(z)
        },
        0.0,
        1.0,
        spec,
        false,
    )?;
    Ok(sign * est.value / (4.0 * PI).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantC {
    pub value: f64,
    pub error_estimate: f64,
    /// Raw triple integral.
    pub raw_value: f64,
    /// `−∫ x f(x) dx` with `f` from the error-function route.
    pub reduced_value: f64,
    pub method_difference: f64,
    pub method_agreement: bool,
    pub agreement_tolerance: f64,
    pub truncation: f64,
}

/// `c = ∫_0^∞ ∫_0^1 ∫_0^∞ x (e^{−(x−x′)²/4s} + e^{−(x+x′)²/4s}) 2 e^{−(x+x′)²/4(1−s)} dx′ ds dx`,
/// computed as a raw triple integral and as `−∫_0^∞ x f(x) dx`.
///
/// The `x` range is truncated at `X = max(8, √(−ln abs_tol) + 2)`; the
/// integrand decays like `e^{−x²}`.
pub fn constant_c(spec: &QuadratureSpec, agreement_tolerance: f64) -> Result<ConstantC, ModelError> {
    spec.validate().map_err(ModelError::from)?;
    let truncation = 8.0_f64.max((-spec.abs_tol.ln()).sqrt() + 2.0);
    let inner = spec.inner(0.1);
    let failure = std::sync::Mutex::new(None);
    let record = |e: ModelError| {
        *failure.lock().expect("lock") = Some(e);
        f64::NAN
    };
    let raw = gauss_kronrod_par(
        |x| match f_of_x_direct(x, &inner) {
            Ok(e) => -x * e.value,
            Err(e) => record(e),
        },
        0.0,
        truncation,
        &[1.0, 2.0, 4.0],
        spec,
    );
    let reduced = gauss_kronrod_par(
        |x| match f_of_x_erfc(x, &inner) {
            Ok(e) => -x * e.value,
            Err(e) => record(e),
        },
        0.0,
        truncation,
        &[1.0, 2.0, 4.0],
        spec,
    );
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    let raw = raw?;
    let reduced = reduced?;
    let difference = (raw.value - reduced.value).abs();
    let out = ConstantC {
        value: reduced.value,
        error_estimate: reduced.error.max(raw.error).max(difference),
        raw_value: raw.value,
        reduced_value: reduced.value,
        method_difference: difference,
        method_agreement: difference <= agreement_tolerance,
        agreement_tolerance,
        truncation,
    };
    if !out.method_agreement {
        return Err(ModelError::Disagreement(raw.value, reduced.value));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn f_at_zero_has_closed_form() {
        // f(0) = −4√π ∫ √(s(1−s)) ds = −π^{3/2}/2.
        let spec = QuadratureSpec::with_tolerance(1e-13);
        let v = f_of_x_erfc(0.0, &spec).unwrap().value;
        assert_relative_eq!(v, -PI.powf(1.5) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn routes_agree_and_f_is_negative() {
        let spec = QuadratureSpec::with_tolerance(1e-12);
        for &x in &[0.0, 0.5, 1.0, 2.0] {
            let a = f_of_x_direct(x, &spec).unwrap().value;
            let b = f_of_x_erfc(x, &spec).unwrap().value;
            assert!((a - b).abs() < 1e-8, "x={x}: {a} vs {b}");
            assert!(a <= 0.0);
        }
        assert!(f_of_x_erfc(8.0, &spec).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn diagonal_profile_limits() {
        let spec = QuadratureSpec::with_tolerance(1e-13);
        assert!(diagonal_profile(BoundaryCondition::Absolute, 0.0, &spec).unwrap().abs() < 1e-14);
        let rel0 = diagonal_profile(BoundaryCondition::Relative, 0.0, &spec).unwrap();
        assert_relative_eq!(rel0, 2.0 / (4.0 * PI).sqrt(), epsilon = 1e-12);
        assert!(diagonal_profile(BoundaryCondition::Absolute, 9.0, &spec).unwrap().abs() < 1e-15);
    }
}
