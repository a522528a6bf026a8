//! Finite-difference checks of the model solution: heat equation residual,
//! boundary conditions at `x = 0`, and the initial condition.

use serde::{Deserialize, Serialize};

use super::{BoundaryCondition, ConvolutionRoute, HalfSpacePoint, KernelValue, ModelError, ModelKernel};
use crate::exterior::BiGradedElement;
use crate::quadrature::{gauss_legendre, QuadratureSpec};

/// Fourth-order central stencils.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteDifference {
    pub h_space: f64,
    pub h_time: f64,
}

impl Default for FiniteDifference {
    fn default() -> Self {
        Self { h_space: 0.01, h_time: 0.005 }
    }
}

fn first_derivative(f: [&KernelValue<f64>; 4], h: f64) -> KernelValue<f64> {
    // (−f(+2h) + 8 f(+h) − 8 f(−h) + f(−2h)) / 12h, f = [−2h, −h, +h, +2h]
    f[0].sub(f[3]).add(&f[2].sub(f[1]).scale(&8.0)).scale(&(1.0 / (12.0 * h)))
}

fn second_derivative(f: [&KernelValue<f64>; 5], h: f64) -> KernelValue<f64> {
    // (−f(±2h) + 16 f(±h) − 30 f(0)) / 12h², f = [−2h, −h, 0, +h, +2h]
    let outer = f[0].add(f[4]).scale(&-1.0);
    let inner = f[1].add(f[3]).scale(&16.0);
    outer.add(&inner).add(&f[2].scale(&-30.0)).scale(&(1.0 / (12.0 * h * h)))
}

/// Largest coefficient of `(∂_t + Δ + R) K` at `(t, p, q)`, with
/// `Δ = −Σ ∂²` acting on `p`.
pub fn pde_residual(
    model: &ModelKernel,
    t: f64,
    p: &HalfSpacePoint,
    q: &HalfSpacePoint,
    spec: &QuadratureSpec,
    fd: &FiniteDifference,
    route: ConvolutionRoute,
) -> Result<f64, ModelError> {
    let eval = |t: f64, p: &HalfSpacePoint| model.evaluate_with(t, p, q, spec, route);
    let centre = eval(t, p)?;
    let ht = fd.h_time;
    let times: Vec<KernelValue<f64>> =
        [-2.0, -1.0, 1.0, 2.0].iter().map(|k| eval(t + k * ht, p)).collect::<Result<_, _>>()?;
    let mut total = first_derivative([&times[0], &times[1], &times[2], &times[3]], ht);
    let h = fd.h_space;
    for coord in 0..p.dim() {
        let vals: Vec<KernelValue<f64>> =
            [-2.0, -1.0, 1.0, 2.0].iter().map(|k| eval(t, &p.shifted(coord, k * h))).collect::<Result<_, _>>()?;
        let d2 = second_derivative([&vals[0], &vals[1], &centre, &vals[2], &vals[3]], h);
        total = total.sub(&d2);
    }
    total = total.add(&centre.left_multiply(model.curvature()));
    Ok(total.max_abs())
}

/// The two boundary residuals at `(t, (0, y), q)`.
///
/// Absolute conditions: the normal part `e^0∧ι_{e_0} K` and the tangential
/// part of `∂_x K` must vanish; relative conditions swap the roles. Returns
/// the largest coefficient of each. The `x`-derivative uses the smooth
/// extension of the kernel formulas across `x = 0`.
pub fn boundary_residuals(
    model: &ModelKernel,
    t: f64,
    y: &[f64],
    q: &HalfSpacePoint,
    spec: &QuadratureSpec,
    fd: &FiniteDifference,
    route: ConvolutionRoute,
) -> Result<(f64, f64), ModelError> {
    let p = HalfSpacePoint { x: 0.0, y: y.to_vec() };
    let eval = |p: &HalfSpacePoint| model.evaluate_with(t, p, q, spec, route);
    let at = eval(&p)?;
    let h = fd.h_space;
    let vals: Vec<KernelValue<f64>> =
        [-2.0, -1.0, 1.0, 2.0].iter().map(|k| eval(&p.shifted(0, k * h))).collect::<Result<_, _>>()?;
    let dx = first_derivative([&vals[0], &vals[1], &vals[2], &vals[3]], h);
    // (1−P)(L_A + P L_B) = (1−P) L_A; P (L_A + P L_B) = P L_{A+B}.
    let tangential = |k: &KernelValue<f64>| k.plain.add(&k.projected).expect("dim").tangential_part(0).max_abs();
    Ok(match model.boundary_condition() {
        BoundaryCondition::Absolute => (at.plain.max_abs(), tangential(&dx)),
        BoundaryCondition::Relative => (tangential(&at), dx.plain.max_abs()),
    })
}

fn bump(u: f64, a: f64, b: f64) -> f64 {
    if u <= a || u >= b {
        return 0.0;
    }
    let s = 2.0 * (u - a) / (b - a) - 1.0;
    (-1.0 / (1.0 - s * s)).exp() * std::f64::consts::E
}

/// Initial condition check for `n = 2`: with the smooth compactly supported
/// `ψ(x′, y′) = b(x′) b(y′)` centred at the interior point `p`,
/// `M(t) = ∫ K(t, p, p′) ψ(p′) dp′` must tend to `ψ(p) · id`. Returns
/// `|2M(t/2) − M(t) − ψ(p)·id|` (one Richardson step) for each `t` given.
pub fn initial_condition_error(model: &ModelKernel, p: &HalfSpacePoint, times: &[f64], spec: &QuadratureSpec) -> Result<Vec<f64>, ModelError> {
    if model.dim() != 2 {
        return Err(ModelError::Unsupported("initial condition check is implemented for n = 2".into()));
    }
    let (xa, xb) = (p.x - 0.6, p.x + 0.6);
    if xa <= 0.0 {
        return Err(ModelError::OutsideHalfSpace(xa));
    }
    let (ya, yb) = (p.y[0] - 0.6, p.y[0] + 0.6);
    let (nodes, weights) = gauss_legendre(16);
    let panels = 6;
    let grid = |a: f64, b: f64| -> Vec<(f64, f64)> {
        let w = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|k| {
                let c = a + (k as f64 + 0.5) * w;
                nodes.iter().zip(&weights).map(move |(x, wt)| (c + 0.5 * w * x, 0.5 * w * wt)).collect::<Vec<_>>()
            })
            .collect()
    };
    let xs = grid(xa, xb);
    let ys = grid(ya, yb);
    let moment = |t: f64| -> Result<KernelValue<f64>, ModelError> {
        let points: Vec<(f64, f64, f64)> = xs
            .iter()
            .flat_map(|&(x, wx)| ys.iter().map(move |&(y, wy)| (x, y, wx * wy * bump(x, xa, xb) * bump(y, ya, yb))))
            .filter(|(_, _, w)| *w != 0.0)
            .collect();
        let values = crate::quadrature::par_map(&points, |&(x, y, w)| {
            model.evaluate_reduced(t, p, &HalfSpacePoint { x, y: vec![y] }, spec).map(|k| k.scale(&w))
        });
        let mut total = KernelValue::zero(2);
        for v in values {
            total = total.add(&v?);
        }
        Ok(total)
    };
    let psi = bump(p.x, xa, xb) * bump(p.y[0], ya, yb);
    let target = KernelValue::left(BiGradedElement::scalar(2, psi)?);
    let mut out = vec![];
    for &t in times {
        let extrapolated = moment(t / 2.0)?.scale(&2.0).sub(&moment(t)?);
        out.push(extrapolated.distance(&target));
    }
    Ok(out)
}
