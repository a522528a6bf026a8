use nalgebra::DMatrix;
use serde::Serialize;

use super::curvature::{curvature_at, orthonormal_frame, second_fundamental_form_at};
use super::{DeformationFamily, GeometryError, MetricPatch};
use crate::exterior::{
    curvature_element, normal_curvature_element, Berezin, BiGradedElement, CliffordElement, CurvatureTensor, Generator, Letter,
    SecondFundamentalForm,
};
use crate::quadrature::{gauss_kronrod, par_map, QuadratureSpec};
use crate::scalar::pairwise_sum;

fn top_coefficient(element: &BiGradedElement<f64>, berezin: &Berezin) -> f64 {
    let n = element.dim();
    let full = if n >= 32 { u32::MAX } else { (1u32 << n) - 1 };
    berezin.integrate(element).coefficient(full) + 0.0
}

fn exp_minus(r: &BiGradedElement<f64>) -> Result<BiGradedElement<f64>, GeometryError> {
    Ok(r.neg().nilpotent_exp()?)
}

/// `∫^B exp(−R)`: the Euler form as a density against the Riemannian
/// volume. Zero when `n` is odd.
pub fn euler_density(r: &CurvatureTensor<f64>, berezin: &Berezin) -> Result<f64, GeometryError> {
    let e = exp_minus(&curvature_element(r))?;
    Ok(top_coefficient(&e, berezin))
}

pub fn euler_form(curv: &super::CurvatureData, berezin: &Berezin) -> Result<f64, GeometryError> {
    euler_density(&curv.curvature, berezin)
}

/// Boundary density of `∂_l ∫_{∂M} i*ẽ(g_0, g_l)`:
/// `−½ ∫^B h_ab e^a∧ê^b ∧ e^0∧ê^0 ∧ exp(−R_l)`, the `½` being
/// `∫_0^∞ x e^{−x²} dx`.
pub fn transgression_density(r: &CurvatureTensor<f64>, h: &SecondFundamentalForm<f64>, berezin: &Berezin) -> Result<f64, GeometryError> {
    let n = r.dim();
    let normal = BiGradedElement::monomial(n, &[Generator::E(0), Generator::Hat(0)], 1.0)?;
    let e = h.element().wedge(&normal)?.wedge(&exp_minus(&curvature_element(r))?)?;
    Ok(-0.5 * top_coefficient(&e, berezin) + 0.0)
}

/// Boundary density of `i*φ` at one value of `l`:
/// the coefficient of `e^1∧⋯∧e^{n−1}` in `∫^B h_ab e^a∧ê^b R′_0 exp(−R)`,
/// read off as the `e^0∧⋯∧e^{n−1}` coefficient of `e^0 ∧ (…)`, i.e. with
/// `R_0 = e^0 ∧ R′_0` in place of `R′_0`.
pub fn phi_density(r: &CurvatureTensor<f64>, h: &SecondFundamentalForm<f64>, berezin: &Berezin) -> Result<f64, GeometryError> {
    let e = h.element().wedge(&normal_curvature_element(r))?.wedge(&exp_minus(&curvature_element(r))?)?;
    Ok(top_coefficient(&e, berezin))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Density {
    Transgression,
    Phi,
}

fn boundary_term(family: &DeformationFamily, density: Density, spec: &QuadratureSpec, berezin: &Berezin) -> Result<f64, GeometryError> {
    family.check_endpoints(1e-9)?;
    let g = &family.g;
    let nodes = g.boundary_nodes();
    let hs: Vec<SecondFundamentalForm<f64>> =
        nodes.iter().map(|(t, _)| second_fundamental_form_at(g, t)).collect::<Result<_, _>>()?;
    let volumes: Vec<f64> = nodes.iter().map(|(t, w)| w * g.boundary_volume_density(t)).collect();
    if hs.iter().all(|h| h.is_zero()) {
        // Both densities are linear in h.
        return Ok(0.0);
    }
    let failure = std::sync::Mutex::new(None);
    let at_l = |l: f64| -> f64 {
        let patch = family.at(l);
        let items: Vec<usize> = (0..nodes.len()).collect();
        let values = par_map(&items, |&k| -> Result<f64, GeometryError> {
            let mut u = vec![0.0];
            u.extend_from_slice(&nodes[k].0);
            let r = curvature_at(&patch, &u)?.curvature;
            let d = match density {
                Density::Transgression => transgression_density(&r, &hs[k], berezin)?,
                Density::Phi => phi_density(&r, &hs[k], berezin)?,
            };
            Ok(d * volumes[k])
        });
        match values.into_iter().collect::<Result<Vec<f64>, _>>() {
            Ok(v) => pairwise_sum(&v),
            Err(e) => {
                *failure.lock().expect("lock") = Some(e);
                f64::NAN
            }
        }
    };
    let est = gauss_kronrod(at_l, 0.0, 1.0, &[], spec);
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    Ok(est?.value + 0.0)
}

/// `∫_{∂M} i*ẽ(g_0, g)`, integrating the transgression density over
/// `l ∈ [0, 1]` and the boundary grid.
pub fn transgression_boundary_integral(family: &DeformationFamily, spec: &QuadratureSpec, berezin: &Berezin) -> Result<f64, GeometryError> {
    boundary_term(family, Density::Transgression, spec, berezin)
}

/// `∫_{∂M} i*φ`.
pub fn phi_boundary_integral(family: &DeformationFamily, spec: &QuadratureSpec, berezin: &Berezin) -> Result<f64, GeometryError> {
    boundary_term(family, Density::Phi, spec, berezin)
}

/// `∫ (e(g) − e(g_0)) dvol` over the chart box with `x ∈ [x_lo, x_hi]`;
/// `breakpoints` mark where the integrand is only piecewise smooth.
pub fn euler_difference_integral(
    family: &DeformationFamily,
    x_range: (f64, f64),
    breakpoints: &[f64],
    spec: &QuadratureSpec,
    berezin: &Berezin,
) -> Result<f64, GeometryError> {
    let nodes = family.g.boundary_nodes();
    let density = |p: &MetricPatch, u: &[f64]| -> Result<f64, GeometryError> {
        let vol = p.checked_metric(u)?.determinant().sqrt();
        Ok(euler_form(&curvature_at(p, u)?, berezin)? * vol)
    };
    let failure = std::sync::Mutex::new(None);
    let slice = |x: f64| -> f64 {
        let values = par_map(&nodes, |(t, w)| -> Result<f64, GeometryError> {
            let mut u = vec![x];
            u.extend_from_slice(t);
            Ok(w * (density(&family.g, &u)? - density(&family.g0, &u)?))
        });
        match values.into_iter().collect::<Result<Vec<f64>, _>>() {
            Ok(v) => pairwise_sum(&v),
            Err(e) => {
                *failure.lock().expect("lock") = Some(e);
                f64::NAN
            }
        }
    };
    let est = gauss_kronrod(slice, x_range.0, x_range.1, breakpoints, spec);
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }
    Ok(est?.value)
}

/// `*_l^{−1} ∂_l *_l` at a collar point.
#[derive(Debug, Clone)]
pub struct HodgeStarVariation {
    /// `−½ Σ ⟨(g_l^{−1} ∂_l g_l) e_i, e_j⟩ c(e_i) ĉ(e_j)` in a `g_l`-orthonormal frame.
    pub exact: CliffordElement<f64>,
    /// `x h_ab c(e_a) ĉ(e_b)` with `h` from [`second_fundamental_form_at`].
    pub leading: CliffordElement<f64>,
}

impl HodgeStarVariation {
    pub fn remainder(&self) -> f64 {
        let d = self.exact.sub(&self.leading).expect("same dimension");
        d.terms().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }
}

pub fn hodge_star_variation(family: &DeformationFamily, l: f64, point: &[f64]) -> Result<HodgeStarVariation, GeometryError> {
    let n = family.dim();
    if point.len() != n {
        return Err(GeometryError::DimensionMismatch(point.len(), n));
    }
    let gl = family.at(l).checked_metric(point)?;
    let e = orthonormal_frame(&gl, point)?;
    let dg = family.derivative(point);
    let dgm = DMatrix::from_fn(n, n, |i, j| dg[i][j]);
    let m = e.transpose() * dgm * &e;
    let mut exact = CliffordElement::zero(n)?;
    for i in 0..n {
        for j in 0..n {
            if m[(i, j)] != 0.0 {
                let w = CliffordElement::word(n, &[Letter::C(i), Letter::Hat(j)])?.scale(&(-0.5 * m[(i, j)]));
                exact = exact.add(&w)?;
            }
        }
    }
    let h = second_fundamental_form_at(&family.g, &point[1..])?;
    let mut leading = CliffordElement::zero(n)?;
    for a in 1..n {
        for b in 1..n {
            let v = h.get(a, b);
            if v != 0.0 {
                leading = leading.add(&CliffordElement::word(n, &[Letter::C(a), Letter::Hat(b)])?.scale(&(point[0] * v)))?;
            }
        }
    }
    Ok(HodgeStarVariation { exact, leading })
}

/// The three terms of the anomaly formula for one geometry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyPrediction {
    /// `χ(∂M, ρ) ln 2 = rank ρ · χ(∂M) · ln 2`.
    pub term_chi: f64,
    /// `rank ρ ∫_{∂M} i*ẽ(g_0, g)`.
    pub term_transgression: f64,
    /// `∫_{∂M} i*φ`, before the factor `c · rank ρ`.
    pub term_phi: f64,
    pub constant_c: f64,
    pub rank: u32,
    pub prediction: f64,
}

impl AnomalyPrediction {
    pub fn assemble(rank: u32, boundary_euler_characteristic: i64, transgression: f64, phi: f64, constant_c: f64) -> Self {
        let r = rank as f64;
        let term_chi = r * boundary_euler_characteristic as f64 * std::f64::consts::LN_2;
        let term_transgression = r * transgression + 0.0;
        let term_phi = phi + 0.0;
        let prediction = term_chi + term_transgression + constant_c * term_phi * r;
        Self { term_chi, term_transgression, term_phi, constant_c, rank, prediction }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::random_curvature_tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn levi_civita(idx: &[usize]) -> f64 {
        let mut sign = 1.0;
        for i in 0..idx.len() {
            for j in i + 1..idx.len() {
                if idx[i] == idx[j] {
                    return 0.0;
                }
                if idx[i] > idx[j] {
                    sign = -sign;
                }
            }
        }
        sign
    }

    #[test]
    fn sphere_euler_density_is_gauss_curvature_over_two_pi() {
        let mut r = CurvatureTensor::<f64>::zero(2);
        r.set_symmetric(0, 1, 0, 1, 1.0);
        let e = euler_density(&r, &Berezin::default()).unwrap();
        assert!((e * 4.0 * PI - 2.0).abs() < 1e-14);
    }

    #[test]
    fn phi_density_matches_permutation_expansion_in_three_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = Berezin::default();
        for _ in 0..10 {
            let r = random_curvature_tensor::<f64, _>(3, &mut rng);
            let h = SecondFundamentalForm::<f64>::random(3, &mut rng);
            let mut brute = 0.0;
            for a in 1..3 {
                for bb in 1..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            for l in 0..3 {
                                // e^0 e^a ê^b e^j ê^k ê^l = −e^0 e^a e^j ê^b ê^k ê^l
                                brute -= 0.25 * h.get(a, bb) * r.get(0, j, k, l) * levi_civita(&[0, a, j]) * levi_civita(&[bb, k, l]);
                            }
                        }
                    }
                }
            }
            brute *= b.kappa(3);
            let d = phi_density(&r, &h, &b).unwrap();
            assert!((d - brute).abs() < 1e-12 * (1.0 + brute.abs()), "{d} vs {brute}");
        }
    }

    #[test]
    fn two_dimensional_transgression_density_is_minus_h_over_two_pi() {
        let r = CurvatureTensor::<f64>::zero(2);
        let mut h = SecondFundamentalForm::<f64>::zero(2);
        h.set(1, 1, 1.0);
        let d = transgression_density(&r, &h, &Berezin::default()).unwrap();
        assert!((d + 0.5 / PI).abs() < 1e-15);
    }

    #[test]
    fn prediction_identity() {
        let p = AnomalyPrediction::assemble(3, 2, 0.25, -0.5, 0.9);
        assert_eq!(p.prediction, p.term_chi + p.term_transgression + p.constant_c * p.term_phi * 3.0);
    }
}
