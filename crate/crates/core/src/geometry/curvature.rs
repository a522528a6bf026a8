use nalgebra::DMatrix;
use serde::Serialize;

use super::{GeometryError, MetricPatch};
use crate::exterior::{CurvatureTensor, SecondFundamentalForm};

/// Orthonormal-frame curvature at a point, plus `h_ab` at boundary points.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureData {
    pub point: Vec<f64>,
    #[serde(skip)]
    pub curvature: CurvatureTensor<f64>,
    #[serde(skip)]
    pub second_fundamental_form: Option<SecondFundamentalForm<f64>>,
    /// Pair-symmetry residual before exact symmetrization.
    pub symmetry_residual: f64,
    /// First Bianchi residual before exact symmetrization.
    pub bianchi_residual: f64,
}

/// Orthonormal frame from Gram–Schmidt in coordinate order: column `k` is
/// a combination of `∂_0, …, ∂_k`, so `e_0 ∝ ∂_x`.
pub(crate) fn orthonormal_frame(g: &DMatrix<f64>, point: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
    let chol = g.clone().cholesky().ok_or_else(|| GeometryError::NotPositiveDefinite(point.to_vec()))?;
    chol.l().transpose().try_inverse().ok_or_else(|| GeometryError::NotPositiveDefinite(point.to_vec()))
}

/// Coordinate components `R_ijkl`, with `R_1212 > 0` on the round sphere.
fn coordinate_curvature(patch: &MetricPatch, u: &[f64], g: &DMatrix<f64>) -> Result<Vec<f64>, GeometryError> {
    let n = patch.dim();
    let ginv = g.clone().try_inverse().ok_or_else(|| GeometryError::NotPositiveDefinite(u.to_vec()))?;
    let d = patch.first_derivatives(u);
    let d2 = patch.second_derivatives(u);
    // Γ_{l,jk} = ½(∂_j g_lk + ∂_k g_lj − ∂_l g_jk), Γ^i_jk = g^{il} Γ_{l,jk}.
    let lowered = |l: usize, j: usize, k: usize| 0.5 * (d[j][l][k] + d[k][l][j] - d[l][j][k]);
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[(i * n + j) * n + k] = (0..n).map(|l| ginv[(i, l)] * lowered(l, j, k)).sum();
            }
        }
    }
    let gam = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];
    let mut r = vec![0.0; n * n * n * n];
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let second = 0.5 * (d2[k][l][i][m] + d2[i][m][k][l] - d2[k][m][i][l] - d2[i][l][k][m]);
                    let mut quad = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            quad += g[(a, b)] * (gam(a, k, l) * gam(b, i, m) - gam(a, k, m) * gam(b, i, l));
                        }
                    }
                    r[((i * n + k) * n + l) * n + m] = second + quad;
                }
            }
        }
    }
    Ok(r)
}

fn to_frame(r: &[f64], e: &DMatrix<f64>, n: usize) -> Vec<f64> {
    // Contract one index at a time.
    let mut cur = r.to_vec();
    for slot in 0..4 {
        let mut next = vec![0.0; cur.len()];
        let stride = n.pow(3 - slot as u32);
        for idx in 0..cur.len() {
            let digit = (idx / stride) % n;
            let base = idx - digit * stride;
            let mut acc = 0.0;
            for c in 0..n {
                acc += e[(c, digit)] * cur[base + c * stride];
            }
            next[idx] = acc;
        }
        cur = next;
    }
    cur
}

/// Curvature in the orthonormal frame of [`orthonormal_frame`]; symmetries
/// are measured and then imposed exactly.
pub fn curvature_at(patch: &MetricPatch, point: &[f64]) -> Result<CurvatureData, GeometryError> {
    let n = patch.dim();
    if point.len() != n {
        return Err(GeometryError::DimensionMismatch(point.len(), n));
    }
    let g = patch.checked_metric(point)?;
    let e = orthonormal_frame(&g, point)?;
    let coords = coordinate_curvature(patch, point, &g)?;
    let framed = to_frame(&coords, &e, n);
    let mut raw = CurvatureTensor::<f64>::zero(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    raw.set(i, j, k, l, framed[((i * n + j) * n + k) * n + l]);
                }
            }
        }
    }
    let symmetry_residual = raw.symmetry_residual();
    let bianchi_residual = raw.bianchi_residual();
    let second_fundamental_form = if point[0] == 0.0 { Some(second_fundamental_form_at(patch, &point[1..])?) } else { None };
    Ok(CurvatureData { point: point.to_vec(), curvature: raw.symmetrized(), second_fundamental_form, symmetry_residual, bianchi_residual })
}

/// `h_ab = −½ ∂_x (g_∂M)_ab` at `x = 0`, in the boundary orthonormal frame.
/// With this sign the unit disc has `h_11 = +1`.
///
/// The `x`-derivative is one-sided (fourth order) so only `x ≥ 0` is
/// sampled; a constant `g_∂M` gives exactly zero.
pub fn second_fundamental_form_at(patch: &MetricPatch, tangential: &[f64]) -> Result<SecondFundamentalForm<f64>, GeometryError> {
    let n = patch.dim();
    let defect = {
        let mut u = vec![0.0];
        u.extend_from_slice(tangential);
        let g = patch.metric(&u);
        (1..n).map(|a| g[0][a].abs()).fold((g[0][0] - 1.0).abs(), f64::max)
    };
    if defect > 1e-9 {
        return Err(GeometryError::NotCollar(defect));
    }
    let h = patch.step;
    let b: Vec<Vec<Vec<f64>>> = (0..5).map(|k| patch.boundary_metric(k as f64 * h, tangential)).collect();
    let m = n - 1;
    // (−25 f0 + 48 f1 − 36 f2 + 16 f3 − 3 f4) / 12h, written on differences.
    let dx = |i: usize, j: usize| {
        let f0 = b[0][i][j];
        (48.0 * (b[1][i][j] - f0) - 36.0 * (b[2][i][j] - f0) + 16.0 * (b[3][i][j] - f0) - 3.0 * (b[4][i][j] - f0)) / (12.0 * h)
    };
    let mut out = SecondFundamentalForm::<f64>::zero(n);
    if m == 0 {
        return Ok(out);
    }
    let gb = DMatrix::from_fn(m, m, |i, j| b[0][i][j]);
    let e = orthonormal_frame(&gb, tangential)?;
    let coord = DMatrix::from_fn(m, m, |i, j| -0.5 * dx(i, j));
    let framed = e.transpose() * coord * &e;
    for a in 0..m {
        for c in 0..m {
            let v = 0.5 * (framed[(a, c)] + framed[(c, a)]);
            out.set(a + 1, c + 1, v + 0.0);
        }
    }
    Ok(out)
}

/// `h_ab` on every node of the boundary grid.
pub fn second_fundamental_form(patch: &MetricPatch) -> Result<Vec<(Vec<f64>, SecondFundamentalForm<f64>)>, GeometryError> {
    patch
        .boundary_nodes()
        .into_iter()
        .map(|(t, _)| second_fundamental_form_at(patch, &t).map(|h| (t, h)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_metric_is_flat() {
        let p = MetricPatch::diagonal("flat", vec![0.0; 3], vec![1.0; 3], |_| vec![1.0; 3]).unwrap();
        let c = curvature_at(&p, &[0.3, 0.2, 0.1]).unwrap();
        assert_eq!(c.curvature.max_abs(), 0.0);
    }

    #[test]
    fn round_sphere_has_positive_sectional_curvature() {
        for a in [1.0, 2.0] {
            // g = a² (dr² + sin² r dθ²) in coordinates (r − 1, θ).
            let p = MetricPatch::diagonal("sphere", vec![0.0, 0.0], vec![1.0, 6.0], move |u| {
                vec![a * a, a * a * (1.0 + u[0]).sin().powi(2)]
            })
            .unwrap();
            let c = curvature_at(&p, &[0.4, 2.0]).unwrap();
            assert!((c.curvature.get(0, 1, 0, 1) - 1.0 / (a * a)).abs() < 1e-8, "{}", c.curvature.get(0, 1, 0, 1));
            assert!(c.symmetry_residual < 1e-8 && c.bianchi_residual < 1e-8);
        }
    }

    #[test]
    fn three_dimensional_symmetries_hold_before_projection() {
        let p = MetricPatch::new(
            "warped",
            vec![0.0; 3],
            vec![1.0; 3],
            std::sync::Arc::new(|u: &[f64]| {
                vec![
                    vec![1.0 + 0.1 * u[1] * u[1], 0.05 * u[0] * u[2], 0.0],
                    vec![0.05 * u[0] * u[2], 2.0 + (u[0] * u[1]).sin() * 0.2, 0.1 * u[2]],
                    vec![0.0, 0.1 * u[2], 1.5 + 0.3 * u[0] * u[0]],
                ]
            }),
        )
        .unwrap();
        let c = curvature_at(&p, &[0.5, 0.4, 0.3]).unwrap();
        assert!(c.symmetry_residual < 1e-8, "{}", c.symmetry_residual);
        assert!(c.bianchi_residual < 1e-8, "{}", c.bianchi_residual);
        assert!(c.curvature.max_abs() > 1e-3);
    }

    #[test]
    fn disc_boundary_has_unit_second_fundamental_form() {
        let p = MetricPatch::diagonal("disc", vec![0.0, 0.0], vec![0.9, 6.0], |u| vec![1.0, (1.0 - u[0]).powi(2)]).unwrap();
        let h = second_fundamental_form_at(&p, &[1.0]).unwrap();
        assert!((h.get(1, 1) - 1.0).abs() < 1e-10);
        // Circle of radius a: g_∂M = (a − x)² dθ², h = 1/a.
        let a = 2.5;
        let p = MetricPatch::diagonal("cap", vec![0.0, 0.0], vec![0.9, 6.0], move |u| vec![1.0, (a - u[0]).powi(2)]).unwrap();
        assert!((second_fundamental_form_at(&p, &[0.0]).unwrap().get(1, 1) - 1.0 / a).abs() < 1e-10);
    }

    #[test]
    fn product_metric_has_exactly_zero_second_fundamental_form() {
        let p = MetricPatch::diagonal("product", vec![0.0; 3], vec![1.0, 3.0, 6.0], |u| vec![1.0, 4.0, 4.0 * u[1].sin().powi(2)]).unwrap();
        for (_, h) in second_fundamental_form(&p).unwrap() {
            assert!(h.is_zero());
        }
    }
}
