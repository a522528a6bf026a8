use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::quadrature::gauss_legendre;

/// Metric components `g_ij(u)` in chart coordinates.
pub type MetricFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// Product Gauss–Legendre rule on the tangential box at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    pub panels: usize,
    pub nodes: usize,
}

impl Default for BoundaryGrid {
    fn default() -> Self {
        Self { panels: 4, nodes: 8 }
    }
}

impl BoundaryGrid {
    pub fn refined(&self) -> Self {
        Self { panels: 2 * self.panels, ..*self }
    }
}

/// A coordinate chart `u = (x, u_1, …, u_{n−1})` over a box whose face
/// `x = 0` is the boundary. Coordinate `0` is the collar direction.
///
/// The metric callable must extend smoothly a little past the box (about
/// `2·step`); derivatives are central differences.
#[derive(Clone)]
pub struct MetricPatch {
    pub name: String,
    pub(crate) dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub(crate) metric: MetricFn,
    /// Finite-difference step for metric derivatives.
    pub step: f64,
    pub grid: BoundaryGrid,
}

impl fmt::Debug for MetricPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricPatch")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("step", &self.step)
            .field("grid", &self.grid)
            .finish()
    }
}

impl MetricPatch {
    pub fn new(name: impl Into<String>, lower: Vec<f64>, upper: Vec<f64>, metric: MetricFn) -> Result<Self, GeometryError> {
        let dim = lower.len();
        if dim == 0 || upper.len() != dim {
            return Err(GeometryError::DimensionMismatch(lower.len(), upper.len()));
        }
        if lower[0] != 0.0 || lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(GeometryError::Config("chart box must be nonempty with x starting at 0".into()));
        }
        Ok(Self { name: name.into(), dim, lower, upper, metric, step: 1e-3, grid: BoundaryGrid::default() })
    }

    /// Diagonal metric `diag(d_0(u), …, d_{n−1}(u))`.
    pub fn diagonal(
        name: impl Into<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        diag: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self, GeometryError> {
        let metric: MetricFn = Arc::new(move |u: &[f64]| {
            let d = diag(u);
            let n = d.len();
            (0..n).map(|i| (0..n).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect()
        });
        Self::new(name, lower, upper, metric)
    }

    pub fn with_grid(mut self, grid: BoundaryGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric_fn(&self) -> MetricFn {
        self.metric.clone()
    }

    pub fn metric(&self, u: &[f64]) -> Vec<Vec<f64>> {
        (self.metric)(u)
    }

    /// `g` as a matrix, or an error if it is not positive definite.
    pub(crate) fn checked_metric(&self, u: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let g = self.metric(u);
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| g[i][j]);
        if m.iter().any(|v| !v.is_finite()) || m.clone().cholesky().is_none() {
            return Err(GeometryError::NotPositiveDefinite(u.to_vec()));
        }
        Ok(m)
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim && u.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (a, b))| v >= a && v <= b)
    }

    fn shifted(u: &[f64], shifts: &[(usize, f64)]) -> Vec<f64> {
        let mut v = u.to_vec();
        for &(k, s) in shifts {
            v[k] += s;
        }
        v
    }

    /// `∂_m g_ij`, fourth-order central differences.
    pub fn first_derivatives(&self, u: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let h = self.step;
        (0..self.dim)
            .map(|m| {
                let f = |s: f64| self.metric(&Self::shifted(u, &[(m, s * h)]));
                let (fm2, fm1, fp1, fp2) = (f(-2.0), f(-1.0), f(1.0), f(2.0));
                mat_combine(&[(&fm2, 1.0), (&fm1, -8.0), (&fp1, 8.0), (&fp2, -1.0)], 1.0 / (12.0 * h))
            })
            .collect()
    }

    /// `∂_m ∂_p g_ij`, fourth-order central differences.
    pub fn second_derivatives(&self, u: &[f64]) -> Vec<Vec<Vec<Vec<f64>>>> {
        let h = self.step;
        let n = self.dim;
        let centre = self.metric(u);
        let mut out = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for m in 0..n {
            for p in m..n {
                let d = if m == p {
                    let f = |s: f64| self.metric(&Self::shifted(u, &[(m, s * h)]));
                    let (fm2, fm1, fp1, fp2) = (f(-2.0), f(-1.0), f(1.0), f(2.0));
                    mat_combine(
                        &[(&fm2, -1.0), (&fm1, 16.0), (&centre, -30.0), (&fp1, 16.0), (&fp2, -1.0)],
                        1.0 / (12.0 * h * h),
                    )
                } else {
                    let f = |a: f64, b: f64| self.metric(&Self::shifted(u, &[(m, a * h), (p, b * h)]));
                    let (a1, a2, a3, a4) = (f(1.0, 1.0), f(1.0, -1.0), f(-1.0, 1.0), f(-1.0, -1.0));
                    let (b1, b2, b3, b4) = (f(2.0, 2.0), f(2.0, -2.0), f(-2.0, 2.0), f(-2.0, -2.0));
                    // Richardson step on the four-point cross stencil.
                    mat_combine(
                        &[(&a1, 16.0), (&a2, -16.0), (&a3, -16.0), (&a4, 16.0), (&b1, -1.0), (&b2, 1.0), (&b3, 1.0), (&b4, -1.0)],
                        1.0 / (48.0 * h * h),
                    )
                };
                out[m][p] = d.clone();
                out[p][m] = d;
            }
        }
        out
    }

    /// Tangential block `g_∂M(x)` at `(x, u′)`.
    pub fn boundary_metric(&self, x: f64, tangential: &[f64]) -> Vec<Vec<f64>> {
        let mut u = vec![x];
        u.extend_from_slice(tangential);
        let g = self.metric(&u);
        g[1..].iter().map(|row| row[1..].to_vec()).collect()
    }

    /// Largest of `|g_00 − 1|` and `|g_0a|` over the boundary grid and a few
    /// depths.
    pub fn collar_defect(&self) -> f64 {
        let depths = [0.0, 0.25, 0.5].map(|f| self.lower[0] + f * (self.upper[0] - self.lower[0]));
        let mut worst = 0.0_f64;
        for (t, _) in self.boundary_nodes() {
            for &x in &depths {
                let mut u = vec![x];
                u.extend_from_slice(&t);
                let g = self.metric(&u);
                worst = worst.max((g[0][0] - 1.0).abs());
                for a in 1..self.dim {
                    worst = worst.max(g[0][a].abs());
                }
            }
        }
        worst
    }

    /// Tangential nodes and weights of the boundary rule (one node of
    /// weight 1 when `n = 1`).
    pub fn boundary_nodes(&self) -> Vec<(Vec<f64>, f64)> {
        let (gl_x, gl_w) = gauss_legendre(self.grid.nodes);
        let mut out: Vec<(Vec<f64>, f64)> = vec![(vec![], 1.0)];
        for k in 1..self.dim {
            let (a, b) = (self.lower[k], self.upper[k]);
            let width = (b - a) / self.grid.panels as f64;
            let mut axis = vec![];
            for p in 0..self.grid.panels {
                let c = a + (p as f64 + 0.5) * width;
                for (x, w) in gl_x.iter().zip(&gl_w) {
                    axis.push((c + 0.5 * width * x, 0.5 * width * w));
                }
            }
            out = out
                .into_iter()
                .flat_map(|(pt, w)| {
                    axis.iter().map(move |&(v, wv)| {
                        let mut p = pt.clone();
                        p.push(v);
                        (p, w * wv)
                    })
                })
                .collect();
        }
        out
    }

    /// `√det g_∂M(0)` at a tangential point.
    pub fn boundary_volume_density(&self, tangential: &[f64]) -> f64 {
        let b = self.boundary_metric(0.0, tangential);
        let m = self.dim - 1;
        if m == 0 {
            return 1.0;
        }
        DMatrix::from_fn(m, m, |i, j| b[i][j]).determinant().sqrt()
    }
}

pub(crate) fn mat_combine(terms: &[(&Vec<Vec<f64>>, f64)], scale: f64) -> Vec<Vec<f64>> {
    let n = terms[0].0.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    // Differences against the first entry keep constant
                    // components exactly zero.
                    let base = terms[0].0[i][j];
                    let mut acc = 0.0;
                    for (m, c) in terms {
                        acc += c * (m[i][j] - base);
                    }
                    acc * scale
                })
                .collect()
        })
        .collect()
}

/// The linear family `g_l = l g + (1 − l) g_0` between two collar charts on
/// the same box.
#[derive(Debug, Clone)]
pub struct DeformationFamily {
    pub g: MetricPatch,
    pub g0: MetricPatch,
}

impl DeformationFamily {
    pub fn new(g: MetricPatch, g0: MetricPatch) -> Result<Self, GeometryError> {
        if g.dim() != g0.dim() {
            return Err(GeometryError::DimensionMismatch(g.dim(), g0.dim()));
        }
        if g.lower != g0.lower || g.upper != g0.upper {
            return Err(GeometryError::Config("deformation endpoints must share a chart box".into()));
        }
        Ok(Self { g, g0 })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// `g_l` as a chart.
    pub fn at(&self, l: f64) -> MetricPatch {
        let (a, b) = (self.g.metric_fn(), self.g0.metric_fn());
        let metric: MetricFn = Arc::new(move |u: &[f64]| {
            let (ga, gb) = (a(u), b(u));
            ga.iter().zip(&gb).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| l * x + (1.0 - l) * y).collect()).collect()
        });
        MetricPatch { name: format!("{}@l={l}", self.g.name), metric, ..self.g.clone() }
    }

    /// `∂g_l/∂l = g − g_0`.
    pub fn derivative(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let (a, b) = (self.g.metric(u), self.g0.metric(u));
        a.iter().zip(&b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect()).collect()
    }

    /// Checks that both endpoints are collar charts inducing the same
    /// boundary metric, so that they share the unit normal on `∂M`.
    pub fn check_endpoints(&self, tol: f64) -> Result<(), GeometryError> {
        for p in [&self.g, &self.g0] {
            let defect = p.collar_defect();
            if defect > tol {
                return Err(GeometryError::NotCollar(defect));
            }
        }
        let mut worst = 0.0_f64;
        for (t, _) in self.g.boundary_nodes() {
            let (a, b) = (self.g.boundary_metric(0.0, &t), self.g0.boundary_metric(0.0, &t));
            for (ra, rb) in a.iter().zip(&b) {
                for (x, y) in ra.iter().zip(rb) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        if worst > tol {
            return Err(GeometryError::NormalMismatch(worst));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar_disc() -> MetricPatch {
        MetricPatch::diagonal("disc", vec![0.0, 0.0], vec![0.9, std::f64::consts::TAU], |u| vec![1.0, (1.0 - u[0]).powi(2)]).unwrap()
    }

    #[test]
    fn derivatives_of_polar_metric() {
        let p = polar_disc();
        let u = [0.3, 1.0];
        let d = p.first_derivatives(&u);
        assert!((d[0][1][1] + 2.0 * 0.7).abs() < 1e-10);
        assert_eq!(d[1][1][1], 0.0);
        let d2 = p.second_derivatives(&u);
        assert!((d2[0][0][1][1] - 2.0).abs() < 1e-8);
        assert!(d2[0][1][1][1].abs() < 1e-8);
    }

    #[test]
    fn boundary_rule_measures_the_circle() {
        let p = polar_disc();
        let total: f64 = p.boundary_nodes().iter().map(|(t, w)| w * p.boundary_volume_density(t)).sum();
        assert!((total - std::f64::consts::TAU).abs() < 1e-12);
        assert!(p.collar_defect() == 0.0);
    }

    #[test]
    fn family_interpolates_linearly() {
        let g = polar_disc();
        let g0 = MetricPatch::diagonal("flat", vec![0.0, 0.0], vec![0.9, std::f64::consts::TAU], |_| vec![1.0, 1.0]).unwrap();
        let fam = DeformationFamily::new(g, g0).unwrap();
        let m = fam.at(0.25).metric(&[0.5, 0.0]);
        assert!((m[1][1] - (0.25 * 0.25 + 0.75)).abs() < 1e-15);
        assert!((fam.derivative(&[0.5, 0.0])[1][1] + 0.75).abs() < 1e-15);
        fam.check_endpoints(1e-12).unwrap();
    }
}
