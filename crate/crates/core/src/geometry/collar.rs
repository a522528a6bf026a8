use std::sync::Arc;

use nalgebra::DMatrix;

use super::{GeometryError, MetricFn, MetricPatch};

const BOUNDARY_MARGIN: f64 = 0.05;

/// Geodesic shooting in a raw chart.
#[derive(Clone)]
struct Shooter {
    patch: MetricPatch,
    step: f64,
}

impl Shooter {
    fn christoffel(&self, u: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let n = self.patch.dim();
        let g = self.patch.checked_metric(u)?;
        let ginv = g.try_inverse().ok_or_else(|| GeometryError::NotPositiveDefinite(u.to_vec()))?;
        let d = self.patch.first_derivatives(u);
        let mut gamma = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let v: f64 = (0..n).map(|l| ginv[(i, l)] * 0.5 * (d[j][l][k] + d[k][l][j] - d[l][j][k])).sum();
                    gamma[(i * n + j) * n + k] = v;
                    gamma[(i * n + k) * n + j] = v;
                }
            }
        }
        Ok(gamma)
    }

    fn rhs(&self, state: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let n = self.patch.dim();
        let (u, v) = state.split_at(n);
        // The raw metric is required to extend a little past x = 0.
        let inside = u.iter().zip(self.patch.lower.iter().zip(&self.patch.upper)).enumerate().all(|(k, (v, (a, b)))| {
            let margin = if k == 0 { BOUNDARY_MARGIN } else { 0.0 };
            *v >= a - margin && v <= b
        });
        if !inside {
            return Err(GeometryError::OutsideChart(u.to_vec()));
        }
        let gamma = self.christoffel(u)?;
        let mut out = v.to_vec();
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += gamma[(i * n + j) * n + k] * v[j] * v[k];
                }
            }
            out.push(-acc);
        }
        Ok(out)
    }

    /// Inward unit normal at the boundary point `(0, t)`:
    /// `ν = g^{−1} dx / |dx|`.
    fn normal(&self, t: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let mut u = vec![0.0];
        u.extend_from_slice(t);
        let g = self.patch.checked_metric(&u)?;
        let ginv = g.try_inverse().ok_or_else(|| GeometryError::NotPositiveDefinite(u.clone()))?;
        let norm = ginv[(0, 0)].sqrt();
        Ok((0..self.patch.dim()).map(|i| ginv[(i, 0)] / norm).collect())
    }

    /// `(γ(x), γ′(x))` for the unit-speed normal geodesic from `(0, t)`;
    /// negative `x` runs backwards.
    fn shoot(&self, t: &[f64], x: f64) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
        let n = self.patch.dim();
        let mut state = vec![0.0];
        state.extend_from_slice(t);
        state.extend(self.normal(t)?);
        let steps = (x.abs() / self.step).ceil().max(1.0) as usize;
        let h = x / steps as f64;
        if x != 0.0 {
            for _ in 0..steps {
                let k1 = self.rhs(&state)?;
                let s2: Vec<f64> = state.iter().zip(&k1).map(|(s, k)| s + 0.5 * h * k).collect();
                let k2 = self.rhs(&s2)?;
                let s3: Vec<f64> = state.iter().zip(&k2).map(|(s, k)| s + 0.5 * h * k).collect();
                let k3 = self.rhs(&s3)?;
                let s4: Vec<f64> = state.iter().zip(&k3).map(|(s, k)| s + h * k).collect();
                let k4 = self.rhs(&s4)?;
                for i in 0..2 * n {
                    state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        let (u, v) = state.split_at(n);
        Ok((u.to_vec(), v.to_vec()))
    }

    /// Pulled-back metric at collar coordinates `(x, t)`.
    fn collar_metric(&self, x: f64, t: &[f64]) -> Result<Vec<Vec<f64>>, GeometryError> {
        let n = self.patch.dim();
        let (p, v) = self.shoot(t, x)?;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jac[(i, 0)] = v[i];
        }
        let d = 1e-3;
        for a in 1..n {
            let at = |s: f64| -> Result<Vec<f64>, GeometryError> {
                let mut tt = t.to_vec();
                tt[a - 1] += s * d;
                Ok(self.shoot(&tt, x)?.0)
            };
            let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
            for i in 0..n {
                jac[(i, a)] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * d);
            }
        }
        let det = jac.determinant();
        // Positive at x = 0; a sign change means the normals have crossed.
        if det < 1e-10 {
            return Err(GeometryError::FocalPoint(x));
        }
        let g = self.patch.checked_metric(&p)?;
        let pulled = jac.transpose() * g * &jac;
        Ok((0..n).map(|i| (0..n).map(|j| pulled[(i, j)]).collect()).collect())
    }
}

/// Options for [`collar_normalize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarOptions {
    /// Largest depth of the new chart.
    pub depth: f64,
    /// RK4 step along the normal geodesics.
    pub step: f64,
}

impl Default for CollarOptions {
    fn default() -> Self {
        Self { depth: 0.5, step: 2e-3 }
    }
}

/// Re-parameterizes a chart by normal geodesics from `x = 0`: the new
/// coordinates are `(distance to ∂M, foot point)`, so that
/// `g = dx² + g_∂M(x)`. The input's boundary face is `{u_0 = 0}` with `u_0`
/// increasing inward.
///
/// The map is checked on the boundary grid at a few depths; geodesics
/// leaving the chart or a degenerate Jacobian are errors. The returned
/// metric shoots geodesics on demand (and returns NaN where it cannot).
/// The raw metric must be defined slightly below `u_0 = 0`.
pub fn collar_normalize(raw: &MetricPatch, options: CollarOptions) -> Result<MetricPatch, GeometryError> {
    let shooter = Shooter { patch: raw.clone(), step: options.step };
    let mut upper = raw.upper.clone();
    upper[0] = options.depth;
    let mut probe = raw.clone();
    probe.upper = upper.clone();
    for (t, _) in probe.boundary_nodes().into_iter().step_by(7) {
        for f in [0.5, 1.0] {
            shooter.collar_metric(f * options.depth, &t)?;
        }
    }
    let n = raw.dim();
    // Small negative x shoots backwards along the normal, which gives the
    // smooth extension central differences need.
    let metric: MetricFn =
        Arc::new(move |u: &[f64]| shooter.collar_metric(u[0], &u[1..]).unwrap_or_else(|_| vec![vec![f64::NAN; n]; n]));
    let mut out = MetricPatch::new(format!("{}-collar", raw.name), raw.lower.clone(), upper, metric)?;
    out.grid = raw.grid;
    Ok(out)
}
