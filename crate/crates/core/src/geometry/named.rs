use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{
    euler_difference_integral, phi_boundary_integral, phi_density, transgression_boundary_integral, transgression_density, AnomalyPrediction,
    BoundaryGrid, DeformationFamily, GeometryError, MetricPatch,
};
use crate::exterior::{Berezin, CurvatureTensor, SecondFundamentalForm, TensorFile};
use crate::quadrature::QuadratureSpec;

/// Boundary metric of a product collar `dx² + g_∂M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryMetric {
    /// Circle of the given length (`n = 2`, `χ = 0`).
    Circle { length: f64 },
    /// Round 2-sphere (`n = 3`, `χ = 2`).
    RoundSphere { radius: f64 },
    /// Flat torus with the given side lengths (`χ = 0`).
    FlatTorus { lengths: Vec<f64> },
}

impl Default for BoundaryMetric {
    fn default() -> Self {
        BoundaryMetric::RoundSphere { radius: 1.0 }
    }
}

fn default_length() -> f64 {
    1.0
}

fn default_cap() -> f64 {
    1.0
}

/// Entry of the geometry config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometrySpec {
    /// `[0, L]`; boundary two points.
    Interval {
        #[serde(default = "default_length")]
        length: f64,
    },
    /// Flat unit disc; `g_0` blends the polar metric into the product
    /// `dx² + dθ²` near the rim.
    FlatDisc,
    /// Spherical cap of polar radius `r_0 < π` on the unit sphere; `g_0`
    /// blends into `dx² + sin² r_0 dθ²` near the rim.
    CurvedCap {
        #[serde(default = "default_cap")]
        polar_radius: f64,
    },
    /// `[0, 1] × ∂M` near the boundary with a product metric.
    ProductCollar {
        #[serde(default)]
        boundary: BoundaryMetric,
    },
    /// Pointwise data from a tensor file: `(R, h)` at one boundary point,
    /// taken constant over a boundary of the given volume and along the
    /// whole deformation.
    TensorPoint { file: PathBuf, boundary_volume: f64, boundary_euler_characteristic: i64 },
}

impl GeometrySpec {
    pub fn from_name(name: &str) -> Result<Self, GeometryError> {
        Ok(match name {
            "interval" => GeometrySpec::Interval { length: 1.0 },
            "flat_disc" => GeometrySpec::FlatDisc,
            "curved_cap" => GeometrySpec::CurvedCap { polar_radius: 1.0 },
            "product_collar" => GeometrySpec::ProductCollar { boundary: BoundaryMetric::default() },
            other => return Err(GeometryError::UnknownGeometry(other.to_string())),
        })
    }

    pub fn build(&self, grid: BoundaryGrid) -> Result<Geometry, GeometryError> {
        match self {
            GeometrySpec::Interval { length } => interval(*length, grid),
            GeometrySpec::FlatDisc => flat_disc(grid),
            GeometrySpec::CurvedCap { polar_radius } => curved_cap(*polar_radius, grid),
            GeometrySpec::ProductCollar { boundary } => product_collar(boundary, grid),
            GeometrySpec::TensorPoint { file, boundary_volume, boundary_euler_characteristic } => {
                let text = std::fs::read_to_string(file).map_err(|e| GeometryError::Config(format!("{}: {e}", file.display())))?;
                let (r, h) = TensorFile::parse(&text).and_then(|t| t.tensors()).map_err(|e| GeometryError::Config(e.to_string()))?;
                Ok(Geometry {
                    name: format!("tensor_point({})", file.display()),
                    dim: r.dim(),
                    boundary: BoundaryData::Point { curvature: r, second_fundamental_form: h, volume: *boundary_volume },
                    boundary_euler_characteristic: *boundary_euler_characteristic,
                    stokes: None,
                })
            }
        }
    }
}

/// Region and closed form for the Stokes check `∫_M (e(g) − e(g_0)) = ∫_{∂M} i*ẽ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StokesData {
    /// `x`-range outside which `g = g_0`.
    pub x_range: (f64, f64),
    pub breakpoints: Vec<f64>,
    /// `∫_M (e(g) − e(g_0))` from Gauss–Bonnet.
    pub closed_form: f64,
}

#[derive(Debug, Clone)]
pub enum BoundaryData {
    Chart(DeformationFamily),
    Point { curvature: CurvatureTensor<f64>, second_fundamental_form: SecondFundamentalForm<f64>, volume: f64 },
}

/// A test geometry: its collar pair `(g, g_0)` and `χ(∂M)` as supplied.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub name: String,
    pub dim: usize,
    pub boundary: BoundaryData,
    pub boundary_euler_characteristic: i64,
    pub stokes: Option<StokesData>,
}

impl Geometry {
    pub fn family(&self) -> Option<&DeformationFamily> {
        match &self.boundary {
            BoundaryData::Chart(f) => Some(f),
            BoundaryData::Point { .. } => None,
        }
    }

    pub fn transgression(&self, spec: &QuadratureSpec, berezin: &Berezin) -> Result<f64, GeometryError> {
        match &self.boundary {
            BoundaryData::Chart(f) => transgression_boundary_integral(f, spec, berezin),
            BoundaryData::Point { curvature, second_fundamental_form, volume } => {
                Ok(volume * transgression_density(curvature, second_fundamental_form, berezin)? + 0.0)
            }
        }
    }

    pub fn phi(&self, spec: &QuadratureSpec, berezin: &Berezin) -> Result<f64, GeometryError> {
        match &self.boundary {
            BoundaryData::Chart(f) => phi_boundary_integral(f, spec, berezin),
            BoundaryData::Point { curvature, second_fundamental_form, volume } => {
                Ok(volume * phi_density(curvature, second_fundamental_form, berezin)? + 0.0)
            }
        }
    }

    /// `∫_M (e(g) − e(g_0))` by interior quadrature, when the geometry
    /// supports the check.
    pub fn euler_difference(&self, spec: &QuadratureSpec, berezin: &Berezin) -> Result<Option<f64>, GeometryError> {
        match (&self.boundary, &self.stokes) {
            (BoundaryData::Chart(f), Some(s)) => Ok(Some(euler_difference_integral(f, s.x_range, &s.breakpoints, spec, berezin)?)),
            _ => Ok(None),
        }
    }
}

/// The anomaly formula's right-hand side for `geometry` with `rank ρ`.
pub fn predict_anomaly(
    geometry: &Geometry,
    rank: u32,
    constant_c: f64,
    spec: &QuadratureSpec,
    berezin: &Berezin,
) -> Result<AnomalyPrediction, GeometryError> {
    let transgression = geometry.transgression(spec, berezin)?;
    let phi = geometry.phi(spec, berezin)?;
    Ok(AnomalyPrediction::assemble(rank, geometry.boundary_euler_characteristic, transgression, phi, constant_c))
}

/// `C^∞` step: 0 for `s ≤ 0`, 1 for `s ≥ 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// Warping function of `g_0 = dr² + f_0(r)² dθ²`: equal to `f` for
/// `r ≤ a`, to `f(R)` for `r ≥ b`.
fn blended(f: impl Fn(f64) -> f64, r: f64, rim: f64, a: f64, b: f64) -> f64 {
    let beta = smooth_step((r - a) / (b - a));
    (1.0 - beta) * f(r) + beta * f(rim)
}

fn rotational(name: &str, rim: f64, f: fn(f64) -> f64, grid: BoundaryGrid, closed_form: f64) -> Result<Geometry, GeometryError> {
    let (a, b) = (0.3 * rim, 0.8 * rim);
    let depth = rim - 0.5 * a;
    let g = MetricPatch::diagonal(name, vec![0.0, 0.0], vec![depth, TAU], move |u| vec![1.0, f(rim - u[0]).powi(2)])?.with_grid(grid);
    let g0 = MetricPatch::diagonal(format!("{name}_g0"), vec![0.0, 0.0], vec![depth, TAU], move |u| {
        vec![1.0, blended(f, rim - u[0], rim, a, b).powi(2)]
    })?
    .with_grid(grid);
    Ok(Geometry {
        name: name.to_string(),
        dim: 2,
        boundary: BoundaryData::Chart(DeformationFamily::new(g, g0)?),
        boundary_euler_characteristic: 0,
        stokes: Some(StokesData { x_range: (0.0, depth), breakpoints: vec![rim - b, rim - a], closed_form }),
    })
}

/// Flat unit disc in collar coordinates `x = 1 − r`: `g = dx² + (1 − x)² dθ²`.
/// `∫_M e(g) = 0` and `∫_M e(g_0) = 1`.
pub fn flat_disc(grid: BoundaryGrid) -> Result<Geometry, GeometryError> {
    rotational("flat_disc", 1.0, |r| r, grid, -1.0)
}

/// Cap of polar radius `r_0` on the unit sphere: `g = dx² + sin²(r_0 − x) dθ²`.
/// `∫_M e(g) = 1 − cos r_0` and `∫_M e(g_0) = 1`.
pub fn curved_cap(polar_radius: f64, grid: BoundaryGrid) -> Result<Geometry, GeometryError> {
    if !(polar_radius > 0.0 && polar_radius < PI) {
        return Err(GeometryError::Config(format!("polar radius {polar_radius} outside (0, π)")));
    }
    rotational("curved_cap", polar_radius, f64::sin, grid, -polar_radius.cos())
}

/// `[0, L]` with `g = dx²`; the chart sees one end, `χ(∂M) = 2` counts both.
pub fn interval(length: f64, grid: BoundaryGrid) -> Result<Geometry, GeometryError> {
    if !(length > 0.0) {
        return Err(GeometryError::Config(format!("interval length {length} must be positive")));
    }
    let g = MetricPatch::diagonal("interval", vec![0.0], vec![0.5 * length], |_| vec![1.0])?.with_grid(grid);
    Ok(Geometry {
        name: "interval".into(),
        dim: 1,
        boundary: BoundaryData::Chart(DeformationFamily::new(g.clone(), g)?),
        boundary_euler_characteristic: 2,
        stokes: None,
    })
}

pub fn product_collar(boundary: &BoundaryMetric, grid: BoundaryGrid) -> Result<Geometry, GeometryError> {
    let (g, chi) = match boundary.clone() {
        BoundaryMetric::Circle { length } => {
            (MetricPatch::diagonal("product_collar", vec![0.0, 0.0], vec![1.0, length], |_| vec![1.0, 1.0])?, 0)
        }
        BoundaryMetric::RoundSphere { radius } => {
            let a2 = radius * radius;
            (
                MetricPatch::diagonal("product_collar", vec![0.0, 0.0, 0.0], vec![1.0, PI, TAU], move |u| {
                    vec![1.0, a2, a2 * u[1].sin().powi(2)]
                })?,
                2,
            )
        }
        BoundaryMetric::FlatTorus { lengths } => {
            let mut upper = vec![1.0];
            upper.extend(lengths.iter().copied());
            let n = upper.len();
            (MetricPatch::diagonal("product_collar", vec![0.0; n], upper, move |_| vec![1.0; n])?, 0)
        }
    };
    let g = g.with_grid(grid);
    Ok(Geometry {
        name: "product_collar".into(),
        dim: g.dim(),
        boundary: BoundaryData::Chart(DeformationFamily::new(g.clone(), g)?),
        boundary_euler_characteristic: chi,
        stokes: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_is_monotone_and_saturates() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(1.5), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        let mut last = 0.0;
        for k in 1..100 {
            let v = smooth_step(k as f64 / 100.0);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn names_resolve() {
        for n in ["interval", "flat_disc", "curved_cap", "product_collar"] {
            GeometrySpec::from_name(n).unwrap().build(BoundaryGrid::default()).unwrap();
        }
        assert!(GeometrySpec::from_name("klein_bottle").is_err());
    }

    #[test]
    fn config_entries_parse() {
        let g: GeometrySpec = serde_json::from_str(r#"{"kind": "curved_cap", "polar_radius": 0.7}"#).unwrap();
        assert_eq!(g, GeometrySpec::CurvedCap { polar_radius: 0.7 });
        let g: GeometrySpec = serde_json::from_str(r#"{"kind": "product_collar", "boundary": {"kind": "circle", "length": 2.0}}"#).unwrap();
        assert!(matches!(g, GeometrySpec::ProductCollar { .. }));
    }
}
