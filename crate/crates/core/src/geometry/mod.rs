//! Riemannian geometry of a chart near the boundary `{x = 0}`: curvature,
//! second fundamental form, Euler form, the linear deformation
//! `g_l = l g + (1 − l) g_0`, the transgression and `φ` boundary integrals,
//! and the assembled anomaly prediction.
//!
//! Frames are orthonormal with `e_0` the inward unit normal.

mod collar;
mod curvature;
mod forms;
mod named;
mod patch;

pub use collar::{collar_normalize, CollarOptions};
pub use curvature::{curvature_at, second_fundamental_form, second_fundamental_form_at, CurvatureData};
pub use forms::{
    euler_density, euler_difference_integral, euler_form, hodge_star_variation, phi_boundary_integral, phi_density,
    transgression_boundary_integral, transgression_density, AnomalyPrediction, HodgeStarVariation,
};
pub use named::{
    curved_cap, flat_disc, interval, predict_anomaly, product_collar, smooth_step, BoundaryData, BoundaryMetric, Geometry, GeometrySpec,
    StokesData,
};
pub use patch::{BoundaryGrid, DeformationFamily, MetricFn, MetricPatch};

use thiserror::Error;

use crate::exterior::AlgebraError;
use crate::quadrature::QuadratureError;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("normal geodesic left the chart at {0:?}")]
    OutsideChart(Vec<f64>),
    #[error("focal point inside the collar at depth {0}")]
    FocalPoint(f64),
    #[error("chart is not collar-normalized (defect {0:e})")]
    NotCollar(f64),
    #[error("deformation endpoints induce different boundary metrics (difference {0:e})")]
    NormalMismatch(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unknown geometry {0:?}")]
    UnknownGeometry(String),
    #[error("geometry config: {0}")]
    Config(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
