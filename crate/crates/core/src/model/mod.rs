//! The half-space model problem: scalar Dirichlet/Neumann heat kernels,
//! the algebra-valued kernels `K_0`, `K_1`, the two-term Duhamel solution,
//! its diagonal, the profile `f(x)` and the constant `c`.
//!
//! Points are `(x, y)` with `x ≥ 0` the normal coordinate; in the exterior
//! algebra the normal direction is index `0`.

mod constant;
mod heat;
mod kernel;
mod operator;
mod residual;

pub use constant::{constant_c, diagonal_profile, f_of_x, f_of_x_direct, f_of_x_erfc, ConstantC, FRoute};
pub use heat::{free_gaussian, half_line_gaussian_product, k_dirichlet, k_neumann, Profile};
pub use kernel::{
    assemble_k0, assemble_k1, convolve, convolve_brute_force, diagonal_restriction, duhamel_terminates, model_solution,
    scalar_convolution, scalar_convolution_erfc, Component, ConvolutionRoute, KernelKind, ModelKernel, OperatorTemplate,
};
pub use operator::KernelValue;
pub use residual::{boundary_residuals, initial_condition_error, pde_residual, FiniteDifference};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exterior::AlgebraError;
use crate::quadrature::QuadratureError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpacePoint {
    pub x: f64,
    pub y: Vec<f64>,
}

impl HalfSpacePoint {
    pub fn new(x: f64, y: Vec<f64>) -> Result<Self, ModelError> {
        if !(x >= 0.0) {
            return Err(ModelError::OutsideHalfSpace(x));
        }
        Ok(Self { x, y })
    }

    /// Ambient dimension `n` (one normal plus `n − 1` tangential coordinates).
    pub fn dim(&self) -> usize {
        self.y.len() + 1
    }

    pub fn tangential_distance_sq(&self, other: &HalfSpacePoint) -> f64 {
        self.y.iter().zip(&other.y).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub(crate) fn shifted(&self, coordinate: usize, h: f64) -> HalfSpacePoint {
        let mut p = self.clone();
        if coordinate == 0 {
            p.x += h;
        } else {
            p.y[coordinate - 1] += h;
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    #[default]
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("point lies outside the half-space (x = {0})")]
    OutsideHalfSpace(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("curvature element must be of bidegree (2,2)")]
    WrongDegree,
    #[error("unsupported convolution: {0}")]
    Unsupported(String),
    #[error("quadrature routes disagree: {0} vs {1}")]
    Disagreement(f64, f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
