//! Exterior algebra over an oriented inner-product space, its bi-graded
//! square `Λ(E*) ⊗ Λ̂(E*)`, the two Clifford actions on `Λ(E*)`, the
//! supertrace and the Berezin integral.
//!
//! Basis vectors are indexed `0..n`. In boundary problems index `0` is the
//! inward unit normal `e_0`; indices `1..n` are tangent to the boundary.
//! Index sets are stored as bit masks.

mod berezin;
mod bigraded;
mod clifford;
mod form;
mod tensor;

pub use berezin::{Berezin, OddSign};
pub use bigraded::{BiGradedElement, Generator};
pub use clifford::{CliffordElement, Letter};
pub use form::ExteriorForm;
pub use tensor::{
    curvature_element, kulkarni_nomizu, normal_curvature_element, normal_curvature_prime, random_curvature_tensor,
    random_symmetric_matrix, CurvatureTensor, SecondFundamentalForm, TensorFile, TensorFileError,
};

use thiserror::Error;

/// Largest supported dimension (index sets live in a `u32`).
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension {0} is not supported (must be 1..={MAX_DIM})")]
    UnsupportedDimension(usize),
    #[error("element has a nonzero scalar part; split it off before exponentiating")]
    ScalarPart,
    #[error("element is not of bidegree ({0}, {1})")]
    WrongDegree(usize, usize),
}

pub(crate) fn check_dim(n: usize) -> Result<(), AlgebraError> {
    if n == 0 || n > MAX_DIM {
        Err(AlgebraError::UnsupportedDimension(n))
    } else {
        Ok(())
    }
}

pub(crate) fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Number of elements of `mask` strictly below `index`.
pub(crate) fn count_below(mask: u32, index: usize) -> u32 {
    (mask & ((1u32 << index) - 1)).count_ones()
}

/// Parity of the number of pairs `(x, y)` with `x ∈ a`, `y ∈ b`, `x > y`.
pub(crate) fn inversion_parity(a: u32, b: u32) -> bool {
    let mut count = 0u32;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        rest &= rest - 1;
        count += (a >> (y + 1)).count_ones();
    }
    count % 2 == 1
}
