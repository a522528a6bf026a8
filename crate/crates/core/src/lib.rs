//! Torsion anomaly laboratory.

pub mod acceptance;
pub mod exterior;
pub mod geometry;
pub mod model;
pub mod quadrature;
pub mod report;
pub mod rtorsion;
pub mod scalar;
pub mod spectral;
