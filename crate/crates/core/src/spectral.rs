//! Zeta-regularized torsion for explicitly solvable spectra.
//!
//! `ζ_T(s) = Σ_p p(−1)^{p+1} ζ_p(s)` and `ln T = ζ_T′(0)`, with no factor ½.
//! The Mellin integrand is `F(t) = −Tr_s(N e^{−tΔ} P^⊥)`, so that
//! `Γ(s) ζ_T(s) = ∫_0^∞ t^{s−1} F(t) dt`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::model::BoundaryCondition;
use crate::quadrature::{gauss_kronrod, Estimate, QuadratureError, QuadratureSpec};
use crate::rtorsion::{TorsionConvention, TorsionValue};
use crate::scalar::pairwise_sum;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// `ζ_R′(0) = −½ ln 2π`.
const ZETA_PRIME_ZERO: f64 = -0.918_938_533_204_672_8;
const MAX_TERMS: usize = 20_000_000;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("length must be positive, got {0}")]
    InvalidLength(f64),
    #[error("time must be positive, got {0}")]
    InvalidTime(f64),
    #[error("spectrum has no closed form; supply small-t asymptotics")]
    MissingAsymptotics,
    #[error("not convergent: {0}")]
    NonConvergent(String),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("torsion convention mismatch: {0}")]
    Convention(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub lambda: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeriesKind {
    /// `λ_k = scale·k²`, `k ≥ 1`, each with the given multiplicity.
    Squares { scale: f64, multiplicity: u32 },
    /// Explicit positive eigenvalues, ascending.
    Finite { eigenvalues: Vec<Eigenvalue> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub degree: usize,
    pub kind: SeriesKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroMode {
    pub degree: usize,
    pub multiplicity: u32,
}

/// Spectrum of the form Laplacians, one or more series per degree.
/// Zero modes are kept apart: they enter `P^⊥` and never `ζ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpectrum {
    pub manifold: String,
    pub boundary_condition: Option<BoundaryCondition>,
    pub scale: f64,
    pub zero_modes: Vec<ZeroMode>,
    pub series: Vec<Series>,
}

fn weight(degree: usize) -> f64 {
    let p = degree as f64;
    if degree % 2 == 1 {
        p
    } else {
        -p
    }
}

impl ModelSpectrum {
    /// Explicit finite spectrum; zero entries become zero modes.
    pub fn finite(manifold: &str, entries: &[(usize, f64, u32)]) -> Result<Self, SpectralError> {
        let max_degree = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let mut zero_modes = Vec::new();
        let mut series = Vec::new();
        for degree in 0..=max_degree {
            let mut eigenvalues = Vec::new();
            let mut zeros = 0;
            for &(d, lambda, multiplicity) in entries.iter().filter(|e| e.0 == degree) {
                if !(lambda >= 0.0 && lambda.is_finite()) || multiplicity == 0 {
                    return Err(SpectralError::InvalidSpectrum(format!("entry ({d}, {lambda}, {multiplicity})")));
                }
                if lambda == 0.0 {
                    zeros += multiplicity;
                } else {
                    eigenvalues.push(Eigenvalue { lambda, multiplicity });
                }
            }
            if zeros > 0 {
                zero_modes.push(ZeroMode { degree, multiplicity: zeros });
            }
            if !eigenvalues.is_empty() {
                eigenvalues.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
                series.push(Series { degree, kind: SeriesKind::Finite { eigenvalues } });
            }
        }
        Ok(Self { manifold: manifold.into(), boundary_condition: None, scale: 1.0, zero_modes, series })
    }

    /// Tensor with the trivial representation of rank `rank`.
    pub fn with_rank(mut self, rank: u32) -> Self {
        for z in &mut self.zero_modes {
            z.multiplicity *= rank;
        }
        for s in &mut self.series {
            match &mut s.kind {
                SeriesKind::Squares { multiplicity, .. } => *multiplicity *= rank,
                SeriesKind::Finite { eigenvalues } => eigenvalues.iter_mut().for_each(|e| e.multiplicity *= rank),
            }
        }
        self
    }

    /// Whether every series has an arithmetic closed form.
    pub fn is_arithmetic(&self) -> bool {
        self.series.iter().all(|s| matches!(s.kind, SeriesKind::Squares { .. }))
    }

    /// Smallest `count` positive eigenvalues in `degree`, ascending.
    pub fn eigenvalues(&self, degree: usize, count: usize) -> Vec<Eigenvalue> {
        let mut out = Vec::new();
        for s in self.series.iter().filter(|s| s.degree == degree) {
            match &s.kind {
                SeriesKind::Squares { scale, multiplicity } => {
                    out.extend((1..=count).map(|k| Eigenvalue { lambda: scale * (k * k) as f64, multiplicity: *multiplicity }))
                }
                SeriesKind::Finite { eigenvalues } => out.extend(eigenvalues.iter().take(count).copied()),
            }
        }
        out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        out.truncate(count);
        out
    }

    /// CSV with header `lambda,multiplicity,degree`: zero modes, then the
    /// first `count` positive eigenvalues of every degree.
    pub fn to_csv(&self, count: usize) -> String {
        let mut out = String::from("lambda,multiplicity,degree\n");
        let max_degree = self.series.iter().map(|s| s.degree).chain(self.zero_modes.iter().map(|z| z.degree)).max().unwrap_or(0);
        for degree in 0..=max_degree {
            for z in self.zero_modes.iter().filter(|z| z.degree == degree) {
                let _ = writeln!(out, "0,{},{}", z.multiplicity, degree);
            }
            for e in self.eigenvalues(degree, count) {
                let _ = writeln!(out, "{:.17e},{},{}", e.lambda, e.multiplicity, degree);
            }
        }
        out
    }

    /// Small-t expansion of `F(t)` derived from the series: for `scale·k²`,
    /// `Σ_{k≥1} e^{−t·scale·k²} = ½√(π/(t·scale)) − ½ + O(e^{−π²/(t·scale)})`;
    /// finite series contribute their signed count. Exact, not fitted.
    pub fn derived_asymptotics(&self) -> HeatAsymptotics {
        let mut half = 0.0;
        let mut constant = 0.0;
        for s in &self.series {
            let w = weight(s.degree);
            match &s.kind {
                SeriesKind::Squares { scale, multiplicity } => {
                    let m = w * *multiplicity as f64;
                    half += m * 0.5 * (PI / scale).sqrt();
                    constant -= 0.5 * m;
                }
                SeriesKind::Finite { eigenvalues } => {
                    constant += w * eigenvalues.iter().map(|e| e.multiplicity as f64).sum::<f64>();
                }
            }
        }
        HeatAsymptotics { terms: vec![(-0.5, half), (0.0, constant)] }
    }
}

/// `[0, L]`: absolute is Neumann on functions and Dirichlet on 1-forms;
/// relative swaps them. Both give `(kπ/L)²` once in each degree.
pub fn interval_spectrum(length: f64, bc: BoundaryCondition) -> Result<ModelSpectrum, SpectralError> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(SpectralError::InvalidLength(length));
    }
    let scale = (PI / length).powi(2);
    let zero_degree = match bc {
        BoundaryCondition::Absolute => 0,
        BoundaryCondition::Relative => 1,
    };
    Ok(ModelSpectrum {
        manifold: "interval".into(),
        boundary_condition: Some(bc),
        scale: length,
        zero_modes: vec![ZeroMode { degree: zero_degree, multiplicity: 1 }],
        series: (0..2).map(|degree| Series { degree, kind: SeriesKind::Squares { scale, multiplicity: 1 } }).collect(),
    })
}

/// Circle of length `L`: `(2πk/L)²` twice, one zero mode per degree.
pub fn circle_spectrum(length: f64) -> Result<ModelSpectrum, SpectralError> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(SpectralError::InvalidLength(length));
    }
    let scale = (2.0 * PI / length).powi(2);
    Ok(ModelSpectrum {
        manifold: "circle".into(),
        boundary_condition: None,
        scale: length,
        zero_modes: (0..2).map(|degree| ZeroMode { degree, multiplicity: 1 }).collect(),
        series: (0..2).map(|degree| Series { degree, kind: SeriesKind::Squares { scale, multiplicity: 2 } }).collect(),
    })
}

/// `F(t) ~ Σ a_j t^{α_j}` as `t → 0`, with every `α_j ≤ 0` listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatAsymptotics {
    /// `(α_j, a_j)`.
    pub terms: Vec<(f64, f64)>,
}

impl HeatAsymptotics {
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|(a, c)| c * t.powf(*a)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certified {
    pub value: f64,
    pub error: f64,
}

/// `Σ_{k≥1} e^{−t·scale·k²}`, truncated where the terms fall below 1e-18 of the first.
fn squares_sum(scale: f64, t: f64) -> Result<f64, SpectralError> {
    let ta = t * scale;
    let count = (1.0 + 42.0 / ta).sqrt().ceil();
    if count > MAX_TERMS as f64 {
        return Err(SpectralError::NonConvergent(format!("{count:e} terms needed at t = {t:e}")));
    }
    let count = count as usize;
    let chunks: Vec<f64> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let terms: Vec<f64> = (c * CHUNK + 1..=((c + 1) * CHUNK).min(count)).map(|k| (-ta * (k * k) as f64).exp()).collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok(pairwise_sum(&chunks))
}

fn series_sums(spec: &ModelSpectrum, t: f64) -> Result<Vec<f64>, SpectralError> {
    if !(t > 0.0) {
        return Err(SpectralError::InvalidTime(t));
    }
    spec.series
        .iter()
        .map(|s| match &s.kind {
            SeriesKind::Squares { scale, multiplicity } => Ok(*multiplicity as f64 * squares_sum(*scale, t)?),
            SeriesKind::Finite { eigenvalues } => {
                let v: Vec<f64> = eigenvalues.iter().map(|e| e.multiplicity as f64 * (-t * e.lambda).exp()).collect();
                Ok(pairwise_sum(&v))
            }
        })
        .collect()
}

/// `Tr_s(N e^{−tΔ} P^⊥) = Σ_p p(−1)^p Σ_{λ>0} mult·e^{−tλ}`.
pub fn number_operator_supertrace(spec: &ModelSpectrum, t: f64) -> Result<f64, SpectralError> {
    let sums = series_sums(spec, t)?;
    let v: Vec<f64> = spec.series.iter().zip(&sums).map(|(s, v)| -weight(s.degree) * v).collect();
    Ok(pairwise_sum(&v))
}

/// `Tr e^{−tΔ_p}` including zero modes.
pub fn heat_trace(spec: &ModelSpectrum, degree: usize, t: f64) -> Result<f64, SpectralError> {
    let sums = series_sums(spec, t)?;
    let zeros: u32 = spec.zero_modes.iter().filter(|z| z.degree == degree).map(|z| z.multiplicity).sum();
    let v: Vec<f64> = spec.series.iter().zip(&sums).filter(|(s, _)| s.degree == degree).map(|(_, v)| *v).collect();
    Ok(zeros as f64 + pairwise_sum(&v))
}

/// Riemann zeta for real `s > 1` (Euler–Maclaurin, N = 12, six Bernoulli terms).
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s > 1.0, "riemann_zeta needs s > 1");
    const B: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    let n = 12.0_f64;
    let head: Vec<f64> = (1..12).map(|k| (k as f64).powf(-s)).collect();
    let mut sum = pairwise_sum(&head) + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut rising = s;
    let mut factorial = 2.0;
    for (j, b) in B.iter().enumerate() {
        let j = j + 1;
        sum += b / factorial * rising * n.powf(-s - 2.0 * j as f64 + 1.0);
        rising *= (s + 2.0 * j as f64 - 1.0) * (s + 2.0 * j as f64);
        factorial *= ((2 * j + 1) * (2 * j + 2)) as f64;
    }
    sum
}

/// `ζ_T(s)` for `s > ½`.
pub fn zeta_torsion_at(spec: &ModelSpectrum, s: f64) -> f64 {
    spec.series
        .iter()
        .map(|series| {
            let w = weight(series.degree);
            match &series.kind {
                SeriesKind::Squares { scale, multiplicity } => w * *multiplicity as f64 * scale.powf(-s) * riemann_zeta(2.0 * s),
                SeriesKind::Finite { eigenvalues } => w * eigenvalues.iter().map(|e| e.multiplicity as f64 * e.lambda.powf(-s)).sum::<f64>(),
            }
        })
        .sum()
}

/// `ln T = ζ_T′(0)` in closed form: `Σ_k (a k²)^{−s}` has derivative
/// `½ ln a + 2ζ_R′(0)` at 0, and a finite eigenvalue contributes `−ln λ`.
pub fn zeta_torsion(spec: &ModelSpectrum) -> f64 {
    let v: Vec<f64> = spec
        .series
        .iter()
        .map(|series| {
            let w = weight(series.degree);
            match &series.kind {
                SeriesKind::Squares { scale, multiplicity } => w * *multiplicity as f64 * (0.5 * scale.ln() + 2.0 * ZETA_PRIME_ZERO),
                SeriesKind::Finite { eigenvalues } => {
                    w * -eigenvalues.iter().map(|e| e.multiplicity as f64 * e.lambda.ln()).sum::<f64>()
                }
            }
        })
        .collect();
    pairwise_sum(&v) + 0.0
}

fn mellin_integrand(spec: &ModelSpectrum, t: f64) -> f64 {
    number_operator_supertrace(spec, t).map(|v| -v).unwrap_or(f64::NAN)
}

/// `ζ_T′(0)` from the split Mellin integral
/// `ζ_T′(0) = γ a_0 + Σ_{α≠0} a_α/α + ∫_0^1 (F − Σ a t^α)/t + ∫_1^∞ F/t`.
/// The two integrals run over dyadic panels until the integrand is below
/// the tolerance; the first panel not integrated is added to the error.
pub fn zeta_torsion_split(spec: &ModelSpectrum, asymptotics: &HeatAsymptotics, qspec: &QuadratureSpec) -> Result<Certified, SpectralError> {
    qspec.validate()?;
    if let Some(&(a, _)) = asymptotics.terms.iter().find(|(a, _)| *a > 0.0) {
        return Err(SpectralError::InvalidSpectrum(format!("asymptotic exponent {a} > 0 is not needed")));
    }
    let panel_tol = QuadratureSpec { rel_tol: qspec.rel_tol.max(1e-13), ..qspec.inner(0.05) };
    let small = |t: f64, bound: f64| bound <= (1e-3 * qspec.abs_tol).max(1e-13 * asymptotics.eval(t).abs());

    let mut total = Estimate::zero();
    let mut quiet = 0;
    let mut growing = 0;
    let mut previous = f64::INFINITY;
    let mut hi = 1.0_f64;
    for j in 0.. {
        if j > 60 {
            return Err(SpectralError::NonConvergent("small-t remainder does not vanish; check the asymptotics".into()));
        }
        let lo = hi / 2.0;
        let remainder = (mellin_integrand(spec, lo) - asymptotics.eval(lo)).abs();
        if !remainder.is_finite() {
            return Err(SpectralError::NonConvergent(format!("heat trace not computable at t = {lo:e}")));
        }
        if small(lo, remainder) {
            quiet += 1;
            if quiet >= 3 && j >= 3 {
                total.error += remainder;
                break;
            }
        } else {
            quiet = 0;
        }
        growing = if remainder > previous && !small(lo, remainder) { growing + 1 } else { 0 };
        if growing >= 3 && j >= 8 {
            return Err(SpectralError::NonConvergent(format!("small-t remainder grows ({remainder:e} at t = {lo:e}); check the asymptotics")));
        }
        previous = remainder;
        // F − Σ a t^α cancels to about 1e-16·|Σ a t^α|; ask for no more than that.
        let noise = 64.0 * f64::EPSILON * asymptotics.eval(lo).abs() * std::f64::consts::LN_2;
        let tol = QuadratureSpec { abs_tol: panel_tol.abs_tol.max(noise), ..panel_tol };
        let est = gauss_kronrod(|t| (mellin_integrand(spec, t) - asymptotics.eval(t)) / t, lo, hi, &[], &tol)?;
        total = total.add(est);
        hi = lo;
    }

    let mut lo = 1.0_f64;
    for j in 0.. {
        if j > 60 {
            return Err(SpectralError::NonConvergent("large-t tail does not decay".into()));
        }
        let value = mellin_integrand(spec, lo).abs();
        if value <= 1e-3 * qspec.abs_tol {
            total.error += value;
            break;
        }
        let est = gauss_kronrod(|t| mellin_integrand(spec, t) / t, lo, 2.0 * lo, &[], &panel_tol)?;
        total = total.add(est);
        lo *= 2.0;
    }

    let explicit: f64 = asymptotics.terms.iter().map(|&(a, c)| if a == 0.0 { EULER_GAMMA * c } else { c / a }).sum();
    let value = explicit + total.value;
    if total.error > qspec.abs_tol.max(qspec.rel_tol * value.abs()) * 100.0 {
        return Err(QuadratureError::ToleranceNotMet { value, error: total.error, requested: qspec.abs_tol }.into());
    }
    Ok(Certified { value, error: total.error })
}

/// `∫_0^{t_max} t^{s−1} F(t) dt`, approximating `Γ(s) ζ_T(s)`.
pub fn mellin_transform(spec: &ModelSpectrum, s: f64, t_max: f64, qspec: &QuadratureSpec) -> Result<Estimate, SpectralError> {
    let mut breaks = vec![];
    let mut b = 1.0;
    while b < t_max {
        breaks.push(b);
        b *= 2.0;
    }
    Ok(gauss_kronrod(|t| t.powf(s - 1.0) * mellin_integrand(spec, t), 0.0, t_max, &breaks, qspec)?)
}

/// `ln T − ln τ` for the interval, both in the unhalved convention.
pub fn spectral_anomaly(length: f64, bc: BoundaryCondition, rank: u32, tau: &TorsionValue) -> Result<f64, SpectralError> {
    if tau.convention != TorsionConvention::Unhalved {
        return Err(SpectralError::Convention(format!("{:?} torsion against the unhalved ζ_T", tau.convention)));
    }
    let ln_t = zeta_torsion(&interval_spectrum(length, bc)?.with_rank(rank));
    Ok(ln_t - tau.ln_tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn riemann_zeta_even_values() {
        assert_abs_diff_eq!(riemann_zeta(2.0), PI * PI / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(riemann_zeta(4.0), PI.powi(4) / 90.0, epsilon = 1e-14);
        assert_abs_diff_eq!(riemann_zeta(1.5), 2.612_375_348_685_488, epsilon = 1e-13);
    }

    #[test]
    fn interval_first_eigenvalues_and_zero_modes() {
        let s = interval_spectrum(1.0, BoundaryCondition::Absolute).unwrap();
        let ev: Vec<f64> = s.eigenvalues(0, 3).iter().map(|e| e.lambda).collect();
        for (k, v) in ev.iter().enumerate() {
            assert_abs_diff_eq!(*v, ((k + 1) as f64 * PI).powi(2), epsilon = 1e-12);
        }
        assert_eq!(s.zero_modes, vec![ZeroMode { degree: 0, multiplicity: 1 }]);
        let r = interval_spectrum(1.0, BoundaryCondition::Relative).unwrap();
        assert_eq!(r.zero_modes, vec![ZeroMode { degree: 1, multiplicity: 1 }]);
        assert!(interval_spectrum(0.0, BoundaryCondition::Absolute).is_err());
    }

    #[test]
    fn doubling_the_length_quarters_the_spectrum() {
        let a = interval_spectrum(0.7, BoundaryCondition::Absolute).unwrap();
        let b = interval_spectrum(1.4, BoundaryCondition::Absolute).unwrap();
        for p in 0..2 {
            for (x, y) in a.eigenvalues(p, 10).iter().zip(b.eigenvalues(p, 10)) {
                assert_abs_diff_eq!(x.lambda / 4.0, y.lambda, epsilon = 1e-12 * x.lambda);
            }
        }
    }

    #[test]
    fn interval_closed_form() {
        for l in [0.25, 1.0, 3.0] {
            for bc in [BoundaryCondition::Absolute, BoundaryCondition::Relative] {
                assert_abs_diff_eq!(zeta_torsion(&interval_spectrum(l, bc).unwrap()), -(2.0 * l).ln(), epsilon = 1e-14);
            }
        }
        assert_eq!(zeta_torsion(&ModelSpectrum::finite("empty", &[(0, 0.0, 1)]).unwrap()), 0.0);
    }

    #[test]
    fn supertrace_is_the_signed_dirichlet_sum() {
        let s = interval_spectrum(1.0, BoundaryCondition::Absolute).unwrap();
        let t = 0.05;
        let direct: f64 = (1..200).map(|k| -(-t * (k as f64 * PI).powi(2)).exp()).sum();
        assert_abs_diff_eq!(number_operator_supertrace(&s, t).unwrap(), direct, epsilon = 1e-15);
        assert!(number_operator_supertrace(&s, 200.0).unwrap().abs() < 1e-300);
        assert!(number_operator_supertrace(&s, 0.0).is_err());
    }

    #[test]
    fn neumann_heat_trace_small_time() {
        let s = interval_spectrum(1.0, BoundaryCondition::Absolute).unwrap();
        let t = 1e-3;
        let exact = 1.0 / (4.0 * PI * t).sqrt() + 0.5;
        assert!((heat_trace(&s, 0, t).unwrap() - exact).abs() < 1e-4 * exact);
    }

    #[test]
    fn finite_spectrum_closed_form_and_split_route_agree() {
        let s = ModelSpectrum::finite("toy", &[(0, 0.0, 1), (0, 2.0, 1), (1, 2.0, 1), (1, 5.0, 2), (2, 5.0, 2)]).unwrap();
        let closed = zeta_torsion(&s);
        assert_abs_diff_eq!(closed, -(2.0_f64.ln() + 2.0 * 5.0_f64.ln()) + 2.0 * 2.0 * 5.0_f64.ln(), epsilon = 1e-14);
        let split = zeta_torsion_split(&s, &s.derived_asymptotics(), &QuadratureSpec::with_tolerance(1e-11)).unwrap();
        assert_abs_diff_eq!(split.value, closed, epsilon = 1e-8);
    }

    #[test]
    fn csv_export() {
        let csv = interval_spectrum(1.0, BoundaryCondition::Relative).unwrap().to_csv(2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "lambda,multiplicity,degree");
        assert_eq!(lines.len(), 6);
        assert!(lines.contains(&"0,1,1"));
    }
}
