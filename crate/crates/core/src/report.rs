//! Pipelines behind the command-line tool and the JSON reports they write.
//!
//! Every report embeds the resolved [`RunConfig`]. Keys are sorted and no
//! timings are recorded, so equal configs give byte-identical output.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::acceptance::{self, AcceptanceConfig, CriterionResult, Tolerances};
use crate::exterior::{curvature_element, kulkarni_nomizu, Berezin};
use crate::geometry::{predict_anomaly, BoundaryGrid, Geometry, GeometryError, GeometrySpec};
use crate::model::{constant_c, BoundaryCondition, ConstantC};
use crate::quadrature::QuadratureSpec;
use crate::rtorsion::{interval_complex, r_torsion, TorsionConvention};
use crate::scalar::{Rational, Scalar, ScalarMode};
use crate::spectral::{interval_spectrum, zeta_torsion};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    ConstantC,
    BerezinCheck,
    ModelKernelCheck,
    Transgression,
    IntervalAnomaly,
    PredictAnomaly,
    Spectrum,
    Acceptance,
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    /// A named geometry or the path of a JSON geometry file.
    pub geometry: Option<String>,
    pub length: f64,
    pub boundary_condition: BoundaryCondition,
    pub rank: u32,
    /// Cells of the interval used for `ln τ`.
    pub cells: usize,
    /// Eigenvalues per series in the CSV export.
    pub spectrum_count: usize,
    pub quadrature: QuadratureSpec,
    pub scalar_mode: ScalarMode,
    pub berezin: Berezin,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subcommand: Subcommand::Acceptance,
            geometry: None,
            length: 1.0,
            boundary_condition: BoundaryCondition::Absolute,
            rank: 1,
            cells: 4,
            spectrum_count: 20,
            quadrature: QuadratureSpec::with_tolerance(1e-10),
            scalar_mode: ScalarMode::Exact,
            berezin: Berezin::default(),
            tolerances: Tolerances::default(),
            seed: AcceptanceConfig::default().seed,
            output: None,
        }
    }
}

impl RunConfig {
    /// Overlays the keys of a JSON object on this config; keys in the file win.
    pub fn merged_with(&self, overrides: &str) -> Result<Self, RunError> {
        let patch: Value = serde_json::from_str(overrides).map_err(|e| RunError::Input(format!("config file: {e}")))?;
        let Value::Object(patch) = patch else {
            return Err(RunError::Input("config file must hold a JSON object".into()));
        };
        let mut base = serde_json::to_value(self).expect("serializable");
        let obj = base.as_object_mut().expect("object");
        for (k, v) in patch {
            match (obj.get_mut(&k), v) {
                (Some(Value::Object(inner)), Value::Object(v)) => inner.extend(v),
                (_, v) => {
                    obj.insert(k, v);
                }
            }
        }
        serde_json::from_value(base).map_err(|e| RunError::Input(format!("config file: {e}")))
    }

    fn acceptance(&self) -> AcceptanceConfig {
        AcceptanceConfig { seed: self.seed, berezin: self.berezin, tolerances: self.tolerances }
    }

    fn geometry(&self) -> Result<Geometry, RunError> {
        let name = self.geometry.as_deref().ok_or_else(|| RunError::Input("--geometry is required".into()))?;
        let spec = if Path::new(name).is_file() {
            let text = std::fs::read_to_string(name).map_err(|e| RunError::Input(format!("{name}: {e}")))?;
            serde_json::from_str::<GeometrySpec>(&text).map_err(|e| RunError::Input(format!("{name}: {e}")))?
        } else {
            GeometrySpec::from_name(name).map_err(|e| RunError::Input(e.to_string()))?
        };
        spec.build(BoundaryGrid::default()).map_err(|e| match e {
            GeometryError::UnknownGeometry(_) | GeometryError::Config(_) => RunError::Input(e.to_string()),
            e => RunError::Computation(e.to_string()),
        })
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("input error: {0}")]
    Input(String),
    /// A numerical routine could not reach its tolerance.
    #[error("tolerance failure: {0}")]
    Computation(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 1,
            RunError::Computation(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub torsion_lab: &'static str,
    pub report_schema: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self { torsion_lab: env!("CARGO_PKG_VERSION"), report_schema: REPORT_SCHEMA }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub torsion: TorsionConvention,
    pub berezin: Berezin,
    /// Coordinate index of the inward normal.
    pub normal_index: usize,
}

impl Conventions {
    fn of(config: &RunConfig) -> Self {
        Self { torsion: TorsionConvention::Unhalved, berezin: config.berezin, normal_index: 0 }
    }
}

/// The terms of the anomaly formula and, where available, the two torsions.
#[derive(Debug, Clone, Serialize)]
pub struct AnomalyReport {
    pub geometry: String,
    pub rank: u32,
    pub term_chi: f64,
    pub term_transgression: f64,
    pub term_phi: f64,
    pub constant_c: f64,
    pub constant_c_error: f64,
    /// `term_chi + term_transgression + constant_c · term_phi · rank`.
    pub prediction: f64,
    #[serde(rename = "lnT")]
    pub spectral_ln_t: Option<f64>,
    #[serde(rename = "lnTau")]
    pub combinatorial_ln_tau: Option<f64>,
    /// `lnT − lnTau`.
    pub anomaly: Option<f64>,
    /// `anomaly − prediction`.
    pub residual: Option<f64>,
    pub conventions: Conventions,
    pub versions: Versions,
}

impl AnomalyReport {
    pub fn invariant_gap(&self) -> f64 {
        (self.term_chi + self.term_transgression + self.constant_c * self.term_phi * self.rank as f64 - self.prediction).abs()
    }
}

/// Result of one pipeline: the JSON report, plain text for stdout when the
/// pipeline has some, and the names of failed checks.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub text: Option<String>,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

fn envelope(config: &RunConfig, body: Value, failures: &[String]) -> Value {
    json!({
        "config": config,
        "versions": Versions::default(),
        "passed": failures.is_empty(),
        "failures": failures,
        "result": body,
    })
}

fn compute_c(config: &RunConfig) -> Result<ConstantC, RunError> {
    constant_c(&config.quadrature, config.tolerances.constant_c).map_err(|e| RunError::Computation(e.to_string()))
}

pub fn run(config: &RunConfig) -> Result<Outcome, RunError> {
    config.quadrature.validate().map_err(|e| RunError::Input(e.to_string()))?;
    if config.rank == 0 {
        return Err(RunError::Input("rank must be positive".into()));
    }
    let mut failures = vec![];
    let mut text = None;
    let body = match config.subcommand {
        Subcommand::ConstantC => {
            let c = compute_c(config)?;
            if !c.method_agreement {
                failures.push(format!("constant-c: routes differ by {:e}", c.method_difference));
            }
            json!({ "constant_c": c, "closed_form": 11.0 * PI.powf(1.5) / 64.0 })
        }
        Subcommand::BerezinCheck => {
            let criteria = [acceptance::criterion_1(&config.acceptance()), acceptance::criterion_2(&config.acceptance())];
            let spheres = [2usize, 4]
                .iter()
                .map(|&n| {
                    let integral = match config.scalar_mode {
                        ScalarMode::Exact => sphere_euler_integral::<Rational>(n, &config.berezin),
                        ScalarMode::Float => sphere_euler_integral::<f64>(n, &config.berezin),
                    };
                    json!({ "sphere_dimension": n, "euler_integral": integral, "expected": 2.0 })
                })
                .collect::<Vec<_>>();
            for s in &spheres {
                let v = s["euler_integral"].as_f64().unwrap_or(f64::NAN);
                if !((v - 2.0).abs() < 1e-12) {
                    failures.push(format!("berezin-check: Gauss–Bonnet on S^{} gives {v}", s["sphere_dimension"]));
                }
            }
            record(&criteria, &mut failures);
            json!({ "criteria": criteria, "gauss_bonnet": spheres })
        }
        Subcommand::ModelKernelCheck => {
            let a = config.acceptance();
            let criteria = [acceptance::criterion_3(&a), acceptance::criterion_4(&a)];
            record(&criteria, &mut failures);
            json!({ "criteria": criteria })
        }
        Subcommand::Transgression => {
            let geo = config.geometry()?;
            let comp = |e: GeometryError| RunError::Computation(e.to_string());
            let transgression = geo.transgression(&config.quadrature, &config.berezin).map_err(comp)?;
            let interior = geo.euler_difference(&config.quadrature, &config.berezin).map_err(comp)?;
            let closed = geo.stokes.as_ref().map(|s| s.closed_form);
            let gap = interior.map(|i| (i - transgression).abs().max(closed.map_or(0.0, |c| (i - c).abs())));
            if let Some(g) = gap {
                if !(g < config.tolerances.stokes) {
                    failures.push(format!("transgression: Stokes gap {g:e} on {}", geo.name));
                }
            }
            json!({
                "geometry": geo.name,
                "transgression": transgression,
                "euler_difference": interior,
                "closed_form": closed,
                "stokes_gap": gap,
            })
        }
        Subcommand::IntervalAnomaly | Subcommand::PredictAnomaly => {
            let report = if config.subcommand == Subcommand::IntervalAnomaly {
                interval_anomaly(config)?
            } else {
                anomaly_report(config, &config.geometry()?, None, None)?
            };
            if report.invariant_gap() != 0.0 {
                failures.push(format!("anomaly report: prediction differs from its terms by {:e}", report.invariant_gap()));
            }
            serde_json::to_value(report).expect("serializable")
        }
        Subcommand::Spectrum => {
            let s = interval_spectrum(config.length, config.boundary_condition)
                .map_err(|e| RunError::Input(e.to_string()))?
                .with_rank(config.rank);
            text = Some(s.to_csv(config.spectrum_count));
            json!({ "spectrum": s })
        }
        Subcommand::Acceptance => {
            let results = acceptance::run_all(&config.acceptance());
            text = Some(results.iter().map(|r| format!("{r}\n")).collect());
            record(&results, &mut failures);
            json!({ "criteria": results })
        }
    };
    Ok(Outcome { report: envelope(config, body, &failures), text, failures })
}

fn record(results: &[CriterionResult], failures: &mut Vec<String>) {
    failures.extend(results.iter().filter(|r| !r.passed).map(|r| format!("criterion {} ({})", r.id, r.name)));
}

/// `∫_{S^n} ∫^B exp(−R)` for the unit round sphere; `χ(S^n) = 2` for even `n`.
pub fn sphere_euler_integral<T: Scalar>(n: usize, berezin: &Berezin) -> f64 {
    let g: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
    let r = kulkarni_nomizu(&g, &g).scale(&T::from_ratio(1, 2));
    let e = curvature_element(&r).neg().nilpotent_exp().expect("nilpotent");
    let density = berezin.integrate(&e).coefficient((1u32 << n) - 1);
    let m = (n + 1) as f64;
    let volume = 2.0 * PI.powf(m / 2.0) / libm::tgamma(m / 2.0);
    density * volume
}

fn anomaly_report(config: &RunConfig, geo: &Geometry, ln_t: Option<f64>, ln_tau: Option<f64>) -> Result<AnomalyReport, RunError> {
    let c = compute_c(config)?;
    let p = predict_anomaly(geo, config.rank, c.value, &config.quadrature, &config.berezin)
        .map_err(|e| RunError::Computation(e.to_string()))?;
    let anomaly = ln_t.zip(ln_tau).map(|(t, tau)| t - tau);
    Ok(AnomalyReport {
        geometry: geo.name.clone(),
        rank: p.rank,
        term_chi: p.term_chi,
        term_transgression: p.term_transgression,
        term_phi: p.term_phi,
        constant_c: c.value,
        constant_c_error: c.error_estimate,
        prediction: p.prediction,
        spectral_ln_t: ln_t,
        combinatorial_ln_tau: ln_tau,
        anomaly,
        residual: anomaly.map(|a| a - p.prediction),
        conventions: Conventions::of(config),
        versions: Versions::default(),
    })
}

/// `ln T` from the spectrum, `ln τ` from a cell structure, both unhalved.
pub fn interval_anomaly(config: &RunConfig) -> Result<AnomalyReport, RunError> {
    let l = config.length;
    let bc = config.boundary_condition;
    let spectrum = interval_spectrum(l, bc).map_err(|e| RunError::Input(e.to_string()))?.with_rank(config.rank);
    let ln_t = zeta_torsion(&spectrum);
    let mut cx = interval_complex(config.cells, l, bc == BoundaryCondition::Relative).map_err(|e| RunError::Input(e.to_string()))?;
    cx.representation_rank = config.rank;
    let tau = r_torsion(&cx, TorsionConvention::Unhalved).map_err(|e| RunError::Computation(e.to_string()))?;
    let geo = crate::geometry::interval(l, BoundaryGrid::default()).map_err(|e| RunError::Input(e.to_string()))?;
    anomaly_report(config, &geo, Some(ln_t), Some(tau.ln_tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_overrides_flags() {
        let flags = RunConfig { length: 3.0, rank: 2, ..RunConfig::default() };
        let merged = flags.merged_with(r#"{"length": 0.5, "tolerances": {"stokes": 1e-3}}"#).unwrap();
        assert_eq!(merged.length, 0.5);
        assert_eq!(merged.rank, 2);
        assert_eq!(merged.tolerances.stokes, 1e-3);
        assert_eq!(merged.tolerances.zeta, Tolerances::default().zeta);
        assert!(flags.merged_with(r#"{"lenght": 1}"#).is_err());
        assert!(flags.merged_with("[1]").is_err());
    }

    #[test]
    fn gauss_bonnet_on_spheres_in_both_scalar_modes() {
        let b = Berezin::default();
        for n in [2, 4] {
            assert!((sphere_euler_integral::<Rational>(n, &b) - 2.0).abs() < 1e-12);
            assert!((sphere_euler_integral::<f64>(n, &b) - 2.0).abs() < 1e-12);
        }
        let off = Berezin { scale: 1.01, ..b };
        assert!((sphere_euler_integral::<f64>(2, &off) - 2.0).abs() > 1e-3);
    }
}
