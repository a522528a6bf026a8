//! The ten acceptance criteria. Each returns a [`CriterionResult`]; a
//! failed check is a verdict, and only malformed configuration is an error.

use std::fmt;
use std::time::Instant;

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exterior::{
    curvature_element, normal_curvature_element, random_curvature_tensor, Berezin, BiGradedElement, CliffordElement, Letter,
    SecondFundamentalForm,
};
use crate::geometry::{
    curved_cap, flat_disc, phi_density, predict_anomaly, product_collar, transgression_density, BoundaryGrid, BoundaryMetric,
};
use crate::model::{
    boundary_residuals, constant_c, diagonal_restriction, model_solution, pde_residual, BoundaryCondition, ConvolutionRoute,
    FiniteDifference, HalfSpacePoint, KernelValue,
};
use crate::quadrature::{par_map, QuadratureSpec};
use crate::rtorsion::{cycle_complex, disjoint_union, interval_complex, r_torsion, subdivide, TorsionConvention};
use crate::scalar::{rational, Rational};
use crate::spectral::{interval_spectrum, spectral_anomaly, zeta_torsion, zeta_torsion_split};

/// Pass thresholds. Exact criteria (1, 2, 7, 9 and the covariance half of
/// 10) have none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub model_residual: f64,
    pub diagonal: f64,
    pub constant_c: f64,
    pub zeta: f64,
    pub anomaly_spread: f64,
    pub stokes: f64,
    pub subdivision: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { model_residual: 1e-6, diagonal: 1e-6, constant_c: 1e-8, zeta: 1e-7, anomaly_spread: 1e-8, stokes: 1e-6, subdivision: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcceptanceConfig {
    pub seed: u64,
    pub berezin: Berezin,
    pub tolerances: Tolerances,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        Self { seed: 20240601, berezin: Berezin::default(), tolerances: Tolerances::default() }
    }
}

impl AcceptanceConfig {
    fn rng(&self, criterion: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ criterion.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    /// Worst deviation seen; for exact checks the number of mismatches.
    pub measured: f64,
    /// `None` for exact checks.
    pub tolerance: Option<f64>,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

impl CriterionResult {
    fn exact(id: u32, name: &str, mismatches: usize, detail: String) -> Self {
        Self { id, name: name.into(), measured: mismatches as f64, tolerance: None, passed: mismatches == 0, detail, seconds: 0.0 }
    }

    fn within(id: u32, name: &str, measured: f64, tolerance: f64, detail: String) -> Self {
        // NaN fails.
        let passed = measured < tolerance;
        Self { id, name: name.into(), measured, tolerance: Some(tolerance), passed, detail, seconds: 0.0 }
    }

    fn failed(id: u32, name: &str, reason: String) -> Self {
        Self { id, name: name.into(), measured: f64::NAN, tolerance: None, passed: false, detail: reason, seconds: 0.0 }
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let bound = match self.tolerance {
            Some(t) => format!("measured {:.3e} {} {:.0e}", self.measured, if self.passed { "<" } else { "≥" }, t),
            None => format!("exact, {} mismatches", self.measured),
        };
        write!(f, "[{verdict}] {:>2} {:<28} {bound}  ({:.1}s) {}", self.id, self.name, self.seconds, self.detail)
    }
}

fn timed(f: impl FnOnce() -> CriterionResult) -> CriterionResult {
    let start = Instant::now();
    let mut r = f();
    r.seconds = start.elapsed().as_secs_f64();
    r
}

/// Clifford supertrace of the full word and of every proper sub-word,
/// `n = 1..6`, in rational arithmetic.
pub fn criterion_1(_config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "clifford supertrace";
    timed(|| {
        let mut mismatches = 0;
        let mut words = 0;
        for n in 1..=6usize {
            let letters: Vec<Letter> = (0..n).flat_map(|i| [Letter::C(i), Letter::Hat(i)]).collect();
            let full = match CliffordElement::<Rational>::word(n, &letters) {
                Ok(w) => w,
                Err(e) => return CriterionResult::failed(1, NAME, e.to_string()),
            };
            let expected = rational((-2i64).pow(n as u32), 1);
            if full.supertrace() != expected || full.supertrace_by_action().ok() != Some(expected) {
                mismatches += 1;
            }
            let top = (1u32 << n) - 1;
            for c in 0..=top {
                for h in 0..=top {
                    if c == top && h == top {
                        continue;
                    }
                    let mut sub: Vec<Letter> = (0..n).filter(|i| c >> i & 1 == 1).map(Letter::C).collect();
                    sub.extend((0..n).filter(|i| h >> i & 1 == 1).map(Letter::Hat));
                    let w = CliffordElement::<Rational>::word(n, &sub).expect("indices in range");
                    words += 1;
                    if !w.supertrace().is_zero() || !w.supertrace_by_action().map(|s| s.is_zero()).unwrap_or(false) {
                        mismatches += 1;
                    }
                }
            }
        }
        CriterionResult::exact(1, NAME, mismatches, format!("full words (−2)^n for n = 1..6, {words} proper sub-words"))
    })
}

fn monomials(n: usize) -> impl Iterator<Item = BiGradedElement<Rational>> {
    let top = 1u32 << n;
    (0..top).flat_map(move |u| (0..top).map(move |h| BiGradedElement::from_terms(n, [((u, h), rational(1, 1))]).expect("valid masks")))
}

/// `[L_R, P] = L_{R_0}` and `R_0 ∧ R_0 = 0` on 200 rational tensors.
pub fn criterion_2(config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "commutator lemma";
    timed(|| {
        let mut rng = config.rng(2);
        let draws: Vec<(usize, u64)> = (0..200).map(|k| (2 + k % 3, rng.gen())).collect();
        let mismatches: usize = par_map(&draws, |&(n, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = random_curvature_tensor::<Rational, _>(n, &mut rng);
            let big_r = curvature_element(&r);
            let r0 = normal_curvature_element(&r);
            let lr = KernelValue::left(big_r.clone());
            let p = KernelValue::<Rational>::projector(n);
            let commutator = lr.compose(&p).sub(&p.compose(&lr));
            let mut bad = usize::from(commutator != KernelValue::left(r0.clone()));
            // The same identity, one basis vector of Λ ⊗ Λ̂ at a time.
            for omega in monomials(n) {
                let lhs = lr.apply(&p.apply(&omega)).sub(&p.apply(&lr.apply(&omega))).expect("same dimension");
                if lhs != r0.wedge(&omega).expect("same dimension") {
                    bad += 1;
                }
            }
            bad + usize::from(!r0.wedge(&r0).expect("same dimension").is_zero())
        })
        .into_iter()
        .sum();
        CriterionResult::exact(2, NAME, mismatches, "200 tensors, n = 2..4, checked on every basis monomial".into())
    })
}

fn normalized_r(n: usize, rng: &mut ChaCha8Rng) -> BiGradedElement<f64> {
    let r = random_curvature_tensor::<f64, _>(n, rng);
    curvature_element(&r.scale(&(1.0 / r.max_abs())))
}

/// Heat equation and absolute boundary residuals of `K` on a 5×5×3 grid.
pub fn criterion_3(config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "model solution residuals";
    timed(|| {
        let spec = QuadratureSpec::with_tolerance(1e-12);
        let fd = FiniteDifference::default();
        let xs = [0.1, 0.3, 0.6, 1.0, 1.5];
        let ys = [-0.8, -0.4, 0.0, 0.4, 0.8];
        let ts = [0.3, 0.7, 1.5];
        let mut rng = config.rng(3);
        let mut worst = 0.0_f64;
        let mut route_gap = 0.0_f64;
        for n in [2usize, 3] {
            let k = match model_solution(&normalized_r(n, &mut rng), BoundaryCondition::Absolute) {
                Ok(k) => k,
                Err(e) => return CriterionResult::failed(3, NAME, e.to_string()),
            };
            let tail = |y1: f64| -> Vec<f64> { std::iter::once(y1).chain(std::iter::repeat(0.15)).take(n - 1).collect() };
            let q = HalfSpacePoint { x: 0.5, y: tail(0.1) };
            let interior: Vec<(f64, f64, f64)> =
                xs.iter().flat_map(|&x| ys.iter().flat_map(move |&y| ts.map(move |t| (x, y, t)))).collect();
            let residuals = par_map(&interior, |&(x, y, t)| {
                pde_residual(&k, t, &HalfSpacePoint { x, y: tail(y) }, &q, &spec, &fd, ConvolutionRoute::Erfc)
            });
            let boundary: Vec<(f64, f64)> = ys.iter().flat_map(|&y| ts.map(move |t| (y, t))).collect();
            let edges = par_map(&boundary, |&(y, t)| boundary_residuals(&k, t, &tail(y), &q, &spec, &fd, ConvolutionRoute::Erfc));
            for r in residuals {
                match r {
                    Ok(v) => worst = worst.max(v),
                    Err(e) => return CriterionResult::failed(3, NAME, e.to_string()),
                }
            }
            for r in edges {
                match r {
                    Ok((a, b)) => worst = worst.max(a).max(b),
                    Err(e) => return CriterionResult::failed(3, NAME, e.to_string()),
                }
            }
            // Spot check of the erfc route against plain quadrature.
            for &(x, y, t) in interior.iter().step_by(19) {
                let p = HalfSpacePoint { x, y: tail(y) };
                match (k.evaluate(t, &p, &q, &spec), k.evaluate_reduced(t, &p, &q, &spec)) {
                    (Ok(a), Ok(b)) => route_gap = route_gap.max(a.distance(&b)),
                    (Err(e), _) | (_, Err(e)) => return CriterionResult::failed(3, NAME, e.to_string()),
                }
            }
        }
        let measured = worst.max(route_gap);
        CriterionResult::within(
            3,
            NAME,
            measured,
            config.tolerances.model_residual,
            format!("n = 2, 3; worst residual {worst:.2e}, route gap {route_gap:.2e}"),
        )
    })
}

/// Three-term diagonal display against direct evaluation at `t = 1`.
pub fn criterion_4(config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "diagonal display";
    timed(|| {
        let spec = QuadratureSpec::with_tolerance(1e-12);
        let mut rng = config.rng(4);
        let mut worst = 0.0_f64;
        for n in [2usize, 3] {
            let r = normalized_r(n, &mut rng);
            for bc in [BoundaryCondition::Absolute, BoundaryCondition::Relative] {
                let k = match model_solution(&r, bc) {
                    Ok(k) => k,
                    Err(e) => return CriterionResult::failed(4, NAME, e.to_string()),
                };
                for x in [0.2, 1.0] {
                    let p = HalfSpacePoint { x, y: vec![0.0; n - 1] };
                    match (k.evaluate(1.0, &p, &p, &spec), diagonal_restriction(&k, x, &spec)) {
                        (Ok(a), Ok(b)) => worst = worst.max(a.distance(&b)),
                        (Err(e), _) | (_, Err(e)) => return CriterionResult::failed(4, NAME, e.to_string()),
                    }
                }
            }
        }
        CriterionResult::within(4, NAME, worst, config.tolerances.diagonal, "n = 2, 3, both conditions, x ∈ {0.2, 1.0}".into())
    })
}

/// Two routes to `c`, and their stability when the tolerance is halved.
pub fn criterion_5(config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "constant c";
    timed(|| {
        let tol = config.tolerances.constant_c;
        let spec = QuadratureSpec::with_tolerance(1e-11);
        let (a, b) = match (constant_c(&spec, tol), constant_c(&spec.halved(), tol)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return CriterionResult::failed(5, NAME, e.to_string()),
        };
        let measured = a.method_difference.max(b.method_difference).max((a.value - b.value).abs());
        CriterionResult::within(5, NAME, measured, tol, format!("c = {:.12} ± {:.1e}", a.value, a.error_estimate))
    })
}

const LENGTHS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// `ζ_T′(0) = −ln 2L` by the closed form and the split Mellin route, and
/// `ln T − ln τ` constant in `L`.
pub fn criterion_6(config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "interval torsion";
    timed(|| {
        let q = QuadratureSpec::with_tolerance(1e-10);
        let mut zeta_err = 0.0_f64;
        let mut spread = 0.0_f64;
        let mut anomaly = f64::NAN;
        for bc in [BoundaryCondition::Absolute, BoundaryCondition::Relative] {
            let mut values = vec![];
            for l in LENGTHS {
                let s = match interval_spectrum(l, bc) {
                    Ok(s) => s,
                    Err(e) => return CriterionResult::failed(6, NAME, e.to_string()),
                };
                let oracle = -(2.0 * l).ln();
                let split = match zeta_torsion_split(&s, &s.derived_asymptotics(), &q) {
                    Ok(c) => c.value,
                    Err(e) => return CriterionResult::failed(6, NAME, e.to_string()),
                };
                zeta_err = zeta_err.max((zeta_torsion(&s) - oracle).abs()).max((split - oracle).abs());
                let cx = interval_complex(3, l, bc == BoundaryCondition::Relative);
                let a = cx
                    .and_then(|cx| r_torsion(&cx, TorsionConvention::Unhalved))
                    .map_err(|e| e.to_string())
                    .and_then(|tau| spectral_anomaly(l, bc, 1, &tau).map_err(|e| e.to_string()));
                match a {
                    Ok(a) => values.push(a),
                    Err(e) => return CriterionResult::failed(6, NAME, e),
                }
            }
            let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
            spread = spread.max(hi - lo);
            anomaly = values[0];
        }
        let (zt, st) = (config.tolerances.zeta, config.tolerances.anomaly_spread);
        let mut r = CriterionResult::within(
            6,
            NAME,
            zeta_err,
            zt,
            format!("anomaly spread {spread:.2e} (< {st:.0e}), ln T − ln τ = {anomaly:.10}"),
        );
        r.passed = zeta_err < zt && spread < st;
        r
    })
}

/// Transgression density at odd `n` and `φ` density at even `n` vanish.
pub fn criterion_7(config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "parity vanishing";
    timed(|| {
        let mut rng = config.rng(7);
        let mut mismatches = 0;
        for k in 0..100 {
            let n = 2 + k % 4;
            let r = random_curvature_tensor::<f64, _>(n, &mut rng);
            let h = SecondFundamentalForm::<f64>::random(n, &mut rng);
            let v = if n % 2 == 1 { transgression_density(&r, &h, &config.berezin) } else { phi_density(&r, &h, &config.berezin) };
            match v {
                Ok(v) if v == 0.0 => {}
                Ok(_) => mismatches += 1,
                Err(e) => return CriterionResult::failed(7, NAME, e.to_string()),
            }
        }
        CriterionResult::exact(7, NAME, mismatches, "100 draws, n = 2..5".into())
    })
}

/// Stokes: interior Euler difference, boundary transgression and the
/// closed form all agree on the flat disc and the curved cap.
pub fn criterion_8(config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "transgression stokes";
    timed(|| {
        let spec = QuadratureSpec::with_tolerance(1e-9);
        let mut worst = 0.0_f64;
        for geo in [flat_disc(BoundaryGrid::default()), curved_cap(1.0, BoundaryGrid::default())] {
            let geo = match geo {
                Ok(g) => g,
                Err(e) => return CriterionResult::failed(8, NAME, e.to_string()),
            };
            let closed = geo.stokes.as_ref().map(|s| s.closed_form);
            let result = geo
                .euler_difference(&spec, &config.berezin)
                .and_then(|i| geo.transgression(&spec, &config.berezin).map(|b| (i, b)));
            match (result, closed) {
                (Ok((Some(interior), boundary)), Some(closed)) => {
                    worst = worst.max((interior - boundary).abs()).max((interior - closed).abs());
                }
                (Err(e), _) => return CriterionResult::failed(8, NAME, e.to_string()),
                _ => return CriterionResult::failed(8, NAME, format!("{} has no Stokes data", geo.name)),
            }
        }
        CriterionResult::within(8, NAME, worst, config.tolerances.stokes, "flat disc, curved cap r₀ = 1".into())
    })
}

/// Product collars predict exactly `χ(∂M) ln 2 · rank`.
pub fn criterion_9(config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "product prediction";
    timed(|| {
        let spec = QuadratureSpec::with_tolerance(1e-9);
        let boundaries = [
            BoundaryMetric::RoundSphere { radius: 1.0 },
            BoundaryMetric::RoundSphere { radius: 2.5 },
            BoundaryMetric::Circle { length: 3.0 },
            BoundaryMetric::FlatTorus { lengths: vec![1.0, 2.0] },
        ];
        let mut mismatches = 0;
        for b in &boundaries {
            let geo = match product_collar(b, BoundaryGrid::default()) {
                Ok(g) => g,
                Err(e) => return CriterionResult::failed(9, NAME, e.to_string()),
            };
            for rank in [1, 2, 3] {
                match predict_anomaly(&geo, rank, 0.95, &spec, &config.berezin) {
                    Ok(p) => {
                        let expected = rank as f64 * geo.boundary_euler_characteristic as f64 * std::f64::consts::LN_2;
                        if p.term_transgression != 0.0 || p.term_phi != 0.0 || p.prediction != expected {
                            mismatches += 1;
                        }
                    }
                    Err(e) => return CriterionResult::failed(9, NAME, e.to_string()),
                }
            }
        }
        CriterionResult::exact(9, NAME, mismatches, "sphere, circle and torus boundaries, rank 1..3".into())
    })
}

fn random_invertible(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Rational>> {
    loop {
        let a: Vec<Vec<Rational>> =
            (0..n).map(|_| (0..n).map(|_| rational(rng.gen_range(-6..=6), rng.gen_range(1..=5))).collect()).collect();
        let cols: Vec<Vec<Rational>> = (0..n).map(|c| (0..n).map(|r| a[r][c].clone()).collect()).collect();
        if let Some(d) = small_det(&cols) {
            if !d.is_zero() {
                return a;
            }
        }
    }
}

/// Leibniz expansion; `n` is at most 4 here.
fn small_det(a: &[Vec<Rational>]) -> Option<Rational> {
    let n = a.len();
    if n > 6 {
        return None;
    }
    let mut total = Rational::zero();
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| {
        let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
        let term = (0..n).fold(rational(1, 1), |acc, i| acc * &a[i][p[i]]);
        if inversions % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    });
    Some(total)
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

/// Subdivision invariance and the exact basis-change law
/// `det_p ↦ det_p · det A` in the changed degree.
pub fn criterion_10(config: &AcceptanceConfig) -> CriterionResult {
    const NAME: &str = "r-torsion invariance";
    timed(|| {
        let family = [
            interval_complex(1, 1.7, false),
            interval_complex(4, 0.3, false),
            interval_complex(3, 2.5, true),
            cycle_complex(1, 1.0, 1),
            cycle_complex(5, 3.0, 1),
            cycle_complex(4, 1.0, -1),
        ];
        let mut drift = 0.0_f64;
        for cx in family {
            let run = cx.and_then(|cx| {
                let base = r_torsion(&cx, TorsionConvention::Classical)?.ln_tau;
                let mut sub = cx;
                let mut worst = 0.0_f64;
                for _ in 0..3 {
                    sub = subdivide(&sub)?;
                    worst = worst.max((r_torsion(&sub, TorsionConvention::Classical)?.ln_tau - base).abs());
                }
                Ok(worst)
            });
            match run {
                Ok(w) => drift = drift.max(w),
                Err(e) => return CriterionResult::failed(10, NAME, e.to_string()),
            }
        }
        let mut rng = config.rng(10);
        let mut mismatches = 0;
        for _ in 0..40 {
            let mut cx = cycle_complex(rng.gen_range(1..5), 1.0, 1).expect("valid cycle");
            for _ in 0..rng.gen_range(1..4) {
                cx = disjoint_union(&cx, &cycle_complex(rng.gen_range(1..4), 1.0, 1).expect("valid cycle")).expect("matching scales");
            }
            let base = cx.determinants().expect("valid complex");
            for p in 0..2 {
                let a = random_invertible(cx.cohomology[p].vectors.len(), &mut rng);
                let det_a = small_det(&a).expect("small");
                let mut changed = cx.clone();
                changed.cohomology[p] = cx.cohomology[p].transformed(&a);
                let dets = changed.determinants().expect("valid complex");
                for (q, (d, b)) in dets.iter().zip(&base).enumerate() {
                    let expected = if q == p { b * &det_a } else { b.clone() };
                    if *d != expected {
                        mismatches += 1;
                    }
                }
            }
        }
        let tol = config.tolerances.subdivision;
        let mut r = CriterionResult::within(
            10,
            NAME,
            drift,
            tol,
            format!("3 subdivisions of 6 complexes; 40 basis changes per degree, {mismatches} exact mismatches"),
        );
        r.passed = r.passed && mismatches == 0;
        r
    })
}

pub fn run_all(config: &AcceptanceConfig) -> Vec<CriterionResult> {
    vec![
        criterion_1(config),
        criterion_2(config),
        criterion_3(config),
        criterion_4(config),
        criterion_5(config),
        criterion_6(config),
        criterion_7(config),
        criterion_8(config),
        criterion_9(config),
        criterion_10(config),
    ]
}
