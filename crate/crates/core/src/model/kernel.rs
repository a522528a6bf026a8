use std::f64::consts::PI;

use serde::Serialize;
use libm::erfc;

use super::heat::{free_gaussian, Profile};
use super::{BoundaryCondition, HalfSpacePoint, KernelValue, ModelError};
use crate::exterior::BiGradedElement;
use crate::quadrature::{accept_near_edge, gauss_kronrod, gaussian_breakpoints, tanh_sinh_with_distances, Estimate, QuadratureSpec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    DirichletIdentity,
    NeumannIdentity,
    K0,
    K1,
    Full,
}

/// Operator factor of a kernel component at time `t`:
/// `(L_X + P L_Y) ∘ L_{E(t)}` with `E(t) = e^{-tR}` when `heat` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTemplate {
    pub value: KernelValue<f64>,
    pub heat: bool,
}

/// `profile(t; x, x″) · G_t(y − y″) · operator(t)`, `G_t` the free
/// Gaussian in the `n − 1` tangential directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub profile: Profile,
    pub operator: OperatorTemplate,
}

#[derive(Debug, Clone)]
pub struct ModelKernel {
    dim: usize,
    bc: BoundaryCondition,
    kind: KernelKind,
    r: BiGradedElement<f64>,
    components: Vec<Component>,
    /// `K_0` and `K_1` for the full solution `K = K_0 − K_0 * K_1`.
    parts: Option<Box<(ModelKernel, ModelKernel)>>,
}

impl ModelKernel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn curvature(&self) -> &BiGradedElement<f64> {
        &self.r
    }

    /// `R_0`: the terms of `R` containing `e^0`.
    pub fn normal_curvature(&self) -> BiGradedElement<f64> {
        self.r.normal_part(0)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// `e^{-tR}`.
    pub fn heat_factor(&self, t: f64) -> BiGradedElement<f64> {
        self.r.scale(&-t).nilpotent_exp().expect("R has no scalar part")
    }

    fn operator_at(&self, template: &OperatorTemplate, t: f64) -> KernelValue<f64> {
        if template.heat {
            template.value.right_multiply(&self.heat_factor(t))
        } else {
            template.value.clone()
        }
    }

    fn scalar(kind: KernelKind, profile: Profile, dim: usize) -> Self {
        let zero = BiGradedElement::zero(dim).expect("valid dimension");
        ModelKernel {
            dim,
            bc: BoundaryCondition::Absolute,
            kind,
            r: zero,
            components: vec![Component {
                profile,
                operator: OperatorTemplate { value: KernelValue::identity(dim), heat: false },
            }],
            parts: None,
        }
    }

    /// `K_D · id`.
    pub fn dirichlet(dim: usize) -> Self {
        Self::scalar(KernelKind::DirichletIdentity, Profile::Dirichlet, dim)
    }

    /// `K_N · id`.
    pub fn neumann(dim: usize) -> Self {
        Self::scalar(KernelKind::NeumannIdentity, Profile::Neumann, dim)
    }

    /// Value at `(t, p, p″)`. The full solution evaluates its convolution
    /// term by two-dimensional quadrature.
    pub fn evaluate(&self, t: f64, p: &HalfSpacePoint, q: &HalfSpacePoint, spec: &QuadratureSpec) -> Result<KernelValue<f64>, ModelError> {
        self.evaluate_with(t, p, q, spec, ConvolutionRoute::Quadrature)
    }

    /// As [`ModelKernel::evaluate`], with the convolution term reduced to a
    /// one-dimensional error-function integral.
    pub fn evaluate_reduced(&self, t: f64, p: &HalfSpacePoint, q: &HalfSpacePoint, spec: &QuadratureSpec) -> Result<KernelValue<f64>, ModelError> {
        self.evaluate_with(t, p, q, spec, ConvolutionRoute::Erfc)
    }

    pub fn evaluate_with(
        &self,
        t: f64,
        p: &HalfSpacePoint,
        q: &HalfSpacePoint,
        spec: &QuadratureSpec,
        route: ConvolutionRoute,
    ) -> Result<KernelValue<f64>, ModelError> {
        self.check_points(t, p, q)?;
        if let Some(parts) = &self.parts {
            let (k0, k1) = &**parts;
            let direct = k0.evaluate_with(t, p, q, spec, route)?;
            let correction = convolve_route(k0, k1, t, p, q, spec, route)?;
            return Ok(direct.sub(&correction));
        }
        let tangential = free_gaussian(t, self.dim - 1, p.tangential_distance_sq(q));
        let mut total = KernelValue::zero(self.dim);
        for c in &self.components {
            let weight = c.profile.eval(t, p.x, q.x) * tangential;
            total = total.add(&self.operator_at(&c.operator, t).scale(&weight));
        }
        Ok(total)
    }

    fn check_points(&self, t: f64, p: &HalfSpacePoint, q: &HalfSpacePoint) -> Result<(), ModelError> {
        if !(t > 0.0) {
            return Err(ModelError::NonPositiveTime(t));
        }
        for pt in [p, q] {
            if pt.dim() != self.dim {
                return Err(ModelError::DimensionMismatch(pt.dim(), self.dim));
            }
        }
        Ok(())
    }
}

fn check_curvature(r: &BiGradedElement<f64>) -> Result<(), ModelError> {
    if r.is_bidegree(2, 2) {
        Ok(())
    } else {
        Err(ModelError::WrongDegree)
    }
}

/// `K_0`. Absolute conditions: `P K_N e^{-tR} + (1−P) K_D e^{-tR}`;
/// relative conditions swap the two projections.
pub fn assemble_k0(r: &BiGradedElement<f64>, bc: BoundaryCondition) -> Result<ModelKernel, ModelError> {
    check_curvature(r)?;
    let n = r.dim();
    let one = BiGradedElement::one(n)?;
    let zero = BiGradedElement::zero(n)?;
    // K_0 = K_D L_E + (K_N − K_D) P L_E, or K_N L_E − (K_N − K_D) P L_E.
    let (first, sign) = match bc {
        BoundaryCondition::Absolute => (Profile::Dirichlet, 1.0),
        BoundaryCondition::Relative => (Profile::Neumann, -1.0),
    };
    let components = vec![
        Component { profile: first, operator: OperatorTemplate { value: KernelValue::left(one.clone()), heat: true } },
        Component {
            profile: Profile::Jump,
            operator: OperatorTemplate { value: KernelValue::new(zero, one.scale(&sign)), heat: true },
        },
    ];
    Ok(ModelKernel { dim: n, bc, kind: KernelKind::K0, r: r.clone(), components, parts: None })
}

/// `K_1 = (∂_t + Δ + R) K_0 = ±(K_N − K_D) R_0 e^{-tR}` (sign `+` for
/// absolute conditions).
pub fn assemble_k1(r: &BiGradedElement<f64>, bc: BoundaryCondition) -> Result<ModelKernel, ModelError> {
    check_curvature(r)?;
    let sign = match bc {
        BoundaryCondition::Absolute => 1.0,
        BoundaryCondition::Relative => -1.0,
    };
    let r0 = r.normal_part(0).scale(&sign);
    let components = vec![Component {
        profile: Profile::Jump,
        operator: OperatorTemplate { value: KernelValue::left(r0), heat: true },
    }];
    Ok(ModelKernel { dim: r.dim(), bc, kind: KernelKind::K1, r: r.clone(), components, parts: None })
}

/// `K = K_0 − K_0 * K_1`. Since `(∂_t + Δ + R)(K_0 * K_1) = K_1 + K_1 * K_1`
/// and `K_1 * K_1 = 0` (`R_0² = 0`), this solves the model problem exactly.
pub fn model_solution(r: &BiGradedElement<f64>, bc: BoundaryCondition) -> Result<ModelKernel, ModelError> {
    let k0 = assemble_k0(r, bc)?;
    let k1 = assemble_k1(r, bc)?;
    Ok(ModelKernel {
        dim: r.dim(),
        bc,
        kind: KernelKind::Full,
        r: r.clone(),
        components: vec![],
        parts: Some(Box::new((k0, k1))),
    })
}

/// Exact check that the Duhamel series stops after one convolution: the
/// operator factor of `K_1 * K_1` is `L_{R_0 R_0 E} = 0`.
pub fn duhamel_terminates<T: Scalar>(r: &BiGradedElement<T>) -> bool {
    let r0 = KernelValue::left(r.normal_part(0));
    r0.compose(&r0).is_zero()
}

/// How the convolution term `K_0 * K_1` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvolutionRoute {
    /// Two-dimensional `(s, x′)` quadrature.
    #[default]
    Quadrature,
    /// `x′` integral in closed form.
    Erfc,
}

/// `(k1 * k2)(t, p, p″) = ∫_0^t ∫_{ℝ^n_+} k1(t−s, p, p′) k2(s, p′, p″) dp′ ds`.
///
/// The `y′` integral is done in closed form (Gaussian semigroup), leaving a
/// two-dimensional `(s, x′)` quadrature per pair of components. The
/// operator factor is a polynomial in `s` of degree at most `n`; it is
/// sampled at `n + 1` nodes and integrated against Lagrange weights (a
/// single scalar integral when it does not depend on `s`).
pub fn convolve(
    k1: &ModelKernel,
    k2: &ModelKernel,
    t: f64,
    p: &HalfSpacePoint,
    q: &HalfSpacePoint,
    spec: &QuadratureSpec,
) -> Result<KernelValue<f64>, ModelError> {
    convolve_route(k1, k2, t, p, q, spec, ConvolutionRoute::Quadrature)
}

fn convolve_route(
    k1: &ModelKernel,
    k2: &ModelKernel,
    t: f64,
    p: &HalfSpacePoint,
    q: &HalfSpacePoint,
    spec: &QuadratureSpec,
    route: ConvolutionRoute,
) -> Result<KernelValue<f64>, ModelError> {
    let scalar = |p1: Profile, p2: Profile, w: &(dyn Fn(f64) -> f64 + Sync)| -> Result<f64, ModelError> {
        Ok(match route {
            ConvolutionRoute::Quadrature => scalar_convolution(p1, p2, t, p.x, q.x, w, spec)?.value,
            ConvolutionRoute::Erfc => scalar_convolution_erfc(p1, p2, t, p.x, q.x, w, spec)?.value,
        })
    };
    convolve_generic(k1, k2, t, p, q, &scalar)
}

type ScalarWeight<'a> = dyn Fn(Profile, Profile, &(dyn Fn(f64) -> f64 + Sync)) -> Result<f64, ModelError> + 'a;

fn convolve_generic(
    k1: &ModelKernel,
    k2: &ModelKernel,
    t: f64,
    p: &HalfSpacePoint,
    q: &HalfSpacePoint,
    scalar: &ScalarWeight,
) -> Result<KernelValue<f64>, ModelError> {
    k1.check_points(t, p, q)?;
    k2.check_points(t, p, q)?;
    if k1.dim != k2.dim {
        return Err(ModelError::DimensionMismatch(k1.dim, k2.dim));
    }
    if k1.parts.is_some() || k2.parts.is_some() {
        return Err(ModelError::Unsupported("convolution of a composite kernel".into()));
    }
    let n = k1.dim;
    let tangential = free_gaussian(t, n - 1, p.tangential_distance_sq(q));
    let degree = n;
    let nodes: Vec<f64> = (0..=degree)
        .map(|k| 0.5 * t * (1.0 - ((2 * k + 1) as f64 * PI / (2 * (degree + 1)) as f64).cos()))
        .collect();
    let mut total = KernelValue::zero(n);
    for c1 in &k1.components {
        for c2 in &k2.components {
            let ops: Vec<KernelValue<f64>> = nodes
                .iter()
                .map(|&s| k1.operator_at(&c1.operator, t - s).compose(&k2.operator_at(&c2.operator, s)))
                .collect();
            let scale = ops.iter().map(|o| o.max_abs()).fold(0.0, f64::max);
            if scale == 0.0 {
                continue;
            }
            let constant = ops.iter().all(|o| o.distance(&ops[0]) <= 1e-14 * scale);
            if constant {
                let w = scalar(c1.profile, c2.profile, &|_| 1.0)?;
                total = total.add(&ops[0].scale(&(w * tangential)));
            } else {
                for (k, op) in ops.iter().enumerate() {
                    let nodes = &nodes;
                    let lagrange = move |s: f64| {
                        nodes.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, &sj)| (s - sj) / (nodes[k] - sj)).product::<f64>()
                    };
                    let w = scalar(c1.profile, c2.profile, &lagrange)?;
                    total = total.add(&op.scale(&(w * tangential)));
                }
            }
        }
    }
    Ok(total)
}

/// `∫_0^t w(s) ∫ p1(t−s; x, x′) p2(s; x′, x″) dx′ ds` by nested quadrature:
/// tanh-sinh in `s` (square-root behaviour at both ends), adaptive
/// Gauss–Kronrod in `x′` over `[0, R]` (over `ℝ` when both profiles are free),
/// with `R` past the Gaussian tails.
pub fn scalar_convolution(
    p1: Profile,
    p2: Profile,
    t: f64,
    x: f64,
    xq: f64,
    weight: &(dyn Fn(f64) -> f64 + Sync),
    spec: &QuadratureSpec,
) -> Result<Estimate, ModelError> {
    let whole_line = p1 == Profile::Free && p2 == Profile::Free;
    let reach = spec.certified_radius() * (4.0 * t).sqrt();
    let hi = x.max(xq) + reach;
    let lo = if whole_line { x.min(xq) - reach } else { 0.0 };
    let inner_spec = spec.inner(0.1);
    let failure = std::sync::Mutex::new(None);
    let outer = tanh_sinh_with_distances(
        |s, tau2, tau1| {
            let f = |xp: f64| p1.eval(tau1, x, xp) * p2.eval(tau2, xp, xq);
            let bp = gaussian_breakpoints(&[0.0, x, -x, xq, -xq], &[(4.0 * tau1).sqrt(), (4.0 * tau2).sqrt()], lo, hi);
            match accept_near_edge(gauss_kronrod(f, lo, hi, &bp, &inner_spec), tau1.min(tau2), spec) {
                Ok(v) => v * weight(s),
                Err(e) => {
                    *failure.lock().expect("lock") = Some(e);
                    f64::NAN
                }
            }
        },
        0.0,
        t,
        spec,
        true,
    );
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e.into());
    }
    Ok(outer?)
}

/// As [`scalar_convolution`], with the `x′` integral in closed form:
/// for centres `a`, `c` and times `τ₁ = t − s`, `τ₂ = s`,
/// `∫_0^∞ G_{τ₁}(x′−a) G_{τ₂}(x′−c) dx′ = ½ (4πt)^{-1/2} e^{-(a−c)²/4t} erfc(−m√k)`,
/// `m = (τ₂a + τ₁c)/t`, `k = t/(4τ₁τ₂)`.
pub fn scalar_convolution_erfc(
    p1: Profile,
    p2: Profile,
    t: f64,
    x: f64,
    xq: f64,
    weight: &(dyn Fn(f64) -> f64 + Sync),
    spec: &QuadratureSpec,
) -> Result<Estimate, ModelError> {
    let whole_line = p1 == Profile::Free && p2 == Profile::Free;
    let t1 = p1.terms(x);
    let t2 = p2.terms(xq);
    let norm = 0.5 / (4.0 * PI * t).sqrt();
    let est = tanh_sinh_with_distances(
        |s, tau2, tau1| {
            let mut acc = 0.0;
            for &(c1, a) in &t1 {
                for &(c2, c) in &t2 {
                    let gauss = (-(a - c) * (a - c) / (4.0 * t)).exp();
                    let tail = if whole_line {
                        2.0
                    } else {
                        let m = (tau2 * a + tau1 * c) / t;
                        let k = t / (4.0 * tau1 * tau2);
                        erfc(-m * k.sqrt())
                    };
                    acc += c1 * c2 * gauss * tail;
                }
            }
            norm * acc * weight(s)
        },
        0.0,
        t,
        spec,
        false,
    )?;
    Ok(est)
}

/// Brute-force `(k1 * k2)` for `n = 2`: the `y′` integral is done by
/// quadrature as well, giving a three-dimensional integral. Used
/// only as an independent check of [`convolve`].
pub fn convolve_brute_force(
    k1: &ModelKernel,
    k2: &ModelKernel,
    t: f64,
    p: &HalfSpacePoint,
    q: &HalfSpacePoint,
    spec: &QuadratureSpec,
) -> Result<KernelValue<f64>, ModelError> {
    if k1.dim != 2 {
        return Err(ModelError::Unsupported("brute-force convolution is implemented for n = 2".into()));
    }
    let (y, yq) = (p.y[0], q.y[0]);
    let reach = spec.certified_radius() * (4.0 * t).sqrt();
    let (ylo, yhi) = (y.min(yq) - reach, y.max(yq) + reach);
    let hi = p.x.max(q.x) + reach;
    let scalar = |p1: Profile, p2: Profile, w: &(dyn Fn(f64) -> f64 + Sync)| -> Result<f64, ModelError> {
        let failure = std::sync::Mutex::new(None);
        let inner_spec = spec.inner(0.1);
        let innermost = spec.inner(0.01);
        let est = tanh_sinh_with_distances(
            |s, tau2, tau1| {
                let bp = gaussian_breakpoints(&[0.0, p.x, -p.x, q.x, -q.x], &[(4.0 * tau1).sqrt(), (4.0 * tau2).sqrt()], 0.0, hi);
                let ybp = gaussian_breakpoints(&[y, yq], &[(4.0 * tau1).sqrt(), (4.0 * tau2).sqrt()], ylo, yhi);
                let fy = |yp: f64| free_gaussian(tau1, 1, (y - yp) * (y - yp)) * free_gaussian(tau2, 1, (yp - yq) * (yp - yq));
                let fx = |xp: f64| p1.eval(tau1, p.x, xp) * p2.eval(tau2, xp, q.x);
                // The integrand factorizes in (x′, y′); both factors are
                // done by quadrature.
                let edge = tau1.min(tau2);
                let ypart = match accept_near_edge(gauss_kronrod(fy, ylo, yhi, &ybp, &innermost), edge, spec) {
                    Ok(v) => v,
                    Err(e) => {
                        *failure.lock().expect("lock") = Some(e);
                        return f64::NAN;
                    }
                };
                let xpart = gauss_kronrod(|xp| fx(xp) * ypart, 0.0, hi, &bp, &inner_spec);
                match accept_near_edge(xpart, edge, spec) {
                    Ok(v) => v * w(s),
                    Err(e) => {
                        *failure.lock().expect("lock") = Some(e);
                        f64::NAN
                    }
                }
            },
            0.0,
            t,
            spec,
            true,
        );
        if let Some(e) = failure.into_inner().expect("lock") {
            return Err(e.into());
        }
        Ok(est?.value)
    };
    // The closed-form tangential factor is replaced by the quadrature
    // above, so undo it in the generic assembly.
    let tangential = free_gaussian(t, 1, (y - yq) * (y - yq));
    let result = convolve_generic(k1, k2, t, p, q, &scalar)?;
    Ok(result.scale(&(1.0 / tangential)))
}

/// The diagonal `p = p″` at `t = 1`, assembled from its closed-form
/// structure:
///
/// `K = (4π)^{-n/2} e^{-R} + σ (4π)^{-n/2} e^{-x²} c(e_0)ĉ(e_0) e^{-R} + (4π)^{-(n-1)/2} f̃(x) R_0 e^{-R}`,
///
/// with `σ = −1`, `f̃ = −J_D` for absolute and `σ = +1`, `f̃ = J_N` for
/// relative conditions (see [`super::diagonal_profile`]).
pub fn diagonal_restriction(model: &ModelKernel, x: f64, spec: &QuadratureSpec) -> Result<KernelValue<f64>, ModelError> {
    if model.kind != KernelKind::Full {
        return Err(ModelError::Unsupported("diagonal restriction needs the full model solution".into()));
    }
    if !(x >= 0.0) {
        return Err(ModelError::OutsideHalfSpace(x));
    }
    let n = model.dim as f64;
    let e = model.heat_factor(1.0);
    let sigma = match model.bc {
        BoundaryCondition::Absolute => -1.0,
        BoundaryCondition::Relative => 1.0,
    };
    let norm = (4.0 * PI).powf(-n / 2.0);
    let first = KernelValue::left(e.clone()).scale(&norm);
    let middle = KernelValue::normal_clifford_square(model.dim).right_multiply(&e).scale(&(sigma * norm * (-x * x).exp()));
    let profile = super::diagonal_profile(model.bc, x, spec)?;
    let r0e = model.normal_curvature().wedge(&e)?;
    let third = KernelValue::left(r0e).scale(&((4.0 * PI).powf(-(n - 1.0) / 2.0) * profile));
    Ok(first.add(&middle).add(&third))
}
