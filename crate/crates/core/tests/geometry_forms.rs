use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torsion_lab::exterior::{random_curvature_tensor, Berezin, SecondFundamentalForm};
use torsion_lab::geometry::*;
use torsion_lab::quadrature::QuadratureSpec;

#[test]
fn stokes_on_disc_and_caps() {
    let spec = QuadratureSpec::with_tolerance(1e-9);
    let b = Berezin::default();
    for geo in [flat_disc(BoundaryGrid::default()).unwrap(), curved_cap(1.0, BoundaryGrid::default()).unwrap(), curved_cap(2.2, BoundaryGrid::default()).unwrap()] {
        let interior = geo.euler_difference(&spec, &b).unwrap().unwrap();
        let boundary = geo.transgression(&spec, &b).unwrap();
        let closed = geo.stokes.as_ref().unwrap().closed_form;
        assert!((interior - boundary).abs() < 1e-6, "{}: {interior} vs {boundary}", geo.name);
        assert!((interior - closed).abs() < 1e-6, "{}: {interior} vs {closed}", geo.name);
    }
}

#[test]
fn gauss_bonnet_on_the_round_sphere() {
    // Hemisphere of radius a from the equator: g = dx² + a² cos²(x/a) dθ².
    let a = 2.0;
    let p = MetricPatch::diagonal("hemisphere", vec![0.0, 0.0], vec![a * PI / 2.0, TAU], move |u| {
        vec![1.0, (a * (u[0] / a).cos()).powi(2)]
    })
    .unwrap();
    let fam = DeformationFamily::new(p.clone(), MetricPatch::diagonal("flat", vec![0.0, 0.0], vec![a * PI / 2.0, TAU], |_| vec![1.0, 1.0]).unwrap()).unwrap();
    let spec = QuadratureSpec::with_tolerance(1e-10);
    let half = euler_difference_integral(&fam, (0.0, a * PI / 2.0 - 1e-3), &[], &spec, &Berezin::default()).unwrap();
    // Cutting off the pole loses about 1e-7.
    assert!((2.0 * half - 2.0).abs() < 1e-6, "{half}");
}

#[test]
fn transgression_vanishes_on_product_collars_and_is_grid_independent_on_the_disc() {
    let spec = QuadratureSpec::with_tolerance(1e-9);
    let b = Berezin::default();
    let product = product_collar(&BoundaryMetric::Circle { length: TAU }, BoundaryGrid::default()).unwrap();
    assert_eq!(product.transgression(&spec, &b).unwrap(), 0.0);
    let coarse = flat_disc(BoundaryGrid::default()).unwrap().transgression(&spec, &b).unwrap();
    let fine = flat_disc(BoundaryGrid::default().refined()).unwrap().transgression(&spec, &b).unwrap();
    assert!((coarse + 1.0).abs() < 1e-9 && (fine + 1.0).abs() < 1e-9);
}

#[test]
fn collar_normalization_of_reparameterized_disc() {
    // r = 1 − u − u², so x = u + u² is the distance to the rim.
    let raw = MetricPatch::diagonal("disc-raw", vec![0.0, 0.0], vec![0.6, TAU], |u| {
        let r = 1.0 - u[0] - u[0] * u[0];
        vec![(1.0 + 2.0 * u[0]).powi(2), r * r]
    })
    .unwrap();
    let collar = collar_normalize(&raw, CollarOptions { depth: 0.5, step: 2e-3 }).unwrap();
    for &(x, th) in &[(0.0, 1.0), (0.2, 2.0), (0.45, 5.0)] {
        let g = collar.metric(&[x, th]);
        assert!((g[0][0] - 1.0).abs() < 1e-8);
        assert!(g[0][1].abs() < 1e-8);
        assert!((g[1][1] - (1.0 - x) * (1.0 - x)).abs() < 1e-8, "{x}: {}", g[1][1]);
    }
    assert!((second_fundamental_form_at(&collar, &[1.0]).unwrap().get(1, 1) - 1.0).abs() < 1e-6);
}

#[test]
fn collar_normalization_of_stereographic_hemisphere() {
    // g = 4(dρ² + ρ² dθ²)/(1 + ρ²)², boundary ρ = 1 (the equator), u = 1 − ρ.
    let raw = MetricPatch::diagonal("stereo", vec![0.0, 0.0], vec![0.8, TAU], |u| {
        let rho = 1.0 - u[0];
        let c = 4.0 / (1.0 + rho * rho).powi(2);
        vec![c, c * rho * rho]
    })
    .unwrap();
    let collar = collar_normalize(&raw, CollarOptions { depth: 0.6, step: 2e-3 }).unwrap();
    for &x in &[0.1, 0.3, 0.55] {
        let g = collar.metric(&[x, 0.5]);
        assert!((g[0][0] - 1.0).abs() < 1e-8 && g[0][1].abs() < 1e-8);
        assert!((g[1][1] - x.cos().powi(2)).abs() < 1e-8, "{x}: {} vs {}", g[1][1], x.cos().powi(2));
    }
}

#[test]
fn collar_normalization_is_identity_on_product_charts() {
    let raw = MetricPatch::diagonal("product", vec![0.0, 0.0], vec![1.0, 3.0], |u| vec![1.0, 2.0 + u[1].sin()]).unwrap();
    let collar = collar_normalize(&raw, CollarOptions::default()).unwrap();
    for &(x, t) in &[(0.1, 0.5), (0.4, 2.5)] {
        let (a, b) = (raw.metric(&[x, t]), collar.metric(&[x, t]));
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn collar_normalization_reports_focal_points() {
    // Euclidean plane in coordinates (u, t) ↦ (t, u + t²/2): the boundary is a
    // parabola whose inward normals focus at depth 1 near the vertex.
    let raw = MetricPatch::new("parabola", vec![0.0, -2.0], vec![3.0, 2.0], std::sync::Arc::new(|u: &[f64]| {
        vec![vec![1.0, u[1]], vec![u[1], 1.0 + u[1] * u[1]]]
    }))
    .unwrap();
    assert!(collar_normalize(&raw, CollarOptions { depth: 0.6, step: 2e-3 }).is_ok());
    let err = collar_normalize(&raw, CollarOptions { depth: 1.2, step: 2e-3 }).unwrap_err();
    assert!(matches!(err, GeometryError::FocalPoint(_)), "{err:?}");
}

#[test]
fn hodge_star_variation_leading_term() {
    let disc = flat_disc(BoundaryGrid::default()).unwrap();
    let f = disc.family().unwrap();
    let at_zero = hodge_star_variation(f, 0.5, &[0.0, 1.0]).unwrap();
    assert!(at_zero.exact.is_zero());
    // Remainder is O(x²): halving x divides it by about 4.
    let r1 = hodge_star_variation(f, 0.5, &[0.02, 1.0]).unwrap().remainder();
    let r2 = hodge_star_variation(f, 0.5, &[0.01, 1.0]).unwrap().remainder();
    let exponent = (r1 / r2).log2();
    assert!((exponent - 2.0).abs() < 0.1, "exponent {exponent}");
    let lead = hodge_star_variation(f, 0.5, &[0.01, 1.0]).unwrap();
    assert!(lead.remainder() < 0.02 * lead.leading.terms().map(|(_, v)| v.abs()).fold(0.0, f64::max));
}

#[test]
fn parity_vanishing_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let b = Berezin::default();
    for n in 2..=5 {
        for _ in 0..20 {
            let r = random_curvature_tensor::<f64, _>(n, &mut rng);
            let h = SecondFundamentalForm::<f64>::random(n, &mut rng);
            let t = transgression_density(&r, &h, &b).unwrap();
            let p = phi_density(&r, &h, &b).unwrap();
            if n % 2 == 1 {
                assert_eq!(t, 0.0);
            } else {
                assert_eq!(p, 0.0);
            }
        }
    }
}

#[test]
fn product_collar_prediction_is_exactly_chi_ln2() {
    let spec = QuadratureSpec::with_tolerance(1e-9);
    let b = Berezin::default();
    for boundary in [BoundaryMetric::RoundSphere { radius: 1.3 }, BoundaryMetric::Circle { length: 3.0 }, BoundaryMetric::FlatTorus { lengths: vec![1.0, 2.0] }] {
        let geo = product_collar(&boundary, BoundaryGrid::default()).unwrap();
        for rank in [1, 2] {
            let p = predict_anomaly(&geo, rank, 0.957, &spec, &b).unwrap();
            assert_eq!(p.term_transgression, 0.0);
            assert_eq!(p.term_phi, 0.0);
            assert_eq!(p.prediction, rank as f64 * geo.boundary_euler_characteristic as f64 * std::f64::consts::LN_2);
        }
    }
}

#[test]
fn prediction_is_stable_under_grid_refinement() {
    let spec = QuadratureSpec::with_tolerance(1e-10);
    let b = Berezin::default();
    let coarse = predict_anomaly(&curved_cap(1.2, BoundaryGrid::default()).unwrap(), 1, 0.957, &spec, &b).unwrap();
    let fine = predict_anomaly(&curved_cap(1.2, BoundaryGrid::default().refined()).unwrap(), 1, 0.957, &spec, &b).unwrap();
    assert!((coarse.prediction - fine.prediction).abs() < 1e-9);
    assert!((coarse.term_transgression + 1.2_f64.cos()).abs() < 1e-8);
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
    #[test]
    fn parity_vanishing_holds_for_any_seed(seed in 0u64..u64::MAX, n in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Berezin::default();
        let r = random_curvature_tensor::<f64, _>(n, &mut rng);
        let h = SecondFundamentalForm::<f64>::random(n, &mut rng);
        let vanishing = if n % 2 == 1 { transgression_density(&r, &h, &b).unwrap() } else { phi_density(&r, &h, &b).unwrap() };
        proptest::prop_assert_eq!(vanishing, 0.0);
    }
}
