use std::f64::consts::PI;

use torsion_lab::quadrature::QuadratureSpec;
use torsion_lab::rtorsion::{interval_complex, r_torsion, TorsionConvention};
use torsion_lab::spectral::*;

const LENGTHS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

#[test]
fn interval_torsion_is_minus_ln_2l() {
    for l in LENGTHS {
        for bc in [BoundaryCondition::Absolute, BoundaryCondition::Relative] {
            let s = interval_spectrum(l, bc).unwrap();
            assert!((zeta_torsion(&s) + (2.0 * l).ln()).abs() < 1e-12);
        }
    }
    let a = zeta_torsion(&interval_spectrum(0.5, BoundaryCondition::Absolute).unwrap());
    let b = zeta_torsion(&interval_spectrum(3.0, BoundaryCondition::Absolute).unwrap());
    assert!((a - b + (0.5_f64 / 3.0).ln()).abs() < 1e-12);
}

#[test]
fn split_mellin_route_matches_closed_form() {
    let q = QuadratureSpec::with_tolerance(1e-11);
    for l in LENGTHS {
        let s = interval_spectrum(l, BoundaryCondition::Absolute).unwrap();
        let split = zeta_torsion_split(&s, &s.derived_asymptotics(), &q).unwrap();
        assert!((split.value - zeta_torsion(&s)).abs() < 1e-7, "L = {l}: {} vs {}", split.value, zeta_torsion(&s));
        assert!(split.error < 1e-8);
    }
    let c = circle_spectrum(1.7).unwrap();
    let split = zeta_torsion_split(&c, &c.derived_asymptotics(), &q).unwrap();
    assert!((split.value - zeta_torsion(&c)).abs() < 1e-7);
    assert!((zeta_torsion(&c) + 2.0 * 1.7_f64.ln()).abs() < 1e-12);
}

#[test]
fn split_route_rejects_incomplete_asymptotics() {
    let s = interval_spectrum(1.0, BoundaryCondition::Absolute).unwrap();
    let wrong = HeatAsymptotics { terms: vec![(0.0, -0.5)] };
    assert!(zeta_torsion_split(&s, &wrong, &QuadratureSpec::with_tolerance(1e-10)).is_err());
}

#[test]
fn mellin_transform_at_two() {
    for l in [0.5, 1.0, 2.0] {
        let s = interval_spectrum(l, BoundaryCondition::Absolute).unwrap();
        // Tail beyond t_max is below e^{−40}.
        let t_max = 40.0 * l * l / (PI * PI);
        let m = mellin_transform(&s, 2.0, t_max, &QuadratureSpec::with_tolerance(1e-11)).unwrap();
        let expected = zeta_torsion_at(&s, 2.0);
        assert!((expected - l.powi(4) / 90.0).abs() < 1e-14);
        assert!((m.value - expected).abs() < 1e-6, "{} vs {}", m.value, expected);
    }
}

#[test]
fn neumann_heat_trace_matches_image_expansion() {
    for l in [0.5, 1.0, 2.0] {
        let s = interval_spectrum(l, BoundaryCondition::Absolute).unwrap();
        let t = 1e-3;
        let exact = l / (4.0 * PI * t).sqrt() + 0.5;
        assert!((heat_trace(&s, 0, t).unwrap() - exact).abs() < 1e-4 * exact);
    }
}

fn anomaly(l: f64, bc: BoundaryCondition, rank: u32) -> f64 {
    let mut cx = interval_complex(3, l, bc == BoundaryCondition::Relative).unwrap();
    cx.representation_rank = rank;
    spectral_anomaly(l, bc, rank, &r_torsion(&cx, TorsionConvention::Unhalved).unwrap()).unwrap()
}

#[test]
fn interval_anomaly_is_length_independent() {
    for bc in [BoundaryCondition::Absolute, BoundaryCondition::Relative] {
        let reference = anomaly(1.0, bc, 1);
        for l in LENGTHS {
            assert!((anomaly(l, bc, 1) - reference).abs() < 1e-8);
        }
        assert!((anomaly(1.0, bc, 2) - 2.0 * reference).abs() < 1e-12);
    }
    assert!((anomaly(1.3, BoundaryCondition::Absolute, 1) - anomaly(1.3, BoundaryCondition::Relative, 1)).abs() < 1e-12);
    // Measured constant in the unhalved convention.
    assert!((anomaly(1.0, BoundaryCondition::Absolute, 1) + std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn anomaly_refuses_mismatched_conventions() {
    let t = r_torsion(&interval_complex(1, 1.0, false).unwrap(), TorsionConvention::Classical).unwrap();
    assert!(spectral_anomaly(1.0, BoundaryCondition::Absolute, 1, &t).is_err());
}
