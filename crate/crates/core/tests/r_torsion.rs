use num::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torsion_lab::rtorsion::*;
use torsion_lab::scalar::{rational, Rational};

fn classical(cx: &BasedChainComplex) -> f64 {
    r_torsion(cx, TorsionConvention::Classical).unwrap().ln_tau
}

fn family() -> Vec<BasedChainComplex> {
    vec![
        interval_complex(1, 1.7, false).unwrap(),
        interval_complex(4, 0.3, false).unwrap(),
        interval_complex(1, 2.5, true).unwrap(),
        interval_complex(3, 2.5, true).unwrap(),
        cycle_complex(1, 1.0, 1).unwrap(),
        cycle_complex(5, 3.0, 1).unwrap(),
        cycle_complex(1, 1.0, -1).unwrap(),
        cycle_complex(4, 1.0, -1).unwrap(),
    ]
}

#[test]
fn subdivision_invariance_on_paths_and_cycles() {
    for cx in family() {
        let base = classical(&cx);
        let mut sub = cx.clone();
        for _ in 0..3 {
            sub = subdivide(&sub).unwrap();
            assert!((classical(&sub) - base).abs() < 1e-12, "{:?}", cx.ranks);
            assert_eq!(sub.euler_characteristic(), cx.euler_characteristic());
        }
    }
}

#[test]
fn double_subdivision_is_iterated_single() {
    let cx = cycle_complex(3, 1.0, 1).unwrap();
    let twice = subdivide(&subdivide(&cx).unwrap()).unwrap();
    assert_eq!(twice.ranks, vec![12, 12]);
    assert_eq!(twice, subdivide(&subdivide(&cx).unwrap()).unwrap());
}

#[test]
fn subdivision_needs_graph_data() {
    assert!(matches!(subdivide(&two_term_complex(2)), Err(TorsionError::Unsupported(_))));
}

#[test]
fn twisted_circle() {
    // Acyclic; δ on one vertex and one edge is −2.
    assert!((classical(&cycle_complex(1, 1.0, -1).unwrap()) + 2f64.ln()).abs() < 1e-15);
}

#[test]
fn lifts_do_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for cx in family() {
        let base = classical(&cx);
        let mut lifts = cx.standard_lifts();
        // Adding cocycles to lifts leaves their images unchanged.
        for (p, list) in lifts.iter_mut().enumerate() {
            let cocycles = &cx.cohomology[p].vectors;
            for b in list.iter_mut() {
                for z in cocycles {
                    let k = rational(rng.gen_range(-5..=5), rng.gen_range(1..=4));
                    for (x, y) in b.iter_mut().zip(z) {
                        *x += &k * y;
                    }
                }
            }
        }
        let t = r_torsion_with_lifts(&cx, TorsionConvention::Classical, &lifts).unwrap();
        assert!((t.ln_tau - base).abs() < 1e-12);
    }
}

#[test]
fn interval_scaling_derivative() {
    // ln τ = −½ ln L for the classical convention.
    for relative in [false, true] {
        let f = |l: f64| classical(&interval_complex(2, l, relative).unwrap());
        let l = 1.4_f64;
        let h = 1e-4_f64;
        let d = (f(l * (h).exp()) - f(l * (-h).exp())) / (2.0 * h);
        assert!((d + 0.5).abs() < 1e-6, "{d}");
    }
}

#[test]
fn representation_rank_scales_torsion() {
    let mut cx = cycle_complex(3, 2.0, -1).unwrap();
    let one = classical(&cx);
    cx.representation_rank = 3;
    assert!((classical(&cx) - 3.0 * one).abs() < 1e-14);
}

#[test]
fn euler_characteristic_is_additive() {
    let a = interval_complex(2, 1.0, false).unwrap();
    let b = cycle_complex(3, 1.0, 1).unwrap();
    let u = disjoint_union(&a, &b);
    // Harmonic scales differ (L = 1 gives 0 for both), so the union is allowed here.
    let u = u.unwrap();
    assert_eq!(u.euler_characteristic(), a.euler_characteristic() + b.euler_characteristic());
    assert!((classical(&u) - classical(&a) - classical(&b)).abs() < 1e-14);
}

fn random_invertible(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Rational>> {
    loop {
        let a: Vec<Vec<Rational>> =
            (0..n).map(|_| (0..n).map(|_| rational(rng.gen_range(-6..=6), rng.gen_range(1..=5))).collect()).collect();
        if det(&a) != Rational::zero() {
            return a;
        }
    }
}

fn det(a: &[Vec<Rational>]) -> Rational {
    // Cofactor expansion: independent of the library's elimination.
    if a.len() == 1 {
        return a[0][0].clone();
    }
    (0..a.len())
        .map(|c| {
            let minor: Vec<Vec<Rational>> = a[1..].iter().map(|r| r.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, x)| x.clone()).collect()).collect();
            let sign = if c % 2 == 0 { Rational::one() } else { -Rational::one() };
            sign * &a[0][c] * det(&minor)
        })
        .fold(Rational::zero(), |s, t| s + t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn basis_change_covariance(seed in any::<u64>(), cells in 1usize..5, extra in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // A union of cycles has cohomology of dimension > 1 in both degrees.
        let mut cx = cycle_complex(cells, 1.0, 1).unwrap();
        for _ in 0..extra {
            cx = disjoint_union(&cx, &cycle_complex(rng.gen_range(1..4), 1.0, 1).unwrap()).unwrap();
        }
        let base = classical(&cx);
        for p in 0..2 {
            let k = cx.cohomology[p].vectors.len();
            let a = random_invertible(k, &mut rng);
            let mut changed = cx.clone();
            changed.cohomology[p] = cx.cohomology[p].transformed(&a);
            let expected = if p == 0 { 1.0 } else { -1.0 } * ln_abs(&det(&a));
            prop_assert!((classical(&changed) - base - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn documented_json_example_parses() {
    let text = r#"{"ranks": [2, 1], "differentials": [[[0, 0, -1], [0, 1, 1]]],
 "cohomology": [{"vectors": [["1", "1"]], "log_scale": 0.0}, {"vectors": []}]}"#;
    let cx = BasedChainComplex::from_json(text).unwrap();
    assert_eq!(cx.euler_characteristic(), 1);
    assert_eq!(classical(&cx), 0.0);
}
