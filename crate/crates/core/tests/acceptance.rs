use torsion_lab::acceptance::*;

fn check(r: CriterionResult) {
    println!("{r}");
    assert!(r.passed, "{r}");
}

#[test]
fn criterion_01_clifford_supertrace() {
    check(criterion_1(&AcceptanceConfig::default()));
}

#[test]
fn criterion_02_commutator_lemma() {
    check(criterion_2(&AcceptanceConfig::default()));
}

#[test]
fn criterion_03_model_solution_residuals() {
    check(criterion_3(&AcceptanceConfig::default()));
}

#[test]
fn criterion_04_diagonal_display() {
    check(criterion_4(&AcceptanceConfig::default()));
}

#[test]
fn criterion_05_constant_c() {
    check(criterion_5(&AcceptanceConfig::default()));
}

#[test]
fn criterion_06_interval_torsion() {
    check(criterion_6(&AcceptanceConfig::default()));
}

#[test]
fn criterion_07_parity_vanishing() {
    check(criterion_7(&AcceptanceConfig::default()));
}

#[test]
fn criterion_08_transgression_stokes() {
    check(criterion_8(&AcceptanceConfig::default()));
}

#[test]
fn criterion_09_product_prediction() {
    check(criterion_9(&AcceptanceConfig::default()));
}

#[test]
fn criterion_10_r_torsion_invariance() {
    check(criterion_10(&AcceptanceConfig::default()));
}

#[test]
fn perturbed_berezin_normalization_fails_the_stokes_check() {
    let mut config = AcceptanceConfig::default();
    config.berezin.scale = 1.01;
    let r = criterion_8(&config);
    println!("{r}");
    assert!(!r.passed);
}

#[test]
fn another_seed_gives_the_same_verdicts() {
    let config = AcceptanceConfig { seed: 7, ..AcceptanceConfig::default() };
    for r in [criterion_2(&config), criterion_4(&config), criterion_7(&config), criterion_10(&config)] {
        println!("{r}");
        assert!(r.passed, "{r}");
    }
}
