use proptest::prelude::*;
use semiheat_core::fowler::{pohozaev, to_fowler, FowlerParams};
use semiheat_core::potential::{CoefficientForm, PotentialSpec};
use semiheat_core::shooting::*;

fn pure(n: u32, q: f64) -> PotentialSpec {
    PotentialSpec::pure_power(n, q).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Largest |U_a − U_b| over a log grid on [lo, hi].
fn sup_gap(a: &StationaryProfile, b: &StationaryProfile, lo: f64, hi: f64) -> f64 {
    semiheat_core::potential::log_grid(lo, hi, 50)
        .into_iter()
        .map(|r| (a.u(r).unwrap() - b.u(r).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn supercritical_regular_solutions_are_slow_ground_states() {
    let spec = pure(3, 7.0);
    let p1 = 0.24f64.powf(0.2);
    for alpha in [0.5, 1.0, 2.0] {
        let prof = regular_solution(&spec, alpha, 1e4).unwrap();
        assert_eq!(prof.classification, Classification::GroundStateSlow, "alpha = {alpha}");
        assert!(prof.samples.iter().all(|x| x.u > 0.0));
        assert!(rel(prof.samples[0].u, alpha) < 1e-9);
        assert!(rel(prof.fits.slow_decay.unwrap(), p1) < 1e-2);
    }
}

#[test]
fn subcritical_regular_solution_crosses() {
    let prof = regular_solution(&pure(3, 5.0), 1.0, 1e4).unwrap();
    let Classification::Crossing { radius } = prof.classification else { panic!("{:?}", prof.classification) };
    assert!(radius.is_finite() && radius > 0.0);
    let (u, du) = prof.value(radius).unwrap();
    assert!(u.abs() < 1e-10, "U(R) = {u:e}");
    assert!(du < 0.0);
}

#[test]
fn autonomous_scaling_law() {
    let spec = pure(3, 7.0);
    let m = 0.4;
    let (one, two) = (regular_solution(&spec, 1.0, 1e5).unwrap(), regular_solution(&spec, 2.0, 1e4).unwrap());
    let k = 2f64.powf(1.0 / m);
    let worst = semiheat_core::potential::log_grid(1e-3, 1e4, 40)
        .into_iter()
        .map(|r| (two.u(r).unwrap() - 2.0 * one.u(r * k).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn fast_decay_examples() {
    let q5 = fast_decay_solution(&pure(3, 5.0), 1.0, 1e-4).unwrap();
    assert!(matches!(q5.classification, Classification::SingularFast { beta } if beta == 1.0));
    assert!(q5.samples.iter().all(|x| x.u > 0.0));
    assert!(rel(q5.fits.fast_decay.unwrap(), 1.0) < 1e-10);
    let (inner, _) = limit_fixed_points(&pure(3, 5.0)).unwrap();
    assert!(rel(q5.fits.singular.unwrap(), inner.p1) < 1e-2);

    let q7 = fast_decay_solution(&pure(3, 7.0), 1.0, 1e-4).unwrap();
    assert!(matches!(q7.classification, Classification::Crossing { radius } if radius > 0.0));
}

#[test]
fn singular_solution_is_the_exact_power() {
    let spec = pure(3, 7.0);
    let p1 = 0.24f64.powf(0.2);
    let phi = |r: f64| p1 * r.powf(-0.4);
    let prof = singular_solution(&spec, -30.0).unwrap();
    for r in semiheat_core::potential::log_grid(1e-3, 1.0, 10) {
        assert!(rel(prof.u(r).unwrap(), phi(r)) < 1e-6, "r = {r}");
    }
    // φ'' + (2/r) φ' + φ⁶ with exact derivatives.
    for r in semiheat_core::potential::log_grid(1e-2, 1e2, 5) {
        let (d1, d2) = (-0.4 * phi(r) / r, 0.4 * 1.4 * phi(r) / (r * r));
        let residual = d2 + 2.0 / r * d1 + phi(r).powi(6);
        assert!(residual.abs() < 1e-8 * d2.abs(), "r = {r}");
    }
}

#[test]
fn singular_solution_with_radial_coefficient() {
    let spec = PotentialSpec::single_k(3, 7.0, CoefficientForm::OnePlusPower { a: 0.4 }).unwrap();
    let (inner, _) = limit_fixed_points(&spec).unwrap();
    let prof = singular_solution(&spec, -30.0).unwrap();
    assert!(rel(prof.fits.singular.unwrap(), inner.p1) < 1e-2);
    let r = 1e-8;
    assert!(rel(prof.u(r).unwrap() * r.powf(0.4), inner.p1) < 1e-2);
}

#[test]
fn slow_decay_examples() {
    let q7 = pure(3, 7.0);
    let (sing, slow) = (singular_solution(&q7, -30.0).unwrap(), slow_decay_solution(&q7, 30.0).unwrap());
    for r in [1e-3, 0.1, 1.0, 10.0, 1e3] {
        assert!(rel(sing.u(r).unwrap(), slow.u(r).unwrap()) < 1e-8, "r = {r}");
    }

    let q5 = slow_decay_solution(&pure(3, 5.0), 30.0).unwrap();
    assert!(rel(q5.fits.slow_decay.unwrap(), (2.0f64 / 9.0).cbrt()) < 1e-2);
    assert!(q5.samples.iter().all(|x| x.u > 0.0));
    assert!(matches!(q5.classification, Classification::SingularSlow | Classification::GroundStateSlow));
}

#[test]
fn serrin_range_is_required() {
    assert!(matches!(singular_solution(&pure(3, 3.5), -30.0), Err(ShootError::BelowSerrin { .. })));
    assert!(matches!(slow_decay_solution(&pure(3, 3.5), 30.0), Err(ShootError::BelowSerrin { .. })));
    assert!(matches!(regular_solution(&pure(3, 7.0), -1.0, 10.0), Err(ShootError::Parameter(_))));
}

#[test]
fn truncated_range_is_undecided() {
    let opts = ShootOptions { extension: 0.0, ..ShootOptions::default() };
    let prof = regular_solution_with(&pure(3, 7.0), 1.0, 2.0, &opts).unwrap();
    assert_eq!(classify(&prof), Classification::Undecided);
}

#[test]
fn crossing_radius_ordering() {
    let q5 = pure(3, 5.0);
    let curve = crossing_radius_curve(&q5, &[1e-3, 0.25, 0.5, 1.0], 1e8).unwrap();
    let radii: Vec<f64> = curve.iter().map(|(_, r)| r.expect("crossing")).collect();
    assert!(radii.windows(2).all(|w| w[0] > w[1]), "{radii:?}");
    assert!(radii[0] > 10.0 * radii[3]);

    let q7 = crossing_radius_curve(&pure(3, 7.0), &[0.5, 1.0, 2.0], 1e4).unwrap();
    assert!(q7.iter().all(|(_, r)| r.is_none()));
}

#[test]
fn first_intersection_examples() {
    let q7 = pure(3, 7.0);
    let (two, one) = (regular_solution(&q7, 2.0, 1e4).unwrap(), regular_solution(&q7, 1.0, 1e4).unwrap());
    let z = first_intersection(&two, &one).unwrap();
    assert!(z.slope_a < z.slope_b, "{z:?}");
    assert!(rel(two.u(z.radius).unwrap(), one.u(z.radius).unwrap()) < 1e-9);
    assert!(matches!(first_intersection(&one, &one), Err(ShootError::Identical)));
    assert_eq!(count_sign_changes(&one, &one, (1.0, 1e4)).unwrap(), 0);

    let n12 = pure(12, 5.0);
    let (a, b) = (regular_solution(&n12, 2.0, 1e4).unwrap(), regular_solution(&n12, 1.0, 1e4).unwrap());
    assert!(matches!(first_intersection(&a, &b), Err(ShootError::NotFound { .. })));
    assert_eq!(count_sign_changes(&a, &b, (1e-3, 1e4)).unwrap(), 0);
}

#[test]
fn slow_ground_states_oscillate_around_each_other() {
    let q7 = pure(3, 7.0);
    let (a, b) = (regular_solution(&q7, 1.0, 1e4).unwrap(), regular_solution(&q7, 2.0, 1e4).unwrap());
    let radii = sign_change_radii(&a, &b, (1.0, 1e4)).unwrap();
    assert!(radii.len() >= 3, "{radii:?}");
    assert!(radii.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn regular_solutions_depend_continuously_on_alpha() {
    let q7 = pure(3, 7.0);
    let base = regular_solution(&q7, 1.0, 1e3).unwrap();
    let gaps: Vec<f64> = [1e-3, 1e-4]
        .iter()
        .map(|h| {
            let plus = regular_solution(&q7, 1.0 + h, 1e3).unwrap();
            let minus = regular_solution(&q7, 1.0 - h, 1e3).unwrap();
            sup_gap(&base, &plus, 1e-3, 1e3).max(sup_gap(&base, &minus, 1e-3, 1e3))
        })
        .collect();
    assert!(gaps[1] < 0.2 * gaps[0], "{gaps:?}");
    assert!(gaps[1] < 2e-4);
}

/// H in the 2^* frame on [10⁻⁴, 10⁴]. Farther out a fast-decay profile is
/// still its linear start data and H is rounding noise around zero.
fn pohozaev_along(prof: &StationaryProfile) -> Vec<f64> {
    let star = FowlerParams::sobolev(3, 1.0);
    prof.samples
        .iter()
        .filter(|x| x.u > 0.0 && x.r <= 1e4)
        .map(|x| pohozaev(prof.spec(), &to_fowler(x.u, x.du, x.r, &star).unwrap(), &star))
        .collect()
}

#[test]
fn pohozaev_separates_regular_and_fast_decay() {
    let q7 = pure(3, 7.0);
    assert!(pohozaev_along(&regular_solution(&q7, 1.0, 1e4).unwrap()).iter().all(|h| *h < 0.0));
    assert!(pohozaev_along(&fast_decay_solution(&q7, 1.0, 1e-4).unwrap()).iter().all(|h| *h > 0.0));

    let q5 = pure(3, 5.0);
    assert!(pohozaev_along(&regular_solution(&q5, 1.0, 1e4).unwrap()).iter().all(|h| *h > 0.0));
    assert!(pohozaev_along(&fast_decay_solution(&q5, 1.0, 1e-4).unwrap()).iter().all(|h| *h < 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn scaling_law_for_any_height(d in 0.3..3.0f64) {
        let spec = pure(3, 7.0);
        let k = d.powf(2.5);
        let (scaled, one) = (regular_solution(&spec, d, 1e3).unwrap(), regular_solution(&spec, 1.0, 1e3 * k.max(1.0)).unwrap());
        for r in semiheat_core::potential::log_grid(1e-3, 1e3, 10) {
            prop_assert!((scaled.u(r).unwrap() - d * one.u(r * k).unwrap()).abs() < 1e-6 * d);
        }
    }

    #[test]
    fn fast_decay_fit_is_beta(beta in 0.1..10.0f64) {
        let prof = fast_decay_solution(&pure(3, 5.0), beta, 1e-2).unwrap();
        prop_assert!(rel(prof.fits.fast_decay.unwrap(), beta) < 1e-10);
    }
}
