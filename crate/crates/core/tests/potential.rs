use proptest::prelude::*;
use semiheat_core::potential::*;

fn pure(n: u32, q: f64) -> PotentialSpec {
    PotentialSpec::pure_power(n, q).unwrap()
}

fn single(q: f64, form: CoefficientForm) -> PotentialSpec {
    PotentialSpec::single_k(3, q, form).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn exponents_n3_q7() {
    let e = critical_exponents(&pure(3, 7.0)).unwrap();
    assert!(close(e.serrin, 4.0, 1e-12));
    assert!(close(e.sobolev, 6.0, 1e-12));
    assert!(close(e.fujita_plus_one, 8.0 / 3.0, 1e-12));
    assert!(close(e.sigma_low, 4.1876, 1e-4));
    assert!(e.sigma_high.is_infinite());
    assert!(e.stable_node_threshold.is_infinite());
    assert_eq!((e.l_u, e.l_s), (7.0, 7.0));
    assert!(close(e.m_u, 0.4, 1e-12));
}

#[test]
fn sigma_high_n12_closed_form() {
    let e = critical_exponents(&pure(12, 5.0)).unwrap();
    let exact = (100.0 - 48.0 + 8.0 * 11f64.sqrt()) / 20.0;
    assert!(close(e.sigma_high, exact, 1e-12));
    assert!(close(e.sigma_high, 3.9266, 1e-4));
    assert!(close(e.stable_node_threshold, e.sigma_high + 1.0, 1e-12));
}

#[test]
fn sigma_root_finding_agrees_with_closed_forms() {
    for n in [3, 4, 6, 10, 11, 12, 20] {
        let (low, high) = sigma_by_root_finding(n).unwrap();
        assert!(close(low, sigma_low_closed(n), 1e-9), "n = {n}");
        if n <= 10 {
            assert!(high.is_infinite());
        } else {
            // The tabulated exponent is stated for u^p; our nonlinearity is u^{q−1}.
            assert!(close(high, sigma_high_closed(n) + 1.0, 1e-9), "n = {n}");
        }
    }
}

#[test]
fn sigma_high_finite_exactly_above_ten() {
    for n in 3..=30 {
        assert_eq!(sigma_high_closed(n).is_finite(), n > 10, "n = {n}");
    }
}

#[test]
fn exponent_chain_is_ordered() {
    for n in 3..=40 {
        let e = critical_exponents(&pure(n, 5.0)).unwrap();
        let chain = [e.fujita_plus_one, e.serrin, e.sobolev, e.stable_node_threshold];
        assert!(chain.windows(2).all(|w| w[0] < w[1]), "n = {n}: {chain:?}");
    }
}

#[test]
fn growing_coefficient_shifts_l_at_infinity() {
    let e = critical_exponents(&single(7.0, CoefficientForm::OnePlusPower { a: 0.4 })).unwrap();
    assert!(close(e.l_u, 7.0, 1e-12));
    assert!(close(e.l_s, 2.0 * 7.4 / 2.4, 1e-12));
}

#[test]
fn matukuma_coefficient_shifts_l_at_infinity() {
    let e = critical_exponents(&single(6.0, CoefficientForm::Matukuma { a: 0.5 })).unwrap();
    assert!(close(e.l_u, 6.0, 1e-12));
    assert!(close(e.l_s, 2.0 * 5.5 / 1.5, 1e-12));
}

#[test]
fn evaluations() {
    let q7 = pure(3, 7.0);
    assert_eq!(eval_f(&q7, 0.0, 1.0).unwrap(), 0.0);
    assert!(close(eval_f(&q7, 2.0, 5.0).unwrap(), 64.0, 1e-14));
    assert!(close(eval_primitive(&q7, 1.0, 3.0).unwrap(), 1.0 / 7.0, 1e-14));
    assert_eq!(eval_primitive(&q7, 0.0, 3.0).unwrap(), 0.0);

    let one = Coefficient::constant(1.0);
    let min = PotentialSpec::new(3, Family::MinK { q_low: 3.0, q_high: 4.0, k: one }).unwrap();
    // f = u^{q−1}, so the smaller value at u = 1/2 comes from q = 4.
    assert!(close(eval_f(&min, 0.5, 1.0).unwrap(), 0.125, 1e-14));

    let sum = PotentialSpec::new(3, Family::SumK { terms: [Term { q: 3.0, k: one }, Term { q: 4.0, k: one }] }).unwrap();
    assert!(close(eval_primitive(&sum, 1.0, 2.0).unwrap(), 1.0 / 3.0 + 0.25, 1e-14));
}

#[test]
fn invalid_arguments_are_rejected() {
    let q7 = pure(3, 7.0);
    assert!(matches!(eval_f(&q7, -1.0, 1.0), Err(PotentialError::NegativeU(_))));
    assert!(matches!(eval_f(&q7, 1.0, 0.0), Err(PotentialError::NonPositiveR(_))));
    assert!(matches!(PotentialSpec::pure_power(2, 7.0), Err(PotentialError::Dimension(2))));
    assert!(matches!(PotentialSpec::pure_power(3, 1.5), Err(PotentialError::Exponent(_))));
    let one = Coefficient::constant(1.0);
    assert!(PotentialSpec::new(3, Family::MinK { q_low: 5.0, q_high: 4.0, k: one }).is_err());
}

#[test]
fn h_and_a_signs_of_pure_powers() {
    let r_grid = log_grid(1e-4, 1e4, 8);
    let s_grid: Vec<f64> = (-20..=20).map(f64::from).collect();
    let y_grid = log_grid(1e-3, 1e3, 4);
    let cases = [(7.0, HSign::HMinus, ASign::AMinus), (5.0, HSign::HPlus, ASign::APlus), (6.0, HSign::Boundary, ASign::Neither)];
    for (q, h, a) in cases {
        let spec = pure(3, q);
        assert_eq!(check_h_sign(&spec, &r_grid).unwrap(), h, "q = {q}");
        assert_eq!(check_a_sign(&spec, &s_grid, &y_grid).unwrap(), a, "q = {q}");
    }
}

#[test]
fn coefficient_asymptotes() {
    let k: Coefficient = CoefficientForm::AffinePower { c: 2.0, delta: 0.5, b: 3.0, a: 1.5, p: -0.5 }.into();
    let zero = k.at_zero();
    let inf = k.at_infinity();
    assert!(close(k.eval(1e-6) / (zero.coef * 1e-6f64.powf(zero.exponent)), 1.0, 1e-2));
    assert!(close(k.eval(1e6) / (inf.coef * 1e6f64.powf(inf.exponent)), 1.0, 1e-2));
    assert!(close(inf.exponent, 0.5 - 0.75, 1e-12));
}

#[test]
fn config_round_trip() {
    let spec = single(6.0, CoefficientForm::Matukuma { a: 0.5 });
    let back = PotentialSpec::try_from(spec.to_config()).unwrap();
    assert_eq!(back, spec);
    let toml_text = "n = 3\nfamily = \"single_k\"\nq = [6.0]\nk = [{ form = \"matukuma\", params = { a = 0.5 } }]\n";
    let cfg: PotentialConfig = toml::from_str(toml_text).unwrap();
    assert_eq!(PotentialSpec::try_from(cfg).unwrap(), spec);
}

#[test]
fn arity_mismatch_is_reported() {
    let cfg: PotentialConfig = toml::from_str("n = 3\nfamily = \"sum_k\"\nq = [3.0]\n").unwrap();
    assert!(matches!(PotentialSpec::try_from(cfg), Err(PotentialError::Arity { .. })));
}

fn any_spec() -> impl Strategy<Value = PotentialSpec> {
    let q = 2.2..9.0f64;
    prop_oneof![
        (3u32..13, q.clone()).prop_map(|(n, q)| pure(n, q)),
        (q.clone(), 0.1..1.5f64).prop_map(|(q, a)| single(q, CoefficientForm::OnePlusPower { a })),
        (q.clone(), 0.1..1.5f64).prop_map(|(q, a)| single(q, CoefficientForm::Matukuma { a })),
        (q.clone(), -1.0..1.0f64).prop_map(|(q, delta)| single(q, CoefficientForm::Power { c: 1.5, delta })),
        (q.clone(), 0.1..3.0f64).prop_map(|(q, dq)| {
            let k = Coefficient::constant(1.0);
            PotentialSpec::new(3, Family::MinK { q_low: q, q_high: q + dq, k }).unwrap()
        }),
        (q, 0.1..3.0f64).prop_map(|(q, dq)| {
            let k1: Coefficient = CoefficientForm::Matukuma { a: 0.5 }.into();
            let k2 = Coefficient::constant(0.5);
            PotentialSpec::new(3, Family::SumK { terms: [Term { q, k: k1 }, Term { q: q + dq, k: k2 }] }).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn f_is_monotone_in_u(spec in any_spec(), u1 in 0.0..5.0f64, du in 0.0..5.0f64, r in 1e-3..1e3f64) {
        let (a, b) = (eval_f(&spec, u1, r).unwrap(), eval_f(&spec, u1 + du, r).unwrap());
        prop_assert!(b >= a);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn primitive_derivative_is_f(spec in any_spec(), u in 0.05..4.0f64, r in 1e-2..1e2f64) {
        let h = 1e-4 * u;
        let fd = (eval_primitive(&spec, u + h, r).unwrap() - eval_primitive(&spec, u - h, r).unwrap()) / (2.0 * h);
        let f = eval_f(&spec, u, r).unwrap();
        prop_assert!((fd - f).abs() <= 1e-6 * f.abs().max(1e-300), "fd {} f {}", fd, f);
    }

    #[test]
    fn f_vanishes_at_zero(spec in any_spec(), r in 1e-3..1e3f64) {
        prop_assert_eq!(eval_f(&spec, 0.0, r).unwrap(), 0.0);
        prop_assert_eq!(eval_primitive(&spec, 0.0, r).unwrap(), 0.0);
    }

    #[test]
    fn m_is_positive_above_two(l in 2.0001..50.0f64) {
        prop_assert!(m_of(l) > 0.0);
    }

    #[test]
    fn h_and_a_agree_for_pure_powers(n in 3u32..12, q in 2.5..12.0f64) {
        let spec = pure(n, q);
        prop_assume!((q - sobolev(n)).abs() > 1e-3);
        let h = check_h_sign(&spec, &log_grid(1e-4, 1e4, 4)).unwrap();
        let s_grid: Vec<f64> = (-10..=10).map(f64::from).collect();
        let a = check_a_sign(&spec, &s_grid, &log_grid(1e-2, 1e2, 2)).unwrap();
        let agree = matches!((h, a), (HSign::HMinus, ASign::AMinus) | (HSign::HPlus, ASign::APlus));
        prop_assert!(agree, "{:?} vs {:?}", h, a);
    }
}
