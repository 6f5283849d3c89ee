use proptest::prelude::*;
use semiheat_core::integrate::{integrate, Crossing, Event, Options, Termination, Tolerance};
use semiheat_core::quadrature;
use semiheat_core::roots::{bisect, brent, RootError};

fn opts(rtol: f64) -> Options {
    Options::with_tol(Tolerance { rtol, atol: rtol * 1e-2 })
}

#[test]
fn quadrature_is_exact_on_polynomials() {
    let q = quadrature::integrate(|x| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1e-14, 0.0, 10);
    assert!((q.value - (102.4 - 8.0)).abs() < 1e-11);
}

#[test]
fn quadrature_handles_endpoint_singularity() {
    let q = quadrature::integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0, 500);
    assert!((q.value - 2.0).abs() < 1e-8, "{q:?}");
}

#[test]
fn quadrature_oscillatory() {
    let q = quadrature::integrate(|x: f64| x.sin(), 0.0, 20.0, 1e-12, 1e-14, 200);
    assert!((q.value - (1.0 - 20f64.cos())).abs() < 1e-11);
}

#[test]
fn kronrod_rule_integrates_degree_22() {
    let sum: f64 = quadrature::kronrod_rule(-1.0, 3.0).iter().map(|(x, w)| w * x.powi(22)).sum();
    let exact = (3f64.powi(23) + 1.0) / 23.0;
    assert!((sum - exact).abs() < 1e-12 * exact);
}

#[test]
fn brent_finds_cube_root() {
    let r = brent(|x| x * x * x - 2.0, 0.0, 3.0, 1e-14, 100).unwrap();
    assert!((r - 2f64.cbrt()).abs() < 1e-13);
}

#[test]
fn brent_rejects_unbracketed() {
    assert!(matches!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50), Err(RootError::NotBracketed { .. })));
}

#[test]
fn bisect_linear() {
    let r = bisect(|x| 1.0 - x, 0.0, 3.0, 1e-13).unwrap();
    assert!((r - 1.0).abs() < 1e-12);
}

#[test]
fn exponential_decay_endpoint() {
    let traj = integrate(|_, y: &[f64; 1]| [-y[0]], [1.0], 0.0, 1.0, &[], &opts(1e-10)).unwrap();
    assert_eq!(traj.termination, Termination::Endpoint);
    assert!((traj.y_end()[0] - (-1f64).exp()).abs() < 1e-9);
}

#[test]
fn linear_event_located_to_1e12() {
    let events = [Event::terminal(Crossing::Falling, |_, y: &[f64; 1]| y[0])];
    let traj = integrate(|_, _: &[f64; 1]| [-1.0], [1.0], 0.0, 5.0, &events, &opts(1e-10)).unwrap();
    assert_eq!(traj.hits.len(), 1);
    assert!((traj.hits[0].s - 1.0).abs() < 1e-12, "{}", traj.hits[0].s);
    assert!(matches!(traj.termination, Termination::Event { index: 0, .. }));
}

#[test]
fn recording_events_do_not_stop() {
    let events = [Event::recording(Crossing::Either, |_, y: &[f64; 2]| y[0])];
    let traj = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], 0.0, 10.0, &events, &opts(1e-10)).unwrap();
    assert_eq!(traj.termination, Termination::Endpoint);
    // cos vanishes at π/2, 3π/2, 5π/2.
    assert_eq!(traj.hits.len(), 3);
    for (k, hit) in traj.hits.iter().enumerate() {
        let exact = std::f64::consts::PI * (k as f64 + 0.5);
        assert!((hit.s - exact).abs() < 1e-9);
    }
}

#[test]
fn harmonic_oscillator_energy_over_100_periods() {
    let span = 200.0 * std::f64::consts::PI;
    let traj = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], 0.0, span, &[], &opts(1e-10)).unwrap();
    let y = traj.y_end();
    let energy = 0.5 * (y[0] * y[0] + y[1] * y[1]);
    assert!((energy - 0.5).abs() / 0.5 < 1e-6, "energy {energy}");
}

#[test]
fn tighter_tolerance_reduces_error() {
    let err = |rtol: f64| {
        let traj = integrate(|_, y: &[f64; 1]| [-3.0 * y[0]], [1.0], 0.0, 2.0, &[], &opts(rtol)).unwrap();
        (traj.y_end()[0] - (-6f64).exp()).abs() / (-6f64).exp()
    };
    let (coarse, fine) = (err(1e-6), err(1e-9));
    assert!(fine < coarse, "coarse {coarse:e} fine {fine:e}");
}

#[test]
fn dense_output_matches_solution_between_steps() {
    let traj = integrate(|_, y: &[f64; 1]| [y[0]], [1.0], 0.0, 3.0, &[], &opts(1e-11)).unwrap();
    for k in 0..=60 {
        let s = 0.05 * f64::from(k);
        let v = traj.eval(s).unwrap()[0];
        assert!((v - s.exp()).abs() < 1e-8 * s.exp(), "s = {s}");
    }
    assert!(traj.eval(3.5).is_none());
}

#[test]
fn backward_integration_runs_in_reverse() {
    let traj = integrate(|_, y: &[f64; 1]| [y[0]], [1.0], 0.0, -2.0, &[], &opts(1e-10)).unwrap();
    assert!(!traj.forward());
    assert!((traj.y_end()[0] - (-2f64).exp()).abs() < 1e-10);
}

#[test]
fn overflow_is_reported_not_raised() {
    // y' = y², y(0) = 1 blows up at s = 1.
    let traj = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], [1.0], 0.0, 2.0, &[], &opts(1e-8)).unwrap();
    assert!(traj.termination.is_failure());
    assert!(traj.s_end() < 1.0 + 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_then_backward_returns_home(y0 in -2.0..2.0f64, v0 in -2.0..2.0f64, span in 0.5..8.0f64) {
        let tol = 1e-10;
        let field = |_: f64, y: &[f64; 2]| [y[1], -y[0] - 0.1 * y[1] * y[1] * y[1]];
        let there = integrate(field, [y0, v0], 0.0, span, &[], &opts(tol)).unwrap();
        let back = integrate(field, there.y_end(), span, 0.0, &[], &opts(tol)).unwrap();
        let y = back.y_end();
        let scale = 1.0 + y0.abs().max(v0.abs());
        prop_assert!((y[0] - y0).abs() < 10.0 * tol * scale, "{:e}", (y[0] - y0).abs());
        prop_assert!((y[1] - v0).abs() < 10.0 * tol * scale, "{:e}", (y[1] - v0).abs());
    }

    #[test]
    fn brent_root_is_a_root(c in 0.1..50.0f64, p in 1.5..5.0f64) {
        let r = brent(|x: f64| x.powf(p) - c, 0.0, 60.0, 1e-14, 200).unwrap();
        prop_assert!((r - c.powf(1.0 / p)).abs() < 1e-11 * r.max(1.0));
    }
}
