use proptest::prelude::*;
use semiheat_core::barriers::{build_gs_pair, BarrierKind};
use semiheat_core::parabolic::*;
use semiheat_core::potential::PotentialSpec;

fn pure(q: f64) -> PotentialSpec {
    PotentialSpec::pure_power(3, q).unwrap()
}

fn gaussian(r: f64) -> f64 {
    (-r * r).exp()
}

/// Heat flow of `e^{−r²}` in three dimensions.
fn gaussian_at(r: f64, t: f64) -> f64 {
    let s = 1.0 + 4.0 * t;
    s.powf(-1.5) * (-r * r / s).exp()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn small_grid(r_max: f64) -> RadialGrid {
    RadialGrid::new(3, GridSpec { h0: 0.02, growth: 1.03, r_max, r_min: 0.0 }).unwrap()
}

fn series(points: &[(f64, f64, f64)]) -> NormSeries {
    let mut s = NormSeries::new(0);
    for &(t, w, dt) in points {
        s.push(t, w, &[], dt);
    }
    s
}

#[test]
fn weighted_norms() {
    let radii = [0.0, 0.5, 1.0, 2.0];
    let u = [1.0, -3.0, 2.0, 0.5];
    assert_eq!(weighted_norm(&radii, &u, &WeightSpec::new(0.0, 0.0)), 3.0);
    assert_eq!(shifted_norm(&radii, &[1.0; 4], 0.0), 2.0);

    // φ_s r^{m} is constant, so the weighted norm with ν = m is P1.
    let p1 = 0.24f64.powf(0.2);
    let radii: Vec<f64> = semiheat_core::potential::log_grid(1e-6, 1.0, 30);
    let phi: Vec<f64> = radii.iter().map(|r| p1 * r.powf(-0.4)).collect();
    let norm = weighted_norm(&radii, &phi, &WeightSpec::new(0.4, 0.0));
    assert!((norm - p1).abs() < 1e-12);
}

#[test]
fn weight_exponent_is_checked() {
    let q7 = pure(7.0);
    assert!(WeightSpec::new(0.2, 0.0).validated(&q7).is_ok());
    assert!(matches!(WeightSpec::new(0.4, 0.0).validated(&q7), Err(ParabolicError::Weight { .. })));
    assert!(WeightSpec::new(-0.1, 0.0).validated(&q7).is_err());
}

#[test]
fn contraction_constants() {
    assert_eq!(d1(0.0), 1.0);
    // e^{−0.1} 3.2^{0.1}, evaluated independently.
    assert!((d1(0.2) - 1.016449).abs() < 1e-6);
    assert!((d1(1e-12) - 1.0).abs() < 1e-9);
    let q7 = pure(7.0);
    let w = WeightSpec::new(0.0, 0.0);
    let one = suggested_rho_t(&q7, 1.0, &w).unwrap();
    assert!((one.rho - 10.0).abs() < 1e-12);
    let three = suggested_rho_t(&q7, 3.0, &w).unwrap();
    assert!((three.rho - 30.0).abs() < 1e-12);
    assert!(one.t0 > 0.0 && one.t0 <= 1.0);
    assert!(three.t0 < one.t0);
}

#[test]
fn kernel_preserves_constants() {
    let radii = [0.0, 0.3, 1.0, 5.0, 20.0];
    for t in [0.01, 1.0, 10.0] {
        for v in heat_semigroup_3d_fn(|_| 1.0, &radii, t) {
            assert!((v - 1.0).abs() < 1e-10, "t = {t}: {v}");
        }
    }
}

#[test]
fn kernel_on_a_gaussian() {
    let radii = [0.0, 0.1, 0.5, 1.0, 2.0, 4.0];
    for t in [0.05, 0.5, 2.0] {
        let exact: Vec<f64> = radii.iter().map(|&r| gaussian_at(r, t)).collect();
        assert!(sup_diff(&heat_semigroup_3d_fn(gaussian, &radii, t), &exact) < 1e-10, "t = {t}");
    }
    let close = heat_semigroup_3d_fn(gaussian, &radii, 1e-8);
    let start: Vec<f64> = radii.iter().map(|&r| gaussian(r)).collect();
    assert!(sup_diff(&close, &start) < 1e-6);
}

#[test]
fn kernel_on_a_spline_profile() {
    let r: Vec<f64> = (0..=300).map(|i| 0.02 * f64::from(i)).collect();
    let profile = RadialProfile::new(r.clone(), r.iter().map(|&x| gaussian(x)).collect()).unwrap();
    let exact: Vec<f64> = r.iter().map(|&x| gaussian_at(x, 0.1)).collect();
    assert!(sup_diff(&heat_semigroup_3d(&profile, 0.1), &exact) < 1e-6);
}

#[test]
fn kernel_needs_three_dimensions() {
    let profile = RadialProfile::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.0]).unwrap();
    let two_d = LinearReaction { n: 2, lambda: 0.0 };
    assert!(matches!(picard_mild(&two_d, &profile, 0.1, &PicardOptions::default()), Err(ParabolicError::Dimension(2))));
}

fn gaussian_profile(r_max: f64, nodes: u32) -> RadialProfile {
    let r: Vec<f64> = (0..=nodes).map(|i| r_max * f64::from(i) / f64::from(nodes)).collect();
    let u = r.iter().map(|&x| gaussian(x)).collect();
    RadialProfile::new(r, u).unwrap()
}

#[test]
fn picard_without_reaction_is_the_heat_flow() {
    let profile = gaussian_profile(6.0, 60);
    let out = picard_mild(&NoReaction(3), &profile, 0.1, &PicardOptions::default()).unwrap();
    assert!(out.residual() < 1e-8);
    let free = heat_semigroup_3d(&profile, 0.1);
    assert!(sup_diff(&out.u, &free) < 1e-8);
}

#[test]
fn picard_and_stepper_agree_on_linear_growth() {
    let reaction = LinearReaction { n: 3, lambda: 1.0 };
    let t = 0.1;
    let grid = small_grid(8.0);
    let phi = grid.sample(gaussian);
    let controls = EvolveControls { t_end: t, rtol: 1e-6, stop_on_fate: false, extrapolate: true, ..EvolveControls::default() };
    let run = evolve(&reaction, &grid, &phi, &controls).unwrap();
    // With f = λu the mild solution is e^{λt} times the heat flow.
    let exact: Vec<f64> = grid.nodes().iter().map(|&r| t.exp() * gaussian_at(r, t)).collect();
    assert!(sup_diff(&run.final_u, &exact) < 1e-3);

    let profile = gaussian_profile(6.0, 60);
    let mild = picard_mild(&reaction, &profile, t, &PicardOptions { time_nodes: 32, iterations: 8 }).unwrap();
    let exact: Vec<f64> = profile.radii().iter().map(|&r| t.exp() * gaussian_at(r, t)).collect();
    assert!(sup_diff(&mild.u, &exact) < 1e-3);
}

#[test]
fn picard_residuals_shrink_geometrically() {
    let profile = gaussian_profile(6.0, 40);
    let out = picard_mild(&pure(7.0), &profile, 0.05, &PicardOptions::default()).unwrap();
    let res = &out.residuals;
    assert!(res.len() >= 4);
    assert!(res.windows(2).all(|w| w[1] <= 0.5 * w[0] || w[1] < 1e-14), "{res:?}");
}

#[test]
fn picard_reports_a_failed_contraction() {
    let r: Vec<f64> = (0..=40).map(|i| 0.1 * f64::from(i)).collect();
    let profile = RadialProfile::new(r.clone(), vec![4.0; r.len()]).unwrap();
    let out = picard_mild(&pure(7.0), &profile, 1.0, &PicardOptions::default());
    assert!(matches!(out, Err(ParabolicError::Contraction { .. })), "{out:?}");
}

#[test]
fn heat_flow_matches_the_kernel_and_converges() {
    let t = 0.1;
    let error = |spec: GridSpec| {
        let grid = RadialGrid::new(3, spec).unwrap();
        let phi = grid.sample(gaussian);
        let controls = EvolveControls { t_end: t, rtol: 1e-7, stop_on_fate: false, extrapolate: true, ..EvolveControls::default() };
        let run = evolve(&NoReaction(3), &grid, &phi, &controls).unwrap();
        let exact: Vec<f64> = grid.nodes().iter().map(|&r| gaussian_at(r, t)).collect();
        sup_diff(&run.final_u, &exact)
    };
    let coarse = GridSpec { h0: 0.04, growth: 1.04, r_max: 10.0, r_min: 0.0 };
    let (e1, e2) = (error(coarse), error(coarse.refined()));
    assert!(e1 < 1e-3, "{e1:e}");
    assert!(e1 >= 3.0 * e2, "{e1:e} vs {e2:e}");
}

#[test]
fn evolve_rejects_bad_data() {
    let grid = small_grid(2.0);
    let controls = EvolveControls { t_end: 0.01, ..EvolveControls::default() };
    let mut phi = vec![1.0; grid.len()];
    assert!(matches!(evolve(&NoReaction(3), &grid, &phi[1..], &controls), Err(ParabolicError::Length { .. })));
    phi[3] = -1.0;
    assert!(matches!(evolve(&NoReaction(3), &grid, &phi, &controls), Err(ParabolicError::Sign { node: 3, .. })));
}

#[test]
fn fate_of_model_histories() {
    let controls = FateControls::default();
    let halving: Vec<_> = (0..40).map(|i| (f64::from(i), 0.5f64.powi(i), 1.0)).collect();
    assert!(matches!(detect_fate(&series(&halving), &controls), Fate::Decayed { .. }));

    let mut t = 0.0;
    let doubling: Vec<_> = (0..40)
        .map(|i| {
            let dt = 0.5f64.powi(i);
            t += dt;
            (t, 2f64.powi(i), dt)
        })
        .collect();
    assert!(matches!(detect_fate(&series(&doubling), &controls), Fate::BlowUp { .. }));

    let flat: Vec<_> = (0..40).map(|i| (f64::from(i), 2.0, 1.0)).collect();
    assert!(matches!(detect_fate(&series(&flat), &controls), Fate::Steady { .. }));

    let short: Vec<_> = (0..5).map(|i| (0.1 * f64::from(i), 1.0, 0.1)).collect();
    assert!(matches!(detect_fate(&series(&short), &controls), Fate::Undecided { .. }));
    assert!(matches!(detect_fate(&NormSeries::new(0), &controls), Fate::Undecided { .. }));
}

#[test]
fn large_norm_without_step_collapse_is_not_blow_up() {
    let growing: Vec<_> = (0..40).map(|i| (f64::from(i), 2f64.powi(i), 1.0)).collect();
    assert!(matches!(detect_fate(&series(&growing), &FateControls::default()), Fate::Undecided { .. }));
}

#[test]
fn comparison_of_ordered_runs() {
    let grid = small_grid(10.0);
    let controls = EvolveControls { t_end: 0.5, output_times: vec![0.1, 0.25], stop_on_fate: false, ..EvolveControls::default() };
    let high_phi = grid.sample(|r| 0.5 * gaussian(r));
    let low_phi: Vec<f64> = high_phi.iter().map(|v| 0.5 * v).collect();
    let q7 = pure(7.0);
    let high = evolve(&q7, &grid, &high_phi, &controls).unwrap();
    let low = evolve(&q7, &grid, &low_phi, &controls).unwrap();
    assert_eq!(high.snapshots.len(), 3);
    assert!(comparison_check(&low, &high));
    assert!(comparison_check(&high, &high));
    assert!(!comparison_check(&high, &low));
    // Decreasing data stays decreasing.
    assert!(high.monotonicity.non_increasing_in_r());
    assert!(low.monotonicity.non_increasing_in_r());
}

#[test]
fn discrete_barriers_move_the_right_way() {
    let q7 = pure(7.0);
    let (upper, lower) = build_gs_pair(&q7, 1.0, 1.1).unwrap();
    let grid = RadialGrid::new(3, GridSpec { h0: 0.02, growth: 1.02, r_max: 200.0, r_min: 0.0 }).unwrap();
    for (barrier, rises) in [(&upper, false), (&lower, true)] {
        let discrete = discrete_barrier(barrier, &grid).unwrap();
        assert_eq!(discrete.kind, barrier.kind);
        assert!(discrete.values.iter().all(|v| *v > 0.0));
        let controls = EvolveControls { t_end: 2.0, outer_kappa: discrete.kappa, ..EvolveControls::default() };
        let run = evolve(&q7, &grid, &discrete.values, &controls).unwrap();
        let m = run.monotonicity;
        if rises {
            assert_eq!(barrier.kind, BarrierKind::Lower);
            assert!(m.non_decreasing_in_t(), "{m:?}");
            assert!(matches!(run.fate, Fate::BlowUp { t_est } if t_est < 2.0), "{:?}", run.fate);
        } else {
            assert!(m.non_increasing_in_t(), "{m:?}");
            assert_eq!(run.final_t, 2.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_is_monotone_and_contracting(a in 0.1..3.0f64, b in 0.1..3.0f64, t in 0.01..5.0f64) {
        let radii = [0.0, 0.5, 1.0, 3.0];
        let lo = heat_semigroup_3d_fn(|r| a.min(b) * gaussian(r), &radii, t);
        let hi = heat_semigroup_3d_fn(|r| a.max(b) * gaussian(r), &radii, t);
        for (x, y) in lo.iter().zip(&hi) {
            prop_assert!(x <= y);
            prop_assert!(*y <= a.max(b) + 1e-12);
        }
    }

    #[test]
    fn rho_is_linear_in_the_norm(norm in 0.01..100.0f64, nu in 0.0..0.39f64) {
        let q7 = pure(7.0);
        let w = WeightSpec::new(nu, 0.0);
        let one = suggested_rho_t(&q7, 1.0, &w).unwrap();
        let scaled = suggested_rho_t(&q7, norm, &w).unwrap();
        prop_assert!((scaled.rho - norm * one.rho).abs() <= 1e-12 * scaled.rho);
    }
}
