mod common;

use common::*;
use nadir_core::nalgebra::DVector;
use nadir_core::{
    dominance_report, per_bus_nadir, sample_norm_ball, simulate_step_response, worst_case_search, DisturbanceSpec,
    Error, NormKind, SearchOptions, SimConfig, SwingIntegrator,
};

#[test]
fn energy_never_increases() {
    let mut rng = rng(3);
    for seed in 0..4 {
        let model = random_model(6, seed, 40.0);
        let u0 = gaussian_vector(&mut rng, 6);
        let mut sim = SwingIntegrator::new(&model, &u0).unwrap();
        let mut prev = sim.energy();
        assert_eq!(prev, 0.0);
        for _ in 0..3000 {
            sim.step(0.002);
            let e = sim.energy();
            assert!(e <= prev + 1e-12 * prev.abs().max(1.0), "{e} > {prev}");
            prev = e;
        }
        assert!(prev < 0.0);
    }
}

#[test]
fn rk4_error_is_fourth_order() {
    let model = random_model(5, 6, 30.0);
    let u0 = gaussian_vector(&mut rng(8), 5) * 0.3;
    let horizon = 1.0;
    let run = |h: f64| {
        let traj = simulate_step_response(&model, &u0, &SimConfig::new(h, horizon)).unwrap();
        traj.bus(0).last().copied().unwrap()
    };
    let (coarse, fine, finest) = (run(0.01), run(0.005), run(0.0025));
    let ratio = (coarse - fine).abs() / (fine - finest).abs();
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn recorded_grid_and_nadir() {
    let model = random_model(4, 2, 20.0);
    let u0 = DVector::from_vec(vec![0.1, -0.2, 0.05, 0.0]);
    let traj = simulate_step_response(&model, &u0, &SimConfig::new(0.001, 1.0).recording_every(10)).unwrap();
    assert_eq!(traj.len(), 101);
    assert!((traj.times()[100] - 1.0).abs() < 1e-12);
    let (values, times) = per_bus_nadir(&traj);
    for i in 0..4 {
        let j = traj.nearest_index(times[i]);
        assert_eq!(traj.omega()[(i, j)].abs(), values[i]);
        assert!(traj.bus(i).iter().all(|w| w.abs() <= values[i]));
    }
}

#[test]
fn oversized_step_is_rejected() {
    let model = random_model(4, 0, 1e5);
    let guard = SimConfig::stability_guard(&model);
    assert!(SimConfig::new(guard * 0.9, 1.0).validate(&model).is_ok());
    let err = simulate_step_response(&model, &DVector::zeros(4), &SimConfig::new(guard * 1.5, 1.0)).unwrap_err();
    assert!(matches!(err, Error::StepTooLarge { .. }));
}

#[test]
fn samples_respect_the_budget() {
    for kind in NormKind::ALL {
        let set = sample_norm_ball(kind, 0.5, 7, 400, 11);
        assert_eq!(set.len(), 400);
        let norms: Vec<f64> = set.samples.iter().map(|u| kind.norm(u)).collect();
        assert!(norms.iter().all(|v| *v <= 0.5 * (1.0 + 1e-12)));
        let boundary = norms.iter().filter(|v| (**v - 0.5).abs() < 1e-12).count();
        assert!(boundary >= 180, "{kind}: {boundary}");
        assert!(norms.iter().any(|v| *v < 0.45));
        // same seed, same draw
        assert_eq!(set.samples, sample_norm_ball(kind, 0.5, 7, 400, 11).samples);
    }
}

#[test]
fn simulated_nadirs_stay_under_the_bound() {
    for seed in 0..3 {
        let model = random_model(5, seed, 30.0 * (seed + 1) as f64);
        for kind in NormKind::ALL {
            let spec = DisturbanceSpec::new(kind, 0.5).unwrap();
            let result = worst_case_search(&model, &spec, &SearchOptions::default()).unwrap();
            let samples = sample_norm_ball(kind, 0.5, 5, 60, seed);
            let report = dominance_report(&model, &result, 0.001, &samples, 1e-6).unwrap();
            assert!(report.all_dominated(), "{kind}: {:?}", report.violations);
            assert_eq!(report.fraction_dominated, 1.0);
            assert!(report.max_sample_nadir <= report.bound + 1e-6);
            assert!(
                report.worst_reproduction_rel_error < 1e-3,
                "{kind}: {}",
                report.worst_reproduction_rel_error
            );
        }
    }
}

#[test]
fn shrunken_bound_is_violated() {
    let model = random_model(5, 1, 50.0);
    let spec = DisturbanceSpec::new(NormKind::Two, 0.5).unwrap();
    let mut result = worst_case_search(&model, &spec, &SearchOptions::default()).unwrap();
    result.value *= 0.5;
    let samples = sample_norm_ball(NormKind::Two, 0.5, 5, 40, 2);
    let report = dominance_report(&model, &result, 0.001, &samples, 1e-6).unwrap();
    assert!(!report.all_dominated());
    assert!(report.min_gap < 0.0);
}

#[test]
fn integrator_step_must_divide_grid() {
    let model = random_model(4, 0, 10.0);
    let result = worst_case_search(
        &model,
        &DisturbanceSpec::new(NormKind::Inf, 0.5).unwrap(),
        &SearchOptions::default(),
    )
    .unwrap();
    let samples = sample_norm_ball(NormKind::Inf, 0.5, 4, 3, 0);
    assert!(dominance_report(&model, &result, 0.003, &samples, 1e-6).is_err());
    let wrong = sample_norm_ball(NormKind::Inf, 0.5, 3, 3, 0);
    assert!(matches!(
        dominance_report(&model, &result, 0.001, &wrong, 1e-6),
        Err(Error::Dimension { .. })
    ));
}
