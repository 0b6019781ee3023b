use clustermem_core::dynamics::{
    default_input, efficiency_vs_depth, optimize_control, storage_retrieval_efficiency, MediumParams, OptimizeOptions,
};

/// η_opt(d = 10) at default settings, frozen from the converged integrator.
const GOLDEN_ETA_D10: f64 = 0.656463934687;

#[test]
fn golden_optimal_efficiency_at_d10() {
    let r = optimize_control(
        &MediumParams::scaled(10.0),
        &default_input(10.0).unwrap(),
        &OptimizeOptions::default(),
    )
    .unwrap();
    assert!(r.converged);
    assert!((r.eta - GOLDEN_ETA_D10).abs() < 1e-8, "eta = {:.12}", r.eta);
}

#[test]
fn large_depth_approaches_unity() {
    let opts = OptimizeOptions::default();
    let mut last = 0.0;
    for d in [25.0, 50.0, 100.0] {
        let m = MediumParams::scaled(d);
        let e_in = default_input(d).unwrap();
        let r = optimize_control(&m, &e_in, &opts).unwrap();
        let eta = storage_retrieval_efficiency(&m, &r.schedule, &r.retrieval, &e_in, 0.0, opts.direction, &opts.solver)
            .unwrap();
        assert!((eta - r.eta).abs() < 1e-9);
        assert!(eta > last, "d = {d}: {eta} after {last}");
        assert!(eta < 1.0);
        last = eta;
    }
    assert!(last > 0.9);
}

#[test]
fn optimum_is_independent_of_units() {
    let opts = OptimizeOptions::default();
    let scaled = optimize_control(&MediumParams::scaled(5.0), &default_input(5.0).unwrap(), &opts).unwrap();

    // γ = 2π × 3 MHz, L = 1 cm; the same pulse lasts 10/(dγ) seconds
    let gamma = 2.0 * std::f64::consts::PI * 3.0e6;
    let m = MediumParams::new(5.0, gamma, 0.0, 0.01).unwrap();
    let unit = default_input(5.0).unwrap();
    let e_in = clustermem_core::FieldEnvelope::new(
        unit.times().iter().map(|t| t / gamma).collect(),
        unit.amps().iter().map(|a| a * gamma.sqrt()).collect(),
    )
    .unwrap();
    let si = optimize_control(&m, &e_in, &opts).unwrap();
    assert!((si.eta - scaled.eta).abs() < 1e-9, "{} vs {}", si.eta, scaled.eta);
    assert!((si.schedule.omega()[7] / gamma - scaled.schedule.omega()[7]).abs() < 1e-6);
}

#[test]
fn sweep_decay_rows_scale_exactly() {
    let sweep = efficiency_vs_depth(&[2.0, 5.0], &[0.0, 0.25, 1.0], &OptimizeOptions::default()).unwrap();
    assert_eq!(sweep.rows.len(), 6);
    let top = sweep.row_for(0.0);
    for x in [0.25, 1.0] {
        for (a, b) in top.iter().zip(sweep.row_for(x)) {
            let ratio = b.eta / a.eta;
            assert!((ratio / (-2.0 * x).exp() - 1.0).abs() < 1e-12);
        }
    }
}
