use clustermem_core::constants::RB87_MASS;
use clustermem_core::decoherence::{
    coherence_time, delta_k, mean_speed, retrieval_overlap, retrieval_overlap_mc, GeometryCase, MotionParams,
};

#[test]
fn monte_carlo_tracks_gaussian_decay() {
    let m = MotionParams::rubidium(GeometryCase::Orthogonal);
    let dk = delta_k(&m).unwrap();
    let tau_s = coherence_time(dk, mean_speed(m.temperature, m.mass).unwrap()).unwrap();
    for frac in [0.25, 0.5, 1.0, 1.5] {
        let tau = frac * tau_s;
        let mc = retrieval_overlap_mc(tau, dk, m.temperature, m.mass, 200_000, 11).unwrap();
        let exact = retrieval_overlap(tau, tau_s).unwrap();
        assert!(
            (mc.value - exact).abs() < 5.0 * mc.stderr + 1e-4,
            "τ/τs = {frac}: {} vs {exact}",
            mc.value
        );
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let m = MotionParams::rubidium(GeometryCase::Collinear);
    let dk = delta_k(&m).unwrap();
    let a = retrieval_overlap_mc(0.3, dk, 70e-6, RB87_MASS, 50_000, 5).unwrap();
    let b = retrieval_overlap_mc(0.3, dk, 70e-6, RB87_MASS, 50_000, 5).unwrap();
    let c = retrieval_overlap_mc(0.3, dk, 70e-6, RB87_MASS, 50_000, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.value, c.value);
}
