//! The demo's computations, run natively.

use psd_wasm::{coherence_curve, BarrierRun, PairView};

#[test]
fn barrier_frames_conserve_mass_and_transmission_falls_with_height() {
    let low = BarrierRun::simulate(1.1, 1.5).unwrap();
    let high = BarrierRun::simulate(2.5, 1.5).unwrap();
    assert_eq!(low.frame_count(), 91);
    assert_eq!(low.frame(0).len(), low.cells());
    assert!(low.frame(10_000).is_empty());
    let dx = low.x()[1] - low.x()[0];
    for i in [0, 45, 90] {
        let mass: f64 = low.frame(i).iter().sum::<f64>() * dx;
        assert!((mass - 1.0).abs() < 1e-10, "frame {i}: {mass}");
    }
    assert!(low.transmission() > high.transmission());
    assert!(low.potential().iter().cloned().fold(0.0, f64::max) == 1.1);
}

#[test]
fn pair_w_tracks_separation() {
    let far = PairView::compute(16.0, 1.0, 1.0, 0.0).unwrap();
    let near = PairView::compute(0.0, 1.0, 1.0, 0.0).unwrap();
    assert!(far.w() < 1e-6, "{}", far.w());
    assert!(near.w() > 0.5, "{}", near.w());
    let labels = far.labels();
    assert_eq!(labels.first(), Some(&0));
    assert_eq!(labels.last(), Some(&1));
    assert_eq!(far.density_a().len(), far.x().len());
}

#[test]
fn pair_rejects_unresolved_width() {
    assert!(PairView::compute(4.0, 0.05, 1.0, 0.0).is_err());
}

#[test]
fn coherence_decays_to_its_floor() {
    let curve = coherence_curve(2.0, -2.0, 0.5, 40.0, 80).unwrap();
    assert_eq!(curve.len(), 81);
    assert!((curve[0] - 1.0).abs() < 1e-15);
    assert!(curve.windows(2).all(|w| w[1] <= w[0]));
    // |α − β|² = 16, so the floor is e^{-8}
    assert!((curve[80] - (-8.0f64).exp()).abs() < 1e-10);
    assert!(coherence_curve(1.0, 0.0, 0.1, 0.0, 10).is_err());
}
