mod common;

use common::*;
use gimbal_deblur::psf_analytic::{center_and_corners, max_spread, psf_grid, PsfSynthesisConfig};
use proptest::prelude::*;

#[test]
fn matches_warp_oracle_at_center() {
    for rate in [10.0, 20.0, 40.0, 60.0] {
        let (l1, k) = l1_against_oracle(rate, None);
        assert!(l1 <= 0.05, "{rate} deg/s: L1 {l1}");
        assert!((k.sum() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn matches_warp_oracle_at_corners() {
    let intr = reference_camera();
    for anchor in center_and_corners(&intr).into_iter().skip(1) {
        let (l1, _) = l1_against_oracle(60.0, Some(anchor));
        assert!(l1 <= 0.05, "{anchor:?}: L1 {l1}");
    }
}

#[test]
fn support_matches_spread() {
    let intr = reference_camera();
    let s = max_spread(&motion(60.0), intr.focal(), 0.0);
    assert!((s - 13.79).abs() <= 0.01 * 13.79, "{s}");
    let k = reference_kernel(60.0);
    let support = k.horizontal_support() as f64;
    assert!(
        (support - (2.0 * s + 1.0)).abs() <= 2.0,
        "{support} vs {}",
        2.0 * s + 1.0
    );
}

#[test]
fn grid_average_is_normalized_and_horizontal() {
    let intr = reference_camera();
    let k = psf_grid(
        &intr,
        &motion(40.0),
        &center_and_corners(&intr),
        &PsfSynthesisConfig::default(),
    )
    .unwrap();
    assert!((k.sum() - 1.0).abs() <= 1e-9);
    assert!(k.vertical_support() <= 3);
    assert!(k.horizontal_support() > 15);
}

proptest! {
    #![proptest_config(proptest_config(24))]

    #[test]
    fn support_grows_with_rate(a in 1.0f64..90.0, b in 1.0f64..90.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let klo = reference_kernel(lo);
        let khi = reference_kernel(hi);
        prop_assert!(klo.horizontal_support() <= khi.horizontal_support());
        prop_assert!((khi.sum() - 1.0).abs() <= 1e-9);
        prop_assert!(khi.weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn kernels_are_mirror_symmetric(rate in 1.0f64..90.0) {
        let k = reference_kernel(rate);
        prop_assert!(k.l1_distance(&k.flipped()) <= 0.05);
    }
}
