use std::f64::consts::PI;

use wgqed_web::{decay_points, rate_points, spectrum_points};

#[test]
fn decay_starts_at_one_and_matches_free_decay_before_feedback() {
    let pts = decay_points(2.0, false, 1.0, PI / 2.0, "dde", 4.0).unwrap();
    assert_eq!(pts[..2], [0.0, 1.0]);
    for xy in pts.chunks(2).filter(|xy| xy[0] <= 1.0) {
        assert!((xy[1] - (-2.0 * xy[0]).exp()).abs() < 1e-8, "{xy:?}");
    }
}

#[test]
fn decay_rejects_unknown_and_slow_engines() {
    assert!(decay_points(2.0, false, 1.0, 0.0, "euler", 1.0).is_err());
    assert!(decay_points(2.0, false, 1.0, 0.0, "kspace", 1.0).is_err());
}

#[test]
fn rate_runs_from_four_to_zero_over_a_quarter_wavelength() {
    let pts = rate_points(2.0, false, 9).unwrap();
    assert_eq!(pts.len(), 18);
    assert!((pts[1] - 4.0).abs() < 1e-9);
    assert!(pts[9].abs() < 1e-12, "R at λ/4 = {}", pts[9]);
    assert!((pts[17] - 4.0).abs() < 1e-9);
}

#[test]
fn spectrum_is_zero_below_the_first_cutoff() {
    let pts = spectrum_points(2.0, 0.0, 200).unwrap();
    assert_eq!(pts.len(), 400);
    for xy in pts.chunks(2) {
        if xy[0] < 1.0 {
            assert_eq!(xy[1], 0.0);
        } else if xy[1].is_finite() {
            assert!(xy[1] >= 0.0);
        }
    }
}
