//! Discrete extremal distance, connectivity and excursion mass against
//! closed forms.

use std::f64::consts::PI;

use bxi::extremal::{
    excursion_mass_oracle, excursion_mass_rectangle, pi_extremal_distance, verify_disk_removal, verify_serial_cut,
    weight, DEFAULT_TOL, GRID_TOL,
};
use bxi::geometry::{disconnection_test, GridGeometry, OccupancyGrid, PathDomainSpec};

#[test]
fn rectangle_extremal_distance_is_its_length() {
    for l in [0.5, 1.0, 2.0, 4.0] {
        let got = pi_extremal_distance(&PathDomainSpec::rectangle(l, PI, 0.02), DEFAULT_TOL).unwrap().l;
        assert!((got - l).abs() <= 0.02 * l, "L = {l}: computed {got}");
    }
}

#[test]
fn extremal_distance_scales_with_aspect_ratio() {
    let got = pi_extremal_distance(&PathDomainSpec::rectangle(1.0, PI / 2.0, 0.02), DEFAULT_TOL).unwrap().l;
    assert!((got - 2.0).abs() <= 0.04, "computed {got}");
}

#[test]
fn serial_cut_of_a_rectangle_is_additive() {
    let d = PathDomainSpec::rectangle(4.0, PI, 0.05);
    let cut = verify_serial_cut(&d, 2.0, 0.1).unwrap();
    assert!(cut.slack >= -GRID_TOL, "{cut:?}");
    assert!((cut.l1 + cut.l2 - cut.l).abs() < 0.05, "{cut:?}");
}

#[test]
fn disk_removal_never_shortens() {
    let d = PathDomainSpec::rectangle(3.0, PI, 0.05);
    let r = verify_disk_removal(&d, 0.1).unwrap();
    assert!(r.l_after >= r.l_before - GRID_TOL, "{r:?}");
}

#[test]
fn closed_ring_disconnects_and_a_gap_reconnects() {
    let geom = GridGeometry::annulus(0.0, 1.0, 0.05);
    let mut grid = OccupancyGrid::empty(geom);
    assert!(!disconnection_test(&grid));
    let row = geom.n_u / 2;
    for c in 0..geom.n_theta {
        grid.obstacle[geom.idx(row, c)] = true;
    }
    assert!(disconnection_test(&grid));
    grid.obstacle[geom.idx(row, 3)] = false;
    assert!(!disconnection_test(&grid));
}

#[test]
fn infinite_distance_has_zero_weight() {
    assert_eq!(weight(0.0, f64::INFINITY), 0.0);
    assert_eq!(weight(2.0, f64::INFINITY), 0.0);
    assert_eq!(weight(0.0, 3.0), 1.0);
    assert!((weight(1.0, 2.0) - (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn mass_oracle_has_the_exponential_tail() {
    let c = excursion_mass_oracle(8.0) * 8.0f64.exp();
    assert!((c - 16.0 / PI).abs() < 1e-5, "{c}");
    assert!(excursion_mass_oracle(1.0) > excursion_mass_oracle(2.0));
}

#[test]
fn excursion_mass_matches_the_series() {
    let m = excursion_mass_rectangle(1.0, 0.1, 1e-4, 20_000, 5).unwrap();
    let exact = excursion_mass_oracle(1.0);
    assert!((m.value - exact).abs() <= 3.0 * m.stderr, "{} ± {} vs {exact}", m.value, m.stderr);
    assert!(excursion_mass_rectangle(1.0, 2.0, 1e-4, 10, 5).is_err());
}
