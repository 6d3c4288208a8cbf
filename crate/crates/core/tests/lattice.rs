use crystal_fpp::lattice::{
    build_preset, check_symmetry, edge_connectivity_estimate, instantiate_window, parse_lattice, rotation_2d, write_lattice,
};
use crystal_fpp::quotient::{build_quotient, verify_covering, verify_diagram, KernelSublattice};
use crystal_fpp::Error;
use nalgebra::DMatrix;

#[test]
fn window_counts() {
    for radius in 0..=4i64 {
        let side = 2 * radius + 1;
        let (l, r) = build_preset("cubic2").unwrap();
        let w = instantiate_window(&l, &r, radius).unwrap();
        assert_eq!(w.vertex_count() as i64, side * side);
        assert_eq!(w.orbit_count() as i64, 2 * side * (side - 1));

        let (l, r) = build_preset("cubic3").unwrap();
        let w = instantiate_window(&l, &r, radius).unwrap();
        assert_eq!(w.orbit_count() as i64, 3 * side * side * (side - 1));

        let (l, r) = build_preset("triangular").unwrap();
        let w = instantiate_window(&l, &r, radius).unwrap();
        assert_eq!(w.orbit_count() as i64, 2 * side * (side - 1) + (side - 1) * (side - 1));

        let (l, r) = build_preset("honeycomb").unwrap();
        let w = instantiate_window(&l, &r, radius).unwrap();
        assert_eq!(w.vertex_count() as i64, 2 * side * side);
        // one edge inside each cell, then voltages (1,-1) and (0,-1)
        assert_eq!(w.orbit_count() as i64, side * side + (side - 1) * (side - 1) + side * (side - 1));
    }
}

#[test]
fn edge_connectivity_is_stable_in_the_radius() {
    for name in ["cubic2", "triangular", "honeycomb", "diamond"] {
        let (l, r) = build_preset(name).unwrap();
        let a = edge_connectivity_estimate(&l, &r, 3).unwrap();
        let b = edge_connectivity_estimate(&l, &r, 4).unwrap();
        assert_eq!(a.value, b.value, "{name}");
        let degree = (0..l.base().vertex_count()).map(|u| l.base().outgoing(u).len()).min().unwrap();
        assert_eq!(a.value, degree, "{name}");
    }
}

#[test]
fn lattice_files_round_trip() {
    for name in ["cubic2", "cubic3", "triangular", "honeycomb-shifted", "diamond"] {
        let (l, r) = build_preset(name).unwrap();
        let text = write_lattice(&l, &r);
        let (l2, r2) = parse_lattice(&text).unwrap();
        assert_eq!(l, l2, "{name}");
        assert_eq!(write_lattice(&l2, &r2), text, "{name}");
    }
}

#[test]
fn rotations_of_the_square_and_triangular_lattices() {
    let (l, r) = build_preset("cubic2").unwrap();
    assert!(check_symmetry(&l, &r, &rotation_2d(std::f64::consts::FRAC_PI_2), &[0.0, 0.0], 3, 1e-9));
    assert!(!check_symmetry(&l, &r, &rotation_2d(std::f64::consts::FRAC_PI_3), &[0.0, 0.0], 3, 1e-9));
    let (l, r) = build_preset("triangular").unwrap();
    assert!(check_symmetry(&l, &r, &rotation_2d(std::f64::consts::FRAC_PI_3), &[0.0, 0.0], 3, 1e-9));
    let reflect = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    assert!(check_symmetry(&l, &r, &reflect, &[0.0, 0.0], 3, 1e-9));
}

#[test]
fn preset_quotients_commute_with_projection() {
    let cases = [
        ("cubic2", KernelSublattice::from_columns(2, &[vec![1, -1]]).unwrap()),
        ("cubic3", KernelSublattice::from_columns(3, &[vec![1, 1, 1]]).unwrap()),
        ("honeycomb", KernelSublattice::trivial(2)),
    ];
    for (name, kernel) in cases {
        let (l, r) = build_preset(name).unwrap();
        let qd = build_quotient(&l, &r, &kernel).unwrap();
        let report = verify_diagram(&qd, 3, 1e-12).unwrap();
        assert!(report.passed, "{name}: {}", report.max_deviation);
        assert!(verify_covering(&qd, 3).unwrap(), "{name}");
    }
}

#[test]
fn torsion_kernel_is_rejected_with_its_factor() {
    let err = KernelSublattice::from_columns(2, &[vec![2, 0]]).unwrap_err();
    assert_eq!(err, Error::Torsion { factors: vec![2] });
    assert!(err.to_string().contains('2'));
}
