use nalgebra::{DMatrix, DVector};

use super::{box_points, CrystalLattice, LatticeVertex, Realization};

pub fn rotation_2d(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Whether `x -> A Φ(x) + b` maps realized vertices onto realized vertices
/// and neighbourhoods onto neighbourhoods, tested on every vertex with
/// translation index in `[-(R-1), R-1]^d`. Lattice membership is checked
/// against the infinite lattice, so images may leave the window.
///
/// A candidate that is not orthogonal within `tol` is rejected.
pub fn check_symmetry(
    lattice: &CrystalLattice,
    realization: &Realization,
    a: &DMatrix<f64>,
    b: &[f64],
    radius: i64,
    tol: f64,
) -> bool {
    let d = lattice.dim();
    if a.nrows() != d || a.ncols() != d || b.len() != d {
        return false;
    }
    let gram = a.transpose() * a;
    if (gram - DMatrix::<f64>::identity(d, d)).abs().max() > tol {
        return false;
    }
    let image = |p: &[f64]| -> Vec<f64> {
        let v = a * DVector::from_column_slice(p);
        v.iter().zip(b).map(|(x, s)| x + s).collect()
    };
    let base = lattice.base();
    let inner = (radius - 1).max(0);
    for z in box_points(&vec![-inner; d], &vec![inner; d]) {
        for u in 0..base.vertex_count() {
            let Some(target) = realization.locate(&image(&realization.point(u, &z)), tol) else {
                return false;
            };
            let mut mapped: Vec<LatticeVertex> = Vec::with_capacity(base.outgoing(u).len());
            for &e in base.outgoing(u) {
                let (w, zw) = lattice.step(&z, e);
                let Some(hit) = realization.locate(&image(&realization.point(w, &zw)), tol) else {
                    return false;
                };
                let rel = hit.index.iter().zip(&target.index).map(|(p, q)| p - q).collect();
                mapped.push(LatticeVertex { base: hit.base, index: rel });
            }
            let mut expected: Vec<LatticeVertex> = base
                .outgoing(target.base)
                .iter()
                .map(|&f| LatticeVertex { base: base.terminus(f), index: lattice.voltage(f).to_vec() })
                .collect();
            mapped.sort();
            expected.sort();
            if mapped != expected {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_preset;
    use std::f64::consts::PI;

    #[test]
    fn identity_is_a_symmetry() {
        for name in ["cubic2", "honeycomb", "triangular", "diamond"] {
            let (l, r) = build_preset(name).unwrap();
            let d = l.dim();
            assert!(check_symmetry(&l, &r, &DMatrix::identity(d, d), &vec![0.0; d], 2, 1e-9), "{name}");
        }
    }

    #[test]
    fn honeycomb_rotates_by_120_degrees_about_a_vertex() {
        let (l, r) = build_preset("honeycomb").unwrap();
        assert!(check_symmetry(&l, &r, &rotation_2d(2.0 * PI / 3.0), &[0.0, 0.0], 3, 1e-9));
        // 60 degrees about a vertex swaps the sublattices onto hexagon centres
        assert!(!check_symmetry(&l, &r, &rotation_2d(PI / 3.0), &[0.0, 0.0], 3, 1e-9));
    }

    #[test]
    fn shifted_honeycomb_loses_the_rotation() {
        let (l, r) = build_preset("honeycomb-shifted").unwrap();
        assert!(!check_symmetry(&l, &r, &rotation_2d(2.0 * PI / 3.0), &[0.0, 0.0], 3, 1e-9));
    }

    #[test]
    fn cubic_rejects_45_degrees_and_accepts_90() {
        let (l, r) = build_preset("cubic2").unwrap();
        assert!(!check_symmetry(&l, &r, &rotation_2d(PI / 4.0), &[0.0, 0.0], 3, 1e-9));
        assert!(check_symmetry(&l, &r, &rotation_2d(PI / 2.0), &[0.0, 0.0], 3, 1e-9));
        // reflections and translations by lattice vectors also qualify
        let flip = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(check_symmetry(&l, &r, &flip, &[2.0, 0.0], 3, 1e-9));
        assert!(!check_symmetry(&l, &r, &flip, &[0.5, 0.0], 3, 1e-9));
    }

    #[test]
    fn non_orthogonal_candidate_is_rejected() {
        let (l, r) = build_preset("cubic2").unwrap();
        let stretch = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(!check_symmetry(&l, &r, &stretch, &[0.0, 0.0], 2, 1e-9));
    }
}
