//! Rotation matrices, torsion application and the unfolding objective
//! against an independent quaternion implementation.

mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use common::{all_atoms, lumateperone, oracle_volume, quaternion_rotate, torsion_graph, torsion_pairs, zigzag};
use unfolder::cli::{grid_search, prepare};
use unfolder::geometry::{
    apply_torsions, objective_volume, rotation_matrix, volume_gain_percent, Mat4, TorsionAssignment, VolumeEvaluator,
};
use unfolder::hubo::make_angle_table;
use unfolder::molio::Vec3;

// Independent numpy evaluation of the fixture over all heavy atoms.
const FOLDED_VOLUME: f64 = 20796.7661008500;
const BEST_VOLUME_D8: f64 = 24485.3316790900;
const BEST_GAIN_D8: f64 = 17.7362459161;
const BEST_VOLUME_D4: f64 = 24445.6426207039;

fn point() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-10.0f64..10.0)
}

fn axis() -> impl Strategy<Value = (Vec3, Vec3)> {
    (point(), point()).prop_filter("axis too short", |(a, b)| (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>() > 1e-2)
}

fn dist(a: Vec3, b: Vec3) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn degenerate_axis_is_an_error() {
    assert!(rotation_matrix([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 0.3).is_err());
}

#[test]
fn lumateperone_reference_volumes() {
    let p = prepare(&lumateperone()).unwrap();
    let (m, g) = (&p.molecule, &p.graph);
    for (d, best_volume) in [(8, BEST_VOLUME_D8), (4, BEST_VOLUME_D4)] {
        let table = make_angle_table(d).unwrap();
        let folded = objective_volume(m, g, &TorsionAssignment::folded(5, d), &table, &m.all_atom_ids()).unwrap();
        assert!((folded - FOLDED_VOLUME).abs() <= 1e-9 * FOLDED_VOLUME);
        let (_, initial, best) = grid_search(m, g, &table).unwrap();
        assert_eq!(initial, folded);
        assert!((best - best_volume).abs() <= 1e-9 * best_volume, "d = {d}: {best}");
    }
    let gain = volume_gain_percent(FOLDED_VOLUME, BEST_VOLUME_D8).unwrap();
    assert!((gain - BEST_GAIN_D8).abs() < 1e-8);
}

#[test]
fn gain_needs_a_positive_baseline() {
    assert!(volume_gain_percent(0.0, 1.0).is_err());
    assert_eq!(volume_gain_percent(2.0, 3.0).unwrap(), 50.0);
}

proptest! {
    #[test]
    fn rotation_is_rigid_and_fixes_axis((a1, a2) in axis(), theta in -PI..PI, p in point(), q in point()) {
        let r = rotation_matrix(a1, a2, theta).unwrap();
        prop_assert!(r.orthonormality_error() < 1e-9);
        prop_assert!((r.det3() - 1.0).abs() < 1e-9);
        prop_assert!(dist(r.transform_point(a1), a1) < 1e-9);
        prop_assert!(dist(r.transform_point(a2), a2) < 1e-9);
        prop_assert!((dist(r.transform_point(p), r.transform_point(q)) - dist(p, q)).abs() < 1e-9);
        prop_assert!(dist(r.transform_point(p), quaternion_rotate(p, a1, a2, theta)) < 1e-9);
    }

    #[test]
    fn rotation_angles_add_and_invert((a1, a2) in axis(), t1 in -PI..PI, t2 in -PI..PI) {
        let r1 = rotation_matrix(a1, a2, t1).unwrap();
        let r2 = rotation_matrix(a1, a2, t2).unwrap();
        prop_assert!((r1 * r2).max_abs_diff(&rotation_matrix(a1, a2, t1 + t2).unwrap()) < 1e-9);
        prop_assert!((r1 * rotation_matrix(a1, a2, -t1).unwrap()).max_abs_diff(&Mat4::identity()) < 1e-9);
        // Reversing the axis reverses the sense of rotation.
        prop_assert!(rotation_matrix(a2, a1, -t1).unwrap().max_abs_diff(&r1) < 1e-9);
        prop_assert!(rotation_matrix(a1, a2, 2.0 * PI).unwrap().max_abs_diff(&Mat4::identity()) < 1e-9);
    }

    #[test]
    fn objective_matches_oracle(n in 1usize..=4, seed in 0u64..500, branches: bool, d in prop::sample::select(vec![4usize, 6, 8]), pick in prop::collection::vec(1usize..=8, 4)) {
        let m = zigzag(n, seed, branches);
        let g = torsion_graph(&m);
        let table = make_angle_table(d).unwrap();
        let theta = TorsionAssignment::new(pick[..n].iter().map(|&k| (k - 1) % d + 1).collect(), d).unwrap();
        let atoms = all_atoms(&m);
        let volume = objective_volume(&m, &g, &theta, &table, &atoms).unwrap();
        let angles: Vec<f64> = theta.angle_index.iter().map(|&k| table.angle(k)).collect();
        let oracle = oracle_volume(&m, &torsion_pairs(&g), &angles, &atoms);
        prop_assert!((volume - oracle).abs() <= 1e-9 * oracle.max(1.0), "{} vs {}", volume, oracle);
        let fast = VolumeEvaluator::new(&g, &atoms).evaluate(&m, &g, &theta, &table).unwrap();
        prop_assert!((volume - fast).abs() <= 1e-9 * volume.max(1.0));
    }

    #[test]
    fn torsions_keep_fragments_rigid(n in 1usize..=4, seed in 0u64..500, pick in prop::collection::vec(1usize..=8, 4)) {
        let m = zigzag(n, seed, true);
        let g = torsion_graph(&m);
        let table = make_angle_table(8).unwrap();
        let theta = TorsionAssignment::new(pick[..n].to_vec(), 8).unwrap();
        let moved = apply_torsions(&m, &g, &theta, &table).unwrap();
        for fragment in &g.fragments {
            for &u in fragment {
                for &v in fragment {
                    prop_assert!((dist(moved[u], moved[v]) - dist(m.position(u), m.position(v))).abs() < 1e-9);
                }
            }
        }
        for &a in &g.fragments[g.root_fragment()] {
            prop_assert_eq!(moved[a], m.position(a));
        }
        // Bond lengths survive across torsion bonds too.
        for b in &m.bonds {
            prop_assert!((dist(moved[b.a], moved[b.b]) - dist(m.position(b.a), m.position(b.b))).abs() < 1e-9);
        }
    }

    #[test]
    fn folded_state_is_the_input_geometry(n in 1usize..=4, seed in 0u64..500, branches: bool) {
        let m = zigzag(n, seed, branches);
        let g = torsion_graph(&m);
        let table = make_angle_table(4).unwrap();
        let atoms = all_atoms(&m);
        let folded = objective_volume(&m, &g, &TorsionAssignment::folded(n, 4), &table, &atoms).unwrap();
        let direct: f64 = g.eligible_pairs(&atoms).map(|(u, v, _)| dist(m.position(u), m.position(v)).powi(2)).sum();
        prop_assert!((folded - direct).abs() <= 1e-9 * direct.max(1.0));
    }
}
