mod common;

use common::{features, pt, vector_angle_oracle};
use proptest::prelude::*;
use triskel::features::{assimilate, assimilate_rows, sample_features, FeatureMatrix};
use triskel::geometry::{delaunay, Point2D, Tolerances};

fn triangle() -> impl Strategy<Value = [Point2D; 3]> {
    prop::array::uniform3((-50.0f64..50.0, -50.0f64..50.0))
        .prop_map(|p| p.map(|(x, y)| pt(x, y)))
        .prop_filter("near-degenerate", |p| {
            triskel::geometry::orient(p[0], p[1], p[2]).abs() > 1.0
        })
}

/// Points on a 1/8 grid: differences and their squares stay exact under
/// integer translation and reflection.
fn dyadic_triangle() -> impl Strategy<Value = [Point2D; 3]> {
    prop::array::uniform3((-400i32..400, -400i32..400))
        .prop_map(|p| p.map(|(x, y)| pt(f64::from(x) / 8.0, f64::from(y) / 8.0)))
        .prop_filter("degenerate", |p| {
            triskel::geometry::orient(p[0], p[1], p[2]).abs() > 1.0
        })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[test]
fn sample_features_rows_match_triangle_features() {
    let tol = Tolerances::default();
    let t = delaunay(&[pt(0.0, 0.0), pt(3.0, 0.0), pt(0.0, 3.0), pt(1.0, 1.0)], &tol).unwrap();
    let s = sample_features(&t, &tol).unwrap();
    assert_eq!((s.matrix.len(), s.dropped), (3, 0));
    for (row, tri) in s.matrix.rows().iter().zip(&t.triangles) {
        let [a, b, c] = tri.0.map(|i| t.points[i]);
        assert_eq!(*row, features([a, b, c]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_order_invariants(p in triangle()) {
        let f = features(p);
        let (l, a) = (f.lengths(), f.angles());
        prop_assert!(l[0] >= l[1] && l[1] >= l[2] && l[2] > 0.0);
        prop_assert!(a[0] >= a[1] && a[1] >= a[2] && a[2] > 0.0);
        prop_assert!((a.iter().sum::<f64>() - 180.0).abs() < 1e-6);
        prop_assert!(l[1] + l[2] > l[0]);
    }

    #[test]
    fn matches_vector_angle_oracle(p in triangle()) {
        let got = features(p).to_array();
        let want = vector_angle_oracle(p);
        for i in 0..3 {
            prop_assert!(rel_close(got[i], want[i], 1e-12));
            prop_assert!((got[i + 3] - want[i + 3]).abs() < 1e-6);
        }
    }

    #[test]
    fn point_order_does_not_matter(p in triangle()) {
        let f = features(p);
        for q in [[p[1], p[2], p[0]], [p[2], p[0], p[1]], [p[1], p[0], p[2]], [p[0], p[2], p[1]], [p[2], p[1], p[0]]] {
            prop_assert_eq!(features(q), f);
        }
    }

    #[test]
    fn exact_under_translation_and_reflection(p in dyadic_triangle(), dx in -300i32..300, dy in -300i32..300) {
        let f = features(p);
        let moved = p.map(|q| pt(q.x() + f64::from(dx), q.y() + f64::from(dy)));
        prop_assert_eq!(features(moved), f);
        let flipped = p.map(|q| pt(-q.x(), q.y()));
        prop_assert_eq!(features(flipped), f);
    }

    #[test]
    fn rotation_within_relative_tolerance(p in triangle(), theta in 0.0f64..std::f64::consts::TAU) {
        let (s, c) = theta.sin_cos();
        let rotated = p.map(|q| pt(c * q.x() - s * q.y(), s * q.x() + c * q.y()));
        let (a, b) = (features(p).to_array(), features(rotated).to_array());
        for i in 0..6 {
            prop_assert!(rel_close(a[i], b[i], 1e-9), "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn scale_covariance(p in triangle(), s in 0.01f64..100.0) {
        let (a, b) = (features(p), features(p.map(|q| pt(s * q.x(), s * q.y()))));
        for i in 0..3 {
            prop_assert!(rel_close(b.lengths()[i], s * a.lengths()[i], 1e-12));
            prop_assert!((b.angles()[i] - a.angles()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn assimilation_matches_column_scan_and_contains_rows(tris in prop::collection::vec(triangle(), 1..50)) {
        let rows: Vec<_> = tris.iter().map(|&t| features(t)).collect();
        let fm = FeatureMatrix::new(rows.clone()).unwrap();
        let iv = assimilate(&fm);
        let raw: Vec<[f64; 6]> = rows.iter().map(|r| r.to_array()).collect();
        let want = common::brute_intervals(&raw);
        for (p, interval) in iv.intervals().iter().enumerate() {
            prop_assert_eq!([interval.lo(), interval.hi()], want[p]);
        }
        prop_assert!(rows.iter().all(|r| iv.contains_row(r)));
    }

    #[test]
    fn adding_a_row_never_shrinks(tris in prop::collection::vec(triangle(), 2..30)) {
        let rows: Vec<_> = tris.iter().map(|&t| features(t)).collect();
        let before = assimilate_rows(&rows[..rows.len() - 1]).unwrap().intervals();
        let after = assimilate_rows(&rows).unwrap().intervals();
        for (b, a) in before.iter().zip(&after) {
            prop_assert!(a.lo() <= b.lo() && a.hi() >= b.hi());
        }
    }
}
