//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triskel::classifier::ClassId;
use triskel::features::{triangle_features, FeatureMatrix, TriangleFeatures};
use triskel::geometry::{orient, Point2D, Tolerances};

pub fn pt(x: f64, y: f64) -> Point2D {
    Point2D::new(x, y).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Three points in `[0, span)^2` whose triangle is comfortably
/// non-degenerate.
pub fn random_triangle(rng: &mut impl Rng, span: f64) -> [Point2D; 3] {
    loop {
        let p: [Point2D; 3] =
            std::array::from_fn(|_| pt(rng.random_range(0.0..span), rng.random_range(0.0..span)));
        if orient(p[0], p[1], p[2]).abs() > 1e-3 * span * span {
            return p;
        }
    }
}

pub fn features(p: [Point2D; 3]) -> TriangleFeatures {
    triangle_features(p[0], p[1], p[2], &Tolerances::default()).unwrap()
}

/// Lengths sorted descending and the angle opposite each, in degrees, from
/// the atan2 of the two edge vectors at every corner.
pub fn vector_angle_oracle(p: [Point2D; 3]) -> [f64; 6] {
    let corner = |i: usize| {
        let (o, u, v) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
        let (ux, uy) = (u.x() - o.x(), u.y() - o.y());
        let (vx, vy) = (v.x() - o.x(), v.y() - o.y());
        (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy).to_degrees()
    };
    // side i is opposite corner i
    let mut pairs: Vec<(f64, f64)> = (0..3)
        .map(|i| (p[(i + 1) % 3].distance(&p[(i + 2) % 3]), corner(i)))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    [
        pairs[0].0, pairs[1].0, pairs[2].0, pairs[0].1, pairs[1].1, pairs[2].1,
    ]
}

/// Feature matrix of `m` random triangles in `[0, span)^2`.
pub fn random_matrix(rng: &mut impl Rng, m: usize, span: f64) -> FeatureMatrix {
    let rows = (0..m).map(|_| features(random_triangle(rng, span))).collect();
    FeatureMatrix::new(rows).unwrap()
}

/// Column-wise `[min, max]` of raw rows: `[lo0, hi0, lo1, hi1, ...]`.
pub fn brute_intervals(rows: &[[f64; 6]]) -> [[f64; 2]; 6] {
    let mut out = [[f64::INFINITY, f64::NEG_INFINITY]; 6];
    for r in rows {
        for p in 0..6 {
            out[p][0] = out[p][0].min(r[p]);
            out[p][1] = out[p][1].max(r[p]);
        }
    }
    out
}

/// Triple-loop acceptance count `(ACL, ACA)` of a test against raw
/// reference intervals.
pub fn brute_acceptance(test: &[[f64; 6]], refs: &[[[f64; 2]; 6]]) -> (u64, u64) {
    let (mut acl, mut aca) = (0, 0);
    for row in test {
        for p in 0..6 {
            for r in refs {
                if row[p] >= r[p][0] && row[p] <= r[p][1] {
                    if p < 3 {
                        acl += 1;
                    } else {
                        aca += 1;
                    }
                }
            }
        }
    }
    (acl, aca)
}

/// Arg-max of the total count; first (smallest id) maximiser wins.
pub fn brute_classify(
    test: &[[f64; 6]],
    classes: &[(ClassId, Vec<[[f64; 2]; 6]>)],
) -> (ClassId, Vec<(u64, u64)>) {
    let mut sorted: Vec<&(ClassId, Vec<[[f64; 2]; 6]>)> = classes.iter().collect();
    sorted.sort_by_key(|c| c.0);
    let counts: Vec<(u64, u64)> = sorted.iter().map(|c| brute_acceptance(test, &c.1)).collect();
    let mut best = 0;
    for k in 0..counts.len() {
        if counts[k].0 + counts[k].1 > counts[best].0 + counts[best].1 {
            best = k;
        }
    }
    (sorted[best].0, counts)
}

pub fn raw_rows(fm: &FeatureMatrix) -> Vec<[f64; 6]> {
    fm.rows().iter().map(|r| r.to_array()).collect()
}
