//! Per-triangle length/angle features and their interval-valued
//! assimilation over all triangles of one sample.
//!
//! Column `p` of every feature row means "the p-th longest side" (and the
//! angle opposite it), so rows from different triangles are comparable.
//! Lengths are in pixels, angles in degrees.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{signed_area, GeometryError, Point2D, Tolerances, Triangulation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("degenerate triangle (signed area {area:e})")]
    DegenerateTriangle { area: f64 },
    #[error("triangulation has no non-degenerate triangle")]
    NoValidTriangles,
    #[error("feature matrix has no rows")]
    EmptyMatrix,
    #[error("invalid feature row: {0}")]
    InvalidRow(String),
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, FeatureError>;

/// Side lengths sorted descending, with the interior angle opposite each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct TriangleFeatures {
    lengths: [f64; 3],
    angles: [f64; 3],
}

impl TriangleFeatures {
    /// Validate a row given explicitly, e.g. when reloading saved features.
    pub fn new(lengths: [f64; 3], angles: [f64; 3]) -> Result<Self> {
        let [a, b, c] = lengths;
        let [aa, bb, cc] = angles;
        let finite = lengths.iter().chain(&angles).all(|v| v.is_finite());
        if !finite || !(a >= b && b >= c && c > 0.0) {
            return Err(FeatureError::InvalidRow(format!("lengths {lengths:?}")));
        }
        if !(aa >= bb && bb >= cc && cc > 0.0) || (aa + bb + cc - 180.0).abs() > 1e-6 {
            return Err(FeatureError::InvalidRow(format!("angles {angles:?}")));
        }
        if b + c <= a {
            return Err(FeatureError::InvalidRow(format!(
                "lengths {lengths:?} violate the triangle inequality"
            )));
        }
        Ok(Self { lengths, angles })
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.lengths
    }

    pub fn angles(&self) -> [f64; 3] {
        self.angles
    }

    pub fn to_array(&self) -> [f64; 6] {
        let [a, b, c] = self.lengths;
        let [aa, bb, cc] = self.angles;
        [a, b, c, aa, bb, cc]
    }
}

impl TryFrom<[f64; 6]> for TriangleFeatures {
    type Error = FeatureError;

    fn try_from(v: [f64; 6]) -> Result<Self> {
        TriangleFeatures::new([v[0], v[1], v[2]], [v[3], v[4], v[5]])
    }
}

impl From<TriangleFeatures> for [f64; 6] {
    fn from(t: TriangleFeatures) -> Self {
        t.to_array()
    }
}

/// Lengths and angles of the triangle `(p1, p2, p3)`.
///
/// The angle opposite the longest side comes from the cosine rule; the
/// smallest angle then follows from the sine rule, which is safe because
/// it cannot be obtuse once the largest angle is known; the middle angle
/// closes the sum to 180 degrees.
pub fn triangle_features(
    p1: Point2D,
    p2: Point2D,
    p3: Point2D,
    tol: &Tolerances,
) -> Result<TriangleFeatures> {
    let area = signed_area(p1, p2, p3);
    if area.abs() < tol.area {
        return Err(FeatureError::DegenerateTriangle { area });
    }
    let mut sides = [p2.distance(&p3), p1.distance(&p3), p1.distance(&p2)];
    sides.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = sides;

    let cos_a = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
    let angle_a = cos_a.acos();
    let sin_c = (c * angle_a.sin() / a).clamp(-1.0, 1.0);
    let angle_c = sin_c.asin().to_degrees();
    let angle_a = angle_a.to_degrees();
    let angle_b = 180.0 - angle_a - angle_c;

    // equal sides may come out a rounding error apart; keep the order strict
    let mut angles = [angle_a, angle_b, angle_c];
    angles.sort_by(|x, y| y.total_cmp(x));
    TriangleFeatures::new(sides, angles).map_err(|_| FeatureError::DegenerateTriangle { area })
}

/// One feature row per triangle of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TriangleFeatures>", into = "Vec<TriangleFeatures>")]
pub struct FeatureMatrix {
    rows: Vec<TriangleFeatures>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<TriangleFeatures>) -> Result<Self> {
        if rows.is_empty() {
            return Err(FeatureError::EmptyMatrix);
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TriangleFeatures] {
        &self.rows
    }

    /// Number of triangles `m`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with header `a,b,c,A,B,C`, one line per triangle.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,c,A,B,C\n");
        for row in &self.rows {
            let v = row.to_array();
            let _ = writeln!(out, "{},{},{},{},{},{}", v[0], v[1], v[2], v[3], v[4], v[5]);
        }
        out
    }
}

impl TryFrom<Vec<TriangleFeatures>> for FeatureMatrix {
    type Error = FeatureError;

    fn try_from(rows: Vec<TriangleFeatures>) -> Result<Self> {
        FeatureMatrix::new(rows)
    }
}

impl From<FeatureMatrix> for Vec<TriangleFeatures> {
    fn from(m: FeatureMatrix) -> Self {
        m.rows
    }
}

/// Features of a whole triangulation plus the number of triangles skipped
/// as degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFeatures {
    pub matrix: FeatureMatrix,
    pub dropped: usize,
}

pub fn sample_features(tri: &Triangulation, tol: &Tolerances) -> Result<SampleFeatures> {
    let mut rows = Vec::with_capacity(tri.triangles.len());
    let mut dropped = 0;
    for t in &tri.triangles {
        let [a, b, c] = t.corners(&tri.points)?;
        match triangle_features(a, b, c, tol) {
            Ok(row) => rows.push(row),
            Err(FeatureError::DegenerateTriangle { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if dropped > 0 {
        log::debug!("dropped {dropped} degenerate triangle(s)");
    }
    let matrix = FeatureMatrix::new(rows).map_err(|_| FeatureError::NoValidTriangles)?;
    Ok(SampleFeatures { matrix, dropped })
}

/// Closed interval; both endpoints are members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(FeatureError::InvalidInterval { lo, hi })
        }
    }

    pub fn point(v: f64) -> Result<Self> {
        Self::new(v, v)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn widen(&mut self, v: f64) {
        self.lo = self.lo.min(v);
        self.hi = self.hi.max(v);
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = FeatureError;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Six closed intervals: three side lengths then three angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[Interval; 6]", into = "[Interval; 6]")]
pub struct IntervalVector {
    lengths: [Interval; 3],
    angles: [Interval; 3],
}

impl IntervalVector {
    pub fn new(lengths: [Interval; 3], angles: [Interval; 3]) -> Result<Self> {
        for a in &angles {
            if !(a.lo > 0.0 && a.hi < 180.0) {
                return Err(FeatureError::InvalidInterval { lo: a.lo, hi: a.hi });
            }
        }
        Ok(Self { lengths, angles })
    }

    pub fn lengths(&self) -> &[Interval; 3] {
        &self.lengths
    }

    pub fn angles(&self) -> &[Interval; 3] {
        &self.angles
    }

    /// All six intervals in column order len1..len3, ang1..ang3.
    pub fn intervals(&self) -> [Interval; 6] {
        let [l1, l2, l3] = self.lengths;
        let [a1, a2, a3] = self.angles;
        [l1, l2, l3, a1, a2, a3]
    }

    pub fn contains_row(&self, row: &TriangleFeatures) -> bool {
        self.intervals()
            .iter()
            .zip(row.to_array())
            .all(|(i, v)| i.contains(v))
    }
}

impl TryFrom<[Interval; 6]> for IntervalVector {
    type Error = FeatureError;

    fn try_from(v: [Interval; 6]) -> Result<Self> {
        IntervalVector::new([v[0], v[1], v[2]], [v[3], v[4], v[5]])
    }
}

impl From<IntervalVector> for [Interval; 6] {
    fn from(v: IntervalVector) -> Self {
        v.intervals()
    }
}

/// Column-wise `[min, max]` over all rows.
pub fn assimilate(fm: &FeatureMatrix) -> IntervalVector {
    assimilate_rows(fm.rows()).expect("feature matrices are never empty")
}

pub fn assimilate_rows(rows: &[TriangleFeatures]) -> Result<IntervalVector> {
    let first = rows.first().ok_or(FeatureError::EmptyMatrix)?;
    let mut lengths = first.lengths.map(|v| Interval { lo: v, hi: v });
    let mut angles = first.angles.map(|v| Interval { lo: v, hi: v });
    for row in &rows[1..] {
        for p in 0..3 {
            lengths[p].widen(row.lengths[p]);
            angles[p].widen(row.angles[p]);
        }
    }
    Ok(IntervalVector { lengths, angles })
}
