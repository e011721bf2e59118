//! Planar geometry: points, convex hull, the in-circle predicate and
//! Delaunay triangulation of small point sets.
//!
//! Coordinates are pixel scale (at most ~1e4), so tolerance-banded double
//! precision predicates are used throughout instead of exact arithmetic.
//! The triangulation is built by incremental Bowyer-Watson insertion. The
//! bounding super-triangle is kept symbolic: its vertices sit at infinity and
//! are represented by "ghost" triangles hanging off each hull edge, so no
//! huge finite coordinates ever enter a determinant.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("empty point set")]
    EmptyInput,
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("degenerate triangle (signed area {area:e})")]
    DegenerateTriangle { area: f64 },
    #[error("need at least 3 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("all points are collinear")]
    AllCollinear,
    #[error("vertex index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("triangulation invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Numerical tolerances shared by the geometric predicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Minimum |signed area| (squared pixels) of a non-degenerate triangle.
    pub area: f64,
    /// Band around zero of the normalized in-circle value reported as "on".
    pub incircle: f64,
    /// Points closer than this (Euclidean) are merged before triangulation.
    pub duplicate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            area: 1e-12,
            incircle: 1e-10,
            duplicate: 1e-9,
        }
    }
}

/// A finite point in the plane, in pixel units.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2D {
    x: f64,
    y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(GeometryError::NonFinite { x, y })
        }
    }

    /// Center of the pixel at column `x`, row `y`.
    pub fn from_pixel(x: usize, y: usize) -> Self {
        Self {
            x: x as f64,
            y: y as f64,
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn distance_squared(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl fmt::Debug for Point2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl TryFrom<[f64; 2]> for Point2D {
    type Error = GeometryError;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Point2D::new(v[0], v[1])
    }
}

impl From<Point2D> for [f64; 2] {
    fn from(p: Point2D) -> Self {
        [p.x, p.y]
    }
}

/// Twice the signed area of `(a, b, c)`; positive when counter-clockwise.
#[inline]
pub fn orient(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Signed area of the triangle `(a, b, c)`.
#[inline]
pub fn signed_area(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    0.5 * orient(a, b, c)
}

/// Vertex indices of one triangle, counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Triangle(pub [usize; 3]);

impl Triangle {
    pub fn vertices(&self) -> [usize; 3] {
        self.0
    }

    /// Same triangle rotated so that the smallest index comes first.
    /// Orientation is preserved.
    pub fn canonical(&self) -> Triangle {
        let [a, b, c] = self.0;
        if a <= b && a <= c {
            Triangle([a, b, c])
        } else if b <= a && b <= c {
            Triangle([b, c, a])
        } else {
            Triangle([c, a, b])
        }
    }

    pub fn corners(&self, points: &[Point2D]) -> Result<[Point2D; 3]> {
        let mut out = [Point2D::from_pixel(0, 0); 3];
        for (slot, &index) in out.iter_mut().zip(self.0.iter()) {
            *slot = *points.get(index).ok_or(GeometryError::IndexOutOfRange {
                index,
                len: points.len(),
            })?;
        }
        Ok(out)
    }

    pub fn signed_area(&self, points: &[Point2D]) -> Result<f64> {
        let [a, b, c] = self.corners(points)?;
        Ok(signed_area(a, b, c))
    }
}

/// Where a point lies relative to a triangle's circumcircle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleSide {
    Inside,
    On,
    Outside,
}

/// In-circle determinant of `d` against `(a, b, c)`, normalized by
/// `orient(a, b, c) * R^2`. The result equals `1 - |d - o|^2 / R^2` where `o`
/// and `R` are the circumcenter and circumradius, so it is independent of the
/// triangle's orientation and of the coordinate scale.
pub fn normalized_incircle(a: Point2D, b: Point2D, c: Point2D, d: Point2D) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    let det =
        alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) + clift * (adx * bdy - ady * bdx);

    let o = orient(a, b, c);
    // R^2 = |ab|^2 |bc|^2 |ca|^2 / (4 o^2)
    let prod = a.distance_squared(&b) * b.distance_squared(&c) * c.distance_squared(&a);
    det * 4.0 * o / prod
}

/// Classify `p` against the circumcircle of `tri`.
pub fn circumcircle_contains(
    tri: &Triangle,
    p: Point2D,
    points: &[Point2D],
    tol: &Tolerances,
) -> Result<CircleSide> {
    let [a, b, c] = tri.corners(points)?;
    let area = signed_area(a, b, c);
    if area.abs() < tol.area {
        return Err(GeometryError::DegenerateTriangle { area });
    }
    Ok(classify_incircle(normalized_incircle(a, b, c, p), tol))
}

fn classify_incircle(value: f64, tol: &Tolerances) -> CircleSide {
    if value > tol.incircle {
        CircleSide::Inside
    } else if value < -tol.incircle {
        CircleSide::Outside
    } else {
        CircleSide::On
    }
}

/// Convex hull by Andrew's monotone chain. Indices are returned
/// counter-clockwise starting from the lexicographically smallest point;
/// collinear boundary points are dropped.
pub fn convex_hull(points: &[Point2D]) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (p, q) = (points[i], points[j]);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)).then(i.cmp(&j))
    });
    order.dedup_by(|&mut i, &mut j| points[i] == points[j]);
    if order.len() < 3 {
        return Ok(order);
    }

    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 {
                let n = hull.len();
                if orient(points[hull[n - 2]], points[hull[n - 1]], points[i]) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 2 {
        // every point collinear and coincident apart from the extremes
        hull = vec![order[0], *order.last().unwrap()];
    }
    Ok(hull)
}

/// A Delaunay triangulation with its convex hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    pub points: Vec<Point2D>,
    pub triangles: Vec<Triangle>,
    pub hull: Vec<usize>,
}

impl Triangulation {
    pub fn from_parts(points: Vec<Point2D>, triangles: Vec<Triangle>, hull: Vec<usize>) -> Self {
        Self {
            points,
            triangles,
            hull,
        }
    }

    /// `2z - 2 - k`, the triangle count of a general-position point set.
    pub fn expected_triangle_count(&self) -> i64 {
        2 * self.points.len() as i64 - 2 - self.hull.len() as i64
    }

    pub fn total_area(&self) -> f64 {
        self.triangles
            .iter()
            .filter_map(|t| t.signed_area(&self.points).ok())
            .sum()
    }

    pub fn hull_area(&self) -> f64 {
        polygon_area(self.hull.iter().map(|&i| self.points[i]))
    }

    /// Checks orientation, edge manifoldness and the empty-circumcircle
    /// property against every point.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let mut edge_use: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            let [a, b, c] = t.0;
            if a == b || b == c || a == c {
                return Err(GeometryError::Invariant(format!("repeated vertex in {t:?}")));
            }
            let area = t.signed_area(&self.points)?;
            if area < tol.area {
                return Err(GeometryError::Invariant(format!(
                    "triangle {t:?} is not counter-clockwise (area {area:e})"
                )));
            }
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if edge_use.insert((u, v), 1).is_some() {
                    return Err(GeometryError::Invariant(format!(
                        "directed edge ({u}, {v}) used twice"
                    )));
                }
            }
        }
        for &(u, v) in edge_use.keys() {
            if !edge_use.contains_key(&(v, u)) && !self.is_hull_edge(u, v) {
                return Err(GeometryError::Invariant(format!(
                    "edge ({u}, {v}) is on the boundary but not on the hull line"
                )));
            }
        }
        for t in &self.triangles {
            for (i, &p) in self.points.iter().enumerate() {
                if t.0.contains(&i) {
                    continue;
                }
                if circumcircle_contains(t, p, &self.points, tol)? == CircleSide::Inside {
                    return Err(GeometryError::Invariant(format!(
                        "point {i} lies inside the circumcircle of {t:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn is_hull_edge(&self, u: usize, v: usize) -> bool {
        // A boundary edge must have every point on its inner side (or on it).
        let (a, b) = (self.points[u], self.points[v]);
        self.points.iter().all(|&p| orient(a, b, p) >= 0.0)
    }
}

/// Shoelace area of a closed polygon; positive when counter-clockwise.
pub fn polygon_area(vertices: impl IntoIterator<Item = Point2D>) -> f64 {
    let pts: Vec<Point2D> = vertices.into_iter().collect();
    if pts.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..pts.len() {
        let p = pts[i];
        let q = pts[(i + 1) % pts.len()];
        acc += p.x * q.y - q.x * p.y;
    }
    0.5 * acc
}

/// Drop points within `radius` of an earlier point, keeping first occurrences.
pub fn dedup_points(points: &[Point2D], radius: f64) -> Vec<Point2D> {
    let r2 = radius * radius;
    let mut kept: Vec<Point2D> = Vec::with_capacity(points.len());
    for &p in points {
        if !kept.iter().any(|q| q.distance_squared(&p) <= r2) {
            kept.push(p);
        }
    }
    kept
}

const GHOST: usize = usize::MAX;

struct Mesh<'a> {
    points: &'a [Point2D],
    tol: Tolerances,
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    /// directed edge -> triangle holding it in counter-clockwise order
    edges: HashMap<(usize, usize), usize>,
}

impl<'a> Mesh<'a> {
    fn new(points: &'a [Point2D], tol: Tolerances) -> Self {
        Self {
            points,
            tol,
            tris: Vec::new(),
            alive: Vec::new(),
            edges: HashMap::new(),
        }
    }

    fn add(&mut self, t: [usize; 3]) -> usize {
        let id = self.tris.len();
        let [a, b, c] = t;
        for e in [(a, b), (b, c), (c, a)] {
            self.edges.insert(e, id);
        }
        self.tris.push(t);
        self.alive.push(true);
        id
    }

    fn kill(&mut self, id: usize) {
        let [a, b, c] = self.tris[id];
        for e in [(a, b), (b, c), (c, a)] {
            if self.edges.get(&e) == Some(&id) {
                self.edges.remove(&e);
            }
        }
        self.alive[id] = false;
    }

    fn is_ghost(t: &[usize; 3]) -> bool {
        t[2] == GHOST
    }

    /// Whether `p` is strictly inside the (possibly infinite) circumcircle.
    /// A ghost triangle `[u, v, GHOST]` covers the open half-plane left of
    /// `u -> v` plus the open segment `uv`.
    fn in_circle(&self, t: &[usize; 3], p: Point2D) -> bool {
        if Self::is_ghost(t) {
            let (u, v) = (self.points[t[0]], self.points[t[1]]);
            let o = orient(u, v, p);
            if o > 0.0 {
                return true;
            }
            if o < 0.0 {
                return false;
            }
            let dot_u = (p.x - u.x) * (v.x - u.x) + (p.y - u.y) * (v.y - u.y);
            let dot_v = (p.x - v.x) * (u.x - v.x) + (p.y - v.y) * (u.y - v.y);
            dot_u > 0.0 && dot_v > 0.0
        } else {
            let [a, b, c] = t.map(|i| self.points[i]);
            classify_incircle(normalized_incircle(a, b, c, p), &self.tol) == CircleSide::Inside
        }
    }

    fn locate(&self, p: Point2D) -> Option<usize> {
        let mut ghost_hit = None;
        for (id, t) in self.tris.iter().enumerate() {
            if !self.alive[id] {
                continue;
            }
            if Self::is_ghost(t) {
                if ghost_hit.is_none() && orient(self.points[t[0]], self.points[t[1]], p) > 0.0 {
                    ghost_hit = Some(id);
                }
            } else {
                let [a, b, c] = t.map(|i| self.points[i]);
                if orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0 {
                    return Some(id);
                }
            }
        }
        ghost_hit
    }

    fn cavity(&self, seed: usize, p: Point2D, excluded: &[usize]) -> Vec<usize> {
        let mut in_cavity = vec![seed];
        let mut visited = vec![seed];
        let mut stack = vec![seed];
        while let Some(id) = stack.pop() {
            let [a, b, c] = self.tris[id];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                let Some(&nb) = self.edges.get(&(v, u)) else {
                    continue;
                };
                if visited.contains(&nb) {
                    continue;
                }
                visited.push(nb);
                if !excluded.contains(&nb) && self.in_circle(&self.tris[nb], p) {
                    in_cavity.push(nb);
                    stack.push(nb);
                }
            }
        }
        in_cavity.sort_unstable();
        in_cavity
    }

    /// Boundary edges of the cavity in deterministic order, paired with the
    /// cavity triangle that owns each one.
    fn boundary(&self, cavity: &[usize]) -> Vec<((usize, usize), usize)> {
        let mut out = Vec::new();
        for &id in cavity {
            let [a, b, c] = self.tris[id];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                let twin = self.edges.get(&(v, u));
                if twin.is_none_or(|nb| cavity.binary_search(nb).is_err()) {
                    out.push(((u, v), id));
                }
            }
        }
        out
    }

    fn insert(&mut self, pi: usize) -> Result<()> {
        let p = self.points[pi];
        let seed = self.locate(p).ok_or_else(|| {
            GeometryError::Invariant(format!("point {pi} could not be located in the mesh"))
        })?;

        let mut excluded: Vec<usize> = Vec::new();
        let (cavity, boundary) = loop {
            let cavity = self.cavity(seed, p, &excluded);
            let boundary = self.boundary(&cavity);
            // every real boundary edge must see p strictly on its left
            let bad = boundary.iter().find(|((u, v), _)| {
                *u != GHOST && *v != GHOST && orient(self.points[*u], self.points[*v], p) <= 0.0
            });
            match bad {
                None => break (cavity, boundary),
                Some(&(_, owner)) if owner != seed => excluded.push(owner),
                Some(_) => {
                    return Err(GeometryError::Invariant(format!(
                        "cavity of point {pi} is not star-shaped"
                    )))
                }
            }
        };

        for &id in &cavity {
            self.kill(id);
        }
        for ((u, v), _) in boundary {
            let t = if u == GHOST {
                [v, pi, GHOST]
            } else if v == GHOST {
                [pi, u, GHOST]
            } else {
                [u, v, pi]
            };
            self.add(t);
        }
        Ok(())
    }

    /// Re-choose the diagonal of every cocircular quadrilateral so that the
    /// diagonal with the smaller minimum vertex index wins.
    fn resolve_cocircular(&mut self) {
        let cap = 4 * self.tris.len() * self.tris.len() + 16;
        let mut flips = 0usize;
        'restart: loop {
            for id in 0..self.tris.len() {
                if !self.alive[id] || Self::is_ghost(&self.tris[id]) {
                    continue;
                }
                let t1 = self.tris[id];
                for k in 0..3 {
                    let (u, v, w) = (t1[k], t1[(k + 1) % 3], t1[(k + 2) % 3]);
                    let Some(&other) = self.edges.get(&(v, u)) else {
                        continue;
                    };
                    let t2 = self.tris[other];
                    if Self::is_ghost(&t2) {
                        continue;
                    }
                    let x = *t2.iter().find(|&&i| i != u && i != v).unwrap();
                    if u.min(v) <= w.min(x) {
                        continue;
                    }
                    let [pu, pv, pw, px] = [u, v, w, x].map(|i| self.points[i]);
                    let side = classify_incircle(normalized_incircle(pu, pv, pw, px), &self.tol);
                    if side != CircleSide::On {
                        continue;
                    }
                    if signed_area(pw, pu, px) < self.tol.area || signed_area(px, pv, pw) < self.tol.area {
                        continue;
                    }
                    self.kill(id);
                    self.kill(other);
                    self.add([w, u, x]);
                    self.add([x, v, w]);
                    flips += 1;
                    if flips > cap {
                        log::warn!("cocircular tie resolution stopped after {flips} flips");
                        break 'restart;
                    }
                    continue 'restart;
                }
            }
            break;
        }
    }

    fn real_triangles(&self) -> Vec<Triangle> {
        let mut out: Vec<Triangle> = self
            .tris
            .iter()
            .zip(&self.alive)
            .filter(|(t, &alive)| alive && !Self::is_ghost(t))
            .map(|(t, _)| Triangle(*t).canonical())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Delaunay triangulation of `points`.
///
/// Points within `tol.duplicate` of an earlier point are merged first (the
/// first occurrence wins) and the result indexes the merged list. Points are
/// inserted in input order, so identical input yields identical output.
pub fn delaunay(points: &[Point2D], tol: &Tolerances) -> Result<Triangulation> {
    let pts = dedup_points(points, tol.duplicate);
    if pts.len() < 3 {
        return Err(GeometryError::TooFewPoints(pts.len()));
    }

    let (i0, i1) = (0usize, 1usize);
    let (i2, best) = (2..pts.len())
        .map(|k| (k, orient(pts[i0], pts[i1], pts[k]).abs()))
        .fold((0, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    if 0.5 * best < tol.area {
        return Err(GeometryError::AllCollinear);
    }
    let (a, b, c) = if orient(pts[i0], pts[i1], pts[i2]) > 0.0 {
        (i0, i1, i2)
    } else {
        (i0, i2, i1)
    };

    let mut mesh = Mesh::new(&pts, *tol);
    mesh.add([a, b, c]);
    mesh.add([b, a, GHOST]);
    mesh.add([c, b, GHOST]);
    mesh.add([a, c, GHOST]);

    for pi in 0..pts.len() {
        if pi == a || pi == b || pi == c {
            continue;
        }
        mesh.insert(pi)?;
    }
    mesh.resolve_cocircular();

    let triangles = mesh.real_triangles();
    let hull = convex_hull(&pts)?;
    Ok(Triangulation {
        points: pts,
        triangles,
        hull,
    })
}
