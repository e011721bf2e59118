//! Binary rasters, thinning, boundary contours, Discrete Curve Evolution,
//! skeleton pruning and endpoint/junction detection.
//!
//! Pixel `(x, y)` is column `x`, row `y`, and maps to the point `(x, y)`.
//! Orientation words ("counter-clockwise", "convex") refer to the sign of the
//! shoelace area computed on those raw coordinates, the same convention the
//! geometry module uses.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{polygon_area, Point2D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeletonError {
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("raster dimensions must be positive, got {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("expected {expected} pixels, got {actual}")]
    PixelCountMismatch { expected: usize, actual: usize },
    #[error("shape boundary has only {0} vertices")]
    DegenerateShape(usize),
    #[error("DCE target must be at least 3 vertices, got {0}")]
    TargetTooSmall(usize),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
}

pub type Result<T> = std::result::Result<T, SkeletonError>;

/// Offsets of the 8-neighborhood, clockwise on screen starting north:
/// N, NE, E, SE, S, SW, W, NW.
const RING: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Rectangular boolean pixel grid stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryRaster {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
}

impl std::fmt::Debug for BinaryRaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryRaster {}x{}", self.width, self.height)?;
        f.write_str(&self.to_ascii())
    }
}

impl BinaryRaster {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::from_pixels(width, height, vec![false; width * height])
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(SkeletonError::InvalidDimensions { width, height });
        }
        if pixels.len() != width * height {
            return Err(SkeletonError::PixelCountMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Parse rows of `#` (foreground) and `.` (background). Blank lines and
    /// surrounding whitespace are ignored.
    pub fn from_ascii(art: &str) -> Result<Self> {
        let rows: Vec<&str> = art.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut pixels = Vec::with_capacity(width * height);
        for row in &rows {
            if row.chars().count() != width {
                return Err(SkeletonError::PixelCountMismatch {
                    expected: width * height,
                    actual: pixels.len() + row.chars().count(),
                });
            }
            pixels.extend(row.chars().map(|c| c == '#'));
        }
        Self::from_pixels(width, height, pixels)
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(if self.get(x, y) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.pixels[y * self.width + x]
    }

    /// Like [`get`](Self::get) but treats out-of-range coordinates as background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && self.get(x as usize, y as usize)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        let w = self.width;
        self.pixels[y * w + x] = value;
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    /// Foreground pixel coordinates in raster order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// Neighbor occupancy in ring order N, NE, E, SE, S, SW, W, NW.
    pub fn ring(&self, x: usize, y: usize) -> [bool; 8] {
        RING.map(|(dx, dy)| self.get_signed(x as isize + dx, y as isize + dy))
    }

    pub fn neighbor_count(&self, x: usize, y: usize) -> usize {
        self.ring(x, y).iter().filter(|&&b| b).count()
    }

    fn neighbors(&self, x: usize, y: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        RING.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            self.get_signed(nx, ny).then_some((nx as usize, ny as usize))
        })
    }

    /// Rotate a quarter turn clockwise on screen: `(x, y) -> (h - 1 - y, x)`.
    pub fn rotate90(&self) -> BinaryRaster {
        let (w, h) = (self.width, self.height);
        let mut out = BinaryRaster {
            width: h,
            height: w,
            pixels: vec![false; w * h],
        };
        for (x, y) in self.foreground() {
            out.set(h - 1 - y, x, true);
        }
        out
    }

    /// Whether every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryRaster) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.pixels.iter().zip(&other.pixels).all(|(&a, &b)| !a || b)
    }

    /// 8-connected foreground components, each a list of pixels in raster
    /// order; components are ordered by their first pixel.
    pub fn components(&self) -> Vec<Vec<(usize, usize)>> {
        let mut label = vec![false; self.pixels.len()];
        let mut out = Vec::new();
        for (x, y) in self.foreground() {
            if label[y * self.width + x] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![(x, y)];
            label[y * self.width + x] = true;
            while let Some((cx, cy)) = stack.pop() {
                comp.push((cx, cy));
                for (nx, ny) in self.neighbors(cx, cy) {
                    let idx = ny * self.width + nx;
                    if !label[idx] {
                        label[idx] = true;
                        stack.push((nx, ny));
                    }
                }
            }
            comp.sort_by_key(|&(x, y)| (y, x));
            out.push(comp);
        }
        out
    }

    /// True if some 2x2 block is entirely foreground.
    pub fn has_square_block(&self) -> bool {
        self.foreground()
            .any(|(x, y)| self.get(x + 1, y) && self.get(x, y + 1) && self.get(x + 1, y + 1))
    }
}

/// Number of background-to-foreground transitions walking the 8-ring.
fn transitions(ring: &[bool; 8]) -> usize {
    (0..8).filter(|&i| !ring[i] && ring[(i + 1) % 8]).count()
}

/// Topological simplicity for 8-connected foreground: removing the pixel
/// neither splits its foreground neighbors nor merges background regions.
fn is_simple(ring: &[bool; 8]) -> bool {
    // 8-components of foreground neighbors
    let mut fg_components = 0;
    let mut seen = [false; 8];
    for start in 0..8 {
        if !ring[start] || seen[start] {
            continue;
        }
        fg_components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            // ring neighbors are 8-adjacent; edge pixels (even indices) also
            // touch the ring positions two steps away
            let mut adj = vec![(i + 1) % 8, (i + 7) % 8];
            if i % 2 == 0 {
                adj.push((i + 2) % 8);
                adj.push((i + 6) % 8);
            }
            for j in adj {
                if ring[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    // 4-components of background that touch an edge neighbor
    let mut bg_components = 0;
    let mut seen = [false; 8];
    for start in (0..8).step_by(2) {
        if ring[start] || seen[start] {
            continue;
        }
        bg_components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for j in [(i + 1) % 8, (i + 7) % 8] {
                if !ring[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    fg_components == 1 && bg_components == 1
}

fn zhang_suen_deletable(ring: &[bool; 8], second: bool) -> bool {
    let b = ring.iter().filter(|&&p| p).count();
    if !(2..=6).contains(&b) || transitions(ring) != 1 {
        return false;
    }
    let [n, _, e, _, s, _, w, _] = *ring;
    if second {
        !(n && e && w) && !(n && s && w)
    } else {
        !(n && e && s) && !(e && s && w)
    }
}

/// One parallel Zhang-Suen sub-iteration. A component whose every pixel is
/// marked (a 2x2 square, for instance) keeps its first pixel in raster order.
fn zhang_suen_pass(img: &mut BinaryRaster, second: bool) -> bool {
    let marked: Vec<bool> = img
        .pixels
        .iter()
        .enumerate()
        .map(|(i, &p)| p && zhang_suen_deletable(&img.ring(i % img.width, i / img.width), second))
        .collect();
    if !marked.iter().any(|&m| m) {
        return false;
    }
    let mut keep = Vec::new();
    for comp in img.components() {
        if comp.iter().all(|&(x, y)| marked[y * img.width + x]) {
            keep.push(comp[0]);
        }
    }
    for (i, m) in marked.into_iter().enumerate() {
        if m {
            img.pixels[i] = false;
        }
    }
    for (x, y) in keep {
        img.set(x, y, true);
    }
    true
}

/// Delete, in raster order, simple pixels that are not endpoints: corners
/// of pixel triangles and leftover 2x2 blocks, which would otherwise read
/// as junctions or hide an endpoint.
fn remove_redundant_pixels(img: &mut BinaryRaster) -> bool {
    let mut changed = false;
    for y in 0..img.height {
        for x in 0..img.width {
            if img.get(x, y) && img.neighbor_count(x, y) >= 2 && is_simple(&img.ring(x, y)) {
                img.set(x, y, false);
                changed = true;
            }
        }
    }
    changed
}

/// Thin every foreground component to a one-pixel-wide skeleton.
///
/// Two-subcycle Zhang-Suen thinning over 8-connectivity, followed by
/// deletion of redundant corner pixels so the result is 8-minimal. Topology is preserved: components never
/// split, merge or vanish.
pub fn thin(mask: &BinaryRaster) -> Result<BinaryRaster> {
    if mask.foreground_count() == 0 {
        return Err(SkeletonError::EmptyMask);
    }
    let mut img = mask.clone();
    loop {
        loop {
            let first = zhang_suen_pass(&mut img, false);
            let second = zhang_suen_pass(&mut img, true);
            if !first && !second {
                break;
            }
        }
        if !remove_redundant_pixels(&mut img) {
            break;
        }
    }
    Ok(img)
}

/// Closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2D>", into = "Vec<Point2D>")]
pub struct Polygon {
    vertices: Vec<Point2D>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2D>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(SkeletonError::DegenerateShape(vertices.len()));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i].distance(&vertices[(i + 1) % n]) <= 1e-9 {
                return Err(SkeletonError::InvalidPolygon(format!(
                    "vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2D] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        polygon_area(self.vertices.iter().copied())
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].distance(&self.vertices[(i + 1) % n]))
            .sum()
    }

    /// Vertices whose interior angle is below 180 degrees, assuming the
    /// polygon has positive signed area.
    pub fn convex_vertices(&self) -> Vec<Point2D> {
        let n = self.vertices.len();
        (0..n)
            .filter(|&i| {
                let prev = self.vertices[(i + n - 1) % n];
                let cur = self.vertices[i];
                let next = self.vertices[(i + 1) % n];
                crate::geometry::orient(prev, cur, next) > 0.0
            })
            .map(|i| self.vertices[i])
            .collect()
    }

    /// Euclidean distance from `p` to the closest point on the boundary,
    /// together with that closest point.
    /// First boundary point hit by the ray `origin + t·dir`, `t >= 0`.
    pub fn ray_hit(&self, origin: Point2D, dir: (f64, f64)) -> Option<Point2D> {
        let (dx, dy) = dir;
        if dx == 0.0 && dy == 0.0 {
            return None;
        }
        let n = self.vertices.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let (ex, ey) = (b.x() - a.x(), b.y() - a.y());
            let denom = dx * ey - dy * ex;
            if denom.abs() < 1e-12 {
                continue;
            }
            let (wx, wy) = (a.x() - origin.x(), a.y() - origin.y());
            let t = (wx * ey - wy * ex) / denom;
            let u = (wx * dy - wy * dx) / denom;
            if t >= 0.0 && (0.0..=1.0).contains(&u) && best.is_none_or(|bt| t < bt) {
                best = Some(t);
            }
        }
        best.and_then(|t| Point2D::new(origin.x() + t * dx, origin.y() + t * dy).ok())
    }

    pub fn nearest_boundary_point(&self, p: Point2D) -> (f64, Point2D) {
        let n = self.vertices.len();
        let mut best = (f64::INFINITY, self.vertices[0]);
        for i in 0..n {
            let q = closest_on_segment(p, self.vertices[i], self.vertices[(i + 1) % n]);
            let d = p.distance(&q);
            if d < best.0 {
                best = (d, q);
            }
        }
        best
    }
}

impl TryFrom<Vec<Point2D>> for Polygon {
    type Error = SkeletonError;

    fn try_from(v: Vec<Point2D>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point2D> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn closest_on_segment(p: Point2D, a: Point2D, b: Point2D) -> Point2D {
    let (dx, dy) = (b.x() - a.x(), b.y() - a.y());
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return a;
    }
    let t = (((p.x() - a.x()) * dx + (p.y() - a.y()) * dy) / len2).clamp(0.0, 1.0);
    Point2D::new(a.x() + t * dx, a.y() + t * dy).unwrap_or(a)
}

/// The largest 8-connected component (first in raster order on ties).
pub fn largest_component(mask: &BinaryRaster) -> Result<BinaryRaster> {
    let comps = mask.components();
    if comps.is_empty() {
        return Err(SkeletonError::EmptyMask);
    }
    if comps.len() > 1 {
        log::warn!(
            "mask has {} foreground components; keeping the largest",
            comps.len()
        );
    }
    let best = comps
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then(j.cmp(i)))
        .map(|(_, c)| c)
        .unwrap();
    let mut out = BinaryRaster::new(mask.width, mask.height)?;
    for &(x, y) in best {
        out.set(x, y, true);
    }
    Ok(out)
}

/// Outer boundary contour of the largest foreground component, traced with
/// Moore-neighbor tracing, stopping when the walk is about to repeat its
/// first move. One vertex per boundary pixel visit; the contour has positive signed area.
pub fn boundary_polygon(mask: &BinaryRaster) -> Result<Polygon> {
    let comp = largest_component(mask)?;
    let start = comp.foreground().next().ok_or(SkeletonError::EmptyMask)?;

    // the west neighbor of the first raster-order pixel is background
    let mut cur = start;
    let mut back = (start.0 as isize - 1, start.1 as isize);
    let mut first_move = None;
    let mut closed = false;
    let mut contour = vec![start];
    let limit = 4 * comp.foreground_count() + 8;

    for _ in 0..limit {
        let dir_back = ring_index(cur, back);
        let mut next = None;
        let mut prev_bg = back;
        for step in 1..=8 {
            let d = (dir_back + step) % 8;
            let (dx, dy) = RING[d];
            let q = (cur.0 as isize + dx, cur.1 as isize + dy);
            if comp.get_signed(q.0, q.1) {
                next = Some((q.0 as usize, q.1 as usize));
                break;
            }
            prev_bg = q;
        }
        let Some(n) = next else {
            closed = true; // isolated pixel
            break;
        };
        // done once the walk leaves the start pixel the way it first did
        if cur == start {
            match first_move {
                None => first_move = Some(n),
                Some(f) if f == n => {
                    contour.pop();
                    closed = true;
                    break;
                }
                Some(_) => {}
            }
        }
        cur = n;
        back = prev_bg;
        contour.push(cur);
    }
    if !closed {
        return Err(SkeletonError::InvalidPolygon(
            "boundary trace did not close".into(),
        ));
    }

    let mut vertices: Vec<Point2D> = contour
        .into_iter()
        .map(|(x, y)| Point2D::from_pixel(x, y))
        .collect();
    if vertices.len() < 3 {
        return Err(SkeletonError::DegenerateShape(vertices.len()));
    }
    if polygon_area(vertices.iter().copied()) < 0.0 {
        vertices.reverse();
    }
    Polygon::new(vertices)
}

fn ring_index(center: (usize, usize), q: (isize, isize)) -> usize {
    let d = (q.0 - center.0 as isize, q.1 - center.1 as isize);
    RING.iter()
        .position(|&r| r == d)
        .expect("backtrack pixel must be adjacent")
}

/// DCE relevance `K = beta * l1 * l2 / (l1 + l2)` of `cur` between its
/// neighbors, where `beta` is the absolute turn angle in radians.
pub fn relevance(prev: Point2D, cur: Point2D, next: Point2D) -> f64 {
    let (ax, ay) = (cur.x() - prev.x(), cur.y() - prev.y());
    let (bx, by) = (next.x() - cur.x(), next.y() - cur.y());
    let l1 = (ax * ax + ay * ay).sqrt();
    let l2 = (bx * bx + by * by).sqrt();
    if l1 + l2 == 0.0 {
        return 0.0;
    }
    let turn = (ax * by - ay * bx).abs().atan2(ax * bx + ay * by);
    turn * l1 * l2 / (l1 + l2)
}

/// Stopping rule for [`dce`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DceStop {
    /// Stop once this many vertices remain.
    VertexCount(usize),
    /// Stop once every remaining vertex has relevance at least this value
    /// (or only 3 vertices remain).
    Relevance(f64),
}

#[derive(PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Discrete Curve Evolution down to `target_vertices`.
///
/// The least relevant vertex is removed repeatedly, with the relevance of
/// its two neighbors recomputed on the partially simplified polygon. Ties go
/// to the vertex with the lower input index. Surviving vertices keep their
/// input order.
pub fn dce_simplify(poly: &Polygon, target_vertices: usize) -> Result<Polygon> {
    if target_vertices < 3 {
        return Err(SkeletonError::TargetTooSmall(target_vertices));
    }
    dce(poly, DceStop::VertexCount(target_vertices))
}

pub fn dce(poly: &Polygon, stop: DceStop) -> Result<Polygon> {
    let (target, threshold) = match stop {
        DceStop::VertexCount(t) if t < 3 => return Err(SkeletonError::TargetTooSmall(t)),
        DceStop::VertexCount(t) => (t, f64::INFINITY),
        DceStop::Relevance(r) => (3, r),
    };
    let v = poly.vertices();
    let n = v.len();
    if n <= target {
        return Ok(poly.clone());
    }

    let mut prev: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
    let mut next: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let mut alive = vec![true; n];
    let mut key: Vec<f64> = (0..n).map(|i| relevance(v[prev[i]], v[i], v[next[i]])).collect();
    let mut queue: BTreeSet<Key> = (0..n).map(|i| Key(key[i], i)).collect();
    let mut remaining = n;

    while remaining > target {
        let Key(k, i) = queue.pop_first().expect("queue holds every live vertex");
        if k >= threshold {
            break;
        }
        alive[i] = false;
        remaining -= 1;
        let (p, q) = (prev[i], next[i]);
        next[p] = q;
        prev[q] = p;
        for j in [p, q] {
            queue.remove(&Key(key[j], j));
            key[j] = relevance(v[prev[j]], v[j], v[next[j]]);
            queue.insert(Key(key[j], j));
        }
    }

    let kept: Vec<Point2D> = (0..n).filter(|&i| alive[i]).map(|i| v[i]).collect();
    Polygon::new(kept)
}

/// How many pixels back from the endpoint the branch direction is taken.
const TIP_DIRECTION_SPAN: usize = 6;

/// Trace from endpoint `e` along degree-2 pixels. Returns the branch pixels
/// (endpoint first, junction excluded) when the walk ends at a junction, or
/// `None` when it ends at another endpoint or dead end.
fn trace_branch(skel: &BinaryRaster, e: (usize, usize)) -> Option<Vec<(usize, usize)>> {
    let mut branch = vec![e];
    let mut cur = e;
    let mut visited: BTreeSet<(usize, usize)> = BTreeSet::from([e]);
    loop {
        let fresh: Vec<(usize, usize)> = skel
            .neighbors(cur.0, cur.1)
            .filter(|q| !visited.contains(q))
            .collect();
        let next = *fresh.first()?;
        let degree = skel.neighbor_count(next.0, next.1);
        if degree >= 3 {
            return Some(branch);
        }
        if degree <= 1 {
            return None;
        }
        visited.insert(next);
        branch.push(next);
        cur = next;
    }
}

/// Delete skeleton branches whose tip does not reach a convex vertex of
/// the DCE-simplified boundary.
///
/// A branch runs from an endpoint to the first junction pixel. It is kept
/// when, within `radius` of some convex vertex of `simplified`, lies either
/// the boundary point nearest its endpoint or the point where the branch,
/// continued straight past its endpoint, meets the boundary. The second
/// test matters for sharp tips, where thinning stops well short of the
/// corner. Branches are removed one at a time and the skeleton is
/// re-examined after each removal, so a component is never reduced past a
/// single unbranched path. The result is re-thinned to drop corner pixels
/// left behind at former junctions.
pub fn prune_skeleton(skel: &BinaryRaster, simplified: &Polygon, radius: f64) -> BinaryRaster {
    let convex = simplified.convex_vertices();
    let near_convex = |p: Point2D| convex.iter().any(|v| v.distance(&p) <= radius);
    let keeps = |branch: &[(usize, usize)]| {
        let (ex, ey) = branch[0];
        let tip = Point2D::from_pixel(ex, ey);
        if near_convex(simplified.nearest_boundary_point(tip).1) {
            return true;
        }
        let (bx, by) = branch[(branch.len() - 1).min(TIP_DIRECTION_SPAN)];
        let dir = (ex as f64 - bx as f64, ey as f64 - by as f64);
        simplified.ray_hit(tip, dir).is_some_and(near_convex)
    };

    let mut out = skel.clone();
    loop {
        let endpoints: Vec<(usize, usize)> = out
            .foreground()
            .filter(|&(x, y)| out.neighbor_count(x, y) == 1)
            .collect();
        let doomed = endpoints
            .into_iter()
            .find_map(|e| trace_branch(&out, e).filter(|b| !keeps(b)));
        let Some(branch) = doomed else {
            break;
        };
        for (x, y) in branch {
            out.set(x, y, false);
        }
        if out.foreground_count() > 0 {
            out = thin(&out).expect("non-empty raster");
        }
    }
    out
}

/// Endpoints and junction points of a thinned skeleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonPoints {
    pub endpoints: Vec<Point2D>,
    pub junctions: Vec<Point2D>,
}

impl SkeletonPoints {
    /// Endpoints followed by junctions.
    pub fn all(&self) -> Vec<Point2D> {
        self.endpoints.iter().chain(&self.junctions).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.endpoints.len() + self.junctions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `sum / count` rounded to the nearest integer, except that exact halves
/// are kept as halves so the result commutes with reflections.
fn round_centroid(sum: usize, count: usize) -> f64 {
    let twice = 2 * sum;
    let q = twice / count;
    let r = twice % count;
    // twice/count = q + r/count; the centroid is (q + r/count) / 2
    let whole = q / 2;
    let odd = q % 2 == 1;
    match (odd, r == 0) {
        (false, true) => whole as f64,
        (true, true) => whole as f64 + 0.5,
        (false, false) => whole as f64,
        (true, false) => whole as f64 + 1.0,
    }
}

/// Classify skeleton pixels by 8-neighbor count: exactly one neighbor is an
/// endpoint, three or more is a junction candidate. 8-connected clusters of
/// candidates collapse to one junction at their centroid, rounded to the
/// nearest pixel center (a coordinate exactly halfway between two centers
/// stays at the half).
pub fn detect_points(skel: &BinaryRaster) -> Result<SkeletonPoints> {
    if skel.foreground_count() == 0 {
        return Err(SkeletonError::EmptyMask);
    }
    let mut endpoints = Vec::new();
    let mut candidate = BinaryRaster::new(skel.width, skel.height)?;
    for (x, y) in skel.foreground() {
        match skel.neighbor_count(x, y) {
            1 => endpoints.push(Point2D::from_pixel(x, y)),
            c if c >= 3 => candidate.set(x, y, true),
            _ => {}
        }
    }
    let junctions = candidate
        .components()
        .into_iter()
        .map(|cluster| {
            let n = cluster.len();
            let sx: usize = cluster.iter().map(|p| p.0).sum();
            let sy: usize = cluster.iter().map(|p| p.1).sum();
            Point2D::new(round_centroid(sx, n), round_centroid(sy, n)).expect("finite centroid")
        })
        .collect();
    Ok(SkeletonPoints { endpoints, junctions })
}
