//! Alpha-shape contours over robot formations.
//!
//! Alpha is a reciprocal radius: a Delaunay triangle belongs to the shape
//! when its circumradius `R` satisfies `R <= 1 / alpha`. At `alpha = 0`
//! every triangle is kept and the contour is the convex hull; increasing
//! alpha drops large triangles and carves the contour inwards until the
//! shape stops being a single polygon that contains every robot.
//!
//! The shape itself is the union of the included triangles. Holes in that
//! union are filled (only the outer boundary is returned), while a union
//! that splits into several edge-connected pieces, touches itself at a
//! vertex, or leaves a point uncovered is reported as
//! [`GeometryError::Disconnected`].

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

/// Offset applied to exactly coincident robot positions on construction.
pub const COINCIDENT_JITTER: f64 = 1e-6;

/// A position in the normalized workspace. Formation robots live in the
/// unit square; `y` grows downwards like image rows.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn distance(self, other: Point2) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Orders by `x`, then by `y`.
    pub fn lex_cmp(&self, other: &Point2) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }

    /// Clamps both coordinates into the unit square.
    pub fn clamp_unit(self) -> Point2 {
        Point2::new(self.x.clamp(0.0, 1.0), self.y.clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate input: fewer than three distinct points or all points collinear")]
    DegenerateInput,
    #[error("alpha shape is not a single polygon containing every point")]
    Disconnected,
    #[error("alpha must be finite and non-negative")]
    InvalidAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FormationError {
    #[error("a formation needs at least 3 robots, got {0}")]
    TooFewRobots(usize),
    #[error("alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("position of robot {0} is not finite")]
    NonFinitePosition(usize),
}

/// Robot positions plus the alpha used to draw their contour.
#[derive(Clone, Debug, PartialEq)]
pub struct Formation {
    positions: Vec<Point2>,
    alpha: f64,
}

impl Formation {
    /// Builds a formation, separating exactly coincident positions by
    /// [`COINCIDENT_JITTER`] along `x` (towards the workspace center).
    pub fn new(mut positions: Vec<Point2>, alpha: f64) -> Result<Self, FormationError> {
        if positions.len() < 3 {
            return Err(FormationError::TooFewRobots(positions.len()));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(FormationError::InvalidAlpha(alpha));
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(FormationError::NonFinitePosition(i));
        }
        separate_coincident(&mut positions);
        Ok(Formation { positions, alpha })
    }

    pub fn positions(&self) -> &[Point2] {
        &self.positions
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Same positions, different alpha.
    pub fn with_alpha(&self, alpha: f64) -> Result<Formation, FormationError> {
        Formation::new(self.positions.clone(), alpha)
    }

    pub fn into_positions(self) -> Vec<Point2> {
        self.positions
    }

    /// Contour of this formation at its own alpha.
    pub fn contour(&self) -> Result<ContourPolygon, GeometryError> {
        alpha_shape(&self.positions, self.alpha)
    }
}

fn separate_coincident(points: &mut [Point2]) {
    for i in 1..points.len() {
        let (seen, rest) = points.split_at_mut(i);
        let p = &mut rest[0];
        while seen.iter().any(|q| q == p) {
            p.x += if p.x > 0.5 { -COINCIDENT_JITTER } else { COINCIDENT_JITTER };
        }
    }
}

/// A closed, simple, counter-clockwise polygon (in a y-up reading; with
/// image rows growing downwards it appears clockwise on screen).
///
/// Vertices start at the lexicographically smallest vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourPolygon {
    vertices: Vec<Point2>,
    is_convex_hull: bool,
}

impl ContourPolygon {
    /// Wraps an explicit outline. The orientation is normalized and the
    /// vertex list rotated to start at its smallest vertex.
    pub fn from_vertices(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 || vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::DegenerateInput);
        }
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(GeometryError::DegenerateInput);
        }
        let mut vertices = vertices;
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self::anchored(vertices, false))
    }

    fn anchored(mut vertices: Vec<Point2>, is_convex_hull: bool) -> Self {
        let start = vertices
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.lex_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        vertices.rotate_left(start);
        ContourPolygon {
            vertices,
            is_convex_hull,
        }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// True when every Delaunay triangle was kept, i.e. the contour is the
    /// convex hull of the source points.
    pub fn is_convex_hull(&self) -> bool {
        self.is_convex_hull
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// Positive for the normalized orientation.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `p` to the nearest boundary edge.
    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(Point2::new(a.x + t * dx, a.y + t * dy))
}

fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice / 2.0
}

#[inline]
fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Delaunay triangles with counter-clockwise vertex order and the
/// reciprocal of each circumradius.
struct Triangulation<'a> {
    points: &'a [Point2],
    triangles: Vec<[usize; 3]>,
    inv_radius: Vec<f64>,
    /// Whether each input point is a vertex of at least one triangle.
    is_vertex: Vec<bool>,
}

impl<'a> Triangulation<'a> {
    fn new(points: &'a [Point2]) -> Result<Self, GeometryError> {
        if points.len() < 3 || points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::DegenerateInput);
        }
        let input: Vec<delaunator::Point> = points
            .iter()
            .map(|p| delaunator::Point { x: p.x, y: p.y })
            .collect();
        let raw = delaunator::triangulate(&input);
        if raw.triangles.is_empty() {
            return Err(GeometryError::DegenerateInput);
        }

        let mut triangles = Vec::with_capacity(raw.triangles.len() / 3);
        let mut inv_radius = Vec::with_capacity(raw.triangles.len() / 3);
        let mut is_vertex = alloc::vec![false; points.len()];
        for t in raw.triangles.chunks_exact(3) {
            let (mut a, mut b, c) = (t[0], t[1], t[2]);
            let mut cross = orient(points[a], points[b], points[c]);
            if cross < 0.0 {
                core::mem::swap(&mut a, &mut b);
                cross = -cross;
            }
            let sides = points[a].distance(points[b])
                * points[b].distance(points[c])
                * points[c].distance(points[a]);
            // 1/R = 4 * area / (|ab| |bc| |ca|), with area = cross / 2.
            let inv = if sides > 0.0 { 2.0 * cross / sides } else { 0.0 };
            triangles.push([a, b, c]);
            inv_radius.push(inv);
            for v in [a, b, c] {
                is_vertex[v] = true;
            }
        }
        Ok(Triangulation {
            points,
            triangles,
            inv_radius,
            is_vertex,
        })
    }

    fn included(&self, alpha: f64) -> Vec<bool> {
        self.inv_radius.iter().map(|&inv| alpha <= inv).collect()
    }

    /// Boundary of the union of the included triangles, if it forms a
    /// single polygon that covers every input point.
    fn region(&self, included: &[bool]) -> Result<ContourPolygon, GeometryError> {
        let kept: Vec<usize> = (0..self.triangles.len()).filter(|&t| included[t]).collect();
        if kept.is_empty() {
            return Err(GeometryError::Disconnected);
        }
        if !self.covers_all_points(included) {
            return Err(GeometryError::Disconnected);
        }

        // Undirected edge -> triangles using it.
        let mut edge_use: BTreeMap<(usize, usize), (u32, usize)> = BTreeMap::new();
        for &t in &kept {
            let [a, b, c] = self.triangles[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                let key = (u.min(v), u.max(v));
                edge_use
                    .entry(key)
                    .and_modify(|e| e.0 += 1)
                    .or_insert((1, t));
            }
        }

        // Edge-connectivity of the kept triangles.
        let mut dsu = DisjointSet::new(self.triangles.len());
        for &t in &kept {
            let [a, b, c] = self.triangles[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                let (count, first) = edge_use[&(u.min(v), u.max(v))];
                if count > 1 {
                    dsu.union(first, t);
                }
            }
        }
        let root = dsu.find(kept[0]);
        if kept.iter().any(|&t| dsu.find(t) != root) {
            return Err(GeometryError::Disconnected);
        }

        // Directed boundary edges keep the interior on their left.
        let mut next: Vec<Option<usize>> = alloc::vec![None; self.points.len()];
        let mut boundary_edges = 0usize;
        for &t in &kept {
            let [a, b, c] = self.triangles[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if edge_use[&(u.min(v), u.max(v))].0 == 1 {
                    if next[u].is_some() {
                        // Two boundary edges leave the same vertex: the
                        // region pinches there.
                        return Err(GeometryError::Disconnected);
                    }
                    next[u] = Some(v);
                    boundary_edges += 1;
                }
            }
        }

        let mut visited = alloc::vec![false; self.points.len()];
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut walked = 0usize;
        for start in 0..self.points.len() {
            if next[start].is_none() || visited[start] {
                continue;
            }
            let mut ring = Vec::new();
            let mut v = start;
            loop {
                if visited[v] {
                    return Err(GeometryError::Disconnected);
                }
                visited[v] = true;
                ring.push(v);
                match next[v] {
                    Some(w) if w == start => break,
                    Some(w) => v = w,
                    None => return Err(GeometryError::Disconnected),
                }
            }
            walked += ring.len();
            let pts: Vec<Point2> = ring.iter().map(|&i| self.points[i]).collect();
            let area = signed_area(&pts);
            if best.as_ref().map_or(true, |(a, _)| area > *a) {
                best = Some((area, ring));
            }
        }
        debug_assert_eq!(walked, boundary_edges);

        match best {
            Some((area, ring)) if area > 0.0 && ring.len() >= 3 => {
                let vertices = ring.into_iter().map(|i| self.points[i]).collect();
                let hull = kept.len() == self.triangles.len();
                Ok(ContourPolygon::anchored(vertices, hull))
            }
            _ => Err(GeometryError::Disconnected),
        }
    }

    fn covers_all_points(&self, included: &[bool]) -> bool {
        let mut covered = alloc::vec![false; self.points.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            if included[t] {
                for &v in tri {
                    covered[v] = true;
                }
            }
        }
        // Points the triangulation skipped (duplicates) must lie in a kept
        // triangle.
        (0..self.points.len()).all(|i| {
            covered[i]
                || (!self.is_vertex[i]
                    && self.triangles.iter().enumerate().any(|(t, tri)| {
                        included[t] && in_closed_triangle(self.points[i], tri.map(|v| self.points[v]))
                    }))
        })
    }
}

fn in_closed_triangle(p: Point2, [a, b, c]: [Point2; 3]) -> bool {
    const EPS: f64 = 1e-12;
    orient(a, b, p) >= -EPS && orient(b, c, p) >= -EPS && orient(c, a, p) >= -EPS
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Contour of `points` at `alpha`.
///
/// At `alpha = 0` this is the convex hull. For `alpha > 0` a Delaunay
/// triangle is kept iff its circumradius is at most `1 / alpha`.
pub fn alpha_shape(points: &[Point2], alpha: f64) -> Result<ContourPolygon, GeometryError> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(GeometryError::InvalidAlpha);
    }
    let tri = Triangulation::new(points)?;
    tri.region(&tri.included(alpha))
}

/// Largest alpha, among zero and the reciprocal Delaunay circumradii, whose
/// shape is still a single polygon containing every point.
pub fn alpha_limit(points: &[Point2]) -> Result<f64, GeometryError> {
    let tri = Triangulation::new(points)?;
    let mut candidates: Vec<f64> = tri.inv_radius.iter().copied().filter(|&v| v > 0.0).collect();
    candidates.sort_by(|a, b| b.total_cmp(a));
    candidates.dedup();
    for alpha in candidates {
        if tri.region(&tri.included(alpha)).is_ok() {
            return Ok(alpha);
        }
    }
    Ok(0.0)
}

/// `m` points at equal arc-length spacing along the polygon boundary,
/// starting at the polygon's lexicographically smallest vertex and
/// following its vertex order.
pub fn resample_contour(polygon: &ContourPolygon, m: usize) -> Vec<Point2> {
    let v = polygon.vertices();
    let n = v.len();
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    for i in 0..n {
        let len = v[i].distance(v[(i + 1) % n]);
        cumulative.push(cumulative[i] + len);
    }
    let perimeter = cumulative[n];
    let spacing = perimeter / m as f64;

    let mut out = Vec::with_capacity(m);
    let mut edge = 0;
    for k in 0..m {
        let s = k as f64 * spacing;
        while edge + 1 < n && cumulative[edge + 1] <= s {
            edge += 1;
        }
        let len = cumulative[edge + 1] - cumulative[edge];
        let t = if len > 0.0 { (s - cumulative[edge]) / len } else { 0.0 };
        let (a, b) = (v[edge], v[(edge + 1) % n]);
        out.push(Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    fn same_set(a: &[Point2], b: &[Point2]) -> bool {
        a.len() == b.len() && a.iter().all(|p| b.contains(p))
    }

    #[test]
    fn triangle_at_zero_alpha_is_itself() {
        let pts = vec![
            Point2::new(0.1, 0.2),
            Point2::new(0.9, 0.3),
            Point2::new(0.4, 0.8),
        ];
        let poly = alpha_shape(&pts, 0.0).unwrap();
        assert!(same_set(poly.vertices(), &pts));
        assert!(poly.is_convex_hull());
        assert!(poly.area() > 0.0);
    }

    #[test]
    fn unit_square_at_zero_alpha() {
        let poly = alpha_shape(&square(), 0.0).unwrap();
        assert_eq!(poly.vertices()[0], Point2::new(0.0, 0.0));
        assert!(same_set(poly.vertices(), &square()));
        assert!((poly.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<Point2> = (0..5).map(|i| Point2::new(i as f64 * 0.1, 0.5)).collect();
        assert_eq!(alpha_shape(&pts, 0.0), Err(GeometryError::DegenerateInput));
        assert_eq!(alpha_limit(&pts), Err(GeometryError::DegenerateInput));
        assert_eq!(
            alpha_shape(&pts[..2], 0.0),
            Err(GeometryError::DegenerateInput)
        );
    }

    #[test]
    fn negative_alpha_rejected() {
        assert_eq!(alpha_shape(&square(), -1.0), Err(GeometryError::InvalidAlpha));
    }

    #[test]
    fn equilateral_limit_is_sqrt3() {
        let h = libm::sqrt(3.0) / 2.0;
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, h),
        ];
        let limit = alpha_limit(&pts).unwrap();
        assert!((limit - libm::sqrt(3.0)).abs() < 1e-12, "{limit}");
        // Inclusion is non-strict: the limit itself still yields the triangle.
        assert!(alpha_shape(&pts, limit).is_ok());
        assert_eq!(
            alpha_shape(&pts, limit * (1.0 + 1e-9)),
            Err(GeometryError::Disconnected)
        );
    }

    #[test]
    fn points_on_circle_limit_is_inverse_radius() {
        let r = 0.35;
        let pts: Vec<Point2> = (0..24)
            .map(|k| {
                let a = k as f64 * core::f64::consts::TAU / 24.0;
                Point2::new(0.5 + r * libm::cos(a), 0.5 + r * libm::sin(a))
            })
            .collect();
        let limit = alpha_limit(&pts).unwrap();
        assert!((limit - 1.0 / r).abs() < 1e-9 / r, "{limit}");
    }

    #[test]
    fn hole_is_filled_and_outer_ring_returned() {
        // Outer square ring around an empty center. With alpha between the
        // ring triangles and the center triangles the union has a hole.
        let mut pts = Vec::new();
        for k in 0..8 {
            let a = k as f64 * core::f64::consts::TAU / 8.0;
            pts.push(Point2::new(0.5 + 0.4 * libm::cos(a), 0.5 + 0.4 * libm::sin(a)));
            pts.push(Point2::new(
                0.5 + 0.3 * libm::cos(a + 0.39),
                0.5 + 0.3 * libm::sin(a + 0.39),
            ));
        }
        let alpha = 1.0 / 0.2;
        if let Ok(poly) = alpha_shape(&pts, alpha) {
            // Only outer-ring vertices can be on the returned boundary.
            for v in poly.vertices() {
                let d = libm::hypot(v.x - 0.5, v.y - 0.5);
                assert!((d - 0.4).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_far_clusters_disconnect() {
        let pts = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.1, 0.0),
            Point2::new(0.05, 0.1),
            Point2::new(0.9, 0.9),
            Point2::new(1.0, 0.9),
            Point2::new(0.95, 1.0),
        ];
        assert!(alpha_shape(&pts, 0.0).is_ok());
        assert_eq!(alpha_shape(&pts, 5.0), Err(GeometryError::Disconnected));
        let limit = alpha_limit(&pts).unwrap();
        assert!(alpha_shape(&pts, limit).is_ok());
    }

    #[test]
    fn duplicates_are_covered() {
        let mut pts = square();
        pts.push(Point2::new(1.0, 1.0));
        let poly = alpha_shape(&pts, 0.0).unwrap();
        assert_eq!(poly.vertices().len(), 4);
    }

    #[test]
    fn formation_separates_coincident_points() {
        let pts = vec![
            Point2::new(0.2, 0.2),
            Point2::new(0.2, 0.2),
            Point2::new(0.8, 0.3),
            Point2::new(0.2, 0.2),
        ];
        let f = Formation::new(pts, 1.0).unwrap();
        let p = f.positions();
        for i in 0..p.len() {
            for j in 0..i {
                assert_ne!(p[i], p[j]);
            }
        }
        assert_eq!(p[1], Point2::new(0.2 + COINCIDENT_JITTER, 0.2));
    }

    #[test]
    fn formation_validation() {
        assert_eq!(
            Formation::new(vec![Point2::default(); 2], 0.0),
            Err(FormationError::TooFewRobots(2))
        );
        assert!(matches!(
            Formation::new(square(), -0.5),
            Err(FormationError::InvalidAlpha(_))
        ));
        let mut pts = square();
        pts[2].y = f64::NAN;
        assert_eq!(
            Formation::new(pts, 0.0),
            Err(FormationError::NonFinitePosition(2))
        );
    }

    #[test]
    fn resample_square_corners_and_midpoints() {
        let poly = alpha_shape(&square(), 0.0).unwrap();
        let four = resample_contour(&poly, 4);
        assert!(same_set(&four, &square()));
        assert_eq!(four[0], Point2::new(0.0, 0.0));

        let eight = resample_contour(&poly, 8);
        let mut expected = square();
        expected.extend([
            Point2::new(0.5, 0.0),
            Point2::new(1.0, 0.5),
            Point2::new(0.5, 1.0),
            Point2::new(0.0, 0.5),
        ]);
        assert!(same_set(&eight, &expected));
    }

    #[test]
    fn from_vertices_normalizes_orientation() {
        let mut cw = square();
        cw.reverse();
        let poly = ContourPolygon::from_vertices(cw).unwrap();
        assert!(poly.area() > 0.0);
        assert_eq!(poly.vertices()[0], Point2::new(0.0, 0.0));
        assert!(poly.contains(Point2::new(0.5, 0.5)));
        assert!(!poly.contains(Point2::new(1.5, 0.5)));
        assert!((poly.distance_to_boundary(Point2::new(0.5, 0.4)) - 0.4).abs() < 1e-15);
    }
}
