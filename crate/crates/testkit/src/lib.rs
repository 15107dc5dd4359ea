//! Brute-force reference implementations used by the test suites.
//!
//! Nothing here depends on the library under test: points are plain
//! arrays and every routine is the slowest obvious algorithm.

pub type P2 = [f64; 2];
pub type P3 = [f64; 3];

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(o: P2, a: P2, b: P2) -> f64 {
    let (u, v) = (sub(a, o), sub(b, o));
    u[0] * v[1] - u[1] * v[0]
}

fn dist(a: P2, b: P2) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

/// Andrew's monotone chain. Strictly convex vertices only, counter-clockwise.
pub fn convex_hull(points: &[P2]) -> Vec<P2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Twice the signed area (positive for counter-clockwise).
pub fn signed_area2(poly: &[P2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum()
}

/// Circumradius via `abc / 4K`.
pub fn circumradius(a: P2, b: P2, c: P2) -> f64 {
    let k = cross(a, b, c).abs() / 2.0;
    if k == 0.0 {
        return f64::INFINITY;
    }
    dist(a, b) * dist(b, c) * dist(c, a) / (4.0 * k)
}

/// Whether `d` lies strictly inside the circumcircle of `a, b, c`
/// (determinant test, orientation-corrected).
fn in_circumcircle(a: P2, b: P2, c: P2, d: P2) -> bool {
    let rows = [a, b, c].map(|p| {
        let (x, y) = (p[0] - d[0], p[1] - d[1]);
        [x, y, x * x + y * y]
    });
    let det = rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
        - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
        + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]);
    let orient = cross(a, b, c);
    if orient > 0.0 {
        det > 0.0
    } else {
        det < 0.0
    }
}

/// Every non-degenerate triple whose circumcircle holds no other point.
/// Only unique when no four points are cocircular.
pub fn delaunay_triangles(points: &[P2]) -> Vec<[usize; 3]> {
    let n = points.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (points[i], points[j], points[k]);
                if cross(a, b, c) == 0.0 {
                    continue;
                }
                let empty = (0..n)
                    .filter(|&l| l != i && l != j && l != k)
                    .all(|l| !in_circumcircle(a, b, c, points[l]));
                if empty {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

fn shares_edge(a: &[usize; 3], b: &[usize; 3]) -> bool {
    a.iter().filter(|v| b.contains(v)).count() == 2
}

fn components(nodes: &[usize], linked: impl Fn(usize, usize) -> bool) -> usize {
    let mut seen = vec![false; nodes.len()];
    let mut count = 0;
    for start in 0..nodes.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..nodes.len() {
                if !seen[v] && linked(nodes[u], nodes[v]) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

/// Whether the union of `kept` (indices into `tris`) forms one region
/// bounded by a single simple outer curve that touches every point:
/// edge-connected, every point a corner of some kept triangle, and no
/// vertex where the kept triangles meet only at that vertex.
pub fn is_valid_region(n_points: usize, tris: &[[usize; 3]], kept: &[usize]) -> bool {
    if kept.is_empty() {
        return false;
    }
    if components(kept, |a, b| shares_edge(&tris[a], &tris[b])) != 1 {
        return false;
    }
    for v in 0..n_points {
        let fan: Vec<usize> = kept.iter().copied().filter(|&t| tris[t].contains(&v)).collect();
        if fan.is_empty() {
            return false;
        }
        let linked = |a: usize, b: usize| {
            let (ta, tb) = (&tris[a], &tris[b]);
            ta.iter().any(|&w| w != v && tb.contains(&w))
        };
        if components(&fan, linked) != 1 {
            return false;
        }
    }
    true
}

/// Largest `1/R` over the Delaunay triangles (or zero) whose inclusion set
/// `{t : 1/R_t >= candidate}` is a valid region; plain descending scan.
pub fn alpha_limit_scan(points: &[P2]) -> f64 {
    let tris = delaunay_triangles(points);
    let inv: Vec<f64> = tris
        .iter()
        .map(|t| 1.0 / circumradius(points[t[0]], points[t[1]], points[t[2]]))
        .collect();
    let mut candidates: Vec<f64> = inv.iter().copied().filter(|&c| c > 0.0).collect();
    candidates.sort_by(|a, b| b.total_cmp(a));
    candidates.dedup();
    for c in candidates {
        let kept: Vec<usize> = (0..tris.len()).filter(|&t| inv[t] >= c).collect();
        if is_valid_region(points.len(), &tris, &kept) {
            return c;
        }
    }
    0.0
}

/// Outer boundary of the kept triangles, as a vertex loop (any start,
/// counter-clockwise). Assumes a valid region without holes.
pub fn region_boundary(points: &[P2], tris: &[[usize; 3]], kept: &[usize]) -> Vec<usize> {
    let mut directed: Vec<(usize, usize)> = Vec::new();
    for &t in kept {
        let mut v = tris[t];
        if cross(points[v[0]], points[v[1]], points[v[2]]) < 0.0 {
            v.swap(1, 2);
        }
        for e in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
            directed.push(e);
        }
    }
    let boundary: Vec<(usize, usize)> = directed
        .iter()
        .copied()
        .filter(|&(a, b)| !directed.contains(&(b, a)))
        .collect();
    let mut loop_ = vec![boundary[0].0];
    let mut cur = boundary[0].1;
    while cur != loop_[0] {
        loop_.push(cur);
        cur = boundary.iter().find(|e| e.0 == cur).expect("closed boundary").1;
    }
    loop_
}

/// Arc-length coordinate of `p` along the closed polygon measured from
/// vertex 0, found by locating the nearest edge.
pub fn arc_position(poly: &[P2], p: P2) -> f64 {
    let n = poly.len();
    let mut best = (f64::INFINITY, 0.0);
    let mut walked = 0.0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let len = dist(a, b);
        let d = sub(b, a);
        let t = if len == 0.0 {
            0.0
        } else {
            (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (len * len)).clamp(0.0, 1.0)
        };
        let q = [a[0] + d[0] * t, a[1] + d[1] * t];
        let off = dist(p, q);
        if off < best.0 {
            best = (off, walked + t * len);
        }
        walked += len;
    }
    best.1
}

pub fn perimeter(poly: &[P2]) -> f64 {
    (0..poly.len()).map(|i| dist(poly[i], poly[(i + 1) % poly.len()])).sum()
}

/// Arc lengths of `m` points spaced evenly along the perimeter by numeric
/// integration: the boundary is walked in `steps` equal parameter steps
/// per edge and the running length is interpolated.
pub fn integrated_arc_targets(poly: &[P2], m: usize, steps: usize) -> Vec<P2> {
    let mut samples: Vec<(f64, P2)> = vec![(0.0, poly[0])];
    let mut walked = 0.0;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let mut prev = a;
        for s in 1..=steps {
            let t = s as f64 / steps as f64;
            let q = [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
            walked += dist(prev, q);
            samples.push((walked, q));
            prev = q;
        }
    }
    let total = walked;
    (0..m)
        .map(|k| {
            let target = total * k as f64 / m as f64;
            let idx = samples.partition_point(|s| s.0 < target).max(1);
            let (l0, p0) = samples[idx - 1];
            let (l1, p1) = samples[idx];
            let t = if l1 > l0 { (target - l0) / (l1 - l0) } else { 0.0 };
            [p0[0] + (p1[0] - p0[0]) * t, p0[1] + (p1[1] - p0[1]) * t]
        })
        .collect()
}

/// Pixel `(x, y)` of a `size`-square canvas belongs to the triangle when
/// its center is on the inner side of all three edges (boundary included,
/// with a 1e-9 pixel tolerance).
pub fn triangle_pixel_count(tri: [P2; 3], size: usize) -> usize {
    let orient = cross(tri[0], tri[1], tri[2]).signum();
    let mut count = 0;
    for y in 0..size {
        for x in 0..size {
            let c = [x as f64 + 0.5, y as f64 + 0.5];
            let inside = (0..3).all(|i| {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                orient * cross(a, b, c) >= -1e-9 * dist(a, b)
            });
            count += inside as usize;
        }
    }
    count
}

/// Intersection over union of two boolean images.
pub fn iou(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Minimum total cost over all permutations (Heap's algorithm).
pub fn brute_force_assignment(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    let mut perm: Vec<usize> = (0..n).collect();
    let total = |p: &[usize]| p.iter().enumerate().map(|(r, &c)| cost[r * n + c]).sum::<f64>();
    let mut best = (total(&perm), perm.clone());
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let t = total(&perm);
            if t < best.0 {
                best = (t, perm.clone());
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

fn d3(a: P3, b: P3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Smallest pairwise center distance at the recorded frames only.
pub fn min_frame_separation(frames: &[Vec<P3>]) -> f64 {
    let mut min = f64::INFINITY;
    for frame in frames {
        for i in 0..frame.len() {
            for j in i + 1..frame.len() {
                min = min.min(d3(frame[i], frame[j]));
            }
        }
    }
    min
}

/// Smallest pairwise center distance over a frame sequence, including the
/// closest approach between frames under straight-line motion.
pub fn min_separation(frames: &[Vec<P3>]) -> f64 {
    let mut min = f64::INFINITY;
    for (k, frame) in frames.iter().enumerate() {
        for i in 0..frame.len() {
            for j in i + 1..frame.len() {
                min = min.min(d3(frame[i], frame[j]));
                if let Some(next) = frames.get(k + 1) {
                    // Relative motion r(s) = r0 + s * dr on s in [0, 1].
                    let r0: Vec<f64> = (0..3).map(|c| frame[j][c] - frame[i][c]).collect();
                    let r1: Vec<f64> = (0..3).map(|c| next[j][c] - next[i][c]).collect();
                    let dr: Vec<f64> = (0..3).map(|c| r1[c] - r0[c]).collect();
                    let dd: f64 = dr.iter().map(|v| v * v).sum();
                    if dd > 0.0 {
                        let s = (-(0..3).map(|c| r0[c] * dr[c]).sum::<f64>() / dd).clamp(0.0, 1.0);
                        let d: f64 = (0..3).map(|c| (r0[c] + s * dr[c]).powi(2)).sum::<f64>().sqrt();
                        min = min.min(d);
                    }
                }
            }
        }
    }
    min
}
