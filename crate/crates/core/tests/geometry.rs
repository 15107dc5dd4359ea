use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarmshape_core::geometry::{alpha_limit, alpha_shape, resample_contour, ContourPolygon, GeometryError};
use swarmshape_core::Point2;
use swarmshape_testkit as oracle;

fn random_points(seed: u64, n: usize) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Point2::new(rng.random(), rng.random())).collect()
}

fn raw(points: &[Point2]) -> Vec<oracle::P2> {
    points.iter().map(|p| [p.x, p.y]).collect()
}

fn sorted(mut v: Vec<oracle::P2>) -> Vec<oracle::P2> {
    v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    v
}

/// Corners of a plus sign with arms 1 wide and 2 long, nudged off the
/// cocircular configurations so the Delaunay triangulation is unique.
fn plus_sign() -> Vec<Point2> {
    let corners = [
        (2.0, 0.0),
        (3.0, 0.0),
        (3.0, 2.0),
        (5.0, 2.0),
        (5.0, 3.0),
        (3.0, 3.0),
        (3.0, 5.0),
        (2.0, 5.0),
        (2.0, 3.0),
        (0.0, 3.0),
        (0.0, 2.0),
        (2.0, 2.0),
    ];
    corners
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let nudge = 1e-3 * ((i * 7 % 5) as f64 - 2.0);
            let nudge_y = 1e-3 * ((i * 3 % 7) as f64 - 3.0);
            Point2::new(0.1 + 0.16 * x + nudge, 0.1 + 0.16 * y + nudge_y)
        })
        .collect()
}

#[test]
fn plus_sign_below_limit_matches_triangle_inclusion_oracle() {
    let pts = plus_sign();
    let limit = alpha_limit(&pts).unwrap();
    assert!(limit > 0.0);
    let alpha = limit * (1.0 - 1e-9);
    let shape = alpha_shape(&pts, alpha).unwrap();
    let hull = alpha_shape(&pts, 0.0).unwrap();
    assert!(shape.area() < hull.area() - 1e-6, "plus outline must be concave");
    assert!(!shape.is_convex_hull());

    let p = raw(&pts);
    let tris = oracle::delaunay_triangles(&p);
    let kept: Vec<usize> = (0..tris.len())
        .filter(|&t| oracle::circumradius(p[tris[t][0]], p[tris[t][1]], p[tris[t][2]]) <= 1.0 / alpha)
        .collect();
    assert!(oracle::is_valid_region(p.len(), &tris, &kept));
    let expected = oracle::region_boundary(&p, &tris, &kept);
    let expected: Vec<oracle::P2> = expected.iter().map(|&i| p[i]).collect();
    assert_eq!(sorted(raw(shape.vertices())), sorted(expected.clone()));
    // Same cyclic order.
    let start = expected.iter().position(|q| *q == [shape.vertices()[0].x, shape.vertices()[0].y]).unwrap();
    let mut rotated = expected.clone();
    rotated.rotate_left(start);
    assert_eq!(raw(shape.vertices()), rotated);
}

#[test]
fn plus_sign_limit_matches_scan() {
    let pts = plus_sign();
    let ours = alpha_limit(&pts).unwrap();
    let theirs = oracle::alpha_limit_scan(&raw(&pts));
    assert!((ours - theirs).abs() <= 1e-12 * theirs, "{ours} vs {theirs}");
}

#[test]
fn irregular_hexagon_resampling_matches_integrated_arc_length() {
    let hexagon = vec![
        Point2::new(0.1, 0.3),
        Point2::new(0.45, 0.08),
        Point2::new(0.9, 0.2),
        Point2::new(0.85, 0.7),
        Point2::new(0.5, 0.95),
        Point2::new(0.15, 0.75),
    ];
    let poly = ContourPolygon::from_vertices(hexagon).unwrap();
    let got = resample_contour(&poly, 30);
    let want = oracle::integrated_arc_targets(&raw(poly.vertices()), 30, 1000);
    for (g, w) in got.iter().zip(&want) {
        assert!((g.x - w[0]).abs() < 1e-9 && (g.y - w[1]).abs() < 1e-9, "{g:?} vs {w:?}");
    }
}

#[test]
fn collinear_points_are_degenerate() {
    let pts: Vec<Point2> = (0..10).map(|i| Point2::new(i as f64 * 0.1, 0.5)).collect();
    assert_eq!(alpha_shape(&pts, 0.0), Err(GeometryError::DegenerateInput));
    assert_eq!(alpha_limit(&pts), Err(GeometryError::DegenerateInput));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha_zero_is_convex_hull(seed in any::<u64>(), n in 3usize..40) {
        let pts = random_points(seed, n);
        let shape = alpha_shape(&pts, 0.0).unwrap();
        prop_assert!(shape.is_convex_hull());
        prop_assert_eq!(sorted(raw(shape.vertices())), sorted(oracle::convex_hull(&raw(&pts))));
        prop_assert!(oracle::signed_area2(&raw(shape.vertices())) > 0.0);
    }

    #[test]
    fn limit_is_valid_and_maximal(seed in any::<u64>(), n in 3usize..30) {
        let pts = random_points(seed, n);
        let limit = alpha_limit(&pts).unwrap();
        let shape = alpha_shape(&pts, limit).unwrap();
        for p in &pts {
            prop_assert!(shape.contains(*p) || shape.distance_to_boundary(*p) < 1e-12);
        }
        let expected = oracle::alpha_limit_scan(&raw(&pts));
        prop_assert!((limit - expected).abs() <= 1e-12 * expected.max(1.0), "{} vs {}", limit, expected);
    }

    #[test]
    fn larger_alpha_shrinks_region(seed in any::<u64>(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let pts = random_points(seed, 30);
        let limit = alpha_limit(&pts).unwrap();
        let (a1, a2) = (limit * t1.min(t2), limit * t1.max(t2));
        let (s1, s2) = (alpha_shape(&pts, a1), alpha_shape(&pts, a2));
        if let (Ok(s1), Ok(s2)) = (s1, s2) {
            prop_assert!(s2.area() <= s1.area() + 1e-12);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            for _ in 0..200 {
                let q = Point2::new(rng.random(), rng.random());
                if s2.contains(q) && s2.distance_to_boundary(q) > 1e-9 {
                    prop_assert!(s1.contains(q));
                }
            }
        }
    }

    #[test]
    fn contour_vertices_are_input_points(seed in any::<u64>(), t in 0.0f64..1.2) {
        let pts = random_points(seed, 30);
        let alpha = alpha_limit(&pts).unwrap() * t;
        if let Ok(shape) = alpha_shape(&pts, alpha) {
            for v in shape.vertices() {
                prop_assert!(pts.iter().any(|p| p.x.to_bits() == v.x.to_bits() && p.y.to_bits() == v.y.to_bits()));
            }
            let first = shape.vertices()[0];
            prop_assert!(shape.vertices().iter().all(|v| first.lex_cmp(v).is_le()));
        }
    }

    #[test]
    fn resampling_gaps_are_uniform(seed in any::<u64>(), m in 3usize..80) {
        let pts = random_points(seed, 30);
        let shape = alpha_shape(&pts, alpha_limit(&pts).unwrap()).unwrap();
        let samples = resample_contour(&shape, m);
        prop_assert_eq!(samples.len(), m);
        let poly = raw(shape.vertices());
        let perimeter = oracle::perimeter(&poly);
        let spacing = perimeter / m as f64;
        let arcs: Vec<f64> = samples.iter().map(|p| oracle::arc_position(&poly, [p.x, p.y])).collect();
        let mut total = 0.0;
        for k in 0..m {
            let next = if k + 1 < m { arcs[k + 1] } else { perimeter };
            let gap = next - arcs[k];
            total += gap;
            prop_assert!((gap - spacing).abs() < 1e-9, "gap {} vs {}", gap, spacing);
        }
        prop_assert!((total - perimeter).abs() < 1e-9);
        for p in &samples {
            prop_assert!(shape.distance_to_boundary(*p) < 1e-9);
        }
    }
}
