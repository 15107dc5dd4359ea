use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarmshape_core::geometry::alpha_limit;
use swarmshape_core::raster::{
    render_formation, solid_color_image, to_canvas, CANVAS_SCALE, CANVAS_SIZE, BACKGROUND,
};
use swarmshape_core::{Formation, NamedColor, Point2};
use swarmshape_testkit as oracle;

fn random_formation(seed: u64, n: usize) -> Formation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point2> = (0..n).map(|_| Point2::new(rng.random(), rng.random())).collect();
    let alpha = alpha_limit(&pts).unwrap() * rng.random::<f64>();
    Formation::new(pts, alpha).unwrap()
}

#[test]
fn right_triangle_area_matches_pixel_oracle() {
    let corners = [Point2::new(0.2, 0.3), Point2::new(0.7, 0.3), Point2::new(0.2, 0.8)];
    let img = render_formation(&Formation::new(corners.to_vec(), 0.0).unwrap(), NamedColor::Blue);
    let filled = img.fill_mask().count() as f64;

    let analytic = 0.125 * CANVAS_SCALE * CANVAS_SCALE;
    assert!((filled - analytic).abs() <= 0.02 * analytic, "{filled} vs {analytic}");

    let canvas = corners.map(|p| {
        let (x, y) = to_canvas(p);
        [x, y]
    });
    assert_eq!(filled as usize, oracle::triangle_pixel_count(canvas, CANVAS_SIZE));
}

#[test]
fn quarter_turn_matches_rotated_image() {
    for seed in 0..20 {
        let f = random_formation(seed, 30);
        let turned: Vec<Point2> = f.positions().iter().map(|p| Point2::new(1.0 - p.y, p.x)).collect();
        let g = Formation::new(turned, f.alpha()).unwrap();
        let (a, b) = (render_formation(&f, NamedColor::Red), render_formation(&g, NamedColor::Red));
        assert_eq!(a.is_degenerate(), b.is_degenerate());
        let n = CANVAS_SIZE;
        let agree = (0..n)
            .flat_map(|r| (0..n).map(move |c| (c, r)))
            .filter(|&(c, r)| a.fill_mask().get(c, r) == b.fill_mask().get(n - 1 - r, c))
            .count();
        assert!(agree as f64 >= 0.98 * (n * n) as f64, "seed {seed}: {agree}");
    }
}

#[test]
fn solid_images_are_uniform() {
    for color in NamedColor::ALL {
        let img = solid_color_image(color);
        for y in 0..CANVAS_SIZE {
            for x in 0..CANVAS_SIZE {
                assert_eq!(img.pixel(x, y), color.rgb());
            }
        }
    }
    assert_eq!(solid_color_image(NamedColor::Green).pixel(0, 0), [0, 128, 0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rendering_is_deterministic_and_two_colored(seed in any::<u64>(), ci in 0usize..10) {
        let f = random_formation(seed, 30);
        let color = NamedColor::ALL[ci];
        let a = render_formation(&f, color);
        let b = render_formation(&f.clone(), color);
        prop_assert_eq!(a.to_rgb8(), b.to_rgb8());
        let rgb = a.to_rgb8();
        prop_assert_eq!(rgb.len(), CANVAS_SIZE * CANVAS_SIZE * 3);
        for px in rgb.chunks_exact(3) {
            prop_assert!(px == BACKGROUND || px == color.rgb());
        }
    }
}
