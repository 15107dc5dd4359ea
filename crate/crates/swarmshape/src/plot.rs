//! Per-frame snapshots of a trajectory: front view (x, z) on the left,
//! top view (x, y) on the right.

use image::{Rgb, RgbImage};
use swarmshape_core::navsim::Trajectory;
use swarmshape_core::Point3;

const PANEL: u32 = 256;
const PAD: f64 = 8.0;

struct View {
    min: [f64; 2],
    scale: f64,
}

impl View {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> View {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
        View {
            min: lo,
            scale: (PANEL as f64 - 2.0 * PAD) / span,
        }
    }

    /// Pixel position; the second axis points up.
    fn pixel(&self, p: [f64; 2]) -> (f64, f64) {
        (
            PAD + (p[0] - self.min[0]) * self.scale,
            PANEL as f64 - PAD - (p[1] - self.min[1]) * self.scale,
        )
    }
}

fn disc(img: &mut RgbImage, x0: u32, (cx, cy): (f64, f64), r: f64, color: [u8; 3]) {
    let r = r.max(1.5);
    let (xa, xb) = ((cx - r).floor().max(0.0) as u32, (cx + r).ceil().min(PANEL as f64 - 1.0) as u32);
    let (ya, yb) = ((cy - r).floor().max(0.0) as u32, (cy + r).ceil().min(PANEL as f64 - 1.0) as u32);
    for y in ya..=yb {
        for x in xa..=xb {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            if dx * dx + dy * dy <= r * r {
                img.put_pixel(x0 + x, y, Rgb(color));
            }
        }
    }
}

fn front(p: &Point3) -> [f64; 2] {
    [p.x, p.z]
}

fn top(p: &Point3) -> [f64; 2] {
    [p.x, p.y]
}

/// One image per `every`-th frame (and the last frame). Views are fitted
/// to the whole trajectory so frames line up.
pub fn frame_images(t: &Trajectory, every: usize) -> Vec<(usize, RgbImage)> {
    let every = every.max(1);
    let all = || t.frames.iter().flat_map(|f| f.positions.iter());
    let (fv, tv) = (View::fit(all().map(front)), View::fit(all().map(top)));
    let last = t.frames.len().saturating_sub(1);
    let mut out = Vec::new();
    for (k, frame) in t.frames.iter().enumerate() {
        if k % every != 0 && k != last {
            continue;
        }
        let color = t
            .phases
            .iter()
            .rev()
            .find(|p| p.start_frame <= k)
            .map_or([0, 0, 0], |p| p.color.rgb());
        let mut img = RgbImage::from_pixel(2 * PANEL, PANEL, Rgb([255, 255, 255]));
        for y in 0..PANEL {
            img.put_pixel(PANEL, y, Rgb([200, 200, 200]));
        }
        for p in &frame.positions {
            disc(&mut img, 0, fv.pixel(front(p)), t.radius * fv.scale, color);
            disc(&mut img, PANEL, tv.pixel(top(p)), t.radius * tv.scale, color);
        }
        out.push((k, img));
    }
    out
}
