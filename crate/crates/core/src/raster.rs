//! Silhouette rendering of formations onto a fixed 224x224 canvas.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::geometry::{alpha_shape, ContourPolygon, Formation, Point2};

pub const CANVAS_SIZE: usize = 224;
pub const CANVAS_MARGIN: f64 = 10.0;
/// Pixels per workspace unit.
pub const CANVAS_SCALE: f64 = CANVAS_SIZE as f64 - 2.0 * CANVAS_MARGIN;
pub const BACKGROUND: [u8; 3] = [255, 255, 255];

const PIXELS: usize = CANVAS_SIZE * CANVAS_SIZE;
const WORDS: usize = PIXELS.div_ceil(64);

/// The ten basic colors a formation can be drawn in, in table order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NamedColor {
    Red,
    Orange,
    Yellow,
    Green,
    Cyan,
    Blue,
    Purple,
    Magenta,
    Pink,
    Brown,
}

impl NamedColor {
    pub const ALL: [NamedColor; 10] = [
        NamedColor::Red,
        NamedColor::Orange,
        NamedColor::Yellow,
        NamedColor::Green,
        NamedColor::Cyan,
        NamedColor::Blue,
        NamedColor::Purple,
        NamedColor::Magenta,
        NamedColor::Pink,
        NamedColor::Brown,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            NamedColor::Red => "red",
            NamedColor::Orange => "orange",
            NamedColor::Yellow => "yellow",
            NamedColor::Green => "green",
            NamedColor::Cyan => "cyan",
            NamedColor::Blue => "blue",
            NamedColor::Purple => "purple",
            NamedColor::Magenta => "magenta",
            NamedColor::Pink => "pink",
            NamedColor::Brown => "brown",
        }
    }

    pub const fn rgb(self) -> [u8; 3] {
        match self {
            NamedColor::Red => [255, 0, 0],
            NamedColor::Orange => [255, 165, 0],
            NamedColor::Yellow => [255, 255, 0],
            NamedColor::Green => [0, 128, 0],
            NamedColor::Cyan => [0, 255, 255],
            NamedColor::Blue => [0, 0, 255],
            NamedColor::Purple => [128, 0, 128],
            NamedColor::Magenta => [255, 0, 255],
            NamedColor::Pink => [255, 192, 203],
            NamedColor::Brown => [139, 69, 19],
        }
    }
}

impl fmt::Display for NamedColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown color name")]
pub struct UnknownColor;

impl FromStr for NamedColor {
    type Err = UnknownColor;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NamedColor::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or(UnknownColor)
    }
}

/// One bit per canvas pixel, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    bits: Vec<u64>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mask({} set)", self.count())
    }
}

impl Default for Mask {
    fn default() -> Self {
        Self::empty()
    }
}

impl Mask {
    pub fn empty() -> Self {
        Mask {
            bits: alloc::vec![0; WORDS],
        }
    }

    pub fn full() -> Self {
        let mut m = Self::empty();
        for i in 0..PIXELS {
            m.bits[i / 64] |= 1 << (i % 64);
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::empty();
        for y in 0..CANVAS_SIZE {
            for x in 0..CANVAS_SIZE {
                if f(x, y) {
                    m.set(x, y);
                }
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        let i = y * CANVAS_SIZE + x;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize) {
        let i = y * CANVAS_SIZE + x;
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn intersection_count(&self, other: &Mask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn union_count(&self, other: &Mask) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Intersection over union. Two empty masks score 0.
    pub fn iou(&self, other: &Mask) -> f64 {
        let union = self.union_count(other);
        if union == 0 {
            0.0
        } else {
            self.intersection_count(other) as f64 / union as f64
        }
    }
}

/// A 224x224 RGB image made of one fill color over a background.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RasterImage {
    fill: [u8; 3],
    background: [u8; 3],
    mask: Mask,
    degenerate: bool,
}

impl RasterImage {
    pub const WIDTH: usize = CANVAS_SIZE;
    pub const HEIGHT: usize = CANVAS_SIZE;

    pub fn new(mask: Mask, fill: [u8; 3]) -> Self {
        RasterImage {
            fill,
            background: BACKGROUND,
            mask,
            degenerate: false,
        }
    }

    /// All-background image flagged as coming from degenerate geometry.
    pub fn degenerate(fill: [u8; 3]) -> Self {
        RasterImage {
            fill,
            background: BACKGROUND,
            mask: Mask::empty(),
            degenerate: true,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Pixels that carry the fill color.
    pub fn fill_mask(&self) -> &Mask {
        &self.mask
    }

    pub fn fill_color(&self) -> [u8; 3] {
        self.fill
    }

    pub fn background_color(&self) -> [u8; 3] {
        self.background
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        if self.mask.get(x, y) {
            self.fill
        } else {
            self.background
        }
    }

    /// Row-major interleaved RGB bytes.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PIXELS * 3);
        for y in 0..CANVAS_SIZE {
            for x in 0..CANVAS_SIZE {
                out.extend_from_slice(&self.pixel(x, y));
            }
        }
        out
    }
}

/// Workspace point to canvas coordinates (pixel centers sit at `i + 0.5`).
#[inline]
pub fn to_canvas(p: Point2) -> (f64, f64) {
    let p = p.clamp_unit();
    (
        CANVAS_MARGIN + p.x * CANVAS_SCALE,
        CANVAS_MARGIN + p.y * CANVAS_SCALE,
    )
}

/// Pixel centers this close to an edge (in pixels) count as on it.
const EDGE_SLACK: f64 = 1e-9;

/// Scanline fill of a closed polygon given in workspace coordinates.
///
/// A pixel is filled when its center lies inside or on the polygon.
pub fn polygon_mask(vertices: &[Point2]) -> Mask {
    let canvas: Vec<(f64, f64)> = vertices.iter().map(|&p| to_canvas(p)).collect();
    let n = canvas.len();
    let mut mask = Mask::empty();
    if n < 3 {
        return mask;
    }
    let mut crossings: Vec<f64> = Vec::with_capacity(n);
    for row in 0..CANVAS_SIZE {
        let y = row as f64 + 0.5;
        crossings.clear();
        for i in 0..n {
            let (x0, y0) = canvas[i];
            let (x1, y1) = canvas[(i + 1) % n];
            if (y0 <= y && y1 > y) || (y1 <= y && y0 > y) {
                crossings.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for span in crossings.chunks_exact(2) {
            let first = libm::ceil(span[0] - 0.5 - EDGE_SLACK).max(0.0) as usize;
            let last = libm::floor(span[1] - 0.5 + EDGE_SLACK);
            if last < 0.0 {
                continue;
            }
            let last = (last as usize).min(CANVAS_SIZE - 1);
            for col in first..=last {
                mask.set(col, row);
            }
        }
    }
    mask
}

pub fn render_polygon(polygon: &ContourPolygon, color: NamedColor) -> RasterImage {
    RasterImage::new(polygon_mask(polygon.vertices()), color.rgb())
}

/// Filled alpha-shape silhouette of a formation on a white background.
///
/// Degenerate or disconnected geometry yields a blank image with the
/// degenerate flag set.
pub fn render_formation(formation: &Formation, color: NamedColor) -> RasterImage {
    match alpha_shape(formation.positions(), formation.alpha()) {
        Ok(polygon) => render_polygon(&polygon, color),
        Err(_) => RasterImage::degenerate(color.rgb()),
    }
}

/// Every pixel set to `color`.
pub fn solid_color_image(color: NamedColor) -> RasterImage {
    RasterImage::new(Mask::full(), color.rgb())
}
