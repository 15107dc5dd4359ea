//! Files, command line and neural scoring around [`swarmshape_core`].

pub mod audit;
pub mod cli;
#[cfg(feature = "neural")]
pub mod clip;
pub mod config;
pub mod format;
pub mod plot;

use rayon::prelude::*;
use swarmshape_core::raster::render_formation;
use swarmshape_core::{Formation, NamedColor, RasterImage};

pub use swarmshape_core as core;

/// Renders formations on the rayon pool. Output order matches the input.
pub fn render_parallel(formations: &[Formation], color: NamedColor) -> Vec<RasterImage> {
    formations.par_iter().map(|f| render_formation(f, color)).collect()
}
