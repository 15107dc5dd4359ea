//! Core algorithms for turning a single word into a drone-show formation.
//!
//! The pipeline is split into small, pure modules:
//!
//! - [`geometry`]: Delaunay-based alpha-shape contours, the alpha limit of a
//!   formation and equal arc-length contour resampling.
//! - [`raster`]: fixed-size silhouette images rendered from formations.
//! - [`similarity`]: the text/image scorer interface, the deterministic
//!   template scorer, color selection and prompt construction.
//! - [`optimizer`]: the exploration/exploitation search over formation pools
//!   and the improvement metrics computed from its logs.
//! - [`showplan`]: contour resampling to show positions, projection into a
//!   vertical 3D plane and minimum-cost goal assignment.
//! - [`navsim`]: a synchronous 3D reciprocal collision avoidance simulator.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and the neural scorer live in the `swarmshape` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod geometry;
pub mod navsim;
pub mod optimizer;
pub mod raster;
pub mod showplan;
pub mod similarity;
mod vec3;

pub use geometry::{ContourPolygon, Formation, GeometryError, Point2};
pub use raster::{Mask, NamedColor, RasterImage};
pub use similarity::{Prompt, ScoreError, Scorer, SimilarityScore, TemplateScorer};
pub use vec3::Vec3;

/// Positions in the 3D world frame are plain vectors (meters, z up).
pub type Point3 = Vec3;
