//! Medial-axis toolkit for 2D shapes.
//!
//! The crate covers three representations of a shape skeleton and the glue
//! between them:
//!
//! * **pixel**: binary rasters of shapes and of rendered skeletons,
//! * **point**: boundary/interior point clouds with per-point skeleton labels,
//! * **parametric**: branches fitted as degree-5 Bezier curves in `(x, y, r)`.
//!
//! The main pipeline goes raster → contour → Voronoi-based medial axis →
//! pruned skeleton graph → merged branches → Bezier parametrization, with
//! [`metrics`] providing the scoring side (pixel F1, point-set Chamfer, and a
//! parametric branch distance) and [`datagen`]/[`synth`] providing dataset
//! rendering, sampling and splitting.

pub mod contour;
pub mod datagen;
pub mod distance;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod parametrize;
pub mod raster;
pub mod skeleton;
pub mod skeletonize;
pub mod synth;

pub use error::{Error, Result};
