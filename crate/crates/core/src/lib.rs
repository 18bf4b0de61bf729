//! Planar grasps as oriented base-fixed triangles.
//!
//! A grasp is `(x, y, ω, θ, d)`: center pixel, triangle height (gripper
//! opening), heading in `[0, 2π)` and a fixed base length. The apex is the
//! single-finger side of an asymmetric three-finger gripper; the base is the
//! two-finger side.
//!
//! Modules:
//!
//! - [`grasp`]: the grasp type, angle/width codecs, rectangle mapping and
//!   lifting to a 3D gripper pose.
//! - [`geometry`]: convex polygon clipping and IOU, plus a sampling oracle.
//! - [`dataset`]: annotation formats, label rasterization, splits and a
//!   synthetic corpus.
//! - [`augment`]: crop/rotate/zoom applied to images and labels together.
//! - [`decode`]: prediction maps to best and multi-peak grasps.
//! - [`eval`]: the rectangle metric and split-level accuracy.
//! - [`gmap`]: the binary channel-stack file format.
//! - [`overlay`]: PNG rendering of grasps.

pub mod augment;
pub mod config;
pub mod dataset;
pub mod decode;
pub mod eval;
pub mod geometry;
pub mod gmap;
pub mod grasp;
pub mod overlay;

pub use config::Config;
pub use decode::{best_grasp, multi_grasps, PredictionMaps, ScoredGrasp};
pub use eval::{is_correct, EvalReport, Metric};
pub use geometry::{iou, ConvexPolygon, Point};
pub use grasp::{AngleCodec, AngleSet, RectGrasp, TriangleGrasp};
