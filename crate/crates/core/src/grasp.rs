//! The oriented base-fixed triangle grasp and its codecs.
//!
//! Pixel frame: x to the right, y down. Angles are measured counter-clockwise
//! on screen from +x, so the grasp axis is `u = (cos θ, -sin θ)`. The apex
//! (single-finger side) sits at `+u·ω/2` from the center and the base
//! (two-finger side, length `d`) at `-u·ω/2`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexPolygon, Point};

/// Fixed triangle base in pixels.
pub const DEFAULT_BASE: f64 = 40.0;
/// Widths are divided by this to land in `[0, 1)`.
pub const WIDTH_SCALE: f64 = 150.0;
/// Largest f32 strictly below 1.0; widths at or above the scale clamp here.
pub const MAX_SCALED_WIDTH: f32 = 1.0 - f32::EPSILON / 2.0;
/// Bin counts used for angle classification.
pub const STANDARD_BIN_COUNTS: [usize; 3] = [36, 72, 120];

#[derive(Debug, Error, PartialEq)]
pub enum GraspError {
    #[error("triangle height must be finite and >= 0, got {0}")]
    BadHeight(f64),
    #[error("triangle base must be finite and > 0, got {0}")]
    BadBase(f64),
    #[error("non-finite grasp field {0}")]
    NonFinite(&'static str),
    #[error("angle {0} cannot be normalized into [0, 2π)")]
    BadAngle(f64),
    #[error("angle bin count must be >= 1")]
    ZeroBins,
    #[error("angle bin {bin} out of range for k = {k}")]
    BinOutOfRange { bin: usize, k: usize },
    #[error("depth must be finite and > 0, got {0}")]
    BadDepth(f64),
    #[error("surface normal must be unit length, |n| = {0}")]
    NonUnitNormal(f64),
    #[error("focal lengths must be > 0")]
    BadCamera,
}

/// Maps any finite angle into `[0, 2π)`. Values that round up to 2π map to 0.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Maps any finite angle into `[0, π)`.
pub fn fold_half_turn(a: f64) -> f64 {
    let r = a.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Smallest absolute difference between two angles on a circle of the given
/// period.
pub fn circular_diff(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleGrasp {
    pub x: f64,
    pub y: f64,
    pub omega: f64,
    pub theta: f64,
    pub d: f64,
}

impl TriangleGrasp {
    pub fn new(x: f64, y: f64, omega: f64, theta: f64, d: f64) -> Result<Self, GraspError> {
        if !x.is_finite() {
            return Err(GraspError::NonFinite("x"));
        }
        if !y.is_finite() {
            return Err(GraspError::NonFinite("y"));
        }
        if !theta.is_finite() {
            return Err(GraspError::BadAngle(theta));
        }
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(GraspError::BadHeight(omega));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(GraspError::BadBase(d));
        }
        Ok(Self {
            x,
            y,
            omega,
            theta: normalize_angle(theta),
            d,
        })
    }

    pub fn center(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Unit vector from base toward apex.
    pub fn axis(&self) -> Point {
        let (s, c) = self.theta.sin_cos();
        Point::new(c, -s)
    }

    /// `[apex, base_end_1, base_end_2]`.
    pub fn vertices(&self) -> [Point; 3] {
        let u = self.axis();
        let v = Point::new(-u.y, u.x);
        let c = self.center();
        let apex = c + u * (self.omega / 2.0);
        let base_mid = c - u * (self.omega / 2.0);
        [
            apex,
            base_mid - v * (self.d / 2.0),
            base_mid + v * (self.d / 2.0),
        ]
    }

    pub fn area(&self) -> f64 {
        self.omega * self.d / 2.0
    }

    pub fn polygon(&self) -> ConvexPolygon {
        ConvexPolygon::new(self.vertices().to_vec()).expect("triangle vertices are convex")
    }

    pub fn to_rect(&self) -> RectGrasp {
        RectGrasp {
            cx: self.x,
            cy: self.y,
            w: self.omega,
            h: self.d,
            phi: fold_half_turn(self.theta),
        }
    }

    /// Same grasp with the apex and base swapped.
    pub fn flipped(&self) -> Self {
        Self {
            theta: normalize_angle(self.theta + PI),
            ..*self
        }
    }
}

/// Five-dimensional oriented rectangle used by the evaluation metric.
/// `w` lies along the grasp axis, `h` across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectGrasp {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub phi: f64,
}

impl RectGrasp {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, phi: f64) -> Self {
        Self {
            cx,
            cy,
            w,
            h,
            phi: fold_half_turn(phi),
        }
    }

    pub fn corners(&self) -> [Point; 4] {
        let (s, c) = self.phi.sin_cos();
        let u = Point::new(c, -s);
        let v = Point::new(s, c);
        let ctr = Point::new(self.cx, self.cy);
        let (hw, hh) = (self.w / 2.0, self.h / 2.0);
        [
            ctr - u * hw - v * hh,
            ctr + u * hw - v * hh,
            ctr + u * hw + v * hh,
            ctr - u * hw + v * hh,
        ]
    }

    pub fn polygon(&self) -> ConvexPolygon {
        ConvexPolygon::new(self.corners().to_vec()).expect("rectangle corners are convex")
    }
}

/// Angles a region may be grasped at: an explicit set, or any angle.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleSet {
    Any,
    Angles(Vec<f64>),
}

impl AngleSet {
    pub fn is_any(&self) -> bool {
        matches!(self, AngleSet::Any)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> AngleSet {
        match self {
            AngleSet::Any => AngleSet::Any,
            AngleSet::Angles(v) => AngleSet::Angles(v.iter().map(|&a| f(a)).collect()),
        }
    }
}

impl Serialize for AngleSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AngleSet::Any => s.serialize_str("any"),
            AngleSet::Angles(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for AngleSet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            List(Vec<f64>),
        }
        match Raw::deserialize(de)? {
            Raw::Word(w) if w.eq_ignore_ascii_case("any") => Ok(AngleSet::Any),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a list of radians or \"any\", got \"{w}\""
            ))),
            Raw::List(v) => Ok(AngleSet::Angles(v)),
        }
    }
}

/// Uniform `k`-bin classification of `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleCodec {
    k: usize,
}

impl AngleCodec {
    pub fn new(k: usize) -> Result<Self, GraspError> {
        if k == 0 {
            return Err(GraspError::ZeroBins);
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bin_width(&self) -> f64 {
        TAU / self.k as f64
    }

    /// Bin of a single angle. Angles within 1e-9 of a bin edge (in units of
    /// bins) snap to that edge so that exact multiples of the bin width land
    /// in the bin they open.
    pub fn bin_of(&self, angle: f64) -> Result<usize, GraspError> {
        if !angle.is_finite() {
            return Err(GraspError::BadAngle(angle));
        }
        let a = normalize_angle(angle);
        if !(0.0..TAU).contains(&a) {
            return Err(GraspError::BadAngle(angle));
        }
        let t = a * self.k as f64 / TAU;
        let r = t.round();
        let bin = if (t - r).abs() < 1e-9 { r } else { t.floor() };
        let bin = bin as usize;
        Ok(if bin >= self.k { bin % self.k } else { bin })
    }

    /// Multi-hot encoding; `Any` sets every bin.
    pub fn encode(&self, angles: &AngleSet) -> Result<Vec<f32>, GraspError> {
        let mut out = vec![0.0f32; self.k];
        match angles {
            AngleSet::Any => out.fill(1.0),
            AngleSet::Angles(v) => {
                for &a in v {
                    out[self.bin_of(a)?] = 1.0;
                }
            }
        }
        Ok(out)
    }

    /// Center of a bin.
    pub fn decode(&self, bin: usize) -> Result<f64, GraspError> {
        if bin >= self.k {
            return Err(GraspError::BinOutOfRange { bin, k: self.k });
        }
        Ok((bin as f64 + 0.5) * self.bin_width())
    }
}

/// Width in pixels → `[0, 1)`. The flag reports whether clamping happened.
pub fn scale_width(omega_px: f64) -> (f32, bool) {
    if omega_px.is_nan() || omega_px <= 0.0 {
        return (0.0, omega_px != 0.0);
    }
    let v = (omega_px / WIDTH_SCALE) as f32;
    if v >= MAX_SCALED_WIDTH {
        (MAX_SCALED_WIDTH, omega_px >= WIDTH_SCALE)
    } else {
        (v, false)
    }
}

pub fn unscale_width(value: f32) -> f64 {
    value as f64 * WIDTH_SCALE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx0: f64,
    pub cy0: f64,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx0: f64, cy0: f64) -> Result<Self, GraspError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GraspError::BadCamera);
        }
        Ok(Self { fx, fy, cx0, cy0 })
    }

    /// Pinhole back-projection of a pixel at the given depth (camera frame,
    /// x right, y down, z forward).
    pub fn back_project(&self, x: f64, y: f64, depth: f64) -> Vector3<f64> {
        Vector3::new(
            (x - self.cx0) * depth / self.fx,
            (y - self.cy0) * depth / self.fy,
            depth,
        )
    }
}

/// Gripper pose in the camera frame. Orientation columns are the closing
/// axis (toward the single finger), the finger-spread axis and the approach
/// axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspPose7D {
    pub position: Vector3<f64>,
    pub orientation: Matrix3<f64>,
    pub opening: f64,
}

/// Lifts a planar grasp to a 3D gripper pose. The approach axis is the
/// reversed surface normal; θ rotates the closing axis about it.
pub fn project_7d(
    g: &TriangleGrasp,
    depth_m: f64,
    cam: &CameraModel,
    surface_normal: Vector3<f64>,
) -> Result<GraspPose7D, GraspError> {
    if !(depth_m.is_finite() && depth_m > 0.0) {
        return Err(GraspError::BadDepth(depth_m));
    }
    let norm = surface_normal.norm();
    if norm.is_nan() || (norm - 1.0).abs() > 1e-6 {
        return Err(GraspError::NonUnitNormal(norm));
    }
    let approach = -surface_normal / norm;
    // reference in-plane axis: camera x projected off the approach axis
    let cam_x = Vector3::x();
    let mut x_ref = cam_x - approach * approach.dot(&cam_x);
    if x_ref.norm() < 1e-6 {
        let cam_y = Vector3::y();
        x_ref = cam_y - approach * approach.dot(&cam_y);
    }
    let x_ref = x_ref.normalize();
    let y_ref = approach.cross(&x_ref);
    let (s, c) = g.theta.sin_cos();
    // pixel direction (cos θ, -sin θ) expressed in the reference frame
    let closing = (x_ref * c - y_ref * s).normalize();
    let spread = approach.cross(&closing);
    let orientation = Matrix3::from_columns(&[closing, spread, approach]);
    Ok(GraspPose7D {
        position: cam.back_project(g.x, g.y, depth_m),
        orientation,
        opening: g.omega * depth_m / cam.fx,
    })
}
