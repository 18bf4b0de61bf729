//! Online geometric augmentation: centroid crop, clockwise rotation and zoom
//! about the image center, applied to the image and its region annotations
//! together. Labels are transformed exactly and rasterized afterwards; only
//! the image is resampled (bilinear, replicate-edge border).

use std::f64::consts::{FRAC_PI_2, TAU};

use image::{Rgb, RgbImage};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{region_mask, ImageAnnotation, RegionAnnotation};
use crate::geometry::{intersect, ConvexPolygon, Point, MIN_AREA};
use crate::grasp::{normalize_angle, WIDTH_SCALE};

pub const CROP_SIZE: u32 = 320;

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("zoom bounds must satisfy 0 < min <= max, got [{0}, {1}]")]
    ZoomBounds(f64, f64),
    #[error("zoom factor must be positive, got {0}")]
    Zoom(f64),
    #[error("image is {got:?} but annotation says {expected:?}")]
    SizeMismatch { got: [u32; 2], expected: [u32; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub crop_size: u32,
    pub zoom_min: f64,
    pub zoom_max: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            crop_size: CROP_SIZE,
            zoom_min: 0.8,
            zoom_max: 1.25,
        }
    }
}

impl AugmentConfig {
    pub fn check(&self) -> Result<(), AugmentError> {
        if !(self.zoom_min > 0.0 && self.zoom_min <= self.zoom_max && self.zoom_max.is_finite()) {
            return Err(AugmentError::ZoomBounds(self.zoom_min, self.zoom_max));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub crop_size: u32,
    /// Clockwise on screen, radians in `[0, 2π)`.
    pub rotation: f64,
    pub zoom: f64,
}

/// Things the transforms had to fix up along the way.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AugmentWarnings {
    pub dropped_regions: usize,
    pub width_clamps: usize,
    pub centroid_fallback: bool,
}

impl AugmentWarnings {
    pub fn merge(&mut self, o: AugmentWarnings) {
        self.dropped_regions += o.dropped_regions;
        self.width_clamps += o.width_clamps;
        self.centroid_fallback |= o.centroid_fallback;
    }
}

pub fn sample_params<R: Rng + ?Sized>(rng: &mut R, cfg: &AugmentConfig) -> AugmentParams {
    let rotation = normalize_angle(rng.random_range(0.0..TAU));
    let zoom = if cfg.zoom_min == cfg.zoom_max {
        cfg.zoom_min
    } else {
        rng.random_range(cfg.zoom_min..=cfg.zoom_max)
    };
    AugmentParams {
        crop_size: cfg.crop_size,
        rotation,
        zoom,
    }
}

fn check_size(image: &RgbImage, ann: &ImageAnnotation) -> Result<(), AugmentError> {
    let (w, h) = image.dimensions();
    if [h, w] != ann.size {
        return Err(AugmentError::SizeMismatch {
            got: [h, w],
            expected: ann.size,
        });
    }
    Ok(())
}

/// Replicate-edge bilinear sample at continuous pixel coordinates, where
/// pixel `(c, r)` has its center at `(c + 0.5, r + 0.5)`.
fn sample_bilinear(img: &RgbImage, x: f64, y: f64) -> Rgb<u8> {
    let (w, h) = img.dimensions();
    let fx = (x - 0.5).clamp(0.0, (w - 1) as f64);
    let fy = (y - 0.5).clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (fx.floor() as u32, fy.floor() as u32);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
    if ax == 0.0 && ay == 0.0 {
        return *img.get_pixel(x0, y0);
    }
    let p = |xx, yy| img.get_pixel(xx, yy).0;
    let (p00, p10, p01, p11) = (p(x0, y0), p(x1, y0), p(x0, y1), p(x1, y1));
    let mut out = [0u8; 3];
    for ch in 0..3 {
        let top = p00[ch] as f64 * (1.0 - ax) + p10[ch] as f64 * ax;
        let bot = p01[ch] as f64 * (1.0 - ax) + p11[ch] as f64 * ax;
        out[ch] = (top * (1.0 - ay) + bot * ay).round().clamp(0.0, 255.0) as u8;
    }
    Rgb(out)
}

/// Output pixel `p` takes its value from `inverse(p)`.
fn warp(img: &RgbImage, inverse: impl Fn(Point) -> Point) -> RgbImage {
    let (w, h) = img.dimensions();
    RgbImage::from_fn(w, h, |c, r| {
        let src = inverse(Point::new(c as f64 + 0.5, r as f64 + 0.5));
        sample_bilinear(img, src.x, src.y)
    })
}

/// sin/cos with exact values at multiples of a quarter turn, so that
/// quarter-turn rotations map pixel centers onto pixel centers exactly.
fn exact_sin_cos(phi: f64) -> (f64, f64) {
    let q = phi / FRAC_PI_2;
    let r = q.round();
    if (q - r).abs() < 1e-12 {
        match (r as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        phi.sin_cos()
    }
}

fn image_center(ann: &ImageAnnotation) -> Point {
    Point::new(ann.width() as f64 / 2.0, ann.height() as f64 / 2.0)
}

/// Clockwise rotation on screen by `phi` about `center`.
fn rotate_point(p: Point, center: Point, s: f64, c: f64) -> Point {
    let (dx, dy) = (p.x - center.x, p.y - center.y);
    Point::new(center.x + dx * c - dy * s, center.y + dx * s + dy * c)
}

/// Rotates the image clockwise (as seen on screen) by `phi` about its center
/// and carries the annotation along. Grasp headings, measured
/// counter-clockwise, therefore become `θ - phi`.
pub fn rotate(
    image: &RgbImage,
    ann: &ImageAnnotation,
    phi: f64,
) -> Result<(RgbImage, ImageAnnotation), AugmentError> {
    check_size(image, ann)?;
    let phi = normalize_angle(phi);
    if phi == 0.0 {
        return Ok((image.clone(), ann.clone()));
    }
    let center = image_center(ann);
    let (s, c) = exact_sin_cos(phi);
    let out_img = warp(image, |p| rotate_point(p, center, -s, c));
    let regions = ann
        .regions
        .iter()
        .map(|r| RegionAnnotation {
            polygon: r.polygon.map_points(|p| rotate_point(p, center, s, c)),
            angles: r.angles.map(|a| normalize_angle(a - phi)),
            omega: r.omega,
        })
        .collect();
    Ok((
        out_img,
        ImageAnnotation {
            regions,
            ..ann.clone()
        },
    ))
}

/// Scales image content by `s` about the image center. Polygon coordinates
/// and widths scale with it; widths above the representable maximum clamp.
pub fn zoom(
    image: &RgbImage,
    ann: &ImageAnnotation,
    s: f64,
) -> Result<(RgbImage, ImageAnnotation, AugmentWarnings), AugmentError> {
    check_size(image, ann)?;
    if !(s.is_finite() && s > 0.0) {
        return Err(AugmentError::Zoom(s));
    }
    let mut warn = AugmentWarnings::default();
    if s == 1.0 {
        return Ok((image.clone(), ann.clone(), warn));
    }
    let center = image_center(ann);
    let scale = |p: Point, f: f64| {
        Point::new(
            center.x + (p.x - center.x) * f,
            center.y + (p.y - center.y) * f,
        )
    };
    let out_img = warp(image, |p| scale(p, 1.0 / s));
    let regions = ann
        .regions
        .iter()
        .map(|r| {
            let mut omega = r.omega * s;
            if omega > WIDTH_SCALE {
                omega = WIDTH_SCALE;
                warn.width_clamps += 1;
            }
            RegionAnnotation {
                polygon: r.polygon.map_points(|p| scale(p, s)),
                angles: r.angles.clone(),
                omega,
            }
        })
        .collect();
    Ok((
        out_img,
        ImageAnnotation {
            regions,
            ..ann.clone()
        },
        warn,
    ))
}

/// Clips every region to the image rectangle, dropping those left with no
/// area.
pub fn clip_to_image(ann: &ImageAnnotation) -> (ImageAnnotation, usize) {
    let frame = ConvexPolygon::aabb(0.0, 0.0, ann.width() as f64, ann.height() as f64);
    let mut dropped = 0;
    let regions = ann
        .regions
        .iter()
        .filter_map(|r| {
            let (lo, hi) = r.polygon.bounds();
            let inside = lo.x >= 0.0
                && lo.y >= 0.0
                && hi.x <= ann.width() as f64
                && hi.y <= ann.height() as f64;
            if inside {
                return Some(r.clone());
            }
            match intersect(&r.polygon, &frame) {
                Some(p) if p.area() > MIN_AREA => Some(RegionAnnotation {
                    polygon: p,
                    ..r.clone()
                }),
                _ => {
                    dropped += 1;
                    None
                }
            }
        })
        .collect();
    (
        ImageAnnotation {
            regions,
            ..ann.clone()
        },
        dropped,
    )
}

/// Mean of the pixel centers covered by any region, or `None` when no pixel
/// is covered.
pub fn grasp_point_centroid(ann: &ImageAnnotation) -> Option<Point> {
    let (h, w) = (ann.height() as usize, ann.width() as usize);
    let mut covered = vec![false; h * w];
    for r in &ann.regions {
        for (row, col) in region_mask(&r.polygon, h, w) {
            covered[row * w + col] = true;
        }
    }
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (i, _) in covered.iter().enumerate().filter(|(_, &c)| c) {
        sx += (i % w) as f64 + 0.5;
        sy += (i / w) as f64 + 0.5;
        n += 1;
    }
    (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
}

fn pad_to(image: &RgbImage, h: u32, w: u32) -> RgbImage {
    let (iw, ih) = image.dimensions();
    if iw >= w && ih >= h {
        return image.clone();
    }
    let (nw, nh) = (iw.max(w), ih.max(h));
    RgbImage::from_fn(nw, nh, |x, y| {
        *image.get_pixel(x.min(iw - 1), y.min(ih - 1))
    })
}

/// Top-left corner `(x0, y0)` of the crop window centered on `c`, clamped to
/// the image.
pub fn crop_window(c: Point, img_w: u32, img_h: u32, size: u32) -> (u32, u32) {
    let clamp = |v: f64, n: u32| -> u32 {
        let max = n.saturating_sub(size) as f64;
        (v - size as f64 / 2.0).round().clamp(0.0, max) as u32
    };
    (clamp(c.x, img_w), clamp(c.y, img_h))
}

/// Cuts a `crop_size` square centered on the mean grasp point. Smaller
/// images are first padded by edge replication on the right and bottom.
pub fn centroid_crop(
    image: &RgbImage,
    ann: &ImageAnnotation,
    crop_size: u32,
) -> Result<(RgbImage, ImageAnnotation, AugmentWarnings), AugmentError> {
    check_size(image, ann)?;
    let mut warn = AugmentWarnings::default();
    let padded = pad_to(image, crop_size, crop_size);
    let (pw, ph) = padded.dimensions();
    let center = grasp_point_centroid(ann).unwrap_or_else(|| {
        warn.centroid_fallback = true;
        log::warn!(
            "{}: no grasp pixels, cropping about the image center",
            ann.image_id
        );
        image_center(ann)
    });
    let (x0, y0) = crop_window(center, pw, ph, crop_size);
    let cropped = image::imageops::crop_imm(&padded, x0, y0, crop_size, crop_size).to_image();
    let shifted = ImageAnnotation {
        size: [crop_size, crop_size],
        regions: ann
            .regions
            .iter()
            .map(|r| RegionAnnotation {
                polygon: r.polygon.translate(-(x0 as f64), -(y0 as f64)),
                ..r.clone()
            })
            .collect(),
        ..ann.clone()
    };
    let (clipped, dropped) = clip_to_image(&shifted);
    warn.dropped_regions += dropped;
    if dropped > 0 {
        log::warn!("{}: {dropped} regions fell outside the crop", ann.image_id);
    }
    Ok((cropped, clipped, warn))
}

/// Crop, rotate, zoom, then clip labels back into the frame.
pub fn augment(
    image: &RgbImage,
    ann: &ImageAnnotation,
    params: &AugmentParams,
) -> Result<(RgbImage, ImageAnnotation, AugmentWarnings), AugmentError> {
    let (img, a, mut warn) = centroid_crop(image, ann, params.crop_size)?;
    let (img, a) = rotate(&img, &a, params.rotation)?;
    let (img, a, w2) = zoom(&img, &a, params.zoom)?;
    warn.merge(w2);
    let (a, dropped) = clip_to_image(&a);
    warn.dropped_regions += dropped;
    Ok((img, a, warn))
}

/// Quarter-turn clockwise rotation of a square row-major plane.
pub fn rotate_plane_quarter<T: Copy>(plane: &[T], size: usize) -> Vec<T> {
    let mut out = plane.to_vec();
    for r in 0..size {
        for c in 0..size {
            out[c * size + (size - 1 - r)] = plane[r * size + c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grasp::AngleSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn gradient(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            Rgb([(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8])
        })
    }

    fn ann_with(
        h: u32,
        w: u32,
        polys: Vec<ConvexPolygon>,
        theta: f64,
        omega: f64,
    ) -> ImageAnnotation {
        ImageAnnotation {
            image_id: "a".into(),
            object_id: "o".into(),
            size: [h, w],
            regions: polys
                .into_iter()
                .map(|p| RegionAnnotation {
                    polygon: p,
                    angles: AngleSet::Angles(vec![theta]),
                    omega,
                })
                .collect(),
        }
    }

    #[test]
    fn crop_window_centered() {
        // 480 rows x 640 cols, region centered on (200, 200)
        let a = ann_with(
            480,
            640,
            vec![ConvexPolygon::aabb(190.0, 190.0, 210.0, 210.0)],
            0.0,
            30.0,
        );
        let img = gradient(640, 480);
        let (out, shifted, warn) = centroid_crop(&img, &a, 320).unwrap();
        assert_eq!(out.dimensions(), (320, 320));
        assert_eq!(*out.get_pixel(0, 0), *img.get_pixel(40, 40));
        let (lo, _) = shifted.regions[0].polygon.bounds();
        assert_eq!((lo.x, lo.y), (150.0, 150.0));
        assert_eq!(warn, AugmentWarnings::default());
    }

    #[test]
    fn crop_window_clamps() {
        let a = ann_with(
            480,
            640,
            vec![ConvexPolygon::aabb(5.0, 5.0, 15.0, 15.0)],
            0.0,
            30.0,
        );
        let (out, _, _) = centroid_crop(&gradient(640, 480), &a, 320).unwrap();
        assert_eq!(*out.get_pixel(0, 0), Rgb([0, 0, 0]));
        assert_eq!(
            crop_window(Point::new(630.0, 470.0), 640, 480, 320),
            (320, 160)
        );
    }

    #[test]
    fn crop_drops_far_regions() {
        let a = ann_with(
            480,
            640,
            vec![
                ConvexPolygon::aabb(100.0, 100.0, 140.0, 140.0),
                ConvexPolygon::aabb(600.0, 440.0, 602.0, 442.0),
            ],
            0.0,
            30.0,
        );
        let (_, out, warn) = centroid_crop(&gradient(640, 480), &a, 320).unwrap();
        assert_eq!(out.regions.len(), 1);
        assert_eq!(warn.dropped_regions, 1);
    }

    #[test]
    fn crop_without_regions_falls_back() {
        let a = ann_with(400, 400, vec![], 0.0, 30.0);
        let (_, _, warn) = centroid_crop(&gradient(400, 400), &a, 320).unwrap();
        assert!(warn.centroid_fallback);
    }

    #[test]
    fn crop_pads_small_images() {
        let a = ann_with(
            100,
            200,
            vec![ConvexPolygon::aabb(10.0, 10.0, 20.0, 20.0)],
            0.0,
            30.0,
        );
        let (out, ann, _) = centroid_crop(&gradient(200, 100), &a, 320).unwrap();
        assert_eq!(out.dimensions(), (320, 320));
        assert_eq!(
            *out.get_pixel(319, 319),
            *gradient(200, 100).get_pixel(199, 99)
        );
        assert_eq!(ann.size, [320, 320]);
    }

    #[test]
    fn half_turn_reflects_through_center() {
        let a = ann_with(
            320,
            320,
            vec![ConvexPolygon::aabb(100.0, 50.0, 130.0, 70.0)],
            0.0,
            30.0,
        );
        let (_, r) = rotate(&gradient(320, 320), &a, PI).unwrap();
        let (lo, hi) = r.regions[0].polygon.bounds();
        assert_eq!((lo.x, lo.y, hi.x, hi.y), (190.0, 250.0, 220.0, 270.0));
        assert_eq!(r.regions[0].angles, AngleSet::Angles(vec![PI]));
    }

    #[test]
    fn quarter_turn_moves_right_to_down() {
        let img = gradient(8, 8);
        let a = ann_with(
            8,
            8,
            vec![ConvexPolygon::aabb(6.0, 3.0, 8.0, 5.0)],
            0.0,
            30.0,
        );
        let (out, r) = rotate(&img, &a, FRAC_PI_2).unwrap();
        let (lo, hi) = r.regions[0].polygon.bounds();
        assert_eq!((lo.x, lo.y, hi.x, hi.y), (3.0, 6.0, 5.0, 8.0));
        // grasp pointing right now points down, i.e. 3π/2 counter-clockwise
        let AngleSet::Angles(v) = &r.regions[0].angles else {
            panic!()
        };
        assert!((v[0] - 1.5 * PI).abs() < 1e-12);
        // pixel (r, c) moves to (c, size-1-r)
        assert_eq!(*out.get_pixel(7 - 2, 5), *img.get_pixel(5, 2));
        assert_eq!(
            rotate_plane_quarter(
                img.as_raw()
                    .chunks(3)
                    .map(|p| p[0])
                    .collect::<Vec<_>>()
                    .as_slice(),
                8
            ),
            out.as_raw().chunks(3).map(|p| p[0]).collect::<Vec<_>>()
        );
    }

    #[test]
    fn zero_rotation_and_unit_zoom_are_identity() {
        let img = gradient(50, 40);
        let a = ann_with(
            40,
            50,
            vec![ConvexPolygon::aabb(1.0, 1.0, 9.0, 9.0)],
            1.0,
            30.0,
        );
        let (i2, a2) = rotate(&img, &a, 0.0).unwrap();
        assert_eq!(i2.as_raw(), img.as_raw());
        assert_eq!(a2, a);
        let (i3, a3, _) = zoom(&img, &a, 1.0).unwrap();
        assert_eq!(i3.as_raw(), img.as_raw());
        assert_eq!(a3, a);
    }

    #[test]
    fn zoom_scales_widths() {
        let img = gradient(100, 100);
        let a = ann_with(
            100,
            100,
            vec![ConvexPolygon::aabb(40.0, 40.0, 60.0, 60.0)],
            1.0,
            60.0,
        );
        let (_, z, w) = zoom(&img, &a, 2.0).unwrap();
        assert_eq!(z.regions[0].omega, 120.0);
        assert_eq!(w.width_clamps, 0);
        let (lo, hi) = z.regions[0].polygon.bounds();
        assert_eq!((lo.x, hi.x), (30.0, 70.0));
        assert_eq!(z.regions[0].angles, a.regions[0].angles);

        let a = ann_with(
            100,
            100,
            vec![ConvexPolygon::aabb(40.0, 40.0, 60.0, 60.0)],
            1.0,
            90.0,
        );
        let (_, z, w) = zoom(&img, &a, 2.0).unwrap();
        assert_eq!(z.regions[0].omega, WIDTH_SCALE);
        assert_eq!(w.width_clamps, 1);
        assert!(zoom(&img, &a, 0.0).is_err());
    }

    #[test]
    fn size_mismatch_rejected() {
        let a = ann_with(10, 10, vec![], 0.0, 1.0);
        assert!(matches!(
            rotate(&gradient(12, 10), &a, 1.0),
            Err(AugmentError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn params_deterministic() {
        let cfg = AugmentConfig::default();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| sample_params(&mut rng, &cfg))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
        let fixed = AugmentConfig {
            zoom_min: 1.0,
            zoom_max: 1.0,
            ..cfg
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| sample_params(&mut rng, &fixed).zoom == 1.0));
        assert!(AugmentConfig {
            zoom_min: 2.0,
            zoom_max: 1.0,
            ..cfg
        }
        .check()
        .is_err());
    }

    #[test]
    fn rotation_draws_look_uniform() {
        // one-sample Kolmogorov-Smirnov statistic against U[0, 2π)
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let cfg = AugmentConfig::default();
        let mut xs: Vec<f64> = (0..10_000)
            .map(|_| sample_params(&mut rng, &cfg).rotation / TAU)
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS = {ks}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn zoom_round_trip(s in 0.5..2.0f64, x in 20.0..60.0f64, y in 20.0..60.0f64) {
                let img = gradient(100, 100);
                let a = ann_with(100, 100, vec![ConvexPolygon::aabb(x, y, x + 10.0, y + 15.0)], 2.0, 40.0);
                let (i1, a1, _) = zoom(&img, &a, s).unwrap();
                let (_, a2, _) = zoom(&i1, &a1, 1.0 / s).unwrap();
                for (p, q) in a.regions[0].polygon.vertices().iter().zip(a2.regions[0].polygon.vertices()) {
                    prop_assert!(p.dist(*q) < 1e-6);
                }
                prop_assert!((a2.regions[0].omega - 40.0).abs() < 1e-6);
            }

            #[test]
            fn angles_stay_normalized(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cfg = AugmentConfig { crop_size: 64, ..AugmentConfig::default() };
                let img = gradient(64, 64);
                let mut a = ann_with(64, 64, vec![ConvexPolygon::aabb(20.0, 20.0, 40.0, 30.0)], 6.25, 40.0);
                let mut cur = img;
                for _ in 0..5 {
                    let p = sample_params(&mut rng, &cfg);
                    let (i, b, _) = augment(&cur, &a, &p).unwrap();
                    cur = i;
                    a = b;
                    for r in &a.regions {
                        if let AngleSet::Angles(v) = &r.angles {
                            prop_assert!(v.iter().all(|t| (0.0..TAU).contains(t)));
                        }
                    }
                }
            }
        }
    }
}
