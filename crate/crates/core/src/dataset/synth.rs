//! Desk-scale synthetic corpus: bars and discs on a plain background with
//! analytically known grasp regions.
//!
//! A bar is grasped across its thickness anywhere along a thin strip on its
//! centerline, from either side. A disc is grasped through its center from
//! any direction. Objects appear in four poses each so that object-wise
//! splits have something to group.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ImageAnnotation, RegionAnnotation};
use crate::geometry::{ConvexPolygon, Point};
use crate::grasp::{normalize_angle, AngleSet, RectGrasp, WIDTH_SCALE};

pub const POSES_PER_OBJECT: usize = 4;

#[derive(Debug, Clone)]
pub struct SynthImage {
    pub annotation: ImageAnnotation,
    pub image: RgbImage,
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Bar { length: f64, thickness: f64 },
    Disc { radius: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Object {
    shape: Shape,
    color: [u8; 3],
}

fn make_object(rng: &mut ChaCha8Rng, scale: f64) -> Object {
    let shape = if rng.random::<f64>() < 0.7 {
        Shape::Bar {
            length: rng.random_range(80.0..180.0) * scale,
            thickness: rng.random_range(10.0..36.0) * scale,
        }
    } else {
        Shape::Disc {
            radius: rng.random_range(14.0..40.0) * scale,
        }
    };
    let color = [
        rng.random_range(20..120),
        rng.random_range(20..120),
        rng.random_range(60..200),
    ];
    Object { shape, color }
}

fn regular_polygon(c: Point, r: f64, n: usize) -> ConvexPolygon {
    let pts = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            Point::new(c.x + r * a.cos(), c.y - r * a.sin())
        })
        .collect();
    ConvexPolygon::new(pts).expect("regular polygon is convex")
}

/// Grasp region and body outline of a bar whose long axis points at `alpha`.
fn bar_region(
    c: Point,
    alpha: f64,
    length: f64,
    thickness: f64,
) -> (RegionAnnotation, ConvexPolygon) {
    let body = RectGrasp::new(c.x, c.y, length, thickness, alpha).polygon();
    let strip_len = (length - 20.0).max(4.0);
    let strip = RectGrasp::new(c.x, c.y, strip_len, 4.0, alpha).polygon();
    let region = RegionAnnotation {
        polygon: strip,
        angles: AngleSet::Angles(vec![
            normalize_angle(alpha + FRAC_PI_2),
            normalize_angle(alpha + 3.0 * FRAC_PI_2),
        ]),
        omega: (1.5 * thickness).min(WIDTH_SCALE),
    };
    (region, body)
}

fn place(obj: &Object, rng: &mut ChaCha8Rng, h: u32, w: u32) -> (RegionAnnotation, ConvexPolygon) {
    let reach = match obj.shape {
        Shape::Bar { length, thickness } => 0.5 * length.hypot(thickness),
        Shape::Disc { radius } => radius,
    } + 2.0;
    let span = |n: u32| {
        let lo = reach.min(n as f64 / 2.0);
        let hi = (n as f64 - reach).max(lo + 1e-6);
        (lo, hi)
    };
    let (x0, x1) = span(w);
    let (y0, y1) = span(h);
    let c = Point::new(rng.random_range(x0..x1), rng.random_range(y0..y1));
    let alpha = rng.random_range(0.0..PI);
    match obj.shape {
        Shape::Bar { length, thickness } => bar_region(c, alpha, length, thickness),
        Shape::Disc { radius } => {
            let region = RegionAnnotation {
                polygon: regular_polygon(c, (radius / 3.0).max(3.0), 16),
                angles: AngleSet::Any,
                omega: (2.5 * radius).min(WIDTH_SCALE),
            };
            (region, regular_polygon(c, radius, 64))
        }
    }
}

fn background(h: u32, w: u32, seed: u64) -> RgbImage {
    let tint = (seed % 23) as u32;
    RgbImage::from_fn(w, h, |x, y| {
        let v = 170 + ((x * 7 + y * 13 + tint) % 19) as u8 + (y * 20 / h.max(1)) as u8;
        Rgb([v, v, v.saturating_sub(10)])
    })
}

fn paint(img: &mut RgbImage, body: &ConvexPolygon, color: [u8; 3]) {
    let (lo, hi) = body.bounds();
    let (w, h) = img.dimensions();
    let c0 = lo.x.floor().max(0.0) as u32;
    let r0 = lo.y.floor().max(0.0) as u32;
    let c1 = (hi.x.ceil().max(0.0) as u32).min(w);
    let r1 = (hi.y.ceil().max(0.0) as u32).min(h);
    for r in r0..r1 {
        for c in c0..c1 {
            if body.contains(Point::new(c as f64 + 0.5, r as f64 + 0.5)) {
                img.put_pixel(c, r, Rgb(color));
            }
        }
    }
}

/// `count` images of size `height × width`, deterministic in `seed`.
pub fn synth_fixture(count: usize, height: u32, width: u32, seed: u64) -> Vec<SynthImage> {
    let scale = (height.min(width) as f64 / 320.0).min(1.0);
    let n_objects = count.div_ceil(POSES_PER_OBJECT).max(1);
    let objects: Vec<Object> = (0..n_objects)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * j as u64);
            make_object(&mut rng, scale)
        })
        .collect();
    (0..count)
        .map(|i| {
            let j = i / POSES_PER_OBJECT;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * i as u64 + 1);
            let (region, body) = place(&objects[j], &mut rng, height, width);
            let mut image = background(height, width, seed.wrapping_add(i as u64));
            paint(&mut image, &body, objects[j].color);
            SynthImage {
                annotation: ImageAnnotation {
                    image_id: format!("synth-{i:04}"),
                    object_id: format!("obj-{j:03}"),
                    size: [height, width],
                    regions: vec![region],
                },
                image,
            }
        })
        .collect()
}
