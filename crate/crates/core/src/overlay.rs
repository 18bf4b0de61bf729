//! Triangle overlays on RGB images for inspection and figures.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::decode::ScoredGrasp;
use crate::geometry::Point;

/// Single-finger sides.
pub const APEX_COLOR: Rgb<u8> = Rgb([230, 40, 40]);
/// Two-finger side.
pub const BASE_COLOR: Rgb<u8> = Rgb([40, 90, 230]);

fn pixel_of(p: Point) -> (i64, i64) {
    (p.x.floor() as i64, p.y.floor() as i64)
}

/// Bresenham segment between the pixels containing `a` and `b`, clipped to
/// the image.
pub fn draw_segment(img: &mut RgbImage, a: Point, b: Point, color: Rgb<u8>) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (mut x0, mut y0) = pixel_of(a);
    let (x1, y1) = pixel_of(b);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    // guard against absurd coordinates from unclipped grasps
    let mut budget = (dx - dy + 1).min(1 << 22);
    loop {
        if (0..w).contains(&x0) && (0..h).contains(&y0) {
            img.put_pixel(x0 as u32, y0 as u32, color);
        }
        budget -= 1;
        if (x0 == x1 && y0 == y1) || budget < 0 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

pub fn draw_grasps(image: &RgbImage, grasps: &[ScoredGrasp]) -> RgbImage {
    let mut out = image.clone();
    for g in grasps {
        let [apex, b1, b2] = g.grasp.vertices();
        draw_segment(&mut out, apex, b1, APEX_COLOR);
        draw_segment(&mut out, apex, b2, APEX_COLOR);
        draw_segment(&mut out, b1, b2, BASE_COLOR);
    }
    out
}

pub fn render_overlay(
    image: &RgbImage,
    grasps: &[ScoredGrasp],
    out: impl AsRef<Path>,
) -> Result<(), image::ImageError> {
    draw_grasps(image, grasps).save_with_format(out, image::ImageFormat::Png)
}
