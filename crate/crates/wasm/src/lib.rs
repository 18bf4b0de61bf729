//! Browser bindings for three interactive views: triangle vs rectangle IOU
//! under an offset, label rasterization under rotation, and multi-peak
//! decoding of a confidence map.
//!
//! The plain functions are ordinary Rust and are tested natively; the
//! `#[wasm_bindgen]` wrappers only marshal flat arrays.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use trigrasp::augment::rotate;
use trigrasp::dataset::{rasterize, synth_fixture};
use trigrasp::{
    iou, is_correct, multi_grasps, AngleCodec, PredictionMaps, ScoredGrasp, TriangleGrasp,
};

/// Bin count used by the label and peak views unless the caller picks one.
pub const DEMO_K: usize = 36;

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetComparison {
    pub triangle_iou: f64,
    pub rect_iou: f64,
    /// Whether the moved grasp still passes the rectangle metric.
    pub correct: bool,
    pub triangles: [[f64; 6]; 2],
    pub rects: [[f64; 8]; 2],
}

fn flat<const N: usize>(pts: impl IntoIterator<Item = trigrasp::Point>) -> [f64; N] {
    let mut out = [0.0; N];
    for (i, p) in pts.into_iter().enumerate() {
        out[2 * i] = p.x;
        out[2 * i + 1] = p.y;
    }
    out
}

/// Moves a grasp `along` its axis and `across` it, and turns it by
/// `dtheta_deg`, then compares the two shapes.
#[allow(clippy::too_many_arguments)]
pub fn compare_offset(
    cx: f64,
    cy: f64,
    omega: f64,
    theta_deg: f64,
    d: f64,
    along: f64,
    across: f64,
    dtheta_deg: f64,
) -> Result<OffsetComparison, String> {
    let a =
        TriangleGrasp::new(cx, cy, omega, theta_deg.to_radians(), d).map_err(|e| e.to_string())?;
    let u = a.axis();
    let (x, y) = (
        cx + u.x * along - u.y * across,
        cy + u.y * along + u.x * across,
    );
    let b = TriangleGrasp::new(x, y, omega, (theta_deg + dtheta_deg).to_radians(), d)
        .map_err(|e| e.to_string())?;
    let (ra, rb) = (a.to_rect(), b.to_rect());
    Ok(OffsetComparison {
        triangle_iou: iou(&a.polygon(), &b.polygon()),
        rect_iou: iou(&ra.polygon(), &rb.polygon()),
        correct: is_correct(&b, &[ra]).correct,
        triangles: [flat(a.vertices()), flat(b.vertices())],
        rects: [flat(ra.corners()), flat(rb.corners())],
    })
}

fn hue_rgb(h: f64) -> [u8; 3] {
    let h = h.rem_euclid(1.0) * 6.0;
    let x = 1.0 - ((h % 2.0) - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [(r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8]
}

/// RGBA view of one synthetic image rotated clockwise by `rotation_deg`:
/// the photo dimmed, graspable pixels tinted by the hue of their first
/// angle bin (white when every bin is set).
pub fn render_labels(seed: u64, size: u32, k: usize, rotation_deg: f64) -> Result<Vec<u8>, String> {
    let codec = AngleCodec::new(k).map_err(|e| e.to_string())?;
    let item = synth_fixture(1, size, size, seed).remove(0);
    let (img, ann) = rotate(&item.image, &item.annotation, rotation_deg.to_radians())
        .map_err(|e| e.to_string())?;
    let (labels, _) = rasterize(&ann, codec).map_err(|e| e.to_string())?;
    let n = labels.plane_len();
    let mut out = Vec::with_capacity(4 * n);
    for (i, px) in img.pixels().enumerate() {
        let rgb = if labels.confidence[i] == 1.0 {
            let hot: Vec<usize> = (0..k).filter(|&b| labels.angle[b * n + i] == 1.0).collect();
            if hot.len() == k {
                [255, 255, 255]
            } else {
                hue_rgb(hot[0] as f64 / k as f64)
            }
        } else {
            px.0.map(|c| c / 2)
        };
        out.extend_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
    }
    Ok(out)
}

/// A confidence map made of Gaussian blobs, each with its own heading.
pub struct BlobField {
    pub maps: PredictionMaps,
}

impl BlobField {
    pub fn new(seed: u64, size: usize, blobs: usize) -> Self {
        let codec = AngleCodec::new(DEMO_K).expect("k > 0");
        let mut maps = PredictionMaps::zeros(codec, size, size);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec: Vec<(f64, f64, f64, f64, usize, f32)> = (0..blobs)
            .map(|_| {
                (
                    rng.random_range(0.1..0.9) * size as f64,
                    rng.random_range(0.1..0.9) * size as f64,
                    rng.random_range(0.04..0.12) * size as f64,
                    rng.random_range(0.55..1.0),
                    rng.random_range(0..DEMO_K),
                    rng.random_range(0.15..0.6),
                )
            })
            .collect();
        let n = size * size;
        for r in 0..size {
            for c in 0..size {
                let (x, y) = (c as f64 + 0.5, r as f64 + 0.5);
                let mut best = (0.0, 0usize);
                for (j, &(bx, by, s, amp, _, _)) in spec.iter().enumerate() {
                    let v = amp * (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * s * s)).exp();
                    if v > best.0 {
                        best = (v, j);
                    }
                }
                let (_, _, _, _, bin, width) = spec[best.1];
                let i = r * size + c;
                maps.set_graspable(r, c, best.0 as f32);
                maps.angle[bin * n + i] = 1.0;
                maps.grasp_width[i] = width;
            }
        }
        Self { maps }
    }

    /// RGBA heat map of the graspable plane.
    pub fn heatmap(&self) -> Vec<u8> {
        self.maps
            .graspable()
            .iter()
            .flat_map(|&v| {
                let t = v.clamp(0.0, 1.0);
                [
                    (255.0 * t) as u8,
                    (80.0 * t) as u8,
                    (255.0 * (1.0 - t)) as u8 / 3,
                    255,
                ]
            })
            .collect()
    }

    pub fn peaks(&self, threshold: f64, radius: usize, d: f64) -> Vec<ScoredGrasp> {
        multi_grasps(&self.maps, threshold, radius, d).expect("shapes are consistent")
    }
}

fn triangles_flat(grasps: &[ScoredGrasp]) -> Vec<f64> {
    grasps
        .iter()
        .flat_map(|g| {
            let mut v = flat::<6>(g.grasp.vertices()).to_vec();
            v.push(g.score);
            v
        })
        .collect()
}

/// `[triangle_iou, rect_iou, correct, tri_a(6), tri_b(6), rect_a(8), rect_b(8)]`.
#[wasm_bindgen(js_name = compareOffset)]
#[allow(clippy::too_many_arguments)]
pub fn compare_offset_js(
    cx: f64,
    cy: f64,
    omega: f64,
    theta_deg: f64,
    d: f64,
    along: f64,
    across: f64,
    dtheta_deg: f64,
) -> Result<Vec<f64>, JsError> {
    let c = compare_offset(cx, cy, omega, theta_deg, d, along, across, dtheta_deg)
        .map_err(|e| JsError::new(&e))?;
    let mut out = vec![c.triangle_iou, c.rect_iou, c.correct as u8 as f64];
    out.extend(c.triangles.iter().flatten());
    out.extend(c.rects.iter().flatten());
    Ok(out)
}

#[wasm_bindgen(js_name = renderLabels)]
pub fn render_labels_js(
    seed: u32,
    size: u32,
    k: usize,
    rotation_deg: f64,
) -> Result<Vec<u8>, JsError> {
    render_labels(seed as u64, size, k, rotation_deg).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub struct PeakDemo {
    field: BlobField,
}

#[wasm_bindgen]
impl PeakDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, size: usize, blobs: usize) -> PeakDemo {
        PeakDemo {
            field: BlobField::new(seed as u64, size.max(1), blobs),
        }
    }

    pub fn heatmap(&self) -> Vec<u8> {
        self.field.heatmap()
    }

    /// `[x0, y0, x1, y1, x2, y2, score]` per peak, apex first.
    pub fn peaks(&self, threshold: f64, radius: usize, d: f64) -> Vec<f64> {
        triangles_flat(&self.field.peaks(threshold, radius, d))
    }
}
