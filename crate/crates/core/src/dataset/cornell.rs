//! Cornell `*cpos.txt` rectangles: one `x y` pair per line, four lines per
//! rectangle. The first edge (corner 0 → 1) runs along the gripper opening.

use std::f64::consts::{FRAC_PI_2, PI};

use super::DatasetError;
use crate::geometry::Point;
use crate::grasp::{fold_half_turn, RectGrasp};

#[derive(Debug, Clone, PartialEq)]
pub struct CornellParse {
    pub rects: Vec<RectGrasp>,
    /// Groups dropped because a coordinate was NaN.
    pub skipped_nan: usize,
}

fn rect_from_corners(c: &[Point; 4]) -> RectGrasp {
    let cx = c.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = c.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let e01 = c[1] - c[0];
    let e12 = c[2] - c[1];
    let w = e01.x.hypot(e01.y);
    let h = e12.x.hypot(e12.y);
    let mut phi = fold_half_turn((-e01.y).atan2(e01.x));
    // a square has no preferred axis; fold so any starting corner agrees
    if (w - h).abs() <= 1e-9 * w.max(h).max(1.0) {
        phi = phi.rem_euclid(FRAC_PI_2);
        if FRAC_PI_2 - phi < 1e-12 {
            phi = 0.0;
        }
    }
    if PI - phi < 1e-12 {
        phi = 0.0;
    }
    RectGrasp { cx, cy, w, h, phi }
}

pub fn parse_cornell_rects(text: &str) -> Result<CornellParse, DatasetError> {
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(DatasetError::Cornell {
                line: i + 1,
                msg: format!("expected 2 numbers, found {}", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| DatasetError::Cornell {
                line: i + 1,
                msg: format!("{s:?}: {e}"),
            })
        };
        pts.push(Point::new(parse(fields[0])?, parse(fields[1])?));
    }
    if pts.len() % 4 != 0 {
        return Err(DatasetError::Cornell {
            line: pts.len(),
            msg: format!("{} corner lines is not a multiple of 4", pts.len()),
        });
    }
    let mut out = CornellParse {
        rects: Vec::with_capacity(pts.len() / 4),
        skipped_nan: 0,
    };
    for g in pts.chunks_exact(4) {
        if g.iter().any(|p| p.x.is_nan() || p.y.is_nan()) {
            out.skipped_nan += 1;
            continue;
        }
        out.rects.push(rect_from_corners(&[g[0], g[1], g[2], g[3]]));
    }
    if out.skipped_nan > 0 {
        log::warn!("skipped {} rectangles containing NaN", out.skipped_nan);
    }
    Ok(out)
}

/// Writes rectangles back in corner-line form.
pub fn rects_to_cornell(rects: &[RectGrasp]) -> String {
    let mut s = String::new();
    for r in rects {
        for p in r.corners() {
            s.push_str(&format!("{} {}\n", p.x, p.y));
        }
    }
    s
}
