//! Prediction maps and grasp extraction.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::LabelMaps;
use crate::gmap::{Gmap, GmapHeader, MapKind};
use crate::grasp::{unscale_width, AngleCodec, TriangleGrasp};

/// Allowed deviation of `p(not graspable) + p(graspable)` from 1.
pub const CONF_SUM_TOL: f32 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("expected a prediction map, got a label map")]
    NotPrediction,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Network outputs: a 2-channel softmax confidence, `k` angle scores and a
/// width plane, all `H × W`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMaps {
    pub codec: AngleCodec,
    pub height: usize,
    pub width: usize,
    /// `[not graspable plane, graspable plane]`, channel-major.
    pub conf: Vec<f32>,
    pub angle: Vec<f32>,
    pub grasp_width: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub pixel: Option<(usize, usize)>,
    pub msg: String,
}

impl PredictionMaps {
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn graspable(&self) -> &[f32] {
        &self.conf[self.plane_len()..]
    }

    pub fn graspable_mut(&mut self) -> &mut [f32] {
        let n = self.plane_len();
        &mut self.conf[n..]
    }

    pub fn zeros(codec: AngleCodec, height: usize, width: usize) -> Self {
        let n = height * width;
        let mut conf = vec![0.0; 2 * n];
        conf[..n].fill(1.0);
        Self {
            codec,
            height,
            width,
            conf,
            angle: vec![0.0; codec.k() * n],
            grasp_width: vec![0.0; n],
        }
    }

    /// A perfect prediction of the given labels.
    pub fn from_labels(labels: &LabelMaps) -> Self {
        let n = labels.plane_len();
        let mut conf = Vec::with_capacity(2 * n);
        conf.extend(labels.confidence.iter().map(|&c| 1.0 - c));
        conf.extend_from_slice(&labels.confidence);
        Self {
            codec: labels.codec,
            height: labels.height,
            width: labels.width,
            conf,
            angle: labels.angle.clone(),
            grasp_width: labels.grasp_width.clone(),
        }
    }

    /// Writes `p` into the graspable plane and `1 - p` into the other.
    pub fn set_graspable(&mut self, row: usize, col: usize, p: f32) {
        let n = self.plane_len();
        let i = row * self.width + col;
        self.conf[i] = 1.0 - p;
        self.conf[n + i] = p;
    }

    fn check_shapes(&self) -> Result<(), DecodeError> {
        let n = self.plane_len();
        if n == 0 {
            return Err(DecodeError::Shape("empty map".into()));
        }
        if self.conf.len() != 2 * n {
            return Err(DecodeError::Shape(format!(
                "confidence has {} values, expected {}",
                self.conf.len(),
                2 * n
            )));
        }
        if self.angle.len() != self.codec.k() * n {
            return Err(DecodeError::Shape(format!(
                "angle stack has {} values, expected {}",
                self.angle.len(),
                self.codec.k() * n
            )));
        }
        if self.grasp_width.len() != n {
            return Err(DecodeError::Shape(format!(
                "width plane has {} values, expected {n}",
                self.grasp_width.len()
            )));
        }
        Ok(())
    }

    /// Range and normalization checks. At most `limit` issues are returned.
    pub fn validate(&self, limit: usize) -> Vec<Issue> {
        let mut issues = Vec::new();
        if let Err(e) = self.check_shapes() {
            issues.push(Issue {
                pixel: None,
                msg: e.to_string(),
            });
            return issues;
        }
        let n = self.plane_len();
        let at = |i: usize| Some((i / self.width, i % self.width));
        for i in 0..n {
            if issues.len() >= limit {
                break;
            }
            let (a, b) = (self.conf[i], self.conf[n + i]);
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                issues.push(Issue {
                    pixel: at(i),
                    msg: format!("confidence ({a}, {b}) outside [0, 1]"),
                });
            } else if (a + b - 1.0).abs() > CONF_SUM_TOL {
                issues.push(Issue {
                    pixel: at(i),
                    msg: format!("confidence sums to {}", a + b),
                });
            }
            if !(0.0..1.0).contains(&self.grasp_width[i]) {
                issues.push(Issue {
                    pixel: at(i),
                    msg: format!("width {} outside [0, 1)", self.grasp_width[i]),
                });
            }
        }
        if let Some(j) = self.angle.iter().position(|v| !(0.0..=1.0).contains(v)) {
            if issues.len() < limit {
                issues.push(Issue {
                    pixel: at(j % n),
                    msg: format!(
                        "angle score {} outside [0, 1] in bin {}",
                        self.angle[j],
                        j / n
                    ),
                });
            }
        }
        issues
    }

    pub fn to_gmap(&self) -> Gmap {
        let header = GmapHeader::new(
            MapKind::Prediction,
            self.codec.k() as u32,
            self.height as u32,
            self.width as u32,
        );
        let mut data = Vec::with_capacity(header.payload_len());
        data.extend_from_slice(&self.conf);
        data.extend_from_slice(&self.angle);
        data.extend_from_slice(&self.grasp_width);
        Gmap::new(header, data).expect("prediction layout matches header")
    }

    pub fn from_gmap(map: &Gmap) -> Result<Self, DecodeError> {
        let h = map.header;
        if h.kind != MapKind::Prediction {
            return Err(DecodeError::NotPrediction);
        }
        let n = h.plane_len();
        let k = h.k as usize;
        let codec = AngleCodec::new(k).map_err(|e| DecodeError::Shape(e.to_string()))?;
        Ok(Self {
            codec,
            height: h.height as usize,
            width: h.width as usize,
            conf: map.data[..2 * n].to_vec(),
            angle: map.data[2 * n..(2 + k) * n].to_vec(),
            grasp_width: map.data[(2 + k) * n..].to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredGrasp {
    pub grasp: TriangleGrasp,
    pub score: f64,
    /// Source pixel `(row, col)`; the grasp sits at its center.
    pub pixel: (usize, usize),
}

fn decode_at(p: &PredictionMaps, i: usize, base: f64) -> ScoredGrasp {
    let n = p.plane_len();
    let (row, col) = (i / p.width, i % p.width);
    let mut best_bin = 0;
    let mut best = f32::NEG_INFINITY;
    for b in 0..p.codec.k() {
        let v = p.angle[b * n + i];
        if v > best {
            best = v;
            best_bin = b;
        }
    }
    let theta = p.codec.decode(best_bin).expect("bin below k");
    let omega = unscale_width(p.grasp_width[i]).max(0.0);
    let grasp = TriangleGrasp::new(col as f64 + 0.5, row as f64 + 0.5, omega, theta, base)
        .expect("decoded fields are finite");
    ScoredGrasp {
        grasp,
        score: p.graspable()[i] as f64,
        pixel: (row, col),
    }
}

/// Highest-confidence pixel above `threshold` (ties go to the first pixel in
/// row-major order). `None` means nothing cleared the threshold and the
/// scene should be re-imaged.
pub fn best_grasp(
    p: &PredictionMaps,
    threshold: f64,
    base: f64,
) -> Result<Option<ScoredGrasp>, DecodeError> {
    p.check_shapes()?;
    let mut best: Option<(usize, f32)> = None;
    for (i, &v) in p.graspable().iter().enumerate() {
        if (v as f64) > threshold && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    Ok(best.map(|(i, _)| decode_at(p, i, base)))
}

/// Local peaks of the graspable plane: pixels above `threshold` that beat
/// every other pixel within Chebyshev distance `radius`, where equal scores
/// are won by the pixel earlier in row-major order. Sorted by score
/// descending, then row-major.
pub fn multi_grasps(
    p: &PredictionMaps,
    threshold: f64,
    radius: usize,
    base: f64,
) -> Result<Vec<ScoredGrasp>, DecodeError> {
    p.check_shapes()?;
    let (h, w) = (p.height, p.width);
    let g = p.graspable();
    let radius = radius.max(1);
    let mut peaks = Vec::new();
    for r in 0..h {
        'pixel: for c in 0..w {
            let i = r * w + c;
            let v = g[i];
            if (v as f64) <= threshold {
                continue;
            }
            for rr in r.saturating_sub(radius)..(r + radius + 1).min(h) {
                for cc in c.saturating_sub(radius)..(c + radius + 1).min(w) {
                    let j = rr * w + cc;
                    if j == i {
                        continue;
                    }
                    if g[j] > v || (g[j] == v && j < i) {
                        continue 'pixel;
                    }
                }
            }
            peaks.push(i);
        }
    }
    peaks.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
    Ok(peaks.into_iter().map(|i| decode_at(p, i, base)).collect())
}
