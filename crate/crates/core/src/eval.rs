//! Rectangle-metric scoring of decoded grasps and split-level accuracy.
//!
//! A prediction is correct when some ground-truth grasp lies within 30° of
//! it and the two rectangles overlap with IOU above 0.25.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::ImageAnnotation;
use crate::decode::{best_grasp, PredictionMaps};
use crate::geometry::iou;
use crate::gmap::read_gmap;
use crate::grasp::{circular_diff, fold_half_turn, RectGrasp, TriangleGrasp, DEFAULT_BASE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AnglePeriod {
    /// Compare orientations only (legacy rectangle metric).
    #[default]
    #[serde(rename = "pi")]
    HalfTurn,
    /// Compare directions, distinguishing apex from base.
    #[serde(rename = "2pi")]
    FullTurn,
}

impl std::str::FromStr for AnglePeriod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pi" => Ok(AnglePeriod::HalfTurn),
            "2pi" => Ok(AnglePeriod::FullTurn),
            other => Err(format!(
                "angle period must be \"pi\" or \"2pi\", got {other:?}"
            )),
        }
    }
}

/// A ground-truth grasp. Cornell rectangles carry no heading; grasps derived
/// from region annotations do.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub rect: RectGrasp,
    pub heading: Option<f64>,
}

impl From<RectGrasp> for GroundTruth {
    fn from(rect: RectGrasp) -> Self {
        Self {
            rect,
            heading: None,
        }
    }
}

impl From<&TriangleGrasp> for GroundTruth {
    fn from(g: &TriangleGrasp) -> Self {
        Self {
            rect: g.to_rect(),
            heading: Some(g.theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub max_angle_diff: f64,
    pub min_iou: f64,
    pub angle_period: AnglePeriod,
}

impl Default for Metric {
    fn default() -> Self {
        Self {
            max_angle_diff: 30f64.to_radians(),
            min_iou: 0.25,
            angle_period: AnglePeriod::HalfTurn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub correct: bool,
    pub matched: Option<usize>,
}

impl Metric {
    fn angle_diff(&self, pred: &TriangleGrasp, gt: &GroundTruth) -> f64 {
        match (self.angle_period, gt.heading) {
            (AnglePeriod::FullTurn, Some(h)) => circular_diff(pred.theta, h, TAU),
            _ => circular_diff(fold_half_turn(pred.theta), gt.rect.phi, PI),
        }
    }

    /// First ground truth satisfying both the angle and the IOU test.
    pub fn judge(&self, pred: &TriangleGrasp, gts: &[GroundTruth]) -> Verdict {
        let pred_poly = pred.to_rect().polygon();
        let pred_rect = pred.to_rect();
        for (i, gt) in gts.iter().enumerate() {
            if self.angle_diff(pred, gt) >= self.max_angle_diff {
                continue;
            }
            // rectangles whose centers are farther apart than their combined
            // half-diagonals cannot overlap
            let reach = 0.5 * (pred_rect.w.hypot(pred_rect.h) + gt.rect.w.hypot(gt.rect.h));
            if (pred.x - gt.rect.cx).hypot(pred.y - gt.rect.cy) > reach {
                continue;
            }
            if iou(&pred_poly, &gt.rect.polygon()) > self.min_iou {
                return Verdict {
                    correct: true,
                    matched: Some(i),
                };
            }
        }
        Verdict {
            correct: false,
            matched: None,
        }
    }
}

/// The default metric against headingless rectangles.
pub fn is_correct(pred: &TriangleGrasp, gts: &[RectGrasp]) -> Verdict {
    let gts: Vec<GroundTruth> = gts.iter().copied().map(GroundTruth::from).collect();
    Metric::default().judge(pred, &gts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub threshold: f64,
    pub base: f64,
    pub metric: Metric,
    /// Grid spacing (px) when sampling ground-truth grasps from regions.
    pub gt_spacing: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            base: DEFAULT_BASE,
            metric: Metric::default(),
            gt_spacing: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    Incorrect,
    /// No pixel cleared the confidence threshold.
    NoGrasp,
    MissingPrediction,
    InvalidPrediction,
    NoGroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageResult {
    pub image_id: String,
    pub outcome: Outcome,
    pub best: Option<TriangleGrasp>,
    pub score: Option<f64>,
    pub matched: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub total: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub no_grasp: usize,
    pub missing: usize,
    pub invalid: usize,
    pub no_ground_truth: usize,
}

impl Counts {
    fn add(&mut self, o: Outcome) {
        self.total += 1;
        match o {
            Outcome::Correct => self.correct += 1,
            Outcome::Incorrect => self.incorrect += 1,
            Outcome::NoGrasp => self.no_grasp += 1,
            Outcome::MissingPrediction => self.missing += 1,
            Outcome::InvalidPrediction => self.invalid += 1,
            Outcome::NoGroundTruth => self.no_ground_truth += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub seconds: f64,
    pub images_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub k: Option<usize>,
    pub per_image: Vec<ImageResult>,
    pub counts: Counts,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// Scores one prediction against sampled ground truth.
pub fn evaluate_image(
    image_id: &str,
    pred: Result<PredictionMaps, String>,
    gts: &[GroundTruth],
    cfg: &EvalConfig,
) -> ImageResult {
    let mut res = ImageResult {
        image_id: image_id.to_string(),
        outcome: Outcome::Incorrect,
        best: None,
        score: None,
        matched: None,
        detail: None,
    };
    let maps = match pred {
        Ok(m) => m,
        Err(msg) => {
            res.outcome = Outcome::MissingPrediction;
            res.detail = Some(msg);
            return res;
        }
    };
    let issues = maps.validate(1);
    if let Some(first) = issues.first() {
        res.outcome = Outcome::InvalidPrediction;
        res.detail = Some(first.msg.clone());
        return res;
    }
    let best = match best_grasp(&maps, cfg.threshold, cfg.base) {
        Ok(Some(b)) => b,
        Ok(None) => {
            res.outcome = Outcome::NoGrasp;
            return res;
        }
        Err(e) => {
            res.outcome = Outcome::InvalidPrediction;
            res.detail = Some(e.to_string());
            return res;
        }
    };
    res.best = Some(best.grasp);
    res.score = Some(best.score);
    if gts.is_empty() {
        res.outcome = Outcome::NoGroundTruth;
        return res;
    }
    let v = cfg.metric.judge(&best.grasp, gts);
    res.matched = v.matched;
    res.outcome = if v.correct {
        Outcome::Correct
    } else {
        Outcome::Incorrect
    };
    res
}

fn assemble(cfg: &EvalConfig, per_image: Vec<ImageResult>, k: Option<usize>) -> EvalReport {
    let mut counts = Counts::default();
    for r in &per_image {
        counts.add(r.outcome);
    }
    let accuracy = if counts.total == 0 {
        0.0
    } else {
        counts.correct as f64 / counts.total as f64
    };
    EvalReport {
        config: *cfg,
        k,
        per_image,
        counts,
        accuracy,
        timing: None,
    }
}

/// Evaluates `<pred_dir>/<image_id>.gmap` for every test id. Missing or
/// malformed predictions count as failures; the run continues.
pub fn evaluate_split(
    pred_dir: &Path,
    annotations: &[ImageAnnotation],
    test_ids: &[String],
    cfg: &EvalConfig,
) -> EvalReport {
    let started = Instant::now();
    let by_id: HashMap<&str, &ImageAnnotation> = annotations
        .iter()
        .map(|a| (a.image_id.as_str(), a))
        .collect();
    let work = |id: &String| -> (ImageResult, Option<usize>) {
        let path = pred_dir.join(format!("{id}.gmap"));
        let pred = read_gmap(&path)
            .map_err(|e| e.to_string())
            .and_then(|g| PredictionMaps::from_gmap(&g).map_err(|e| e.to_string()));
        let k = pred.as_ref().ok().map(|p| p.codec.k());
        let gts: Vec<GroundTruth> = by_id
            .get(id.as_str())
            .map(|a| {
                a.ground_truth(cfg.base, cfg.gt_spacing)
                    .iter()
                    .map(GroundTruth::from)
                    .collect()
            })
            .unwrap_or_default();
        (evaluate_image(id, pred, &gts, cfg), k)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(ImageResult, Option<usize>)> = {
        use rayon::prelude::*;
        test_ids.par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(ImageResult, Option<usize>)> = test_ids.iter().map(work).collect();

    let k = results.iter().find_map(|(_, k)| *k);
    let per_image = results.into_iter().map(|(r, _)| r).collect();
    let mut report = assemble(cfg, per_image, k);
    let seconds = started.elapsed().as_secs_f64();
    report.timing = Some(Timing {
        seconds,
        images_per_second: if seconds > 0.0 {
            test_ids.len() as f64 / seconds
        } else {
            0.0
        },
    });
    report
}

/// Plain-text table with one row per angle classification and a column per
/// split mode, in percent.
pub fn summary_table(rows: &[(usize, Option<&EvalReport>, Option<&EvalReport>)]) -> String {
    let pct = |r: Option<&EvalReport>| {
        r.map_or("-".to_string(), |r| format!("{:.1}", 100.0 * r.accuracy))
    };
    let mut s = format!(
        "{:<16} {:>12} {:>12} {:>10}\n",
        "classification", "image-wise", "object-wise", "fps"
    );
    for (k, img, obj) in rows {
        let fps = img
            .or(*obj)
            .and_then(|r| r.timing)
            .map_or("-".to_string(), |t| format!("{:.1}", t.images_per_second));
        s.push_str(&format!(
            "{:<16} {:>12} {:>12} {:>10}\n",
            format!("k = {k}"),
            pct(*img),
            pct(*obj),
            fps
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::raster_iou_oracle;

    fn tri(x: f64, y: f64, w: f64, t: f64) -> TriangleGrasp {
        TriangleGrasp::new(x, y, w, t, 40.0).unwrap()
    }

    #[test]
    fn identity_is_correct() {
        let gt = RectGrasp::new(100.0, 100.0, 60.0, 40.0, 0.3);
        let v = is_correct(&tri(100.0, 100.0, 60.0, 0.3), &[gt]);
        assert_eq!(
            v,
            Verdict {
                correct: true,
                matched: Some(0)
            }
        );
    }

    #[test]
    fn angle_miss_is_incorrect() {
        let gt = RectGrasp::new(100.0, 100.0, 60.0, 40.0, 0.0);
        assert!(!is_correct(&tri(100.0, 100.0, 60.0, 35f64.to_radians()), &[gt]).correct);
        assert!(is_correct(&tri(100.0, 100.0, 60.0, 25f64.to_radians()), &[gt]).correct);
    }

    #[test]
    fn third_overlap_is_correct() {
        let pred = TriangleGrasp::new(2.0, 1.0, 4.0, 0.0, 2.0).unwrap();
        let gt = RectGrasp::new(4.0, 1.0, 4.0, 2.0, 0.0);
        let clip = iou(&pred.to_rect().polygon(), &gt.polygon());
        assert!((clip - 1.0 / 3.0).abs() < 1e-12);
        let oracle = raster_iou_oracle(&pred.to_rect().polygon(), &gt.polygon(), 0.01);
        assert!((oracle - 1.0 / 3.0).abs() < 1e-3);
        let v = is_correct(&pred, &[RectGrasp::new(50.0, 50.0, 4.0, 2.0, 0.0), gt]);
        assert_eq!(v.matched, Some(1));
    }

    #[test]
    fn half_turn_symmetry_and_full_turn_flag() {
        let gt = tri(100.0, 100.0, 60.0, 0.2);
        let gts = [GroundTruth::from(&gt)];
        let flipped = gt.flipped();
        assert!(Metric::default().judge(&flipped, &gts).correct);
        let strict = Metric {
            angle_period: AnglePeriod::FullTurn,
            ..Metric::default()
        };
        assert!(strict.judge(&gt, &gts).correct);
        assert!(!strict.judge(&flipped, &gts).correct);
        // headingless rectangles fall back to orientation only
        assert!(
            strict
                .judge(&flipped, &[GroundTruth::from(gt.to_rect())])
                .correct
        );
        assert_eq!("2pi".parse::<AnglePeriod>(), Ok(AnglePeriod::FullTurn));
        assert!("tau".parse::<AnglePeriod>().is_err());
    }

    #[test]
    fn wraparound_angle_difference() {
        let gt = RectGrasp::new(0.0, 0.0, 60.0, 40.0, 175f64.to_radians());
        assert!(is_correct(&tri(0.0, 0.0, 60.0, 5f64.to_radians()), &[gt]).correct);
    }

    #[test]
    fn summary_mentions_columns() {
        let r = assemble(&EvalConfig::default(), vec![], Some(36));
        let t = summary_table(&[(36, Some(&r), None)]);
        assert!(t.contains("image-wise") && t.contains("k = 36") && t.contains("0.0"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn flip_symmetry(
                x in 0.0..200.0f64, y in 0.0..200.0f64, w in 10.0..100.0f64, t in 0.0..TAU,
                gx in 0.0..200.0f64, gy in 0.0..200.0f64, gw in 10.0..100.0f64, gp in 0.0..PI,
            ) {
                let p = tri(x, y, w, t);
                let gts = [RectGrasp::new(gx, gy, gw, 40.0, gp), RectGrasp::new(x + 3.0, y, w, 40.0, gp)];
                prop_assert_eq!(is_correct(&p, &gts), is_correct(&p.flipped(), &gts));
            }
        }
    }
}
