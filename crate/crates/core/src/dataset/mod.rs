//! Annotations, label rasterization, splits and synthetic fixtures.

mod cornell;
mod raster;
mod split;
mod synth;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexPolygon, Point};
use crate::grasp::{normalize_angle, AngleSet, RectGrasp, TriangleGrasp, WIDTH_SCALE};

pub use cornell::{parse_cornell_rects, rects_to_cornell, CornellParse};
pub use raster::{rasterize, region_mask, LabelMaps, RasterStats};
pub use split::{make_split, Split, SplitMode, SplitSpec};
pub use synth::{synth_fixture, SynthImage};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: JSON error at line {line}, column {column}: {msg}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{location}: {msg}")]
    Schema { location: String, msg: String },
    #[error("line {line}: {msg}")]
    Cornell { line: usize, msg: String },
    #[error("object map: {0}")]
    ObjectMap(String),
    #[error("object-wise split needs an object_id for image {0}")]
    MissingObjectId(String),
    #[error("cannot split an empty dataset")]
    EmptyDataset,
    #[error("train fraction must lie in [0, 1], got {0}")]
    BadFraction(f64),
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A labeled graspable region: every pixel inside shares the angles and width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAnnotation {
    pub polygon: ConvexPolygon,
    pub angles: AngleSet,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnnotation {
    pub image_id: String,
    #[serde(default)]
    pub object_id: String,
    /// `[H, W]` in pixels.
    pub size: [u32; 2],
    pub regions: Vec<RegionAnnotation>,
}

impl ImageAnnotation {
    pub fn height(&self) -> u32 {
        self.size[0]
    }

    pub fn width(&self) -> u32 {
        self.size[1]
    }

    /// Checks polygon bounds, width range and angle range. Errors name the
    /// offending region and field.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let schema = |loc: String, msg: String| DatasetError::Schema { location: loc, msg };
        if self.image_id.is_empty() {
            return Err(schema("image".into(), "image_id is empty".into()));
        }
        if self.size[0] == 0 || self.size[1] == 0 {
            return Err(schema(
                format!("image {}: size", self.image_id),
                format!("dimensions must be >= 1, got {:?}", self.size),
            ));
        }
        let (h, w) = (self.height() as f64, self.width() as f64);
        for (ri, r) in self.regions.iter().enumerate() {
            let loc = |field: &str| format!("image {} region {ri}: {field}", self.image_id);
            for (vi, p) in r.polygon.vertices().iter().enumerate() {
                if p.x < -1e-9 || p.y < -1e-9 || p.x > w + 1e-9 || p.y > h + 1e-9 {
                    return Err(schema(
                        loc("polygon"),
                        format!("vertex {vi} ({}, {}) outside {w}x{h} image", p.x, p.y),
                    ));
                }
            }
            if !(r.omega.is_finite() && (0.0..=WIDTH_SCALE).contains(&r.omega)) {
                return Err(schema(
                    loc("omega"),
                    format!("{} outside [0, {WIDTH_SCALE}]", r.omega),
                ));
            }
            if let AngleSet::Angles(v) = &r.angles {
                if v.is_empty() {
                    return Err(schema(loc("angles"), "empty angle list".into()));
                }
                for a in v {
                    if !(a.is_finite() && (0.0..std::f64::consts::TAU).contains(a)) {
                        return Err(schema(loc("angles"), format!("{a} outside [0, 2π)")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Ground-truth grasps sampled over every region: grid points at
    /// `spacing` px inside the polygon plus its centroid, one grasp per
    /// allowed angle. `Any` regions are sampled every 15°.
    pub fn ground_truth(&self, d: f64, spacing: f64) -> Vec<TriangleGrasp> {
        let mut out = Vec::new();
        for r in &self.regions {
            let angles: Vec<f64> = match &r.angles {
                AngleSet::Any => (0..24).map(|i| i as f64 * 15f64.to_radians()).collect(),
                AngleSet::Angles(v) => v.clone(),
            };
            for p in sample_points(&r.polygon, spacing) {
                for &a in &angles {
                    if let Ok(g) = TriangleGrasp::new(p.x, p.y, r.omega, a, d) {
                        out.push(g);
                    }
                }
            }
        }
        out
    }

    pub fn ground_truth_rects(&self, d: f64, spacing: f64) -> Vec<RectGrasp> {
        self.ground_truth(d, spacing)
            .iter()
            .map(TriangleGrasp::to_rect)
            .collect()
    }
}

fn sample_points(poly: &ConvexPolygon, spacing: f64) -> Vec<Point> {
    let mut pts = vec![poly.centroid()];
    let (lo, hi) = poly.bounds();
    let spacing = spacing.max(0.5);
    let mut y = lo.y + spacing / 2.0;
    while y < hi.y {
        let mut x = lo.x + spacing / 2.0;
        while x < hi.x {
            let p = Point::new(x, y);
            if poly.contains(p) {
                pts.push(p);
            }
            x += spacing;
        }
        y += spacing;
    }
    pts
}

/// Parses and validates region annotations (a single image object or an
/// array of them). Image ids must be unique.
pub fn parse_region_annotations(
    text: &str,
    source: &str,
) -> Result<Vec<ImageAnnotation>, DatasetError> {
    // parse strictly first so serde reports useful line/column diagnostics
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| DatasetError::Json {
        path: source.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let list = if value.is_array() {
        serde_json::from_str::<Vec<ImageAnnotation>>(text)
    } else {
        serde_json::from_str::<ImageAnnotation>(text).map(|a| vec![a])
    }
    .map_err(|e| DatasetError::Json {
        path: source.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let mut seen = HashSet::new();
    for a in &list {
        a.validate()?;
        if !seen.insert(a.image_id.as_str()) {
            return Err(DatasetError::Schema {
                location: format!("image {}", a.image_id),
                msg: "duplicate image_id".into(),
            });
        }
    }
    Ok(list)
}

pub fn load_region_annotations(
    path: impl AsRef<Path>,
) -> Result<Vec<ImageAnnotation>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_region_annotations(&text, &path.display().to_string())
}

pub fn save_region_annotations(
    path: impl AsRef<Path>,
    anns: &[ImageAnnotation],
) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(anns).expect("annotations serialize");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Reads an `image_id,object_id` CSV (header required).
pub fn load_object_map(path: impl AsRef<Path>) -> Result<HashMap<String, String>, DatasetError> {
    let path = path.as_ref();
    let mut rdr =
        csv::Reader::from_path(path).map_err(|e| DatasetError::ObjectMap(e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::ObjectMap(e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "image_id" || &headers[1] != "object_id" {
        return Err(DatasetError::ObjectMap(format!(
            "expected header \"image_id,object_id\", got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut map = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DatasetError::ObjectMap(e.to_string()))?;
        map.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(map)
}

pub fn save_object_map(
    path: impl AsRef<Path>,
    anns: &[ImageAnnotation],
) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| DatasetError::ObjectMap(e.to_string()))?;
    let map_err = |e: csv::Error| DatasetError::ObjectMap(e.to_string());
    w.write_record(["image_id", "object_id"]).map_err(map_err)?;
    for a in anns {
        w.write_record([&a.image_id, &a.object_id])
            .map_err(map_err)?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Fills `object_id` from a sidecar map; ids already present are overwritten.
pub fn apply_object_map(anns: &mut [ImageAnnotation], map: &HashMap<String, String>) {
    for a in anns {
        if let Some(o) = map.get(&a.image_id) {
            a.object_id = o.clone();
        }
    }
}

/// Rough bootstrap from Cornell rectangles: each rectangle becomes a thin
/// region across its center, graspable from both directions. The result is
/// an approximation of a hand relabel, not a substitute for one.
pub fn regions_from_rects(rects: &[RectGrasp], height: u32, width: u32) -> Vec<RegionAnnotation> {
    let frame = ConvexPolygon::aabb(0.0, 0.0, width as f64, height as f64);
    rects
        .iter()
        .filter_map(|r| {
            let thin = RectGrasp::new(r.cx, r.cy, 2.0, (r.h / 2.0).max(2.0), r.phi);
            let poly = crate::geometry::intersect(&thin.polygon(), &frame)?;
            Some(RegionAnnotation {
                polygon: poly,
                angles: AngleSet::Angles(vec![
                    normalize_angle(r.phi),
                    normalize_angle(r.phi + std::f64::consts::PI),
                ]),
                omega: r.w.clamp(0.0, WIDTH_SCALE),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "image_id": "img0", "object_id": "obj0", "size": [100, 100],
        "regions": [{"polygon": [[10,10],[20,10],[20,20],[10,20]], "angles": [0], "omega": 60}]
    }"#;

    #[test]
    fn parse_minimal() {
        let anns = parse_region_annotations(MINIMAL, "t").unwrap();
        assert_eq!(anns.len(), 1);
        assert_eq!(anns[0].regions.len(), 1);
        assert_eq!(anns[0].regions[0].angles, AngleSet::Angles(vec![0.0]));
        assert_eq!(anns[0].regions[0].omega, 60.0);
    }

    #[test]
    fn parse_any_angles() {
        let text = MINIMAL.replace("[0]", "\"any\"");
        let anns = parse_region_annotations(&text, "t").unwrap();
        assert_eq!(anns[0].regions[0].angles, AngleSet::Any);
        let bad = MINIMAL.replace("[0]", "\"some\"");
        assert!(parse_region_annotations(&bad, "t").is_err());
    }

    #[test]
    fn rejects_schema_violations() {
        let wide = MINIMAL.replace("\"omega\": 60", "\"omega\": 200");
        let err = parse_region_annotations(&wide, "t").unwrap_err();
        assert!(err.to_string().contains("omega"), "{err}");

        let outside = MINIMAL.replace("[20,20]", "[120,20]");
        let err = parse_region_annotations(&outside, "t").unwrap_err();
        assert!(err.to_string().contains("polygon"), "{err}");

        let angle = MINIMAL.replace("[0]", "[7.0]");
        assert!(parse_region_annotations(&angle, "t").is_err());

        let dup = format!("[{MINIMAL},{MINIMAL}]");
        let err = parse_region_annotations(&dup, "t").unwrap_err();
        assert!(err.to_string().contains("duplicate"));

        let broken = "{\n \"image_id\": \"a\",\n \"size\": [1, }";
        match parse_region_annotations(broken, "t") {
            Err(DatasetError::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn annotation_json_round_trip() {
        let anns = parse_region_annotations(MINIMAL, "t").unwrap();
        let text = serde_json::to_string(&anns).unwrap();
        assert_eq!(parse_region_annotations(&text, "t").unwrap(), anns);
    }

    #[test]
    fn object_map_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("objects.csv");
        let mut anns = parse_region_annotations(MINIMAL, "t").unwrap();
        save_object_map(&p, &anns).unwrap();
        let map = load_object_map(&p).unwrap();
        assert_eq!(map["img0"], "obj0");
        anns[0].object_id.clear();
        apply_object_map(&mut anns, &map);
        assert_eq!(anns[0].object_id, "obj0");

        fs::write(&p, "a,b\nimg0,obj0\n").unwrap();
        assert!(load_object_map(&p).is_err());
    }

    #[test]
    fn ground_truth_covers_regions() {
        let anns = parse_region_annotations(MINIMAL, "t").unwrap();
        let gts = anns[0].ground_truth(40.0, 4.0);
        // centroid + 2x2 grid, one angle
        assert_eq!(gts.len(), 5);
        assert!(gts.iter().all(|g| g.omega == 60.0 && g.theta == 0.0));
    }

    #[test]
    fn rect_bootstrap_regions() {
        let r = RectGrasp::new(50.0, 50.0, 60.0, 20.0, 0.0);
        let regions = regions_from_rects(&[r], 100, 100);
        assert_eq!(regions.len(), 1);
        assert!((regions[0].polygon.area() - 20.0).abs() < 1e-9);
        match &regions[0].angles {
            AngleSet::Angles(v) => assert_eq!(v.len(), 2),
            AngleSet::Any => panic!(),
        }
    }
}
