//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//!     cargo test -p trigrasp-core --test acceptance

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trigrasp::dataset::{
    make_split, rasterize, synth_fixture, ImageAnnotation, RegionAnnotation, SplitMode, SplitSpec,
};
use trigrasp::eval::{evaluate_split, EvalConfig};
use trigrasp::geometry::{iou, ConvexPolygon, Point};
use trigrasp::gmap::{read_gmap, write_gmap, GmapError};
use trigrasp::grasp::{circular_diff, AngleSet, STANDARD_BIN_COUNTS};
use trigrasp::{augment, is_correct, AngleCodec, PredictionMaps, RectGrasp, TriangleGrasp};

const ORACLE_STEP: f64 = 0.25;
const ORACLE_TOL: f64 = 0.01;
const ORACLE_BUDGET_S: f64 = 30.0;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// Independent vertex construction and point sampling, written against the
// grasp definition rather than the library's polygons.

fn triangle_pts(x: f64, y: f64, omega: f64, theta: f64, d: f64) -> Vec<(f64, f64)> {
    let u = (theta.cos(), -theta.sin());
    let v = (-u.1, u.0);
    let apex = (x + u.0 * omega / 2.0, y + u.1 * omega / 2.0);
    let bm = (x - u.0 * omega / 2.0, y - u.1 * omega / 2.0);
    vec![
        apex,
        (bm.0 + v.0 * d / 2.0, bm.1 + v.1 * d / 2.0),
        (bm.0 - v.0 * d / 2.0, bm.1 - v.1 * d / 2.0),
    ]
}

fn rect_pts(cx: f64, cy: f64, w: f64, h: f64, phi: f64) -> Vec<(f64, f64)> {
    let u = (phi.cos(), -phi.sin());
    let v = (-u.1, u.0);
    [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|(a, b)| {
            (
                cx + a * u.0 * w / 2.0 + b * v.0 * h / 2.0,
                cy + a * u.1 * w / 2.0 + b * v.1 * h / 2.0,
            )
        })
        .collect()
}

/// Point in convex polygon of either winding: all edge cross products share
/// a sign.
fn inside(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    let mut pos = false;
    let mut neg = false;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let c = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        pos |= c > 0.0;
        neg |= c < 0.0;
    }
    !(pos && neg)
}

fn sampled_iou(p: &[(f64, f64)], q: &[(f64, f64)], step: f64) -> f64 {
    let all = p.iter().chain(q);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let nx = ((x1 - x0) / step).ceil() as usize;
    let ny = ((y1 - y0) / step).ceil() as usize;
    let (mut a, mut b, mut both) = (0u64, 0u64, 0u64);
    for j in 0..ny {
        let y = y0 + (j as f64 + 0.5) * step;
        for i in 0..nx {
            let pt = (x0 + (i as f64 + 0.5) * step, y);
            let ip = inside(p, pt);
            let iq = inside(q, pt);
            a += ip as u64;
            b += iq as u64;
            both += (ip && iq) as u64;
        }
    }
    both as f64 / (a + b - both) as f64
}

fn iou_oracle_equivalence() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    let mut overlapping = 0;
    for _ in 0..200 {
        let (x, y) = (rng.random_range(80.0..120.0), rng.random_range(80.0..120.0));
        let omega = rng.random_range(10.0..90.0);
        let theta = rng.random_range(0.0..TAU);
        let d = rng.random_range(20.0..50.0);
        let tri = triangle_pts(x, y, omega, theta, d);
        let (rx, ry) = (
            x + rng.random_range(-25.0..25.0),
            y + rng.random_range(-25.0..25.0),
        );
        let (w, h, phi) = (
            rng.random_range(10.0..90.0),
            rng.random_range(10.0..50.0),
            rng.random_range(0.0..PI),
        );
        let rect = rect_pts(rx, ry, w, h, phi);
        let lib_tri = TriangleGrasp::new(x, y, omega, theta, d).unwrap().polygon();
        let lib_rect = RectGrasp::new(rx, ry, w, h, phi).polygon();
        let clip = iou(&lib_tri, &lib_rect);
        let oracle = sampled_iou(&tri, &rect, ORACLE_STEP);
        if clip > 0.0 {
            overlapping += 1;
        }
        worst = worst.max((clip - oracle).abs());
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        worst <= ORACLE_TOL && secs < ORACLE_BUDGET_S,
        format!("200 pairs ({overlapping} overlapping), max |clip - oracle| = {worst:.5} (tol {ORACLE_TOL}), {secs:.2} s (budget {ORACLE_BUDGET_S} s)"),
    )
}

fn metric_fidelity() -> Verdict {
    let gt = RectGrasp::new(100.0, 100.0, 60.0, 40.0, 0.0);
    let same = TriangleGrasp::new(100.0, 100.0, 60.0, 0.0, 40.0).unwrap();
    let off = TriangleGrasp::new(100.0, 100.0, 60.0, 35f64.to_radians(), 40.0).unwrap();
    let identity = is_correct(&same, &[gt]).correct;
    let angle_miss = !is_correct(&off, &[gt]).correct;

    // equal rectangles overlapping by half their width
    let a = RectGrasp::new(2.0, 1.0, 4.0, 2.0, 0.0);
    let b = RectGrasp::new(4.0, 1.0, 4.0, 2.0, 0.0);
    let clip = iou(&a.polygon(), &b.polygon());
    let oracle = sampled_iou(
        &rect_pts(2.0, 1.0, 4.0, 2.0, 0.0),
        &rect_pts(4.0, 1.0, 4.0, 2.0, 0.0),
        ORACLE_STEP,
    );
    let pred = TriangleGrasp::new(4.0, 1.0, 4.0, 0.0, 2.0).unwrap();
    let third_ok = is_correct(&pred, &[a]).correct;
    let ok = identity
        && angle_miss
        && third_ok
        && (clip - 1.0 / 3.0).abs() < 1e-12
        && (oracle - 1.0 / 3.0).abs() <= ORACLE_TOL;
    check(
        ok,
        format!("identity correct={identity}, 35° miss rejected={angle_miss}, 1/3 case: clip {clip:.12}, oracle {oracle:.6}, correct={third_ok}"),
    )
}

fn offset_sensitivity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = 40.0;
    let n = 24;
    let mut failures = Vec::new();
    let mut gap_min = f64::MAX;
    for i in 0..n {
        let (x, y) = (rng.random_range(60.0..140.0), rng.random_range(60.0..140.0));
        let omega = rng.random_range(20.0..120.0);
        let theta = rng.random_range(0.0..TAU);
        let g = TriangleGrasp::new(x, y, omega, theta, d).unwrap();
        let v = Point::new(-g.axis().y, g.axis().x);
        let (sx, sy) = (x + v.x * d / 4.0, y + v.y * d / 4.0);
        let h = TriangleGrasp::new(sx, sy, omega, theta, d).unwrap();
        let tri = iou(&g.polygon(), &h.polygon());
        let rect = iou(&g.to_rect().polygon(), &h.to_rect().polygon());
        let tri_o = sampled_iou(
            &triangle_pts(x, y, omega, theta, d),
            &triangle_pts(sx, sy, omega, theta, d),
            ORACLE_STEP,
        );
        let rect_o = sampled_iou(
            &rect_pts(x, y, omega, d, theta),
            &rect_pts(sx, sy, omega, d, theta),
            ORACLE_STEP,
        );
        gap_min = gap_min.min(rect - tri).min(rect_o - tri_o);
        if !(tri < rect && tri_o < rect_o) {
            failures.push(i);
        }
    }
    check(
        failures.is_empty(),
        format!("{n} grasps shifted d/4 across the axis: triangle IOU < rectangle IOU in {}/{n} (clipping and oracle), min gap {gap_min:.4}", n - failures.len()),
    )
}

fn self_consistency() -> Verdict {
    let corpus = synth_fixture(24, 320, 320, 7);
    let anns: Vec<ImageAnnotation> = corpus.iter().map(|s| s.annotation.clone()).collect();
    let ids: Vec<String> = anns.iter().map(|a| a.image_id.clone()).collect();
    let codec = AngleCodec::new(36).unwrap();
    let perfect = tempfile::tempdir().map_err(|e| e.to_string())?;
    let empty = tempfile::tempdir().map_err(|e| e.to_string())?;
    for a in &anns {
        let (labels, _) = rasterize(a, codec).map_err(|e| e.to_string())?;
        let name = format!("{}.gmap", a.image_id);
        write_gmap(
            perfect.path().join(&name),
            &PredictionMaps::from_labels(&labels).to_gmap(),
        )
        .map_err(|e| e.to_string())?;
        let zeros = PredictionMaps::zeros(codec, labels.height, labels.width);
        write_gmap(empty.path().join(&name), &zeros.to_gmap()).map_err(|e| e.to_string())?;
    }
    let cfg = EvalConfig::default();
    let good = evaluate_split(perfect.path(), &anns, &ids, &cfg);
    let bad = evaluate_split(empty.path(), &anns, &ids, &cfg);
    check(
        good.accuracy == 1.0 && bad.accuracy == 0.0,
        format!(
            "{} images: label-derived predictions {:.1}%, all-zero predictions {:.1}%",
            ids.len(),
            100.0 * good.accuracy,
            100.0 * bad.accuracy
        ),
    )
}

/// Clockwise quarter turns on screen: pixel (r, c) of an S×S plane moves to
/// (c, S-1-r).
fn turn_index(r: usize, c: usize, s: usize, quarters: usize) -> (usize, usize) {
    let (mut r, mut c) = (r, c);
    for _ in 0..quarters {
        (r, c) = (c, s - 1 - r);
    }
    (r, c)
}

fn equivariance() -> Verdict {
    let corpus = synth_fixture(12, 320, 320, 11);
    let s = 320usize;
    let n = s * s;
    let mut checked = 0;
    let mut problems = Vec::new();
    for k in STANDARD_BIN_COUNTS {
        let codec = AngleCodec::new(k).unwrap();
        for item in &corpus {
            let mut ann = item.annotation.clone();
            // a second, axis-aligned region exercises exact edge cases
            ann.regions.push(RegionAnnotation {
                polygon: ConvexPolygon::aabb(10.0, 20.0, 60.0, 31.0),
                angles: AngleSet::Angles(vec![0.0, FRAC_PI_2]),
                omega: 30.0,
            });
            let (base, _) = rasterize(&ann, codec).unwrap();
            for q in 1..4usize {
                let phi = q as f64 * FRAC_PI_2;
                let (_, rot_ann) = augment::rotate(&item.image, &ann, phi).unwrap();
                let (rot, _) = rasterize(&rot_ann, codec).unwrap();
                let shift = q * k / 4;
                let mut conf_ok = true;
                let mut angle_ok = true;
                let mut width_ok = true;
                for r in 0..s {
                    for c in 0..s {
                        let (rr, cc) = turn_index(r, c, s, q);
                        let (i, j) = (r * s + c, rr * s + cc);
                        conf_ok &= base.confidence[i].to_bits() == rot.confidence[j].to_bits();
                        width_ok &= base.grasp_width[i].to_bits() == rot.grasp_width[j].to_bits();
                        for b in 0..k {
                            let b2 = (b + k - shift) % k;
                            angle_ok &=
                                base.angle[b * n + i].to_bits() == rot.angle[b2 * n + j].to_bits();
                        }
                    }
                }
                checked += 1;
                if !(conf_ok && angle_ok && width_ok) {
                    problems.push(format!(
                        "{} k={k} φ={}°: conf={conf_ok} angle={angle_ok} width={width_ok}",
                        item.annotation.image_id,
                        q * 90
                    ));
                }
            }
        }
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{checked} (image, k, φ) cases: confidence bit-exact, angle planes shift-exact")
        } else {
            problems.join("; ")
        },
    )
}

fn codec_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let mut report = Vec::new();
    let mut ok = true;
    for k in STANDARD_BIN_COUNTS {
        let codec = AngleCodec::new(k).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let a = rng.random_range(0.0..TAU);
            let back = codec.decode(codec.bin_of(a).unwrap()).unwrap();
            worst = worst.max(circular_diff(a, back, TAU));
        }
        let bound = PI / k as f64;
        ok &= worst <= bound;
        report.push(format!("k={k}: {worst:.6} <= {bound:.6}"));
    }
    check(ok, format!("max round-trip error {}", report.join(", ")))
}

fn gmap_round_trip() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = synth_fixture(2, 64, 80, 3);
    let codec = AngleCodec::new(72).unwrap();
    let (labels, _) = rasterize(&corpus[0].annotation, codec).unwrap();
    let mut pred = PredictionMaps::from_labels(&labels);
    pred.set_graspable(3, 5, 0.375);
    let mut identical = true;
    for (name, map) in [("label", labels.to_gmap()), ("pred", pred.to_gmap())] {
        let path = dir.path().join(format!("{name}.gmap"));
        write_gmap(&path, &map).map_err(|e| e.to_string())?;
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let back = read_gmap(&path).map_err(|e| e.to_string())?;
        identical &= back.to_bytes() == bytes && bytes == map.to_bytes();
    }
    let good = std::fs::read(dir.path().join("pred.gmap")).unwrap();
    let mut magic = good.clone();
    magic[0] = b'X';
    let magic_path = dir.path().join("magic.gmap");
    std::fs::write(&magic_path, &magic).unwrap();
    let trunc_path = dir.path().join("trunc.gmap");
    std::fs::write(&trunc_path, &good[..good.len() - 3]).unwrap();
    let magic_rejected = matches!(read_gmap(&magic_path), Err(GmapError::BadMagic(_)));
    let trunc_rejected = matches!(read_gmap(&trunc_path), Err(GmapError::PayloadLength { .. }));
    check(
        identical && magic_rejected && trunc_rejected,
        format!("bitwise identical={identical}, bad magic rejected={magic_rejected}, truncated rejected={trunc_rejected}"),
    )
}

fn split_protocol() -> Verdict {
    let anns: Vec<ImageAnnotation> = (0..885)
        .map(|i| ImageAnnotation {
            image_id: format!("img-{i:04}"),
            object_id: format!("obj-{:03}", i / 4),
            size: [8, 8],
            regions: vec![],
        })
        .collect();
    let s =
        make_split(&anns, SplitSpec::new(SplitMode::ImageWise, 0)).map_err(|e| e.to_string())?;
    let sizes = (s.train.len(), s.test.len());
    let object_of = |id: &String| id[4..].parse::<usize>().unwrap() / 4;
    let mut leaks = 0;
    for seed in 0..100 {
        let s = make_split(&anns, SplitSpec::new(SplitMode::ObjectWise, seed))
            .map_err(|e| e.to_string())?;
        let train: std::collections::HashSet<usize> = s.train.iter().map(object_of).collect();
        leaks += s
            .test
            .iter()
            .filter(|id| train.contains(&object_of(id)))
            .count();
    }
    check(
        sizes == (664, 221) && leaks == 0,
        format!(
            "image-wise 885 -> {}/{}, object-wise leaked images over 100 seeds: {leaks}",
            sizes.0, sizes.1
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("IOU oracle equivalence", iou_oracle_equivalence),
        ("metric fidelity", metric_fidelity),
        ("perpendicular offset sensitivity", offset_sensitivity),
        ("self-consistency loop", self_consistency),
        ("augmentation equivariance", equivariance),
        ("codec bound", codec_bound),
        ("GMAP round trip", gmap_round_trip),
        ("split protocol", split_protocol),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
