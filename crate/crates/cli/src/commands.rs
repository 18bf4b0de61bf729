use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use image::RgbImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use trigrasp::augment::{augment, sample_params};
use trigrasp::dataset::{
    apply_object_map, load_object_map, load_region_annotations, make_split, parse_cornell_rects,
    rasterize, regions_from_rects, save_object_map, save_region_annotations, synth_fixture,
    ImageAnnotation, LabelMaps, Split, SplitSpec,
};
use trigrasp::decode::Issue;
use trigrasp::eval::evaluate_split;
use trigrasp::gmap::{read_gmap, write_gmap, MapKind};
use trigrasp::overlay::render_overlay;
use trigrasp::{best_grasp, multi_grasps, AngleCodec, Config, PredictionMaps, ScoredGrasp};

use crate::{Command, Failure};

pub fn run(cmd: Command, mut cfg: Config) -> Result<(), Failure> {
    match cmd {
        Command::Synth {
            count,
            height,
            width,
            out,
        } => {
            if count == 0 || height == 0 || width == 0 {
                return Err(Failure::Usage(
                    "count, height and width must be positive".into(),
                ));
            }
            synth(count, height, width, &out, &cfg)?;
        }
        Command::Rasterize {
            gt,
            out,
            as_prediction,
        } => rasterize_cmd(&gt, &out, as_prediction, &cfg)?,
        Command::Augment {
            input,
            out,
            copies,
            crop_size,
            zoom_min,
            zoom_max,
        } => {
            cfg.crop_size = crop_size.unwrap_or(cfg.crop_size);
            cfg.zoom_min = zoom_min.unwrap_or(cfg.zoom_min);
            cfg.zoom_max = zoom_max.unwrap_or(cfg.zoom_max);
            cfg.augment()
                .check()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            augment_cmd(&input, &out, copies, &cfg)?;
        }
        Command::Decode {
            path,
            multi,
            peak_radius,
        } => {
            cfg.peak_radius = peak_radius.unwrap_or(cfg.peak_radius);
            let (maps, grasps) = decode_file(&path, multi, &cfg)?;
            if grasps.is_empty() {
                eprintln!(
                    "no grasp above threshold {}; re-image the scene",
                    cfg.threshold
                );
            }
            print_json(&json!({
                "path": path.display().to_string(),
                "k": maps.codec.k(),
                "height": maps.height,
                "width": maps.width,
                "threshold": cfg.threshold,
                "grasps": grasps,
            }));
        }
        Command::Eval {
            pred,
            gt,
            split,
            report,
            timing,
            gt_spacing,
        } => {
            cfg.gt_spacing = gt_spacing.unwrap_or(cfg.gt_spacing);
            if !(cfg.gt_spacing.is_finite() && cfg.gt_spacing > 0.0) {
                return Err(Failure::Usage("gt-spacing must be positive".into()));
            }
            eval_cmd(
                &pred,
                &gt,
                split.as_deref(),
                report.as_deref(),
                timing,
                &cfg,
            )?;
        }
        Command::Convert {
            inputs,
            height,
            width,
            objects,
            out,
        } => convert(&inputs, height, width, objects.as_deref(), &out)?,
        Command::Viz {
            image,
            pred,
            out,
            multi,
            peak_radius,
        } => {
            cfg.peak_radius = peak_radius.unwrap_or(cfg.peak_radius);
            let img = load_rgb(&image)?;
            let (maps, grasps) = decode_file(&pred, multi, &cfg)?;
            if (maps.width as u32, maps.height as u32) != img.dimensions() {
                log::warn!(
                    "prediction is {}x{} but the image is {}x{}",
                    maps.width,
                    maps.height,
                    img.width(),
                    img.height()
                );
            }
            render_overlay(&img, &grasps, &out)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("drew {} grasps to {}", grasps.len(), out.display());
        }
        Command::Validate { paths } => validate(&paths)?,
        Command::Split {
            gt,
            mode,
            train_fraction,
            objects,
            out,
        } => {
            let mut anns = load_gt(&gt)?;
            if let Some(p) = objects {
                apply_object_map(
                    &mut anns,
                    &load_object_map(&p).map_err(anyhow::Error::from)?,
                );
            }
            let spec = SplitSpec {
                mode: mode.into(),
                train_fraction,
                seed: cfg.seed,
            };
            let split = make_split(&anns, spec).map_err(anyhow::Error::from)?;
            write_json(&out, &split)?;
            println!(
                "train {} / test {} images -> {}",
                split.train.len(),
                split.test.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

/// `path` may be an annotation file or a directory holding annotations.json.
fn load_gt(path: &Path) -> Result<Vec<ImageAnnotation>> {
    let file = if path.is_dir() {
        path.join("annotations.json")
    } else {
        path.to_path_buf()
    };
    Ok(load_region_annotations(&file)?)
}

fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)
        .with_context(|| format!("reading {}", path.display()))?
        .to_rgb8())
}

fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .with_context(|| format!("writing {}", path.display()))
}

fn codec(cfg: &Config) -> Result<AngleCodec> {
    Ok(AngleCodec::new(cfg.k)?)
}

fn synth(count: usize, height: u32, width: u32, out: &Path, cfg: &Config) -> Result<()> {
    let images = out.join("images");
    create_dir(&images)?;
    let corpus = synth_fixture(count, height, width, cfg.seed);
    for s in &corpus {
        save_png(
            &s.image,
            &images.join(format!("{}.png", s.annotation.image_id)),
        )?;
    }
    let anns: Vec<ImageAnnotation> = corpus.into_iter().map(|s| s.annotation).collect();
    save_region_annotations(out.join("annotations.json"), &anns)?;
    save_object_map(out.join("objects.csv"), &anns)?;
    println!("wrote {count} images to {}", out.display());
    Ok(())
}

fn rasterize_cmd(gt: &Path, out: &Path, as_prediction: bool, cfg: &Config) -> Result<()> {
    let anns = load_gt(gt)?;
    let codec = codec(cfg)?;
    create_dir(out)?;
    let (mut pixels, mut clamps) = (0, 0);
    for a in &anns {
        let (labels, stats) = rasterize(a, codec)?;
        if stats.width_clamps > 0 {
            log::warn!(
                "{}: {} regions had widths clamped",
                a.image_id,
                stats.width_clamps
            );
        }
        pixels += stats.graspable_pixels;
        clamps += stats.width_clamps;
        let map = if as_prediction {
            PredictionMaps::from_labels(&labels).to_gmap()
        } else {
            labels.to_gmap()
        };
        write_gmap(out.join(format!("{}.gmap", a.image_id)), &map)?;
    }
    println!(
        "rasterized {} images (k={}, {} graspable pixels, {} width clamps) -> {}",
        anns.len(),
        cfg.k,
        pixels,
        clamps,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct AugmentRecord {
    image_id: String,
    source: String,
    params: trigrasp::augment::AugmentParams,
    warnings: trigrasp::augment::AugmentWarnings,
}

fn augment_cmd(input: &Path, out: &Path, copies: usize, cfg: &Config) -> Result<()> {
    let anns = load_gt(input)?;
    let acfg = cfg.augment();
    let images = out.join("images");
    create_dir(&images)?;
    let mut out_anns = Vec::new();
    let mut records = Vec::new();
    for (i, a) in anns.iter().enumerate() {
        let img = load_rgb(&input.join("images").join(format!("{}.png", a.image_id)))?;
        for j in 0..copies {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((i * copies + j) as u64);
            let params = sample_params(&mut rng, &acfg);
            let (aug_img, mut aug_ann, warnings) =
                augment(&img, a, &params).with_context(|| a.image_id.clone())?;
            aug_ann.image_id = format!("{}-aug{j}", a.image_id);
            save_png(&aug_img, &images.join(format!("{}.png", aug_ann.image_id)))?;
            records.push(AugmentRecord {
                image_id: aug_ann.image_id.clone(),
                source: a.image_id.clone(),
                params,
                warnings,
            });
            out_anns.push(aug_ann);
        }
    }
    save_region_annotations(out.join("annotations.json"), &out_anns)?;
    save_object_map(out.join("objects.csv"), &out_anns)?;
    write_json(
        &out.join("augment.json"),
        &json!({ "config": cfg, "images": records }),
    )?;
    println!(
        "wrote {} augmented images to {}",
        out_anns.len(),
        out.display()
    );
    Ok(())
}

fn decode_file(
    path: &Path,
    multi: bool,
    cfg: &Config,
) -> Result<(PredictionMaps, Vec<ScoredGrasp>)> {
    let map = read_gmap(path)?;
    let maps = PredictionMaps::from_gmap(&map).with_context(|| path.display().to_string())?;
    if let Some(issue) = maps.validate(1).first() {
        bail!("{}: {}", path.display(), describe(issue));
    }
    let grasps = if multi {
        multi_grasps(&maps, cfg.threshold, cfg.peak_radius, cfg.d)?
    } else {
        best_grasp(&maps, cfg.threshold, cfg.d)?
            .into_iter()
            .collect()
    };
    Ok((maps, grasps))
}

fn describe(issue: &Issue) -> String {
    match issue.pixel {
        Some((r, c)) => format!("pixel ({r}, {c}): {}", issue.msg),
        None => issue.msg.clone(),
    }
}

fn eval_cmd(
    pred: &Path,
    gt: &Path,
    split: Option<&Path>,
    report_path: Option<&Path>,
    timing: bool,
    cfg: &Config,
) -> Result<()> {
    if !pred.is_dir() {
        bail!("{}: prediction directory not found", pred.display());
    }
    let anns = load_gt(gt)?;
    let ids: Vec<String> = match split {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let s: Split =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            s.test
        }
        None => anns.iter().map(|a| a.image_id.clone()).collect(),
    };
    let mut report = evaluate_split(pred, &anns, &ids, &cfg.eval());
    if !timing {
        report.timing = None;
    }
    let c = report.counts;
    println!(
        "accuracy {:.1} ({}/{} correct; {} incorrect, {} no grasp, {} missing, {} invalid)",
        100.0 * report.accuracy,
        c.correct,
        c.total,
        c.incorrect,
        c.no_grasp,
        c.missing,
        c.invalid
    );
    if let Some(t) = report.timing {
        println!("{:.3} s, {:.1} images/s", t.seconds, t.images_per_second);
    }
    if let Some(p) = report_path {
        let mut v = serde_json::to_value(&report)?;
        v["run_config"] = serde_json::to_value(cfg)?;
        write_json(p, &v)?;
    }
    Ok(())
}

fn image_id_of(path: &Path) -> Result<String> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| anyhow!("{}: bad file name", path.display()))?;
    Ok(stem.strip_suffix("cpos").unwrap_or(stem).to_string())
}

fn convert(
    inputs: &[PathBuf],
    height: u32,
    width: u32,
    objects: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut anns = Vec::new();
    for p in inputs {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let parsed = parse_cornell_rects(&text).with_context(|| p.display().to_string())?;
        if parsed.skipped_nan > 0 {
            log::warn!(
                "{}: skipped {} rectangles with NaN corners",
                p.display(),
                parsed.skipped_nan
            );
        }
        let a = ImageAnnotation {
            image_id: image_id_of(p)?,
            object_id: String::new(),
            size: [height, width],
            regions: regions_from_rects(&parsed.rects, height, width),
        };
        a.validate().with_context(|| p.display().to_string())?;
        anns.push(a);
    }
    if let Some(m) = objects {
        apply_object_map(&mut anns, &load_object_map(m)?);
    }
    save_region_annotations(out, &anns)?;
    eprintln!("note: converted regions are an approximate bootstrap, not hand labels");
    println!("converted {} files -> {}", anns.len(), out.display());
    Ok(())
}

fn validate_gmap(path: &Path) -> (String, Vec<String>) {
    let map = match read_gmap(path) {
        Ok(m) => m,
        Err(e) => return ("gmap".into(), vec![e.to_string()]),
    };
    match map.header.kind {
        MapKind::Prediction => {
            let issues = match PredictionMaps::from_gmap(&map) {
                Ok(p) => p.validate(20).iter().map(describe).collect(),
                Err(e) => vec![e.to_string()],
            };
            ("prediction".into(), issues)
        }
        MapKind::Label => {
            let issues = match LabelMaps::from_gmap(&map) {
                Ok(l) => l.check_invariants().err().into_iter().collect(),
                Err(e) => vec![e.to_string()],
            };
            ("label".into(), issues)
        }
    }
}

fn validate(paths: &[PathBuf]) -> Result<()> {
    let mut results: Vec<Value> = Vec::new();
    let mut bad = 0;
    for p in paths {
        let (kind, issues) = if p.extension().is_some_and(|e| e == "json") {
            match load_region_annotations(p) {
                Ok(_) => ("annotations".to_string(), vec![]),
                Err(e) => ("annotations".to_string(), vec![e.to_string()]),
            }
        } else {
            validate_gmap(p)
        };
        if !issues.is_empty() {
            bad += 1;
        }
        results.push(json!({
            "path": p.display().to_string(),
            "kind": kind,
            "ok": issues.is_empty(),
            "issues": issues,
        }));
    }
    print_json(&results);
    if bad > 0 {
        bail!("{bad} of {} files failed validation", paths.len());
    }
    Ok(())
}
