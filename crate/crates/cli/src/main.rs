//! `trigrasp` command-line tool.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trigrasp::dataset::SplitMode;
use trigrasp::eval::AnglePeriod;
use trigrasp::Config;

#[derive(Parser, Debug)]
#[command(
    name = "trigrasp",
    version,
    about = "Triangle grasp labels, decoding and evaluation"
)]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. Flags override the config file,
/// which overrides built-in defaults.
#[derive(Args, Debug, Default)]
pub struct GlobalOpts {
    /// JSON config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Angle bin count
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Triangle base length in pixels
    #[arg(long, global = true)]
    d: Option<f64>,
    /// Graspable confidence threshold
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Angle comparison period for evaluation
    #[arg(long, global = true, value_enum)]
    angle_period: Option<PeriodArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PeriodArg {
    #[value(name = "pi")]
    Pi,
    #[value(name = "2pi")]
    TwoPi,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    ImageWise,
    ObjectWise,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic corpus of images and region annotations
    Synth {
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, default_value_t = 320)]
        height: u32,
        #[arg(long, default_value_t = 320)]
        width: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rasterize region annotations into label GMAPs
    Rasterize {
        /// Annotation JSON file or a directory holding annotations.json
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write ground-truth-derived prediction maps instead of labels
        #[arg(long)]
        as_prediction: bool,
    },
    /// Crop, rotate and zoom images together with their labels
    Augment {
        /// Directory holding images/ and annotations.json
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Augmented copies per image
        #[arg(long, default_value_t = 1)]
        copies: usize,
        #[arg(long)]
        crop_size: Option<u32>,
        #[arg(long)]
        zoom_min: Option<f64>,
        #[arg(long)]
        zoom_max: Option<f64>,
    },
    /// Decode grasps from a prediction GMAP
    Decode {
        path: PathBuf,
        /// Report every local peak instead of the single best grasp
        #[arg(long)]
        multi: bool,
        #[arg(long)]
        peak_radius: Option<usize>,
    },
    /// Score prediction GMAPs with the rectangle metric
    Eval {
        /// Directory of <image_id>.gmap predictions
        #[arg(long)]
        pred: PathBuf,
        /// Annotation JSON file or a directory holding annotations.json
        #[arg(long)]
        gt: PathBuf,
        /// Split file; its test ids are evaluated. Without it every
        /// annotated image is.
        #[arg(long)]
        split: Option<PathBuf>,
        /// Write the full JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
        /// Include wall-clock timing in the report
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        gt_spacing: Option<f64>,
    },
    /// Convert Cornell cpos rectangle files to region annotations
    /// (approximate)
    Convert {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 480)]
        height: u32,
        #[arg(long, default_value_t = 640)]
        width: u32,
        /// CSV with image_id,object_id columns
        #[arg(long)]
        objects: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw decoded grasps over an image
    Viz {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        multi: bool,
        #[arg(long)]
        peak_radius: Option<usize>,
    },
    /// Check GMAP and annotation files; prints a JSON report
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Write a seeded train/test split
    Split {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value = "image-wise")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0.75)]
        train_fraction: f64,
        /// CSV with image_id,object_id columns
        #[arg(long)]
        objects: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl GlobalOpts {
    fn resolve(&self) -> Result<Config, Failure> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p).map_err(Failure::Usage)?,
            None => Config::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.d {
            cfg.d = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.angle_period {
            cfg.angle_period = match v {
                PeriodArg::Pi => AnglePeriod::HalfTurn,
                PeriodArg::TwoPi => AnglePeriod::FullTurn,
            };
        }
        if cfg.k == 0 {
            return Err(Failure::Usage("k must be at least 1".into()));
        }
        if !(cfg.d.is_finite() && cfg.d > 0.0) {
            return Err(Failure::Usage(format!("d must be positive, got {}", cfg.d)));
        }
        if !(0.0..=1.0).contains(&cfg.threshold) {
            return Err(Failure::Usage(format!(
                "threshold must lie in [0, 1], got {}",
                cfg.threshold
            )));
        }
        Ok(cfg)
    }
}

impl From<ModeArg> for SplitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ImageWise => SplitMode::ImageWise,
            ModeArg::ObjectWise => SplitMode::ObjectWise,
        }
    }
}

/// Error chain joined with ": ", skipping causes a parent already quotes.
fn chain_message(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = cli
        .opts
        .resolve()
        .and_then(|cfg| commands::run(cli.command, cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {}", chain_message(&e));
            ExitCode::from(1)
        }
    }
}
