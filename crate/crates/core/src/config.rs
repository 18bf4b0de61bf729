//! Run configuration shared by the CLI and reports. Every field has a
//! default and is echoed into reports.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::eval::{AnglePeriod, EvalConfig, Metric};
use crate::grasp::DEFAULT_BASE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub k: usize,
    pub d: f64,
    pub crop_size: u32,
    pub threshold: f64,
    pub peak_radius: usize,
    pub zoom_min: f64,
    pub zoom_max: f64,
    pub angle_period: AnglePeriod,
    pub seed: u64,
    pub gt_spacing: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            k: 36,
            d: DEFAULT_BASE,
            crop_size: crate::augment::CROP_SIZE,
            threshold: 0.5,
            peak_radius: 10,
            zoom_min: 0.8,
            zoom_max: 1.25,
            angle_period: AnglePeriod::HalfTurn,
            seed: 0,
            gt_spacing: 4.0,
        }
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn augment(&self) -> AugmentConfig {
        AugmentConfig {
            crop_size: self.crop_size,
            zoom_min: self.zoom_min,
            zoom_max: self.zoom_max,
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            threshold: self.threshold,
            base: self.d,
            metric: Metric {
                angle_period: self.angle_period,
                ..Metric::default()
            },
            gt_spacing: self.gt_spacing,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: Config = serde_json::from_str(r#"{"k": 72, "angle_period": "2pi"}"#).unwrap();
        assert_eq!(c.k, 72);
        assert_eq!(c.angle_period, AnglePeriod::FullTurn);
        assert_eq!(c.d, 40.0);
        assert_eq!(c.crop_size, 320);
        assert!(serde_json::from_str::<Config>(r#"{"kk": 1}"#).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = Config::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Config>(&text).unwrap(), c);
    }
}
