use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, ImageAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    ImageWise,
    ObjectWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(mode: SplitMode, seed: u64) -> Self {
        Self {
            mode,
            train_fraction: 0.75,
            seed,
        }
    }
}

/// Train/test image ids, each listed in dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    #[serde(flatten)]
    pub spec: SplitSpec,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded random split. Image-wise puts `round(f·N)` images in train;
/// object-wise puts `round(f·M)` of the `M` objects in train, with all of
/// each object's images.
pub fn make_split(anns: &[ImageAnnotation], spec: SplitSpec) -> Result<Split, DatasetError> {
    if anns.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&spec.train_fraction) {
        return Err(DatasetError::BadFraction(spec.train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_train = vec![false; anns.len()];
    match spec.mode {
        SplitMode::ImageWise => {
            let mut order: Vec<usize> = (0..anns.len()).collect();
            order.shuffle(&mut rng);
            let n_train = (spec.train_fraction * anns.len() as f64).round() as usize;
            for &i in &order[..n_train] {
                in_train[i] = true;
            }
        }
        SplitMode::ObjectWise => {
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, a) in anns.iter().enumerate() {
                if a.object_id.is_empty() {
                    return Err(DatasetError::MissingObjectId(a.image_id.clone()));
                }
                groups.entry(a.object_id.as_str()).or_default().push(i);
            }
            let mut objects: Vec<&Vec<usize>> = groups.values().collect();
            objects.shuffle(&mut rng);
            let n_train = (spec.train_fraction * objects.len() as f64).round() as usize;
            for members in &objects[..n_train] {
                for &i in members.iter() {
                    in_train[i] = true;
                }
            }
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (a, t) in anns.iter().zip(in_train) {
        if t {
            train.push(a.image_id.clone());
        } else {
            test.push(a.image_id.clone());
        }
    }
    Ok(Split { spec, train, test })
}
