use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stereo::SCHEMA_VERSION;
use super::HarnessError;
use crate::dataset::{parse_reconstruction, Bag, DatasetError};
use crate::geometry::CameraPose;
use crate::metrics::{aggregate_bags, multiview_maa, BagEvaluation, ErrorCombination, MultiviewAggregate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BagReport {
    pub name: String,
    pub size: usize,
    pub images: Vec<String>,
    /// The reconstruction file was absent; the bag is scored as unregistered.
    pub missing: bool,
    pub evaluation: BagEvaluation,
    /// `#stat` lines of the reconstruction file, passed through.
    pub stats: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MultiviewReport {
    pub schema_version: u32,
    pub scene: String,
    pub bags: Vec<BagReport>,
    pub aggregate: MultiviewAggregate,
    /// Mean ATE per bag size over bags where it is defined.
    pub mean_ate: BTreeMap<usize, f64>,
    /// Names of bags without a reconstruction file.
    pub flagged: Vec<String>,
}

/// Reconstruction of a bag: `<recon_dir>/<bag name>.txt`.
pub fn reconstruction_path(recon_dir: &Path, bag: &Bag) -> std::path::PathBuf {
    recon_dir.join(format!("{}.txt", bag.name()))
}

/// Scores ingested reconstructions of every bag against the ground truth.
pub fn run_multiview_metrics(
    scene: &str,
    gt: &BTreeMap<String, CameraPose>,
    bags: &[Bag],
    recon_dir: &Path,
    combination: ErrorCombination,
) -> Result<MultiviewReport, HarnessError> {
    if bags.is_empty() {
        return Err(HarnessError::Config("no bags to evaluate".into()));
    }
    let mut reports = Vec::with_capacity(bags.len());
    for bag in bags {
        let path = reconstruction_path(recon_dir, bag);
        let (poses, stats, missing) = match fs::read(&path) {
            Ok(bytes) => {
                let r = parse_reconstruction(&bytes)
                    .map_err(|error| DatasetError::Format { file: path.clone(), error })?;
                (r.poses, r.stats, false)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (BTreeMap::new(), BTreeMap::new(), true),
            Err(source) => return Err(DatasetError::Io { path, source }.into()),
        };
        let evaluation = multiview_maa(&poses, gt, &bag.images, combination)
            .map_err(|e| HarnessError::Runtime(format!("{}: {e}", bag.name())))?;
        reports.push(BagReport { name: bag.name(), size: bag.size, images: bag.images.clone(), missing, evaluation, stats });
    }
    let scores: Vec<(usize, f64)> = reports.iter().map(|b| (b.size, b.evaluation.curve.maa)).collect();
    let aggregate = aggregate_bags(&scores).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let mut ate_sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for b in &reports {
        if let Some(a) = b.evaluation.ate {
            let e = ate_sums.entry(b.size).or_default();
            e.0 += a;
            e.1 += 1;
        }
    }
    Ok(MultiviewReport {
        schema_version: SCHEMA_VERSION,
        scene: scene.to_string(),
        flagged: reports.iter().filter(|b| b.missing).map(|b| b.name.clone()).collect(),
        mean_ate: ate_sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
        bags: reports,
        aggregate,
    })
}
