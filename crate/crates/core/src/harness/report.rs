use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, MultiviewReport, StereoReport, SweepReport};
use crate::metrics::MAA_THRESHOLDS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
}

pub const STEREO_JSON: &str = "report.json";
pub const STEREO_CSV: &str = "pairs.csv";
pub const CURVES_CSV: &str = "curves.csv";

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        x.to_string()
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let to_err = |e: csv::Error| HarnessError::Runtime(format!("csv: {e}"));
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.write_record(r).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Runtime(format!("csv: {e}")))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, HarnessError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(io(&path))?;
    written.push(path);
    Ok(())
}

const PAIR_HEADER: [&str; 14] = [
    "kind",
    "scene",
    "image_a",
    "image_b",
    "covis",
    "tentatives",
    "inliers",
    "inlier_ratio",
    "iterations",
    "rotation_error",
    "translation_error",
    "combined_error",
    "failed_repeats",
    "maa",
];

/// Flat table: one row per pair (means over repeats), one per scene and one
/// for the whole run.
pub fn stereo_csv(report: &StereoReport) -> Result<Vec<u8>, HarnessError> {
    let mut rows = Vec::new();
    for scene in &report.scenes {
        for p in &scene.pairs {
            let n = p.repeats.len() as f64;
            let mean = |f: &dyn Fn(&super::RepeatRecord) -> f64| p.repeats.iter().map(f).sum::<f64>() / n;
            rows.push(vec![
                "pair".into(),
                scene.scene.clone(),
                p.image_a.clone(),
                p.image_b.clone(),
                num(p.covis),
                p.tentatives.to_string(),
                num(mean(&|r| r.inliers as f64)),
                num(mean(&|r| r.inlier_ratio)),
                num(mean(&|r| r.iterations as f64)),
                num(mean(&|r| r.error.rotation)),
                num(mean(&|r| r.error.translation)),
                num(mean(&|r| r.error.combined)),
                p.repeats.iter().filter(|r| r.failure.is_some() || r.error.is_failed()).count().to_string(),
                String::new(),
            ]);
        }
    }
    for scene in &report.scenes {
        let mut row = vec![String::new(); PAIR_HEADER.len()];
        row[0] = "scene".into();
        row[1] = scene.scene.clone();
        row[7] = num(scene.mean_inlier_ratio);
        row[13] = num(scene.maa);
        rows.push(row);
    }
    let mut row = vec![String::new(); PAIR_HEADER.len()];
    row[0] = "overall".into();
    row[13] = num(report.maa);
    rows.push(row);
    csv_bytes(&PAIR_HEADER, &rows)
}

/// One row per threshold, one column per scene plus the overall curve.
pub fn curves_csv(report: &StereoReport) -> Result<Vec<u8>, HarnessError> {
    let mut header = vec!["threshold"];
    header.extend(report.scenes.iter().map(|s| s.scene.as_str()));
    header.push("overall");
    let rows: Vec<Vec<String>> = MAA_THRESHOLDS
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut row = vec![num(*t)];
            row.extend(report.scenes.iter().map(|s| num(s.curve.accuracy[k])));
            row.push(num(report.curve.accuracy[k]));
            row
        })
        .collect();
    csv_bytes(&header, &rows)
}

/// Writes the stereo report into `dir` in the requested formats plus the
/// accuracy-curve table. Returns the written paths.
pub fn emit_report(report: &StereoReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Json) {
        write(dir, STEREO_JSON, to_json(report)?.as_bytes(), &mut written)?;
    }
    if formats.contains(&ReportFormat::Csv) {
        write(dir, STEREO_CSV, &stereo_csv(report)?, &mut written)?;
    }
    write(dir, CURVES_CSV, &curves_csv(report)?, &mut written)?;
    Ok(written)
}

pub fn emit_sweep(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    write(dir, "sweep.json", to_json(report)?.as_bytes(), &mut written)?;
    let header = ["rank", "matching", "ratio", "threshold", "max_iterations", "maa", "mean_estimation_seconds", "failure"];
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| {
            vec![
                e.rank.to_string(),
                serde_json::to_value(e.point.matching).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                num(e.point.ratio),
                num(e.point.threshold),
                e.point.max_iterations.to_string(),
                num(e.maa),
                num(e.mean_estimation_seconds),
                e.failure.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write(dir, "sweep.csv", &csv_bytes(&header, &rows)?, &mut written)?;
    Ok(written)
}

pub fn emit_multiview(report: &MultiviewReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    write(dir, "multiview.json", to_json(report)?.as_bytes(), &mut written)?;
    let header = ["kind", "bag", "size", "registered", "maa", "ate", "missing"];
    let mut rows: Vec<Vec<String>> = report
        .bags
        .iter()
        .map(|b| {
            vec![
                "bag".into(),
                b.name.clone(),
                b.size.to_string(),
                b.evaluation.registered.to_string(),
                num(b.evaluation.curve.maa),
                b.evaluation.ate.map(num).unwrap_or_default(),
                b.missing.to_string(),
            ]
        })
        .collect();
    for (size, maa) in &report.aggregate.per_size {
        let ate = report.mean_ate.get(size).copied().map(num).unwrap_or_default();
        rows.push(vec!["size".into(), String::new(), size.to_string(), String::new(), num(*maa), ate, String::new()]);
    }
    rows.push(vec![
        "overall".into(),
        String::new(),
        String::new(),
        String::new(),
        num(report.aggregate.maa),
        String::new(),
        String::new(),
    ]);
    write(dir, "bags.csv", &csv_bytes(&header, &rows)?, &mut written)?;
    Ok(written)
}
