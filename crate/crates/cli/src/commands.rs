use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use matchbench_core::dataset::{
    enumerate_pairs, format_bags, load_scene, parse_bags, parse_matches, parse_reconstruction, sample_bags,
    save_scene, Bag, BagSpec, SceneBundle,
};
use matchbench_core::harness::{
    calibrate_from_config, emit_multiview, emit_report, emit_sweep, load_inputs,
    run_multiview_metrics, run_stereo, sweep as run_sweep, to_json, MatchingMode, ReportFormat, RunConfig,
    SweepGrid,
};
use matchbench_core::synthetic::{generate_scene, SynthSpec};
use serde::de::DeserializeOwned;
use toml::Value;

use crate::CliError;

/// Bag lists a scene may ship instead of sampling them.
pub const BAGS_FILE: &str = "bags.txt";

#[derive(Debug, Clone, Args)]
pub struct BagArgs {
    /// Bag sizes to sample when a scene has no bags.txt.
    #[arg(long, value_delimiter = ',', default_value = "5,10,25")]
    pub bag_sizes: Vec<usize>,
    /// Bags per size, same order as --bag-sizes.
    #[arg(long, value_delimiter = ',', default_value = "100,50,25")]
    pub bag_counts: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub bag_seed: u64,
    /// Points each bag member must share with another member.
    #[arg(long, default_value_t = 100)]
    pub min_points: usize,
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {}", path.display(), e.message())))
}

fn parse_formats(names: &[String]) -> Result<Vec<ReportFormat>, CliError> {
    names
        .iter()
        .map(|n| match n.trim() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(CliError::Validation(format!("unknown report format {other:?} (json, csv)"))),
        })
        .collect()
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

pub fn stereo(cfg: &RunConfig, formats: &[String]) -> Result<(), CliError> {
    let formats = parse_formats(formats)?;
    let report = run_stereo(cfg)?;
    for scene in &report.scenes {
        println!("{}: {} pairs, mAA {:.4}, mean inlier ratio {:.4}", scene.scene, scene.pairs.len(), scene.maa, scene.mean_inlier_ratio);
    }
    println!("overall mAA {:.4} over {} pairs", report.maa, report.pair_count());
    print_written(&emit_report(&report, &cfg.output, &formats)?);
    Ok(())
}

fn scene_bags(cfg: &RunConfig, scene: &SceneBundle, args: &BagArgs) -> Result<Vec<Bag>, CliError> {
    let file = cfg.scene_dir(&scene.name).join(BAGS_FILE);
    if file.is_file() {
        let bytes = fs::read(&file).map_err(|e| io_error(&file, e))?;
        return parse_bags(&bytes).map_err(|e| CliError::Validation(format!("{}: {e}", file.display())));
    }
    let spec = BagSpec { sizes: args.bag_sizes.clone(), counts: args.bag_counts.clone(), seed: args.bag_seed };
    Ok(sample_bags(scene, &spec, args.min_points)?)
}

pub fn multiview(cfg: &RunConfig, args: &BagArgs, recon_dir: Option<&Path>, write_bags: bool) -> Result<(), CliError> {
    cfg.validate()?;
    let recon_dir = match (recon_dir, write_bags) {
        (Some(d), _) => Some(d),
        (None, true) => None,
        (None, false) => return Err(CliError::Validation("--recon-dir is required unless --write-bags is given".into())),
    };
    let mut scenes = Vec::new();
    for name in cfg.resolved_scenes()? {
        let dir = cfg.scene_dir(&name);
        if !dir.is_dir() {
            return Err(CliError::Validation(format!("scene directory {} not found", dir.display())));
        }
        scenes.push(load_scene(&dir, &cfg.method)?);
    }
    for scene in &scenes {
        let bags = scene_bags(cfg, scene, args)?;
        let out = cfg.output.join(&scene.name);
        let Some(recon_dir) = recon_dir else {
            fs::create_dir_all(&out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
            let path = out.join(BAGS_FILE);
            fs::write(&path, format_bags(&bags)).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            println!("{}: {} bags", scene.name, bags.len());
            print_written(&[path]);
            continue;
        };
        let gt: BTreeMap<_, _> = scene.images.iter().map(|im| (im.id.clone(), im.camera.pose())).collect();
        let report = run_multiview_metrics(&scene.name, &gt, &bags, &recon_dir.join(&scene.name), cfg.error_combination)?;
        for (size, maa) in &report.aggregate.per_size {
            println!("{}: bags of {size}: mAA {maa:.4}", scene.name);
        }
        println!("{}: mAA {:.4}, {} of {} bags missing", scene.name, report.aggregate.maa, report.flagged.len(), report.bags.len());
        print_written(&emit_multiview(&report, &out)?);
    }
    Ok(())
}

fn parse_modes(names: Vec<String>) -> Result<Vec<MatchingMode>, CliError> {
    names
        .into_iter()
        .map(|n| {
            Value::String(n.clone())
                .try_into()
                .map_err(|_| CliError::Validation(format!("unknown matching mode {n:?} (uni, both, either)")))
        })
        .collect()
}

/// Grid file, with any axis given on the command line replacing the file's.
pub fn grid(
    file: Option<&Path>,
    ratio: Vec<f64>,
    threshold: Vec<f64>,
    max_iterations: Vec<u64>,
    matching: Vec<String>,
) -> Result<SweepGrid, CliError> {
    let mut grid: SweepGrid = match file {
        Some(path) => read_toml(path)?,
        None => SweepGrid::default(),
    };
    if !ratio.is_empty() {
        grid.ratio = ratio;
    }
    if !threshold.is_empty() {
        grid.threshold = threshold;
    }
    if !max_iterations.is_empty() {
        grid.max_iterations = max_iterations;
    }
    if !matching.is_empty() {
        grid.matching = parse_modes(matching)?;
    }
    Ok(grid)
}

pub fn sweep(cfg: &RunConfig, grid: &SweepGrid, caching: bool) -> Result<(), CliError> {
    let report = run_sweep(cfg, grid, caching)?;
    println!("rank  matching  ratio  threshold  max-iterations  mAA");
    for e in &report.entries {
        let p = &e.point;
        let matching = Value::try_from(p.matching).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let flag = if e.failure.is_some() { "  (failed)" } else { "" };
        println!(
            "{:>4}  {matching:<8}  {:>5}  {:>9}  {:>14}  {:.4}{flag}",
            e.rank, p.ratio, p.threshold, p.max_iterations, e.maa
        );
    }
    print_written(&emit_sweep(&report, &cfg.output)?);
    Ok(())
}

pub fn calibrate(cfg: &RunConfig, target_seconds: f64, sample_pairs: usize) -> Result<(), CliError> {
    if sample_pairs == 0 {
        return Err(CliError::Validation("--sample-pairs must be at least 1".into()));
    }
    let calibration = calibrate_from_config(cfg, target_seconds, sample_pairs)?;
    print!("{}", to_json(&calibration)?);
    Ok(())
}

pub fn synth(spec: &Path, out: &Path) -> Result<(), CliError> {
    let spec: SynthSpec = read_toml(spec)?;
    let scene = generate_scene(&spec)?;
    let dir = out.join(&scene.name);
    save_scene(&scene, &dir)?;
    println!(
        "{}: {} images, {} observations, {} pairs",
        dir.display(),
        scene.images.len(),
        scene.observations.len(),
        scene.pairs.len()
    );
    Ok(())
}

pub fn validate(cfg: &RunConfig, recon_dir: Option<&Path>) -> Result<(), CliError> {
    let scenes = load_inputs(cfg)?;
    let mut problems = Vec::new();
    for scene in &scenes {
        let pairs = enumerate_pairs(scene, cfg.min_covis);
        for p in &pairs {
            let (a, b) = (&scene.images[p.a].id, &scene.images[p.b].id);
            if let Some(path) = cfg.match_file(&scene.name, a, b) {
                match fs::read(&path) {
                    Ok(bytes) => {
                        if let Err(e) = parse_matches(&bytes) {
                            problems.push(format!("{}: {e}", path.display()));
                        }
                    }
                    Err(e) => problems.push(format!("{}: {e}", path.display())),
                }
            }
        }
        let mut recons = 0;
        if let Some(dir) = recon_dir {
            let bags_file = cfg.scene_dir(&scene.name).join(BAGS_FILE);
            if bags_file.is_file() {
                let bytes = fs::read(&bags_file).map_err(|e| io_error(&bags_file, e))?;
                if let Err(e) = parse_bags(&bytes) {
                    problems.push(format!("{}: {e}", bags_file.display()));
                }
            }
            let scene_recons = dir.join(&scene.name);
            let entries = fs::read_dir(&scene_recons).map_err(|e| io_error(&scene_recons, e))?;
            for entry in entries {
                let path = entry.map_err(|e| io_error(&scene_recons, e))?.path();
                if path.extension().is_some_and(|x| x == "txt") {
                    recons += 1;
                    let bytes = fs::read(&path).map_err(|e| io_error(&path, e))?;
                    if let Err(e) = parse_reconstruction(&bytes) {
                        problems.push(format!("{}: {e}", path.display()));
                    }
                }
            }
        }
        println!("{}: {} images, {} pairs at min-covis {}, {recons} reconstructions", scene.name, scene.images.len(), pairs.len(), cfg.min_covis);
    }
    if problems.is_empty() {
        println!("ok");
        Ok(())
    } else {
        Err(CliError::Validation(problems.join("\n")))
    }
}
