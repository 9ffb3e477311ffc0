//! Run flags and their merge with an optional TOML config file.
//!
//! Every flag is named after the `RunConfig` field it sets. The file is read
//! first, flags given on the command line replace its values, and the merged
//! table is deserialized once so both sources go through the same checks.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use matchbench_core::harness::RunConfig;
use toml::{Table, Value};

use crate::CliError;

/// Default worker count when neither a flag nor the config file sets `jobs`.
pub const JOBS_ENV: &str = "MATCHBENCH_JOBS";

/// Keys a config file may contain.
pub const CONFIG_KEYS: [&str; 27] = [
    "data-root",
    "scenes",
    "scene-sets",
    "split",
    "method",
    "num-features",
    "matching",
    "ratio",
    "fginn",
    "min-geom-dist",
    "max-distance",
    "matches-dir",
    "confidence",
    "threshold",
    "max-iterations",
    "seed",
    "variant",
    "residual",
    "lo-enabled",
    "lo-rounds",
    "degeneracy-min-plane",
    "error-combination",
    "min-covis",
    "repeats",
    "jobs",
    "output",
    "timings",
];

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the settings below; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory holding one subdirectory per scene.
    #[arg(long, value_name = "DIR")]
    pub data_root: Option<PathBuf>,
    /// Comma-separated scene names.
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub scenes: Option<Vec<String>>,
    /// Name of a scene set from the config file, used instead of --scenes.
    #[arg(long)]
    pub split: Option<String>,
    /// Feature method whose keypoints and descriptors are evaluated.
    #[arg(long)]
    pub method: Option<String>,
    /// Keep only the highest-scoring keypoints per image.
    #[arg(long)]
    pub num_features: Option<usize>,
    /// uni, both or either.
    #[arg(long)]
    pub matching: Option<String>,
    /// Ratio-test threshold in [0, 1]; 1 disables the test.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Use FGINN instead of the plain ratio test.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fginn: Option<bool>,
    /// FGINN: competitors closer than this many pixels are ignored.
    #[arg(long)]
    pub min_geom_dist: Option<f64>,
    /// Drop matches whose descriptor distance exceeds this.
    #[arg(long)]
    pub max_distance: Option<f64>,
    /// Read pre-filtered matches from <DIR>/<scene>/<a>__<b>.txt.
    #[arg(long, value_name = "DIR")]
    pub matches_dir: Option<PathBuf>,

    /// RANSAC confidence in (0, 1).
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Inlier threshold in pixels.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// RANSAC iteration cap.
    #[arg(long)]
    pub max_iterations: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// plain or degensac.
    #[arg(long)]
    pub variant: Option<String>,
    /// symmetric-epipolar or sampson.
    #[arg(long)]
    pub residual: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub lo_enabled: Option<bool>,
    #[arg(long)]
    pub lo_rounds: Option<usize>,
    #[arg(long)]
    pub degeneracy_min_plane: Option<usize>,

    /// max, rotation-only or translation-only.
    #[arg(long)]
    pub error_combination: Option<String>,
    /// Co-visibility threshold for pair enumeration.
    #[arg(long)]
    pub min_covis: Option<f64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Worker threads, 0 for all cores. Defaults to $MATCHBENCH_JOBS.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Record per-stage wall times (makes reports non-reproducible).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timings: Option<bool>,
}

fn path_value(p: &std::path::Path) -> Value {
    Value::String(p.to_string_lossy().into_owned())
}

impl RunArgs {
    /// Flags that were given, keyed like the config file.
    fn overrides(&self) -> Result<Table, CliError> {
        let mut t = Table::new();
        let mut put = |key: &str, v: Option<Value>| {
            if let Some(v) = v {
                t.insert(key.to_string(), v);
            }
        };
        let int = |n: u64| -> Result<Value, CliError> {
            i64::try_from(n).map(Value::Integer).map_err(|_| CliError::Validation(format!("{n} is too large")))
        };
        put("data-root", self.data_root.as_deref().map(path_value));
        put("scenes", self.scenes.as_ref().map(|s| Value::Array(s.iter().cloned().map(Value::String).collect())));
        put("split", self.split.clone().map(Value::String));
        put("method", self.method.clone().map(Value::String));
        put("num-features", self.num_features.map(|n| int(n as u64)).transpose()?);
        put("matching", self.matching.clone().map(Value::String));
        put("ratio", self.ratio.map(Value::Float));
        put("fginn", self.fginn.map(Value::Boolean));
        put("min-geom-dist", self.min_geom_dist.map(Value::Float));
        put("max-distance", self.max_distance.map(Value::Float));
        put("matches-dir", self.matches_dir.as_deref().map(path_value));
        put("confidence", self.confidence.map(Value::Float));
        put("threshold", self.threshold.map(Value::Float));
        put("max-iterations", self.max_iterations.map(int).transpose()?);
        put("variant", self.variant.clone().map(Value::String));
        put("residual", self.residual.clone().map(Value::String));
        put("lo-enabled", self.lo_enabled.map(Value::Boolean));
        put("lo-rounds", self.lo_rounds.map(|n| int(n as u64)).transpose()?);
        put("degeneracy-min-plane", self.degeneracy_min_plane.map(|n| int(n as u64)).transpose()?);
        put("error-combination", self.error_combination.clone().map(Value::String));
        put("min-covis", self.min_covis.map(Value::Float));
        put("repeats", self.repeats.map(|n| int(n as u64)).transpose()?);
        put("jobs", self.jobs.map(|n| int(n as u64)).transpose()?);
        put("output", self.output.as_deref().map(path_value));
        put("timings", self.timings.map(Value::Boolean));
        Ok(t)
    }

    /// Config file, then flags, then `$MATCHBENCH_JOBS` if `jobs` is still unset.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        self.resolve_with_env(std::env::var(JOBS_ENV).ok())
    }

    pub fn resolve_with_env(&self, jobs_env: Option<String>) -> Result<RunConfig, CliError> {
        let mut table = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                let table: Table =
                    text.parse().map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                if let Some(key) = table.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
                    return Err(CliError::Validation(format!("{}: unknown setting {key:?}", path.display())));
                }
                table
            }
            None => Table::new(),
        };
        table.extend(self.overrides()?);
        if !table.contains_key("jobs") {
            if let Some(raw) = jobs_env.filter(|s| !s.trim().is_empty()) {
                let jobs: i64 = raw
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&n| n >= 0)
                    .ok_or_else(|| CliError::Validation(format!("{JOBS_ENV}={raw:?} is not a worker count")))?;
                table.insert("jobs".into(), Value::Integer(jobs));
            }
        }
        let mut cfg: RunConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Validation(format!("configuration: {}", e.message())))?;
        // Applied after parsing because seeds span all of u64 and TOML integers do not.
        if let Some(seed) = self.seed {
            cfg.ransac.seed = seed;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn every_config_field_has_a_key() {
        let Value::Table(t) = Value::try_from(RunConfig::default()).unwrap() else { panic!() };
        for key in t.keys() {
            assert!(CONFIG_KEYS.contains(&key.as_str()), "{key} missing from CONFIG_KEYS");
        }
    }

    #[test]
    fn flags_override_the_file_and_the_rest_keeps_file_values() {
        let f = file("threshold = 1.5\nratio = 0.7\nscenes = [\"a\", \"b\"]\nvariant = \"degensac\"\n");
        let args = RunArgs { config: Some(f.path().into()), threshold: Some(2.5), ..RunArgs::default() };
        let cfg = args.resolve_with_env(None).unwrap();
        assert_eq!(cfg.ransac.threshold, 2.5);
        assert_eq!(cfg.ratio, 0.7);
        assert_eq!(cfg.scenes, ["a", "b"]);
        assert_eq!(cfg.ransac.variant, matchbench_core::ransac::Variant::Degensac);
        assert_eq!(cfg.repeats, RunConfig::default().repeats);
    }

    #[test]
    fn jobs_env_is_only_a_default() {
        let none = RunArgs::default();
        assert_eq!(none.resolve_with_env(Some("3".into())).unwrap().jobs, 3);
        assert_eq!(none.resolve_with_env(None).unwrap().jobs, 0);
        let f = file("jobs = 2\n");
        let from_file = RunArgs { config: Some(f.path().into()), ..RunArgs::default() };
        assert_eq!(from_file.resolve_with_env(Some("3".into())).unwrap().jobs, 2);
        let flag = RunArgs { jobs: Some(5), ..RunArgs::default() };
        assert_eq!(flag.resolve_with_env(Some("3".into())).unwrap().jobs, 5);
        assert!(matches!(none.resolve_with_env(Some("-1".into())), Err(CliError::Validation(_))));
    }

    #[test]
    fn full_range_seeds_pass_through() {
        let args = RunArgs { seed: Some(u64::MAX), ..RunArgs::default() };
        assert_eq!(args.resolve_with_env(None).unwrap().ransac.seed, u64::MAX);
    }

    #[test]
    fn bad_files_are_validation_errors() {
        for text in ["nonsense = 3\n", "threshold = \"high\"\n", "ratio = [\n"] {
            let f = file(text);
            let args = RunArgs { config: Some(f.path().into()), ..RunArgs::default() };
            assert!(matches!(args.resolve_with_env(None), Err(CliError::Validation(_))), "{text}");
        }
        let missing = RunArgs { config: Some("/nonexistent/run.toml".into()), ..RunArgs::default() };
        assert!(matches!(missing.resolve_with_env(None), Err(CliError::Validation(_))));
    }
}
