#![allow(dead_code)]

use std::path::Path;

use matchbench_core::dataset::{save_scene, SceneBundle};
use matchbench_core::harness::RunConfig;
use matchbench_core::synthetic::{generate_scene, SynthSpec};

/// A small scene that keeps harness tests fast.
pub fn small_spec(name: &str) -> SynthSpec {
    SynthSpec { name: name.into(), cameras: 12, points: 500, ..SynthSpec::default() }
}

/// Generates `spec` and writes it under `root/<spec.name>`.
pub fn write_scene(root: &Path, spec: &SynthSpec) -> SceneBundle {
    let scene = generate_scene(spec).expect("valid spec");
    save_scene(&scene, &root.join(&spec.name)).expect("writable");
    scene
}

pub fn config(root: &Path, scenes: &[&str]) -> RunConfig {
    RunConfig {
        data_root: root.to_path_buf(),
        scenes: scenes.iter().map(|s| s.to_string()).collect(),
        method: "synthetic".into(),
        output: root.join("out"),
        ..RunConfig::default()
    }
}
