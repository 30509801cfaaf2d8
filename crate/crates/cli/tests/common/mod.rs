#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crowdwrite::config::{Paths, PipelineConfig};
use crowdwrite_core::brainwrite::ExperimentPlan;
use crowdwrite_core::corpus::{ConditionKey, Group, IdeaClass};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdwrite"))
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .env_remove("CW_PROVIDER_BASE_URL")
        .env_remove("CW_PROVIDER_API_KEY")
        .output()
        .expect("binary runs")
}

pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Three finance topics with background text.
pub fn write_topics(dir: &Path) -> PathBuf {
    let path = dir.join("topics.jsonl");
    let lines: Vec<String> = [
        ("t1", "Lowering the cost of small-business credit"),
        ("t2", "Making retirement saving automatic"),
        ("t3", "Pricing climate risk in mortgages"),
    ]
    .iter()
    .map(|(id, title)| {
        serde_json::json!({
            "topic_id": id,
            "domain": "finance",
            "title": title,
            "background": format!("Recent studies on {} point to uneven access across regions.", title.to_lowercase()),
        })
        .to_string()
    })
    .collect();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

/// Plan with the given classes for group G1, model `flash`, `c` participants.
pub fn write_plan(dir: &Path, classes: &[IdeaClass], c: u32) -> PathBuf {
    let conditions = classes
        .iter()
        .map(|&class| ConditionKey::new(Group::G1, class, "flash", c))
        .collect();
    let plan = ExperimentPlan::new(conditions, 0);
    let path = dir.join("plan.json");
    fs::write(&path, serde_json::to_string_pretty(&plan).unwrap()).unwrap();
    path
}

/// Config with conventional names in `dir`, written as `pipeline.json`
/// with relative paths.
pub fn write_config(dir: &Path, edit: impl FnOnce(&mut PipelineConfig)) -> PathBuf {
    let mut config = PipelineConfig::new(Paths::in_dir(Path::new("")));
    config.seed = Some(7);
    edit(&mut config);
    let path = dir.join("pipeline.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

/// Every regular file in `dir` with its bytes, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}
