#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;

const HOBBIES: &[&str] = &["chess", "hiking", "baking", "jazz", "surfing", "poetry", "karate", "gardening", "cycling", "fishing"];
const PETS: &[&str] = &["dog", "cat", "parrot", "hamster", "turtle", "rabbit"];
const JOBS: &[&str] = &["nurse", "teacher", "pilot", "chef", "lawyer", "farmer", "baker"];

/// A dialogue whose utterances restate most persona sentences, so the
/// overlap classifier aligns them with full confidence.
fn dialogue(id: &str, k: usize) -> serde_json::Value {
    let h = |i: usize| HOBBIES[(k * 3 + i) % HOBBIES.len()];
    let pet = PETS[k % PETS.len()];
    let job = JOBS[(k / 2) % JOBS.len()];
    let pjob = JOBS[(k + 3) % JOBS.len()];
    let self_persona = [
        format!("i like {}", h(0)),
        format!("i have a {pet}"),
        format!("my job is {job}"),
    ];
    let partner_persona = [
        format!("i enjoy {}", h(1)),
        format!("i work as a {pjob}"),
        "i live in a small town".to_string(),
    ];
    let turns = [
        ("self", format!("hello ! i like {} so much", h(0))),
        ("partner", format!("nice , i enjoy {} on weekends", h(1))),
        ("self", format!("cool . i have a {pet} at home")),
        ("partner", format!("i work as a {pjob} these days")),
        ("self", format!("well my job is {job} and it is fine")),
        ("partner", "i live in a big city now".to_string()),
    ];
    json!({
        "id": id,
        "turns": turns.iter().map(|(s, t)| json!({"speaker": s, "text": t})).collect::<Vec<_>>(),
        "personas": {"self": self_persona, "partner": partner_persona},
    })
}

pub fn write_corpus(path: &Path, prefix: &str, n: usize, offset: usize) {
    let lines: Vec<String> = (0..n)
        .map(|i| dialogue(&format!("{prefix}-{i}"), offset + i).to_string())
        .collect();
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

/// Train, valid and test corpora under `dir`.
pub fn write_corpora(dir: &Path) -> [PathBuf; 3] {
    let paths = ["train", "valid", "test"].map(|s| dir.join(format!("{s}.jsonl")));
    write_corpus(&paths[0], "train", 12, 0);
    write_corpus(&paths[1], "valid", 4, 12);
    write_corpus(&paths[2], "test", 4, 16);
    paths
}

pub fn pgtask(args: &[&str]) -> Output {
    pgtask_env(args, &[])
}

pub fn pgtask_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pgtask"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
