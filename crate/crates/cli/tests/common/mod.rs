#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

pub const DEMO_OBJECTIVE: &str =
    "Open my latest updated issue that has keyword \"feature\" in its title to check if it is closed";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn axagent() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_axagent"));
    cmd.env_remove("AGENT_LLM_API_KEY").env_remove("AXAGENT_LOG");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    axagent().args(args).output().expect("binary runs")
}

pub fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = axagent()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs the shipped issue-search demo, writing the log to `out`.
pub fn run_demo(out: &Path, script: &Path) -> Output {
    let demo = fixtures().join("demo");
    run(&[
        "run",
        "--config",
        demo.join("config.toml").to_str().unwrap(),
        "--snapshots",
        demo.join("snapshots.toml").to_str().unwrap(),
        "--script",
        script.to_str().unwrap(),
        "--objective",
        DEMO_OBJECTIVE,
        "--task_id",
        "gitlab-174",
        "--out",
        out.to_str().unwrap(),
    ])
}
