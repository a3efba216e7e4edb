use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use axagent_core::ax_tree::parse_ax_tree;
use axagent_core::obs_align;
use axagent_core::runtime::llm::{CompletionScript, HttpLlmClient, LlmClient, ScriptedClient, SharedClient};
use axagent_core::runtime::prompt::{instruction_text, PromptSet};
use axagent_core::runtime::trajectory::{diff_logs, FailureSource, LogDiff, Trajectory, TrajectoryLog};
use axagent_core::runtime::{run_episode, AgentConfig, ReplayEnvironment};
use clap::Args;
use serde::Deserialize;
use tracing::info;

use crate::overrides::ConfigArgs;

/// Command failure, by exit status class.
#[derive(Debug)]
pub enum Exit {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Llm(anyhow::Error),
}

impl Exit {
    fn rank(&self) -> u8 {
        match self {
            Exit::Usage(_) => 1,
            Exit::Data(_) => 2,
            Exit::Llm(_) => 3,
        }
    }
}

type CmdResult = Result<(), Exit>;

fn usage(e: impl Into<anyhow::Error>) -> Exit {
    Exit::Usage(e.into())
}

fn data(e: impl Into<anyhow::Error>) -> Exit {
    Exit::Data(e.into())
}

fn read_input(path: Option<&Path>) -> Result<String, Exit> {
    match path {
        None => read_stdin(),
        Some(p) if p.as_os_str() == "-" => read_stdin(),
        Some(p) => std::fs::read_to_string(p)
            .with_context(|| format!("cannot read {}", p.display()))
            .map_err(data),
    }
}

fn read_stdin() -> Result<String, Exit> {
    let mut s = String::new();
    std::io::stdin()
        .read_to_string(&mut s)
        .context("cannot read standard input")
        .map_err(data)?;
    Ok(s)
}

fn write_stdout(text: &str) -> CmdResult {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .context("cannot write standard output")
        .map_err(data)
}

pub fn condense(input: Option<&Path>, no_stats: bool, config: &ConfigArgs) -> CmdResult {
    let cfg = config.resolve().map_err(usage)?;
    let text = read_input(input)?;
    let tree = parse_ax_tree(&text).map_err(data)?;
    let obs = obs_align::condense(&tree, &cfg);
    let mut out = obs.text.clone();
    out.push('\n');
    if !no_stats {
        out.push_str(&obs.stats_line());
        out.push('\n');
    }
    write_stdout(&out)
}

pub fn specs(config: &ConfigArgs) -> CmdResult {
    let cfg = config.resolve().map_err(usage)?;
    let prompts = PromptSet::load(&cfg).map_err(usage)?;
    write_stdout(&format!("{}\n", instruction_text(&cfg, &prompts)))
}

pub fn inspect(log: Option<&Path>) -> CmdResult {
    let text = read_input(log)?;
    let log = TrajectoryLog::parse(&text).map_err(data)?;
    let mut out = String::new();
    out.push_str(&format!(
        "{:>4}  {:>4}  {:>8}  {:>10}  {:>5}  {}\n",
        "step", "plan", "obs_tok", "prompt_tok", "calls", "action"
    ));
    for s in &log.steps {
        let flag = if s.corrective { " (corrected)" } else { "" };
        out.push_str(&format!(
            "{:>4}  {:>4}  {:>8}  {:>10}  {:>5}  {}{flag}\n",
            s.step_index,
            s.plan_id,
            s.obs_tokens,
            s.prompt_tokens,
            s.llm_calls,
            s.action.as_deref().unwrap_or("(none)"),
        ));
    }
    let sum = &log.summary;
    out.push_str(&format!(
        "task={} cause={} steps={} llm_calls={} mean_obs_tokens={:.2} mean_prompt_tokens={:.2}\n",
        sum.task_id,
        sum.cause,
        log.steps.len(),
        log.total_llm_calls(),
        log.mean_obs_tokens(),
        log.mean_prompt_tokens(),
    ));
    if let Some(answer) = &sum.answer {
        out.push_str(&format!("answer: {answer}\n"));
    }
    write_stdout(&out)
}

pub fn diff(a: &Path, b: &Path) -> CmdResult {
    let left = TrajectoryLog::parse(&read_input(Some(a))?)
        .with_context(|| a.display().to_string())
        .map_err(data)?;
    let right = TrajectoryLog::parse(&read_input(Some(b))?)
        .with_context(|| b.display().to_string())
        .map_err(data)?;
    let line = match diff_logs(&left, &right) {
        LogDiff::Identical => "identical".to_string(),
        LogDiff::Step(i) => {
            let show = |log: &TrajectoryLog| {
                log.steps
                    .get(i)
                    .map(|s| s.action.clone().unwrap_or_else(|| "(none)".into()))
                    .unwrap_or_else(|| "(ended)".into())
            };
            format!("first divergent step: {i}\n< {}\n> {}", show(&left), show(&right))
        }
        LogDiff::Summary => "steps identical; summaries differ".to_string(),
    };
    write_stdout(&format!("{line}\n"))
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Snapshot graph for the replay environment.
    #[arg(long, required_unless_present = "batch")]
    pub snapshots: Option<PathBuf>,
    /// Task objective given to the agent.
    #[arg(long, required_unless_present = "batch")]
    pub objective: Option<String>,
    /// Scripted completions; absent means the live endpoint.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Task label used in the log and batch output names.
    #[arg(long = "task_id", alias = "task-id", default_value = "task")]
    pub task_id: String,
    /// Trajectory log path, or the output directory with `--batch`.
    #[arg(long, short)]
    pub out: PathBuf,
    /// TOML file listing `[[episode]]` entries to run.
    #[arg(long, conflicts_with_all = ["snapshots", "objective", "script"])]
    pub batch: Option<PathBuf>,
    /// Episodes run concurrently in batch mode.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchFile {
    #[serde(rename = "episode")]
    episodes: Vec<BatchEpisode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchEpisode {
    task_id: String,
    objective: String,
    snapshots: PathBuf,
    #[serde(default)]
    script: Option<PathBuf>,
}

struct EpisodeJob {
    task_id: String,
    objective: String,
    snapshots: PathBuf,
    script: Option<PathBuf>,
    out: PathBuf,
}

fn live_client(cfg: &AgentConfig) -> Result<Box<dyn LlmClient>, Exit> {
    let http = HttpLlmClient::from_env(&cfg.llm).map_err(|e| Exit::Llm(e.into()))?;
    Ok(Box::new(SharedClient::new(http, &cfg.llm)))
}

/// Runs one job and writes its log; reports the line to print.
fn run_job(cfg: &AgentConfig, prompts: &PromptSet, live: Option<&dyn LlmClient>, job: &EpisodeJob) -> Result<String, Exit> {
    let mut env = ReplayEnvironment::load(&job.snapshots).map_err(data)?;
    let scripted;
    let llm: &dyn LlmClient = match (&job.script, live) {
        (Some(path), _) => {
            let script = CompletionScript::load(path).map_err(|e| data(anyhow!(e)))?;
            scripted = SharedClient::new(ScriptedClient::new(script), &cfg.llm);
            &scripted
        }
        (None, Some(client)) => client,
        (None, None) => unreachable!("live client created when any job lacks a script"),
    };
    let trajectory = run_episode(cfg, prompts, &mut env, llm, &job.task_id, &job.objective).map_err(usage)?;
    write_log(&job.out, &trajectory)?;
    info!(task = %job.task_id, out = %job.out.display(), "trajectory written");
    let mut line = format!("task: {}\ncause: {}\n", job.task_id, trajectory.outcome.cause);
    if let Some(answer) = &trajectory.outcome.answer {
        line.push_str(&format!("answer: {answer}\n"));
    }
    if let Some(failure) = &trajectory.outcome.failure {
        let err = anyhow!("{}: {}", job.task_id, failure.message);
        // The log is already written; report the failure class.
        print!("{line}");
        return Err(match failure.source {
            FailureSource::Llm => Exit::Llm(err),
            FailureSource::Environment => Exit::Data(err),
        });
    }
    Ok(line)
}

fn write_log(path: &Path, trajectory: &Trajectory) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(data)?;
    }
    std::fs::write(path, trajectory.to_jsonl())
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(data)
}

pub fn run(args: &RunArgs) -> CmdResult {
    let cfg = args.config.resolve().map_err(usage)?;
    let prompts = PromptSet::load(&cfg).map_err(usage)?;
    let jobs = match &args.batch {
        None => vec![EpisodeJob {
            task_id: args.task_id.clone(),
            objective: args.objective.clone().expect("required by clap"),
            snapshots: args.snapshots.clone().expect("required by clap"),
            script: args.script.clone(),
            out: args.out.clone(),
        }],
        Some(batch) => load_batch(batch, &args.out)?,
    };
    if args.parallel == 0 {
        return Err(usage(anyhow!("--parallel must be at least 1")));
    }
    let live = if jobs.iter().any(|j| j.script.is_none()) {
        Some(live_client(&cfg)?)
    } else {
        None
    };
    let live = live.as_deref();

    if jobs.len() == 1 {
        let line = run_job(&cfg, &prompts, live, &jobs[0])?;
        return write_stdout(&line);
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<String, Exit>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..args.parallel.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let r = run_job(&cfg, &prompts, live, job);
                results.lock().expect("poisoned")[i] = Some(r);
            });
        }
    });
    let mut worst: Option<Exit> = None;
    let mut out = String::new();
    for r in results.into_inner().expect("poisoned").into_iter().flatten() {
        match r {
            Ok(line) => out.push_str(&line),
            Err(e) => {
                eprintln!("error: {:#}", match &e {
                    Exit::Usage(e) | Exit::Data(e) | Exit::Llm(e) => e,
                });
                if worst.as_ref().is_none_or(|w| e.rank() > w.rank()) {
                    worst = Some(e);
                }
            }
        }
    }
    write_stdout(&out)?;
    match worst {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn load_batch(path: &Path, out_dir: &Path) -> Result<Vec<EpisodeJob>, Exit> {
    let text = read_input(Some(path))?;
    let file: BatchFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse batch file {}", path.display()))
        .map_err(usage)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut seen = std::collections::BTreeSet::new();
    let mut jobs = Vec::new();
    for ep in file.episodes {
        if !seen.insert(ep.task_id.clone()) {
            return Err(usage(anyhow!("duplicate task_id `{}` in batch file", ep.task_id)));
        }
        jobs.push(EpisodeJob {
            out: out_dir.join(format!("{}.jsonl", ep.task_id)),
            snapshots: base.join(ep.snapshots),
            script: ep.script.map(|s| base.join(s)),
            task_id: ep.task_id,
            objective: ep.objective,
        });
    }
    Ok(jobs)
}
