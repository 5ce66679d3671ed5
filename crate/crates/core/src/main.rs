use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semnbv::harness::{self, parse_metrics, PlannerKind, RunConfig, KEYS};
use semnbv::metrics::summarize;
use semnbv::scene::load_scene;

fn config_help() -> String {
    let defaults = RunConfig::default();
    let mut s = String::from("Configuration keys (`key = value`, one per line) and defaults:\n");
    for (k, doc) in KEYS {
        let v = defaults.get(k).unwrap_or_default();
        let v = if v.is_empty() { "<unset>".to_string() } else { v };
        s.push_str(&format!("  {k:<22} {v:<20} {doc}\n"));
    }
    s
}

#[derive(Parser)]
#[command(name = "semnbv", version, about = "Semantic-aware next-best-view planning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one mission and write its logs.
    #[command(after_help = config_help())]
    Run {
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_planner)]
        planner: Option<PlannerKind>,
    },
    /// Parse and validate a scene file.
    ValidateScene { path: PathBuf },
    /// Recompute the summary of a finished run from its metrics log.
    ReplayMetrics { dir: PathBuf },
}

fn parse_planner(s: &str) -> Result<PlannerKind, String> {
    s.parse()
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { scene, config, out, seed, planner } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::parse(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
                None => RunConfig::default(),
            };
            if let Some(s) = scene {
                cfg.scene_path = Some(s);
            }
            if let Some(s) = seed {
                cfg.rng_seed = s;
            }
            if let Some(p) = planner {
                cfg.planner = p;
            }
            let path = cfg.scene_path.clone().ok_or("no scene given (--scene or `scene =`)")?;
            let scene = load_scene(&read(&path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            let outcome = harness::run_to_dir(&cfg, &scene, &out).map_err(|e| e.to_string())?;
            println!(
                "finished={} stop_reason={} sim_time_s={} rounds={}",
                outcome.finished,
                outcome.stop_reason,
                outcome.sim_time,
                outcome.rounds.len()
            );
            Ok(())
        }
        Command::ValidateScene { path } => {
            let scene = load_scene(&read(&path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            println!(
                "ok: {} objects, targets [{}]",
                scene.objects().len(),
                scene.targets().join(", ")
            );
            Ok(())
        }
        Command::ReplayMetrics { dir } => {
            let samples = parse_metrics(&read(&dir.join("metrics.csv"))?).map_err(|e| e.to_string())?;
            let s = summarize(&samples).map_err(|e| e.to_string())?;
            println!("samples = {}", s.samples);
            println!("mean_directivity = {}", s.mean_directivity);
            println!("std_directivity = {}", s.std_directivity);
            println!(
                "histogram = {} {} {} {}",
                s.histogram[0], s.histogram[1], s.histogram[2], s.histogram[3]
            );
            println!("final_roi_ratio = {}", s.final_roi_ratio);
            println!("final_roi_progress = {}", s.final_roi_progress);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
