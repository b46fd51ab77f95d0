use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acr::checkpoint::{self, TrainerSidecar};
use acr::config::RunConfig;
use acr::evaluate::evaluate;
use acr::flops::flops_report;
use acr::manifest::Manifest;
use acr::metrics::MetricsWriter;
use acr::trace::{record_episode, write_trace};
use acr::HarnessError;
use acr_core::training::train_with;
use acr_core::{Environment, Scheme};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "acr", version, about = "Train and evaluate UAV resolution-control policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a scheme and write metrics, checkpoint and manifest to a directory.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Print a progress line to stderr every N episodes (0 disables).
        #[arg(long, default_value_t = 100)]
        progress: usize,
    },
    /// Greedy evaluation of a checkpoint; prints a JSON report.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to the configuration in the manifest next to the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Layout seed; iteration i uses dynamics seed `seed + i * stride`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        stride: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-step forward-pass FLOPS of every scheme.
    Flops {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Record one greedy episode as JSON Lines.
    Trace {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to the layout seed.
        #[arg(long)]
        dynamics_seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const METRICS: &str = "metrics.csv";
const CHECKPOINT: &str = "checkpoint.bin";
const SIDECAR: &str = "trainer.json";
const MANIFEST: &str = "manifest.json";

fn train(
    config: Option<&Path>,
    scheme: Option<Scheme>,
    episodes: Option<usize>,
    seed: Option<u64>,
    out: &Path,
    progress: usize,
) -> Result<(), HarnessError> {
    let mut cfg = RunConfig::load_or_default(config)?;
    cfg.scheme = scheme.unwrap_or(cfg.scheme);
    cfg.episodes = episodes.unwrap_or(cfg.episodes);
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;

    let metrics_path = out.join(METRICS);
    let file = File::create(&metrics_path).map_err(|e| HarnessError::io(&metrics_path, e))?;
    let mut writer = MetricsWriter::new(BufWriter::new(file), cfg.scenario.agents)?;
    let mut failure = None;
    let trainer = train_with(&cfg.scenario, cfg.scheme, cfg.trainer(), cfg.episodes, cfg.seed, |m| {
        if failure.is_none() {
            failure = writer.write(m).err();
        }
        if progress > 0 && (m.episode + 1) % progress == 0 {
            eprintln!(
                "episode {:>6}  reward {:>10.3}  support {:.3}  epsilon {:.4}",
                m.episode + 1,
                m.total_reward_mean,
                m.support_rate_mean,
                m.epsilon
            );
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    writer.finish()?;

    let nets = trainer.networks();
    let sidecar = TrainerSidecar {
        format_version: checkpoint::VERSION,
        scheme: cfg.scheme,
        seed: cfg.seed,
        update_count: trainer.update_count(),
        epsilon: trainer.epsilon(),
        observation_len: cfg.scenario.observation_len(),
        agents: cfg.scenario.agents,
        checkpoint_sha256: checkpoint::sha256_hex(&checkpoint::encode(&nets)),
    };
    checkpoint::save(&out.join(CHECKPOINT), &nets, &sidecar)?;

    let mut manifest = Manifest::new("train", &cfg);
    for name in [METRICS, CHECKPOINT, SIDECAR] {
        manifest.add_output(out, name)?;
    }
    manifest.write(&out.join(MANIFEST))
}

/// Configuration for a checkpoint: an explicit file, else the manifest
/// beside the checkpoint, else defaults.
fn checkpoint_config(checkpoint: &Path, config: Option<&Path>) -> Result<RunConfig, HarnessError> {
    if config.is_some() {
        return RunConfig::load_or_default(config);
    }
    let manifest = checkpoint.with_file_name(MANIFEST);
    match fs::read_to_string(&manifest) {
        Ok(text) => serde_json::from_str::<Manifest>(&text)?.run_config(),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(RunConfig::default()),
        Err(e) => Err(HarnessError::io(manifest, e)),
    }
}

struct Loaded {
    cfg: RunConfig,
    nets: acr_core::training::TrainerNetworks,
    scheme: Scheme,
}

fn load(checkpoint: &Path, config: Option<&Path>, scheme: Option<Scheme>) -> Result<Loaded, HarnessError> {
    let cfg = checkpoint_config(checkpoint, config)?;
    let (nets, sha) = checkpoint::load_networks(checkpoint)?;
    checkpoint::check_compatible(&nets, cfg.scenario.observation_len())?;
    let sidecar = checkpoint::load_sidecar(checkpoint)?;
    if let Some(side) = &sidecar {
        if side.checkpoint_sha256 != sha {
            return Err(HarnessError::CheckpointMismatch(format!(
                "{} does not describe this checkpoint",
                checkpoint::sidecar_path(checkpoint).display()
            )));
        }
    }
    let scheme = scheme.or(sidecar.map(|s| s.scheme)).unwrap_or(cfg.scheme);
    Ok(Loaded { cfg, nets, scheme })
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| HarnessError::io(path, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train {
            config,
            scheme,
            episodes,
            seed,
            out,
            progress,
        } => train(config.as_deref(), scheme, episodes, seed, &out, progress),
        Command::Eval {
            checkpoint,
            config,
            scheme,
            iterations,
            seed,
            stride,
            out,
        } => {
            let l = load(&checkpoint, config.as_deref(), scheme)?;
            let report = evaluate(
                &l.nets.actors,
                l.scheme,
                &l.cfg.scenario,
                iterations.unwrap_or(l.cfg.eval_iterations),
                seed.unwrap_or(l.cfg.seed),
                stride.unwrap_or(l.cfg.eval_seed_stride),
            )?;
            let mut w = output(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w).and_then(|_| w.flush()).map_err(|e| HarnessError::io("<output>", e))
        }
        Command::Flops { config, json } => {
            let cfg = RunConfig::load_or_default(config.as_deref())?;
            let report = flops_report(&cfg.scenario)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
            Ok(())
        }
        Command::Trace {
            checkpoint,
            config,
            scheme,
            seed,
            dynamics_seed,
            out,
        } => {
            let l = load(&checkpoint, config.as_deref(), scheme)?;
            let layout = seed.unwrap_or(l.cfg.seed);
            let mut env = Environment::new(l.cfg.scenario.clone(), layout)?;
            let t = record_episode(&mut env, &l.nets.actors, l.scheme, layout, dynamics_seed.unwrap_or(layout))?;
            write_trace(output(out.as_deref())?, &t)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.to_string(), "kind": e.kind() });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
