//! Command-line front end: `gen-shapes`, `train`, `eval`, `analyze` and
//! the full `run` pipeline.

mod config;
mod manifest;
mod run;

pub use config::{AnalysisConfig, DataConfig, ExperimentConfig};
pub use manifest::{describe, sha256_file, Artifact, RunManifest, Seeds, MANIFEST_FILE};
pub use run::{
    allocate_run_dir, analyze_all, prepare_data, run_experiment, write_training_outputs, Reports, Stage, StageError, ALIGN_FILE, CHECKPOINT_FILE, CONFIG_FILE,
    CURVE_FILE, RI_FILE, SCENES_FILE, SIMILARITY_FILE, STATS_FILE, SUMMARY_FILE, TRANSCRIPT_FILE,
};

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use crate::agents::{load_checkpoint, ActionMode};
use crate::analysis::{align_attributes, category_order, gold_similarity, load_categories, referential_inconsistency, success_curve, CurveSource};
use crate::datasets::{generate_shapes, load_feature_file, save_feature_file, save_text_file, split, AttributeSchema, FeatureMode, ShapesConfig, Split};
use crate::game::{accumulate_transcript, read_episode_log, write_episode_log};
use crate::numerics::RngStream;
use crate::training::{read_stats_csv, train};
use run::{curve_csv, AtStage};

#[derive(Parser, Debug)]
#[command(name = "refgame", version, about = "Two-agent referential game: train, evaluate and analyze")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic Shapes feature file
    GenShapes {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FeatureModeArg::OneHotNoisy)]
        feature_mode: FeatureModeArg,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Held-out scenes to mark as test (0 leaves every scene unassigned)
        #[arg(long, default_value_t = 1000)]
        test_count: usize,
        /// Write the tab-separated text format instead of binary
        #[arg(long)]
        text: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train both agents; writes stats.csv, checkpoint.bin and transcript.tsv
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Feature file overriding the config's data section
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Measure communication success of a checkpoint
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Sampled)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the played episodes as a transcript log
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Compute one protocol metric and write it as CSV
    Analyze {
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, required_unless_present = "stats")]
        transcript: Option<PathBuf>,
        #[arg(long, required_unless_present = "stats")]
        scenes: Option<PathBuf>,
        /// stats.csv, for the curve metric
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Vocabulary size; read from --checkpoint or the transcript when absent
        #[arg(long)]
        vocab: Option<usize>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        categories: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        #[arg(long, value_enum, default_value_t = CurveArg::Heldout)]
        source: CurveArg,
        #[arg(long)]
        smoothing: Option<usize>,
    },
    /// Full pipeline into a fresh run directory under --out
    Run {
        #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
        config: Option<PathBuf>,
        /// Repeat the run recorded in a manifest and check its checksums
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "manifest")]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FeatureModeArg {
    OneHotNoisy,
    RandomProjection,
}

impl From<FeatureModeArg> for FeatureMode {
    fn from(m: FeatureModeArg) -> Self {
        match m {
            FeatureModeArg::OneHotNoisy => FeatureMode::OneHotNoisy,
            FeatureModeArg::RandomProjection => FeatureMode::RandomProjection,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Sampled,
    Greedy,
}

impl From<ModeArg> for ActionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sampled => ActionMode::Sampled,
            ModeArg::Greedy => ActionMode::Greedy,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CurveArg {
    Heldout,
    Train,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Ri,
    Align,
    Sim,
    Curve,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::GenShapes {
            n,
            seed,
            feature_mode,
            dim,
            noise,
            test_count,
            text,
            out,
        } => {
            let config = ShapesConfig {
                n_scenes: n,
                feature_mode: feature_mode.into(),
                dim,
                noise_sigma: noise,
                seed,
            };
            let mut set = generate_shapes(&AttributeSchema::shapes(), &config).at(Stage::Data)?;
            if test_count > 0 {
                set = split(set, test_count, seed).at(Stage::Data)?;
            }
            if text {
                save_text_file(&set, &out).at(Stage::Data)?;
            } else {
                save_feature_file(&set, &out).at(Stage::Data)?;
            }
            println!("wrote {} scenes (D={dim}) to {}", set.len(), out.display());
        }
        Command::Train { config, out, scenes, seed } => {
            let mut cfg = ExperimentConfig::load(&config).at(Stage::Setup)?;
            if let Some(path) = scenes {
                cfg.data.file = Some(path);
            }
            if let Some(seed) = seed {
                cfg.train.seed = seed;
            }
            std::fs::create_dir_all(&out).with_context(|| format!("setup stage failed: creating {}", out.display()))?;
            let set = prepare_data(&cfg.data).at(Stage::Data)?;
            let outcome = train(&set, &cfg.train).at(Stage::Train)?;
            write_training_outputs(&outcome, &out).at(Stage::Train)?;
            println!(
                "held-out success {:.4} after {} iterations; outputs in {}",
                outcome.final_success,
                cfg.train.iterations,
                out.display()
            );
        }
        Command::Eval {
            checkpoint,
            scenes,
            split,
            mode,
            seed,
            transcript,
        } => {
            let ckpt = load_checkpoint(&checkpoint).at(Stage::Setup)?;
            let set = load_feature_file(&scenes).at(Stage::Data)?;
            let subset = set.subset(split.into());
            if subset.is_empty() {
                bail!("data stage failed: {} has no {} scenes", scenes.display(), Split::from(split).as_str());
            }
            let rng = RngStream::new(seed);
            let episodes = crate::game::play_scenes(&subset, &ckpt.speaker, &ckpt.listener, mode.into(), &rng, 0).at(Stage::Train)?;
            let success = episodes.iter().filter(|e| e.success).count() as f64 / episodes.len() as f64;
            if let Some(path) = transcript {
                write_episode_log(&path, &episodes).at(Stage::Train)?;
            }
            println!("success {success:.4} over {} {} scenes", subset.len(), Split::from(split).as_str());
        }
        Command::Analyze {
            metric,
            out,
            transcript,
            scenes,
            stats,
            vocab,
            checkpoint,
            categories,
            split,
            source,
            smoothing,
        } => {
            let (body, summary) = analyze_one(AnalyzeArgs {
                metric,
                transcript,
                scenes,
                stats,
                vocab,
                checkpoint,
                categories,
                split: split.into(),
                source: match source {
                    CurveArg::Heldout => CurveSource::Heldout,
                    CurveArg::Train => CurveSource::Train,
                },
                smoothing,
            })?;
            std::fs::write(&out, body).with_context(|| format!("analyze stage failed: writing {}", out.display()))?;
            println!("{summary}");
        }
        Command::Run { config, manifest, out, seed } => {
            let previous = manifest.as_deref().map(RunManifest::load).transpose().at(Stage::Setup)?;
            let cfg = match (&previous, config) {
                (Some(m), _) => m.config.clone(),
                (None, Some(path)) => {
                    let mut cfg = ExperimentConfig::load(&path).at(Stage::Setup)?;
                    if let Some(seed) = seed {
                        cfg.train.seed = seed;
                    }
                    cfg
                }
                (None, None) => bail!("setup stage failed: --config or --manifest is required"),
            };
            let (dir, fresh) = run_experiment(&cfg, &out)?;
            println!("run directory {}", dir.display());
            println!("held-out success {:.4}", fresh.final_success);
            if let Some(previous) = previous {
                let mut mismatched = Vec::new();
                for a in &previous.artifacts {
                    if fresh.artifact(&a.name).map(|b| &b.sha256) != Some(&a.sha256) {
                        mismatched.push(a.name.as_str());
                    }
                }
                if !mismatched.is_empty() {
                    bail!("manifest stage failed: artifacts differ from the recorded run: {}", mismatched.join(", "));
                }
                println!("all {} artifacts match the recorded checksums", previous.artifacts.len());
            }
        }
    }
    Ok(())
}

struct AnalyzeArgs {
    metric: Metric,
    transcript: Option<PathBuf>,
    scenes: Option<PathBuf>,
    stats: Option<PathBuf>,
    vocab: Option<usize>,
    checkpoint: Option<PathBuf>,
    categories: Option<PathBuf>,
    split: Split,
    source: CurveSource,
    smoothing: Option<usize>,
}

/// Returns the CSV body and a one-line summary.
fn analyze_one(args: AnalyzeArgs) -> anyhow::Result<(String, String)> {
    if args.metric == Metric::Curve {
        let Some(path) = &args.stats else {
            bail!("setup stage failed: --stats is required for the curve metric");
        };
        let stats = read_stats_csv(path).at(Stage::Data)?;
        if stats.points.is_empty() {
            bail!("analyze stage failed: {} has no eval points", path.display());
        }
        let curve = success_curve(&stats, args.source, args.smoothing);
        let body = curve_csv(&curve);
        let last = curve.last().map_or(0.0, |p| p.1);
        return Ok((body, format!("success curve: {} points, final {last:.4}", curve.len())));
    }
    let (Some(transcript_path), Some(scenes_path)) = (&args.transcript, &args.scenes) else {
        bail!("setup stage failed: --transcript and --scenes are required for this metric");
    };
    let episodes = read_episode_log(transcript_path).at(Stage::Data)?;
    let scenes = load_feature_file(scenes_path).at(Stage::Data)?;
    let vocab = match (args.vocab, &args.checkpoint) {
        (Some(v), _) => v,
        (None, Some(path)) => load_checkpoint(path).at(Stage::Data)?.dims().vocab,
        (None, None) => episodes.iter().map(|e| e.attribute + 1).max().unwrap_or(0),
    };
    let transcript = accumulate_transcript(&episodes, &scenes, Some(args.split)).at(Stage::Analyze)?;
    let names = scenes.schema().attribute_names();
    Ok(match args.metric {
        Metric::Ri => {
            let r = referential_inconsistency(&transcript, vocab).at(Stage::Analyze)?;
            (r.to_csv(), r.summary())
        }
        Metric::Align => {
            let a = align_attributes(&transcript, &scenes, vocab).at(Stage::Analyze)?;
            (a.to_csv(&names), a.summary())
        }
        Metric::Sim => {
            let order = match &args.categories {
                Some(path) => Some(category_order(&load_categories(path, scenes.schema()).at(Stage::Data)?)),
                None => None,
            };
            let s = gold_similarity(&transcript, &scenes, vocab, order.as_deref()).at(Stage::Analyze)?;
            (s.to_csv(&names), s.summary())
        }
        Metric::Curve => unreachable!("handled above"),
    })
}
