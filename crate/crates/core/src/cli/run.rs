use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::config::{AnalysisConfig, DataConfig, ExperimentConfig};
use super::manifest::{describe, RunManifest, Seeds, MANIFEST_FILE};
use crate::agents::save_checkpoint;
use crate::analysis::{align_attributes, category_order, gold_similarity, load_categories, referential_inconsistency, success_curve, CurveSource};
use crate::datasets::{generate_shapes, load_feature_file, save_feature_file, split, AttributeSchema, SceneSet, Split};
use crate::error::Error;
use crate::game::{accumulate_transcript, write_episode_log, Episode};
use crate::numerics::RNG_ALGORITHM;
use crate::training::{play_transcript, train, write_stats_csv, TrainOutcome, TrainStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Data,
    Train,
    Analyze,
    Manifest,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Setup => "setup",
            Stage::Data => "data",
            Stage::Train => "train",
            Stage::Analyze => "analyze",
            Stage::Manifest => "manifest",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {error}")]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
}

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T> AtStage<T> for crate::error::Result<T> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

pub const SCENES_FILE: &str = "scenes.rgs";
pub const CONFIG_FILE: &str = "config.toml";
pub const STATS_FILE: &str = "stats.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TRANSCRIPT_FILE: &str = "transcript.tsv";
pub const RI_FILE: &str = "ri.csv";
pub const ALIGN_FILE: &str = "align.csv";
pub const SIMILARITY_FILE: &str = "similarity.csv";
pub const CURVE_FILE: &str = "curve.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Loads or generates the scenes and assigns the held-out split.
pub fn prepare_data(data: &DataConfig) -> crate::error::Result<SceneSet> {
    match &data.file {
        Some(path) => {
            let set = load_feature_file(path)?;
            if set.indices(Split::Test).is_empty() {
                split(set, data.test_count, data.split_seed)
            } else {
                Ok(set)
            }
        }
        None => split(generate_shapes(&AttributeSchema::shapes(), &data.shapes)?, data.test_count, data.split_seed),
    }
}

/// Writes `stats.csv`, `checkpoint.bin` and `transcript.tsv` into `dir`.
pub fn write_training_outputs(outcome: &TrainOutcome, dir: &Path) -> crate::error::Result<()> {
    write_stats_csv(&outcome.stats, &dir.join(STATS_FILE))?;
    save_checkpoint(&outcome.checkpoint, &dir.join(CHECKPOINT_FILE))?;
    write_episode_log(&dir.join(TRANSCRIPT_FILE), &outcome.transcript)?;
    Ok(())
}

/// CSV reports and summary lines produced by [`analyze_all`].
pub struct Reports {
    pub files: Vec<(&'static str, String)>,
    pub summary: Vec<String>,
}

pub fn analyze_all(episodes: &[Episode], scenes: &SceneSet, vocab: usize, stats: &TrainStats, analysis: &AnalysisConfig) -> crate::error::Result<Reports> {
    let transcript = accumulate_transcript(episodes, scenes, Some(analysis.split))?;
    let names = scenes.schema().attribute_names();
    let ri = referential_inconsistency(&transcript, vocab)?;
    let align = align_attributes(&transcript, scenes, vocab)?;
    let order = match &analysis.categories {
        Some(path) => Some(category_order(&load_categories(path, scenes.schema())?)),
        None => None,
    };
    let sim = gold_similarity(&transcript, scenes, vocab, order.as_deref())?;
    let curve = success_curve(stats, CurveSource::Heldout, analysis.smoothing);
    Ok(Reports {
        summary: vec![ri.summary(), align.summary(), sim.summary()],
        files: vec![
            (RI_FILE, ri.to_csv()),
            (ALIGN_FILE, align.to_csv(&names)),
            (SIMILARITY_FILE, sim.to_csv(&names)),
            (CURVE_FILE, curve_csv(&curve)),
        ],
    })
}

pub(crate) fn curve_csv(curve: &[(usize, f64)]) -> String {
    let mut body = String::from("iteration,success\n");
    for (it, v) in curve {
        body.push_str(&format!("{it},{v:?}\n"));
    }
    body
}

/// Creates `root/run-NNNN` with the next unused index.
pub fn allocate_run_dir(root: &Path) -> crate::error::Result<PathBuf> {
    fs::create_dir_all(root)?;
    let mut next = 0u32;
    for entry in fs::read_dir(root)? {
        let name = entry?.file_name();
        if let Some(n) = name.to_str().and_then(|s| s.strip_prefix("run-")).and_then(|s| s.parse::<u32>().ok()) {
            next = next.max(n + 1);
        }
    }
    let dir = root.join(format!("run-{next:04}"));
    fs::create_dir(&dir)?;
    Ok(dir)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Generates or loads data, trains, analyzes and writes every artifact plus
/// a manifest into a fresh run directory under `root`. Artifacts from
/// completed stages stay on disk if a later stage fails.
pub fn run_experiment(config: &ExperimentConfig, root: &Path) -> Result<(PathBuf, RunManifest), StageError> {
    let started = unix_now();
    config.validate().at(Stage::Setup)?;
    let dir = allocate_run_dir(root).at(Stage::Setup)?;
    let config_text = config.to_toml().at(Stage::Setup)?;
    fs::write(dir.join(CONFIG_FILE), config_text)
        .map_err(Error::file(&dir.join(CONFIG_FILE)))
        .at(Stage::Setup)?;

    let scenes = prepare_data(&config.data).at(Stage::Data)?;
    save_feature_file(&scenes, &dir.join(SCENES_FILE)).at(Stage::Data)?;

    let outcome = train(&scenes, &config.train).at(Stage::Train)?;
    write_training_outputs(&outcome, &dir).at(Stage::Train)?;

    let episodes = match config.analysis.split {
        Split::Test => outcome.transcript.clone(),
        other => play_transcript(&outcome.checkpoint.speaker, &outcome.checkpoint.listener, &scenes, other, &config.train).at(Stage::Analyze)?,
    };
    let reports = analyze_all(&episodes, &scenes, config.train.vocab_size, &outcome.stats, &config.analysis).at(Stage::Analyze)?;
    for (name, body) in &reports.files {
        fs::write(dir.join(name), body).map_err(Error::file(&dir.join(name))).at(Stage::Analyze)?;
    }
    let mut summary = format!("held-out success {:.4}\n", outcome.final_success);
    for line in &reports.summary {
        summary.push_str(line);
        summary.push('\n');
    }
    fs::write(dir.join(SUMMARY_FILE), summary)
        .map_err(Error::file(&dir.join(SUMMARY_FILE)))
        .at(Stage::Analyze)?;

    let names = [
        ("config", CONFIG_FILE),
        ("scenes", SCENES_FILE),
        ("stats", STATS_FILE),
        ("checkpoint", CHECKPOINT_FILE),
        ("transcript", TRANSCRIPT_FILE),
        ("ri", RI_FILE),
        ("align", ALIGN_FILE),
        ("similarity", SIMILARITY_FILE),
        ("curve", CURVE_FILE),
        ("summary", SUMMARY_FILE),
    ];
    let artifacts = names
        .into_iter()
        .map(|(name, file)| describe(name, &dir, file))
        .collect::<crate::error::Result<Vec<_>>>()
        .at(Stage::Manifest)?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        started_unix_secs: started,
        finished_unix_secs: unix_now(),
        seeds: Seeds {
            data: config.data.file.is_none().then_some(config.data.shapes.seed),
            split: config.data.split_seed,
            train: config.train.seed,
        },
        config: config.clone(),
        final_success: outcome.final_success,
        artifacts,
    };
    manifest.save(&dir.join(MANIFEST_FILE)).at(Stage::Manifest)?;
    Ok((dir, manifest))
}
