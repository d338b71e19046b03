use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::{ShapesConfig, Split};
use crate::error::{Error, Result};
use crate::training::TrainConfig;

/// Where scenes come from and how they are split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Feature file to load. Shapes scenes are generated when absent.
    pub file: Option<PathBuf>,
    pub shapes: ShapesConfig,
    /// Held-out scene count. A loaded file that already carries a test
    /// split keeps it.
    pub test_count: usize,
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            file: None,
            shapes: ShapesConfig::default(),
            test_count: 1000,
            split_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Split whose transcript episodes are analyzed.
    pub split: Split,
    /// `attribute<TAB>category` file for the similarity ordering.
    pub categories: Option<PathBuf>,
    /// Trailing moving-average window for the success curve.
    pub smoothing: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            split: Split::Test,
            categories: None,
            smoothing: None,
        }
    }
}

/// A full experiment, read from TOML:
///
/// ```toml
/// [data]
/// test_count = 1000
/// [data.shapes]
/// n_scenes = 100000
/// dim = 64
/// [train]
/// seed = 0
/// vocab_size = 18
/// [analysis]
/// split = "test"
/// ```
///
/// Every key is optional. Relative paths are resolved against the config
/// file's directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub train: TrainConfig,
    pub analysis: AnalysisConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.data.file.is_none() && self.data.test_count >= self.data.shapes.n_scenes {
            return Err(Error::Config(format!(
                "test_count {} leaves no training scenes out of {}",
                self.data.test_count, self.data.shapes.n_scenes
            )));
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.data.file);
        fix(&mut self.analysis.categories);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::default();
        c.train.vocab_size = 2;
        c.data.shapes.n_scenes = 500;
        c.analysis.categories = Some("cats.tsv".into());
        let text = c.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("[train]\nlearning_rat = 1.0\n").is_err());
        assert!(ExperimentConfig::from_toml("[extra]\n").is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "[data]\nfile = \"scenes.rgs\"\n[analysis]\ncategories = \"/abs/cats.tsv\"\n").unwrap();
        let c = ExperimentConfig::load(&path).unwrap();
        assert_eq!(c.data.file.unwrap(), dir.path().join("scenes.rgs"));
        assert_eq!(c.analysis.categories.unwrap(), PathBuf::from("/abs/cats.tsv"));
    }

    #[test]
    fn oversized_test_split_is_rejected() {
        let c = ExperimentConfig::from_toml("[data]\ntest_count = 10\n[data.shapes]\nn_scenes = 10\n").unwrap();
        assert!(c.validate().is_err());
    }
}
