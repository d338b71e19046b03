use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::schema::AttributeSchema;
use crate::error::{Error, Result};

pub type AttributeSet = BTreeSet<usize>;

/// Identity of an object (image) for referential-consistency bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectId(pub u64);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One object as seen by the agents.
///
/// `values` holds the per-group value indices when known (synthetic scenes);
/// objects loaded from feature files may carry only an id and a feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectSpec {
    pub id: ObjectId,
    pub values: Option<Vec<usize>>,
    pub feature: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub id: u64,
    pub referent: ObjectSpec,
    pub context: ObjectSpec,
    pub gold: AttributeSet,
}

/// Attributes of the referent that the context lacks.
pub fn gold_attributes(referent: &AttributeSet, context: &AttributeSet) -> AttributeSet {
    referent.difference(context).copied().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Unassigned,
    Train,
    Test,
}

impl Split {
    pub(crate) fn code(self) -> u8 {
        match self {
            Split::Unassigned => 0,
            Split::Train => 1,
            Split::Test => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Split> {
        match code {
            0 => Some(Split::Unassigned),
            1 => Some(Split::Train),
            2 => Some(Split::Test),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Unassigned => "unassigned",
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "unassigned" => Some(Split::Unassigned),
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// An immutable collection of scenes sharing a schema and feature dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSet {
    schema: AttributeSchema,
    dim: usize,
    scenes: Vec<Scene>,
    splits: Vec<Split>,
    provenance: String,
    index: HashMap<u64, usize>,
}

impl SceneSet {
    pub fn new(schema: AttributeSchema, dim: usize, scenes: Vec<Scene>, provenance: impl Into<String>) -> Result<Self> {
        let splits = vec![Split::Unassigned; scenes.len()];
        SceneSet::with_splits(schema, dim, scenes, splits, provenance)
    }

    pub fn with_splits(schema: AttributeSchema, dim: usize, scenes: Vec<Scene>, splits: Vec<Split>, provenance: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be positive"));
        }
        if splits.len() != scenes.len() {
            return Err(Error::invalid("one split label per scene required"));
        }
        let total = schema.total();
        let mut index = HashMap::with_capacity(scenes.len());
        for (i, s) in scenes.iter().enumerate() {
            if index.insert(s.id, i).is_some() {
                return Err(Error::invalid(format!("duplicate scene id {}", s.id)));
            }
            for obj in [&s.referent, &s.context] {
                if obj.feature.len() != dim {
                    return Err(Error::invalid(format!(
                        "scene {}: feature has dimension {}, expected {dim}",
                        s.id,
                        obj.feature.len()
                    )));
                }
                if let Some(values) = &obj.values {
                    schema.validate_values(values)?;
                }
            }
            if s.gold.iter().any(|&g| g >= total) {
                return Err(Error::invalid(format!("scene {}: gold attribute out of range", s.id)));
            }
        }
        Ok(SceneSet {
            schema,
            dim,
            scenes,
            splits,
            provenance: provenance.into(),
            index,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scenes(&self) -> &[Scene] {
        &self.scenes
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn get(&self, id: u64) -> Option<&Scene> {
        self.index.get(&id).map(|&i| &self.scenes[i])
    }

    pub fn split_of(&self, id: u64) -> Option<Split> {
        self.index.get(&id).map(|&i| self.splits[i])
    }

    /// Positions (not ids) of the scenes carrying `split`.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.splits.iter().enumerate().filter(|(_, s)| **s == split).map(|(i, _)| i).collect()
    }

    pub fn subset(&self, split: Split) -> Vec<&Scene> {
        self.indices(split).into_iter().map(|i| &self.scenes[i]).collect()
    }

    pub(crate) fn relabel(mut self, splits: Vec<Split>) -> Self {
        debug_assert_eq!(splits.len(), self.scenes.len());
        self.splits = splits;
        self
    }
}
