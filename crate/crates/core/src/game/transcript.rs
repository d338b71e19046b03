use std::collections::{BTreeMap, BTreeSet};

use super::episode::Episode;
use crate::datasets::{ObjectId, SceneSet, Split};
use crate::error::{Error, Result};

/// Episodes plus, per object, the symbols emitted while it was the referent
/// (`R(i)`) and while it was the context (`C(i)`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    episodes: Vec<Episode>,
    referent_sets: BTreeMap<ObjectId, BTreeSet<usize>>,
    context_sets: BTreeMap<ObjectId, BTreeSet<usize>>,
}

impl Transcript {
    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn referent_set(&self, object: ObjectId) -> Option<&BTreeSet<usize>> {
        self.referent_sets.get(&object)
    }

    pub fn context_set(&self, object: ObjectId) -> Option<&BTreeSet<usize>> {
        self.context_sets.get(&object)
    }

    /// Every object that appeared in either slot, in id order.
    pub fn objects(&self) -> BTreeSet<ObjectId> {
        self.referent_sets.keys().chain(self.context_sets.keys()).copied().collect()
    }

    pub fn referent_sets(&self) -> &BTreeMap<ObjectId, BTreeSet<usize>> {
        &self.referent_sets
    }

    pub fn context_sets(&self) -> &BTreeMap<ObjectId, BTreeSet<usize>> {
        &self.context_sets
    }
}

/// Builds R(i)/C(i) from `episodes`. When `split` is given, episodes on
/// scenes outside that split are skipped.
pub fn accumulate_transcript(episodes: &[Episode], scenes: &SceneSet, split: Option<Split>) -> Result<Transcript> {
    let mut t = Transcript::default();
    for e in episodes {
        let scene = scenes.get(e.scene_id).ok_or(Error::UnknownScene(e.scene_id))?;
        if let Some(want) = split {
            if scenes.split_of(e.scene_id) != Some(want) {
                continue;
            }
        }
        t.referent_sets.entry(scene.referent.id).or_default().insert(e.attribute);
        t.context_sets.entry(scene.context.id).or_default().insert(e.attribute);
        t.episodes.push(e.clone());
    }
    Ok(t)
}
