use std::collections::BTreeMap;

use super::scene::{ObjectId, SceneSet, Split};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Labels exactly `test_count` scenes as test and the rest as train.
///
/// Scenes are grouped by their (referent id, context id) pair and whole
/// groups are assigned, so a test pair never reappears in train. Individual
/// objects may still occur on both sides.
pub fn split(set: SceneSet, test_count: usize, seed: u64) -> Result<SceneSet> {
    if test_count >= set.len() {
        return Err(Error::invalid(format!(
            "test count {test_count} must be below the number of scenes ({})",
            set.len()
        )));
    }
    let mut groups: BTreeMap<(ObjectId, ObjectId), Vec<usize>> = BTreeMap::new();
    for (i, s) in set.scenes().iter().enumerate() {
        groups.entry((s.referent.id, s.context.id)).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    let mut rng = RngStream::new(seed);
    rng.shuffle(&mut groups);

    let mut labels = vec![Split::Train; set.len()];
    let mut remaining = test_count;
    for g in &groups {
        if remaining == 0 {
            break;
        }
        if g.len() <= remaining {
            for &i in g {
                labels[i] = Split::Test;
            }
            remaining -= g.len();
        }
    }
    if remaining > 0 {
        return Err(Error::invalid(format!(
            "cannot carve exactly {test_count} test scenes out of whole scene pairs"
        )));
    }
    Ok(set.relabel(labels))
}
