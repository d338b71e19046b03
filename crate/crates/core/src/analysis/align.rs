use std::fmt::Write as _;

use crate::datasets::SceneSet;
use crate::error::{Error, Result};
use crate::game::Transcript;

/// Recorded with every alignment so the assignment can be reproduced.
pub const ALIGNMENT_TIE_RULE: &str = "greedy by descending count; ties: lower induced index, then lower gold index";

/// Injective map from induced symbols to gold attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentMap {
    /// `counts[a][g]`: episodes where symbol `a` was emitted for a scene
    /// annotated with gold attribute `g`.
    pub counts: Vec<Vec<u64>>,
    /// `mapping[a] = Some((g, count))` for aligned symbols.
    pub mapping: Vec<Option<(usize, u64)>>,
}

impl AlignmentMap {
    pub fn mapped_total(&self) -> u64 {
        self.mapping.iter().flatten().map(|(_, c)| c).sum()
    }

    pub fn aligned(&self) -> usize {
        self.mapping.iter().flatten().count()
    }

    pub fn to_csv(&self, gold_names: &[&str]) -> String {
        let mut s = String::from("induced,gold,gold_name,count,usage\n");
        for (a, m) in self.mapping.iter().enumerate() {
            let usage: u64 = self.counts[a].iter().sum();
            match m {
                Some((g, c)) => writeln!(s, "{a},{g},{},{c},{usage}", gold_names.get(*g).copied().unwrap_or("?")).unwrap(),
                None => writeln!(s, "{a},,unaligned,0,{usage}").unwrap(),
            }
        }
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "alignment: {} of {} induced attributes aligned, {} co-occurrences covered ({ALIGNMENT_TIE_RULE})",
            self.aligned(),
            self.mapping.len(),
            self.mapped_total()
        )
    }
}

/// Counts (symbol, gold) co-occurrences over the transcript and assigns each
/// symbol its most frequent gold attribute, greedily, keeping the map 1-1.
pub fn align_attributes(transcript: &Transcript, scenes: &SceneSet, vocab: usize) -> Result<AlignmentMap> {
    let n_gold = scenes.schema().total();
    let mut counts = vec![vec![0u64; n_gold]; vocab];
    for e in transcript.episodes() {
        let scene = scenes.get(e.scene_id).ok_or(Error::UnknownScene(e.scene_id))?;
        let row = counts
            .get_mut(e.attribute)
            .ok_or_else(|| Error::invalid(format!("attribute {} beyond vocabulary {vocab}", e.attribute)))?;
        for &g in &scene.gold {
            row[g] += 1;
        }
    }
    let mapping = greedy_assign(&counts);
    Ok(AlignmentMap { counts, mapping })
}

pub fn greedy_assign(counts: &[Vec<u64>]) -> Vec<Option<(usize, u64)>> {
    let mut cells: Vec<(u64, usize, usize)> = counts
        .iter()
        .enumerate()
        .flat_map(|(a, row)| row.iter().enumerate().filter(|(_, c)| **c > 0).map(move |(g, &c)| (c, a, g)))
        .collect();
    cells.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let n_gold = counts.first().map_or(0, Vec::len);
    let mut mapping = vec![None; counts.len()];
    let mut gold_taken = vec![false; n_gold];
    for (c, a, g) in cells {
        if mapping[a].is_none() && !gold_taken[g] {
            mapping[a] = Some((g, c));
            gold_taken[g] = true;
        }
    }
    mapping
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent formulation: repeatedly scan for the largest remaining
    /// cell in row-major order (strictly larger replaces), then strike its
    /// row and column.
    fn scan_oracle(counts: &[Vec<u64>]) -> Vec<Option<(usize, u64)>> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        let mut row_free = vec![true; rows];
        let mut col_free = vec![true; cols];
        let mut out = vec![None; rows];
        loop {
            let mut best: Option<(usize, usize, u64)> = None;
            for a in 0..rows {
                for g in 0..cols {
                    let c = counts[a][g];
                    if row_free[a] && col_free[g] && c > 0 && best.is_none_or(|(_, _, b)| c > b) {
                        best = Some((a, g, c));
                    }
                }
            }
            match best {
                None => return out,
                Some((a, g, c)) => {
                    out[a] = Some((g, c));
                    row_free[a] = false;
                    col_free[g] = false;
                }
            }
        }
    }

    #[test]
    fn three_by_three_fixture() {
        let counts = vec![vec![5, 1, 0], vec![4, 0, 0], vec![0, 0, 2]];
        let m = greedy_assign(&counts);
        assert_eq!(m, vec![Some((0, 5)), None, Some((2, 2))]);
        assert_eq!(m, scan_oracle(&counts));
    }

    #[test]
    fn recovers_permutation() {
        let perm = [2usize, 0, 3, 1];
        let counts: Vec<Vec<u64>> = (0..4)
            .map(|a| (0..4).map(|g| if perm[a] == g { 50 } else { (a + g) as u64 % 3 }).collect())
            .collect();
        let m = greedy_assign(&counts);
        for a in 0..4 {
            assert_eq!(m[a].unwrap().0, perm[a]);
        }
    }

    #[test]
    fn unused_symbol_and_ties() {
        let counts = vec![vec![0, 0], vec![3, 3], vec![3, 0]];
        let m = greedy_assign(&counts);
        assert_eq!(m[0], None);
        // (1,0) and (2,0) and (1,1) tie at 3: lower induced index first.
        assert_eq!(m[1], Some((0, 3)));
        assert_eq!(m[2], None);
        assert_eq!(m, scan_oracle(&counts));
    }

    proptest! {
        #[test]
        fn matches_scan_oracle_and_is_injective(
            counts in (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(0u64..6, c), r))
        ) {
            let m = greedy_assign(&counts);
            prop_assert_eq!(&m, &scan_oracle(&counts));
            let golds: Vec<usize> = m.iter().flatten().map(|(g, _)| *g).collect();
            let unique: std::collections::BTreeSet<_> = golds.iter().collect();
            prop_assert_eq!(golds.len(), unique.len());
            for (a, slot) in m.iter().enumerate() {
                if counts[a].iter().all(|c| *c == 0) {
                    prop_assert!(slot.is_none());
                }
            }
        }
    }
}
