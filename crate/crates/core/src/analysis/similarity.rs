use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::datasets::{AttributeSchema, SceneSet};
use crate::error::{Error, Result};
use crate::game::Transcript;
use crate::numerics::cosine;

/// Gold attributes as vectors over induced symbols, and their pairwise
/// cosine similarities.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityReport {
    /// Row order used for `usage` and `cosine`, as gold attribute indices.
    pub order: Vec<usize>,
    /// `usage[i][a]`: episodes with symbol `a` on scenes annotated with gold
    /// attribute `order[i]`.
    pub usage: Vec<Vec<f64>>,
    pub cosine: Vec<Vec<f64>>,
    /// Gold attributes (indices) that never co-occurred with any symbol.
    pub zero_rows: Vec<usize>,
}

impl SimilarityReport {
    pub fn to_csv(&self, gold_names: &[&str]) -> String {
        let name = |g: usize| gold_names.get(g).copied().unwrap_or("?");
        let mut s = String::from("gold");
        for &g in &self.order {
            write!(s, ",{}", name(g)).unwrap();
        }
        s.push('\n');
        for (i, &g) in self.order.iter().enumerate() {
            s.push_str(name(g));
            for v in &self.cosine[i] {
                write!(s, ",{v:?}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn summary(&self) -> String {
        let n = self.order.len();
        let mut off = 0.0;
        let mut pairs = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                off += self.cosine[i][j];
                pairs += 1;
            }
        }
        format!(
            "gold similarity: {n} gold attributes over {} induced dimensions, mean off-diagonal cosine {:.3}, {} unused gold attributes (cosine defined as 0)",
            self.usage.first().map_or(0, Vec::len),
            if pairs == 0 { 0.0 } else { off / pairs as f64 },
            self.zero_rows.len()
        )
    }
}

/// Builds the gold-by-symbol usage matrix and its cosine matrix. `order`
/// permutes the gold attributes (see [`category_order`]); identity if `None`.
pub fn gold_similarity(transcript: &Transcript, scenes: &SceneSet, vocab: usize, order: Option<&[usize]>) -> Result<SimilarityReport> {
    if transcript.is_empty() {
        return Err(Error::Empty("similarity transcript"));
    }
    let n_gold = scenes.schema().total();
    let order: Vec<usize> = match order {
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort_unstable();
            if sorted != (0..n_gold).collect::<Vec<_>>() {
                return Err(Error::invalid("ordering must be a permutation of the gold attributes"));
            }
            o.to_vec()
        }
        None => (0..n_gold).collect(),
    };
    let mut by_gold = vec![vec![0.0; vocab]; n_gold];
    for e in transcript.episodes() {
        let scene = scenes.get(e.scene_id).ok_or(Error::UnknownScene(e.scene_id))?;
        if e.attribute >= vocab {
            return Err(Error::invalid(format!("attribute {} beyond vocabulary {vocab}", e.attribute)));
        }
        for &g in &scene.gold {
            by_gold[g][e.attribute] += 1.0;
        }
    }
    let usage: Vec<Vec<f64>> = order.iter().map(|&g| by_gold[g].clone()).collect();
    let mut zero_rows = Vec::new();
    let mut cos = vec![vec![0.0; order.len()]; order.len()];
    for i in 0..order.len() {
        for j in i..order.len() {
            let c = cosine(&usage[i], &usage[j])?;
            cos[i][j] = c.value;
            cos[j][i] = c.value;
            if i == j && c.zero_norm {
                zero_rows.push(order[i]);
            }
        }
    }
    zero_rows.sort_unstable();
    Ok(SimilarityReport {
        order,
        usage,
        cosine: cos,
        zero_rows,
    })
}

/// Reads `attribute<TAB or comma>category` lines (`#` starts a comment).
/// Returns one entry per gold attribute; attributes absent from the file
/// have no category.
pub fn load_categories(path: &Path, schema: &AttributeSchema) -> Result<Vec<Option<String>>> {
    let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
    let index: HashMap<&str, usize> = schema.attribute_names().into_iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut out = vec![None; schema.total()];
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, cat) = line
            .split_once('\t')
            .or_else(|| line.split_once(','))
            .ok_or_else(|| Error::format(path, n + 1, "expected 'attribute<TAB>category'"))?;
        let &g = index
            .get(name.trim())
            .ok_or_else(|| Error::format(path, n + 1, format!("unknown gold attribute {:?}", name.trim())))?;
        out[g] = Some(cat.trim().to_string());
    }
    Ok(out)
}

/// Groups gold attributes by category, categories in order of first
/// appearance; uncategorized attributes go last. Stable within a group.
pub fn category_order(categories: &[Option<String>]) -> Vec<usize> {
    let mut seen: Vec<&str> = Vec::new();
    for c in categories.iter().flatten() {
        if !seen.contains(&c.as_str()) {
            seen.push(c);
        }
    }
    let rank = |g: usize| match &categories[g] {
        Some(c) => seen.iter().position(|s| s == c).unwrap(),
        None => seen.len(),
    };
    let mut order: Vec<usize> = (0..categories.len()).collect();
    order.sort_by_key(|&g| rank(g));
    order
}
