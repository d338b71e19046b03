use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::datasets::ObjectId;
use crate::error::{Error, Result};
use crate::game::Transcript;

pub type ActivationSets = BTreeMap<ObjectId, BTreeSet<usize>>;

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeRi {
    pub attribute: usize,
    /// Episodes in which the symbol was emitted.
    pub usage: usize,
    /// Objects with the symbol in both R(i) and C(i).
    pub both: usize,
    /// Objects with the symbol in R(i) or C(i).
    pub either: usize,
}

impl AttributeRi {
    pub fn is_active(&self) -> bool {
        self.either > 0
    }

    /// `both / either`, or `None` for a symbol that was never emitted.
    pub fn value(&self) -> Option<f64> {
        (self.either > 0).then(|| self.both as f64 / self.either as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiReport {
    pub attributes: Vec<AttributeRi>,
}

impl RiReport {
    pub fn active(&self) -> usize {
        self.attributes.iter().filter(|a| a.is_active()).count()
    }

    pub fn inconsistent(&self) -> usize {
        self.attributes.iter().filter(|a| a.both > 0).count()
    }

    /// Share of active symbols with RI > 0.
    pub fn proportion(&self) -> f64 {
        match self.active() {
            0 => 0.0,
            n => self.inconsistent() as f64 / n as f64,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("attribute,usage,both,either,ri\n");
        for a in &self.attributes {
            let ri = a.value().map_or_else(|| "inactive".to_string(), |v| format!("{v:?}"));
            writeln!(s, "{},{},{},{},{}", a.attribute, a.usage, a.both, a.either, ri).unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "referential inconsistency: {} of {} active attributes have RI > 0 (proportion {:.3}); {} inactive",
            self.inconsistent(),
            self.active(),
            self.proportion(),
            self.attributes.len() - self.active()
        )
    }
}

/// For each symbol `a < vocab`, counts objects `i` with `a` in both R(i)
/// and C(i) against objects with `a` in either.
pub fn referential_inconsistency(transcript: &Transcript, vocab: usize) -> Result<RiReport> {
    if transcript.is_empty() {
        return Err(Error::Empty("referential inconsistency transcript"));
    }
    let mut usage = vec![0usize; vocab];
    for e in transcript.episodes() {
        if e.attribute >= vocab {
            return Err(Error::invalid(format!("episode uses attribute {} beyond vocabulary {vocab}", e.attribute)));
        }
        usage[e.attribute] += 1;
    }
    let mut report = inconsistency_of_sets(transcript.referent_sets(), transcript.context_sets(), vocab)?;
    for (a, u) in report.attributes.iter_mut().zip(usage) {
        a.usage = u;
    }
    Ok(report)
}

/// The same count over explicit R(i)/C(i) maps; usage counts are left at 0.
pub fn inconsistency_of_sets(referent: &ActivationSets, context: &ActivationSets, vocab: usize) -> Result<RiReport> {
    let mut attributes: Vec<AttributeRi> = (0..vocab)
        .map(|attribute| AttributeRi {
            attribute,
            usage: 0,
            both: 0,
            either: 0,
        })
        .collect();
    let empty = BTreeSet::new();
    let objects: BTreeSet<ObjectId> = referent.keys().chain(context.keys()).copied().collect();
    for object in objects {
        let r = referent.get(&object).unwrap_or(&empty);
        let c = context.get(&object).unwrap_or(&empty);
        for &a in r.union(c) {
            let slot = attributes
                .get_mut(a)
                .ok_or_else(|| Error::invalid(format!("attribute {a} beyond vocabulary {vocab}")))?;
            slot.either += 1;
        }
        for &a in r.intersection(c) {
            attributes[a].both += 1;
        }
    }
    Ok(RiReport { attributes })
}
