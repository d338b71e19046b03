use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeGroup {
    pub name: String,
    pub values: Vec<String>,
}

/// Ordered attribute groups. Attribute indices are global: group offsets are
/// laid out in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    groups: Vec<AttributeGroup>,
}

impl AttributeSchema {
    pub fn new(groups: Vec<AttributeGroup>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("schema needs at least one group"));
        }
        let mut seen = HashSet::new();
        for g in &groups {
            if g.values.is_empty() {
                return Err(Error::invalid(format!("group {:?} has no values", g.name)));
            }
            for v in &g.values {
                if !seen.insert(v.as_str()) {
                    return Err(Error::invalid(format!("attribute name {v:?} is not unique")));
                }
            }
        }
        Ok(AttributeSchema { groups })
    }

    /// The 18-attribute geometric shapes schema.
    pub fn shapes() -> Self {
        fn group(name: &str, values: &[&str]) -> AttributeGroup {
            AttributeGroup {
                name: name.to_string(),
                values: values.iter().map(|v| v.to_string()).collect(),
            }
        }
        AttributeSchema::new(vec![
            group("shape", &["triangle", "square", "circle"]),
            group("border-color", &["fuchsia", "indigo", "crimson", "cyan", "black", "limegreen", "brown", "gray"]),
            group("horizontal-position", &["up", "down"]),
            group("vertical-position", &["right", "left"]),
            group("shape-size", &["small", "medium", "big"]),
        ])
        .expect("built-in schema is valid")
    }

    /// A single-group schema, used for real-image datasets whose gold
    /// attributes are a flat word list.
    pub fn flat(name: &str, values: Vec<String>) -> Result<Self> {
        AttributeSchema::new(vec![AttributeGroup {
            name: name.to_string(),
            values,
        }])
    }

    pub fn groups(&self) -> &[AttributeGroup] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(|g| g.values.len()).sum()
    }

    pub fn offset(&self, group: usize) -> usize {
        self.groups[..group].iter().map(|g| g.values.len()).sum()
    }

    /// Number of distinct objects (one value per group).
    pub fn object_count(&self) -> u64 {
        self.groups.iter().map(|g| g.values.len() as u64).product()
    }

    pub fn attribute_name(&self, index: usize) -> Option<&str> {
        let mut rest = index;
        for g in &self.groups {
            if rest < g.values.len() {
                return Some(&g.values[rest]);
            }
            rest -= g.values.len();
        }
        None
    }

    pub fn attribute_names(&self) -> Vec<&str> {
        self.groups.iter().flat_map(|g| g.values.iter().map(String::as_str)).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attribute_names().iter().position(|n| *n == name)
    }

    /// Per-group value indices for a list of attribute names, one per group.
    pub fn values_from_names(&self, names: &[&str]) -> Result<Vec<usize>> {
        if names.len() != self.groups.len() {
            return Err(Error::invalid(format!("need one value per group ({}), got {}", self.groups.len(), names.len())));
        }
        self.groups
            .iter()
            .zip(names)
            .map(|(g, n)| {
                g.values
                    .iter()
                    .position(|v| v == n)
                    .ok_or_else(|| Error::invalid(format!("{n:?} is not a value of group {:?}", g.name)))
            })
            .collect()
    }

    pub fn validate_values(&self, values: &[usize]) -> Result<()> {
        if values.len() != self.groups.len() {
            return Err(Error::invalid(format!(
                "object has {} values, schema has {} groups",
                values.len(),
                self.groups.len()
            )));
        }
        for (g, &v) in self.groups.iter().zip(values) {
            if v >= g.values.len() {
                return Err(Error::invalid(format!("value {v} out of range for group {:?}", g.name)));
            }
        }
        Ok(())
    }

    /// Mixed-radix code of a value bundle; identical bundles share a code.
    pub fn object_code(&self, values: &[usize]) -> u64 {
        self.groups.iter().zip(values).fold(0u64, |acc, (g, &v)| acc * g.values.len() as u64 + v as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_schema_layout() {
        let s = AttributeSchema::shapes();
        assert_eq!(s.group_count(), 5);
        assert_eq!(s.total(), 18);
        assert_eq!(s.object_count(), 288);
        assert_eq!(s.attribute_name(0), Some("triangle"));
        assert_eq!(s.attribute_name(6), Some("cyan"));
        assert_eq!(s.attribute_name(17), Some("big"));
        assert_eq!(s.attribute_name(18), None);
        assert_eq!(s.index_of("limegreen"), Some(8));
        assert_eq!(s.offset(4), 15);
    }

    #[test]
    fn rejects_duplicate_names() {
        let g = |n: &str, v: &[&str]| AttributeGroup {
            name: n.into(),
            values: v.iter().map(|s| s.to_string()).collect(),
        };
        assert!(AttributeSchema::new(vec![g("a", &["x", "y"]), g("b", &["y"])]).is_err());
        assert!(AttributeSchema::new(vec![]).is_err());
    }

    #[test]
    fn object_codes_are_distinct() {
        let s = AttributeSchema::shapes();
        let mut codes = HashSet::new();
        for a in 0..3 {
            for b in 0..8 {
                for c in 0..2 {
                    for d in 0..2 {
                        for e in 0..3 {
                            assert!(codes.insert(s.object_code(&[a, b, c, d, e])));
                        }
                    }
                }
            }
        }
        assert_eq!(codes.len(), 288);
        assert!(codes.iter().all(|&c| c < 288));
    }
}
