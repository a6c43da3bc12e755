use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Target,
    Receptacle,
}

/// Known object categories and whether each is a pickable target or a receptacle.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CategoryRegistry {
    categories: BTreeMap<String, ObjectKind>,
}

impl CategoryRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, category: impl Into<String>, kind: ObjectKind) {
        self.categories.insert(category.into(), kind);
    }

    pub fn kind(&self, category: &str) -> Option<ObjectKind> {
        self.categories.get(category).copied()
    }

    pub fn contains(&self, category: &str) -> bool {
        self.categories.contains_key(category)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ObjectKind)> {
        self.categories.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.iter().filter(|(_, k)| *k == ObjectKind::Target).map(|(c, _)| c)
    }

    pub fn receptacles(&self) -> impl Iterator<Item = &str> {
        self.iter().filter(|(_, k)| *k == ObjectKind::Receptacle).map(|(c, _)| c)
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Parses a `category,kind` table with a mandatory header row.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reg = CategoryRegistry::new();
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with("//"));
        match lines.next() {
            Some((_, header)) if header.trim().replace(' ', "") == "category,kind" => {}
            _ => bail!(Parse, "category table must start with header `category,kind`"),
        }
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                bail!(Parse, "line {}: expected 2 fields", i + 1);
            }
            let kind = match fields[1] {
                "target" => ObjectKind::Target,
                "receptacle" => ObjectKind::Receptacle,
                other => bail!(Parse, "line {}: unknown kind {other:?}", i + 1),
            };
            reg.insert(fields[0], kind);
        }
        Ok(reg)
    }
}

impl<S: Into<String>> FromIterator<(S, ObjectKind)> for CategoryRegistry {
    fn from_iter<I: IntoIterator<Item = (S, ObjectKind)>>(iter: I) -> Self {
        let mut reg = CategoryRegistry::new();
        for (c, k) in iter {
            reg.insert(c, k);
        }
        reg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_table() {
        let reg = CategoryRegistry::parse("category,kind\napple,target\nfridge,receptacle\n").unwrap();
        assert_eq!(reg.kind("apple"), Some(ObjectKind::Target));
        assert_eq!(reg.receptacles().collect::<Vec<_>>(), vec!["fridge"]);
        assert!(CategoryRegistry::parse("apple,target\n").is_err());
    }
}
