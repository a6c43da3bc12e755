//! Scene-prior knowledge graph: weighted `(target, relation, reference)`
//! triplets.

use std::collections::BTreeSet;
use std::path::Path;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::catalog::{CategoryRegistry, ObjectKind};
use crate::error::{bail, Error, ErrorCode, Result};
use crate::task::Relation;

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Blend of the two triplet scores: `alpha * similarity + (1 - alpha) * prior`.
pub fn blend_weight<T: Float>(alpha: T, similarity: T, prior: T) -> T {
    alpha * similarity + (T::one() - alpha) * prior
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub target: String,
    pub relation: Relation,
    pub reference: String,
    pub prior: f64,
    pub similarity: f64,
}

impl Triplet {
    pub fn weight(&self, alpha: f64) -> f64 {
        blend_weight(alpha, self.similarity, self.prior)
    }

    pub fn key(&self) -> (&str, Relation, &str) {
        (&self.target, self.relation, &self.reference)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    pub triplets: Vec<Triplet>,
    pub alpha: f64,
    pub registry: CategoryRegistry,
}

#[derive(Debug, Deserialize)]
struct Row {
    target: String,
    relation: String,
    reference: String,
    prior: f64,
    similarity: f64,
}

const HEADER: [&str; 5] = ["target", "relation", "reference", "prior", "similarity"];

impl KnowledgeGraph {
    /// Validates and wraps a triplet list.
    pub fn new(triplets: Vec<Triplet>, alpha: f64, registry: CategoryRegistry) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            bail!(BadArg, "alpha {alpha} outside [0, 1]");
        }
        let mut seen = BTreeSet::new();
        for (i, t) in triplets.iter().enumerate() {
            if registry.kind(&t.target) != Some(ObjectKind::Target) {
                bail!(UnknownCategory, "triplet {i}: {:?} is not a registered target category", t.target);
            }
            if registry.kind(&t.reference) != Some(ObjectKind::Receptacle) {
                bail!(
                    UnknownCategory,
                    "triplet {i}: {:?} is not a registered receptacle category",
                    t.reference
                );
            }
            for (name, v) in [("prior", t.prior), ("similarity", t.similarity)] {
                if !(0.0..=1.0).contains(&v) {
                    bail!(Parse, "triplet {i}: {name} {v} outside [0, 1]");
                }
            }
            if !seen.insert(t.key()) {
                bail!(
                    DupTriplet,
                    "duplicate triplet ({}, {}, {})",
                    t.target,
                    t.relation,
                    t.reference
                );
            }
        }
        for target in registry.targets() {
            if !triplets.iter().any(|t| t.target == target) {
                bail!(UnknownCategory, "target category {target:?} has no triplet");
            }
        }
        Ok(KnowledgeGraph {
            triplets,
            alpha,
            registry,
        })
    }

    /// Parses a KG table (header `target,relation,reference,prior,similarity`).
    pub fn parse(text: &str, registry: CategoryRegistry, alpha: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::new(ErrorCode::Parse, format!("KG header: {e}")))?;
        if header.iter().ne(HEADER) {
            bail!(Parse, "KG header must be `{}`", HEADER.join(","));
        }
        let mut triplets = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::new(ErrorCode::Parse, format!("KG line {line}: {e}")))?;
            let Some(relation) = Relation::parse(&row.relation) else {
                bail!(Parse, "KG line {line}: unknown relation {:?}", row.relation);
            };
            triplets.push(Triplet {
                target: row.target,
                relation,
                reference: row.reference,
                prior: row.prior,
                similarity: row.similarity,
            });
        }
        Self::new(triplets, alpha, registry)
    }

    pub fn load(path: &Path, registry: CategoryRegistry, alpha: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::new(ErrorCode::Io, format!("{}: {e}", path.display())))?;
        Self::parse(&text, registry, alpha)
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.triplets[index].weight(self.alpha)
    }

    /// `(kg index, triplet)` pairs for `target`, in file order.
    pub fn triplets_for<'a>(&'a self, target: &'a str) -> impl Iterator<Item = (usize, &'a Triplet)> + 'a {
        self.triplets.iter().enumerate().filter(move |(_, t)| t.target == target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> CategoryRegistry {
        [
            ("apple", ObjectKind::Target),
            ("fridge", ObjectKind::Receptacle),
            ("cabinet", ObjectKind::Receptacle),
        ]
        .into_iter()
        .collect()
    }

    const HEAD: &str = "target,relation,reference,prior,similarity\n";

    #[test]
    fn weight_formula() {
        let kg = KnowledgeGraph::parse(&format!("{HEAD}apple,inside,fridge,0,1\n"), registry(), 0.5).unwrap();
        assert_eq!(kg.weight(0), 0.5);
        let t = &kg.triplets[0];
        assert_eq!(t.weight(1.0), t.similarity);
        assert_eq!(t.weight(0.0), t.prior);
    }

    #[test]
    fn weight_is_generic_over_float() {
        assert_eq!(blend_weight(0.25f32, 1.0, 0.0), 0.25f32);
        assert_eq!(blend_weight(0.25f64, 0.0, 1.0), 0.75f64);
    }

    #[test]
    fn duplicate_rows_rejected() {
        let text = format!("{HEAD}apple,inside,fridge,0.2,0.3\napple,inside,fridge,0.5,0.5\n");
        assert_eq!(
            KnowledgeGraph::parse(&text, registry(), 0.5).unwrap_err().code,
            ErrorCode::DupTriplet
        );
    }

    #[test]
    fn unknown_category_and_bad_rows() {
        let text = format!("{HEAD}apple,inside,piano,0.2,0.3\n");
        assert_eq!(
            KnowledgeGraph::parse(&text, registry(), 0.5).unwrap_err().code,
            ErrorCode::UnknownCategory
        );
        let text = format!("{HEAD}apple,beside,fridge,0.2,0.3\n");
        assert_eq!(KnowledgeGraph::parse(&text, registry(), 0.5).unwrap_err().code, ErrorCode::Parse);
        let text = "target,relation,reference,prior\napple,inside,fridge,0.2\n";
        assert_eq!(KnowledgeGraph::parse(text, registry(), 0.5).unwrap_err().code, ErrorCode::Parse);
        let text = format!("{HEAD}apple,inside,fridge,x,0.3\n");
        let err = KnowledgeGraph::parse(&text, registry(), 0.5).unwrap_err();
        assert_eq!(err.code, ErrorCode::Parse);
        assert!(err.message.contains("line 2"), "{}", err.message);
    }
}
