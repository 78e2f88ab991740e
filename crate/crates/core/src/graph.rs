//! In-memory scene graph types shared by ingestion, protocols and metrics.
//!
//! Predicate ids run `0..P`. A relation's score vector has `P + 1` entries:
//! index 0 is the virtual no-relation class and index `p + 1` holds
//! predicate `p`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::mask::{RleMask, ScoredMask};

/// A `(subject, predicate, object)` assertion. Subject and object index the
/// node (or mask) list of the graph the triplet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub subject: usize,
    pub predicate: usize,
    pub object: usize,
}

impl Triplet {
    pub fn new(subject: usize, predicate: usize, object: usize) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.subject, self.object)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtNode {
    pub class_id: u32,
    pub mask: RleMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthGraph {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub nodes: Vec<GtNode>,
    pub triplets: Vec<Triplet>,
}

/// A predicted relation between two predicted masks.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub subject: usize,
    pub object: usize,
    /// Probabilities; index 0 is no-relation, `p + 1` is predicate `p`.
    pub scores: Vec<f64>,
}

impl Relation {
    pub fn no_relation(&self) -> f64 {
        self.scores[0]
    }

    pub fn predicate_score(&self, predicate: usize) -> f64 {
        self.scores[predicate + 1]
    }

    pub fn predicate_scores(&self) -> &[f64] {
        &self.scores[1..]
    }

    pub fn num_predicates(&self) -> usize {
        self.scores.len() - 1
    }

    /// Highest-scoring predicate, ties to the lowest id.
    pub fn argmax_predicate(&self) -> usize {
        let mut best = 0;
        for (p, &s) in self.predicate_scores().iter().enumerate() {
            if s > self.predicate_scores()[best] {
                best = p;
            }
        }
        best
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.subject, self.object)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGraph {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub masks: Vec<ScoredMask>,
    pub relations: Vec<Relation>,
}

impl PredictionGraph {
    pub fn empty(image_id: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            image_id: image_id.into(),
            width,
            height,
            masks: Vec::new(),
            relations: Vec::new(),
        }
    }

    /// Checks index bounds, score ranges and mask dimensions against the header.
    pub fn validate(&self, header: &DatasetHeader) -> Result<()> {
        let id = &self.image_id;
        let p = header.num_predicates();
        for (i, m) in self.masks.iter().enumerate() {
            if (m.class_id as usize) >= header.classes.len() {
                return Err(Error::validation(
                    id,
                    format!(
                        "mask {i} has class id {} outside 0..{}",
                        m.class_id,
                        header.classes.len()
                    ),
                ));
            }
            if !(0.0..=1.0).contains(&m.confidence) {
                return Err(Error::validation(
                    id,
                    format!("mask {i} confidence {} outside [0, 1]", m.confidence),
                ));
            }
            if m.mask.width() != self.width || m.mask.height() != self.height {
                return Err(Error::validation(
                    id,
                    format!(
                        "mask {i} is {}x{}, image is {}x{}",
                        m.mask.width(),
                        m.mask.height(),
                        self.width,
                        self.height
                    ),
                ));
            }
        }
        for (i, r) in self.relations.iter().enumerate() {
            if r.subject >= self.masks.len() || r.object >= self.masks.len() {
                return Err(Error::validation(
                    id,
                    format!(
                        "relation {i} ({}, {}) references a mask outside 0..{}",
                        r.subject,
                        r.object,
                        self.masks.len()
                    ),
                ));
            }
            if r.subject == r.object {
                return Err(Error::validation(
                    id,
                    format!("relation {i} relates mask {} to itself", r.subject),
                ));
            }
            if r.scores.len() != p + 1 {
                return Err(Error::validation(
                    id,
                    format!(
                        "relation {i} has {} scores, expected {}",
                        r.scores.len(),
                        p + 1
                    ),
                ));
            }
            if let Some(s) = r.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                return Err(Error::validation(
                    id,
                    format!("relation {i} has score {s} outside [0, 1]"),
                ));
            }
        }
        Ok(())
    }

    /// True when masks are pairwise disjoint and every ordered pair carries at
    /// most one relation.
    pub fn is_single_mpo(&self) -> bool {
        first_overlap(self.masks.iter().map(|m| &m.mask)).is_none()
            && duplicate_pair(&self.relations).is_none()
    }
}

/// First pair of overlapping masks, if any.
pub(crate) fn first_overlap<'a>(
    masks: impl Iterator<Item = &'a RleMask>,
) -> Option<(usize, usize)> {
    let masks: Vec<&RleMask> = masks.collect();
    for i in 0..masks.len() {
        for j in (i + 1)..masks.len() {
            if masks[i]
                .intersection_area(masks[j])
                .map(|a| a > 0)
                .unwrap_or(true)
            {
                return Some((i, j));
            }
        }
    }
    None
}

pub(crate) fn duplicate_pair(relations: &[Relation]) -> Option<(usize, usize)> {
    let mut seen = HashSet::with_capacity(relations.len());
    relations
        .iter()
        .map(Relation::pair)
        .find(|&pair| !seen.insert(pair))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub predicates: Vec<String>,
    pub classes: Vec<String>,
    /// Default image dimensions for records that omit their own.
    pub width: u32,
    pub height: u32,
}

impl DatasetHeader {
    pub fn num_predicates(&self) -> usize {
        self.predicates.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.predicates.is_empty() {
            return Err(Error::Header("at least one predicate is required".into()));
        }
        for (kind, names) in [("predicate", &self.predicates), ("class", &self.classes)] {
            let mut seen = HashSet::new();
            for name in names.iter() {
                if !seen.insert(name) {
                    return Err(Error::Header(format!("duplicate {kind} name {name:?}")));
                }
            }
        }
        Ok(())
    }
}

impl GroundTruthGraph {
    /// Checks bounds, triplet uniqueness and the panoptic (disjoint) property.
    pub fn validate(&self, header: &DatasetHeader) -> Result<()> {
        let id = &self.image_id;
        for (i, n) in self.nodes.iter().enumerate() {
            if (n.class_id as usize) >= header.classes.len() {
                return Err(Error::validation(
                    id,
                    format!(
                        "node {i} has class id {} outside 0..{}",
                        n.class_id,
                        header.classes.len()
                    ),
                ));
            }
            if n.mask.width() != self.width || n.mask.height() != self.height {
                return Err(Error::validation(
                    id,
                    format!(
                        "node {i} mask is {}x{}, image is {}x{}",
                        n.mask.width(),
                        n.mask.height(),
                        self.width,
                        self.height
                    ),
                ));
            }
        }
        if let Some((a, b)) = first_overlap(self.nodes.iter().map(|n| &n.mask)) {
            return Err(Error::validation(
                id,
                format!("ground-truth nodes {a} and {b} overlap"),
            ));
        }
        let mut seen = HashSet::with_capacity(self.triplets.len());
        for (i, t) in self.triplets.iter().enumerate() {
            if t.subject >= self.nodes.len() || t.object >= self.nodes.len() {
                return Err(Error::validation(
                    id,
                    format!(
                        "triplet {i} references a node outside 0..{}",
                        self.nodes.len()
                    ),
                ));
            }
            if t.subject == t.object {
                return Err(Error::validation(
                    id,
                    format!("triplet {i} relates node {} to itself", t.subject),
                ));
            }
            if t.predicate >= header.num_predicates() {
                return Err(Error::validation(
                    id,
                    format!(
                        "triplet {i} has predicate id {} outside 0..{}",
                        t.predicate,
                        header.num_predicates()
                    ),
                ));
            }
            if !seen.insert(*t) {
                return Err(Error::validation(
                    id,
                    format!("triplet {i} duplicates an earlier triplet"),
                ));
            }
        }
        Ok(())
    }
}

/// A validated ground-truth document.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSet {
    pub header: DatasetHeader,
    pub images: Vec<GroundTruthGraph>,
}

impl GroundTruthSet {
    pub fn validate(&self) -> Result<()> {
        self.header.validate()?;
        let mut ids = HashSet::new();
        for g in &self.images {
            if !ids.insert(g.image_id.as_str()) {
                return Err(Error::validation(&g.image_id, "duplicate image id"));
            }
            g.validate(&self.header)?;
        }
        Ok(())
    }
}
