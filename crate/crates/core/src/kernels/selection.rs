//! Top-k triplet selection from per-pair predicate distributions.
//!
//! Ordering is deterministic: ascending no-relation score, then ascending
//! relation index, then ascending predicate id. For (relation, predicate)
//! ranking the no-relation score of a pair is `1 - (1 - p_no) * p_p`, the
//! complement of the ranking score `x = (1 - p_no) * p_p`.

use std::collections::HashMap;

use super::KernelError;
use crate::graph::{Relation, Triplet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedTriplet {
    pub triplet: Triplet,
    /// Index of the source relation.
    pub relation: usize,
    /// No-relation probability for graph-constrained selection, `x` otherwise.
    pub rank_score: f64,
}

/// Triplets in selection order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripletSet {
    pub entries: Vec<SelectedTriplet>,
}

impl TripletSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn triplets(&self) -> Vec<Triplet> {
        self.entries.iter().map(|e| e.triplet).collect()
    }

    /// The first `k` entries as triplets.
    pub fn top(&self, k: usize) -> Vec<Triplet> {
        self.entries.iter().take(k).map(|e| e.triplet).collect()
    }

    pub fn truncate(mut self, k: usize) -> Self {
        self.entries.truncate(k);
        self
    }
}

/// `x = (1 - p_no) * p_p`, the combined score of a (relation, predicate) pair.
pub fn ranking_score(no_relation: f64, predicate_score: f64) -> f64 {
    (1.0 - no_relation) * predicate_score
}

/// `1 - (1 - p_no) * p_p`: the no-relation score a (relation, predicate)
/// pair carries once split into its own relation.
pub fn pair_no_relation_score(no_relation: f64, predicate_score: f64) -> f64 {
    1.0 - ranking_score(no_relation, predicate_score)
}

/// All relations ordered by ascending no-relation score, each labelled with
/// its argmax predicate. Duplicate pairs are kept.
pub fn rank_by_no_relation(relations: &[Relation]) -> TripletSet {
    let mut order: Vec<usize> = (0..relations.len()).collect();
    order.sort_by(|&a, &b| {
        relations[a]
            .no_relation()
            .total_cmp(&relations[b].no_relation())
            .then(a.cmp(&b))
    });
    TripletSet {
        entries: order
            .into_iter()
            .map(|i| {
                let r = &relations[i];
                SelectedTriplet {
                    triplet: Triplet::new(r.subject, r.argmax_predicate(), r.object),
                    relation: i,
                    rank_score: r.no_relation(),
                }
            })
            .collect(),
    }
}

/// The `k` relations with the lowest no-relation scores, one triplet each.
pub fn select_top_k_graph_constraint(
    relations: &[Relation],
    k: usize,
) -> Result<TripletSet, KernelError> {
    check_unique_pairs(relations)?;
    Ok(rank_by_no_relation(relations).truncate(k))
}

pub(crate) fn check_unique_pairs(relations: &[Relation]) -> Result<(), KernelError> {
    let mut seen = HashMap::with_capacity(relations.len());
    for (i, r) in relations.iter().enumerate() {
        if let Some(&first) = seen.get(&r.pair()) {
            return Err(KernelError::GraphConstraint {
                first,
                second: i,
                subject: r.subject,
                object: r.object,
            });
        }
        seen.insert(r.pair(), i);
    }
    Ok(())
}

/// Every (relation, predicate) pair ordered by descending `x`.
pub fn rank_pairs(relations: &[Relation]) -> TripletSet {
    let mut pairs: Vec<(f64, usize, usize)> = relations
        .iter()
        .enumerate()
        .flat_map(|(i, r)| {
            (0..r.num_predicates()).map(move |p| {
                (
                    pair_no_relation_score(r.no_relation(), r.predicate_score(p)),
                    i,
                    p,
                )
            })
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    TripletSet {
        entries: pairs
            .into_iter()
            .map(|(_, i, p)| {
                let r = &relations[i];
                SelectedTriplet {
                    triplet: Triplet::new(r.subject, p, r.object),
                    relation: i,
                    rank_score: ranking_score(r.no_relation(), r.predicate_score(p)),
                }
            })
            .collect(),
    }
}

/// The `k` highest-scoring (relation, predicate) pairs; a subject-object
/// pair may appear once per predicate.
pub fn select_top_k_no_constraint(relations: &[Relation], k: usize) -> TripletSet {
    rank_pairs(relations).truncate(k)
}
