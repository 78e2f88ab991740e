//! Per-image recall metrics over matched triplets.
//!
//! Predicates without ground-truth triplets in an image are left out of that
//! image's mean, and an image without ground-truth triplets has no score.
//! Predicted triplets are treated as a set: exact duplicates count once.

use std::collections::HashSet;

use thiserror::Error;

use crate::graph::Triplet;
use crate::mask::{MaskError, RleMask};
use crate::matching::{match_masks, MatchMode, MatchTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error(
        "top-k triplets contain two predicates for ground-truth pair ({subject}, {object}); \
         graph-constrained recall needs one triplet per pair"
    )]
    GraphConstraint { subject: usize, object: usize },
}

/// Per-predicate recall and their mean over predicates present in the image.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallBreakdown {
    pub per_predicate: Vec<Option<f64>>,
    pub mean: f64,
}

/// Predicted triplets translated to ground-truth node indices; triplets with
/// an unmatched subject or object are dropped.
fn matched_triplets(table: &MatchTable, top_k: &[Triplet]) -> HashSet<Triplet> {
    top_k
        .iter()
        .filter_map(|t| {
            Some(Triplet::new(
                table.get(t.subject)?,
                t.predicate,
                table.get(t.object)?,
            ))
        })
        .collect()
}

fn breakdown(
    num_predicates: usize,
    gt: &[Triplet],
    covered: impl Fn(&Triplet) -> bool,
) -> Option<RecallBreakdown> {
    if gt.is_empty() {
        return None;
    }
    let mut totals = vec![0usize; num_predicates];
    let mut hits = vec![0usize; num_predicates];
    for t in gt {
        totals[t.predicate] += 1;
        if covered(t) {
            hits[t.predicate] += 1;
        }
    }
    let per_predicate: Vec<Option<f64>> = totals
        .iter()
        .zip(&hits)
        .map(|(&n, &h)| (n > 0).then(|| h as f64 / n as f64))
        .collect();
    let present: Vec<f64> = per_predicate.iter().flatten().copied().collect();
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    Some(RecallBreakdown {
        per_predicate,
        mean,
    })
}

/// Mean recall with the graph constraint enforced in unique matching mode.
pub fn mean_recall_breakdown(
    num_predicates: usize,
    gt: &[Triplet],
    table: &MatchTable,
    top_k: &[Triplet],
) -> Result<Option<RecallBreakdown>, MetricError> {
    let matched = matched_triplets(table, top_k);
    if table.mode == MatchMode::Unique {
        let mut pairs = HashSet::with_capacity(matched.len());
        // HashSet iteration order is arbitrary; report the smallest offending pair
        let mut sorted: Vec<&Triplet> = matched.iter().collect();
        sorted.sort();
        for t in sorted {
            if !pairs.insert(t.pair()) {
                return Err(MetricError::GraphConstraint {
                    subject: t.subject,
                    object: t.object,
                });
            }
        }
    }
    Ok(breakdown(num_predicates, gt, |t| matched.contains(t)))
}

pub fn mean_recall_image(
    num_predicates: usize,
    gt: &[Triplet],
    table: &MatchTable,
    top_k: &[Triplet],
) -> Result<Option<f64>, MetricError> {
    Ok(mean_recall_breakdown(num_predicates, gt, table, top_k)?.map(|b| b.mean))
}

/// Mean recall without the graph constraint.
pub fn mean_ng_recall_breakdown(
    num_predicates: usize,
    gt: &[Triplet],
    table: &MatchTable,
    top_k: &[Triplet],
) -> Option<RecallBreakdown> {
    let matched = matched_triplets(table, top_k);
    breakdown(num_predicates, gt, |t| matched.contains(t))
}

pub fn mean_ng_recall_image(
    num_predicates: usize,
    gt: &[Triplet],
    table: &MatchTable,
    top_k: &[Triplet],
) -> Option<f64> {
    mean_ng_recall_breakdown(num_predicates, gt, table, top_k).map(|b| b.mean)
}

/// Fraction of all ground-truth triplets hit, regardless of predicate.
pub fn recall_image(gt: &[Triplet], table: &MatchTable, top_k: &[Triplet]) -> Option<f64> {
    if gt.is_empty() {
        return None;
    }
    let matched = matched_triplets(table, top_k);
    let hits = gt.iter().filter(|t| matched.contains(t)).count();
    Some(hits as f64 / gt.len() as f64)
}

/// Best achievable mean recall given the mask assignment: a ground-truth
/// triplet counts when both of its nodes have a matched prediction.
pub fn mr_inf_breakdown(
    num_predicates: usize,
    gt: &[Triplet],
    table: &MatchTable,
) -> Option<RecallBreakdown> {
    let covered = table.matched_gt();
    breakdown(num_predicates, gt, |t| {
        covered[t.subject] && covered[t.object]
    })
}

pub fn mr_inf(
    predicted: &[&RleMask],
    ground_truth: &[&RleMask],
    gt: &[Triplet],
    num_predicates: usize,
    threshold: f64,
) -> Result<Option<f64>, MaskError> {
    let table = match_masks(predicted, ground_truth, threshold, MatchMode::Unique)?;
    Ok(mr_inf_breakdown(num_predicates, gt, &table).map(|b| b.mean))
}
