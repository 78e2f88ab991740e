//! SingleMPO normalization, the untouched MultiMPO view, and the converter
//! that explodes SingleMPO relations into one relation per predicate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{PredictionGraph, Relation};
use crate::kernels::pair_no_relation_score;
use crate::mask::merge_masks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    /// One mask per object, one predicate distribution per ordered pair.
    #[serde(rename = "SingleMPO")]
    SingleMpo,
    /// Legacy protocol: duplicates are scored as-is.
    #[serde(rename = "MultiMPO")]
    MultiMpo,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::SingleMpo => "SingleMPO",
            Protocol::MultiMpo => "MultiMPO",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A prediction graph with disjoint masks and unique ordered pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGraph {
    pub graph: PredictionGraph,
    /// Raw mask index to merged mask index; `None` for masks whose group was dropped.
    pub remap: Vec<Option<usize>>,
    pub raw_relation_count: usize,
}

impl NormalizedGraph {
    /// Relations removed by normalization.
    pub fn removed_relations(&self) -> usize {
        self.raw_relation_count - self.graph.relations.len()
    }
}

/// Collapses relations sharing an ordered pair into one: each predicate
/// keeps its maximum score, the no-relation score is the mean.
///
/// Output order follows the first occurrence of each pair.
pub fn aggregate_duplicate_relations(relations: &[Relation]) -> Vec<Relation> {
    let mut slot: HashMap<(usize, usize), usize> = HashMap::with_capacity(relations.len());
    let mut out: Vec<Relation> = Vec::with_capacity(relations.len());
    let mut counts: Vec<usize> = Vec::with_capacity(relations.len());
    for r in relations {
        match slot.get(&r.pair()) {
            Some(&i) => {
                let agg = &mut out[i];
                agg.scores[0] += r.scores[0];
                for (a, &s) in agg.scores[1..].iter_mut().zip(&r.scores[1..]) {
                    *a = a.max(s);
                }
                counts[i] += 1;
            }
            None => {
                slot.insert(r.pair(), out.len());
                out.push(r.clone());
                counts.push(1);
            }
        }
    }
    for (agg, &n) in out.iter_mut().zip(&counts) {
        if n > 1 {
            agg.scores[0] /= n as f64;
        }
    }
    out
}

/// Merges duplicate masks, re-points relations through the merge, drops
/// relations that became self-relations or lost a mask, and aggregates the
/// relations that now share a pair.
pub fn normalize_single_mpo(
    graph: &PredictionGraph,
    merge_threshold: f64,
) -> Result<NormalizedGraph> {
    let merged = merge_masks(&graph.masks, merge_threshold)
        .map_err(|e| Error::validation(&graph.image_id, format!("cannot merge masks: {e}")))?;
    let repointed: Vec<Relation> = graph
        .relations
        .iter()
        .filter_map(|r| {
            let subject = merged.remap[r.subject]?;
            let object = merged.remap[r.object]?;
            (subject != object).then(|| Relation {
                subject,
                object,
                scores: r.scores.clone(),
            })
        })
        .collect();
    Ok(NormalizedGraph {
        graph: PredictionGraph {
            image_id: graph.image_id.clone(),
            width: graph.width,
            height: graph.height,
            masks: merged.masks,
            relations: aggregate_duplicate_relations(&repointed),
        },
        remap: merged.remap,
        raw_relation_count: graph.relations.len(),
    })
}

/// The graph as the legacy protocol sees it: unchanged.
pub fn multi_mpo_view(graph: &PredictionGraph) -> &PredictionGraph {
    graph
}

/// Splits every relation into one relation per predicate `p` with
/// `scores[p] = 1`, all other predicates 0, and no-relation score
/// `1 - (1 - r_no) * r_p`. Output is relation-major, predicate-minor.
pub fn convert_to_multi_mpo(relations: &[Relation], num_predicates: usize) -> Vec<Relation> {
    let mut out = Vec::with_capacity(relations.len() * num_predicates);
    for r in relations {
        for p in 0..num_predicates {
            let mut scores = vec![0.0; num_predicates + 1];
            scores[0] = pair_no_relation_score(r.no_relation(), r.predicate_score(p));
            scores[p + 1] = 1.0;
            out.push(Relation {
                subject: r.subject,
                object: r.object,
                scores,
            });
        }
    }
    out
}

/// Converts a SingleMPO-conformant prediction graph for legacy evaluation.
pub fn convert_graph_to_multi_mpo(
    graph: &PredictionGraph,
    num_predicates: usize,
) -> Result<PredictionGraph> {
    if !graph.is_single_mpo() {
        return Err(Error::Protocol {
            image: graph.image_id.clone(),
            message: "predictions have overlapping masks or repeated subject-object pairs; \
                      normalize them to SingleMPO before converting"
                .into(),
        });
    }
    Ok(PredictionGraph {
        relations: convert_to_multi_mpo(&graph.relations, num_predicates),
        ..graph.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::{RleMask, ScoredMask};

    fn rel(subject: usize, object: usize, scores: &[f64]) -> Relation {
        Relation {
            subject,
            object,
            scores: scores.to_vec(),
        }
    }

    fn mask(class_id: u32, confidence: f64, x0: u32, y0: u32, x1: u32, y1: u32) -> ScoredMask {
        ScoredMask {
            class_id,
            confidence,
            mask: RleMask::from_rect(16, 16, x0, y0, x1, y1).unwrap(),
        }
    }

    #[test]
    fn aggregation_examples() {
        let single = vec![rel(0, 1, &[0.2, 0.9, 0.2])];
        assert_eq!(aggregate_duplicate_relations(&single), single);

        let dups = vec![rel(0, 1, &[0.2, 0.9, 0.2]), rel(0, 1, &[0.4, 0.1, 0.6])];
        let out = aggregate_duplicate_relations(&dups);
        assert_eq!(out.len(), 1);
        assert_eq!(&out[0].scores[1..], &[0.9, 0.6]);
        assert!((out[0].scores[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn aggregation_keeps_direction() {
        let rels = vec![rel(0, 1, &[0.2, 0.9]), rel(1, 0, &[0.4, 0.1])];
        assert_eq!(aggregate_duplicate_relations(&rels), rels);
    }

    #[test]
    fn conformant_graph_is_unchanged() {
        let g = PredictionGraph {
            image_id: "x".into(),
            width: 16,
            height: 16,
            masks: vec![mask(0, 0.9, 0, 0, 4, 4), mask(1, 0.8, 8, 8, 12, 12)],
            relations: vec![rel(0, 1, &[0.3, 0.6]), rel(1, 0, &[0.7, 0.2])],
        };
        let n = normalize_single_mpo(&g, 0.5).unwrap();
        assert_eq!(n.graph, g);
        assert_eq!(n.remap, vec![Some(0), Some(1)]);
        assert_eq!(n.removed_relations(), 0);
        assert_eq!(normalize_single_mpo(&n.graph, 0.5).unwrap().graph, g);
    }

    #[test]
    fn merging_drops_self_relations_and_dedups() {
        let g = PredictionGraph {
            image_id: "x".into(),
            width: 16,
            height: 16,
            masks: vec![
                mask(0, 0.9, 0, 0, 8, 8),
                mask(0, 0.7, 0, 0, 8, 7),
                mask(1, 0.8, 8, 8, 12, 12),
            ],
            relations: vec![
                rel(0, 2, &[0.2, 0.6]),
                rel(1, 2, &[0.4, 0.9]),
                rel(0, 1, &[0.1, 0.5]),
            ],
        };
        let n = normalize_single_mpo(&g, 0.5).unwrap();
        assert_eq!(n.graph.masks.len(), 2);
        assert_eq!(n.remap, vec![Some(0), Some(0), Some(1)]);
        assert_eq!(n.graph.relations.len(), 1);
        assert_eq!(n.graph.relations[0].pair(), (0, 1));
        assert_eq!(n.graph.relations[0].scores[1], 0.9);
        assert!((n.graph.relations[0].scores[0] - 0.3).abs() < 1e-15);
        assert_eq!(n.removed_relations(), 2);
        assert!(n.graph.is_single_mpo());
    }

    #[test]
    fn multi_view_is_identity() {
        let g = PredictionGraph::empty("y", 4, 4);
        assert_eq!(multi_mpo_view(&g), &g);
    }

    #[test]
    fn conversion_examples() {
        let rels = vec![rel(0, 1, &[0.3, 0.5, 1.0, 0.0])];
        let out = convert_to_multi_mpo(&rels, 3);
        assert_eq!(out.len(), 3);
        assert!((out[0].scores[0] - 0.65).abs() <= f64::EPSILON);
        assert_eq!(&out[0].scores[1..], &[1.0, 0.0, 0.0]);
        assert!((out[1].scores[0] - 0.3).abs() <= f64::EPSILON);
        assert_eq!(&out[1].scores[1..], &[0.0, 1.0, 0.0]);
        assert_eq!(out[2].scores[0], 1.0);
        assert!(out.iter().all(|r| r.pair() == (0, 1)));
    }

    #[test]
    fn converting_non_conformant_graph_fails() {
        let g = PredictionGraph {
            image_id: "z".into(),
            width: 16,
            height: 16,
            masks: vec![mask(0, 0.9, 0, 0, 4, 4), mask(1, 0.8, 8, 8, 12, 12)],
            relations: vec![rel(0, 1, &[0.3, 0.6]), rel(0, 1, &[0.7, 0.2])],
        };
        let err = convert_graph_to_multi_mpo(&g, 1).unwrap_err().to_string();
        assert!(err.contains("normalize"), "{err}");
    }
}
