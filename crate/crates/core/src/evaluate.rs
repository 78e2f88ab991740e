//! Dataset-level evaluation under either protocol.
//!
//! Images are scored independently (in parallel) and reduced sequentially in
//! image-id order, so the report does not depend on the thread count.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{DatasetHeader, GroundTruthGraph, GroundTruthSet, PredictionGraph};
use crate::kernels::{check_unique_pairs, rank_by_no_relation, rank_pairs};
use crate::mask::RleMask;
use crate::matching::{iou_matrix, match_from_ious, MatchMode, DEFAULT_IOU_THRESHOLD};
use crate::metrics::{
    mean_ng_recall_breakdown, mean_recall_breakdown, mr_inf_breakdown, recall_image,
    RecallBreakdown,
};
use crate::protocol::{multi_mpo_view, normalize_single_mpo, Protocol};
use crate::report::{Aggregation, DuplicateCount, Metric, MetricReport, ProtocolReport, Score};

pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub protocols: Vec<Protocol>,
    pub ks: Vec<usize>,
    pub iou_threshold: f64,
    pub merge_threshold: f64,
    pub aggregation: Aggregation,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            protocols: vec![Protocol::SingleMpo, Protocol::MultiMpo],
            ks: vec![20, 50],
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            aggregation: Aggregation::PerImage,
            threads: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("IoU threshold", self.iou_threshold),
            ("merge threshold", self.merge_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} {v} must lie in (0, 1)")));
            }
        }
        if self.ks.contains(&0) {
            return Err(Error::Config("k values must be positive".into()));
        }
        if self.protocols.is_empty() {
            return Err(Error::Config("no protocol selected".into()));
        }
        Ok(())
    }

    /// The (metric, k) slots every protocol reports, in report order.
    fn slots(&self) -> Vec<(Metric, Option<usize>)> {
        let mut slots = Vec::with_capacity(self.ks.len() * 3 + 1);
        for m in [Metric::Recall, Metric::MeanRecall, Metric::MeanNgRecall] {
            for &k in &self.ks {
                slots.push((m, Some(k)));
            }
        }
        slots.push((Metric::MeanRecallInf, None));
        slots
    }
}

struct ImageResult {
    duplicates: DuplicateCount,
    /// Per protocol, per slot; empty when the image has no ground-truth triplets.
    scores: Vec<Vec<RecallBreakdown>>,
}

pub fn evaluate_dataset(
    gt: &GroundTruthSet,
    predictions: &[PredictionGraph],
    cfg: &EvalConfig,
) -> Result<MetricReport> {
    cfg.validate()?;
    let mut by_id: HashMap<&str, &PredictionGraph> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(p.image_id.as_str(), p).is_some() {
            return Err(Error::Alignment(format!(
                "image {:?} has more than one prediction record",
                p.image_id
            )));
        }
    }
    let mut images: Vec<&GroundTruthGraph> = gt.images.iter().collect();
    images.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    if let Some(orphan) = predictions.iter().find(|p| {
        images
            .binary_search_by(|g| g.image_id.as_str().cmp(&p.image_id))
            .is_err()
    }) {
        return Err(Error::Alignment(format!(
            "prediction for image {:?} has no ground truth",
            orphan.image_id
        )));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<ImageResult> = pool.install(|| {
        images
            .par_iter()
            .map(|g| {
                let empty;
                let pred = match by_id.get(g.image_id.as_str()) {
                    Some(p) => *p,
                    None => {
                        empty = PredictionGraph::empty(g.image_id.clone(), g.width, g.height);
                        &empty
                    }
                };
                evaluate_image(g, pred, &gt.header, cfg)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    Ok(reduce(&results, gt, cfg))
}

fn evaluate_image(
    gt: &GroundTruthGraph,
    pred: &PredictionGraph,
    header: &DatasetHeader,
    cfg: &EvalConfig,
) -> Result<ImageResult> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::validation(
            &gt.image_id,
            format!(
                "prediction is {}x{} but ground truth is {}x{}",
                pred.width, pred.height, gt.width, gt.height
            ),
        ));
    }
    pred.validate(header)?;
    let normalized = normalize_single_mpo(pred, cfg.merge_threshold)?;
    let duplicates = DuplicateCount {
        image_id: gt.image_id.clone(),
        raw_relations: normalized.raw_relation_count,
        normalized_relations: normalized.graph.relations.len(),
        removed: normalized.removed_relations(),
    };
    if gt.triplets.is_empty() {
        return Ok(ImageResult {
            duplicates,
            scores: Vec::new(),
        });
    }

    let num_predicates = header.num_predicates();
    let gt_masks: Vec<&RleMask> = gt.nodes.iter().map(|n| &n.mask).collect();
    let mut scores = Vec::with_capacity(cfg.protocols.len());
    for &protocol in &cfg.protocols {
        let (graph, mode) = match protocol {
            Protocol::SingleMpo => (&normalized.graph, MatchMode::Unique),
            Protocol::MultiMpo => (multi_mpo_view(pred), MatchMode::Legacy),
        };
        let pred_masks: Vec<&RleMask> = graph.masks.iter().map(|m| &m.mask).collect();
        let ious = iou_matrix(&pred_masks, &gt_masks)
            .map_err(|e| Error::validation(&gt.image_id, e.to_string()))?;
        let table = match_from_ious(&ious, gt_masks.len(), cfg.iou_threshold, mode);
        let unique_table = match mode {
            MatchMode::Unique => table.clone(),
            MatchMode::Legacy => {
                match_from_ious(&ious, gt_masks.len(), cfg.iou_threshold, MatchMode::Unique)
            }
        };
        if mode == MatchMode::Unique {
            check_unique_pairs(&graph.relations).map_err(|e| Error::Protocol {
                image: gt.image_id.clone(),
                message: e.to_string(),
            })?;
        }
        let ranked = rank_by_no_relation(&graph.relations);
        let ranked_pairs = rank_pairs(&graph.relations);

        let mut slot_scores = Vec::new();
        for &k in &cfg.ks {
            let top = ranked.top(k);
            let r = recall_image(&gt.triplets, &table, &top).expect("image has triplets");
            slot_scores.push(RecallBreakdown {
                per_predicate: Vec::new(),
                mean: r,
            });
        }
        for &k in &cfg.ks {
            let top = ranked.top(k);
            let b = mean_recall_breakdown(num_predicates, &gt.triplets, &table, &top)
                .map_err(|e| Error::Protocol {
                    image: gt.image_id.clone(),
                    message: e.to_string(),
                })?
                .expect("image has triplets");
            slot_scores.push(b);
        }
        for &k in &cfg.ks {
            let top = ranked_pairs.top(k);
            slot_scores.push(
                mean_ng_recall_breakdown(num_predicates, &gt.triplets, &table, &top)
                    .expect("image has triplets"),
            );
        }
        slot_scores.push(
            mr_inf_breakdown(num_predicates, &gt.triplets, &unique_table)
                .expect("image has triplets"),
        );
        scores.push(slot_scores);
    }
    Ok(ImageResult { duplicates, scores })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn reduce(results: &[ImageResult], gt: &GroundTruthSet, cfg: &EvalConfig) -> MetricReport {
    let num_predicates = gt.header.num_predicates();
    let scored: Vec<&ImageResult> = results.iter().filter(|r| !r.scores.is_empty()).collect();
    let slots = cfg.slots();
    let protocols = cfg
        .protocols
        .iter()
        .enumerate()
        .map(|(pi, &protocol)| {
            let scores = if scored.is_empty() {
                Vec::new()
            } else {
                slots
                    .iter()
                    .enumerate()
                    .map(|(si, &(metric, k))| {
                        let per_image = || scored.iter().map(|r| &r.scores[pi][si]);
                        let per_predicate: Vec<Option<f64>> = if metric == Metric::Recall {
                            Vec::new()
                        } else {
                            (0..num_predicates)
                                .map(|p| mean(per_image().filter_map(|b| b.per_predicate[p])))
                                .collect()
                        };
                        let value = match (cfg.aggregation, metric) {
                            (Aggregation::PerPredicate, m) if m != Metric::Recall => {
                                mean(per_predicate.iter().flatten().copied()).unwrap_or(0.0)
                            }
                            _ => mean(per_image().map(|b| b.mean)).unwrap_or(0.0),
                        };
                        Score {
                            metric,
                            k,
                            value,
                            per_predicate,
                        }
                    })
                    .collect()
            };
            ProtocolReport { protocol, scores }
        })
        .collect();

    let duplicates: Vec<DuplicateCount> = results.iter().map(|r| r.duplicates.clone()).collect();
    let mean_duplicates_per_image =
        mean(duplicates.iter().map(|d| d.removed as f64)).unwrap_or(0.0);
    MetricReport {
        aggregation: cfg.aggregation,
        iou_threshold: cfg.iou_threshold,
        merge_threshold: cfg.merge_threshold,
        ks: cfg.ks.clone(),
        image_count: results.len(),
        scored_image_count: scored.len(),
        no_images: scored.is_empty(),
        predicates: gt.header.predicates.clone(),
        protocols,
        duplicates,
        mean_duplicates_per_image,
    }
}
