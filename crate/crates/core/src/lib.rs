//! Panoptic scene graph evaluation.
//!
//! Two protocols are supported. `SingleMPO` merges overlapping predicted
//! masks, keeps one relation per ordered pair and matches masks one to one.
//! `MultiMPO` scores predictions as submitted with many-to-one matching,
//! which can be inflated by duplicated masks and hedged relations.

pub mod error;
pub mod evaluate;
pub mod graph;
pub mod ingest;
pub mod kernels;
pub mod mask;
pub mod matching;
pub mod metrics;
pub mod protocol;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
pub use evaluate::{evaluate_dataset, EvalConfig, DEFAULT_MERGE_THRESHOLD};
pub use graph::{
    DatasetHeader, GroundTruthGraph, GroundTruthSet, GtNode, PredictionGraph, Relation, Triplet,
};
pub use mask::{
    iou, merge_masks, rle_decode, rle_encode, MaskError, MergeResult, RleMask, ScoredMask,
};
pub use matching::{match_masks, MatchMode, MatchTable, DEFAULT_IOU_THRESHOLD};
pub use protocol::{convert_graph_to_multi_mpo, normalize_single_mpo, NormalizedGraph, Protocol};
pub use report::{Aggregation, Metric, MetricReport, Score};
