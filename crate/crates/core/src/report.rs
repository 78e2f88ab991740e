use serde::{Deserialize, Serialize};

use crate::protocol::Protocol;

/// How per-image results are combined into dataset scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Score each image, then average over images with ground-truth triplets.
    PerImage,
    /// Collect per-image recall per predicate, average each predicate over the
    /// images containing it, then average over predicates.
    PerPredicate,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-image" => Ok(Aggregation::PerImage),
            "per-predicate" => Ok(Aggregation::PerPredicate),
            other => Err(format!(
                "unknown aggregation {other:?} (expected per-image or per-predicate)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "R")]
    Recall,
    #[serde(rename = "mR")]
    MeanRecall,
    #[serde(rename = "mNgR")]
    MeanNgRecall,
    /// Best mean recall reachable with the predicted masks.
    #[serde(rename = "mR@inf")]
    MeanRecallInf,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Recall => "R",
            Metric::MeanRecall => "mR",
            Metric::MeanNgRecall => "mNgR",
            Metric::MeanRecallInf => "mR@inf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub metric: Metric,
    /// `None` for metrics that do not depend on k.
    pub k: Option<usize>,
    pub value: f64,
    /// Dataset-level recall per predicate; `None` where a predicate never
    /// occurs. Empty for metrics without a per-predicate form.
    pub per_predicate: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub protocol: Protocol,
    pub scores: Vec<Score>,
}

/// Relations removed from one image by SingleMPO normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateCount {
    pub image_id: String,
    pub raw_relations: usize,
    pub normalized_relations: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub aggregation: Aggregation,
    pub iou_threshold: f64,
    pub merge_threshold: f64,
    pub ks: Vec<usize>,
    pub image_count: usize,
    /// Images with at least one ground-truth triplet.
    pub scored_image_count: usize,
    /// Set when no image could be scored; `protocols` then carry no scores.
    pub no_images: bool,
    pub predicates: Vec<String>,
    pub protocols: Vec<ProtocolReport>,
    pub duplicates: Vec<DuplicateCount>,
    pub mean_duplicates_per_image: f64,
}

impl MetricReport {
    pub fn score(&self, protocol: Protocol, metric: Metric, k: Option<usize>) -> Option<f64> {
        self.protocols
            .iter()
            .find(|p| p.protocol == protocol)?
            .scores
            .iter()
            .find(|s| s.metric == metric && s.k == k)
            .map(|s| s.value)
    }

    /// `(protocol, metric, k, value)` rows in report order.
    pub fn rows(&self) -> Vec<(Protocol, Metric, Option<usize>, f64)> {
        self.protocols
            .iter()
            .flat_map(|p| {
                p.scores
                    .iter()
                    .map(move |s| (p.protocol, s.metric, s.k, s.value))
            })
            .collect()
    }
}
