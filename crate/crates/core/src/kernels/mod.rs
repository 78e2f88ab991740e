//! Closed-form numeric kernels of the two-stage relation model: prompt
//! encoding of patch tokens, location/semantic token inputs, the weighted
//! relation loss and node loss, no-relation pair sampling, and the top-k
//! triplet selection rules used for recall metrics.

mod loss;
mod prompt;
mod sampling;
mod selection;
mod selftest;

use thiserror::Error;

pub use loss::{
    inverse_frequency_weights, node_loss, positive_weights, relation_loss, sigmoid, total_loss,
    LossWeights, RelationBatch,
};
pub use prompt::{
    encode_patch_token, location_token_input, prompt_coefficients, semantic_index, BoxCoords,
    PromptTokens,
};
pub use sampling::sample_no_relation_pairs;
pub(crate) use selection::check_unique_pairs;
pub use selection::{
    pair_no_relation_score, rank_by_no_relation, rank_pairs, ranking_score,
    select_top_k_graph_constraint, select_top_k_no_constraint, SelectedTriplet, TripletSet,
};
pub use selftest::{selftest, SelftestCheck};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error(
        "invalid ratios: r_sbj={r_sbj}, r_obj={r_obj} (need both >= 0 and r_sbj + r_obj <= 1)"
    )]
    InvalidRatios { r_sbj: f64, r_obj: f64 },
    #[error("prompt token {0} has zero magnitude")]
    ZeroToken(&'static str),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("invalid box {what}: {detail}")]
    InvalidBox { what: &'static str, detail: String },
    #[error("class index out of range: subject {subject}, object {object}, class count {classes}")]
    ClassOutOfRange {
        subject: usize,
        object: usize,
        classes: usize,
    },
    #[error("predicate {0} has no positive samples")]
    NoPositives(usize),
    #[error("non-finite logit at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("class {0} has zero frequency")]
    ZeroFrequency(usize),
    #[error("label {label} outside 0..{classes}")]
    InvalidLabel { label: usize, classes: usize },
    #[error("invalid loss weights: {0}")]
    InvalidWeights(String),
    #[error("requested {target} pairs but only {available} unannotated ordered pairs exist")]
    NotEnoughPairs { target: usize, available: usize },
    #[error("relations {first} and {second} share the ordered pair ({subject}, {object})")]
    GraphConstraint {
        first: usize,
        second: usize,
        subject: usize,
        object: usize,
    },
}
