//! Assignment of predicted masks to ground-truth nodes by IoU.

use crate::mask::{iou, MaskError, RleMask};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// At most one predicted mask per ground-truth node: the one with the
    /// highest IoU, earliest on ties.
    Unique,
    /// Every predicted mask maps to its best ground-truth node; several
    /// predictions may share a node.
    Legacy,
}

/// Partial map from predicted mask index to ground-truth node index.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchTable {
    pub mode: MatchMode,
    pub threshold: f64,
    map: Vec<Option<usize>>,
    gt_count: usize,
}

impl MatchTable {
    pub fn get(&self, predicted: usize) -> Option<usize> {
        self.map.get(predicted).copied().flatten()
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.map
    }

    pub fn gt_count(&self) -> usize {
        self.gt_count
    }

    /// Which ground-truth nodes have a predicted mask assigned.
    pub fn matched_gt(&self) -> Vec<bool> {
        let mut hit = vec![false; self.gt_count];
        for g in self.map.iter().flatten() {
            hit[*g] = true;
        }
        hit
    }

    /// True when no ground-truth node is claimed twice.
    pub fn is_injective(&self) -> bool {
        let mut hit = vec![false; self.gt_count];
        self.map
            .iter()
            .flatten()
            .all(|&g| !std::mem::replace(&mut hit[g], true))
    }
}

/// IoU of every predicted mask (rows) against every ground-truth mask (columns).
pub fn iou_matrix(
    predicted: &[&RleMask],
    ground_truth: &[&RleMask],
) -> Result<Vec<Vec<f64>>, MaskError> {
    predicted
        .iter()
        .map(|p| ground_truth.iter().map(|g| iou(p, g)).collect())
        .collect()
}

/// Builds the lookup table from a precomputed IoU matrix.
pub fn match_from_ious(
    ious: &[Vec<f64>],
    gt_count: usize,
    threshold: f64,
    mode: MatchMode,
) -> MatchTable {
    // best ground-truth node per prediction, first one on ties
    let best: Vec<Option<(usize, f64)>> = ious
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(None, |acc: Option<(usize, f64)>, (g, &v)| match acc {
                    Some((_, bv)) if bv >= v => acc,
                    _ => Some((g, v)),
                })
                .filter(|&(_, v)| v > threshold)
        })
        .collect();

    let map = match mode {
        MatchMode::Legacy => best.iter().map(|b| b.map(|(g, _)| g)).collect(),
        MatchMode::Unique => {
            let mut claimed: Vec<Option<(usize, f64)>> = vec![None; gt_count];
            for (m, b) in best.iter().enumerate() {
                if let Some((g, v)) = *b {
                    if claimed[g].is_none_or(|(_, cv)| v > cv) {
                        claimed[g] = Some((m, v));
                    }
                }
            }
            let mut map = vec![None; ious.len()];
            for (g, c) in claimed.iter().enumerate() {
                if let Some((m, _)) = *c {
                    map[m] = Some(g);
                }
            }
            map
        }
    };
    MatchTable {
        mode,
        threshold,
        map,
        gt_count,
    }
}

pub fn match_masks(
    predicted: &[&RleMask],
    ground_truth: &[&RleMask],
    threshold: f64,
    mode: MatchMode,
) -> Result<MatchTable, MaskError> {
    let ious = iou_matrix(predicted, ground_truth)?;
    Ok(match_from_ious(&ious, ground_truth.len(), threshold, mode))
}
