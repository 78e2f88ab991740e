//! Fixtures and deliberately naive reference implementations shared by the
//! integration tests. Nothing here calls the library's matching, metric or
//! selection code.
#![allow(dead_code)]

use psgeval::{
    DatasetHeader, GroundTruthGraph, GroundTruthSet, GtNode, PredictionGraph, Relation, RleMask,
    ScoredMask, Triplet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rect(w: u32, h: u32, x0: u32, y0: u32, x1: u32, y1: u32) -> RleMask {
    RleMask::from_rect(w, h, x0, y0, x1, y1).unwrap()
}

pub fn header(predicates: &[&str], classes: &[&str], w: u32, h: u32) -> DatasetHeader {
    DatasetHeader {
        predicates: predicates.iter().map(|s| s.to_string()).collect(),
        classes: classes.iter().map(|s| s.to_string()).collect(),
        width: w,
        height: h,
    }
}

pub fn rel(subject: usize, object: usize, scores: &[f64]) -> Relation {
    Relation {
        subject,
        object,
        scores: scores.to_vec(),
    }
}

/// Person, bottle and chair; the annotation says person-drinking-bottle and
/// person-on-chair. The prediction carries three person masks and two chair
/// masks; its confident relations are person-eating-bottle and
/// person-driving-chair, and low-scored duplicates hedge with the right
/// predicates.
pub fn person_chair_fixture() -> (GroundTruthSet, Vec<PredictionGraph>) {
    const W: u32 = 16;
    let hdr = header(
        &["drinking", "on", "eating", "driving"],
        &["person", "bottle", "chair"],
        W,
        W,
    );
    let (drinking, on) = (0, 1);
    let gt = GroundTruthGraph {
        image_id: "person_chair".into(),
        width: W,
        height: W,
        nodes: vec![
            GtNode {
                class_id: 0,
                mask: rect(W, W, 0, 0, 8, 12),
            },
            GtNode {
                class_id: 1,
                mask: rect(W, W, 10, 0, 14, 4),
            },
            GtNode {
                class_id: 2,
                mask: rect(W, W, 9, 8, 16, 16),
            },
        ],
        triplets: vec![Triplet::new(0, drinking, 1), Triplet::new(0, on, 2)],
    };
    let m = |class_id, confidence, mask| ScoredMask {
        class_id,
        confidence,
        mask,
    };
    let pred = PredictionGraph {
        image_id: "person_chair".into(),
        width: W,
        height: W,
        masks: vec![
            m(0, 0.95, rect(W, W, 0, 0, 8, 12)),
            m(0, 0.80, rect(W, W, 0, 1, 8, 12)),
            m(0, 0.70, rect(W, W, 1, 0, 8, 12)),
            m(1, 0.90, rect(W, W, 10, 0, 14, 4)),
            m(2, 0.90, rect(W, W, 9, 8, 16, 16)),
            m(2, 0.60, rect(W, W, 9, 9, 16, 16)),
        ],
        // scores: [no-relation, drinking, on, eating, driving]
        relations: vec![
            rel(0, 3, &[0.05, 0.30, 0.01, 0.90, 0.02]),
            rel(1, 3, &[0.20, 0.40, 0.01, 0.35, 0.02]),
            rel(0, 4, &[0.05, 0.01, 0.20, 0.02, 0.85]),
            rel(2, 5, &[0.25, 0.01, 0.30, 0.02, 0.10]),
        ],
    };
    (
        GroundTruthSet {
            header: hdr,
            images: vec![gt],
        },
        vec![pred],
    )
}

/// A small random matching/recall problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub predicates: usize,
    pub gt_masks: Vec<RleMask>,
    pub triplets: Vec<Triplet>,
    pub pred_masks: Vec<RleMask>,
    /// Distinct ordered pairs, so the graph constraint holds.
    pub relations: Vec<Relation>,
}

/// Scores are multiples of 1/8 so ties occur often.
fn coarse(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0..=8) as f64 / 8.0
}

pub fn random_instance(seed: u64) -> Instance {
    const S: u32 = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let predicates = rng.gen_range(1..=4);
    // one GT node per quadrant at most, so GT masks are disjoint
    let gt_count = if rng.gen_bool(0.1) {
        1
    } else {
        rng.gen_range(2..=4)
    };
    let mut gt_rects = Vec::new();
    for q in 0..gt_count as u32 {
        let (qx, qy) = ((q % 2) * 6, (q / 2) * 6);
        let x0 = qx + rng.gen_range(0..3);
        let y0 = qy + rng.gen_range(0..3);
        let x1 = rng.gen_range(x0 + 2..=qx + 6);
        let y1 = rng.gen_range(y0 + 2..=qy + 6);
        gt_rects.push((x0, y0, x1, y1));
    }
    let gt_masks: Vec<RleMask> = gt_rects
        .iter()
        .map(|&(a, b, c, d)| rect(S, S, a, b, c, d))
        .collect();

    let mut triplets: Vec<Triplet> = Vec::new();
    if gt_count > 1 {
        for _ in 0..rng.gen_range(1..=6) {
            let s = rng.gen_range(0..gt_count);
            let o = rng.gen_range(0..gt_count);
            let t = Triplet::new(s, rng.gen_range(0..predicates), o);
            if s != o && !triplets.contains(&t) {
                triplets.push(t);
            }
        }
    }

    let pred_count = if rng.gen_bool(0.1) {
        rng.gen_range(0..2)
    } else {
        rng.gen_range(2..=6)
    };
    let mut pred_masks = Vec::new();
    // ground-truth node each prediction was derived from, if any
    let mut source = Vec::new();
    for _ in 0..pred_count {
        if rng.gen_bool(0.7) {
            let node = rng.gen_range(0..gt_count);
            let (mut x0, mut y0, mut x1, mut y1) = gt_rects[node];
            // exact copy or one edge moved by a pixel
            match rng.gen_range(0..8) {
                0 => x0 = x0.saturating_sub(1),
                1 => y0 = y0.saturating_sub(1),
                2 => x1 = (x1 + 1).min(S),
                3 => y1 = (y1 + 1).min(S),
                4 => x1 -= 1,
                _ => {}
            }
            let (nx0, ny0, nx1, ny1) = (x0, y0, x1, y1);
            pred_masks.push(rect(S, S, nx0, ny0, nx1, ny1));
            source.push(Some(node));
        } else {
            let x0 = rng.gen_range(0..S - 1);
            let y0 = rng.gen_range(0..S - 1);
            let x1 = rng.gen_range(x0 + 1..=S);
            let y1 = rng.gen_range(y0 + 1..=S);
            pred_masks.push(rect(S, S, x0, y0, x1, y1));
            source.push(None);
        }
    }

    let mut relations: Vec<Relation> = Vec::new();
    if pred_count > 1 {
        for _ in 0..rng.gen_range(0..=10) {
            let mut s = rng.gen_range(0..pred_count);
            let mut o = rng.gen_range(0..pred_count);
            let mut favoured = None;
            // aim most relations at an annotated pair
            if !triplets.is_empty() && rng.gen_bool(0.7) {
                let t = triplets[rng.gen_range(0..triplets.len())];
                let from = |node: usize| {
                    (0..pred_count)
                        .filter(|&i| source[i] == Some(node))
                        .collect::<Vec<_>>()
                };
                let (ss, os) = (from(t.subject), from(t.object));
                if !ss.is_empty() && !os.is_empty() {
                    s = ss[rng.gen_range(0..ss.len())];
                    o = os[rng.gen_range(0..os.len())];
                    favoured = rng.gen_bool(0.6).then_some(t.predicate);
                }
            }
            if s == o || relations.iter().any(|r| (r.subject, r.object) == (s, o)) {
                continue;
            }
            let mut scores: Vec<f64> = (0..=predicates).map(|_| coarse(&mut rng)).collect();
            if let Some(p) = favoured {
                scores[p + 1] = 1.0;
            }
            relations.push(Relation {
                subject: s,
                object: o,
                scores,
            });
        }
    }
    Instance {
        predicates,
        gt_masks,
        triplets,
        pred_masks,
        relations,
    }
}

fn pixels(mask: &RleMask) -> Vec<bool> {
    let mut out = Vec::new();
    for (i, &run) in mask.runs().iter().enumerate() {
        out.extend(std::iter::repeat_n(i % 2 == 1, run as usize));
    }
    out
}

pub fn naive_iou(a: &RleMask, b: &RleMask) -> f64 {
    let (pa, pb) = (pixels(a), pixels(b));
    let inter = pa.iter().zip(&pb).filter(|(x, y)| **x && **y).count();
    let union = pa.iter().zip(&pb).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Per ground-truth node keep the best prediction above `t` (earliest on
/// ties), then invert.
pub fn naive_match_unique(pred: &[RleMask], gt: &[RleMask], t: f64) -> Vec<Option<usize>> {
    let mut table = vec![None; pred.len()];
    for (j, g) in gt.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in pred.iter().enumerate() {
            let v = naive_iou(p, g);
            if v > t && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        if let Some((i, _)) = best {
            table[i] = Some(j);
        }
    }
    table
}

/// Every prediction goes to its best ground-truth node above `t`.
pub fn naive_match_legacy(pred: &[RleMask], gt: &[RleMask], t: f64) -> Vec<Option<usize>> {
    pred.iter()
        .map(|p| {
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gt.iter().enumerate() {
                let v = naive_iou(p, g);
                if v > t && best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            best.map(|(j, _)| j)
        })
        .collect()
}

/// Mean over predicates present in `gt` of the fraction of their triplets
/// hit by some selected triplet after translation through `table`.
pub fn naive_mean_recall(
    predicates: usize,
    gt: &[Triplet],
    table: &[Option<usize>],
    selected: &[Triplet],
) -> Option<f64> {
    let mut sum = 0.0;
    let mut present = 0;
    for p in 0..predicates {
        let of_p: Vec<&Triplet> = gt.iter().filter(|t| t.predicate == p).collect();
        if of_p.is_empty() {
            continue;
        }
        let hits = of_p
            .iter()
            .filter(|g| {
                selected.iter().any(|x| {
                    x.predicate == p
                        && table[x.subject] == Some(g.subject)
                        && table[x.object] == Some(g.object)
                })
            })
            .count();
        sum += hits as f64 / of_p.len() as f64;
        present += 1;
    }
    (present > 0).then(|| sum / present as f64)
}

pub fn naive_recall(gt: &[Triplet], table: &[Option<usize>], selected: &[Triplet]) -> Option<f64> {
    if gt.is_empty() {
        return None;
    }
    let hits = gt
        .iter()
        .filter(|g| {
            selected.iter().any(|x| {
                x.predicate == g.predicate
                    && table[x.subject] == Some(g.subject)
                    && table[x.object] == Some(g.object)
            })
        })
        .count();
    Some(hits as f64 / gt.len() as f64)
}

pub fn naive_mr_inf(predicates: usize, gt: &[Triplet], table: &[Option<usize>]) -> Option<f64> {
    let mut sum = 0.0;
    let mut present = 0;
    for p in 0..predicates {
        let of_p: Vec<&Triplet> = gt.iter().filter(|t| t.predicate == p).collect();
        if of_p.is_empty() {
            continue;
        }
        let found = |node: usize| table.contains(&Some(node));
        let hits = of_p
            .iter()
            .filter(|g| found(g.subject) && found(g.object))
            .count();
        sum += hits as f64 / of_p.len() as f64;
        present += 1;
    }
    (present > 0).then(|| sum / present as f64)
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for p in 1..scores.len() {
        if scores[p] > scores[best] {
            best = p;
        }
    }
    best
}

/// One triplet per relation with its best predicate, lowest no-relation first.
pub fn naive_top_k_constrained(relations: &[Relation], k: usize) -> Vec<Triplet> {
    let mut keyed: Vec<(f64, usize)> = relations
        .iter()
        .enumerate()
        .map(|(i, r)| (r.scores[0], i))
        .collect();
    keyed.sort_by(|a, b| a.partial_cmp(b).unwrap());
    keyed
        .iter()
        .take(k)
        .map(|&(_, i)| {
            let r = &relations[i];
            Triplet::new(r.subject, argmax(&r.scores[1..]), r.object)
        })
        .collect()
}

/// Every (relation, predicate) candidate ranked by `1 - (1 - no) * score`.
pub fn naive_top_k_unconstrained(relations: &[Relation], k: usize) -> Vec<Triplet> {
    let mut keyed = Vec::new();
    for (i, r) in relations.iter().enumerate() {
        for p in 0..r.scores.len() - 1 {
            keyed.push((1.0 - (1.0 - r.scores[0]) * r.scores[p + 1], i, p));
        }
    }
    keyed.sort_by(|a, b| a.partial_cmp(b).unwrap());
    keyed
        .iter()
        .take(k)
        .map(|&(_, i, p)| Triplet::new(relations[i].subject, p, relations[i].object))
        .collect()
}
