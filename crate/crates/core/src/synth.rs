//! Seeded synthetic scenes and predictors.
//!
//! Ground-truth nodes are disjoint axis-aligned rectangles obtained by
//! recursively splitting the image. The honest predictor emits one mask per
//! node and one relation per annotated pair. The adversarial predictor
//! duplicates masks and hedges each annotated pair with several relations
//! whose argmax predicates differ, which the legacy protocol rewards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{
    DatasetHeader, GroundTruthGraph, GroundTruthSet, GtNode, PredictionGraph, Relation, Triplet,
};
use crate::kernels::sample_no_relation_pairs;
use crate::mask::{RleMask, ScoredMask};

const MIN_SIDE: u32 = 4;
/// Largest per-side shrink of an adversarial mask copy, as a fraction of the
/// node's extent. Keeps every copy above 0.75 of the node's area so copies
/// overlap each other (and the node) with IoU > 0.5.
const COPY_SHRINK: f64 = 0.06;
/// Score gap between consecutive hedged duplicates.
const HEDGE_STEP: f64 = 0.001;
const MAX_HEDGES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub images: usize,
    /// Images are `size x size` pixels.
    pub size: u32,
    pub classes: usize,
    pub predicates: usize,
    pub nodes_min: usize,
    pub nodes_max: usize,
    pub triplets_min: usize,
    pub triplets_max: usize,
    /// Adversary: mask copies per ground-truth node.
    pub mask_duplication: usize,
    /// Adversary: relations per annotated pair.
    pub relation_duplication: usize,
    /// Maximum inward shift of each mask edge, in pixels.
    pub jitter: u32,
    /// Probability that a pair's top-scored predicate is wrong.
    pub label_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            images: 20,
            size: 64,
            classes: 8,
            predicates: 6,
            nodes_min: 2,
            nodes_max: 6,
            triplets_min: 1,
            triplets_max: 6,
            mask_duplication: 2,
            relation_duplication: 3,
            jitter: 1,
            label_noise: 0.4,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("size", self.size as usize),
            ("classes", self.classes),
            ("predicates", self.predicates),
            ("nodes_min", self.nodes_min),
            ("mask_duplication", self.mask_duplication),
            ("relation_duplication", self.relation_duplication),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.nodes_min > self.nodes_max || self.triplets_min > self.triplets_max {
            return Err(Error::Config("ranges need min <= max".into()));
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return Err(Error::Config(format!(
                "label noise {} outside [0, 1]",
                self.label_noise
            )));
        }
        if self.size < MIN_SIDE {
            return Err(Error::Config(format!("size must be at least {MIN_SIDE}")));
        }
        Ok(())
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            predicates: (0..self.predicates)
                .map(|p| format!("predicate_{p}"))
                .collect(),
            classes: (0..self.classes).map(|c| format!("class_{c}")).collect(),
            width: self.size,
            height: self.size,
        }
    }
}

fn image_rng(seed: u64, domain: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain);
    rng.set_stream(index as u64);
    rng
}

const GT_DOMAIN: u64 = 0;
const PREDICTOR_DOMAIN: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

impl Rect {
    fn w(&self) -> u32 {
        self.x1 - self.x0
    }
    fn h(&self) -> u32 {
        self.y1 - self.y0
    }
}

fn partition(rng: &mut ChaCha8Rng, size: u32, count: usize) -> Vec<Rect> {
    let mut rects = vec![Rect {
        x0: 0,
        y0: 0,
        x1: size,
        y1: size,
    }];
    while rects.len() < count {
        let (idx, r) = rects
            .iter()
            .copied()
            .enumerate()
            .max_by_key(|(i, r)| (r.w() * r.h(), std::cmp::Reverse(*i)))
            .unwrap();
        let split_x = r.w() >= r.h();
        let extent = if split_x { r.w() } else { r.h() };
        if extent < 2 * MIN_SIDE {
            break;
        }
        let cut = rng.gen_range(MIN_SIDE..=extent - MIN_SIDE);
        let (a, b) = if split_x {
            (
                Rect {
                    x1: r.x0 + cut,
                    ..r
                },
                Rect {
                    x0: r.x0 + cut,
                    ..r
                },
            )
        } else {
            (
                Rect {
                    y1: r.y0 + cut,
                    ..r
                },
                Rect {
                    y0: r.y0 + cut,
                    ..r
                },
            )
        };
        rects[idx] = a;
        rects.push(b);
    }
    // leave some background between nodes
    for r in &mut rects {
        if r.w() > MIN_SIDE {
            r.x0 += rng.gen_range(0..=1);
        }
        if r.h() > MIN_SIDE {
            r.y0 += rng.gen_range(0..=1);
        }
    }
    rects
}

fn generate_image(cfg: &SynthConfig, index: usize) -> GroundTruthGraph {
    let mut rng = image_rng(cfg.seed, GT_DOMAIN, index);
    let wanted = rng.gen_range(cfg.nodes_min..=cfg.nodes_max);
    let rects = partition(&mut rng, cfg.size, wanted);
    let nodes: Vec<GtNode> = rects
        .iter()
        .map(|r| GtNode {
            class_id: rng.gen_range(0..cfg.classes) as u32,
            mask: RleMask::from_rect(cfg.size, cfg.size, r.x0, r.y0, r.x1, r.y1)
                .expect("positive size"),
        })
        .collect();
    let n = nodes.len();
    let mut triplets: Vec<Triplet> = Vec::new();
    if n >= 2 {
        let target = rng
            .gen_range(cfg.triplets_min..=cfg.triplets_max)
            .min(n * (n - 1));
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        while pairs.len() < target {
            let s = rng.gen_range(0..n);
            let o = rng.gen_range(0..n);
            if s != o && !pairs.contains(&(s, o)) {
                pairs.push((s, o));
            }
        }
        triplets = pairs
            .into_iter()
            .map(|(s, o)| Triplet::new(s, rng.gen_range(0..cfg.predicates), o))
            .collect();
    }
    GroundTruthGraph {
        image_id: format!("img_{index:06}"),
        width: cfg.size,
        height: cfg.size,
        nodes,
        triplets,
    }
}

/// Deterministic per seed; images are generated independently.
pub fn generate_ground_truth(cfg: &SynthConfig) -> Result<GroundTruthSet> {
    cfg.validate()?;
    Ok(GroundTruthSet {
        header: cfg.header(),
        images: (0..cfg.images).map(|i| generate_image(cfg, i)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorConfig {
    pub seed: u64,
    pub jitter: u32,
    pub label_noise: f64,
    pub mask_duplication: usize,
    pub relation_duplication: usize,
}

impl PredictorConfig {
    pub fn from_synth(cfg: &SynthConfig) -> Self {
        Self {
            seed: cfg.seed,
            jitter: cfg.jitter,
            label_noise: cfg.label_noise,
            mask_duplication: cfg.mask_duplication,
            relation_duplication: cfg.relation_duplication,
        }
    }
}

/// `source` clipped to its bounding box shrunk by up to `max_shrink` per side.
fn jittered(rng: &mut ChaCha8Rng, source: &RleMask, jitter: u32, capped: bool) -> RleMask {
    let Some((x0, y0, x1, y1)) = source.bbox() else {
        return source.clone();
    };
    let side_cap = |extent: u32| {
        let cap = if capped {
            (extent as f64 * COPY_SHRINK).floor() as u32
        } else {
            (extent - 1) / 2
        };
        jitter.min(cap)
    };
    let (cx, cy) = (side_cap(x1 - x0), side_cap(y1 - y0));
    let mut shrink = |cap: u32| if cap == 0 { 0 } else { rng.gen_range(0..=cap) };
    let (l, t, r, b) = (shrink(cx), shrink(cy), shrink(cx), shrink(cy));
    let frame = RleMask::from_rect(
        source.width(),
        source.height(),
        x0 + l,
        y0 + t,
        x1 - r,
        y1 - b,
    )
    .expect("source has positive size");
    source.intersection(&frame).expect("same shape")
}

/// Base score vector for an annotated pair: the believed predicate gets the
/// top score; with probability `label_noise` the belief is a wrong predicate
/// and the true one comes second.
fn pair_scores(
    rng: &mut ChaCha8Rng,
    truth: usize,
    num_predicates: usize,
    label_noise: f64,
) -> Vec<f64> {
    let mut scores = vec![0.0; num_predicates + 1];
    scores[0] = rng.gen_range(0.05..0.3);
    for s in &mut scores[1..] {
        *s = rng.gen_range(0.0..0.3);
    }
    let top = rng.gen_range(0.7..0.95);
    let noisy = rng.gen_bool(label_noise);
    let wrong = if num_predicates > 1 {
        let w = rng.gen_range(0..num_predicates - 1);
        Some(if w >= truth { w + 1 } else { w })
    } else {
        None
    };
    match wrong.filter(|_| noisy) {
        Some(w) => {
            scores[w + 1] = top;
            scores[truth + 1] = rng.gen_range(0.5..0.69);
        }
        None => scores[truth + 1] = top,
    }
    scores
}

/// Predicates of `scores` (excluding no-relation) by descending score, lowest id first on ties.
fn predicate_ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len() - 1).collect();
    order.sort_by(|&a, &b| scores[b + 1].total_cmp(&scores[a + 1]).then(a.cmp(&b)));
    order
}

/// Copy `j` of a hedged relation: the predicate ranked `j` takes the top
/// score minus `j` steps, trading places with the original top predicate.
fn hedge(base: &[f64], ranking: &[usize], j: usize) -> Vec<f64> {
    let mut scores = base.to_vec();
    if j > 0 {
        let (top, target) = (ranking[0] + 1, ranking[j] + 1);
        scores[top] = base[target];
        scores[target] = base[top] - HEDGE_STEP * j as f64;
    }
    scores
}

fn predict(
    gt: &GroundTruthSet,
    cfg: &PredictorConfig,
    capped: bool,
) -> Result<Vec<PredictionGraph>> {
    if cfg.mask_duplication == 0 || cfg.relation_duplication == 0 {
        return Err(Error::Config(
            "duplication factors must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.label_noise) {
        return Err(Error::Config(format!(
            "label noise {} outside [0, 1]",
            cfg.label_noise
        )));
    }
    let p = gt.header.num_predicates();
    let m = cfg.mask_duplication;
    let d = cfg.relation_duplication.min(p).min(MAX_HEDGES);
    Ok(gt
        .images
        .iter()
        .enumerate()
        .map(|(index, g)| {
            let mut rng = image_rng(cfg.seed, PREDICTOR_DOMAIN, index);
            let mut masks = Vec::with_capacity(g.nodes.len() * m);
            for node in &g.nodes {
                for _ in 0..m {
                    masks.push(ScoredMask {
                        class_id: node.class_id,
                        confidence: rng.gen_range(0.5..1.0),
                        mask: jittered(&mut rng, &node.mask, cfg.jitter, capped),
                    });
                }
            }

            let mut relations = Vec::new();
            let mut annotated: Vec<(usize, usize)> = Vec::new();
            for t in &g.triplets {
                if annotated.contains(&t.pair()) {
                    continue;
                }
                annotated.push(t.pair());
                let base = pair_scores(&mut rng, t.predicate, p, cfg.label_noise);
                let ranking = predicate_ranking(&base);
                for j in 0..d {
                    let copy = j % m;
                    relations.push(Relation {
                        subject: t.subject * m + copy,
                        object: t.object * m + copy,
                        scores: hedge(&base, &ranking, j),
                    });
                }
            }
            let n = g.nodes.len();
            let available = n * n.saturating_sub(1) - annotated.len();
            let pair_seed = rng.gen::<u64>();
            let negatives =
                sample_no_relation_pairs(n, &annotated, pair_seed, annotated.len().min(available))
                    .expect("target within available pairs");
            for (s, o) in negatives {
                let mut scores: Vec<f64> = (0..=p).map(|_| rng.gen_range(0.0..0.3)).collect();
                scores[0] = rng.gen_range(0.6..0.95);
                relations.push(Relation {
                    subject: s * m,
                    object: o * m,
                    scores,
                });
            }
            PredictionGraph {
                image_id: g.image_id.clone(),
                width: g.width,
                height: g.height,
                masks,
                relations,
            }
        })
        .collect())
}

/// One mask per node and one relation per annotated pair plus as many
/// sampled unannotated pairs; conformant with SingleMPO by construction.
pub fn honest_predictor(
    gt: &GroundTruthSet,
    seed: u64,
    jitter: u32,
    label_noise: f64,
) -> Result<Vec<PredictionGraph>> {
    let cfg = PredictorConfig {
        seed,
        jitter,
        label_noise,
        mask_duplication: 1,
        relation_duplication: 1,
    };
    predict(gt, &cfg, false)
}

/// `mask_duplication` copies of every node mask and `relation_duplication`
/// hedged relations per annotated pair.
pub fn adversarial_predictor(
    gt: &GroundTruthSet,
    cfg: &PredictorConfig,
) -> Result<Vec<PredictionGraph>> {
    predict(gt, cfg, true)
}
