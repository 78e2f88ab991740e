use psgeval::kernels::{
    node_loss, positive_weights, ranking_score, sample_no_relation_pairs,
    select_top_k_no_constraint, total_loss, LossWeights,
};
use psgeval::synth::{generate_ground_truth, SynthConfig};
use psgeval::Relation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn naive_ce(logits: &[f64], label: usize) -> f64 {
    let z: f64 = logits.iter().map(|x| x.exp()).sum();
    -(logits[label].exp() / z).ln()
}

#[test]
fn node_loss_matches_plain_softmax_cross_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let c = rng.gen_range(2..8);
        let freq: Vec<f64> = (0..c).map(|_| rng.gen_range(1..100) as f64).collect();
        let s: Vec<f64> = (0..c).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let o: Vec<f64> = (0..c).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (ls, lo) = (rng.gen_range(0..c), rng.gen_range(0..c));
        let inv: Vec<f64> = freq.iter().map(|f| 1.0 / f).collect();
        let mean = inv.iter().sum::<f64>() / c as f64;
        let want = (inv[ls] / mean * naive_ce(&s, ls) + inv[lo] / mean * naive_ce(&o, lo)) / 2.0;
        let got = node_loss(&s, &o, ls, lo, &freq).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn node_loss_vanishes_for_confident_logits() {
    let mut logits = vec![0.0; 4];
    logits[2] = 60.0;
    assert!(node_loss(&logits, &logits, 2, 2, &[1.0; 4]).unwrap() < 1e-20);
}

#[test]
fn positive_weights_follow_annotation_tally() {
    let cfg = SynthConfig::default();
    let gt = generate_ground_truth(&cfg).unwrap();
    let p = cfg.predicates;
    // every annotated pair plus as many sampled unannotated pairs is one sample
    let mut samples: Vec<Vec<bool>> = Vec::new();
    for (i, g) in gt.images.iter().enumerate() {
        let annotated: Vec<(usize, usize)> = g.triplets.iter().map(|t| t.pair()).collect();
        for &(s, o) in &annotated {
            samples.push(
                (0..p)
                    .map(|q| {
                        g.triplets
                            .iter()
                            .any(|t| t.pair() == (s, o) && t.predicate == q)
                    })
                    .collect(),
            );
        }
        let n = g.nodes.len();
        let target = annotated.len().min(n * (n - 1) - annotated.len());
        for _ in sample_no_relation_pairs(n, &annotated, i as u64, target).unwrap() {
            samples.push(vec![false; p]);
        }
    }
    let pos: Vec<u64> = (0..p)
        .map(|q| samples.iter().filter(|s| s[q]).count() as u64)
        .collect();
    let neg: Vec<u64> = (0..p).map(|q| samples.len() as u64 - pos[q]).collect();
    let w = positive_weights(&pos, &neg).unwrap();
    for q in 0..p {
        assert_eq!(w[q], neg[q] as f64 / pos[q] as f64);
    }
    assert_eq!(positive_weights(&[10], &[1000]).unwrap(), vec![100.0]);
    assert!(positive_weights(&[0, 3], &[5, 5]).is_err());
}

#[test]
fn ranking_examples() {
    assert_eq!(ranking_score(0.0, 0.9), 0.9);
    assert_eq!(ranking_score(1.0, 0.7), 0.0);
    let relations = vec![
        Relation {
            subject: 0,
            object: 1,
            scores: vec![1.0, 0.9, 0.8],
        },
        Relation {
            subject: 1,
            object: 0,
            scores: vec![0.5, 0.1, 0.2],
        },
    ];
    let top = select_top_k_no_constraint(&relations, 4);
    // the certain no-relation pair ranks behind everything else
    assert_eq!(top.entries[0].relation, 1);
    assert_eq!(top.entries[2].relation, 0);
    assert_eq!(top.entries[3].relation, 0);
}

#[test]
fn total_loss_weights() {
    let w = LossWeights::default();
    assert!((total_loss(0.0, 3.0, w) - 0.6).abs() < 1e-15);
}
