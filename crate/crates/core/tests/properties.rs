use proptest::prelude::*;
use psgeval::mask::BitGrid;
use psgeval::protocol::{convert_to_multi_mpo, normalize_single_mpo};
use psgeval::{
    iou, merge_masks, rle_decode, rle_encode, PredictionGraph, Relation, RleMask, ScoredMask,
};

const W: u32 = 10;
const H: u32 = 8;

fn grid() -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), (W * H) as usize)
}

fn rect_mask() -> impl Strategy<Value = RleMask> {
    (0..W - 1, 0..H - 1, 1..=W, 1..=H).prop_map(|(x0, y0, w, h)| {
        RleMask::from_rect(W, H, x0, y0, (x0 + w).min(W), (y0 + h).min(H)).unwrap()
    })
}

fn scored() -> impl Strategy<Value = ScoredMask> {
    (0u32..2, 0u32..4, rect_mask()).prop_map(|(class_id, c, mask)| ScoredMask {
        class_id,
        confidence: c as f64 / 4.0,
        mask,
    })
}

fn graph() -> impl Strategy<Value = PredictionGraph> {
    prop::collection::vec(scored(), 2..6).prop_flat_map(|masks| {
        let n = masks.len();
        let relation =
            (0..n, 1..n, prop::collection::vec(0u32..=8, 4)).prop_map(move |(s, off, sc)| {
                Relation {
                    subject: s,
                    object: (s + off) % n,
                    scores: sc.iter().map(|&v| v as f64 / 8.0).collect(),
                }
            });
        prop::collection::vec(relation, 0..10).prop_map(move |relations| PredictionGraph {
            image_id: "p".into(),
            width: W,
            height: H,
            masks: masks.clone(),
            relations,
        })
    })
}

proptest! {
    #[test]
    fn rle_round_trips(bits in grid()) {
        let g = BitGrid::from_bits(W, H, bits);
        let m = rle_encode(&g);
        prop_assert_eq!(rle_decode(&m), g);
        prop_assert_eq!(RleMask::new(W, H, m.runs().to_vec()).unwrap(), m);
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in grid(), b in grid()) {
        let (a, b) = (rle_encode(&BitGrid::from_bits(W, H, a)), rle_encode(&BitGrid::from_bits(W, H, b)));
        let v = iou(&a, &b).unwrap();
        prop_assert_eq!(v.to_bits(), iou(&b, &a).unwrap().to_bits());
        prop_assert!((0.0..=1.0).contains(&v));
        if !a.is_empty() {
            prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
        }
    }

    #[test]
    fn merged_masks_are_disjoint_and_stable(masks in prop::collection::vec(scored(), 0..7)) {
        let merged = merge_masks(&masks, 0.5).unwrap();
        for (i, a) in merged.masks.iter().enumerate() {
            prop_assert!(!a.mask.is_empty());
            for b in &merged.masks[i + 1..] {
                prop_assert_eq!(a.mask.intersection_area(&b.mask).unwrap(), 0);
            }
        }
        let again = merge_masks(&merged.masks, 0.5).unwrap();
        prop_assert_eq!(&again.masks, &merged.masks);
    }

    #[test]
    fn normalization_is_idempotent(g in graph()) {
        let once = normalize_single_mpo(&g, 0.5).unwrap();
        prop_assert!(once.graph.is_single_mpo());
        let twice = normalize_single_mpo(&once.graph, 0.5).unwrap();
        prop_assert_eq!(&twice.graph, &once.graph);
        prop_assert_eq!(once.removed_relations(), g.relations.len() - once.graph.relations.len());
    }

    #[test]
    fn conversion_emits_one_relation_per_predicate(g in graph()) {
        let n = normalize_single_mpo(&g, 0.5).unwrap().graph;
        let out = convert_to_multi_mpo(&n.relations, 3);
        prop_assert_eq!(out.len(), n.relations.len() * 3);
        for r in &out {
            prop_assert_eq!(r.predicate_scores().iter().filter(|&&s| s == 1.0).count(), 1);
        }
    }
}
