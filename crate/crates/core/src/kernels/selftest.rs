use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    encode_patch_token, location_token_input, prompt_coefficients, relation_loss, BoxCoords,
    PromptTokens, RelationBatch,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

const FD_STEP: f64 = 1e-5;
const GRAD_TOLERANCE: f64 = 1e-6;

fn random_batch(rng: &mut ChaCha8Rng, unit_weights: bool) -> RelationBatch {
    let rows = rng.gen_range(1..=6);
    let cols = rng.gen_range(1..=5);
    let logits = (0..rows * cols).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let labels = (0..rows * cols).map(|_| rng.gen_bool(0.4)).collect();
    let weights = (0..cols)
        .map(|_| {
            if unit_weights {
                1.0
            } else {
                rng.gen_range(0.5..20.0)
            }
        })
        .collect();
    RelationBatch::new(rows, cols, logits, labels, weights).expect("well-formed batch")
}

/// Worst relative error `|g - fd| / |fd|` (vector norms) over `batches` random batches.
fn worst_gradient_error(seed: u64, batches: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..batches {
        let batch = random_batch(&mut rng, false);
        let (_, grad) = relation_loss(&batch).expect("finite logits");
        let mut diff = 0.0;
        let mut norm = 0.0;
        for i in 0..grad.len() {
            let mut plus = batch.logits().to_vec();
            let mut minus = plus.clone();
            plus[i] += FD_STEP;
            minus[i] -= FD_STEP;
            let lp = relation_loss(&batch.with_logits(plus).unwrap()).unwrap().0;
            let lm = relation_loss(&batch.with_logits(minus).unwrap()).unwrap().0;
            let fd = (lp - lm) / (2.0 * FD_STEP);
            diff += (grad[i] - fd).powi(2);
            norm += fd * fd;
        }
        worst = worst.max(diff.sqrt() / norm.sqrt());
    }
    worst
}

fn worst_unweighted_gap(seed: u64, batches: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..batches {
        let batch = random_batch(&mut rng, true);
        let (loss, _) = relation_loss(&batch).unwrap();
        let n = batch.logits().len() as f64;
        let plain: f64 = batch
            .logits()
            .iter()
            .zip(batch.labels())
            .map(|(&x, &y)| {
                let s = 1.0 / (1.0 + (-x).exp());
                if y {
                    -s.ln()
                } else {
                    -(1.0 - s).ln()
                }
            })
            .sum::<f64>()
            / n;
        worst = worst.max((loss - plain).abs());
    }
    worst
}

/// Runs the built-in numeric checks of the kernels.
pub fn selftest() -> Vec<SelftestCheck> {
    let mut checks = Vec::new();

    let err = worst_gradient_error(7, 100);
    checks.push(SelftestCheck {
        name: "relation_loss gradient vs central differences",
        passed: err < GRAD_TOLERANCE,
        detail: format!(
            "worst relative error {err:.3e} over 100 batches (limit {GRAD_TOLERANCE:e})"
        ),
    });

    let gap = worst_unweighted_gap(11, 100);
    checks.push(SelftestCheck {
        name: "unit weights reduce to mean BCE",
        passed: gap <= 1e-12,
        detail: format!("worst absolute gap {gap:.3e}"),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bad = 0;
    for _ in 0..1000 {
        let r_sbj: f64 = rng.gen_range(0.0..=1.0);
        let r_obj: f64 = rng.gen_range(0.0..=(1.0 - r_sbj));
        let [s, o, b] = prompt_coefficients(r_sbj, r_obj, false).unwrap();
        if s + o + b != 1.0 {
            bad += 1;
        }
    }
    checks.push(SelftestCheck {
        name: "prompt coefficients sum to 1",
        passed: bad == 0,
        detail: format!("{bad} of 1000 draws off"),
    });

    let tokens = PromptTokens::new(
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    )
    .unwrap();
    let enc = encode_patch_token(&[0.0; 3], 0.25, 0.5, &tokens, false).unwrap();
    checks.push(SelftestCheck {
        name: "prompt encoding worked example",
        passed: enc == [0.25, 0.5, 0.25],
        detail: format!("{enc:?}"),
    });

    let loc = location_token_input(
        BoxCoords::new(10.0, 20.0, 30.0, 40.0),
        BoxCoords::new(0.0, 0.0, 100.0, 200.0),
        100.0,
        200.0,
    )
    .unwrap();
    let expected = [-0.8, -0.8, -0.4, -0.6, -1.0, -1.0, 1.0, 1.0];
    checks.push(SelftestCheck {
        name: "location token worked example",
        passed: loc.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-15),
        detail: format!("{loc:?}"),
    });

    checks
}
