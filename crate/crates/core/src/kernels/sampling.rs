use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::KernelError;

/// Draws `target` ordered pairs `(i, j)`, `i != j`, uniformly without
/// replacement from those not present in `annotated`.
///
/// Candidates are enumerated row-major so the result depends only on the
/// inputs and `seed`.
pub fn sample_no_relation_pairs(
    node_count: usize,
    annotated: &[(usize, usize)],
    seed: u64,
    target: usize,
) -> Result<Vec<(usize, usize)>, KernelError> {
    let taken: HashSet<(usize, usize)> = annotated.iter().copied().collect();
    let candidates: Vec<(usize, usize)> = (0..node_count)
        .flat_map(|i| (0..node_count).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && !taken.contains(&(i, j)))
        .collect();
    if target > candidates.len() {
        return Err(KernelError::NotEnoughPairs {
            target,
            available: candidates.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, candidates.len(), target)
        .into_iter()
        .map(|i| candidates[i])
        .collect())
}
