//! Fixtures shared by the benchmarks.

use pbcox_core::simulation::generate_replicate;
use pbcox_core::{SimulationConfig, SurvivalDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` success probabilities drawn uniformly from `[0, 1)`.
pub fn random_probs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// One simulated replicate with heavy grouping (`beta = 1.5`,
/// `sigma_x = 1.5`, `tau = 0.2`).
pub fn grouped_replicate(n: usize) -> SurvivalDataset {
    let config = SimulationConfig::new(1.5, 1.5, 0.2, n, 1, 20240601);
    generate_replicate(&config, 0).expect("replicate generates")
}
