//! Fixtures shared by the benchmarks.

use qfinder_core::cone::IntVector;
use qfinder_core::frontend::{parse, InputDocument};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn input(name: &str) -> InputDocument {
    let path = format!("{}/../../inputs/{name}.qid", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse(&text).expect("bench input parses")
}

/// Random `dim`-length vectors (constant slot first), entries in `-2..=2`.
pub fn random_vectors(dim: usize, count: usize, seed: u64) -> Vec<IntVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| IntVector((0..dim).map(|_| rng.random_range(-2..=2)).collect())).collect()
}
