//! Synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 16] = [
    "considerando",
    "actor",
    "demandada",
    "incapacidad",
    "física",
    "psicológica",
    "daño",
    "moral",
    "perito",
    "expediente",
    "costas",
    "recurso",
    "sentencia",
    "monto",
    "indemnización",
    "accidente",
];

/// Ruling-like text of `n_tokens` words with a percentage and an amount
/// roughly every 200 tokens.
pub fn synthetic_ruling(seed: u64, n_tokens: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::with_capacity(n_tokens * 10);
    for i in 0..n_tokens {
        if i > 0 {
            out.push(' ');
        }
        if i % 200 == 199 {
            out.push_str(&format!("{},{} %", rng.random_range(1..80), rng.random_range(0..10)));
        } else if i % 200 == 120 {
            out.push_str(&format!(
                "$ {}.{:03},00",
                rng.random_range(1..900),
                rng.random_range(0..1000)
            ));
        } else {
            out.push_str(WORDS[rng.random_range(0..WORDS.len())]);
        }
    }
    out
}

/// `n` random vectors of dimension `dim` with entries in [-1, 1).
pub fn random_vectors(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}
