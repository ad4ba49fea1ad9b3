//! Deterministic inputs shared by the benchmarks.

use linrm::IntMatrix;

/// A dense `rows × cols` matrix with entries in `[-bound, bound]` drawn from
/// a fixed linear congruential sequence.
pub fn lcg_matrix(rows: usize, cols: usize, bound: i64, seed: u64) -> IntMatrix {
    let mut state = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    let span = (2 * bound + 1) as u64;
    let data: Vec<Vec<i64>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    ((state >> 33) % span) as i64 - bound
                })
                .collect()
        })
        .collect();
    IntMatrix::from_rows(&data).expect("rectangular")
}
