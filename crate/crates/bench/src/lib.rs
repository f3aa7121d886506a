//! Fixtures shared by the benchmark targets.

use unmix::{gaussian_matrix, gen_godec_instance, DenseMatrix, RngSeed, SynthInstance};

/// Planted low-rank + sparse square instance with noise quiet enough that
/// every engine converges, so benchmarks time comparable work.
pub fn planted_instance(n: usize, rank: usize, seed: u64) -> SynthInstance {
    gen_godec_instance(n, rank, n * rank, 1e-4, &RngSeed::new(seed))
        .expect("benchmark instance parameters are valid")
}

/// Low-rank signal buried in broadband noise; the tail spectrum is flat, so
/// power iterations have something to sharpen.
pub fn noisy_low_rank(m: usize, n: usize, rank: usize, seed: u64) -> DenseMatrix {
    let seed = RngSeed::new(seed);
    let a = gaussian_matrix(m, rank, 1.0, &seed.derive("left")).expect("draw");
    let b = gaussian_matrix(rank, n, 1.0, &seed.derive("right")).expect("draw");
    let g = gaussian_matrix(m, n, 0.1, &seed.derive("noise")).expect("draw");
    a.matmul(&b).expect("shape").add(&g).expect("shape")
}
