use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use symrigid_core::rigidity::numerical_rank;

fn bench(rows: usize, cols: usize, iters: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mats: Vec<DMatrix<f64>> = (0..64)
        .map(|_| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1000..1000) as f64))
        .collect();
    let t = Instant::now();
    let mut acc = 0usize;
    for i in 0..iters {
        acc += numerical_rank(&mats[i % 64], None);
    }
    let el = t.elapsed();
    println!(
        "{rows}x{cols}: {:.2} us/rank  (acc {acc})",
        el.as_secs_f64() * 1e6 / iters as f64
    );
}

fn main() {
    bench(9, 10, 20000);
    bench(12, 12, 20000);
    bench(11, 12, 20000);
    bench(169, 170, 50);
}
