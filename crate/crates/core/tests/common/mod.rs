#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcmi::Dataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small random dataset with `d` features: some rounded (ties), and a target
/// that depends on the first feature plus noise, also sometimes rounded.
pub fn random_dataset(r: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let mut features = Vec::with_capacity(d);
    for k in 0..d {
        let levels = [0usize, 3, 6][r.random_range(0..3)];
        let col: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = r.random();
                if levels == 0 { v } else { (v * levels as f64).floor() }
            })
            .collect();
        features.push((format!("f{k}"), col));
    }
    let strength: f64 = r.random();
    let round = r.random_bool(0.3);
    let mut target: Vec<f64> = (0..n)
        .map(|i| {
            let v = strength * features[0].1[i] + (1.0 - strength) * r.random::<f64>();
            if round { (v * 5.0).round() } else { v }
        })
        .collect();
    // keep the target non-degenerate
    if target.iter().all(|&v| v == target[0]) {
        target[0] += 1.0;
    }
    Dataset::new("y", target, features).unwrap()
}

pub fn uniform_column(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random()).collect()
}

pub fn linear(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Random shuffle of `0..n`.
pub fn permutation(r: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(r);
    p
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
