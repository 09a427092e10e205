#![allow(dead_code)]

pub mod fixture;
pub mod oracle;

use seqrisk::features::{encode_demographics_raw, SliceTensor, DEMO_WIDTH};
use seqrisk::numcore::{Matrix, RngStream};

/// Random small-count tensor with scaled ages, for gradient checks.
pub fn random_tensor(n: usize, t: usize, v: usize, seed: u64) -> SliceTensor {
    let mut rng = RngStream::new(seed, 77);
    let counts = (0..n * t * v).map(|_| rng.below(4) as u32).collect();
    let demographics: Vec<[f64; DEMO_WIDTH]> = (0..n)
        .map(|_| {
            encode_demographics_raw(rng.below(2) as u8, rng.uniform_range(0.3, 0.8), rng.below(10) as u8).unwrap()
        })
        .collect();
    let labels = (0..n).map(|i| (i % 2) as u8).collect();
    SliceTensor::from_parts(t, v, counts, demographics, labels).unwrap()
}

/// Cases carry more of concept 0 in the newest slice; perfectly separable.
pub fn separable_tensor(n: usize, t: usize, v: usize, seed: u64) -> SliceTensor {
    let mut rng = RngStream::new(seed, 78);
    let mut counts = vec![0u32; n * t * v];
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    for i in 0..n {
        for s in 0..t {
            for c in 0..v {
                counts[(i * t + s) * v + c] = rng.below(3) as u32;
            }
        }
        counts[(i * t + t - 1) * v] = if labels[i] == 1 { 4 + rng.below(2) as u32 } else { rng.below(2) as u32 };
    }
    let demographics = (0..n)
        .map(|_| encode_demographics_raw(rng.below(2) as u8, 0.5, rng.below(10) as u8).unwrap())
        .collect();
    SliceTensor::from_parts(t, v, counts, demographics, labels).unwrap()
}

/// Uniform random counts with labels independent of features.
pub fn noise_tensor(n: usize, t: usize, v: usize, seed: u64) -> SliceTensor {
    let mut rng = RngStream::new(seed, 79);
    let counts = (0..n * t * v).map(|_| rng.below(4) as u32).collect();
    let demographics = (0..n)
        .map(|_| encode_demographics_raw(rng.below(2) as u8, rng.uniform(), rng.below(10) as u8).unwrap())
        .collect();
    let labels = (0..n).map(|_| rng.below(2) as u8).collect();
    SliceTensor::from_parts(t, v, counts, demographics, labels).unwrap()
}

/// `k` clusters of `per` points in `d` dims, centers 10 apart.
pub fn clusters(k: usize, per: usize, d: usize, seed: u64) -> (Matrix, Vec<usize>) {
    let mut rng = RngStream::new(seed, 5);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for c in 0..k {
        for _ in 0..per {
            for j in 0..d {
                let center = if j == c { 10.0 } else { 0.0 };
                data.push(center + rng.normal());
            }
            labels.push(c);
        }
    }
    (Matrix::from_vec(k * per, d, data).unwrap(), labels)
}
