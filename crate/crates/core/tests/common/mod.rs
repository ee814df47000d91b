#![allow(dead_code)]

use domagg::Distribution;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Atoms on a quarter-unit lattice with probabilities in eighths, so sums
/// and envelopes stay close to exact in floating point.
pub fn lattice_atoms(rng: &mut ChaCha8Rng, max_atoms: usize) -> Distribution {
    let n = rng.gen_range(1..=max_atoms);
    let mut locs: Vec<i32> = Vec::new();
    while locs.len() < n {
        let x = rng.gen_range(-16..=16);
        if !locs.contains(&x) {
            locs.push(x);
        }
    }
    let mut mass = vec![1u32; n];
    for _ in n..8.max(n) {
        mass[rng.gen_range(0..n)] += 1;
    }
    let total: u32 = mass.iter().sum();
    Distribution::atoms(locs.iter().zip(&mass).map(|(&x, &m)| (x as f64 * 0.25, m as f64 / total as f64)).collect())
        .unwrap()
}

pub fn lattice_set(rng: &mut ChaCha8Rng, lo: usize, hi: usize, max_atoms: usize) -> Vec<Distribution> {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| lattice_atoms(rng, max_atoms)).collect()
}

pub fn simplex_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|r| r / s).collect();
    let head: f64 = w[..n - 1].iter().sum();
    w[n - 1] = 1.0 - head;
    w
}

/// Random atoms with arbitrary real locations.
pub fn atoms_strategy(max_atoms: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec((-10.0f64..10.0, 0.05f64..1.0), 1..=max_atoms).prop_filter_map("distinct", |v| {
        let s: f64 = v.iter().map(|p| p.1).sum();
        let mut pairs: Vec<(f64, f64)> = v.iter().map(|&(x, p)| (x, p / s)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|w| w[1].0 - w[0].0 < 1e-6) {
            return None;
        }
        Distribution::atoms(pairs).ok()
    })
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
