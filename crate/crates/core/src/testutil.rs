use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitmatrix::BitMatrix;
use crate::labels::{Label, Operator};
use crate::mask_store::{ConceptDataset, NeuronMask};

pub use crate::fixtures::worked_example;

/// Independent Bernoulli masks; concepts may end up empty.
pub fn random_dataset(seed: u64, k: usize, s: usize, d: usize, density: f64) -> ConceptDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masks = (0..k).map(|_| bernoulli(&mut rng, s, d, density)).collect();
    ConceptDataset::new((0..k).map(|i| format!("k{i}")).collect(), masks).unwrap()
}

pub fn random_neuron(seed: u64, s: usize, d: usize, p: f64) -> NeuronMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    NeuronMask::new(bernoulli(&mut rng, s, d, p))
}

fn bernoulli(rng: &mut ChaCha8Rng, s: usize, d: usize, p: f64) -> BitMatrix {
    let mut m = BitMatrix::zeros(s, d);
    for x in 0..s {
        for j in 0..d {
            if rng.random_bool(p) {
                m.set(x, j, true);
            }
        }
    }
    m
}

/// Uniform length in `1..=max_len` (capped by `k`), distinct concepts, random operators.
pub fn random_label(rng: &mut ChaCha8Rng, k: usize, max_len: usize) -> Label {
    let len = rng.random_range(1..=max_len.min(k));
    let mut ids: Vec<u32> = (0..k as u32).collect();
    for i in 0..len {
        let j = rng.random_range(i..k);
        ids.swap(i, j);
    }
    let tail = ids[1..len]
        .iter()
        .map(|&c| (Operator::ALL[rng.random_range(0..3)], c))
        .collect::<Vec<_>>();
    Label::new(ids[0], tail).unwrap()
}
