use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{ConceptDataset, NeuronMask};
use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};

/// Parameters of the synthetic probing-dataset generator.
///
/// Every location is annotated with probability `annotation_density`; an
/// annotated location receives a second concept with probability
/// `overlap_density`, and a third one with the same probability again.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub concepts: usize,
    pub samples: usize,
    pub features: usize,
    pub annotation_density: f64,
    pub overlap_density: f64,
    pub neuron_fire_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            concepts: 8,
            samples: 16,
            features: 64,
            annotation_density: 0.5,
            overlap_density: 0.3,
            neuron_fire_rate: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("annotation_density", self.annotation_density),
            ("overlap_density", self.overlap_density),
            ("neuron_fire_rate", self.neuron_fire_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {p} is not in [0, 1]"
                )));
            }
        }
        if self.concepts == 0 || self.samples == 0 || self.features == 0 {
            return Err(Error::InvalidConfig(
                "concepts, samples and features must be >= 1".into(),
            ));
        }
        if self.concepts > u32::MAX as usize {
            return Err(Error::InvalidConfig("too many concepts".into()));
        }
        // With no overlap every concept needs a location of its own.
        if self.overlap_density == 0.0 && self.concepts > self.samples * self.features {
            return Err(Error::InvalidConfig(format!(
                "{} disjoint concepts cannot fit in {} locations",
                self.concepts,
                self.samples * self.features
            )));
        }
        Ok(())
    }
}

fn concept_name(k: usize) -> String {
    format!("c{k}")
}

/// Generates a dataset and the neuron mask of unit 0.
pub fn generate_synthetic(config: &SynthConfig) -> Result<(ConceptDataset, NeuronMask)> {
    let dataset = generate_dataset(config)?;
    let neuron = generate_neuron(config, 0)?;
    Ok((dataset, neuron))
}

pub fn generate_dataset(config: &SynthConfig) -> Result<ConceptDataset> {
    config.validate()?;
    let (k, s, d) = (config.concepts, config.samples, config.features);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut masks = vec![BitMatrix::zeros(s, d); k];
    let ids: Vec<usize> = (0..k).collect();
    let mut owners: Vec<usize> = Vec::with_capacity(3);
    for x in 0..s {
        for j in 0..d {
            if !rng.random_bool(config.annotation_density) {
                continue;
            }
            owners.clear();
            owners.push(rng.random_range(0..k));
            for _ in 0..2 {
                if owners.len() < k && rng.random_bool(config.overlap_density) {
                    let free: Vec<usize> = ids
                        .iter()
                        .copied()
                        .filter(|c| !owners.contains(c))
                        .collect();
                    owners.push(*free.choose(&mut rng).expect("at least one free concept"));
                }
            }
            for &c in &owners {
                masks[c].set(x, j, true);
            }
        }
    }
    fill_empty_concepts(&mut masks, config, &mut rng);
    ConceptDataset::new((0..k).map(concept_name).collect(), masks)
}

/// Gives every empty concept one location. Unannotated locations are
/// preferred; otherwise a location is taken from a concept that keeps at
/// least one other annotation, so disjointness survives when required.
fn fill_empty_concepts(masks: &mut [BitMatrix], config: &SynthConfig, rng: &mut ChaCha8Rng) {
    let (s, d) = (config.samples, config.features);
    let disjoint = config.overlap_density == 0.0;
    for c in 0..masks.len() {
        if !masks[c].is_zero() {
            continue;
        }
        let start = rng.random_range(0..s * d);
        let coverage =
            |masks: &[BitMatrix], x: usize, j: usize| masks.iter().filter(|m| m.get(x, j)).count();
        let mut chosen = None;
        for step in 0..s * d {
            let p = (start + step) % (s * d);
            if coverage(masks, p / d, p % d) == 0 {
                chosen = Some(p);
                break;
            }
        }
        if chosen.is_none() {
            for step in 0..s * d {
                let p = (start + step) % (s * d);
                let (x, j) = (p / d, p % d);
                let stealable = masks
                    .iter()
                    .filter(|m| m.get(x, j))
                    .all(|m| m.count_ones() >= 2);
                if !disjoint || stealable {
                    chosen = Some(p);
                    break;
                }
            }
        }
        let p = chosen.expect("validated configuration leaves room for every concept");
        let (x, j) = (p / d, p % d);
        if disjoint {
            for m in masks.iter_mut() {
                m.set(x, j, false);
            }
        }
        masks[c].set(x, j, true);
    }
}

/// Neuron mask of unit `unit`: every location fires independently with
/// probability `neuron_fire_rate`. Units use distinct ChaCha streams of the
/// same seed, so the dataset does not change with the number of units.
pub fn generate_neuron(config: &SynthConfig, unit: u64) -> Result<NeuronMask> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(unit + 1);
    let mut mask = BitMatrix::zeros(config.samples, config.features);
    for x in 0..config.samples {
        for j in 0..config.features {
            if rng.random_bool(config.neuron_fire_rate) {
                mask.set(x, j, true);
            }
        }
    }
    Ok(NeuronMask::new(mask))
}
