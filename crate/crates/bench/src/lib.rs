//! Shared fixtures for the criterion benches.

use concept_align_core::mask_store::generate_synthetic;
use concept_align_core::{ConceptDataset, NeuronMask, SynthConfig};

/// A synthetic instance with the generator's default densities.
pub fn synthetic(
    concepts: usize,
    samples: usize,
    features: usize,
    overlap: f64,
) -> (ConceptDataset, NeuronMask) {
    generate_synthetic(&SynthConfig {
        seed: 0,
        concepts,
        samples,
        features,
        overlap_density: overlap,
        ..SynthConfig::default()
    })
    .expect("valid bench config")
}
