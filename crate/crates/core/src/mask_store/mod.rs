//! Mask representation, archive formats, activation binarization and the
//! synthetic dataset generator.

mod binarize;
mod dataset;
mod format;
mod synth;

pub use binarize::{binarize_activations, binarize_activations_in_range, DEFAULT_QUANTILE};
pub use dataset::{ConceptDataset, ConceptId, NeuronMask, RawActivations};
pub use format::{
    decode_activations, decode_concept_archive, decode_neuron_mask, encode_activations,
    encode_concept_archive, encode_neuron_mask, load_activations, load_concept_archive,
    load_concept_archive_with, load_neuron_mask, sniff, write_activations, write_concept_archive,
    write_neuron_mask, FileKind, LoadOptions, ACTIVATION_MAGIC, CONCEPT_MAGIC, NEURON_MAGIC,
};
pub use synth::{generate_dataset, generate_neuron, generate_synthetic, SynthConfig};
