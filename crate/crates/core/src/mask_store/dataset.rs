use std::collections::HashSet;

use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};

/// Index of a concept inside its [`ConceptDataset`].
pub type ConceptId = u32;

/// Named concept masks sharing one `(samples, features)` shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptDataset {
    names: Vec<String>,
    masks: Vec<BitMatrix>,
}

impl ConceptDataset {
    /// Validates the structural invariants: at least one concept, unique
    /// names, identical shapes. Empty masks are allowed here; see
    /// [`ConceptDataset::empty_concepts`].
    pub fn new(names: Vec<String>, masks: Vec<BitMatrix>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidDataset("dataset has no concepts".into()));
        }
        if names.len() != masks.len() {
            return Err(Error::InvalidDataset(format!(
                "{} names but {} masks",
                names.len(),
                masks.len()
            )));
        }
        if names.len() > u32::MAX as usize {
            return Err(Error::InvalidDataset("too many concepts".into()));
        }
        let mut seen = HashSet::with_capacity(names.len());
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate concept name `{name}`"
                )));
            }
        }
        let shape = masks[0].shape();
        if let Some(bad) = masks.iter().find(|m| m.shape() != shape) {
            return Err(Error::DimensionMismatch {
                expected: shape,
                actual: bad.shape(),
            });
        }
        Ok(Self { names, masks })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn samples(&self) -> usize {
        self.masks[0].samples()
    }

    pub fn features(&self) -> usize {
        self.masks[0].features()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.masks[0].shape()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, k: ConceptId) -> &str {
        &self.names[k as usize]
    }

    pub fn masks(&self) -> &[BitMatrix] {
        &self.masks
    }

    pub fn mask(&self, k: ConceptId) -> &BitMatrix {
        &self.masks[k as usize]
    }

    pub fn concept_ids(&self) -> impl Iterator<Item = ConceptId> {
        0..self.names.len() as ConceptId
    }

    pub fn id_of(&self, name: &str) -> Option<ConceptId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as ConceptId)
    }

    pub fn empty_concepts(&self) -> Vec<ConceptId> {
        self.concept_ids()
            .filter(|&k| self.mask(k).is_zero())
            .collect()
    }

    pub fn check_neuron(&self, neuron: &NeuronMask) -> Result<()> {
        if neuron.shape() != self.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.shape(),
                actual: neuron.shape(),
            });
        }
        Ok(())
    }
}

/// Binarized activations of a single neuron over the probing dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronMask(BitMatrix);

impl NeuronMask {
    pub fn new(mask: BitMatrix) -> Self {
        Self(mask)
    }

    pub fn mask(&self) -> &BitMatrix {
        &self.0
    }

    pub fn into_inner(self) -> BitMatrix {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
}

/// Real-valued activations, sample-major, as stored in `NAF1` files.
#[derive(Debug, Clone, PartialEq)]
pub struct RawActivations {
    pub samples: usize,
    pub features: usize,
    pub values: Vec<f32>,
}

impl RawActivations {
    pub fn new(samples: usize, features: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != samples * features {
            return Err(Error::DimensionMismatch {
                expected: (samples, features),
                actual: (values.len() / features.max(1), features),
            });
        }
        Ok(Self {
            samples,
            features,
            values,
        })
    }
}
