use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};
use crate::heuristic::{estimate_label_bounds, Granularity, QuantityBounds};
use crate::labels::{exact_label_quantities, mask_iou, Label};
use crate::mask_store::{ConceptDataset, ConceptId, NeuronMask};
use crate::quantities::{
    compute_disjoint_matrix, compute_partition, compute_top_bott, ConceptQuantities,
    DisjointMatrix, NeuronSplit, Partition, Spaces, TopBott,
};
use crate::rational::Rational;

/// Everything derived once per (dataset, neuron, maximum length) triple and
/// shared read-only by the searches.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    dataset: &'a ConceptDataset,
    neuron: &'a NeuronMask,
    partition: Partition,
    spaces: Spaces,
    split: NeuronSplit,
    concepts: Vec<ConceptQuantities>,
    disjoint: DisjointMatrix,
    topbott: TopBott,
    max_length: usize,
}

impl<'a> Instance<'a> {
    pub fn new(
        dataset: &'a ConceptDataset,
        neuron: &'a NeuronMask,
        max_length: usize,
    ) -> Result<Self> {
        if max_length == 0 {
            return Err(Error::InvalidConfig(
                "maximum label length must be >= 1".into(),
            ));
        }
        dataset.check_neuron(neuron)?;
        let partition = compute_partition(dataset);
        let spaces = Spaces::new(neuron, &partition)?;
        let split = NeuronSplit::from_spaces(neuron, &spaces);
        let concepts: Vec<ConceptQuantities> = dataset
            .masks()
            .iter()
            .map(|m| spaces.quantities_of(m))
            .collect();
        let disjoint = compute_disjoint_matrix(dataset);
        let topbott = compute_top_bott(&concepts, max_length);
        Ok(Self {
            dataset,
            neuron,
            partition,
            spaces,
            split,
            concepts,
            disjoint,
            topbott,
            max_length,
        })
    }

    pub fn dataset(&self) -> &'a ConceptDataset {
        self.dataset
    }

    pub fn neuron(&self) -> &'a NeuronMask {
        self.neuron
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    pub fn split(&self) -> &NeuronSplit {
        &self.split
    }

    pub fn concepts(&self) -> &[ConceptQuantities] {
        &self.concepts
    }

    pub fn concept(&self, k: ConceptId) -> &ConceptQuantities {
        &self.concepts[k as usize]
    }

    pub fn disjoint(&self) -> &DisjointMatrix {
        &self.disjoint
    }

    pub fn topbott(&self) -> &TopBott {
        &self.topbott
    }

    pub fn max_length(&self) -> usize {
        self.max_length
    }

    pub fn n_total(&self) -> u64 {
        self.split.n_total
    }

    pub fn concept_count(&self) -> usize {
        self.dataset.len()
    }

    pub fn evaluate(&self, label: &Label) -> Result<BitMatrix> {
        crate::labels::evaluate_label(label, self.dataset)
    }

    pub fn iou(&self, label: &Label) -> Result<Rational> {
        Ok(mask_iou(&self.evaluate(label)?, self.neuron))
    }

    pub fn exact_quantities(&self, label: &Label) -> Result<Vec<ConceptQuantities>> {
        exact_label_quantities(label, self.dataset, &self.spaces)
    }

    /// Whether every concept of `label` is disjoint from `k`.
    pub fn is_disjoint(&self, label: &Label, k: ConceptId) -> bool {
        self.disjoint.all_disjoint(label.concepts(), k)
    }

    /// Bounds of `label` folded from its first `start_len` elements, whose
    /// quantities are given exactly by `start`.
    pub fn fold_bounds(
        &self,
        label: &Label,
        start_len: usize,
        start: &ConceptQuantities,
        g: Granularity,
    ) -> Result<QuantityBounds> {
        let mut bounds = QuantityBounds::exact(start, g);
        let mut prefix = label.prefix(start_len);
        for &(op, k) in &label.tail()[start_len - 1..] {
            let disjoint = self.is_disjoint(&prefix, k);
            bounds = estimate_label_bounds(&bounds, self.concept(k), op, disjoint, &self.split, g)?;
            prefix = prefix.extended(op, k);
        }
        Ok(bounds)
    }

    /// Bounds of `label` folded from its head concept.
    pub fn label_bounds(&self, label: &Label, g: Granularity) -> Result<QuantityBounds> {
        self.fold_bounds(label, 1, self.concept(label.head()), g)
    }
}
