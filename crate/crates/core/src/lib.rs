//! Optimal compositional explanations of neurons.
//!
//! A neuron is explained by the left-deep logical combination of annotated
//! concepts whose mask best matches the neuron's activation mask under IoU.
//! [`search::optimal_search`] finds a maximising label with a best-first
//! search over bounds derived from a decomposition of the IoU into unique
//! and common intersections and extras; beam searches and an exhaustive
//! enumerator are provided as baselines.

pub mod bitmatrix;
pub mod error;
pub mod explanation;
pub mod fixtures;
pub mod heuristic;
pub mod instance;
pub mod labels;
pub mod mask_store;
pub mod quantities;
pub mod rational;
pub mod search;

#[cfg(test)]
mod testutil;

pub use bitmatrix::BitMatrix;
pub use error::{Error, Result};
pub use explanation::{Explanation, SearchStats};
pub use heuristic::{Granularity, PathBounds, PathKind, QuantityBounds};
pub use instance::Instance;
pub use labels::{canonicalize, classify_difference, Difference, Label, Operator, OperatorSet};
pub use mask_store::{ConceptDataset, ConceptId, NeuronMask, RawActivations, SynthConfig};
pub use quantities::{ConceptQuantities, DisjointMatrix, NeuronSplit, Partition, TopBott};
pub use rational::Rational;
pub use search::{BeamConfig, SearchConfig};
