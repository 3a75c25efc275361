use std::time::Duration;

use serde::Serialize;

use crate::labels::Label;
use crate::mask_store::ConceptDataset;
use crate::rational::Rational;

/// Work counters of one search.
///
/// `visited` counts labels whose exact IoU was computed, `expanded` counts
/// frontier (or beam) nodes that were processed, and `estimated` counts
/// labels whose bounds were estimated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub visited: u64,
    pub expanded: u64,
    pub estimated: u64,
    /// Frontier nodes tightened by exact prefix quantities.
    pub backprop_updates: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explanation {
    pub label: Label,
    pub iou: Rational,
    pub stats: SearchStats,
    /// False when a budget stopped the search before it could prove optimality.
    pub optimal: bool,
    pub warnings: Vec<String>,
}

impl Explanation {
    pub fn new(label: Label, iou: Rational) -> Self {
        Self {
            label,
            iou,
            stats: SearchStats::default(),
            optimal: true,
            warnings: Vec::new(),
        }
    }

    pub fn render(&self, dataset: &ConceptDataset) -> String {
        self.label.render(dataset)
    }
}
