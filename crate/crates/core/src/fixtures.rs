//! Small hand-checkable instances.

use crate::bitmatrix::BitMatrix;
use crate::mask_store::{ConceptDataset, NeuronMask};

/// One sample, six locations, three concepts:
///
/// ```text
/// N  = 1 1 1 0 0 0
/// c1 = 1 1 0 0 1 1
/// c2 = 1 1 0 1 0 0
/// c3 = 1 0 1 0 1 1
/// ```
pub fn worked_example() -> (ConceptDataset, NeuronMask) {
    let row = |bits: [u8; 6]| BitMatrix::from_rows(&[bits.map(|b| b == 1)]).expect("one row");
    let dataset = ConceptDataset::new(
        vec!["c1".into(), "c2".into(), "c3".into()],
        vec![
            row([1, 1, 0, 0, 1, 1]),
            row([1, 1, 0, 1, 0, 0]),
            row([1, 0, 1, 0, 1, 1]),
        ],
    )
    .expect("valid dataset");
    (dataset, NeuronMask::new(row([1, 1, 1, 0, 0, 0])))
}
