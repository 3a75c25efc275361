//! Bounds on label quantities and on the best IoU reachable by extending a label.

use serde::Serialize;
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::labels::{Operator, OperatorSet};
use crate::quantities::{ConceptQuantities, NeuronSplit, Quad, Quantity, TopBott};
use crate::rational::Rational;

const IC: usize = Quantity::Ic as usize;
const IU: usize = Quantity::Iu as usize;
const EC: usize = Quantity::Ec as usize;
const EU: usize = Quantity::Eu as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Granularity {
    /// One bound per sample.
    Sample,
    /// One bound on the dataset-wide totals.
    Aggregated,
}

/// Spaces of one estimation slot: a sample, or the whole dataset when aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotSpaces {
    pub n: u64,
    pub nu: u64,
    pub nc: u64,
    pub seu: u64,
    pub sec: u64,
}

pub fn slot_count(split: &NeuronSplit, g: Granularity) -> usize {
    match g {
        Granularity::Sample => split.samples(),
        Granularity::Aggregated => 1,
    }
}

#[inline]
pub fn slot_spaces(split: &NeuronSplit, g: Granularity, x: usize) -> SlotSpaces {
    match g {
        Granularity::Sample => SlotSpaces {
            n: u64::from(split.n_per_sample[x]),
            nu: u64::from(split.nu_per_sample[x]),
            nc: u64::from(split.nc_per_sample[x]),
            seu: u64::from(split.seu_per_sample[x]),
            sec: u64::from(split.sec_per_sample[x]),
        },
        Granularity::Aggregated => SlotSpaces {
            n: split.n_total,
            nu: split.nu_total,
            nc: split.nc_total,
            seu: split.seu_total,
            sec: split.sec_total,
        },
    }
}

#[inline]
fn concept_slot(q: &ConceptQuantities, g: Granularity, x: usize) -> Quad {
    match g {
        Granularity::Sample => q.quad(x),
        Granularity::Aggregated => q.totals(),
    }
}

/// Min/max of the four quantities of a label, per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantityBounds {
    granularity: Granularity,
    min: SmallVec<[Quad; 1]>,
    max: SmallVec<[Quad; 1]>,
    exact: [bool; 4],
    degenerate: bool,
}

impl QuantityBounds {
    /// Bounds that collapse onto known exact quantities.
    pub fn exact(q: &ConceptQuantities, g: Granularity) -> Self {
        let slots: SmallVec<[Quad; 1]> = match g {
            Granularity::Sample => (0..q.samples()).map(|x| q.quad(x)).collect(),
            Granularity::Aggregated => smallvec![q.totals()],
        };
        Self {
            granularity: g,
            min: slots.clone(),
            max: slots,
            exact: [true; 4],
            degenerate: false,
        }
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn slots(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self, x: usize) -> Quad {
        self.min[x]
    }

    pub fn max(&self, x: usize) -> Quad {
        self.max[x]
    }

    pub fn total_min(&self) -> Quad {
        sum_quads(&self.min)
    }

    pub fn total_max(&self) -> Quad {
        sum_quads(&self.max)
    }

    pub fn is_exact(&self, q: Quantity) -> bool {
        self.exact[q as usize]
    }

    pub fn is_fully_exact(&self) -> bool {
        self.exact.iter().all(|&e| e)
    }

    /// Set when an AND NOT combined two disjoint sides somewhere in the label.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Optimistic label dIoU: largest intersection over smallest union.
    pub fn diou_max(&self, n_total: u64) -> Rational {
        let (lo, hi) = (self.total_min(), self.total_max());
        Rational::new(hi[IC] + hi[IU], n_total + lo[EC] + lo[EU])
    }

    pub fn diou_min(&self, n_total: u64) -> Rational {
        let (lo, hi) = (self.total_min(), self.total_max());
        Rational::new(lo[IC] + lo[IU], n_total + hi[EC] + hi[EU])
    }

    /// Narrows `self` with another bound on the same label and granularity.
    pub fn intersect(&mut self, other: &QuantityBounds) {
        assert_eq!(self.granularity, other.granularity);
        for x in 0..self.slots() {
            for q in 0..4 {
                self.min[x][q] = self.min[x][q].max(other.min[x][q]);
                self.max[x][q] = self.max[x][q].min(other.max[x][q]);
            }
        }
        for q in 0..4 {
            self.exact[q] |= other.exact[q];
        }
        self.degenerate |= other.degenerate;
    }
}

fn sum_quads(v: &[Quad]) -> Quad {
    let mut out = [0u64; 4];
    for q in v {
        for i in 0..4 {
            out[i] += q[i];
        }
    }
    out
}

/// Bounds of `left op right`, where `right` is an atomic concept with exact
/// quantities. `disjoint` must be true only when every concept of the left
/// side is disjoint from `right`.
pub fn estimate_label_bounds(
    left: &QuantityBounds,
    right: &ConceptQuantities,
    op: Operator,
    disjoint: bool,
    split: &NeuronSplit,
    granularity: Granularity,
) -> Result<QuantityBounds> {
    if left.granularity != granularity || left.slots() != slot_count(split, granularity) {
        return Err(Error::GranularityMismatch);
    }
    let slots = left.slots();
    let mut min: SmallVec<[Quad; 1]> = SmallVec::with_capacity(slots);
    let mut max: SmallVec<[Quad; 1]> = SmallVec::with_capacity(slots);
    for x in 0..slots {
        let (lo, hi) = (left.min[x], left.max[x]);
        let r = concept_slot(right, granularity, x);
        let sp = slot_spaces(split, granularity, x);
        let (mut nlo, mut nhi) = ([0u64; 4], [0u64; 4]);

        // A unique element of `right` lies in no other concept, so it never
        // meets the left side: the unique quantities follow exactly.
        match op {
            Operator::Or => {
                for q in [IU, EU] {
                    nlo[q] = lo[q] + r[q];
                    nhi[q] = hi[q] + r[q];
                }
            }
            Operator::And => {}
            Operator::AndNot => {
                for q in [IU, EU] {
                    nlo[q] = lo[q];
                    nhi[q] = hi[q];
                }
            }
        }

        for (q, space) in [(IC, sp.nc), (EC, sp.sec)] {
            let (l_min, l_max, rq) = (lo[q], hi[q], r[q]);
            let (a, b) = if disjoint {
                match op {
                    Operator::Or => ((l_min + rq).min(space), (l_max + rq).min(space)),
                    Operator::And => (0, 0),
                    Operator::AndNot => (l_min, l_max),
                }
            } else {
                match op {
                    Operator::Or => {
                        let floor = match (granularity, q) {
                            // The aggregated common intersection uses the smaller total.
                            (Granularity::Aggregated, IC) => l_min.min(rq),
                            _ => l_min.max(rq),
                        };
                        (floor, (l_max + rq).min(space))
                    }
                    Operator::And => ((l_min + rq).saturating_sub(space), l_max.min(rq)),
                    Operator::AndNot => (
                        l_min.saturating_sub(rq),
                        l_max.min(space.saturating_sub(rq)),
                    ),
                }
            };
            nlo[q] = a;
            nhi[q] = b.max(a);
        }
        min.push(nlo);
        max.push(nhi);
    }
    let common_exact = disjoint && (op == Operator::And || (left.exact[IC] && left.exact[EC]));
    Ok(QuantityBounds {
        granularity,
        min,
        max,
        exact: [common_exact, true, common_exact, true],
        degenerate: left.degenerate || (disjoint && op == Operator::AndNot),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PathKind {
    /// The label itself, not extended further.
    Final,
    /// Extensions using one operator only.
    Exclusive(Operator),
    /// Extensions mixing the operators of a set.
    Combined(OperatorSet),
}

/// Summed intersection/union bounds of a path and the dIoU range they imply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PathBounds {
    pub kind: PathKind,
    /// Remaining length budget.
    pub t: usize,
    pub i_min: u64,
    pub i_max: u64,
    pub union_min: u64,
    pub union_max: u64,
    pub diou_min: Rational,
    pub diou_max: Rational,
}

impl PathBounds {
    fn from_sums(
        kind: PathKind,
        t: usize,
        i_min: u64,
        i_max: u64,
        union_min: u64,
        union_max: u64,
    ) -> Self {
        Self {
            kind,
            t,
            i_min,
            i_max,
            union_min,
            union_max,
            diou_min: Rational::new(i_min, union_max),
            diou_max: Rational::new(i_max, union_min),
        }
    }

    fn forced_zero(kind: PathKind, t: usize) -> Self {
        Self::from_sums(kind, t, 0, 0, 0, 0)
    }
}

/// `(dIoU_min, dIoU_max)`.
pub fn diou_bounds(path: &PathBounds) -> (Rational, Rational) {
    (path.diou_min, path.diou_max)
}

/// The label's own dIoU range. A degenerate label is forced to zero.
pub fn final_path(bounds: &QuantityBounds, split: &NeuronSplit) -> PathBounds {
    if bounds.degenerate {
        return PathBounds::forced_zero(PathKind::Final, 0);
    }
    let (lo, hi) = (bounds.total_min(), bounds.total_max());
    PathBounds::from_sums(
        PathKind::Final,
        0,
        lo[IC] + lo[IU],
        hi[IC] + hi[IU],
        split.n_total + lo[EC] + lo[EU],
        split.n_total + hi[EC] + hi[EU],
    )
}

#[inline]
fn top(tb: &TopBott, g: Granularity, t: usize, x: usize) -> Quad {
    match g {
        Granularity::Sample => tb.sample_top(t, x),
        Granularity::Aggregated => tb.aggregated_top(t),
    }
}

/// Bounds of the three single-operator paths, in `Operator::ALL` order.
/// Requires `1 <= t <= topbott.depth()`.
pub fn exclusive_paths(
    bounds: &QuantityBounds,
    topbott: &TopBott,
    split: &NeuronSplit,
    t: usize,
) -> Result<[PathBounds; 3]> {
    if t == 0 || t > topbott.depth() {
        return Err(Error::BudgetTooDeep {
            requested: t,
            available: topbott.depth(),
        });
    }
    let g = bounds.granularity;
    if bounds.slots() != slot_count(split, g) {
        return Err(Error::GranularityMismatch);
    }
    // Bott_1 vanishing everywhere lets the sample loop skip reading it.
    let bott_zero = Quantity::ALL.map(|q| topbott.bott_is_zero(q));
    let skip_bott = g == Granularity::Sample && bott_zero.iter().all(|&z| z);
    // [op][i_min, i_max, union_min, union_max]
    let mut sums = [[0u64; 4]; 3];
    for x in 0..bounds.slots() {
        let (lo, hi) = (bounds.min[x], bounds.max[x]);
        let sp = slot_spaces(split, g, x);
        let top_t = top(topbott, g, t, x);
        let top_1 = top(topbott, g, 1, x);
        let bott = match g {
            Granularity::Sample if skip_bott => [0; 4],
            Granularity::Sample => topbott.sample_bott(x),
            Granularity::Aggregated => topbott.aggregated_bott(),
        };

        let or = [
            (lo[IC] + lo[IU]).max(bott[IC] + bott[IU]),
            (hi[IC] + top_t[IC]).min(sp.nc) + (hi[IU] + top_t[IU]).min(sp.nu),
            sp.n + (lo[EC] + lo[EU]).max(bott[EC] + bott[EU]),
            sp.n + (hi[EC] + top_t[EC]).min(sp.sec) + (hi[EU] + top_t[EU]).min(sp.seu),
        ];
        let and = [0, hi[IC].min(top_1[IC]), sp.n, sp.n + hi[EC].min(top_1[EC])];
        // Unique elements survive every AND NOT, common ones may all be removed.
        let and_not = [
            lo[IU],
            hi[IU] + hi[IC].min(sp.nc.saturating_sub(bott[IC])),
            sp.n + lo[EU],
            sp.n + hi[EU] + hi[EC].min(sp.sec.saturating_sub(bott[EC])),
        ];
        for (acc, v) in sums.iter_mut().zip([or, and, and_not]) {
            for i in 0..4 {
                acc[i] += v[i];
            }
        }
    }
    Ok([0, 1, 2].map(|i| {
        let [a, b, c, d] = sums[i];
        PathBounds::from_sums(PathKind::Exclusive(Operator::ALL[i]), t, a, b, c, d)
    }))
}

/// Quantity-wise envelope of the paths of the allowed operators.
pub fn combine_paths(paths: &[PathBounds; 3], operators: OperatorSet) -> PathBounds {
    let chosen = || operators.iter().map(|op| &paths[op as usize]);
    let t = paths[0].t;
    let i_min = chosen().map(|p| p.i_min).min().unwrap_or(0);
    let i_max = chosen().map(|p| p.i_max).max().unwrap_or(0);
    let union_min = chosen().map(|p| p.union_min).min().unwrap_or(0);
    let union_max = chosen().map(|p| p.union_max).max().unwrap_or(0);
    let kind = if operators.len() == 1 {
        PathKind::Exclusive(operators.iter().next().expect("one operator"))
    } else {
        PathKind::Combined(operators)
    };
    PathBounds::from_sums(kind, t, i_min, i_max, union_min, union_max)
}

/// The combined path over `operators`.
pub fn extension_path(
    bounds: &QuantityBounds,
    topbott: &TopBott,
    split: &NeuronSplit,
    t: usize,
    operators: OperatorSet,
) -> Result<PathBounds> {
    Ok(combine_paths(
        &exclusive_paths(bounds, topbott, split, t)?,
        operators,
    ))
}

/// Every path of a label: FINAL first, then the exclusive path of each
/// allowed operator, then their combination when more than one is allowed.
/// With `t == 0` only FINAL is produced.
pub fn estimate_path_bounds(
    bounds: &QuantityBounds,
    topbott: &TopBott,
    split: &NeuronSplit,
    t: usize,
    operators: OperatorSet,
) -> Result<Vec<PathBounds>> {
    let mut out = vec![final_path(bounds, split)];
    if t == 0 {
        return Ok(out);
    }
    let exclusive = exclusive_paths(bounds, topbott, split, t)?;
    out.extend(operators.iter().map(|op| exclusive[op as usize]));
    if operators.len() > 1 {
        out.push(combine_paths(&exclusive, operators));
    }
    Ok(out)
}
