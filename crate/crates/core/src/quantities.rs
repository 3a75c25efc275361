//! Fundamental alignment quantities.
//!
//! Locations annotated by exactly one concept are *unique*, locations
//! annotated by two or more are *common*. Crossing that partition with the
//! neuron mask gives four spaces per sample: unique activations (`NU`),
//! common activations (`NC`), space for unique extras (`SEU`, unique and not
//! firing) and space for common extras (`SEC`). The quantities of a mask are
//! its per-sample overlaps with each of the four spaces.

use serde::Serialize;

use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};
use crate::mask_store::{ConceptDataset, ConceptId, NeuronMask};

/// Index into a [`Quad`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// Common intersection.
    Ic = 0,
    /// Unique intersection.
    Iu = 1,
    /// Common extras.
    Ec = 2,
    /// Unique extras.
    Eu = 3,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::Ic, Quantity::Iu, Quantity::Ec, Quantity::Eu];
}

/// One value per [`Quantity`], indexed `[ic, iu, ec, eu]`.
pub type Quad = [u64; 4];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub unique: BitMatrix,
    pub common: BitMatrix,
}

/// Splits the annotated locations into unique and common elements with a
/// saturating per-location counter (`seen once`, `seen twice or more`).
pub fn compute_partition(dataset: &ConceptDataset) -> Partition {
    let (s, d) = dataset.shape();
    let mut once = BitMatrix::zeros(s, d);
    let mut twice = BitMatrix::zeros(s, d);
    for mask in dataset.masks() {
        twice.or_assign(&once.and(mask));
        once.or_assign(mask);
    }
    Partition {
        unique: once.and_not(&twice),
        common: twice,
    }
}

/// The four spaces as masks, derived once per (dataset, neuron) pair.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub nu: BitMatrix,
    pub nc: BitMatrix,
    pub seu: BitMatrix,
    pub sec: BitMatrix,
}

impl Spaces {
    pub fn new(neuron: &NeuronMask, partition: &Partition) -> Result<Self> {
        let n = neuron.mask();
        if n.shape() != partition.unique.shape() {
            return Err(Error::DimensionMismatch {
                expected: partition.unique.shape(),
                actual: n.shape(),
            });
        }
        Ok(Self {
            nu: n.and(&partition.unique),
            nc: n.and(&partition.common),
            seu: partition.unique.and_not(n),
            sec: partition.common.and_not(n),
        })
    }

    /// Exact quantities of an arbitrary mask (a concept or an evaluated label).
    pub fn quantities_of(&self, mask: &BitMatrix) -> ConceptQuantities {
        ConceptQuantities::from_vectors(
            mask.and_row_counts(&self.nu),
            mask.and_row_counts(&self.nc),
            mask.and_row_counts(&self.seu),
            mask.and_row_counts(&self.sec),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeuronSplit {
    pub nu_per_sample: Vec<u32>,
    pub nc_per_sample: Vec<u32>,
    pub sec_per_sample: Vec<u32>,
    pub seu_per_sample: Vec<u32>,
    /// `|N_x|`, used by the union terms.
    pub n_per_sample: Vec<u32>,
    pub n_total: u64,
    pub nu_total: u64,
    pub nc_total: u64,
    pub sec_total: u64,
    pub seu_total: u64,
}

pub fn compute_neuron_split(neuron: &NeuronMask, partition: &Partition) -> Result<NeuronSplit> {
    let spaces = Spaces::new(neuron, partition)?;
    Ok(NeuronSplit::from_spaces(neuron, &spaces))
}

impl NeuronSplit {
    pub fn from_spaces(neuron: &NeuronMask, spaces: &Spaces) -> Self {
        let sum = |v: &[u32]| v.iter().map(|&c| u64::from(c)).sum::<u64>();
        let nu = spaces.nu.row_counts();
        let nc = spaces.nc.row_counts();
        let sec = spaces.sec.row_counts();
        let seu = spaces.seu.row_counts();
        let n = neuron.mask().row_counts();
        Self {
            nu_total: sum(&nu),
            nc_total: sum(&nc),
            sec_total: sum(&sec),
            seu_total: sum(&seu),
            n_total: sum(&n),
            nu_per_sample: nu,
            nc_per_sample: nc,
            sec_per_sample: sec,
            seu_per_sample: seu,
            n_per_sample: n,
        }
    }

    pub fn samples(&self) -> usize {
        self.n_per_sample.len()
    }
}

/// Exact per-sample quantities of a concept (or of any evaluated label).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptQuantities {
    pub iu: Vec<u32>,
    pub ic: Vec<u32>,
    pub eu: Vec<u32>,
    pub ec: Vec<u32>,
    pub iu_total: u64,
    pub ic_total: u64,
    pub eu_total: u64,
    pub ec_total: u64,
}

impl ConceptQuantities {
    pub fn from_vectors(iu: Vec<u32>, ic: Vec<u32>, eu: Vec<u32>, ec: Vec<u32>) -> Self {
        let sum = |v: &[u32]| v.iter().map(|&c| u64::from(c)).sum::<u64>();
        Self {
            iu_total: sum(&iu),
            ic_total: sum(&ic),
            eu_total: sum(&eu),
            ec_total: sum(&ec),
            iu,
            ic,
            eu,
            ec,
        }
    }

    pub fn samples(&self) -> usize {
        self.ic.len()
    }

    /// Per-sample values as `[ic, iu, ec, eu]`.
    #[inline]
    pub fn quad(&self, x: usize) -> Quad {
        [
            u64::from(self.ic[x]),
            u64::from(self.iu[x]),
            u64::from(self.ec[x]),
            u64::from(self.eu[x]),
        ]
    }

    pub fn totals(&self) -> Quad {
        [self.ic_total, self.iu_total, self.ec_total, self.eu_total]
    }

    /// Decomposed IoU: intersections over `|N|` plus extras.
    pub fn diou(&self, n_total: u64) -> crate::rational::Rational {
        crate::rational::Rational::new(
            self.iu_total + self.ic_total,
            n_total + self.eu_total + self.ec_total,
        )
    }

    pub fn mask_popcount(&self) -> u64 {
        self.iu_total + self.ic_total + self.eu_total + self.ec_total
    }
}

pub fn compute_concept_quantities(
    k: ConceptId,
    neuron: &NeuronMask,
    partition: &Partition,
    dataset: &ConceptDataset,
) -> Result<ConceptQuantities> {
    if k as usize >= dataset.len() {
        return Err(Error::UnknownConcept(k as usize));
    }
    let spaces = Spaces::new(neuron, partition)?;
    Ok(spaces.quantities_of(dataset.mask(k)))
}

/// Pairwise "never co-annotated" indicator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisjointMatrix {
    size: usize,
    cells: Vec<bool>,
}

pub fn compute_disjoint_matrix(dataset: &ConceptDataset) -> DisjointMatrix {
    let k = dataset.len();
    let mut cells = vec![false; k * k];
    for a in 0..k {
        for b in a..k {
            let disjoint = !dataset.masks()[a].intersects(&dataset.masks()[b]);
            cells[a * k + b] = disjoint;
            cells[b * k + a] = disjoint;
        }
    }
    DisjointMatrix { size: k, cells }
}

impl DisjointMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, a: ConceptId, b: ConceptId) -> bool {
        self.cells[a as usize * self.size + b as usize]
    }

    /// True when every concept of `left` is disjoint from `right`.
    pub fn all_disjoint(
        &self,
        left: impl IntoIterator<Item = ConceptId>,
        right: ConceptId,
    ) -> bool {
        left.into_iter().all(|a| self.get(a, right))
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        self.cells.chunks(self.size).map(|r| r.to_vec()).collect()
    }

    pub fn is_fully_disjoint(&self) -> bool {
        (0..self.size).all(|a| (0..self.size).all(|b| a == b || self.cells[a * self.size + b]))
    }
}

/// Cumulative best and worst per-quantity improvements.
///
/// `sample_top(t, x)` is, for every quantity, the sum of the `t` largest
/// per-concept values at sample `x`; `sample_bott(x)` the smallest value.
/// The aggregated vectors do the same over dataset totals. Cumulative sums
/// saturate once fewer than `t` concepts exist.
#[derive(Debug, Clone)]
pub struct TopBott {
    depth: usize,
    samples: usize,
    /// `top[(t - 1) * samples + x]`.
    top: Vec<Quad>,
    bott: Vec<Quad>,
    top_aggregated: Vec<Quad>,
    bott_aggregated: Quad,
    /// Per quantity: `Bott_1` is zero at every sample.
    bott_zero: [bool; 4],
}

pub fn compute_top_bott(all: &[ConceptQuantities], max_length: usize) -> TopBott {
    let depth = max_length.saturating_sub(1).max(1);
    let samples = all.first().map_or(0, ConceptQuantities::samples);
    let mut top = vec![[0u64; 4]; depth * samples];
    let mut bott = vec![[0u64; 4]; samples];
    let mut column: Vec<u64> = Vec::with_capacity(all.len());
    for x in 0..samples {
        for q in Quantity::ALL {
            column.clear();
            column.extend(all.iter().map(|c| c.quad(x)[q as usize]));
            column.sort_unstable_by(|a, b| b.cmp(a));
            bott[x][q as usize] = column.last().copied().unwrap_or(0);
            let mut acc = 0;
            for t in 0..depth {
                acc += column.get(t).copied().unwrap_or(0);
                top[t * samples + x][q as usize] = acc;
            }
        }
    }
    let mut top_aggregated = vec![[0u64; 4]; depth];
    let mut bott_aggregated = [0u64; 4];
    for q in Quantity::ALL {
        column.clear();
        column.extend(all.iter().map(|c| c.totals()[q as usize]));
        column.sort_unstable_by(|a, b| b.cmp(a));
        bott_aggregated[q as usize] = column.last().copied().unwrap_or(0);
        let mut acc = 0;
        for (t, slot) in top_aggregated.iter_mut().enumerate() {
            acc += column.get(t).copied().unwrap_or(0);
            slot[q as usize] = acc;
        }
    }
    let mut bott_zero = [true; 4];
    for q in Quantity::ALL {
        bott_zero[q as usize] = bott.iter().all(|b| b[q as usize] == 0);
    }
    TopBott {
        depth,
        samples,
        top,
        bott,
        top_aggregated,
        bott_aggregated,
        bott_zero,
    }
}

impl TopBott {
    /// Largest `t` for which Top vectors are stored.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    #[inline]
    pub fn sample_top(&self, t: usize, x: usize) -> Quad {
        debug_assert!((1..=self.depth).contains(&t));
        self.top[(t - 1) * self.samples + x]
    }

    #[inline]
    pub fn sample_bott(&self, x: usize) -> Quad {
        self.bott[x]
    }

    pub fn aggregated_top(&self, t: usize) -> Quad {
        self.top_aggregated[t - 1]
    }

    pub fn aggregated_bott(&self) -> Quad {
        self.bott_aggregated
    }

    /// Whether `Bott_1` of `q` vanishes on every sample.
    pub fn bott_is_zero(&self, q: Quantity) -> bool {
        self.bott_zero[q as usize]
    }
}
