//! Beam searches and the exhaustive oracle.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::time::Instant;

use serde::Serialize;

use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};
use crate::explanation::{Explanation, SearchStats};
use crate::heuristic::{estimate_label_bounds, Granularity, QuantityBounds};
use crate::instance::Instance;
use crate::labels::{canonicalize, is_expansion_allowed, mask_iou, Label, Operator, OperatorSet};
use crate::mask_store::ConceptDataset;
use crate::quantities::ConceptQuantities;
use crate::rational::Rational;

/// Default cap on the number of labels the exhaustive search may enumerate.
pub const DEFAULT_BRUTE_FORCE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub max_length: usize,
    pub operators: OperatorSet,
}

impl BeamConfig {
    pub fn new(beam_size: usize, max_length: usize, operators: OperatorSet) -> Result<Self> {
        let cfg = Self {
            beam_size,
            max_length,
            operators,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 || self.max_length == 0 {
            return Err(Error::InvalidConfig(
                "beam size and maximum length must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Deterministic tie-break key: the rendering of the canonical form.
pub fn label_key(label: &Label, dataset: &ConceptDataset) -> String {
    canonicalize(label).render(dataset)
}

/// Orders by IoU descending, then key ascending.
fn rank(a: (&Rational, &str), b: (&Rational, &str)) -> Ordering {
    b.0.cmp(a.0).then_with(|| a.1.cmp(b.1))
}

#[derive(Debug, Clone)]
struct Member {
    label: Label,
    key: String,
    iou: Rational,
    quantities: Option<ConceptQuantities>,
}

struct Candidate {
    parent: usize,
    op: Operator,
    k: u32,
    label: Label,
    key: String,
}

/// Every allowed one-step expansion of the beam, one per canonical form
/// and none already in the beam. Ordered by key.
fn expand_beam(inst: &Instance<'_>, beam: &[Member], cfg: &BeamConfig) -> Vec<Candidate> {
    let in_beam: HashSet<&str> = beam.iter().map(|m| m.key.as_str()).collect();
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut out = Vec::new();
    for (parent, member) in beam.iter().enumerate() {
        if member.label.len() >= cfg.max_length {
            continue;
        }
        for op in cfg.operators.iter() {
            for k in inst.dataset().concept_ids() {
                if !is_expansion_allowed(&member.label, op, k) {
                    continue;
                }
                let label = member.label.extended(op, k);
                let key = label_key(&label, inst.dataset());
                if in_beam.contains(key.as_str()) || seen.insert(key.clone(), ()).is_some() {
                    continue;
                }
                out.push(Candidate {
                    parent,
                    op,
                    k,
                    label,
                    key,
                });
            }
        }
    }
    out.sort_by(|a, b| a.key.cmp(&b.key));
    out
}

fn select(mut pool: Vec<Member>, b: usize) -> Vec<Member> {
    pool.sort_by(|x, y| rank((&x.iou, &x.key), (&y.iou, &y.key)));
    pool.truncate(b);
    pool
}

fn same_beam(a: &[Member], b: &[Member]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.key == y.key)
}

fn finish(beam: &[Member], stats: SearchStats, start: Instant) -> Explanation {
    let best = &beam[0];
    let mut e = Explanation::new(best.label.clone(), best.iou);
    e.stats = stats;
    e.stats.elapsed = start.elapsed();
    // A beam never proves optimality.
    e.optimal = false;
    e
}

/// Level-wise beam search scoring every candidate by its exact IoU.
pub fn beam_search_vanilla(inst: &Instance<'_>, cfg: &BeamConfig) -> Result<Explanation> {
    cfg.validate()?;
    let start = Instant::now();
    let mut stats = SearchStats::default();
    let ds = inst.dataset();
    let level1: Vec<Member> = ds
        .concept_ids()
        .map(|k| {
            let label = Label::atom(k);
            stats.visited += 1;
            Ok(Member {
                iou: inst.iou(&label)?,
                key: label_key(&label, ds),
                label,
                quantities: None,
            })
        })
        .collect::<Result<_>>()?;
    let mut beam = select(level1, cfg.beam_size);
    for _ in 1..cfg.max_length {
        stats.expanded += beam
            .iter()
            .filter(|m| m.label.len() < cfg.max_length)
            .count() as u64;
        let candidates = expand_beam(inst, &beam, cfg);
        let mut pool = beam.clone();
        for c in candidates {
            stats.visited += 1;
            pool.push(Member {
                iou: inst.iou(&c.label)?,
                label: c.label,
                key: c.key,
                quantities: None,
            });
        }
        let next = select(pool, cfg.beam_size);
        let done = same_beam(&beam, &next);
        beam = next;
        if done {
            break;
        }
    }
    Ok(finish(&beam, stats, start))
}

/// Beam search that ranks candidates by their optimistic label bound and
/// computes exact IoU only while that bound can still reach the beam.
pub fn beam_search_heuristic(inst: &Instance<'_>, cfg: &BeamConfig) -> Result<Explanation> {
    cfg.validate()?;
    let start = Instant::now();
    let mut stats = SearchStats::default();
    let ds = inst.dataset();
    let n_total = inst.n_total();
    let level1: Vec<Member> = ds
        .concept_ids()
        .map(|k| {
            let label = Label::atom(k);
            let q = inst.concept(k).clone();
            stats.visited += 1;
            Member {
                iou: q.diou(n_total),
                key: label_key(&label, ds),
                label,
                quantities: Some(q),
            }
        })
        .collect();
    let mut beam = select(level1, cfg.beam_size);
    for _ in 1..cfg.max_length {
        stats.expanded += beam
            .iter()
            .filter(|m| m.label.len() < cfg.max_length)
            .count() as u64;
        let candidates = expand_beam(inst, &beam, cfg);
        let parent_bounds: Vec<Option<QuantityBounds>> = beam
            .iter()
            .map(|m| {
                (m.label.len() < cfg.max_length).then(|| {
                    QuantityBounds::exact(
                        m.quantities.as_ref().expect("beam members are exact"),
                        Granularity::Sample,
                    )
                })
            })
            .collect();
        let mut scored = Vec::with_capacity(candidates.len());
        for c in candidates {
            let left = parent_bounds[c.parent].as_ref().expect("expanded member");
            let disjoint = inst.is_disjoint(&beam[c.parent].label, c.k);
            let b = estimate_label_bounds(
                left,
                inst.concept(c.k),
                c.op,
                disjoint,
                inst.split(),
                Granularity::Sample,
            )?;
            stats.estimated += 1;
            scored.push((b.diou_max(n_total), c));
        }
        scored.sort_by(|a, b| rank((&a.0, &a.1.key), (&b.0, &b.1.key)));
        let mut pool = beam.clone();
        // IoUs of the pool, kept sorted descending to read the b-th best.
        let mut ious: Vec<Rational> = pool.iter().map(|m| m.iou).collect();
        ious.sort_by(|a, b| b.cmp(a));
        for (estimate, c) in scored {
            if ious.len() >= cfg.beam_size && estimate < ious[cfg.beam_size - 1] {
                break;
            }
            let mask = inst.evaluate(&c.label)?;
            let q = inst.spaces().quantities_of(&mask);
            stats.visited += 1;
            let iou = q.diou(n_total);
            let pos = ious.partition_point(|v| *v >= iou);
            ious.insert(pos, iou);
            pool.push(Member {
                iou,
                label: c.label,
                key: c.key,
                quantities: Some(q),
            });
        }
        let next = select(pool, cfg.beam_size);
        let done = same_beam(&beam, &next);
        beam = next;
        if done {
            break;
        }
    }
    Ok(finish(&beam, stats, start))
}

/// Number of left-deep labels of length `1..=n` over `k` distinct concepts
/// with `ops` operators: `sum_m ops^(m-1) * k! / (k-m)!`.
pub fn state_space_size(k: usize, n: usize, ops: usize) -> u128 {
    let mut total: u128 = 0;
    let mut perms: u128 = 1;
    let mut op_pow: u128 = 1;
    for m in 1..=n.min(k) {
        perms = perms.saturating_mul((k - m + 1) as u128);
        total = total.saturating_add(perms.saturating_mul(op_pow));
        op_pow = op_pow.saturating_mul(ops as u128);
    }
    total
}

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub best: Explanation,
    /// Labels enumerated, duplicates under reordering included.
    pub enumerated: u64,
    /// Distinct canonical labels sorted by IoU descending, then key.
    pub ranking: Vec<(Label, Rational)>,
}

/// Enumerates every label of length `<= n`; `top` bounds the ranking size.
pub fn brute_force(
    inst: &Instance<'_>,
    n: usize,
    operators: OperatorSet,
    cap: u128,
    top: usize,
) -> Result<BruteForceResult> {
    let start = Instant::now();
    let k = inst.concept_count();
    let size = state_space_size(k, n, operators.len());
    if size > cap {
        return Err(Error::SearchSpaceTooLarge { size, cap });
    }
    let ds = inst.dataset();
    let mut state = Enumeration {
        inst,
        n,
        operators,
        enumerated: 0,
        best: None,
        seen: HashMap::new(),
        keep_ranking: top > 0,
    };
    for head in ds.concept_ids() {
        let label = Label::atom(head);
        let mask = ds.mask(head).clone();
        state.visit(label, mask);
    }
    let (label, iou) = state.best.take().expect("at least one concept");
    let mut ranking: Vec<(Label, Rational, String)> = state
        .seen
        .into_iter()
        .map(|(l, v)| {
            let key = l.render(ds);
            (l, v, key)
        })
        .collect();
    ranking.sort_by(|a, b| rank((&a.1, &a.2), (&b.1, &b.2)));
    ranking.truncate(top);
    let mut best = Explanation::new(label.0, iou);
    best.stats.visited = state.enumerated;
    best.stats.elapsed = start.elapsed();
    Ok(BruteForceResult {
        best,
        enumerated: state.enumerated,
        ranking: ranking.into_iter().map(|(l, v, _)| (l, v)).collect(),
    })
}

struct Enumeration<'i, 'a> {
    inst: &'i Instance<'a>,
    n: usize,
    operators: OperatorSet,
    enumerated: u64,
    /// ((label, key), iou)
    best: Option<((Label, String), Rational)>,
    seen: HashMap<Label, Rational>,
    keep_ranking: bool,
}

impl Enumeration<'_, '_> {
    fn visit(&mut self, label: Label, mask: BitMatrix) {
        self.enumerated += 1;
        let iou = mask_iou(&mask, self.inst.neuron());
        let better = match &self.best {
            None => true,
            Some((_, b)) => iou >= *b,
        };
        if better {
            let key = label_key(&label, self.inst.dataset());
            let replace = match &self.best {
                Some(((_, bkey), b)) => iou > *b || key < *bkey,
                None => true,
            };
            if replace {
                self.best = Some(((canonicalize(&label), key), iou));
            }
        }
        if self.keep_ranking {
            self.seen.entry(canonicalize(&label)).or_insert(iou);
        }
        if label.len() >= self.n {
            return;
        }
        let ds = self.inst.dataset();
        for op in self.operators.iter() {
            for k in ds.concept_ids() {
                if label.contains(k) {
                    continue;
                }
                let mut child = mask.clone();
                op.apply(&mut child, ds.mask(k));
                self.visit(label.extended(op, k), child);
            }
        }
    }
}
