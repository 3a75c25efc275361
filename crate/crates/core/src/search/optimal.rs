//! Best-first search that returns a label of maximum IoU.
//!
//! Every label is represented by up to two frontier nodes: a FINAL node for
//! the label itself and an EXTEND node for everything reachable from it.
//! Nodes enter the frontier with aggregated estimates, are refined to the
//! sample tier when popped, and FINAL nodes are settled by computing exact
//! quantities. Exact prefixes are cached and pushed back into the estimates
//! of frontier nodes sharing them.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::num::NonZeroUsize;
use std::time::{Duration, Instant};

use log::{debug, warn};
use lru::LruCache;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::explanation::{Explanation, SearchStats};
use crate::heuristic::{
    estimate_label_bounds, extension_path, final_path, Granularity, QuantityBounds,
};
use crate::instance::Instance;
use crate::labels::{
    canonicalize, equivalent_variants, is_expansion_allowed, Label, Operator, OperatorSet,
};
use crate::quantities::ConceptQuantities;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    pub max_length: usize,
    pub operators: OperatorSet,
    /// Refresh frontier estimates from newly exact prefixes.
    pub backprop: bool,
    /// Try reordered equivalent labels for tighter bounds.
    pub equivalences: bool,
    /// Upper bound on processed frontier nodes.
    pub budget_nodes: Option<u64>,
    pub budget_seconds: Option<f64>,
    pub prefix_cache_entries: usize,
    pub max_variants: usize,
}

impl SearchConfig {
    pub fn new(max_length: usize, operators: OperatorSet) -> Self {
        Self {
            max_length,
            operators,
            backprop: true,
            equivalences: true,
            budget_nodes: None,
            budget_seconds: None,
            prefix_cache_entries: 4096,
            max_variants: 24,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_length == 0 {
            return Err(Error::InvalidConfig(
                "maximum label length must be >= 1".into(),
            ));
        }
        if self.prefix_cache_entries == 0 {
            return Err(Error::InvalidConfig(
                "prefix cache needs at least one entry".into(),
            ));
        }
        if let Some(s) = self.budget_seconds {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidConfig(format!("budget of {s} seconds")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeKind {
    Final,
    Extend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Tier {
    Aggregated,
    Sample,
    Exact,
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub label: Label,
    pub kind: NodeKind,
    pub tier: Tier,
    pub diou_min: Rational,
    pub diou_max: Rational,
    version: u32,
    alive: bool,
    equivalences_done: bool,
}

type NodeId = u32;

/// Heap entry; stale versions are discarded when popped.
#[derive(Debug, PartialEq, Eq)]
struct Entry {
    priority: Rational,
    seq: u64,
    id: NodeId,
    version: u32,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .cmp(&other.priority)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs the search to completion or until a budget is exhausted.
pub fn optimal_search(inst: &Instance<'_>, cfg: &SearchConfig) -> Result<Explanation> {
    let mut search = OptimalSearch::new(inst, *cfg)?;
    search.run()
}

/// The search state. Exposed so tests can drive and inspect it.
pub struct OptimalSearch<'i, 'a> {
    inst: &'i Instance<'a>,
    cfg: SearchConfig,
    nodes: Vec<SearchNode>,
    heap: BinaryHeap<Entry>,
    seq: u64,
    min_iou: Rational,
    best: Option<(Label, Rational)>,
    memory: HashSet<(Label, NodeKind)>,
    recent_iou: Option<Rational>,
    prefix_cache: LruCache<Label, ConceptQuantities>,
    prefix_index: HashMap<Label, Vec<NodeId>>,
    stats: SearchStats,
    exhausted: bool,
    /// Every value `min_iou` took.
    trace_min_iou: Vec<Rational>,
}

impl<'i, 'a> OptimalSearch<'i, 'a> {
    pub fn new(inst: &'i Instance<'a>, cfg: SearchConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.max_length > inst.max_length() {
            return Err(Error::BudgetTooDeep {
                requested: cfg.max_length,
                available: inst.max_length(),
            });
        }
        let entries = NonZeroUsize::new(cfg.prefix_cache_entries).expect("validated");
        Ok(Self {
            inst,
            cfg,
            nodes: Vec::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            min_iou: Rational::ZERO,
            best: None,
            memory: HashSet::new(),
            recent_iou: None,
            prefix_cache: LruCache::new(entries),
            prefix_index: HashMap::new(),
            stats: SearchStats::default(),
            exhausted: false,
            trace_min_iou: Vec::new(),
        })
    }

    pub fn min_iou(&self) -> Rational {
        self.min_iou
    }

    pub fn best(&self) -> Option<&(Label, Rational)> {
        self.best.as_ref()
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    /// Every value `min_iou` took, in order.
    pub fn min_iou_history(&self) -> &[Rational] {
        &self.trace_min_iou
    }

    /// Live frontier nodes (latest version of each).
    pub fn frontier(&self) -> impl Iterator<Item = &SearchNode> {
        self.nodes.iter().filter(|n| n.alive)
    }

    /// Whether a node with optimistic bound `dmax` may still improve on the
    /// best label. A bound equal to `min_iou` is kept until some label is
    /// known to reach `min_iou`, since that node may be the one reaching it.
    fn keep(&self, dmax: Rational) -> bool {
        match dmax.cmp(&self.min_iou) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.best.as_ref().is_none_or(|(_, b)| *b < self.min_iou),
        }
    }

    fn raise_min(&mut self, v: Rational) {
        if v > self.min_iou {
            self.min_iou = v;
            self.trace_min_iou.push(v);
        }
    }

    /// Drops every frontier node that can no longer improve the result.
    pub fn reduce_frontier(&mut self) {
        let dead: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].alive && !self.keep(self.nodes[i].diou_max))
            .collect();
        for i in dead {
            self.nodes[i].alive = false;
        }
    }

    fn push_entry(&mut self, id: NodeId) {
        let node = &self.nodes[id as usize];
        self.heap.push(Entry {
            priority: node.diou_max,
            seq: self.seq,
            id,
            version: node.version,
        });
        self.seq += 1;
    }

    fn insert(&mut self, node: SearchNode) {
        if !self.keep(node.diou_max) {
            return;
        }
        let id = self.nodes.len() as NodeId;
        if self.cfg.backprop && node.tier != Tier::Exact {
            for len in 2..=node.label.len() {
                let key = canonicalize(&node.label.prefix(len));
                self.prefix_index.entry(key).or_default().push(id);
            }
        }
        self.nodes.push(node);
        self.push_entry(id);
    }

    fn reinsert(&mut self, id: NodeId) {
        let dmax = self.nodes[id as usize].diou_max;
        if self.keep(dmax) {
            self.nodes[id as usize].version += 1;
            self.nodes[id as usize].alive = true;
            self.push_entry(id);
        } else {
            self.nodes[id as usize].alive = false;
        }
    }

    /// Bounds of `label` from the longest exactly known prefix.
    fn label_bounds(&mut self, label: &Label, g: Granularity) -> Result<QuantityBounds> {
        for len in (2..=label.len()).rev() {
            let key = canonicalize(&label.prefix(len));
            if let Some(q) = self.prefix_cache.get(&key) {
                return self.inst.fold_bounds(label, len, q, g);
            }
        }
        self.inst.label_bounds(label, g)
    }

    fn node_range(
        &self,
        kind: NodeKind,
        label: &Label,
        bounds: &QuantityBounds,
    ) -> Result<(Rational, Rational)> {
        let p = match kind {
            NodeKind::Final => final_path(bounds, self.inst.split()),
            NodeKind::Extend => extension_path(
                bounds,
                self.inst.topbott(),
                self.inst.split(),
                self.cfg.max_length - label.len(),
                self.cfg.operators,
            )?,
        };
        Ok((p.diou_min, p.diou_max))
    }

    fn has_extensions(&self, label: &Label) -> bool {
        label.len() < self.cfg.max_length && label.len() < self.inst.concept_count()
    }

    fn seed(&mut self) -> Result<()> {
        let inst = self.inst;
        let mut best: Option<(Label, Rational)> = None;
        for k in inst.dataset().concept_ids() {
            let label = Label::atom(k);
            let iou = inst.concept(k).diou(inst.n_total());
            if best.as_ref().is_none_or(|(_, b)| iou > *b) {
                best = Some((label.clone(), iou));
            }
            self.raise_min(iou);
        }
        self.best = best;
        let mut seeds = Vec::new();
        for k in inst.dataset().concept_ids() {
            let label = Label::atom(k);
            if !self.has_extensions(&label) {
                continue;
            }
            let bounds = QuantityBounds::exact(inst.concept(k), Granularity::Aggregated);
            self.stats.estimated += 1;
            let (dmin, dmax) = self.node_range(NodeKind::Extend, &label, &bounds)?;
            self.raise_min(dmin);
            seeds.push(SearchNode {
                label,
                kind: NodeKind::Extend,
                tier: Tier::Aggregated,
                diou_min: dmin,
                diou_max: dmax,
                version: 0,
                alive: true,
                equivalences_done: false,
            });
        }
        for s in seeds {
            self.insert(s);
        }
        Ok(())
    }

    fn budget_hit(&self, start: Instant) -> bool {
        if self
            .cfg
            .budget_nodes
            .is_some_and(|m| self.stats.expanded >= m)
        {
            return true;
        }
        self.cfg
            .budget_seconds
            .is_some_and(|s| start.elapsed() >= Duration::from_secs_f64(s))
    }

    pub fn run(&mut self) -> Result<Explanation> {
        let start = Instant::now();
        if self.inst.n_total() == 0 {
            warn!("neuron mask is empty; every label has IoU 0");
        }
        self.seed()?;
        while let Some(entry) = self.heap.pop() {
            let id = entry.id;
            {
                let node = &self.nodes[id as usize];
                if !node.alive || node.version != entry.version {
                    continue;
                }
            }
            if !self.keep(self.nodes[id as usize].diou_max) {
                self.nodes[id as usize].alive = false;
                continue;
            }
            if self.budget_hit(start) {
                self.exhausted = true;
                break;
            }
            self.stats.expanded += 1;
            self.step(id)?;
        }
        let (label, iou) = self.best.clone().expect("seeded with the best concept");
        debug_assert!(self.exhausted || iou >= self.min_iou);
        let mut e = Explanation::new(label, iou);
        self.stats.elapsed = start.elapsed();
        e.stats = self.stats;
        e.optimal = !self.exhausted;
        if self.inst.n_total() == 0 {
            e.warnings.push("neuron mask is empty".into());
        }
        if self.exhausted {
            e.warnings
                .push("search budget exhausted; result may be suboptimal".into());
        }
        debug!(
            "optimal search: visited {} expanded {} estimated {} backprop {}",
            self.stats.visited,
            self.stats.expanded,
            self.stats.estimated,
            self.stats.backprop_updates
        );
        Ok(e)
    }

    fn step(&mut self, id: NodeId) -> Result<()> {
        let (label, kind, tier) = {
            let n = &self.nodes[id as usize];
            (n.label.clone(), n.kind, n.tier)
        };
        if tier == Tier::Aggregated {
            let bounds = self.label_bounds(&label, Granularity::Sample)?;
            let (dmin, dmax) = self.node_range(kind, &label, &bounds)?;
            let node = &mut self.nodes[id as usize];
            // The two tiers are not nested for paths, so keep the tighter of each.
            node.diou_min = node.diou_min.max(dmin);
            node.diou_max = node.diou_max.min(dmax);
            node.tier = if bounds.is_fully_exact() {
                Tier::Exact
            } else {
                Tier::Sample
            };
            let dmin = node.diou_min;
            self.raise_min(dmin);
            self.reinsert(id);
            return Ok(());
        }

        if self.cfg.equivalences
            && tier == Tier::Sample
            && !self.nodes[id as usize].equivalences_done
        {
            self.nodes[id as usize].equivalences_done = true;
            if let Some((dmin, dmax)) = self.best_variant(kind, &label)? {
                let node = &mut self.nodes[id as usize];
                if dmax < node.diou_max {
                    node.diou_max = dmax;
                    node.diou_min = node.diou_min.max(dmin);
                    let dmin = node.diou_min;
                    self.raise_min(dmin);
                    self.reinsert(id);
                    return Ok(());
                }
            }
        }

        let dmax = self.nodes[id as usize].diou_max;
        let key = (canonicalize(&label), kind);
        if self.recent_iou == Some(dmax) {
            if self.memory.contains(&key) {
                self.nodes[id as usize].alive = false;
                return Ok(());
            }
        } else {
            self.memory.clear();
            self.recent_iou = Some(dmax);
        }
        self.memory.insert(key);

        self.nodes[id as usize].alive = false;
        match kind {
            NodeKind::Final => self.visit(&label, tier, dmax),
            NodeKind::Extend => self.expand(&label),
        }
    }

    /// Tightest range over the equivalent reorderings of `label`.
    fn best_variant(
        &mut self,
        kind: NodeKind,
        label: &Label,
    ) -> Result<Option<(Rational, Rational)>> {
        if label.len() < 2 {
            return Ok(None);
        }
        let mut out: Option<(Rational, Rational)> = None;
        for v in equivalent_variants(label, self.cfg.max_variants) {
            let bounds = self.label_bounds(&v, Granularity::Sample)?;
            self.stats.estimated += 1;
            let (dmin, dmax) = self.node_range(kind, &v, &bounds)?;
            out = Some(match out {
                None => (dmin, dmax),
                Some((a, b)) => (a.max(dmin), b.min(dmax)),
            });
        }
        Ok(out)
    }

    fn visit(&mut self, label: &Label, tier: Tier, dmax: Rational) -> Result<()> {
        let iou = if tier == Tier::Exact {
            dmax
        } else {
            let prefixes = self.inst.exact_quantities(label)?;
            self.stats.visited += 1;
            let iou = prefixes
                .last()
                .expect("non-empty")
                .diou(self.inst.n_total());
            for (len, q) in (1..=label.len()).zip(prefixes).skip(1) {
                let key = canonicalize(&label.prefix(len));
                if self.prefix_cache.contains(&key) {
                    continue;
                }
                self.prefix_cache.put(key.clone(), q);
                if self.cfg.backprop {
                    self.backpropagate_prefix(&key)?;
                }
            }
            iou
        };
        if self.best.as_ref().is_none_or(|(_, b)| iou > *b) {
            self.best = Some((label.clone(), iou));
        }
        self.raise_min(iou);
        Ok(())
    }

    /// Recomputes the live nodes indexed under `prefix`, which has just become
    /// exact. Returns how many of them got tighter.
    pub fn backpropagate_prefix(&mut self, prefix: &Label) -> Result<u64> {
        let Some(ids) = self.prefix_index.remove(prefix) else {
            return Ok(0);
        };
        let mut updated = 0;
        for id in ids {
            let (label, kind, tier) = {
                let n = &self.nodes[id as usize];
                if !n.alive || n.tier == Tier::Exact {
                    continue;
                }
                (n.label.clone(), n.kind, n.tier)
            };
            let g = if tier == Tier::Aggregated {
                Granularity::Aggregated
            } else {
                Granularity::Sample
            };
            let bounds = self.label_bounds(&label, g)?;
            let (dmin, dmax) = self.node_range(kind, &label, &bounds)?;
            let node = &mut self.nodes[id as usize];
            let tighter = dmax < node.diou_max || dmin > node.diou_min;
            if !tighter {
                continue;
            }
            node.diou_max = node.diou_max.min(dmax);
            node.diou_min = node.diou_min.max(dmin);
            if bounds.is_fully_exact() && g == Granularity::Sample {
                node.tier = Tier::Exact;
            }
            let dmin = node.diou_min;
            updated += 1;
            self.raise_min(dmin);
            self.reinsert(id);
        }
        self.stats.backprop_updates += updated;
        Ok(updated)
    }

    fn expand(&mut self, label: &Label) -> Result<()> {
        let inst = self.inst;
        let left = self.label_bounds(label, Granularity::Aggregated)?;
        let mut children = Vec::new();
        let mut best_min = Rational::ZERO;
        for op in self.cfg.operators.iter() {
            for k in inst.dataset().concept_ids() {
                if !is_expansion_allowed(label, op, k) {
                    continue;
                }
                let disjoint = inst.is_disjoint(label, k);
                if disjoint && op == Operator::AndNot {
                    // Same mask as `label`, already covered.
                    continue;
                }
                let bounds = estimate_label_bounds(
                    &left,
                    inst.concept(k),
                    op,
                    disjoint,
                    inst.split(),
                    Granularity::Aggregated,
                )?;
                self.stats.estimated += 1;
                let child = label.extended(op, k);
                let tier = if bounds.is_fully_exact() {
                    Tier::Exact
                } else {
                    Tier::Aggregated
                };
                let (dmin, dmax) = self.node_range(NodeKind::Final, &child, &bounds)?;
                best_min = best_min.max(dmin);
                children.push(SearchNode {
                    label: child.clone(),
                    kind: NodeKind::Final,
                    tier,
                    diou_min: dmin,
                    diou_max: dmax,
                    version: 0,
                    alive: true,
                    equivalences_done: false,
                });
                if self.has_extensions(&child) {
                    let (dmin, dmax) = self.node_range(NodeKind::Extend, &child, &bounds)?;
                    best_min = best_min.max(dmin);
                    children.push(SearchNode {
                        label: child,
                        kind: NodeKind::Extend,
                        tier: Tier::Aggregated,
                        diou_min: dmin,
                        diou_max: dmax,
                        version: 0,
                        alive: true,
                        equivalences_done: false,
                    });
                }
            }
        }
        self.raise_min(best_min);
        for c in children {
            self.insert(c);
        }
        Ok(())
    }

    /// Asserts the frontier invariant: no live node is below `min_iou`, and
    /// ties survive only while no label reaching `min_iou` is known.
    pub fn check_frontier(&self) -> bool {
        self.nodes
            .iter()
            .filter(|n| n.alive)
            .all(|n| self.keep(n.diou_max))
    }
}
