//! Left-deep logical labels over concepts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};
use crate::explanation::Explanation;
use crate::mask_store::{ConceptDataset, ConceptId, NeuronMask};
use crate::quantities::{ConceptQuantities, Spaces};
use crate::rational::Rational;

/// A 00-preserving binary connective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Or,
    And,
    AndNot,
}

impl Operator {
    pub const ALL: [Operator; 3] = [Operator::Or, Operator::And, Operator::AndNot];

    pub fn apply(self, left: &mut BitMatrix, right: &BitMatrix) {
        match self {
            Operator::Or => left.or_assign(right),
            Operator::And => left.and_assign(right),
            Operator::AndNot => left.and_not_assign(right),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Operator::Or => "OR",
            Operator::And => "AND",
            Operator::AndNot => "AND NOT",
        }
    }

    fn bit(self) -> u8 {
        1 << self as u8
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A non-empty subset of [`Operator::ALL`].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct OperatorSet(u8);

impl OperatorSet {
    pub const ALL: OperatorSet = OperatorSet(0b111);

    pub fn new(ops: impl IntoIterator<Item = Operator>) -> Result<Self> {
        let bits = ops.into_iter().fold(0, |acc, op| acc | op.bit());
        if bits == 0 {
            return Err(Error::InvalidConfig("operator set is empty".into()));
        }
        Ok(Self(bits))
    }

    pub fn contains(self, op: Operator) -> bool {
        self.0 & op.bit() != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Operator> {
        Operator::ALL
            .into_iter()
            .filter(move |&op| self.contains(op))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl Default for OperatorSet {
    fn default() -> Self {
        Self::ALL
    }
}

impl fmt::Debug for OperatorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for OperatorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self
            .iter()
            .map(|op| match op {
                Operator::Or => "or",
                Operator::And => "and",
                Operator::AndNot => "andnot",
            })
            .collect();
        f.write_str(&names.join(","))
    }
}

/// Parses a comma-separated list such as `or,and,andnot`.
impl FromStr for OperatorSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut ops = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            ops.push(match part.to_ascii_lowercase().as_str() {
                "or" => Operator::Or,
                "and" => Operator::And,
                "andnot" | "and-not" | "and_not" => Operator::AndNot,
                other => return Err(Error::InvalidConfig(format!("unknown operator `{other}`"))),
            });
        }
        OperatorSet::new(ops)
    }
}

impl Serialize for OperatorSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

pub type Tail = SmallVec<[(Operator, ConceptId); 3]>;

/// `head op1 c1 op2 c2 ...`, evaluated left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    head: ConceptId,
    tail: Tail,
}

impl Label {
    pub fn atom(head: ConceptId) -> Self {
        Self {
            head,
            tail: SmallVec::new(),
        }
    }

    /// Builds a label, rejecting repeated concepts.
    pub fn new(
        head: ConceptId,
        tail: impl IntoIterator<Item = (Operator, ConceptId)>,
    ) -> Result<Self> {
        let mut label = Self::atom(head);
        for (op, k) in tail {
            if label.contains(k) {
                return Err(Error::InvalidLabel(format!("concept {k} appears twice")));
            }
            label.tail.push((op, k));
        }
        Ok(label)
    }

    pub fn head(&self) -> ConceptId {
        self.head
    }

    pub fn tail(&self) -> &[(Operator, ConceptId)] {
        &self.tail
    }

    pub fn len(&self) -> usize {
        1 + self.tail.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn concepts(&self) -> impl Iterator<Item = ConceptId> + '_ {
        std::iter::once(self.head).chain(self.tail.iter().map(|&(_, k)| k))
    }

    pub fn contains(&self, k: ConceptId) -> bool {
        self.concepts().any(|c| c == k)
    }

    pub fn last_operator(&self) -> Option<Operator> {
        self.tail.last().map(|&(op, _)| op)
    }

    pub fn last_concept(&self) -> ConceptId {
        self.tail.last().map_or(self.head, |&(_, k)| k)
    }

    pub fn operators(&self) -> impl Iterator<Item = Operator> + '_ {
        self.tail.iter().map(|&(op, _)| op)
    }

    /// Appends without checking distinctness.
    pub fn extended(&self, op: Operator, k: ConceptId) -> Self {
        let mut tail = self.tail.clone();
        tail.push((op, k));
        Self {
            head: self.head,
            tail,
        }
    }

    /// The first `len` elements; `len` must be in `1..=self.len()`.
    pub fn prefix(&self, len: usize) -> Self {
        assert!((1..=self.len()).contains(&len));
        Self {
            head: self.head,
            tail: self.tail[..len - 1].iter().copied().collect(),
        }
    }

    /// The label minus its last element.
    pub fn parent(&self) -> Option<Self> {
        (self.len() > 1).then(|| self.prefix(self.len() - 1))
    }

    /// Sorted concept ids, used to compare concept sets.
    pub fn concept_set(&self) -> SmallVec<[ConceptId; 4]> {
        let mut set: SmallVec<[ConceptId; 4]> = self.concepts().collect();
        set.sort_unstable();
        set
    }

    pub fn validate(&self, dataset: &ConceptDataset) -> Result<()> {
        if let Some(bad) = self.concepts().find(|&k| k as usize >= dataset.len()) {
            return Err(Error::UnknownConcept(bad as usize));
        }
        let set = self.concept_set();
        if set.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidLabel("repeated concept".into()));
        }
        Ok(())
    }

    /// Fully parenthesised rendering, e.g. `((A AND NOT B) OR C)`.
    pub fn render(&self, dataset: &ConceptDataset) -> String {
        self.render_with(|k| dataset.name(k).to_string())
    }

    pub fn render_with(&self, mut name: impl FnMut(ConceptId) -> String) -> String {
        let mut out = name(self.head);
        for &(op, k) in &self.tail {
            out = format!("({out} {op} {})", name(k));
        }
        out
    }

    /// Parses the rendered form, resolving concept names against `dataset`.
    /// Splits are tried right to left so that concept names may themselves
    /// contain spaces or operator words.
    pub fn parse(text: &str, dataset: &ConceptDataset) -> Result<Self> {
        let label = parse_label(text.trim(), dataset)
            .ok_or_else(|| Error::InvalidLabel(format!("cannot parse `{text}`")))?;
        label.validate(dataset)?;
        Ok(label)
    }
}

fn parse_label(text: &str, dataset: &ConceptDataset) -> Option<Label> {
    if let Some(k) = dataset.id_of(text) {
        return Some(Label::atom(k));
    }
    let inner = text.strip_prefix('(')?.strip_suffix(')')?;
    const PATTERNS: [(&str, Operator); 3] = [
        (" AND NOT ", Operator::AndNot),
        (" AND ", Operator::And),
        (" OR ", Operator::Or),
    ];
    let bytes = inner.as_bytes();
    for pos in (0..bytes.len()).rev() {
        if bytes[pos] != b' ' {
            continue;
        }
        for (pat, op) in PATTERNS {
            if !inner[pos..].starts_with(pat) {
                continue;
            }
            let right = &inner[pos + pat.len()..];
            let Some(k) = dataset.id_of(right) else {
                continue;
            };
            if let Some(left) = parse_label(&inner[..pos], dataset) {
                return Some(left.extended(op, k));
            }
        }
    }
    None
}

/// Left fold of the label's masks.
pub fn evaluate_label(label: &Label, dataset: &ConceptDataset) -> Result<BitMatrix> {
    label.validate(dataset)?;
    let mut acc = dataset.mask(label.head).clone();
    for &(op, k) in label.tail() {
        op.apply(&mut acc, dataset.mask(k));
    }
    Ok(acc)
}

/// Bitwise IoU; two empty masks give `0/1`.
pub fn iou(label: &Label, neuron: &NeuronMask, dataset: &ConceptDataset) -> Result<Rational> {
    dataset.check_neuron(neuron)?;
    let mask = evaluate_label(label, dataset)?;
    Ok(mask_iou(&mask, neuron))
}

pub fn mask_iou(mask: &BitMatrix, neuron: &NeuronMask) -> Rational {
    Rational::new(mask.and_count(neuron.mask()), mask.or_count(neuron.mask()))
}

/// Exact quantities of every prefix of `label`, shortest first.
pub fn exact_label_quantities(
    label: &Label,
    dataset: &ConceptDataset,
    spaces: &Spaces,
) -> Result<Vec<ConceptQuantities>> {
    label.validate(dataset)?;
    let mut acc = dataset.mask(label.head).clone();
    let mut out = Vec::with_capacity(label.len());
    out.push(spaces.quantities_of(&acc));
    for &(op, k) in label.tail() {
        op.apply(&mut acc, dataset.mask(k));
        out.push(spaces.quantities_of(&acc));
    }
    Ok(out)
}

/// Sorts concept ids inside every maximal run of one repeated operator.
/// When the first run is OR or AND the head takes part in it, since
/// `a OR b == b OR a`; an AND NOT run never touches the head.
pub fn canonicalize(label: &Label) -> Label {
    let mut items: SmallVec<[(Option<Operator>, ConceptId); 4]> =
        std::iter::once((None, label.head))
            .chain(label.tail.iter().map(|&(op, k)| (Some(op), k)))
            .collect();
    let mut start = 1;
    while start < items.len() {
        let op = items[start].0;
        let mut end = start;
        while end < items.len() && items[end].0 == op {
            end += 1;
        }
        let from = if start == 1 && op != Some(Operator::AndNot) {
            0
        } else {
            start
        };
        let mut ids: SmallVec<[ConceptId; 4]> = items[from..end].iter().map(|&(_, k)| k).collect();
        ids.sort_unstable();
        for (slot, k) in items[from..end].iter_mut().zip(ids) {
            slot.1 = k;
        }
        start = end;
    }
    Label {
        head: items[0].1,
        tail: items[1..]
            .iter()
            .map(|&(op, k)| (op.expect("tail operator"), k))
            .collect(),
    }
}

/// Distinctness plus the ordering rule that keeps one representative per
/// commutative run: chaining the last operator again requires a larger id.
pub fn is_expansion_allowed(label: &Label, op: Operator, k: ConceptId) -> bool {
    if label.contains(k) {
        return false;
    }
    match label.last_operator() {
        Some(last) if last == op => k > label.last_concept(),
        _ => true,
    }
}

/// Left-deep labels with the same mask as `label`, obtained by reordering
/// inside OR runs and inside AND/AND NOT runs. The head may move inside
/// its run as long as a positive concept stays in front. At most `cap`
/// variants are returned, `label` itself excluded.
pub fn equivalent_variants(label: &Label, cap: usize) -> Vec<Label> {
    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Or,
        Conj,
    }
    let kind = |op: Operator| {
        if op == Operator::Or {
            Kind::Or
        } else {
            Kind::Conj
        }
    };
    let items: Vec<(Option<Operator>, ConceptId)> = std::iter::once((None, label.head))
        .chain(label.tail.iter().map(|&(op, k)| (Some(op), k)))
        .collect();
    // Runs as (from, to) ranges over `items`.
    let mut runs = Vec::new();
    let mut start = 1;
    while start < items.len() {
        let k0 = kind(items[start].0.expect("tail"));
        let mut end = start;
        while end < items.len() && kind(items[end].0.expect("tail")) == k0 {
            end += 1;
        }
        runs.push((if start == 1 { 0 } else { start }, end, k0));
        start = end;
    }
    let mut out: Vec<Vec<(Option<Operator>, ConceptId)>> = vec![items.clone()];
    for (from, to, run_kind) in runs {
        let mut next = Vec::new();
        for base in &out {
            for perm in permutations(&base[from..to]) {
                if from == 0 {
                    // The head carries no operator: it must be positive.
                    let head_ok = match run_kind {
                        Kind::Or => true,
                        Kind::Conj => perm[0].0 != Some(Operator::AndNot),
                    };
                    if !head_ok {
                        continue;
                    }
                }
                let mut v = base.clone();
                for (i, item) in perm.into_iter().enumerate() {
                    v[from + i] = item;
                }
                if from == 0 {
                    // Normalise operators: the new head drops its operator and
                    // the old head, now inside the run, takes the run's positive one.
                    let positive = match run_kind {
                        Kind::Or => Operator::Or,
                        Kind::Conj => Operator::And,
                    };
                    for slot in v[from..to].iter_mut() {
                        if slot.0.is_none() {
                            slot.0 = Some(positive);
                        }
                    }
                    v[0].0 = None;
                }
                next.push(v);
                if next.len() > cap * 4 {
                    break;
                }
            }
        }
        out = next;
    }
    let mut labels: Vec<Label> = out
        .into_iter()
        .map(|v| Label {
            head: v[0].1,
            tail: v[1..]
                .iter()
                .map(|&(op, k)| (op.expect("tail"), k))
                .collect(),
        })
        .filter(|l| l != label)
        .collect();
    labels.sort();
    labels.dedup();
    labels.truncate(cap);
    labels
}

fn permutations<T: Copy>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let first = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

/// How two explanations of the same unit differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Difference {
    Same,
    /// Different concepts and different IoU.
    Cat1,
    /// Same concepts, different structure and IoU.
    Cat2,
    /// Same IoU, different label.
    Cat3,
}

pub fn classify_difference(a: &Explanation, b: &Explanation) -> Difference {
    if canonicalize(&a.label) == canonicalize(&b.label) {
        Difference::Same
    } else if a.iou == b.iou {
        Difference::Cat3
    } else if a.label.concept_set() != b.label.concept_set() {
        Difference::Cat1
    } else {
        Difference::Cat2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantities::{compute_concept_quantities, compute_partition};
    use crate::testutil::{random_dataset, random_label, random_neuron, worked_example};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(m: &BitMatrix) -> Vec<u8> {
        (0..m.features()).map(|j| m.get(0, j) as u8).collect()
    }

    /// Per-location truth table oracle.
    fn oracle_mask(label: &Label, ds: &ConceptDataset) -> BitMatrix {
        let (s, d) = ds.shape();
        let mut out = BitMatrix::zeros(s, d);
        for x in 0..s {
            for j in 0..d {
                let mut v = ds.mask(label.head()).get(x, j);
                for &(op, k) in label.tail() {
                    let r = ds.mask(k).get(x, j);
                    v = match op {
                        Operator::Or => v || r,
                        Operator::And => v && r,
                        Operator::AndNot => v && !r,
                    };
                }
                out.set(x, j, v);
            }
        }
        out
    }

    #[test]
    fn worked_example_evaluation() {
        let (ds, n) = worked_example();
        let or = Label::new(0, [(Operator::Or, 1)]).unwrap();
        assert_eq!(bits(&evaluate_label(&or, &ds).unwrap()), [1, 1, 0, 1, 1, 1]);
        let and = Label::new(0, [(Operator::And, 2)]).unwrap();
        assert_eq!(
            bits(&evaluate_label(&and, &ds).unwrap()),
            [1, 0, 0, 0, 1, 1]
        );
        for k in ds.concept_ids() {
            assert_eq!(evaluate_label(&Label::atom(k), &ds).unwrap(), *ds.mask(k));
        }
        let c2 = iou(&Label::atom(1), &n, &ds).unwrap();
        assert_eq!((c2.num(), c2.den()), (2, 4));
        let v = iou(&or, &n, &ds).unwrap();
        assert_eq!((v.num(), v.den()), (2, 6));
    }

    #[test]
    fn identical_mask_has_unit_iou() {
        let (ds, _) = worked_example();
        let n = NeuronMask::new(ds.mask(2).clone());
        assert_eq!(iou(&Label::atom(2), &n, &ds).unwrap(), Rational::ONE);
        let empty = ConceptDataset::new(vec!["z".into()], vec![BitMatrix::zeros(1, 6)]).unwrap();
        let zero = NeuronMask::new(BitMatrix::zeros(1, 6));
        let v = iou(&Label::atom(0), &zero, &empty).unwrap();
        assert_eq!((v.num(), v.den()), (0, 1));
    }

    #[test]
    fn unknown_concepts_rejected() {
        let (ds, _) = worked_example();
        assert!(evaluate_label(&Label::atom(7), &ds).is_err());
        assert!(Label::new(0, [(Operator::Or, 0)]).is_err());
    }

    #[test]
    fn render_and_parse_round_trip() {
        let names = ["table", "sink", "white-c", "AND NOT x", "a b"];
        let ds = ConceptDataset::new(
            names.iter().map(|s| s.to_string()).collect(),
            vec![BitMatrix::zeros(1, 4); names.len()],
        )
        .unwrap();
        let label = Label::new(
            0,
            [(Operator::Or, 1), (Operator::AndNot, 2), (Operator::And, 3)],
        )
        .unwrap();
        let text = label.render(&ds);
        assert_eq!(text, "(((table OR sink) AND NOT white-c) AND AND NOT x)");
        assert_eq!(Label::parse(&text, &ds).unwrap(), label);
        let tricky = Label::new(4, [(Operator::AndNot, 3)]).unwrap();
        assert_eq!(Label::parse(&tricky.render(&ds), &ds).unwrap(), tricky);
        assert!(Label::parse("(table XOR sink)", &ds).is_err());
        assert!(Label::parse("(table OR table)", &ds).is_err());
        assert!(Label::parse("", &ds).is_err());
    }

    #[test]
    fn prefix_quantities_worked_example() {
        let (ds, n) = worked_example();
        let p = compute_partition(&ds);
        let spaces = Spaces::new(&n, &p).unwrap();
        let single = exact_label_quantities(&Label::atom(1), &ds, &spaces).unwrap();
        assert_eq!(
            single,
            [compute_concept_quantities(1, &n, &p, &ds).unwrap()]
        );
        let or = Label::new(0, [(Operator::Or, 1)]).unwrap();
        let q = exact_label_quantities(&or, &ds, &spaces).unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(
            [q[1].iu[0], q[1].ic[0], q[1].eu[0], q[1].ec[0]],
            [0, 2, 1, 2]
        );
        assert_eq!(q[1].diou(3), Rational::new(2, 6));
    }

    #[test]
    fn decomposition_matches_bitwise_iou() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..10 {
            let ds = random_dataset(seed, 6, 3, 40, 0.5);
            let n = random_neuron(seed + 50, 3, 40, 0.3);
            let p = compute_partition(&ds);
            let spaces = Spaces::new(&n, &p).unwrap();
            let n_total = n.mask().count_ones();
            for _ in 0..50 {
                let label = random_label(&mut rng, ds.len(), 4);
                let qs = exact_label_quantities(&label, &ds, &spaces).unwrap();
                for (len, q) in (1..=label.len()).zip(&qs) {
                    let expected = iou(&label.prefix(len), &n, &ds).unwrap();
                    assert_eq!(q.diou(n_total), expected);
                }
            }
        }
    }

    #[test]
    fn canonicalize_examples() {
        let l = Label::new(3, [(Operator::Or, 15), (Operator::Or, 7)]).unwrap();
        assert_eq!(
            canonicalize(&l),
            Label::new(3, [(Operator::Or, 7), (Operator::Or, 15)]).unwrap()
        );
        let l = Label::new(3, [(Operator::And, 5), (Operator::Or, 2)]).unwrap();
        assert_eq!(canonicalize(&l), l);
        let l = Label::new(9, [(Operator::Or, 2)]).unwrap();
        assert_eq!(
            canonicalize(&l),
            Label::new(2, [(Operator::Or, 9)]).unwrap()
        );
        let l = Label::new(9, [(Operator::AndNot, 4), (Operator::AndNot, 2)]).unwrap();
        assert_eq!(
            canonicalize(&l),
            Label::new(9, [(Operator::AndNot, 2), (Operator::AndNot, 4)]).unwrap()
        );
    }

    #[test]
    fn expansion_rule() {
        let l = Label::new(3, [(Operator::Or, 15)]).unwrap();
        assert!(!is_expansion_allowed(&l, Operator::Or, 7));
        assert!(is_expansion_allowed(&l, Operator::Or, 16));
        assert!(is_expansion_allowed(&l, Operator::And, 7));
        assert!(!is_expansion_allowed(&l, Operator::And, 3));
        assert!(is_expansion_allowed(&Label::atom(5), Operator::Or, 1));
    }

    #[test]
    fn variants_preserve_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ds = random_dataset(3, 7, 2, 50, 0.5);
        let mut saw_variant = false;
        for _ in 0..300 {
            let label = random_label(&mut rng, ds.len(), 4);
            let mask = evaluate_label(&label, &ds).unwrap();
            for v in equivalent_variants(&label, 24) {
                saw_variant = true;
                assert_ne!(v, label);
                assert_eq!(v.concept_set(), label.concept_set());
                assert_eq!(evaluate_label(&v, &ds).unwrap(), mask, "{label:?} vs {v:?}");
            }
        }
        assert!(saw_variant);
        let l = Label::new(0, [(Operator::And, 1), (Operator::AndNot, 2)]).unwrap();
        let vs = equivalent_variants(&l, 24);
        assert!(vs.contains(&Label::new(0, [(Operator::AndNot, 2), (Operator::And, 1)]).unwrap()));
        assert!(vs.contains(&Label::new(1, [(Operator::And, 0), (Operator::AndNot, 2)]).unwrap()));
        assert!(vs.iter().all(|v| v.head() != 2));
    }

    fn explanation(label: Label, num: u64, den: u64) -> Explanation {
        Explanation::new(label, Rational::new(num, den))
    }

    #[test]
    fn difference_categories() {
        // table=0, sink=1, white=2
        let a = Label::new(0, [(Operator::Or, 1), (Operator::And, 2)]).unwrap();
        let b = Label::new(2, [(Operator::And, 0), (Operator::Or, 1)]).unwrap();
        assert_eq!(
            classify_difference(
                &explanation(a.clone(), 36, 1000),
                &explanation(a.clone(), 36, 1000)
            ),
            Difference::Same
        );
        assert_eq!(
            classify_difference(
                &explanation(a.clone(), 36, 1000),
                &explanation(b.clone(), 40, 1000)
            ),
            Difference::Cat2
        );
        assert_eq!(
            classify_difference(&explanation(a.clone(), 36, 1000), &explanation(b, 36, 1000)),
            Difference::Cat3
        );
        let c = Label::new(0, [(Operator::Or, 3)]).unwrap();
        assert_eq!(
            classify_difference(&explanation(a, 36, 1000), &explanation(c, 1, 2)),
            Difference::Cat1
        );
        let d = Label::new(1, [(Operator::Or, 0)]).unwrap();
        let e = Label::new(0, [(Operator::Or, 1)]).unwrap();
        assert_eq!(
            classify_difference(&explanation(d, 1, 3), &explanation(e, 1, 3)),
            Difference::Same
        );
    }

    proptest! {
        #[test]
        fn evaluation_matches_truth_table(seed in 0u64..1000, lseed in 0u64..1000) {
            let ds = random_dataset(seed, 5, 2, 20, 0.5);
            let mut rng = ChaCha8Rng::seed_from_u64(lseed);
            let label = random_label(&mut rng, ds.len(), 4);
            prop_assert_eq!(evaluate_label(&label, &ds).unwrap(), oracle_mask(&label, &ds));
        }

        #[test]
        fn canonicalize_is_idempotent_and_sound(seed in 0u64..1000, lseed in 0u64..1000) {
            let ds = random_dataset(seed, 6, 2, 24, 0.5);
            let mut rng = ChaCha8Rng::seed_from_u64(lseed);
            let label = random_label(&mut rng, ds.len(), 5);
            let c = canonicalize(&label);
            prop_assert_eq!(canonicalize(&c), c.clone());
            prop_assert_eq!(evaluate_label(&c, &ds).unwrap(), evaluate_label(&label, &ds).unwrap());
            prop_assert_eq!(c.concept_set(), label.concept_set());
        }
    }
}
