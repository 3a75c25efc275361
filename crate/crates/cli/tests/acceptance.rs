//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! fails the test target if any of them fails.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use concept_align_cli::commands::stats_dump;
use concept_align_core::fixtures::worked_example;
use concept_align_core::heuristic::{estimate_label_bounds, estimate_path_bounds, PathBounds};
use concept_align_core::mask_store::{
    generate_synthetic, write_concept_archive, write_neuron_mask,
};
use concept_align_core::quantities::Quantity;
use concept_align_core::search::{
    beam_search_heuristic, beam_search_vanilla, brute_force, optimal_search,
};
use concept_align_core::{
    BeamConfig, BitMatrix, ConceptDataset, ConceptId, Granularity, Instance, Label, NeuronMask,
    Operator, OperatorSet, PathKind, QuantityBounds, Rational, SearchConfig, SynthConfig,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_concept-align");
const OVERLAPS: [f64; 3] = [0.0, 0.3, 0.7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn synth(seed: u64, k: usize, s: usize, d: usize, overlap: f64) -> (ConceptDataset, NeuronMask) {
    generate_synthetic(&SynthConfig {
        seed,
        concepts: k,
        samples: s,
        features: d,
        annotation_density: 0.5,
        overlap_density: overlap,
        neuron_fire_rate: 0.1,
    })
    .expect("valid synthetic config")
}

fn cli(args: &[&str]) -> (i32, Vec<u8>, String) {
    let out = Command::new(BIN).args(args).output().expect("spawn binary");
    (
        out.status.code().unwrap_or(-1),
        out.stdout,
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

// Independent oracles. They work location by location on plain booleans.

fn oracle_mask(label: &Label, ds: &ConceptDataset) -> Vec<Vec<bool>> {
    let (s, d) = ds.shape();
    let m = |k: ConceptId| -> Vec<Vec<bool>> {
        (0..s)
            .map(|x| (0..d).map(|j| ds.mask(k).get(x, j)).collect())
            .collect()
    };
    let mut acc = m(label.head());
    for &(op, k) in label.tail() {
        let r = m(k);
        for x in 0..s {
            for j in 0..d {
                let (a, b) = (acc[x][j], r[x][j]);
                acc[x][j] = match op {
                    Operator::Or => a || b,
                    Operator::And => a && b,
                    Operator::AndNot => a && !b,
                };
            }
        }
    }
    acc
}

fn oracle_iou(mask: &[Vec<bool>], neuron: &NeuronMask) -> Rational {
    let (mut inter, mut union) = (0u64, 0u64);
    for (x, row) in mask.iter().enumerate() {
        for (j, &l) in row.iter().enumerate() {
            let n = neuron.mask().get(x, j);
            inter += u64::from(l && n);
            union += u64::from(l || n);
        }
    }
    Rational::new(inter, union)
}

fn oracle_common(ds: &ConceptDataset) -> Vec<Vec<bool>> {
    let (s, d) = ds.shape();
    (0..s)
        .map(|x| {
            (0..d)
                .map(|j| ds.concept_ids().filter(|&k| ds.mask(k).get(x, j)).count() >= 2)
                .collect()
        })
        .collect()
}

/// Per-sample [iu, ic, eu, ec] of a label mask, indexed like `Quantity`.
fn oracle_quantities(
    mask: &[Vec<bool>],
    neuron: &NeuronMask,
    common: &[Vec<bool>],
) -> Vec<[u64; 4]> {
    mask.iter()
        .enumerate()
        .map(|(x, row)| {
            let mut q = [0u64; 4];
            for (j, &l) in row.iter().enumerate() {
                if !l {
                    continue;
                }
                let n = neuron.mask().get(x, j);
                let c = common[x][j];
                let slot = match (n, c) {
                    (true, true) => Quantity::Ic,
                    (true, false) => Quantity::Iu,
                    (false, true) => Quantity::Ec,
                    (false, false) => Quantity::Eu,
                };
                q[slot as usize] += 1;
            }
            q
        })
        .collect()
}

fn random_label(rng: &mut impl Rng, k: usize, len: usize) -> Label {
    let mut ids: Vec<ConceptId> = (0..k as ConceptId).collect();
    let mut picked = Vec::with_capacity(len);
    for _ in 0..len {
        let i = rng.random_range(0..ids.len());
        picked.push(ids.swap_remove(i));
    }
    let tail = picked[1..]
        .iter()
        .map(|&c| (*Operator::ALL.choose(rng).unwrap(), c));
    Label::new(picked[0], tail).unwrap()
}

// Criteria.

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (ds, neuron) = worked_example();
    let ds_path = dir.path().join("worked.cma");
    let n_path = dir.path().join("worked.nam");
    write_concept_archive(&ds, &ds_path).unwrap();
    write_neuron_mask(&neuron, &n_path).unwrap();

    let (code, stdout, stderr) = cli(&[
        "stats",
        "--dataset",
        path_str(&ds_path),
        "--neuron",
        path_str(&n_path),
    ]);
    if code != 0 {
        return outcome(false, format!("stats exited {code}: {stderr}"));
    }
    let v: Value = serde_json::from_slice(&stdout).unwrap();
    let expected = [
        ("c1", Rational::new(2, 5)),
        ("c2", Rational::new(2, 4)),
        ("c3", Rational::new(2, 5)),
    ];
    let mut got = Vec::new();
    for (c, (name, want)) in v["concepts"].as_array().unwrap().iter().zip(expected) {
        let r = Rational::new(
            c["diou"]["num"].as_u64().unwrap(),
            c["diou"]["den"].as_u64().unwrap(),
        );
        if c["name"] != name || r != want {
            return outcome(false, format!("{name}: got {r}, expected {want}"));
        }
        got.push(format!("{name}={r}"));
    }

    let start = Instant::now();
    let dump = stats_dump("worked".into(), &ds, &neuron).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(dump.concepts.len(), 3);
    outcome(
        elapsed < Duration::from_millis(1),
        format!(
            "{} in {:.1} us",
            got.join(", "),
            elapsed.as_secs_f64() * 1e6
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut checked, mut failures) = (0, 0);
    for seed in 0..20u64 {
        let overlap = OVERLAPS[seed as usize % 3];
        let (ds, neuron) = synth(1000 + seed, 8, 8, 32, overlap);
        let inst = Instance::new(&ds, &neuron, 3).unwrap();
        for _ in 0..50 {
            let len = rng.random_range(1..=3);
            let label = random_label(&mut rng, ds.len(), len);
            let q = inst.exact_quantities(&label).unwrap();
            let diou = q.last().unwrap().diou(inst.n_total());
            let iou = oracle_iou(&oracle_mask(&label, &ds), &neuron);
            checked += 1;
            if diou != iou {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && checked == 1000 && elapsed < Duration::from_secs(10),
        format!(
            "{checked} labels, {failures} mismatches, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut agree = 0;
    let mut first_bad = None;
    for seed in 0..100u64 {
        let (ds, neuron) = synth(seed, 8, 16, 64, OVERLAPS[seed as usize % 3]);
        let inst = Instance::new(&ds, &neuron, 3).unwrap();
        let opt = optimal_search(&inst, &SearchConfig::new(3, OperatorSet::ALL)).unwrap();
        let brute = brute_force(&inst, 3, OperatorSet::ALL, u128::MAX, 0).unwrap();
        if opt.iou == brute.best.iou && opt.optimal {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!(
                "seed {seed}: optimal {} vs brute {}",
                opt.iou, brute.best.iou
            ));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        agree == 100 && elapsed < Duration::from_secs(300),
        format!(
            "{agree}/100 equal, {:.2} s{}",
            elapsed.as_secs_f64(),
            first_bad.map(|s| format!(", {s}")).unwrap_or_default()
        ),
    )
}

/// IoU of a label, best IoU over the label and all its extensions, and best
/// IoU over extensions that only append one given operator.
struct Reach {
    iou: Rational,
    all: Rational,
    extensions: Rational,
    pure: [Rational; 3],
}

fn enumerate_reach(
    inst: &Instance<'_>,
    label: Label,
    mask: BitMatrix,
    n: usize,
    out: &mut HashMap<Label, Reach>,
) -> (Rational, [Rational; 3]) {
    let neuron = inst.neuron().mask();
    let iou = Rational::new(mask.and_count(neuron), mask.or_count(neuron));
    let mut all = iou;
    let mut extensions = Rational::ZERO;
    let mut pure = [Rational::ZERO; 3];
    if label.len() < n {
        for op in Operator::ALL {
            for k in inst.dataset().concept_ids() {
                if label.contains(k) {
                    continue;
                }
                let mut child = mask.clone();
                op.apply(&mut child, inst.dataset().mask(k));
                let child_label = label.extended(op, k);
                let (c_all, c_pure) = enumerate_reach(inst, child_label.clone(), child, n, out);
                let c_iou = out[&child_label].iou;
                all = all.max(c_all);
                extensions = extensions.max(c_all);
                pure[op as usize] = pure[op as usize].max(c_iou.max(c_pure[op as usize]));
            }
        }
    }
    out.insert(
        label,
        Reach {
            iou,
            all,
            extensions,
            pure,
        },
    );
    (all, pure)
}

fn criterion_4() -> Outcome {
    let n = 3;
    let (mut checked, mut violations, mut degenerate_skipped) = (0u64, Vec::new(), 0u64);
    for seed in 0..50u64 {
        let (ds, neuron) = synth(4000 + seed, 6, 8, 32, OVERLAPS[seed as usize % 3]);
        let inst = Instance::new(&ds, &neuron, n).unwrap();
        let mut reach = HashMap::new();
        for k in ds.concept_ids() {
            enumerate_reach(&inst, Label::atom(k), ds.mask(k).clone(), n, &mut reach);
        }
        for (label, r) in &reach {
            let exact = inst.exact_quantities(label).unwrap();
            for g in [Granularity::Sample, Granularity::Aggregated] {
                let folded = inst.label_bounds(label, g).unwrap();
                let exact_bounds = QuantityBounds::exact(exact.last().unwrap(), g);
                for (which, bounds) in [("folded", &folded), ("exact", &exact_bounds)] {
                    if bounds.is_degenerate() {
                        // Never a search node: the search drops degenerate children.
                        degenerate_skipped += 1;
                        continue;
                    }
                    let t = n - label.len();
                    let paths = estimate_path_bounds(
                        bounds,
                        inst.topbott(),
                        inst.split(),
                        t,
                        OperatorSet::ALL,
                    )
                    .unwrap();
                    checked += 1;
                    if let Some(v) = admissibility_violation(&paths, r) {
                        violations.push(format!(
                            "seed {seed} {} {g:?} {which}: {v}",
                            label.render(&ds)
                        ));
                    }
                }
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{checked} (label, tier, bounds) cases, {} violations, {degenerate_skipped} degenerate skipped{}",
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    )
}

fn admissibility_violation(paths: &[PathBounds], r: &Reach) -> Option<String> {
    let brackets = |p: &PathBounds, value: Rational| p.diou_min <= value && value <= p.diou_max;
    // FINAL and the combined extension path together bound the best reachable IoU.
    let label_paths: Vec<&PathBounds> = paths
        .iter()
        .filter(|p| matches!(p.kind, PathKind::Final | PathKind::Combined(_)))
        .collect();
    let lo = label_paths.iter().map(|p| p.diou_min).max().unwrap();
    let hi = label_paths.iter().map(|p| p.diou_max).max().unwrap();
    if !(lo <= r.all && r.all <= hi) {
        return Some(format!("reach {} outside [{lo}, {hi}]", r.all));
    }
    for p in paths {
        let target = match p.kind {
            PathKind::Final => r.iou,
            PathKind::Exclusive(op) => r.pure[op as usize],
            PathKind::Combined(_) => r.extensions,
        };
        if !brackets(p, target) {
            return Some(format!(
                "{:?} path [{}, {}] misses {target}",
                p.kind, p.diou_min, p.diou_max
            ));
        }
    }
    None
}

struct Triple {
    seed: u64,
    ds: ConceptDataset,
    neuron: NeuronMask,
    label: Label,
    op: Operator,
    k: ConceptId,
}

fn triples() -> Vec<Triple> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut out = Vec::with_capacity(500);
    for seed in 0..50u64 {
        let (ds, neuron) = synth(5000 + seed, 7, 8, 32, OVERLAPS[seed as usize % 3]);
        for _ in 0..10 {
            let len = rng.random_range(1..=3);
            let full = random_label(&mut rng, ds.len(), len + 1);
            let (op, k) = *full.tail().last().unwrap();
            out.push(Triple {
                seed,
                ds: ds.clone(),
                neuron: neuron.clone(),
                label: full.prefix(len),
                op,
                k,
            });
        }
    }
    out
}

fn criterion_5(triples: &[Triple]) -> Outcome {
    let (mut checked, mut disjoint_exact, mut violations) = (0, 0, Vec::<String>::new());
    for tr in triples {
        let inst = Instance::new(&tr.ds, &tr.neuron, 4).unwrap();
        let common = oracle_common(&tr.ds);
        let full = tr.label.extended(tr.op, tr.k);
        let truth = oracle_quantities(&oracle_mask(&full, &tr.ds), &tr.neuron, &common);
        let disjoint = inst.is_disjoint(&tr.label, tr.k);
        let exact_left = QuantityBounds::exact(
            inst.exact_quantities(&tr.label).unwrap().last().unwrap(),
            Granularity::Sample,
        );
        let folded_left = inst.label_bounds(&tr.label, Granularity::Sample).unwrap();
        for (which, left) in [("exact", &exact_left), ("folded", &folded_left)] {
            let b = estimate_label_bounds(
                left,
                inst.concept(tr.k),
                tr.op,
                disjoint,
                inst.split(),
                Granularity::Sample,
            )
            .unwrap();
            checked += 1;
            let mut bad = None;
            for (x, t) in truth.iter().enumerate() {
                let (lo, hi) = (b.min(x), b.max(x));
                for q in [Quantity::Ic, Quantity::Ec, Quantity::Iu, Quantity::Eu] {
                    let i = q as usize;
                    if !(lo[i] <= t[i] && t[i] <= hi[i]) {
                        bad = Some(format!(
                            "{q:?} sample {x}: {} not in [{}, {}]",
                            t[i], lo[i], hi[i]
                        ));
                    }
                    if which == "exact" && disjoint && (lo[i] != t[i] || hi[i] != t[i]) {
                        bad = Some(format!(
                            "disjoint but {q:?} sample {x} is [{}, {}], true {}",
                            lo[i], hi[i], t[i]
                        ));
                    }
                }
            }
            if which == "exact" && disjoint && bad.is_none() {
                disjoint_exact += 1;
            }
            if let Some(v) = bad {
                violations.push(format!(
                    "seed {} {} {} c{} ({which}): {v}",
                    tr.seed,
                    tr.label.render(&tr.ds),
                    tr.op,
                    tr.k
                ));
            }
        }
    }
    outcome(
        violations.is_empty() && triples.len() == 500,
        format!(
            "{} triples, {checked} estimates, {disjoint_exact} disjoint cases exact, {} violations{}",
            triples.len(),
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    )
}

fn criterion_6(triples: &[Triple]) -> Outcome {
    let (mut checked, mut violations) = (0, Vec::<String>::new());
    for tr in triples {
        let inst = Instance::new(&tr.ds, &tr.neuron, 4).unwrap();
        let disjoint = inst.is_disjoint(&tr.label, tr.k);
        let exact = inst.exact_quantities(&tr.label).unwrap();
        let exact = exact.last().unwrap();
        let estimate = |g: Granularity, folded: bool| {
            let left = if folded {
                inst.label_bounds(&tr.label, g).unwrap()
            } else {
                QuantityBounds::exact(exact, g)
            };
            estimate_label_bounds(&left, inst.concept(tr.k), tr.op, disjoint, inst.split(), g)
                .unwrap()
        };
        for folded in [false, true] {
            let s = estimate(Granularity::Sample, folded);
            let a = estimate(Granularity::Aggregated, folded);
            let n = inst.n_total();
            checked += 1;
            if a.diou_max(n) < s.diou_max(n) || a.diou_min(n) > s.diou_min(n) {
                violations.push(format!(
                    "seed {} {} {} c{}: aggregated [{}, {}] sample [{}, {}]",
                    tr.seed,
                    tr.label.render(&tr.ds),
                    tr.op,
                    tr.k,
                    a.diou_min(n),
                    a.diou_max(n),
                    s.diou_min(n),
                    s.diou_max(n)
                ));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{checked} comparisons, {} violations{}",
            violations.len(),
            violations
                .first()
                .map(|v| format!(", first: {v}"))
                .unwrap_or_default()
        ),
    )
}

fn criterion_7() -> Outcome {
    let (mut runs, mut failures) = (0, Vec::<String>::new());
    let (mut visited_h, mut visited_v) = (0u64, 0u64);
    for seed in 0..50u64 {
        let (ds, neuron) = synth(7000 + seed, 8, 16, 64, OVERLAPS[seed as usize % 3]);
        let inst = Instance::new(&ds, &neuron, 3).unwrap();
        for b in [1, 5, 10] {
            for n in [2, 3] {
                let cfg = BeamConfig::new(b, n, OperatorSet::ALL).unwrap();
                let h = beam_search_heuristic(&inst, &cfg).unwrap();
                let v = beam_search_vanilla(&inst, &cfg).unwrap();
                runs += 1;
                visited_h += h.stats.visited;
                visited_v += v.stats.visited;
                if h.iou != v.iou || h.stats.visited > v.stats.visited {
                    failures.push(format!(
                        "seed {seed} b={b} n={n}: heuristic {} ({} visited) vanilla {} ({} visited)",
                        h.iou, h.stats.visited, v.iou, v.stats.visited
                    ));
                }
            }
        }
    }
    outcome(
        failures.is_empty() && runs == 300,
        format!(
            "{runs} runs, {} failures, visited heuristic {visited_h} vs vanilla {visited_v}{}",
            failures.len(),
            failures
                .first()
                .map(|v| format!(", first: {v}"))
                .unwrap_or_default()
        ),
    )
}

fn criterion_8() -> Outcome {
    let (mut below, mut above) = (0, 0);
    let cfg = BeamConfig::new(5, 3, OperatorSet::ALL).unwrap();
    for seed in 0..100u64 {
        let (ds, neuron) = synth(8000 + seed, 8, 16, 64, 0.7);
        let inst = Instance::new(&ds, &neuron, 3).unwrap();
        let beam = beam_search_heuristic(&inst, &cfg).unwrap();
        let opt = optimal_search(&inst, &SearchConfig::new(3, OperatorSet::ALL)).unwrap();
        if beam.iou < opt.iou {
            below += 1;
        } else if beam.iou > opt.iou {
            above += 1;
        }
    }
    outcome(
        below >= 1 && above == 0,
        format!("beam below optimal on {below}/100 instances, above on {above}"),
    )
}

fn criterion_9() -> Outcome {
    let (ds, neuron) = synth(0, 64, 128, 1024, 0.3);
    let inst = Instance::new(&ds, &neuron, 3).unwrap();
    let start = Instant::now();
    let e = optimal_search(&inst, &SearchConfig::new(3, OperatorSet::ALL)).unwrap();
    let elapsed = start.elapsed();
    let s = e.stats;
    let ordered = s.estimated >= 2 * s.expanded && s.expanded >= 2 * s.visited && s.visited > 0;
    outcome(
        elapsed < Duration::from_secs(120) && ordered && e.optimal,
        format!(
            "{:.2} s, visited {} expanded {} estimated {}, best {} = {}",
            elapsed.as_secs_f64(),
            s.visited,
            s.expanded,
            s.estimated,
            e.render(&ds),
            e.iou.to_decimal_string(6)
        ),
    )
}

fn strip_elapsed(bytes: &[u8]) -> Value {
    let mut v: Value = serde_json::from_slice(bytes).unwrap();
    if let Some(stats) = v.get_mut("stats").and_then(Value::as_object_mut) {
        stats.remove("elapsed_ms");
    }
    v
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = path_str(dir.path());
    let (code, _, err) = cli(&[
        "gen",
        "--out-dir",
        out_dir,
        "--seed",
        "10",
        "--overlap-density",
        "0.7",
        "--units",
        "2",
    ]);
    if code != 0 {
        return outcome(false, format!("gen exited {code}: {err}"));
    }
    let ds = dir.path().join("dataset.cma");
    let unit = dir.path().join("unit_0001.nam");
    let mut compared = 0;
    for alg in ["optimal", "beam", "beam-vanilla", "brute"] {
        let base = [
            "explain",
            "--dataset",
            path_str(&ds),
            "--neuron",
            path_str(&unit),
            "--algorithm",
            alg,
            "--max-length",
            "3",
        ];
        let seedless: Vec<&str> = base.iter().copied().chain(["--seedless-output"]).collect();
        let (c1, first, _) = cli(&seedless);
        let (c2, second, _) = cli(&seedless);
        if c1 != 0 || c2 != 0 || first != second {
            return outcome(
                false,
                format!("{alg}: seedless reports differ (exit {c1}, {c2})"),
            );
        }
        let (_, a, _) = cli(&base);
        let (_, b, _) = cli(&base);
        let reference = strip_elapsed(&first);
        if strip_elapsed(&a) != strip_elapsed(&b) || strip_elapsed(&a) != reference {
            return outcome(
                false,
                format!("{alg}: timed reports differ beyond elapsed_ms"),
            );
        }
        compared += 1;
    }
    outcome(
        true,
        format!("{compared} algorithms, byte-identical seedless reports"),
    )
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let triples = triples();
    let criteria: Vec<(&str, Check<'_>)> = vec![
        ("worked-example dIoU", Box::new(criterion_1)),
        ("decomposed IoU equals bitwise IoU", Box::new(criterion_2)),
        ("optimal search matches brute force", Box::new(criterion_3)),
        ("path bounds are admissible", Box::new(criterion_4)),
        (
            "label bounds bracket the truth",
            Box::new(|| criterion_5(&triples)),
        ),
        (
            "aggregated bounds envelope sample bounds",
            Box::new(|| criterion_6(&triples)),
        ),
        ("heuristic beam equals vanilla beam", Box::new(criterion_7)),
        ("beam search is sometimes suboptimal", Box::new(criterion_8)),
        ("desk-scale performance", Box::new(criterion_9)),
        ("deterministic CLI reports", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
