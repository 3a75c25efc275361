use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant as Clock;

use concept_align_core::fixtures::worked_example;
use concept_align_core::mask_store::{
    binarize_activations, decode_activations, decode_neuron_mask, generate_dataset,
    generate_neuron, load_concept_archive_with, sniff, write_concept_archive, write_neuron_mask,
    FileKind, LoadOptions,
};
use concept_align_core::quantities::{compute_disjoint_matrix, compute_partition, Spaces};
use concept_align_core::search::{
    beam_search_heuristic, beam_search_vanilla, brute_force, optimal_search, BeamConfig,
    SearchConfig,
};
use concept_align_core::{
    classify_difference, ConceptDataset, Difference, Error as CoreError, Explanation, Instance,
    NeuronMask, NeuronSplit, SynthConfig,
};
use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    Algorithm, BenchArgs, CompareArgs, DatasetArgs, ExplainArgs, GenArgs, SearchArgs, StatsArgs,
};
use crate::error::{exit, CliError, Result};
use crate::report::{
    millis, BenchReport, BenchRow, CompareReport, CompareRow, CompareSummary, ConceptStats,
    ConfigEcho, LabelScore, MeanStd, NeuronStats, RunReport, StatsDump, StatsReport,
};

pub fn load_dataset(args: &DatasetArgs) -> Result<ConceptDataset> {
    let opts = LoadOptions {
        allow_empty_concepts: args.allow_empty_concepts,
    };
    let ds =
        load_concept_archive_with(&args.dataset, opts).map_err(|e| with_path(e, &args.dataset))?;
    info!("loaded {} concepts of shape {:?}", ds.len(), ds.shape());
    Ok(ds)
}

/// A neuron file is read as a mask or binarised from raw activations,
/// depending on its magic bytes. Returns the mask and whether binarisation
/// happened.
pub fn load_neuron(path: &Path, quantile: f64) -> Result<(NeuronMask, bool)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    match sniff(&bytes) {
        Some(FileKind::NeuronMask) => Ok((
            decode_neuron_mask(&bytes).map_err(|e| with_path(e, path))?,
            false,
        )),
        Some(FileKind::Activations) => {
            let raw = decode_activations(&bytes).map_err(|e| with_path(e, path))?;
            Ok((binarize_activations(&raw, quantile)?, true))
        }
        _ => Err(CoreError::Format {
            offset: 0,
            message: format!(
                "{} is neither a neuron mask nor an activation file",
                path.display()
            ),
        }
        .into()),
    }
}

fn with_path(e: CoreError, path: &Path) -> CliError {
    match e {
        CoreError::Format { offset, message } => CoreError::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        }
        .into(),
        other => other.into(),
    }
}

pub fn unit_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Neuron files of a directory, sorted by file name.
pub fn list_units(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    let mut units = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::io(dir.display().to_string(), e))?
            .path();
        let ext = path.extension().map(|e| e.to_ascii_lowercase());
        if path.is_file() && matches!(ext.as_deref().and_then(|e| e.to_str()), Some("nam" | "naf"))
        {
            units.push(path);
        }
    }
    units.sort();
    if units.is_empty() {
        return Err(CliError::Usage(format!(
            "no .nam or .naf files in {}",
            dir.display()
        )));
    }
    Ok(units)
}

pub fn search_config(s: &SearchArgs) -> SearchConfig {
    let mut cfg = SearchConfig::new(s.max_length, s.operators);
    cfg.backprop = !s.no_backprop;
    cfg.equivalences = !s.no_equivalences;
    cfg.budget_nodes = s.budget_nodes;
    cfg.budget_seconds = s.budget_seconds;
    cfg
}

pub fn run_algorithm(inst: &Instance<'_>, alg: Algorithm, s: &SearchArgs) -> Result<Explanation> {
    let out = match alg {
        Algorithm::Optimal => optimal_search(inst, &search_config(s))?,
        Algorithm::Beam => beam_search_heuristic(
            inst,
            &BeamConfig::new(s.beam_size, s.max_length, s.operators)?,
        )?,
        Algorithm::BeamVanilla => beam_search_vanilla(
            inst,
            &BeamConfig::new(s.beam_size, s.max_length, s.operators)?,
        )?,
        Algorithm::Brute => {
            brute_force(inst, s.max_length, s.operators, s.brute_force_cap, 0)?.best
        }
    };
    debug!("{} finished: {:?}", alg.name(), out.stats);
    Ok(out)
}

fn validate_search(s: &SearchArgs) -> Result<()> {
    if s.max_length == 0 {
        return Err(CliError::Usage("--max-length must be >= 1".into()));
    }
    if s.beam_size == 0 {
        return Err(CliError::Usage("--beam-size must be >= 1".into()));
    }
    Ok(())
}

/// Returns the report and the exit status it should be printed with.
pub fn explain(args: &ExplainArgs) -> Result<(RunReport, u8)> {
    validate_search(&args.search)?;
    let ds = load_dataset(&args.data)?;
    let (neuron, binarised) = load_neuron(&args.neuron, args.data.quantile)?;
    let inst = Instance::new(&ds, &neuron, args.search.max_length)?;
    let e = run_algorithm(&inst, args.algorithm, &args.search)?;
    let s = &args.search;
    let optimal_algorithm = matches!(args.algorithm, Algorithm::Optimal | Algorithm::Brute);
    let report = RunReport {
        unit: unit_name(&args.neuron),
        algorithm: args.algorithm.name().into(),
        label: e.render(&ds),
        iou: e.iou.into(),
        optimal_flag: optimal_algorithm && e.optimal,
        stats: StatsReport::new(&e.stats, !args.seedless_output),
        warnings: e.warnings.clone(),
        config: ConfigEcho {
            dataset: args.data.dataset.display().to_string(),
            neuron: args.neuron.display().to_string(),
            max_length: s.max_length,
            beam_size: matches!(args.algorithm, Algorithm::Beam | Algorithm::BeamVanilla)
                .then_some(s.beam_size),
            operators: s.operators,
            quantile: binarised.then_some(args.data.quantile),
            backprop: !s.no_backprop,
            equivalences: !s.no_equivalences,
            budget_nodes: s.budget_nodes,
            budget_seconds: s.budget_seconds,
        },
    };
    let code = if args.algorithm == Algorithm::Optimal && !e.optimal {
        exit::BUDGET
    } else {
        exit::OK
    };
    Ok((report, code))
}

#[derive(Debug, Serialize)]
pub struct GenReport {
    pub dataset: String,
    pub units: Vec<String>,
}

pub fn gen(args: &GenArgs) -> Result<GenReport> {
    let config = SynthConfig {
        seed: args.seed,
        concepts: args.concepts,
        samples: args.samples,
        features: args.features,
        annotation_density: args.annotation_density,
        overlap_density: args.overlap_density,
        neuron_fire_rate: args.fire_rate,
    };
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::io(args.out_dir.display().to_string(), e))?;
    let ds_path = args.out_dir.join("dataset.cma");
    if args.worked_example {
        let (ds, neuron) = worked_example();
        let unit = args.out_dir.join("unit_0000.nam");
        write_concept_archive(&ds, &ds_path)?;
        write_neuron_mask(&neuron, &unit)?;
        return Ok(GenReport {
            dataset: ds_path.display().to_string(),
            units: vec![unit.display().to_string()],
        });
    }
    config.validate()?;
    let ds = generate_dataset(&config)?;
    write_concept_archive(&ds, &ds_path)?;
    let mut units = Vec::new();
    for unit in 0..args.units {
        let path = args.out_dir.join(format!("unit_{unit:04}.nam"));
        write_neuron_mask(&generate_neuron(&config, unit)?, &path)?;
        units.push(path.display().to_string());
    }
    Ok(GenReport {
        dataset: ds_path.display().to_string(),
        units,
    })
}

/// Per-concept quantities of `neuron` together with the disjoint matrix.
pub fn stats_dump(unit: String, ds: &ConceptDataset, neuron: &NeuronMask) -> Result<StatsDump> {
    ds.check_neuron(neuron)?;
    let partition = compute_partition(ds);
    let spaces = Spaces::new(neuron, &partition)?;
    let split = NeuronSplit::from_spaces(neuron, &spaces);
    let concepts = ds
        .concept_ids()
        .map(|k| {
            let q = spaces.quantities_of(ds.mask(k));
            ConceptStats {
                name: ds.name(k).to_string(),
                iu: q.iu_total,
                ic: q.ic_total,
                eu: q.eu_total,
                ec: q.ec_total,
                diou: q.diou(split.n_total).into(),
            }
        })
        .collect();
    Ok(StatsDump {
        unit,
        samples: ds.samples(),
        features: ds.features(),
        neuron: NeuronStats {
            n: split.n_total,
            nu: split.nu_total,
            nc: split.nc_total,
            seu: split.seu_total,
            sec: split.sec_total,
        },
        concepts,
        disjoint: compute_disjoint_matrix(ds).rows(),
    })
}

pub fn stats(args: &StatsArgs) -> Result<StatsDump> {
    let ds = load_dataset(&args.data)?;
    let (neuron, _) = load_neuron(&args.neuron, args.data.quantile)?;
    stats_dump(unit_name(&args.neuron), &ds, &neuron)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be >= 1".into()));
    }
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Runs `f` on every unit with at most `jobs` units in flight. Results keep
/// the order of `units`.
fn for_each_unit<T: Send>(
    jobs: usize,
    units: &[PathBuf],
    f: impl Fn(&Path) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    pool(jobs)?.install(|| units.par_iter().map(|p| f(p)).collect())
}

fn category_name(d: Difference) -> &'static str {
    match d {
        Difference::Same => "same",
        Difference::Cat1 => "cat1",
        Difference::Cat2 => "cat2",
        Difference::Cat3 => "cat3",
    }
}

pub fn compare(args: &CompareArgs) -> Result<CompareReport> {
    validate_search(&args.search)?;
    let ds = load_dataset(&args.data)?;
    let units = list_units(&args.neurons)?;
    let rows = for_each_unit(args.jobs, &units, |path| {
        let (neuron, _) = load_neuron(path, args.data.quantile)?;
        let inst = Instance::new(&ds, &neuron, args.search.max_length)?;
        let opt = run_algorithm(&inst, Algorithm::Optimal, &args.search)?;
        let base = run_algorithm(&inst, args.baseline, &args.search)?;
        Ok((
            CompareRow {
                unit: unit_name(path),
                optimal: LabelScore::new(&opt, opt.render(&ds)),
                baseline: LabelScore::new(&base, base.render(&ds)),
                category: category_name(classify_difference(&opt, &base)).into(),
            },
            opt.iou.to_f64(),
            base.iou.to_f64(),
        ))
    })?;
    let units = rows.len();
    let count = |c: &str| rows.iter().filter(|r| r.0.category == c).count();
    let changed = units - count("same");
    let pct = |n: usize, of: usize| {
        if of == 0 {
            0.0
        } else {
            100.0 * n as f64 / of as f64
        }
    };
    let summary = CompareSummary {
        units,
        changed,
        diff_pct: pct(changed, units),
        cat1_pct: pct(count("cat1"), changed),
        cat2_pct: pct(count("cat2"), changed),
        cat3_pct: pct(count("cat3"), changed),
        mean_iou_optimal: rows.iter().map(|r| r.1).sum::<f64>() / units as f64,
        mean_iou_baseline: rows.iter().map(|r| r.2).sum::<f64>() / units as f64,
    };
    Ok(CompareReport {
        baseline: args.baseline.name().into(),
        max_length: args.search.max_length,
        beam_size: args.search.beam_size,
        operators: args.search.operators,
        rows: rows.into_iter().map(|r| r.0).collect(),
        summary,
    })
}

pub fn bench(args: &BenchArgs) -> Result<BenchReport> {
    validate_search(&args.search)?;
    let ds = load_dataset(&args.data)?;
    let units = list_units(&args.neurons)?;
    let mut algorithms = if args.algorithms.is_empty() {
        vec![
            Algorithm::Optimal,
            Algorithm::Beam,
            Algorithm::BeamVanilla,
            Algorithm::Brute,
        ]
    } else {
        args.algorithms.clone()
    };
    algorithms.dedup();
    let mut rows = Vec::new();
    for &alg in &algorithms {
        let runs = for_each_unit(args.jobs, &units, |path| {
            let (neuron, _) = load_neuron(path, args.data.quantile)?;
            let inst = Instance::new(&ds, &neuron, args.search.max_length)?;
            let start = Clock::now();
            let e = run_algorithm(&inst, alg, &args.search)?;
            Ok((e.stats, millis(start.elapsed()), e.iou.to_f64()))
        })?;
        let column = |f: &dyn Fn(&(concept_align_core::SearchStats, f64, f64)) -> f64| {
            MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>())
        };
        rows.push(BenchRow {
            algorithm: alg.name().into(),
            visited: column(&|r| r.0.visited as f64),
            expanded: column(&|r| r.0.expanded as f64),
            estimated: column(&|r| r.0.estimated as f64),
            time_ms: (!args.seedless_output).then(|| column(&|r| r.1)),
            mean_iou: column(&|r| r.2).mean,
        });
    }
    Ok(BenchReport {
        units: units.len(),
        max_length: args.search.max_length,
        beam_size: args.search.beam_size,
        rows,
    })
}

/// Plain-text rendering of a bench report, one row per algorithm.
pub fn bench_table(report: &BenchReport) -> String {
    let cell = |m: &MeanStd| format!("{:.1} ± {:.1}", m.mean, m.std);
    let mut out = format!(
        "{:<13} {:>22} {:>22} {:>22} {:>22}\n",
        "algorithm", "visited", "expanded", "estimated", "time_ms"
    );
    for r in &report.rows {
        let time = r
            .time_ms
            .as_ref()
            .map(|m| format!("{:.3} ± {:.3}", m.mean, m.std))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<13} {:>22} {:>22} {:>22} {:>22}\n",
            r.algorithm,
            cell(&r.visited),
            cell(&r.expanded),
            cell(&r.estimated),
            time
        ));
    }
    out
}
