//! JSON documents printed on stdout. The layout is described by the schema
//! files under `docs/`.

use std::time::Duration;

use concept_align_core::{Explanation, OperatorSet, Rational, SearchStats};
use serde::Serialize;

/// Decimal places of [`IouReport::value`].
pub const DECIMAL_PLACES: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IouReport {
    pub num: u64,
    pub den: u64,
    pub value: String,
}

impl From<Rational> for IouReport {
    fn from(r: Rational) -> Self {
        Self {
            num: r.num(),
            den: r.den(),
            value: r.to_decimal_string(DECIMAL_PLACES),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub visited: u64,
    pub expanded: u64,
    pub estimated: u64,
    pub backprop_updates: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

pub fn millis(d: Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1e3
}

impl StatsReport {
    pub fn new(stats: &SearchStats, timed: bool) -> Self {
        Self {
            visited: stats.visited,
            expanded: stats.expanded,
            estimated: stats.estimated,
            backprop_updates: stats.backprop_updates,
            elapsed_ms: timed.then(|| millis(stats.elapsed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub dataset: String,
    pub neuron: String,
    pub max_length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beam_size: Option<usize>,
    pub operators: OperatorSet,
    /// Only present when the neuron was binarised from raw activations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantile: Option<f64>,
    pub backprop: bool,
    pub equivalences: bool,
    pub budget_nodes: Option<u64>,
    pub budget_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub unit: String,
    pub algorithm: String,
    pub label: String,
    pub iou: IouReport,
    pub optimal_flag: bool,
    pub stats: StatsReport,
    pub warnings: Vec<String>,
    pub config: ConfigEcho,
}

/// One side of a comparison row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelScore {
    pub label: String,
    pub iou: IouReport,
}

impl LabelScore {
    pub fn new(e: &Explanation, label: String) -> Self {
        Self {
            label,
            iou: e.iou.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompareRow {
    pub unit: String,
    pub optimal: LabelScore,
    pub baseline: LabelScore,
    /// `same`, `cat1`, `cat2` or `cat3`.
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummary {
    pub units: usize,
    pub changed: usize,
    /// Share of units whose explanations differ, in percent.
    pub diff_pct: f64,
    /// Category shares are percentages of the changed units.
    pub cat1_pct: f64,
    pub cat2_pct: f64,
    pub cat3_pct: f64,
    pub mean_iou_optimal: f64,
    pub mean_iou_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub baseline: String,
    pub max_length: usize,
    pub beam_size: usize,
    pub operators: OperatorSet,
    pub rows: Vec<CompareRow>,
    pub summary: CompareSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptStats {
    pub name: String,
    pub iu: u64,
    pub ic: u64,
    pub eu: u64,
    pub ec: u64,
    pub diou: IouReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeuronStats {
    pub n: u64,
    pub nu: u64,
    pub nc: u64,
    pub seu: u64,
    pub sec: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsDump {
    pub unit: String,
    pub samples: usize,
    pub features: usize,
    pub neuron: NeuronStats,
    pub concepts: Vec<ConceptStats>,
    /// `disjoint[a][b]` is true when concepts `a` and `b` never co-occur.
    pub disjoint: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population standard deviation; zero for fewer than two values.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: 0.0,
                std: 0.0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub algorithm: String,
    pub visited: MeanStd,
    pub expanded: MeanStd,
    pub estimated: MeanStd,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_ms: Option<MeanStd>,
    pub mean_iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub units: usize,
    pub max_length: usize,
    pub beam_size: usize,
    pub rows: Vec<BenchRow>,
}
