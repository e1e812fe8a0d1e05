//! Experiment runner behind the command line: single runs with optional
//! oracle comparison, parallel sweeps, and CSV output.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{gen_random_connected, GraphError, WeightedGraph};
use crate::oracle::{exact_mcds, MAX_ORACLE_NODES};
use crate::phases::{run_mcds, McdsError, Trace};
use crate::runtime::{RunConfig, RunMetrics};

/// Value of the `schema` column; bump when the column set changes.
pub const CSV_SCHEMA: u32 = 1;

pub const CSV_HEADER: [&str; 15] = [
    "schema",
    "instance",
    "seed",
    "n",
    "m",
    "diameter",
    "charged_rounds",
    "raw_rounds",
    "bits_sent",
    "phases",
    "iterations",
    "cds_cost",
    "opt_cost",
    "ratio",
    "violations",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub instance: String,
    pub seed: u64,
    pub metrics: Option<RunMetrics>,
    pub cds_cost: Option<u64>,
    pub oracle_cost: Option<u64>,
    pub ratio: Option<f64>,
    pub violations: Vec<String>,
}

impl ExperimentReport {
    pub fn is_success(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs the full pipeline on `g`. Any error, including a failed invariant,
/// becomes a violation entry. With `with_oracle` and `n <= 20`, the exact
/// optimum and the approximation ratio are attached.
pub fn run_experiment(
    g: &WeightedGraph,
    instance: &str,
    cfg: &RunConfig,
    with_oracle: bool,
) -> (ExperimentReport, Option<Trace>) {
    let mut report = ExperimentReport {
        instance: instance.to_string(),
        seed: cfg.seed,
        metrics: None,
        cds_cost: None,
        oracle_cost: None,
        ratio: None,
        violations: Vec::new(),
    };
    let trace = match run_mcds(g, cfg) {
        Ok(outcome) => {
            report.metrics = Some(outcome.metrics);
            report.cds_cost = Some(outcome.cost);
            Some(outcome.trace)
        }
        Err(e) => {
            report.violations.push(describe(&e));
            None
        }
    };
    if with_oracle && g.node_count() <= MAX_ORACLE_NODES {
        let opt = exact_mcds(g).expect("size checked").best_cost;
        report.oracle_cost = Some(opt);
        report.ratio = report.cds_cost.map(|c| c as f64 / opt as f64);
    }
    (report, trace)
}

fn describe(e: &McdsError) -> String {
    e.to_string()
}

/// One grid point of a random-graph sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub edge_prob: f64,
    pub weight_max: u64,
    pub seed: u64,
}

impl SweepPoint {
    pub fn descriptor(&self) -> String {
        format!(
            "random(n={},p={},wmax={})",
            self.n, self.edge_prob, self.weight_max
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub diameter: usize,
    pub report: ExperimentReport,
}

/// Edge probability giving expected average degree `degree`, capped at 1.
pub fn edge_prob_for_degree(n: usize, degree: f64) -> f64 {
    if n <= 1 {
        1.0
    } else {
        (degree / (n - 1) as f64).min(1.0)
    }
}

/// Runs every point in parallel; rows come back in grid order. The run seed
/// equals the graph seed.
pub fn sweep(points: &[SweepPoint], base: &RunConfig, with_oracle: bool) -> Vec<SweepRow> {
    points
        .par_iter()
        .map(|p| {
            let cfg = RunConfig {
                seed: p.seed,
                ..base.clone()
            };
            match gen_random_connected(p.n, p.edge_prob, p.weight_max, p.seed) {
                Ok(g) => {
                    let (report, _) = run_experiment(&g, &p.descriptor(), &cfg, with_oracle);
                    SweepRow {
                        n: g.node_count(),
                        m: g.edge_count(),
                        diameter: g.diameter(),
                        report,
                    }
                }
                Err(e) => failed_row(p, &e),
            }
        })
        .collect()
}

fn failed_row(p: &SweepPoint, e: &GraphError) -> SweepRow {
    SweepRow {
        n: p.n,
        m: 0,
        diameter: 0,
        report: ExperimentReport {
            instance: p.descriptor(),
            seed: p.seed,
            metrics: None,
            cds_cost: None,
            oracle_cost: None,
            ratio: None,
            violations: vec![format!("generator: {e}")],
        },
    }
}

fn opt_string<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the header and one record per row.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let r = &row.report;
        let m = r.metrics.as_ref();
        w.write_record([
            CSV_SCHEMA.to_string(),
            r.instance.clone(),
            r.seed.to_string(),
            row.n.to_string(),
            row.m.to_string(),
            row.diameter.to_string(),
            opt_string(m.map(|m| m.charged_rounds)),
            opt_string(m.map(|m| m.raw_rounds)),
            opt_string(m.map(|m| m.bits_sent)),
            opt_string(m.map(|m| m.phases)),
            opt_string(m.map(|m| m.iterations)),
            opt_string(r.cds_cost),
            opt_string(r.oracle_cost),
            opt_string(r.ratio.map(|x| format!("{x:.6}"))),
            r.violations.join("; "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSummary {
    pub column: &'static str,
    pub median: f64,
    pub max: f64,
}

/// Median of a nonempty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Median and max of every numeric column over rows that have a value.
pub fn summarize(rows: &[SweepRow]) -> Vec<ColumnSummary> {
    type Getter = fn(&SweepRow) -> Option<f64>;
    let columns: [(&'static str, Getter); 11] = [
        ("n", |r| Some(r.n as f64)),
        ("m", |r| Some(r.m as f64)),
        ("diameter", |r| Some(r.diameter as f64)),
        ("charged_rounds", |r| r.report.metrics.as_ref().map(|m| m.charged_rounds as f64)),
        ("raw_rounds", |r| r.report.metrics.as_ref().map(|m| m.raw_rounds as f64)),
        ("bits_sent", |r| r.report.metrics.as_ref().map(|m| m.bits_sent as f64)),
        ("phases", |r| r.report.metrics.as_ref().map(|m| m.phases as f64)),
        ("iterations", |r| r.report.metrics.as_ref().map(|m| m.iterations as f64)),
        ("cds_cost", |r| r.report.cds_cost.map(|c| c as f64)),
        ("opt_cost", |r| r.report.oracle_cost.map(|c| c as f64)),
        ("ratio", |r| r.report.ratio),
    ];
    columns
        .iter()
        .filter_map(|&(column, get)| {
            let values: Vec<f64> = rows.iter().filter_map(get).collect();
            Some(ColumnSummary {
                column,
                median: median(&values)?,
                max: values.iter().copied().fold(f64::MIN, f64::max),
            })
        })
        .collect()
}
