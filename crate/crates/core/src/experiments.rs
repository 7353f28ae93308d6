//! Parameter sweeps over (algorithm, radius, points, repetition) grids.
//!
//! Two experiments are provided. The *overfitting* experiment trains on 80% of
//! a random sample and classifies the remaining 20% with one assignment pass
//! against the trained centroids. The *stopping* experiment clusters the whole
//! sample up to the iteration cap and records accuracy at every iteration
//! together with the iteration at which the clusters stopped changing.
//!
//! All algorithms of one `(n_points, repetition)` pair see the same sample, so
//! gains against the 2DEC baseline compare like with like. Every cell is an
//! independent work item; results are gathered in cell order, so the output
//! (timings aside) does not depend on the number of workers.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{Algorithm, SqMode, StopRule, DEFAULT_MAX_ITERATIONS};
use crate::error::{Error, Result};
use crate::qamdata::{
    self, build_alphabet64, split_train_test, Alphabet, BitTruth, ChannelConfig, QamDataset,
};
use crate::quantum::ShotConfig;
use crate::seed::{derive, f64_key, str_key};

/// Samples in the generated pool that every cell draws from.
pub const DEFAULT_POOL_SIZE: usize = 52_124;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const DEFAULT_SHOTS: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    #[serde(rename = "2dec")]
    Dec2,
    #[serde(rename = "3dsc")]
    Sc3,
    #[serde(rename = "2dsc")]
    Sc2,
    SqExact,
    SqShots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Overfit,
    Stopping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub algorithms: Vec<AlgorithmKind>,
    /// Ignored by 2DEC, which gets a single radius-free cell.
    pub radii: Vec<f64>,
    pub n_points: Vec<usize>,
    pub repetitions: usize,
    pub max_iterations: usize,
    pub base_seed: u64,
    /// Shot budget per dissimilarity evaluation for `SqShots`.
    pub shots: u64,
    pub train_fraction: f64,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
}

/// The channel the sample pool is generated through.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentChannel {
    pub sigma: f64,
    pub phase_rotation: f64,
    pub pool_size: usize,
    pub alphabet: Alphabet,
}

/// Coordinates of one work item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub algorithm: AlgorithmKind,
    pub radius: Option<f64>,
    pub n_points: usize,
    pub repetition: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: ExperimentKind,
    pub cell: Cell,
    pub training_accuracy: f64,
    pub training_ber: f64,
    pub testing_accuracy: Option<f64>,
    pub testing_ber: Option<f64>,
    /// `testing_accuracy − training_accuracy`.
    pub overfitting: Option<f64>,
    pub iterations: usize,
    pub train_ms: f64,
    pub test_ms: Option<f64>,
    pub natural_endpoint: Option<usize>,
    pub per_iteration_accuracy: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiStat {
    pub mean: f64,
    /// Sample standard deviation over runs; 0 for a single run.
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub experiment: ExperimentKind,
    pub algorithm: AlgorithmKind,
    pub radius: Option<f64>,
    pub n_points: usize,
    pub kpis: BTreeMap<String, KpiStat>,
    /// Mean KPI minus the 2DEC mean at the same `n_points`; empty without a baseline.
    pub gains: BTreeMap<String, f64>,
}

/// Mean accuracy per iteration and the cumulative probability of having stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingCurve {
    pub algorithm: AlgorithmKind,
    pub radius: Option<f64>,
    pub n_points: usize,
    pub mean_accuracy: Vec<f64>,
    /// Entry `i` is the fraction of runs whose natural endpoint is at or before iteration `i + 1`.
    pub stop_probability: Vec<f64>,
    pub stop_increment: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub experiment: ExperimentKind,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<AggregateRecord>,
    /// Filled by the stopping experiment only.
    pub curves: Vec<StoppingCurve>,
}

/// One line of a long-format report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: ExperimentKind,
    pub algorithm: AlgorithmKind,
    pub radius: Option<f64>,
    pub n_points: usize,
    /// `None` on aggregate and curve rows.
    pub repetition: Option<usize>,
    pub kpi: String,
    pub value: f64,
}

pub const REPORT_HEADER: &str = "experiment,algorithm,radius,n_points,repetition,kpi,value";

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::Dec2,
        AlgorithmKind::Sc3,
        AlgorithmKind::Sc2,
        AlgorithmKind::SqExact,
        AlgorithmKind::SqShots,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Dec2 => "2dec",
            AlgorithmKind::Sc3 => "3dsc",
            AlgorithmKind::Sc2 => "2dsc",
            AlgorithmKind::SqExact => "sq-exact",
            AlgorithmKind::SqShots => "sq-shots",
        }
    }

    pub fn uses_radius(self) -> bool {
        self != AlgorithmKind::Dec2
    }

    /// The runnable algorithm; `radius` is required unless this is 2DEC.
    pub fn build(self, radius: Option<f64>, shots: Option<ShotConfig>) -> Result<Algorithm> {
        let need =
            || radius.ok_or_else(|| Error::invalid(format!("{} needs a radius", self.name())));
        Ok(match self {
            AlgorithmKind::Dec2 => Algorithm::Dec2,
            AlgorithmKind::Sc3 => Algorithm::Sc3 { radius: need()? },
            AlgorithmKind::Sc2 => Algorithm::Sc2 { radius: need()? },
            AlgorithmKind::SqExact => Algorithm::Sq {
                radius: need()?,
                mode: SqMode::Exact,
            },
            AlgorithmKind::SqShots => Algorithm::Sq {
                radius: need()?,
                mode: SqMode::Shots(
                    shots.ok_or_else(|| Error::invalid("sq-shots needs a shot configuration"))?,
                ),
            },
        })
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm {s:?}")))
    }
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Overfit => "overfit",
            ExperimentKind::Stopping => "stopping",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overfit" => Ok(ExperimentKind::Overfit),
            "stopping" => Ok(ExperimentKind::Stopping),
            _ => Err(Error::invalid(format!("unknown experiment {s:?}"))),
        }
    }
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            algorithms: vec![
                AlgorithmKind::Dec2,
                AlgorithmKind::Sc3,
                AlgorithmKind::Sc2,
                AlgorithmKind::SqExact,
            ],
            radii: vec![0.5, 1.0, 2.0, 3.0, 5.0],
            n_points: vec![640, 2560, 10240],
            repetitions: 100,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            base_seed: 0,
            shots: DEFAULT_SHOTS,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            workers: 0,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() || self.n_points.is_empty() {
            return Err(Error::invalid(
                "grid needs at least one algorithm and one point count",
            ));
        }
        if self.algorithms.iter().any(|a| a.uses_radius()) && self.radii.is_empty() {
            return Err(Error::invalid("grid has projected algorithms but no radii"));
        }
        if let Some(r) = self.radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid(format!("radius must be positive, got {r}")));
        }
        if self.n_points.contains(&0) {
            return Err(Error::invalid("point counts must be positive"));
        }
        if self.repetitions == 0 || self.max_iterations == 0 || self.shots == 0 {
            return Err(Error::invalid(
                "repetitions, max iterations and shots must be at least 1",
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Work items in report order: algorithm, radius, points, repetition.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            let radii: Vec<Option<f64>> = if algorithm.uses_radius() {
                self.radii.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for &radius in &radii {
                for &n_points in &self.n_points {
                    for repetition in 0..self.repetitions {
                        out.push(Cell {
                            algorithm,
                            radius,
                            n_points,
                            repetition,
                        });
                    }
                }
            }
        }
        out
    }
}

impl ExperimentChannel {
    pub fn new(sigma: f64, phase_rotation: f64) -> Self {
        ExperimentChannel {
            sigma,
            phase_rotation,
            pool_size: DEFAULT_POOL_SIZE,
            alphabet: build_alphabet64(),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.algorithm)?;
        if let Some(r) = self.radius {
            write!(f, " r={r}")?;
        }
        write!(f, " n={} rep={}", self.n_points, self.repetition)
    }
}

impl Cell {
    /// Seed of the data sample; shared by all algorithms and radii.
    pub fn data_seed(&self, base: u64) -> u64 {
        derive(base, &[self.n_points as u64, self.repetition as u64])
    }

    pub fn shot_seed(&self, base: u64) -> u64 {
        derive(
            base,
            &[
                str_key(self.algorithm.name()),
                self.radius.map_or(0, f64_key),
                self.n_points as u64,
                self.repetition as u64,
            ],
        )
    }

    fn same_group(&self, o: &Cell) -> bool {
        self.algorithm == o.algorithm && self.radius == o.radius && self.n_points == o.n_points
    }
}

fn pool_seed(base: u64) -> u64 {
    derive(base, &[str_key("pool")])
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn run_cell(
    kind: ExperimentKind,
    cell: Cell,
    grid: &ExperimentGrid,
    pool: &QamDataset,
) -> Result<RunRecord> {
    let shots = ShotConfig::new(grid.shots, cell.shot_seed(grid.base_seed))?;
    let algorithm = cell.algorithm.build(cell.radius, Some(shots))?;
    let sample = pool.subsample(cell.n_points, cell.data_seed(grid.base_seed))?;
    let initial = sample.alphabet.symbols().to_vec();

    let (train, test) = match kind {
        ExperimentKind::Overfit => {
            let (a, b) = split_train_test(
                &sample,
                grid.train_fraction,
                derive(cell.data_seed(grid.base_seed), &[1]),
            )?;
            (a, Some(b))
        }
        ExperimentKind::Stopping => (sample, None),
    };
    let stop = match kind {
        ExperimentKind::Overfit => StopRule::natural(grid.max_iterations)?,
        ExperimentKind::Stopping => StopRule::max_iterations(grid.max_iterations)?,
    };

    let truth = BitTruth::new(train.labels.clone(), &train.alphabet);
    let started = Instant::now();
    let run = algorithm.run(&train.rx, &initial, stop, Some(&truth))?;
    let train_ms = ms(started);
    let trained = truth.metrics(&run.assignment.labels)?;

    let mut record = RunRecord {
        experiment: kind,
        cell,
        training_accuracy: trained.symbol_accuracy,
        training_ber: trained.bit_error_rate,
        testing_accuracy: None,
        testing_ber: None,
        overfitting: None,
        iterations: run.iterations(),
        train_ms,
        test_ms: None,
        natural_endpoint: run.natural_endpoint,
        per_iteration_accuracy: run.trace.iter().filter_map(|t| t.accuracy).collect(),
    };

    if let Some(test) = test {
        let started = Instant::now();
        let labels = algorithm.classify(&test.rx, run.state.centroids(), run.iterations() + 1)?;
        record.test_ms = Some(ms(started));
        let tested = BitTruth::new(test.labels, &test.alphabet).metrics(&labels.labels)?;
        record.testing_accuracy = Some(tested.symbol_accuracy);
        record.testing_ber = Some(tested.bit_error_rate);
        record.overfitting = Some(tested.symbol_accuracy - trained.symbol_accuracy);
    }
    Ok(record)
}

fn run_grid(
    kind: ExperimentKind,
    grid: &ExperimentGrid,
    channel: &ExperimentChannel,
) -> Result<Vec<RunRecord>> {
    grid.validate()?;
    let biggest = grid.n_points.iter().copied().max().unwrap_or(0);
    if biggest > channel.pool_size {
        return Err(Error::invalid(format!(
            "{biggest} points requested from a pool of {}",
            channel.pool_size
        )));
    }
    let cfg = ChannelConfig::new(
        channel.sigma,
        channel.phase_rotation,
        pool_seed(grid.base_seed),
        channel.pool_size,
    )?;
    let pool = qamdata::generate_dataset(&channel.alphabet, &cfg)?;

    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(grid.workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let cells = grid.cells();
    let results: Vec<Result<RunRecord>> = workers.install(|| {
        cells
            .par_iter()
            .map(|&cell| {
                run_cell(kind, cell, grid, &pool).map_err(|e| Error::InCell {
                    cell: cell.to_string(),
                    source: Box::new(e),
                })
            })
            .collect()
    });
    // first failure in cell order, whatever order the workers finished in
    results.into_iter().collect()
}

fn stat(values: &[f64]) -> KpiStat {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    KpiStat {
        mean,
        std,
        count: n,
    }
}

impl RunRecord {
    /// Scalar KPIs of this run, in report order.
    pub fn kpis(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("training_accuracy", self.training_accuracy),
            ("training_ber", self.training_ber),
        ];
        if let (Some(a), Some(b), Some(o)) =
            (self.testing_accuracy, self.testing_ber, self.overfitting)
        {
            out.extend([
                ("testing_accuracy", a),
                ("testing_ber", b),
                ("overfitting", o),
            ]);
        }
        out.push(("iterations", self.iterations as f64));
        out.push((
            "natural_endpoint_reached",
            f64::from(u8::from(self.natural_endpoint.is_some())),
        ));
        if let Some(e) = self.natural_endpoint {
            out.push(("natural_endpoint", e as f64));
        }
        out.push(("train_ms", self.train_ms));
        if let Some(t) = self.test_ms {
            out.push(("test_ms", t));
        }
        out
    }
}

/// Groups consecutive runs of the same (algorithm, radius, points) cell.
fn groups(runs: &[RunRecord]) -> Vec<&[RunRecord]> {
    runs.chunk_by(|a, b| a.cell.same_group(&b.cell)).collect()
}

/// Mean and standard deviation of every KPI per cell, with gains against 2DEC.
pub fn aggregate(runs: &[RunRecord]) -> Vec<AggregateRecord> {
    let mut out: Vec<AggregateRecord> = groups(runs)
        .into_iter()
        .map(|g| {
            let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for r in g {
                for (k, v) in r.kpis() {
                    values.entry(k.to_string()).or_default().push(v);
                }
            }
            AggregateRecord {
                experiment: g[0].experiment,
                algorithm: g[0].cell.algorithm,
                radius: g[0].cell.radius,
                n_points: g[0].cell.n_points,
                kpis: values.iter().map(|(k, v)| (k.clone(), stat(v))).collect(),
                gains: BTreeMap::new(),
            }
        })
        .collect();

    let baselines: Vec<(usize, BTreeMap<String, KpiStat>)> = out
        .iter()
        .filter(|a| a.algorithm == AlgorithmKind::Dec2)
        .map(|a| (a.n_points, a.kpis.clone()))
        .collect();
    for a in &mut out {
        if let Some((_, base)) = baselines.iter().find(|(n, _)| *n == a.n_points) {
            a.gains = a
                .kpis
                .iter()
                .filter_map(|(k, s)| base.get(k).map(|b| (k.clone(), s.mean - b.mean)))
                .collect();
        }
    }
    out
}

/// Mean accuracy and cumulative stop probability per iteration for each cell.
pub fn stopping_curves(runs: &[RunRecord]) -> Vec<StoppingCurve> {
    groups(runs)
        .into_iter()
        .map(|g| {
            let len = g
                .iter()
                .map(|r| r.per_iteration_accuracy.len())
                .max()
                .unwrap_or(0);
            let n = g.len() as f64;
            let mean_accuracy = (0..len)
                .map(|i| {
                    // a run that stopped early keeps its last accuracy
                    g.iter()
                        .map(|r| {
                            let acc = &r.per_iteration_accuracy;
                            acc.get(i).or(acc.last()).copied().unwrap_or(0.0)
                        })
                        .sum::<f64>()
                        / n
                })
                .collect();
            let stop_probability: Vec<f64> = (1..=len)
                .map(|i| {
                    g.iter()
                        .filter(|r| r.natural_endpoint.is_some_and(|e| e <= i))
                        .count() as f64
                        / n
                })
                .collect();
            let stop_increment = stop_probability
                .iter()
                .scan(0.0, |prev, &p| {
                    let d = p - *prev;
                    *prev = p;
                    Some(d)
                })
                .collect();
            StoppingCurve {
                algorithm: g[0].cell.algorithm,
                radius: g[0].cell.radius,
                n_points: g[0].cell.n_points,
                mean_accuracy,
                stop_probability,
                stop_increment,
            }
        })
        .collect()
}

/// Train on a split of each sample, then classify the held-out part in one pass.
pub fn run_overfitting_experiment(
    grid: &ExperimentGrid,
    channel: &ExperimentChannel,
) -> Result<ExperimentOutcome> {
    let runs = run_grid(ExperimentKind::Overfit, grid, channel)?;
    Ok(ExperimentOutcome {
        experiment: ExperimentKind::Overfit,
        aggregates: aggregate(&runs),
        curves: Vec::new(),
        runs,
    })
}

/// Cluster each full sample to the iteration cap, tracking accuracy and the natural endpoint.
pub fn run_stopping_experiment(
    grid: &ExperimentGrid,
    channel: &ExperimentChannel,
) -> Result<ExperimentOutcome> {
    let runs = run_grid(ExperimentKind::Stopping, grid, channel)?;
    Ok(ExperimentOutcome {
        experiment: ExperimentKind::Stopping,
        aggregates: aggregate(&runs),
        curves: stopping_curves(&runs),
        runs,
    })
}

impl ExperimentOutcome {
    /// Long-format rows: per-run KPIs, then aggregates, then curves.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        let row = |algorithm, radius, n_points, repetition, kpi: String, value| ReportRow {
            experiment: self.experiment,
            algorithm,
            radius,
            n_points,
            repetition,
            kpi,
            value,
        };
        for r in &self.runs {
            let c = r.cell;
            for (k, v) in r.kpis() {
                rows.push(row(
                    c.algorithm,
                    c.radius,
                    c.n_points,
                    Some(c.repetition),
                    k.to_string(),
                    v,
                ));
            }
            for (i, a) in r.per_iteration_accuracy.iter().enumerate() {
                rows.push(row(
                    c.algorithm,
                    c.radius,
                    c.n_points,
                    Some(c.repetition),
                    format!("accuracy_iter_{}", i + 1),
                    *a,
                ));
            }
        }
        for a in &self.aggregates {
            for (k, s) in &a.kpis {
                rows.push(row(
                    a.algorithm,
                    a.radius,
                    a.n_points,
                    None,
                    format!("{k}_mean"),
                    s.mean,
                ));
                rows.push(row(
                    a.algorithm,
                    a.radius,
                    a.n_points,
                    None,
                    format!("{k}_std"),
                    s.std,
                ));
            }
            for (k, g) in &a.gains {
                rows.push(row(
                    a.algorithm,
                    a.radius,
                    a.n_points,
                    None,
                    format!("{k}_gain"),
                    *g,
                ));
            }
        }
        for c in &self.curves {
            let series = [
                ("mean_accuracy", &c.mean_accuracy),
                ("stop_probability", &c.stop_probability),
                ("stop_increment", &c.stop_increment),
            ];
            for (name, values) in series {
                for (i, v) in values.iter().enumerate() {
                    rows.push(row(
                        c.algorithm,
                        c.radius,
                        c.n_points,
                        None,
                        format!("{name}_iter_{}", i + 1),
                        *v,
                    ));
                }
            }
        }
        rows
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes rows as CSV (with [`REPORT_HEADER`]) or as a JSON array.
pub fn emit_report(rows: &[ReportRow], path: &Path, format: ReportFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        ReportFormat::Csv => {
            writeln!(w, "{REPORT_HEADER}")?;
            for r in rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.experiment,
                    r.algorithm,
                    opt(r.radius),
                    r.n_points,
                    opt(r.repetition),
                    r.kpi,
                    r.value
                )?;
            }
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_report_json(path: &Path) -> Result<Vec<ReportRow>> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        File::open(path)?,
    ))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(algorithms: Vec<AlgorithmKind>) -> ExperimentGrid {
        ExperimentGrid {
            algorithms,
            radii: vec![0.5, 2.0],
            n_points: vec![320],
            repetitions: 3,
            max_iterations: 10,
            base_seed: 17,
            shots: 64,
            workers: 1,
            ..ExperimentGrid::default()
        }
    }

    fn small_channel(sigma: f64) -> ExperimentChannel {
        ExperimentChannel {
            pool_size: 4000,
            ..ExperimentChannel::new(sigma, 0.0)
        }
    }

    fn strip_timing(runs: &[RunRecord]) -> Vec<RunRecord> {
        runs.iter()
            .map(|r| RunRecord {
                train_ms: 0.0,
                test_ms: r.test_ms.map(|_| 0.0),
                ..r.clone()
            })
            .collect()
    }

    #[test]
    fn cells_enumerate_the_grid() {
        let g = small_grid(vec![AlgorithmKind::Dec2, AlgorithmKind::Sc2]);
        let cells = g.cells();
        // 2DEC ignores the radii
        assert_eq!(cells.len(), 3 + 2 * 3);
        assert_eq!(cells[0].radius, None);
        assert_eq!(cells[3].radius, Some(0.5));
        assert_eq!(cells[0].data_seed(17), cells[3].data_seed(17));
        assert_ne!(cells[0].data_seed(17), cells[1].data_seed(17));
        assert_ne!(cells[3].shot_seed(17), cells[6].shot_seed(17));
    }

    #[test]
    fn grid_validation() {
        let ok = small_grid(vec![AlgorithmKind::Sc2]);
        assert!(ok.validate().is_ok());
        assert!(ExperimentGrid {
            radii: vec![],
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentGrid {
            radii: vec![],
            algorithms: vec![AlgorithmKind::Dec2],
            ..ok.clone()
        }
        .validate()
        .is_ok());
        assert!(ExperimentGrid {
            repetitions: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentGrid {
            radii: vec![-1.0],
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentGrid {
            n_points: vec![],
            ..ok
        }
        .validate()
        .is_err());
    }

    #[test]
    fn noiseless_overfit_is_perfect() {
        // enough shots that an adjacent symbol never samples zero 11-outcomes
        let g = ExperimentGrid {
            shots: 1_000_000,
            ..small_grid(AlgorithmKind::ALL.to_vec())
        };
        let out = run_overfitting_experiment(&g, &small_channel(0.0)).unwrap();
        assert_eq!(out.runs.len(), 3 + 4 * 2 * 3);
        for r in &out.runs {
            assert_eq!(r.training_accuracy, 1.0, "{}", r.cell);
            assert_eq!(r.testing_accuracy, Some(1.0));
            assert_eq!(r.overfitting, Some(0.0));
            assert!(r.iterations <= 2);
            assert_eq!(r.per_iteration_accuracy.len(), r.iterations);
        }
    }

    #[test]
    fn baseline_gain_is_zero_and_sq_matches_2dsc() {
        let g = small_grid(vec![
            AlgorithmKind::Dec2,
            AlgorithmKind::Sc2,
            AlgorithmKind::SqExact,
        ]);
        let out = run_overfitting_experiment(&g, &small_channel(0.12)).unwrap();
        let base = &out.aggregates[0];
        assert_eq!(base.algorithm, AlgorithmKind::Dec2);
        assert!(!base.gains.is_empty());
        assert!(base.gains.values().all(|v| *v == 0.0));

        let pick = |alg| {
            out.runs
                .iter()
                .filter(move |r: &&RunRecord| r.cell.algorithm == alg)
        };
        for (a, b) in pick(AlgorithmKind::Sc2).zip(pick(AlgorithmKind::SqExact)) {
            assert_eq!(a.cell.radius, b.cell.radius);
            assert_eq!(a.training_accuracy, b.training_accuracy);
            assert_eq!(a.testing_accuracy, b.testing_accuracy);
            assert_eq!(a.iterations, b.iterations);
            assert_eq!(a.per_iteration_accuracy, b.per_iteration_accuracy);
        }
    }

    #[test]
    fn output_ignores_worker_count() {
        let g = small_grid(vec![AlgorithmKind::Dec2, AlgorithmKind::SqShots]);
        let ch = small_channel(0.1);
        let one = run_overfitting_experiment(&g, &ch).unwrap();
        let four = run_overfitting_experiment(
            &ExperimentGrid {
                workers: 4,
                ..g.clone()
            },
            &ch,
        )
        .unwrap();
        assert_eq!(strip_timing(&one.runs), strip_timing(&four.runs));
        let again = run_overfitting_experiment(&g, &ch).unwrap();
        assert_eq!(strip_timing(&one.runs), strip_timing(&again.runs));
    }

    #[test]
    fn stopping_curves_are_cumulative() {
        let g = ExperimentGrid {
            repetitions: 4,
            ..small_grid(vec![AlgorithmKind::Dec2, AlgorithmKind::Sc2])
        };
        let out = run_stopping_experiment(&g, &small_channel(0.1)).unwrap();
        assert_eq!(out.curves.len(), 3);
        for c in &out.curves {
            assert_eq!(c.mean_accuracy.len(), g.max_iterations);
            assert!(c.stop_probability.windows(2).all(|w| w[0] <= w[1]));
            assert!(c.stop_increment.iter().all(|d| *d >= 0.0));
            let total: f64 = c.stop_increment.iter().sum();
            assert!((total - c.stop_probability.last().unwrap()).abs() < 1e-12);
        }
        for r in &out.runs {
            assert_eq!(r.iterations, g.max_iterations);
            assert_eq!(r.testing_accuracy, None);
        }
    }

    #[test]
    fn noiseless_stopping_curve_is_flat() {
        let out =
            run_stopping_experiment(&small_grid(vec![AlgorithmKind::Sc3]), &small_channel(0.0))
                .unwrap();
        for c in &out.curves {
            assert!(c.mean_accuracy.iter().all(|a| *a == 1.0));
            assert_eq!(c.stop_probability[0], 1.0);
        }
    }

    #[test]
    fn bad_radius_ends_below_a_good_one() {
        let g = ExperimentGrid {
            radii: vec![0.25, 2.0],
            n_points: vec![640],
            ..small_grid(vec![AlgorithmKind::Sc2])
        };
        let out = run_stopping_experiment(&g, &small_channel(0.1)).unwrap();
        let last = |c: &StoppingCurve| *c.mean_accuracy.last().unwrap();
        assert!(last(&out.curves[0]) < last(&out.curves[1]));
    }

    #[test]
    fn pool_must_cover_the_sample() {
        let g = ExperimentGrid {
            n_points: vec![5000],
            ..small_grid(vec![AlgorithmKind::Dec2])
        };
        assert!(run_overfitting_experiment(&g, &small_channel(0.1)).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in AlgorithmKind::ALL {
            assert_eq!(a.name().parse::<AlgorithmKind>().unwrap(), a);
            assert_eq!(
                serde_json::to_string(&a).unwrap(),
                format!("\"{}\"", a.name())
            );
            let built = a
                .build(Some(1.0), Some(ShotConfig::new(8, 0).unwrap()))
                .unwrap();
            assert_eq!(built.name(), a.name());
        }
        assert!("4dsc".parse::<AlgorithmKind>().is_err());
        assert!(AlgorithmKind::Sc2.build(None, None).is_err());
    }
}
