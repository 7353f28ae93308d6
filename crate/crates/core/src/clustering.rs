//! Generic k-NN clustering engine and the four stereographic variants.
//!
//! A run alternates two steps:
//!
//! 1. **cluster update**: every point joins the centroid with the smallest
//!    dissimilarity, ties going to the lowest centroid index;
//! 2. **centroid update**: each cluster's centroid is replaced according to a
//!    [`CentroidRule`].
//!
//! One iteration is one cluster update followed by one centroid update. The
//! run reaches its *natural endpoint* at iteration `i` when the clusters
//! induced by the updated centroids equal those of iteration `i`; from there
//! on nothing changes.
//!
//! An empty cluster keeps its previous centroid.

use std::time::Instant;

use crate::dissimilarity::{DissimilarityKind, DrawKey};
use crate::error::{Error, Result};
use crate::geometry::{check_radius, isp, Point2};
use crate::quantum::ShotConfig;

/// Iteration cap used when none is given.
pub const DEFAULT_MAX_ITERATIONS: usize = 50;

/// Relative slack before an objective change counts as an increase.
const INCREASE_EPS: f64 = 1e-12;

/// Dense row-major set of equal-dimension real vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into rows of dimension {dim}",
                data.len()
            )));
        }
        Ok(PointSet { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::invalid("no rows"))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has dimension {}, expected {dim}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        PointSet::new(dim, data)
    }

    pub fn from_points2(points: &[Point2]) -> Self {
        PointSet {
            dim: 2,
            data: points.iter().flat_map(|p| [p.x, p.y]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// The space points and centroids live in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dataspace {
    Plane2D,
    Space3D,
    /// Dataset points lie on the sphere of this radius centred at the origin.
    Sphere(f64),
}

/// Dataset, centroids, dissimilarity and dataspace.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringState {
    dataset: PointSet,
    centroids: PointSet,
    dissimilarity: DissimilarityKind,
    dataspace: Dataspace,
}

impl ClusteringState {
    pub fn new(
        dataset: PointSet,
        centroids: PointSet,
        dissimilarity: DissimilarityKind,
        dataspace: Dataspace,
    ) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::invalid("dataset is empty"));
        }
        if centroids.is_empty() {
            return Err(Error::invalid("need at least one centroid"));
        }
        if dataset.dim() != centroids.dim() {
            return Err(Error::invalid(format!(
                "dataset dimension {} differs from centroid dimension {}",
                dataset.dim(),
                centroids.dim()
            )));
        }
        if dataset
            .as_slice()
            .iter()
            .chain(centroids.as_slice())
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("non-finite coordinate"));
        }
        dissimilarity.validate()?;
        match dataspace {
            Dataspace::Plane2D if dataset.dim() != 2 => {
                return Err(Error::invalid(
                    "Plane2D dataspace needs 2-dimensional points",
                ));
            }
            Dataspace::Space3D if dataset.dim() != 3 => {
                return Err(Error::invalid(
                    "Space3D dataspace needs 3-dimensional points",
                ));
            }
            Dataspace::Sphere(r) => {
                check_radius(r)?;
                for (i, p) in dataset.rows().enumerate() {
                    let n = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if (n - r).abs() > 1e-9 * r {
                        return Err(Error::invalid(format!(
                            "point {i} has norm {n}, not on the sphere of radius {r}"
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(ClusteringState {
            dataset,
            centroids,
            dissimilarity,
            dataspace,
        })
    }

    pub fn dataset(&self) -> &PointSet {
        &self.dataset
    }

    pub fn centroids(&self) -> &PointSet {
        &self.centroids
    }

    pub fn dissimilarity(&self) -> DissimilarityKind {
        self.dissimilarity
    }

    pub fn dataspace(&self) -> Dataspace {
        self.dataspace
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    fn with_centroids(&self, centroids: PointSet) -> Self {
        ClusteringState {
            centroids,
            ..self.clone()
        }
    }
}

/// Cluster index of every dataset point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub labels: Vec<usize>,
}

impl Assignment {
    /// Member indices of each of the `k` clusters.
    pub fn clusters(&self, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// How a cluster's new centroid is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CentroidRule {
    /// Arithmetic mean.
    EuclideanMean,
    /// `r · Σp / ‖Σp‖`: the mean pushed radially onto the sphere of radius `r`.
    SphericalProjectedMean(f64),
    /// `Σp`, unnormalised. Any positive multiple is an equally good cosine centroid.
    UnnormalizedSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCriterion {
    /// Stop once clusters no longer change.
    NaturalEndpoint,
    /// Run exactly up to the iteration cap.
    MaxIterations,
    /// Stop when the summed per-cluster mean dissimilarity grows, keeping the
    /// previous iteration's state; also stops at the natural endpoint.
    DissimilarityIncrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    criterion: StopCriterion,
    max_iterations: usize,
}

impl StopRule {
    pub fn new(criterion: StopCriterion, max_iterations: usize) -> Result<Self> {
        if max_iterations == 0 {
            return Err(Error::invalid("iteration cap must be at least 1"));
        }
        Ok(StopRule {
            criterion,
            max_iterations,
        })
    }

    pub fn natural(max_iterations: usize) -> Result<Self> {
        Self::new(StopCriterion::NaturalEndpoint, max_iterations)
    }

    pub fn max_iterations(n: usize) -> Result<Self> {
        Self::new(StopCriterion::MaxIterations, n)
    }

    pub fn criterion(&self) -> StopCriterion {
        self.criterion
    }

    pub fn cap(&self) -> usize {
        self.max_iterations
    }
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            criterion: StopCriterion::NaturalEndpoint,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    NaturalEndpoint,
    IterationCap,
    DissimilarityIncreased,
}

/// Snapshot of one iteration: the centroids used for the cluster update and
/// the assignment they produced.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub centroids: PointSet,
    pub labels: Vec<usize>,
    pub accuracy: Option<f64>,
    /// `Σ_j mean_{p ∈ C_j} d(p, c_j)`, empty clusters contributing zero.
    pub mean_dissimilarity: f64,
    pub elapsed_ms: f64,
}

/// Per-iteration accuracy hook for runs with known ground truth.
pub trait Scorer {
    fn score(&self, centroids: &PointSet, labels: &[usize]) -> Result<f64>;
}

/// Ground truth given as the expected cluster index of every point.
#[derive(Debug, Clone)]
pub struct IndexTruth(pub Vec<usize>);

impl Scorer for IndexTruth {
    fn score(&self, _centroids: &PointSet, labels: &[usize]) -> Result<f64> {
        if labels.len() != self.0.len() {
            return Err(Error::invalid("truth and assignment lengths differ"));
        }
        let hits = labels.iter().zip(&self.0).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / labels.len() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct KnnRun {
    /// Final state; its centroids are the last update's output.
    pub state: ClusteringState,
    /// Clusters of the final centroids.
    pub assignment: Assignment,
    pub trace: Vec<IterationRecord>,
    /// First iteration at which the clusters stopped changing, if reached.
    pub natural_endpoint: Option<usize>,
    pub stop_reason: StopReason,
}

impl KnnRun {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

struct Sweep {
    labels: Vec<usize>,
    best: Vec<f64>,
}

fn sweep(
    dataset: &PointSet,
    centroids: &PointSet,
    kind: DissimilarityKind,
    iteration: usize,
) -> Result<Sweep> {
    let n = dataset.len();
    let mut labels = Vec::with_capacity(n);
    let mut best = Vec::with_capacity(n);
    for (i, p) in dataset.rows().enumerate() {
        let mut arg = 0;
        let mut min = f64::INFINITY;
        for (j, c) in centroids.rows().enumerate() {
            let key = DrawKey {
                iteration: iteration as u64,
                point: i as u64,
                centroid: j as u64,
            };
            let d = kind.evaluate(p, c, key).map_err(|e| Error::AtPoint {
                index: i,
                source: Box::new(e),
            })?;
            // strict: an equal value never displaces a lower index
            if d < min {
                min = d;
                arg = j;
            }
        }
        labels.push(arg);
        best.push(min);
    }
    Ok(Sweep { labels, best })
}

fn objective(labels: &[usize], best: &[f64], k: usize) -> f64 {
    let mut sum = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (&l, &d) in labels.iter().zip(best) {
        sum[l] += d;
        count[l] += 1;
    }
    sum.iter()
        .zip(&count)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| s / c as f64)
        .sum()
}

/// Cluster update: each point's lowest-index nearest centroid.
pub fn assign_clusters(state: &ClusteringState) -> Result<Assignment> {
    sweep(&state.dataset, &state.centroids, state.dissimilarity, 0)
        .map(|s| Assignment { labels: s.labels })
}

/// Assigns arbitrary points against fixed centroids (a classification pass).
/// `iteration` only keys the draws of shot-sampled dissimilarities.
pub fn classify(
    points: &PointSet,
    centroids: &PointSet,
    kind: DissimilarityKind,
    iteration: usize,
) -> Result<Assignment> {
    if points.dim() != centroids.dim() {
        return Err(Error::invalid("point and centroid dimensions differ"));
    }
    sweep(points, centroids, kind, iteration).map(|s| Assignment { labels: s.labels })
}

/// Centroid update under `rule`. Empty clusters keep their current centroid.
pub fn update_centroids(
    state: &ClusteringState,
    assignment: &Assignment,
    rule: CentroidRule,
) -> Result<PointSet> {
    let dim = state.dataset.dim();
    let k = state.k();
    if assignment.labels.len() != state.dataset.len() {
        return Err(Error::invalid("assignment does not cover the dataset"));
    }
    if let Some(&bad) = assignment.labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!(
            "label {bad} out of range for k = {k}"
        )));
    }
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &l) in state.dataset.rows().zip(&assignment.labels) {
        counts[l] += 1;
        for (s, v) in sums[l * dim..(l + 1) * dim].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut next = state.centroids.clone();
    for j in 0..k {
        if counts[j] == 0 {
            continue;
        }
        let sum = &sums[j * dim..(j + 1) * dim];
        let out = next.row_mut(j);
        match rule {
            CentroidRule::EuclideanMean => {
                let inv = 1.0 / counts[j] as f64;
                for (o, s) in out.iter_mut().zip(sum) {
                    *o = s * inv;
                }
            }
            CentroidRule::SphericalProjectedMean(r) => {
                check_radius(r)?;
                let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::DegenerateCluster { cluster: j });
                }
                for (o, s) in out.iter_mut().zip(sum) {
                    *o = r * s / norm;
                }
            }
            CentroidRule::UnnormalizedSum => out.copy_from_slice(sum),
        }
    }
    Ok(next)
}

/// Runs the k-NN iteration from `state` until `stop` fires.
pub fn run_knn(
    state: &ClusteringState,
    rule: CentroidRule,
    stop: StopRule,
    scorer: Option<&dyn Scorer>,
) -> Result<KnnRun> {
    let k = state.k();
    let mut centroids = state.centroids.clone();
    let mut current = sweep(&state.dataset, &centroids, state.dissimilarity, 1)?;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut natural_endpoint = None;

    for it in 1..=stop.max_iterations {
        let started = Instant::now();
        let mean_dissimilarity = objective(&current.labels, &current.best, k);

        if stop.criterion == StopCriterion::DissimilarityIncrease {
            if let Some(prev) = trace.last() {
                if mean_dissimilarity > prev.mean_dissimilarity * (1.0 + INCREASE_EPS) {
                    let prev = prev.clone();
                    return Ok(KnnRun {
                        state: state.with_centroids(prev.centroids),
                        assignment: Assignment {
                            labels: prev.labels,
                        },
                        trace,
                        natural_endpoint,
                        stop_reason: StopReason::DissimilarityIncreased,
                    });
                }
            }
        }

        let staged = state.with_centroids(centroids);
        let assignment = Assignment {
            labels: std::mem::take(&mut current.labels),
        };
        let updated = update_centroids(&staged, &assignment, rule)?;
        let next = sweep(&state.dataset, &updated, state.dissimilarity, it + 1)?;
        let accuracy = scorer
            .map(|s| s.score(&staged.centroids, &assignment.labels))
            .transpose()?;
        let unchanged = next.labels == assignment.labels;

        trace.push(IterationRecord {
            iteration: it,
            centroids: staged.centroids,
            labels: assignment.labels,
            accuracy,
            mean_dissimilarity,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        centroids = updated;
        current = next;

        if unchanged && natural_endpoint.is_none() {
            natural_endpoint = Some(it);
        }
        if unchanged && stop.criterion != StopCriterion::MaxIterations {
            return Ok(KnnRun {
                state: state.with_centroids(centroids),
                assignment: Assignment {
                    labels: current.labels,
                },
                trace,
                natural_endpoint,
                stop_reason: StopReason::NaturalEndpoint,
            });
        }
    }

    Ok(KnnRun {
        state: state.with_centroids(centroids),
        assignment: Assignment {
            labels: current.labels,
        },
        trace,
        natural_endpoint,
        stop_reason: StopReason::IterationCap,
    })
}

/// How SQ-kNN evaluates its Bell-measurement dissimilarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqMode {
    Exact,
    Shots(ShotConfig),
}

/// The four named algorithms, as one value that can embed, run and classify.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    /// Euclidean k-means on the plane.
    Dec2,
    /// Projection onto `S²(r)`, then Euclidean k-means in 3D.
    Sc3 { radius: f64 },
    /// Projection onto `S²(r)`, Euclidean dissimilarity, centroids kept on the sphere.
    Sc2 { radius: f64 },
    /// Projection onto `S²(r)`, Bell-measurement dissimilarity, summed centroids.
    Sq { radius: f64, mode: SqMode },
}

impl Algorithm {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            Algorithm::Dec2 => None,
            Algorithm::Sc3 { radius }
            | Algorithm::Sc2 { radius }
            | Algorithm::Sq { radius, .. } => Some(radius),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Dec2 => "2dec",
            Algorithm::Sc3 { .. } => "3dsc",
            Algorithm::Sc2 { .. } => "2dsc",
            Algorithm::Sq {
                mode: SqMode::Exact,
                ..
            } => "sq-exact",
            Algorithm::Sq {
                mode: SqMode::Shots(_),
                ..
            } => "sq-shots",
        }
    }

    pub fn dissimilarity(&self) -> DissimilarityKind {
        match *self {
            Algorithm::Dec2 | Algorithm::Sc3 { .. } | Algorithm::Sc2 { .. } => {
                DissimilarityKind::Euclidean
            }
            Algorithm::Sq {
                mode: SqMode::Exact,
                ..
            } => DissimilarityKind::QuantumExact,
            Algorithm::Sq {
                mode: SqMode::Shots(cfg),
                ..
            } => DissimilarityKind::QuantumShots(cfg),
        }
    }

    pub fn centroid_rule(&self) -> CentroidRule {
        match *self {
            Algorithm::Dec2 | Algorithm::Sc3 { .. } => CentroidRule::EuclideanMean,
            Algorithm::Sc2 { radius } => CentroidRule::SphericalProjectedMean(radius),
            Algorithm::Sq { .. } => CentroidRule::UnnormalizedSum,
        }
    }

    pub fn dataspace(&self) -> Dataspace {
        match *self {
            Algorithm::Dec2 => Dataspace::Plane2D,
            Algorithm::Sc3 { .. } => Dataspace::Space3D,
            Algorithm::Sc2 { radius } | Algorithm::Sq { radius, .. } => Dataspace::Sphere(radius),
        }
    }

    /// Maps planar points into the algorithm's dataspace.
    pub fn embed(&self, points: &[Point2]) -> Result<PointSet> {
        match self.radius() {
            None => Ok(PointSet::from_points2(points)),
            Some(r) => {
                check_radius(r)?;
                let mut data = Vec::with_capacity(points.len() * 3);
                for (i, p) in points.iter().enumerate() {
                    let s = isp(*p, r).map_err(|e| Error::AtPoint {
                        index: i,
                        source: Box::new(e),
                    })?;
                    data.extend_from_slice(&s.to_array());
                }
                PointSet::new(3, data)
            }
        }
    }

    pub fn initial_state(&self, points: &[Point2], initial: &[Point2]) -> Result<ClusteringState> {
        ClusteringState::new(
            self.embed(points)?,
            self.embed(initial)?,
            self.dissimilarity(),
            self.dataspace(),
        )
    }

    pub fn run(
        &self,
        points: &[Point2],
        initial: &[Point2],
        stop: StopRule,
        scorer: Option<&dyn Scorer>,
    ) -> Result<KnnRun> {
        let state = self.initial_state(points, initial)?;
        run_knn(&state, self.centroid_rule(), stop, scorer)
    }

    /// One cluster-update pass of planar points against trained centroids.
    pub fn classify(
        &self,
        points: &[Point2],
        centroids: &PointSet,
        iteration: usize,
    ) -> Result<Assignment> {
        classify(
            &self.embed(points)?,
            centroids,
            self.dissimilarity(),
            iteration,
        )
    }
}

/// Euclidean k-means on the plane.
pub fn run_2dec_knn(points: &[Point2], initial: &[Point2], stop: StopRule) -> Result<KnnRun> {
    Algorithm::Dec2.run(points, initial, stop, None)
}

/// Stereographic projection followed by Euclidean k-means in 3D.
pub fn run_3dsc_knn(
    points: &[Point2],
    initial: &[Point2],
    r: f64,
    stop: StopRule,
) -> Result<KnnRun> {
    Algorithm::Sc3 { radius: r }.run(points, initial, stop, None)
}

/// Stereographic projection with spherical centroids (the quantum-inspired classical variant).
pub fn run_2dsc_knn(
    points: &[Point2],
    initial: &[Point2],
    r: f64,
    stop: StopRule,
) -> Result<KnnRun> {
    Algorithm::Sc2 { radius: r }.run(points, initial, stop, None)
}

/// Stereographic quantum k-NN.
pub fn run_sq_knn(
    points: &[Point2],
    initial: &[Point2],
    r: f64,
    stop: StopRule,
    mode: SqMode,
) -> Result<KnnRun> {
    Algorithm::Sq { radius: r, mode }.run(points, initial, stop, None)
}
