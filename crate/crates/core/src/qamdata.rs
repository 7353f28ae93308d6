//! 64-QAM alphabet, synthetic channel data, decoding metrics and dataset files.
//!
//! Symbols sit on the 8×8 grid `{±1, ±3, ±5, ±7}²`, scaled to unit mean power.
//! Each symbol carries a 6-bit Gray label: the three most significant bits are
//! the reflected Gray code of the column (in-phase level), the three least
//! significant bits that of the row (quadrature level).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::clustering::{Algorithm, PointSet, Scorer};
use crate::error::{Error, Result};
use crate::geometry::{stereographic, Point2, Point3};
use crate::seed;

pub const BITS_PER_SYMBOL: usize = 6;
const GRID: usize = 8;

/// Ordered constellation symbols and their bit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    symbols: Vec<Point2>,
    bits: Vec<u8>,
}

/// Received samples with their transmitted labels.
#[derive(Debug, Clone, PartialEq)]
pub struct QamDataset {
    pub rx: Vec<Point2>,
    pub labels: Vec<u8>,
    pub alphabet: Alphabet,
    pub launch_power_dbm: Option<f64>,
    /// Measured against the transmitted symbols at generation time; `None` when
    /// unknown (loaded from file) or infinite (noiseless channel).
    pub snr_db: Option<f64>,
}

/// Additive white Gaussian noise plus a fixed rotation about the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Noise standard deviation per axis.
    pub sigma: f64,
    pub phase_rotation: f64,
    pub seed: u64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Metrics {
    pub symbol_accuracy: f64,
    pub symbol_error_rate: f64,
    pub bit_error_rate: f64,
}

/// Where a set of centroids lives, for mapping them back to the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CentroidSpace {
    Plane,
    /// 3D centroids, read through the forward projection of `S²(radius)`.
    Sphere {
        radius: f64,
    },
}

pub fn gray(i: u8) -> u8 {
    i ^ (i >> 1)
}

impl Alphabet {
    pub fn new(symbols: Vec<Point2>, bits: Vec<u8>) -> Result<Self> {
        if symbols.is_empty() || symbols.len() != bits.len() {
            return Err(Error::invalid(format!(
                "alphabet needs matching nonempty symbol and label lists, got {} and {}",
                symbols.len(),
                bits.len()
            )));
        }
        if let Some(p) = symbols.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("non-finite alphabet symbol {p:?}")));
        }
        if let Some(b) = bits.iter().find(|b| **b >= 1 << BITS_PER_SYMBOL) {
            return Err(Error::invalid(format!("label {b} does not fit in 6 bits")));
        }
        let distinct: HashSet<_> = symbols
            .iter()
            .map(|p| (p.x.to_bits(), p.y.to_bits()))
            .collect();
        if distinct.len() != symbols.len() {
            return Err(Error::invalid("alphabet symbols are not distinct"));
        }
        let labels: HashSet<_> = bits.iter().collect();
        if labels.len() != bits.len() {
            return Err(Error::invalid("alphabet labels are not unique"));
        }
        Ok(Alphabet { symbols, bits })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Point2] {
        &self.symbols
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn index_of(&self, bits: u8) -> Option<usize> {
        self.bits.iter().position(|b| *b == bits)
    }

    pub fn mean_power(&self) -> f64 {
        self.symbols.iter().map(|p| p.norm_sq()).sum::<f64>() / self.len() as f64
    }

    /// The same alphabet rescaled to the given mean power.
    pub fn with_mean_power(&self, power: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::invalid(format!(
                "mean power must be positive, got {power}"
            )));
        }
        let k = (power / self.mean_power()).sqrt();
        let symbols = self
            .symbols
            .iter()
            .map(|p| Point2::new(p.x * k, p.y * k))
            .collect();
        Ok(Alphabet {
            symbols,
            bits: self.bits.clone(),
        })
    }
}

/// Square 64-QAM with unit mean power. Symbol `8·col + row` has in-phase level
/// `2·col − 7` and quadrature level `2·row − 7` (before scaling).
pub fn build_alphabet64() -> Alphabet {
    // mean of (2c−7)² over c is 21, so mean power over both axes is 42
    let k = 1.0 / 42f64.sqrt();
    let mut symbols = Vec::with_capacity(GRID * GRID);
    let mut bits = Vec::with_capacity(GRID * GRID);
    for col in 0..GRID as u8 {
        for row in 0..GRID as u8 {
            let level = |i: u8| (2.0 * f64::from(i) - 7.0) * k;
            symbols.push(Point2::new(level(col), level(row)));
            bits.push(gray(col) << 3 | gray(row));
        }
    }
    Alphabet { symbols, bits }
}

impl ChannelConfig {
    pub fn new(sigma: f64, phase_rotation: f64, seed: u64, count: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(format!(
                "sigma must be finite and non-negative, got {sigma}"
            )));
        }
        if !phase_rotation.is_finite() {
            return Err(Error::invalid("phase rotation must be finite"));
        }
        Ok(ChannelConfig {
            sigma,
            phase_rotation,
            seed,
            count,
        })
    }
}

/// Transmits uniformly random symbols through the channel.
pub fn generate_dataset(alphabet: &Alphabet, cfg: &ChannelConfig) -> Result<QamDataset> {
    let cfg = ChannelConfig::new(cfg.sigma, cfg.phase_rotation, cfg.seed, cfg.count)?;
    let mut rng = seed::rng_from(cfg.seed);
    let noise = Normal::new(0.0, cfg.sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rx = Vec::with_capacity(cfg.count);
    let mut tx = Vec::with_capacity(cfg.count);
    let mut labels = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let j = rng.random_range(0..alphabet.len());
        let s = alphabet.symbols[j];
        let r = s.rotated(cfg.phase_rotation);
        let (nx, ny) = (noise.sample(&mut rng), noise.sample(&mut rng));
        rx.push(Point2::new(r.x + nx, r.y + ny));
        tx.push(s);
        labels.push(alphabet.bits[j]);
    }
    let snr_db = if rx.is_empty() {
        None
    } else {
        compute_snr(&rx, &tx).ok()
    };
    Ok(QamDataset {
        rx,
        labels,
        alphabet: alphabet.clone(),
        launch_power_dbm: None,
        snr_db,
    })
}

/// `10·log10(mean‖rx‖² / mean‖rx − tx‖²)`.
pub fn compute_snr(rx: &[Point2], tx: &[Point2]) -> Result<f64> {
    if rx.is_empty() || rx.len() != tx.len() {
        return Err(Error::invalid(format!(
            "SNR needs equal nonempty lists, got {} and {}",
            rx.len(),
            tx.len()
        )));
    }
    let signal: f64 = rx.iter().map(|p| p.norm_sq()).sum();
    let noise: f64 = rx
        .iter()
        .zip(tx)
        .map(|(r, t)| Point2::new(r.x - t.x, r.y - t.y).norm_sq())
        .sum();
    if noise == 0.0 {
        return Err(Error::InfiniteSnr);
    }
    Ok(10.0 * (signal / noise).log10())
}

pub fn dbm_to_watts(p: f64) -> f64 {
    10f64.powf((p - 30.0) / 10.0)
}

/// Per-axis noise deviation at which [`compute_snr`] expects `snr_db` for
/// symbols of mean power `mean_power`. Received power includes the noise, so
/// `2σ² = Es / (10^(snr/10) − 1)`, which needs a positive SNR.
pub fn sigma_for_snr(snr_db: f64, mean_power: f64) -> Result<f64> {
    if !(snr_db.is_finite() && snr_db > 0.0) {
        return Err(Error::invalid(format!(
            "target SNR must be positive dB, got {snr_db}"
        )));
    }
    if !(mean_power.is_finite() && mean_power > 0.0) {
        return Err(Error::invalid("mean power must be positive"));
    }
    Ok((mean_power / (10f64.powf(snr_db / 10.0) - 1.0) / 2.0).sqrt())
}

impl CentroidSpace {
    pub fn of(algorithm: &Algorithm) -> Self {
        match algorithm.radius() {
            None => CentroidSpace::Plane,
            Some(radius) => CentroidSpace::Sphere { radius },
        }
    }

    fn to_plane(self, c: &[f64]) -> Result<Point2> {
        match (self, c) {
            (CentroidSpace::Plane, &[x, y]) => Ok(Point2::new(x, y)),
            (CentroidSpace::Sphere { radius }, &[x, y, z]) => {
                stereographic(Point3::new(x, y, z), radius)
            }
            _ => Err(Error::invalid(format!(
                "centroid of dimension {} does not match {self:?}",
                c.len()
            ))),
        }
    }
}

/// Matches every centroid to its nearest alphabet symbol in the plane and
/// returns the symbol index per centroid. Two centroids claiming one symbol is
/// an error rather than a silent tie-break.
pub fn match_centroids(
    centroids: &PointSet,
    space: CentroidSpace,
    alphabet: &Alphabet,
) -> Result<Vec<usize>> {
    if centroids.len() != alphabet.len() {
        return Err(Error::invalid(format!(
            "{} centroids cannot demap onto {} symbols",
            centroids.len(),
            alphabet.len()
        )));
    }
    let mut owner: Vec<Option<usize>> = vec![None; alphabet.len()];
    let mut matched = Vec::with_capacity(centroids.len());
    for (j, c) in centroids.rows().enumerate() {
        let p = space.to_plane(c).map_err(|e| Error::AtPoint {
            index: j,
            source: Box::new(e),
        })?;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (s, a) in alphabet.symbols.iter().enumerate() {
            let d = (p.x - a.x).powi(2) + (p.y - a.y).powi(2);
            if d < best_d {
                best = s;
                best_d = d;
            }
        }
        if let Some(first) = owner[best] {
            return Err(Error::AmbiguousDemap {
                symbol: best,
                first,
                second: j,
            });
        }
        owner[best] = Some(j);
        matched.push(best);
    }
    Ok(matched)
}

/// Bit label of every point, inherited from its centroid's matched symbol.
pub fn demap(
    labels: &[usize],
    centroids: &PointSet,
    space: CentroidSpace,
    alphabet: &Alphabet,
) -> Result<Vec<u8>> {
    let matched = match_centroids(centroids, space, alphabet)?;
    labels
        .iter()
        .map(|&l| {
            matched
                .get(l)
                .map(|&s| alphabet.bits[s])
                .ok_or_else(|| Error::invalid(format!("label {l} has no centroid")))
        })
        .collect()
}

pub fn metrics(predicted: &[u8], truth: &[u8]) -> Result<Metrics> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::invalid(format!(
            "metrics need equal nonempty label lists, got {} and {}",
            predicted.len(),
            truth.len()
        )));
    }
    let n = truth.len() as f64;
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count() as f64;
    let bit_errors: u32 = predicted
        .iter()
        .zip(truth)
        .map(|(a, b)| (a ^ b).count_ones())
        .sum();
    Ok(Metrics {
        symbol_accuracy: hits / n,
        symbol_error_rate: 1.0 - hits / n,
        bit_error_rate: f64::from(bit_errors) / (n * BITS_PER_SYMBOL as f64),
    })
}

/// Scores a run whose centroid `j` started at alphabet symbol `j` and keeps its bit label.
#[derive(Debug, Clone)]
pub struct BitTruth {
    truth: Vec<u8>,
    centroid_bits: Vec<u8>,
}

impl BitTruth {
    pub fn new(truth: Vec<u8>, alphabet: &Alphabet) -> Self {
        BitTruth {
            truth,
            centroid_bits: alphabet.bits.clone(),
        }
    }

    pub fn predicted(&self, labels: &[usize]) -> Result<Vec<u8>> {
        labels
            .iter()
            .map(|&l| {
                self.centroid_bits
                    .get(l)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("label {l} has no centroid")))
            })
            .collect()
    }

    pub fn metrics(&self, labels: &[usize]) -> Result<Metrics> {
        metrics(&self.predicted(labels)?, &self.truth)
    }
}

impl Scorer for BitTruth {
    fn score(&self, _centroids: &PointSet, labels: &[usize]) -> Result<f64> {
        Ok(self.metrics(labels)?.symbol_accuracy)
    }
}

impl QamDataset {
    pub fn new(rx: Vec<Point2>, labels: Vec<u8>, alphabet: Alphabet) -> Result<Self> {
        if rx.len() != labels.len() {
            return Err(Error::invalid("rx and labels differ in length"));
        }
        if let Some(b) = labels.iter().find(|b| alphabet.index_of(**b).is_none()) {
            return Err(Error::invalid(format!(
                "label {b:06b} is not in the alphabet"
            )));
        }
        Ok(QamDataset {
            rx,
            labels,
            alphabet,
            launch_power_dbm: None,
            snr_db: None,
        })
    }

    pub fn len(&self) -> usize {
        self.rx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rx.is_empty()
    }

    fn pick(&self, idx: &[usize]) -> QamDataset {
        QamDataset {
            rx: idx.iter().map(|&i| self.rx[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            alphabet: self.alphabet.clone(),
            launch_power_dbm: self.launch_power_dbm,
            snr_db: self.snr_db,
        }
    }

    /// `n` distinct samples chosen at random, in random order.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<QamDataset> {
        if n > self.len() {
            return Err(Error::invalid(format!(
                "cannot draw {n} of {} samples",
                self.len()
            )));
        }
        let idx = index::sample(&mut seed::rng_from(seed), self.len(), n).into_vec();
        Ok(self.pick(&idx))
    }
}

/// Shuffles the dataset and cuts it at `round(fraction · n)`.
pub fn split_train_test(
    data: &QamDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(QamDataset, QamDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = data.len();
    let cut = (train_fraction * n as f64).round() as usize;
    if cut == 0 || cut == n {
        return Err(Error::invalid(format!(
            "fraction {train_fraction} of {n} samples leaves one side empty"
        )));
    }
    let idx = index::sample(&mut seed::rng_from(seed), n, n).into_vec();
    Ok((data.pick(&idx[..cut]), data.pick(&idx[cut..])))
}

fn bits_string(b: u8) -> String {
    format!("{b:06b}")
}

fn parse_bits(s: &str, line: usize) -> Result<u8> {
    if s.len() != BITS_PER_SYMBOL || !s.bytes().all(|c| c == b'0' || c == b'1') {
        return Err(Error::Parse {
            line,
            message: format!("bits must be 6 binary digits, got {s:?}"),
        });
    }
    u8::from_str_radix(s, 2).map_err(|e| Error::Parse {
        line,
        message: e.to_string(),
    })
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("{what}: not a number: {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{what}: non-finite value"),
        });
    }
    Ok(v)
}

fn float(x: f64) -> String {
    // 17 significant digits round-trip every f64
    format!("{x:.16e}")
}

/// Reads a headed CSV, checking the header and field count, and hands each
/// row with its 1-based line number to `row`.
fn read_csv(
    path: &Path,
    header: &[&str],
    mut row: impl FnMut(&csv::StringRecord, usize) -> Result<()>,
) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = rdr.records();
    match records.next() {
        Some(h) => {
            let h = h?;
            if h.iter().map(str::trim).ne(header.iter().copied()) {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "expected header {:?}, got {:?}",
                        header.join(","),
                        h.iter().collect::<Vec<_>>().join(",")
                    ),
                });
            }
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    }
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", header.len(), rec.len()),
            });
        }
        row(&rec, line)?;
    }
    Ok(())
}

const DATASET_HEADER: [&str; 3] = ["rx_re", "rx_im", "bits"];
const ALPHABET_HEADER: [&str; 4] = ["index", "re", "im", "bits"];

/// Writes `rx_re,rx_im,bits`. Launch power and SNR are not part of the format.
pub fn save_dataset(data: &QamDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", DATASET_HEADER.join(","))?;
    for (p, b) in data.rx.iter().zip(&data.labels) {
        writeln!(w, "{},{},{}", float(p.x), float(p.y), bits_string(*b))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset file against the given alphabet.
pub fn load_dataset_with(path: &Path, alphabet: &Alphabet) -> Result<QamDataset> {
    let mut rx = Vec::new();
    let mut labels = Vec::new();
    read_csv(path, &DATASET_HEADER, |rec, line| {
        let p = Point2::new(
            parse_f64(&rec[0], line, "rx_re")?,
            parse_f64(&rec[1], line, "rx_im")?,
        );
        let b = parse_bits(rec[2].trim(), line)?;
        if alphabet.index_of(b).is_none() {
            return Err(Error::Parse {
                line,
                message: format!("label {b:06b} is not in the alphabet"),
            });
        }
        rx.push(p);
        labels.push(b);
        Ok(())
    })?;
    QamDataset::new(rx, labels, alphabet.clone())
}

/// Reads a dataset file labelled with the standard 64-QAM alphabet.
pub fn load_dataset(path: &Path) -> Result<QamDataset> {
    load_dataset_with(path, &build_alphabet64())
}

pub fn save_alphabet(alphabet: &Alphabet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", ALPHABET_HEADER.join(","))?;
    for (i, (p, b)) in alphabet.symbols.iter().zip(&alphabet.bits).enumerate() {
        writeln!(w, "{i},{},{},{}", float(p.x), float(p.y), bits_string(*b))?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_alphabet(path: &Path) -> Result<Alphabet> {
    let mut symbols = Vec::new();
    let mut bits = Vec::new();
    read_csv(path, &ALPHABET_HEADER, |rec, line| {
        let i: usize = rec[0].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad index {:?}", &rec[0]),
        })?;
        if i != symbols.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected index {}, got {i}", symbols.len()),
            });
        }
        symbols.push(Point2::new(
            parse_f64(&rec[1], line, "re")?,
            parse_f64(&rec[2], line, "im")?,
        ));
        bits.push(parse_bits(rec[3].trim(), line)?);
        Ok(())
    })?;
    Alphabet::new(symbols, bits)
}
