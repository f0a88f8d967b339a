//! Histogram, decision vector and the capacity/distortion model.
//!
//! A coding is described by a [`LinkVector`]: for every absolute error
//! magnitude `i` in `0..=n`, `x[i]` extra stego values are linked to it, so a
//! carrier of magnitude `i` can take one of `x[i] + 1` states. The shift every
//! magnitude inherits from smaller ones is the cumulative deviation
//! `y[i] = x[0] + ... + x[i-1]`.
//!
//! Distortion is kept exact internally. Every per-value term
//! `x²/3 + x/6 + xy + y²` has denominator 6, so [`distortion_sixths`] returns
//! six times the expected squared deviation as an integer.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when comparing a real-valued capacity against the payload.
pub const PAYLOAD_TOLERANCE: f64 = 1e-9;

/// Counts of absolute prediction-error magnitudes, indexed by magnitude.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbsErrorHistogram(Vec<u64>);

impl AbsErrorHistogram {
    /// Magnitude 0 is always present, so an empty vector becomes `[0]`.
    pub fn new(mut counts: Vec<u64>) -> Self {
        if counts.is_empty() {
            counts.push(0);
        }
        Self(counts)
    }

    /// Builds a histogram from a list of absolute magnitudes.
    pub fn from_magnitudes<I: IntoIterator<Item = u32>>(magnitudes: I) -> Self {
        let mut counts = vec![0u64];
        for m in magnitudes {
            let m = m as usize;
            if m >= counts.len() {
                counts.resize(m + 1, 0);
            }
            counts[m] += 1;
        }
        Self(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Count for `magnitude`, zero beyond the stored range.
    pub fn count(&self, magnitude: usize) -> u64 {
        self.0.get(magnitude).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Returns a copy extended with zero bins up to `len` entries.
    pub fn padded_to(&self, len: usize) -> Self {
        let mut counts = self.0.clone();
        if counts.len() < len {
            counts.resize(len, 0);
        }
        Self(counts)
    }

    /// Reads the `magnitude,count` CSV format. Magnitudes must be contiguous
    /// from 0.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "magnitude" || &headers[1] != "count" {
            return Err(Error::HistogramCsv(format!(
                "expected header `magnitude,count`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut counts = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::HistogramCsv(format!(
                    "row {} has {} fields",
                    line + 1,
                    record.len()
                )));
            }
            let magnitude: usize = record[0].parse().map_err(|_| {
                Error::HistogramCsv(format!("row {}: bad magnitude `{}`", line + 1, &record[0]))
            })?;
            let count: u64 = record[1].parse().map_err(|_| {
                Error::HistogramCsv(format!("row {}: bad count `{}`", line + 1, &record[1]))
            })?;
            if magnitude != counts.len() {
                return Err(Error::HistogramCsv(format!(
                    "row {}: magnitude {} breaks the contiguous sequence, expected {}",
                    line + 1,
                    magnitude,
                    counts.len()
                )));
            }
            counts.push(count);
        }
        if counts.is_empty() {
            return Err(Error::HistogramCsv("no rows".into()));
        }
        Ok(Self(counts))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["magnitude", "count"])?;
        for (m, c) in self.0.iter().enumerate() {
            wtr.write_record([m.to_string(), c.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Extra cover-to-stego links per magnitude.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkVector(Vec<u32>);

impl LinkVector {
    pub fn new(x: Vec<u32>) -> Self {
        Self(x)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest mapped magnitude, `len - 1`.
    pub fn max_magnitude(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Total number of extra links, `Σ x_i`.
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&v| v as u64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn respects_quota(&self, theta: u32) -> bool {
        self.total() <= theta as u64
    }

    /// Parses `"0,1,0"` style lists.
    pub fn parse_list(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('[').trim_end_matches(']');
        if s.trim().is_empty() {
            return Err(Error::InvalidInput("empty link vector".into()));
        }
        s.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidInput(format!("bad link count `{}`", tok.trim())))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl From<Vec<u32>> for LinkVector {
    fn from(x: Vec<u32>) -> Self {
        Self(x)
    }
}

impl std::ops::Index<usize> for LinkVector {
    type Output = u32;
    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

/// One instance of the coding problem: minimise distortion over
/// `x[0..=n]` subject to capacity `>= payload` and `Σ x <= theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub theta: u32,
    pub payload: f64,
    pub histogram: AbsErrorHistogram,
}

impl ProblemSpec {
    pub fn new(histogram: AbsErrorHistogram, n: usize, theta: u32, payload: f64) -> Result<Self> {
        if n + 1 > histogram.len() {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                found: histogram.len(),
            });
        }
        if !(payload >= 0.0) || !payload.is_finite() {
            return Err(Error::InvalidInput(format!("payload must be a finite non-negative number, got {payload}")));
        }
        Ok(Self {
            n,
            theta,
            payload,
            histogram,
        })
    }

    /// Number of decision variables, `n + 1`.
    pub fn values(&self) -> usize {
        self.n + 1
    }

    /// Counts `a_0..=a_n`.
    pub fn counts(&self) -> &[u64] {
        &self.histogram.counts()[..=self.n]
    }

    pub fn with_payload(&self, payload: f64) -> Self {
        Self {
            payload,
            ..self.clone()
        }
    }

    fn check_dims(&self, x: &LinkVector) -> Result<()> {
        if x.len() != self.values() {
            return Err(Error::DimensionMismatch {
                expected: self.values(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// Capacity, distortion and feasibility of a candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub capacity: f64,
    pub distortion: f64,
    /// Six times the distortion, exact.
    #[serde(skip)]
    pub distortion_sixths: u128,
    pub feasible: bool,
}

/// `y_i = Σ_{j<i} x_j`.
pub fn cumulative_deviations(x: &LinkVector) -> Vec<u64> {
    let mut acc = 0u64;
    x.as_slice()
        .iter()
        .map(|&xi| {
            let y = acc;
            acc += xi as u64;
            y
        })
        .collect()
}

fn check_hist(hist: &AbsErrorHistogram, x: &LinkVector) -> Result<()> {
    if x.len() > hist.len() {
        return Err(Error::DimensionMismatch {
            expected: hist.len(),
            found: x.len(),
        });
    }
    Ok(())
}

/// `Σ a_i log2(x_i + 1)` over the magnitudes covered by `x`.
pub fn capacity(hist: &AbsErrorHistogram, x: &LinkVector) -> Result<f64> {
    check_hist(hist, x)?;
    Ok(capacity_unchecked(hist.counts(), x.as_slice()))
}

pub(crate) fn capacity_unchecked(counts: &[u64], x: &[u32]) -> f64 {
    x.iter()
        .zip(counts)
        .filter(|(&xi, _)| xi > 0)
        .map(|(&xi, &a)| a as f64 * ((xi + 1) as f64).log2())
        .fold(0.0, |acc, c| acc + c)
}

/// Largest capacity reachable with `Σ x <= theta`, by dynamic programming
/// over the link budget.
pub fn max_capacity_dp(spec: &ProblemSpec) -> f64 {
    let theta = spec.theta as usize;
    let mut best = vec![0.0f64; theta + 1];
    for &a in spec.counts() {
        let prev = best.clone();
        for b in 0..=theta {
            for k in 1..=b {
                let c = prev[b - k] + a as f64 * ((k + 1) as f64).log2();
                if c > best[b] {
                    best[b] = c;
                }
            }
        }
    }
    best[theta]
}

/// Six times the mean squared deviation of one magnitude:
/// `2x² + x + 6xy + 6y²`.
pub fn per_value_distortion_sixths(xi: u64, yi: u64) -> u128 {
    let (x, y) = (xi as u128, yi as u128);
    2 * x * x + x + 6 * x * y + 6 * y * y
}

/// `x²/3 + x/6 + xy + y²`, the mean of `(d + y)²` over `d = 0..=x`.
pub fn per_value_distortion(xi: u64, yi: u64) -> f64 {
    per_value_distortion_sixths(xi, yi) as f64 / 6.0
}

/// Exact `6 · D(x)`.
pub fn distortion_sixths(hist: &AbsErrorHistogram, x: &LinkVector) -> Result<u128> {
    check_hist(hist, x)?;
    Ok(distortion_sixths_unchecked(hist.counts(), x.as_slice()))
}

pub(crate) fn distortion_sixths_unchecked(counts: &[u64], x: &[u32]) -> u128 {
    let mut y = 0u64;
    let mut total = 0u128;
    for (&xi, &a) in x.iter().zip(counts) {
        if a > 0 && (xi > 0 || y > 0) {
            total += a as u128 * per_value_distortion_sixths(xi as u64, y);
        }
        y += xi as u64;
    }
    total
}

/// Expected total squared deviation `Σ a_i (x_i²/3 + x_i/6 + x_i y_i + y_i²)`.
pub fn distortion(hist: &AbsErrorHistogram, x: &LinkVector) -> Result<f64> {
    Ok(sixths_to_f64(distortion_sixths(hist, x)?))
}

pub fn sixths_to_f64(sixths: u128) -> f64 {
    sixths as f64 / 6.0
}

pub fn evaluate(spec: &ProblemSpec, x: &LinkVector) -> Result<EvalResult> {
    spec.check_dims(x)?;
    Ok(evaluate_unchecked(spec, x.as_slice()))
}

pub(crate) fn evaluate_unchecked(spec: &ProblemSpec, x: &[u32]) -> EvalResult {
    let counts = spec.counts();
    let capacity = capacity_unchecked(counts, x);
    let sixths = distortion_sixths_unchecked(counts, x);
    let quota_ok = x.iter().map(|&v| v as u64).sum::<u64>() <= spec.theta as u64;
    EvalResult {
        capacity,
        distortion: sixths_to_f64(sixths),
        distortion_sixths: sixths,
        feasible: quota_ok && capacity >= spec.payload - PAYLOAD_TOLERANCE,
    }
}
