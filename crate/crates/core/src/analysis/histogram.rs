use serde::Serialize;

use super::{AnalysisError, Result};

/// How the edge range of a histogram is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HistogramRange {
    /// From the smallest to the largest sample. When the samples agree to
    /// within `1e-9` relative (one value up to rounding), the range is one
    /// unit wide with their midpoint at the centre of the middle bin.
    Auto,
    Fixed(f64, f64),
}

/// Uniform-bin histogram. The last bin is closed on the right, so a sample
/// equal to the upper edge is counted in range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
    /// Sum of the in-range samples, for the mean.
    sum: f64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(AnalysisError::InvalidHistogram(format!("{bins} bins over ({lo}, {hi})")));
        }
        Ok(Self { lo, hi, counts: vec![0; bins], underflow: 0, overflow: 0, sum: 0.0 })
    }

    /// Builds a histogram of `(value, multiplicity)` pairs.
    pub fn from_weighted(samples: &[(f64, u64)], bins: usize, range: HistogramRange) -> Result<Self> {
        let (lo, hi) = match range {
            HistogramRange::Fixed(lo, hi) => (lo, hi),
            HistogramRange::Auto => {
                let finite = samples.iter().filter(|(x, n)| x.is_finite() && *n > 0).map(|s| s.0);
                let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
                if lo > hi {
                    return Err(AnalysisError::EmptyInput("no finite samples"));
                }
                if hi - lo <= 1e-9 * lo.abs().max(hi.abs()).max(1.0) {
                    let mid = lo + (hi - lo) / 2.0;
                    let lo = mid - ((bins / 2) as f64 + 0.5) / bins.max(1) as f64;
                    (lo, lo + 1.0)
                } else {
                    (lo, hi)
                }
            }
        };
        let mut h = Self::new(lo, hi, bins)?;
        for &(x, n) in samples {
            h.add_n(x, n);
        }
        Ok(h)
    }

    pub fn from_samples(samples: &[f64], bins: usize, range: HistogramRange) -> Result<Self> {
        let weighted: Vec<(f64, u64)> = samples.iter().map(|&x| (x, 1)).collect();
        Self::from_weighted(&weighted, bins, range)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    /// The `bins + 1` edges.
    pub fn edges(&self) -> Vec<f64> {
        let n = self.bins();
        (0..=n).map(|i| self.edge(i)).collect()
    }

    fn edge(&self, i: usize) -> f64 {
        if i == self.bins() {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (i as f64 / self.bins() as f64)
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    /// Every counted sample, in range or not.
    pub fn total(&self) -> u64 {
        self.in_range() + self.underflow + self.overflow
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the bin holding `x`, if it is in range.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let i = ((x - self.lo) / (self.hi - self.lo) * self.bins() as f64) as usize;
        Some(i.min(self.bins() - 1))
    }

    pub fn add(&mut self, x: f64) -> bool {
        self.add_n(x, 1)
    }

    /// Counts `x` `n` times. Non-finite samples are rejected and not
    /// counted.
    pub fn add_n(&mut self, x: f64, n: u64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match self.bin_of(x) {
            Some(i) => {
                self.counts[i] += n;
                self.sum += x * n as f64;
            }
            None if x < self.lo => self.underflow += n,
            None => self.overflow += n,
        }
        true
    }

    /// Adds the counts of a histogram with identical edges.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.lo != other.lo || self.hi != other.hi || self.bins() != other.bins() {
            return Err(AnalysisError::InvalidHistogram("merging histograms with different edges".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self.sum += other.sum;
        Ok(())
    }

    /// Mean of the in-range samples.
    pub fn mean(&self) -> Option<f64> {
        let n = self.in_range();
        (n > 0).then(|| self.sum / n as f64)
    }

    /// From the lower edge of the first occupied bin to the upper edge of
    /// the last one.
    pub fn occupied_range(&self) -> Option<(f64, f64)> {
        let first = self.counts.iter().position(|&c| c > 0)?;
        let last = self.counts.iter().rposition(|&c| c > 0)?;
        Some((self.edge(first), self.edge(last + 1)))
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Occupied width divided by the magnitude of the mean.
    pub fn relative_support(&self) -> Option<f64> {
        let (a, b) = self.occupied_range()?;
        let m = self.mean()?;
        (m != 0.0).then(|| (b - a) / m.abs())
    }

    /// `(bin_lo, bin_hi, count)` per bin.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| (self.edge(i), self.edge(i + 1), c))
    }
}
