//! A mergeable quantile sketch with bounded rank error.
//!
//! The sketch keeps a ladder of buffers. Level `h` holds samples that each
//! stand for `2^h` original observations. When a level fills up it is sorted
//! and every other sample is promoted to the next level, alternating between
//! the odd and even positions on successive compactions so the rank errors
//! of consecutive compactions cancel instead of accumulating. One compaction
//! at level `h` perturbs any rank by at most `2^h`, and a level compacts at
//! most `n / (k·2^h)` times, which keeps the total rank error at a small
//! multiple of `n / k`.
//!
//! Everything is deterministic: the same insert/merge sequence produces the
//! same state, which the pipeline relies on for reproducible output files.

use serde::{Deserialize, Serialize};

/// Default rank-error target.
pub const DEFAULT_EPSILON: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSketch {
    /// Per-level buffer capacity; compaction triggers at this size.
    k: usize,
    /// Total observations represented.
    count: u64,
    /// `levels[h]` holds samples of weight `2^h`, unsorted between compactions.
    levels: Vec<Vec<f64>>,
    /// Compaction parity per level; flips on every compaction.
    parity: Vec<bool>,
}

impl Default for QuantileSketch {
    fn default() -> Self {
        Self::new(DEFAULT_EPSILON)
    }
}

impl QuantileSketch {
    /// A sketch targeting the given rank-error fraction.
    pub fn new(epsilon: f64) -> Self {
        assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must be in (0,1)");
        let k = ((2.0 / epsilon).ceil() as usize).max(16);
        Self::with_buffer_size(k + k % 2)
    }

    /// A sketch with an explicit per-level buffer size (must be even).
    pub fn with_buffer_size(k: usize) -> Self {
        assert!(k >= 2 && k.is_multiple_of(2), "buffer size must be even and >= 2");
        Self { k, count: 0, levels: vec![Vec::new()], parity: vec![false] }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Inserts one observation. Non-finite values are ignored.
    pub fn insert(&mut self, value: f64) {
        if !value.is_finite() {
            debug_assert!(false, "non-finite sample {value}");
            return;
        }
        self.levels[0].push(value);
        self.count += 1;
        if self.levels[0].len() >= self.k {
            self.compact(0);
        }
    }

    /// Compacts level `h`: promotes half of an even-sized prefix of the
    /// sorted buffer to level `h+1` at doubled weight. An odd leftover stays
    /// behind so total weight is conserved exactly.
    fn compact(&mut self, h: usize) {
        if self.levels.len() == h + 1 {
            self.levels.push(Vec::new());
            self.parity.push(false);
        }
        let mut buf = std::mem::take(&mut self.levels[h]);
        buf.sort_unstable_by(f64::total_cmp);
        if !buf.len().is_multiple_of(2) {
            // Keep the largest sample at this level.
            let leftover = buf.pop().unwrap();
            self.levels[h].push(leftover);
        }
        let offset = usize::from(self.parity[h]);
        self.parity[h] = !self.parity[h];
        let promoted = buf.iter().skip(offset).step_by(2);
        self.levels[h + 1].extend(promoted);
        if self.levels[h + 1].len() >= self.k {
            self.compact(h + 1);
        }
    }

    /// Merges another sketch into this one. Merging shards and querying is
    /// equivalent, up to the rank-error bound, to sketching the concatenated
    /// input. The operation is deterministic in the operand order.
    pub fn merge(&mut self, other: &QuantileSketch) {
        self.count += other.count;
        for (h, level) in other.levels.iter().enumerate() {
            while self.levels.len() <= h {
                self.levels.push(Vec::new());
                self.parity.push(false);
            }
            self.levels[h].extend_from_slice(level);
        }
        let mut h = 0;
        while h < self.levels.len() {
            if self.levels[h].len() >= self.k {
                self.compact(h);
            }
            h += 1;
        }
    }

    /// All retained samples with their weights, sorted by value.
    fn weighted_samples(&self) -> Vec<(f64, u64)> {
        let mut samples: Vec<(f64, u64)> = Vec::new();
        for (h, level) in self.levels.iter().enumerate() {
            let w = 1u64 << h;
            samples.extend(level.iter().map(|&v| (v, w)));
        }
        samples.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        samples
    }

    /// The empirical quantile at probability `p`: the smallest retained value
    /// whose cumulative weight reaches `ceil(p * count)`.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let samples = self.weighted_samples();
        let target = ((p * self.count as f64).ceil() as u64).clamp(1, self.count);
        let mut cumulative = 0u64;
        for (value, weight) in &samples {
            cumulative += weight;
            if cumulative >= target {
                return Some(*value);
            }
        }
        samples.last().map(|(v, _)| *v)
    }

    /// Quantiles at many probabilities in one sweep over the samples.
    /// `ps` must be sorted ascending.
    pub fn quantiles(&self, ps: &[f64]) -> Option<Vec<f64>> {
        if self.is_empty() {
            return None;
        }
        let samples = self.weighted_samples();
        let mut out = Vec::with_capacity(ps.len());
        let mut cumulative = 0u64;
        let mut idx = 0usize;
        for &p in ps {
            let target = ((p * self.count as f64).ceil() as u64).clamp(1, self.count);
            while cumulative < target && idx < samples.len() {
                cumulative += samples[idx].1;
                idx += 1;
            }
            out.push(samples[idx.saturating_sub(1).min(samples.len() - 1)].0);
        }
        Some(out)
    }
}
