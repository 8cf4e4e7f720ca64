//! Rolling-window estimation of per-path delay statistics.
//!
//! The sender keeps the most recent inter-packet delays of each path (5000 by
//! default, or fewer early on) and derives the mean, the minimum and the 95th
//! percentile from them. Those become `mu`, `a` and `b` of [`PathParams`].

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scheduler::{compute_w, PathParams};

pub const DEFAULT_WINDOW: usize = 5000;

/// Summary statistics of a delay distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    pub mean_ms: f64,
    pub stddev_ms: f64,
    pub min_ms: f64,
    pub p95_ms: f64,
}

impl DelayStats {
    /// Statistics of a constant delay.
    pub fn constant(delay_ms: f64) -> Self {
        DelayStats {
            mean_ms: delay_ms,
            stddev_ms: 0.0,
            min_ms: delay_ms,
            p95_ms: delay_ms,
        }
    }

    /// Scheduler parameters for these statistics.
    pub fn to_params(&self, epsilon_j: f64, prop_ms: f64) -> Result<PathParams> {
        PathParams::from_bounds(self.mean_ms, self.min_ms, self.p95_ms, prop_ms, epsilon_j)
    }

    /// Mean, sample standard deviation, minimum and nearest-rank 95th
    /// percentile of `samples`.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NoData);
        }
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(DelayStats {
            mean_ms: mean,
            stddev_ms: var.sqrt(),
            min_ms: min,
            p95_ms: nearest_rank(samples, 95),
        })
    }
}

/// Nearest-rank percentile: the value at 1-based rank `ceil(pct/100 * len)`
/// of the sorted samples.
pub fn nearest_rank(samples: &[f64], pct: u32) -> f64 {
    assert!(!samples.is_empty(), "percentile of an empty sample");
    let n = samples.len();
    let rank = (pct as usize * n).div_ceil(100).max(1);
    let mut buf = samples.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *v
}

/// The last `capacity` inter-packet delays observed on one path.
#[derive(Debug, Clone)]
pub struct RollingWindow {
    capacity: usize,
    samples: VecDeque<f64>,
}

impl Default for RollingWindow {
    fn default() -> Self {
        RollingWindow::new(DEFAULT_WINDOW)
    }
}

impl RollingWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        RollingWindow {
            capacity,
            samples: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Oldest first.
    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().copied()
    }

    pub fn record_sample(&mut self, delay_ms: f64) -> Result<()> {
        if !delay_ms.is_finite() || delay_ms < 0.0 {
            return Err(Error::Validation(format!(
                "delay sample must be finite and nonnegative, got {delay_ms}"
            )));
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(delay_ms);
        Ok(())
    }

    pub fn stats(&self) -> Result<DelayStats> {
        let (a, b) = self.samples.as_slices();
        if b.is_empty() {
            DelayStats::from_samples(a)
        } else {
            DelayStats::from_samples(&self.samples.iter().copied().collect::<Vec<_>>())
        }
    }
}

/// Scheduler parameters from the current window contents.
pub fn snapshot_params(window: &RollingWindow, epsilon_j: f64, prop_ms: f64) -> Result<PathParams> {
    let stats = window.stats()?;
    let w = compute_w(epsilon_j, stats.min_ms, stats.p95_ms)?;
    Ok(PathParams {
        mu_ms: stats.mean_ms,
        a_ms: stats.min_ms,
        b_ms: stats.p95_ms,
        w,
        prop_ms,
        in_flight: 0,
    })
}
