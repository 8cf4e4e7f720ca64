//! Per-packet inter-packet delay generators: constant, Gamma, uniform, and
//! replay of a measured trace.
//!
//! Synthetic sources are driven by a ChaCha8 generator seeded from the
//! source's `seed`, with the stream number selecting an independent
//! sub-sequence (stream 0 for warm-up, stream `r + 1` for replication `r`).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::estimation::{DelayStats, DEFAULT_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayKind {
    Deterministic,
    Gamma,
    Uniform,
    Trace,
}

/// Configuration of one path's delay source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySourceSpec {
    pub kind: DelayKind,
    #[serde(default)]
    pub mean_ms: f64,
    /// Gamma only.
    #[serde(default)]
    pub stddev_ms: f64,
    /// Uniform only: support `[min_ms, max_ms]`.
    #[serde(default)]
    pub min_ms: f64,
    #[serde(default)]
    pub max_ms: f64,
    #[serde(default)]
    pub trace_path: Option<PathBuf>,
    #[serde(default)]
    pub propagation_ms: f64,
    #[serde(default)]
    pub seed: u64,
}

impl DelaySourceSpec {
    pub fn deterministic(mean_ms: f64) -> Self {
        DelaySourceSpec {
            kind: DelayKind::Deterministic,
            mean_ms,
            stddev_ms: 0.0,
            min_ms: 0.0,
            max_ms: 0.0,
            trace_path: None,
            propagation_ms: 0.0,
            seed: 0,
        }
    }

    pub fn gamma(mean_ms: f64, stddev_ms: f64, seed: u64) -> Self {
        DelaySourceSpec {
            kind: DelayKind::Gamma,
            stddev_ms,
            seed,
            ..Self::deterministic(mean_ms)
        }
    }

    pub fn uniform(min_ms: f64, max_ms: f64, seed: u64) -> Self {
        DelaySourceSpec {
            kind: DelayKind::Uniform,
            min_ms,
            max_ms,
            seed,
            ..Self::deterministic((min_ms + max_ms) / 2.0)
        }
    }

    pub fn trace(path: impl Into<PathBuf>) -> Self {
        DelaySourceSpec {
            kind: DelayKind::Trace,
            trace_path: Some(path.into()),
            ..Self::deterministic(0.0)
        }
    }

    pub fn with_propagation(mut self, propagation_ms: f64) -> Self {
        self.propagation_ms = propagation_ms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite and nonnegative, got {v}")))
            }
        };
        nonneg("propagation_ms", self.propagation_ms)?;
        match self.kind {
            DelayKind::Deterministic => nonneg("mean_ms", self.mean_ms),
            DelayKind::Gamma => {
                if !(self.mean_ms > 0.0 && self.stddev_ms > 0.0)
                    || !self.mean_ms.is_finite()
                    || !self.stddev_ms.is_finite()
                {
                    return Err(Error::Config(
                        "gamma source requires mean_ms > 0 and stddev_ms > 0".into(),
                    ));
                }
                Ok(())
            }
            DelayKind::Uniform => {
                nonneg("min_ms", self.min_ms)?;
                nonneg("max_ms", self.max_ms)?;
                if self.min_ms > self.max_ms {
                    return Err(Error::Config("uniform source requires min_ms <= max_ms".into()));
                }
                Ok(())
            }
            DelayKind::Trace => match &self.trace_path {
                Some(_) => Ok(()),
                None => Err(Error::Config("trace source requires trace_path".into())),
            },
        }
    }

    /// Gamma shape and scale matching the configured mean and standard
    /// deviation: `shape = (mean/sd)^2`, `scale = sd^2/mean`.
    pub fn gamma_shape_scale(&self) -> (f64, f64) {
        let (mu, sd) = (self.mean_ms, self.stddev_ms);
        ((mu / sd).powi(2), sd * sd / mu)
    }
}

/// A validated source specification with its trace (if any) loaded, from
/// which per-replication [`DelaySource`]s are opened.
#[derive(Debug, Clone)]
pub struct PreparedSource {
    spec: DelaySourceSpec,
    trace: Option<Arc<[f64]>>,
}

impl PreparedSource {
    pub fn new(spec: DelaySourceSpec) -> Result<Self> {
        spec.validate()?;
        let trace = match (&spec.kind, &spec.trace_path) {
            (DelayKind::Trace, Some(p)) => Some(read_trace(p)?.into()),
            _ => None,
        };
        Ok(PreparedSource { spec, trace })
    }

    pub fn spec(&self) -> &DelaySourceSpec {
        &self.spec
    }

    pub fn propagation_ms(&self) -> f64 {
        self.spec.propagation_ms
    }

    pub fn trace_len(&self) -> Option<usize> {
        self.trace.as_ref().map(|t| t.len())
    }

    /// Open an independent sample sequence. Synthetic kinds use `stream` to
    /// select the generator stream; trace replay starts at `trace_offset`
    /// (modulo the trace length).
    pub fn open(&self, stream: u64, trace_offset: usize) -> DelaySource {
        let rng = || {
            let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
            rng.set_stream(stream);
            rng
        };
        match self.spec.kind {
            DelayKind::Deterministic => DelaySource::Deterministic(self.spec.mean_ms),
            DelayKind::Gamma => {
                let (shape, scale) = self.spec.gamma_shape_scale();
                DelaySource::Gamma {
                    dist: rand_distr::Gamma::new(shape, scale).expect("validated gamma parameters"),
                    rng: rng(),
                }
            }
            DelayKind::Uniform => DelaySource::Uniform {
                lo: self.spec.min_ms,
                hi: self.spec.max_ms,
                rng: rng(),
            },
            DelayKind::Trace => {
                let samples = self.trace.clone().expect("trace loaded on prepare");
                let pos = trace_offset % samples.len();
                DelaySource::Trace { samples, pos }
            }
        }
    }

    /// Population statistics of the source as seen by a scheduler that is
    /// told the true distribution. For Gamma sources the lower bound is the
    /// quantile at `1/5000` (the expected reach of a full estimation window's
    /// minimum) and the upper bound the 95% quantile.
    pub fn oracle_stats(&self) -> DelayStats {
        match self.spec.kind {
            DelayKind::Deterministic => DelayStats::constant(self.spec.mean_ms),
            DelayKind::Gamma => {
                let (shape, scale) = self.spec.gamma_shape_scale();
                let g = statrs::distribution::Gamma::new(shape, 1.0 / scale)
                    .expect("validated gamma parameters");
                DelayStats {
                    mean_ms: self.spec.mean_ms,
                    stddev_ms: self.spec.stddev_ms,
                    min_ms: g.inverse_cdf(1.0 / DEFAULT_WINDOW as f64),
                    p95_ms: g.inverse_cdf(0.95),
                }
            }
            DelayKind::Uniform => {
                let (lo, hi) = (self.spec.min_ms, self.spec.max_ms);
                DelayStats {
                    mean_ms: (lo + hi) / 2.0,
                    stddev_ms: (hi - lo) / 12f64.sqrt(),
                    min_ms: lo,
                    p95_ms: hi,
                }
            }
            DelayKind::Trace => {
                DelayStats::from_samples(self.trace.as_deref().expect("trace loaded on prepare"))
                    .expect("trace is nonempty")
            }
        }
    }
}

/// A stream of inter-packet delays for one path.
#[derive(Debug, Clone)]
pub enum DelaySource {
    Deterministic(f64),
    Gamma {
        dist: rand_distr::Gamma<f64>,
        rng: ChaCha8Rng,
    },
    Uniform {
        lo: f64,
        hi: f64,
        rng: ChaCha8Rng,
    },
    Trace {
        samples: Arc<[f64]>,
        pos: usize,
    },
}

impl DelaySource {
    /// Source from a specification, on generator stream 0.
    pub fn from_spec(spec: &DelaySourceSpec) -> Result<Self> {
        Ok(PreparedSource::new(spec.clone())?.open(0, 0))
    }

    pub fn next_delay(&mut self) -> f64 {
        match self {
            DelaySource::Deterministic(d) => *d,
            DelaySource::Gamma { dist, rng } => dist.sample(rng),
            DelaySource::Uniform { lo, hi, rng } => {
                if lo == hi {
                    *lo
                } else {
                    rng.random_range(*lo..=*hi)
                }
            }
            DelaySource::Trace { samples, pos } => {
                let d = samples[*pos];
                *pos = (*pos + 1) % samples.len();
                d
            }
        }
    }
}

/// Load a trace file into a replay source.
pub fn load_trace(path: impl AsRef<Path>) -> Result<DelaySource> {
    let samples: Arc<[f64]> = read_trace(path.as_ref())?.into();
    Ok(DelaySource::Trace { samples, pos: 0 })
}

fn read_trace(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    parse_trace(&text, path)
}

/// Parse `seq,delay_ms` lines, with an optional `seq,delay_ms` header.
pub fn parse_trace(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line.replace(' ', "") == "seq,delay_ms" {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg,
        };
        let mut cols = line.split(',').map(str::trim);
        let (Some(seq), Some(delay), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(parse_err(format!("expected two columns `seq,delay_ms`, got {line:?}")));
        };
        seq.parse::<u64>()
            .map_err(|e| parse_err(format!("bad sequence number {seq:?}: {e}")))?;
        let d: f64 = delay
            .parse()
            .map_err(|e| parse_err(format!("bad delay {delay:?}: {e}")))?;
        if !d.is_finite() {
            return Err(parse_err(format!("delay must be finite, got {delay}")));
        }
        if d < 0.0 {
            return Err(Error::Validation(format!(
                "{}:{line_no}: negative delay {d}",
                path.display()
            )));
        }
        out.push(d);
    }
    if out.is_empty() {
        return Err(Error::Config(format!("trace {} contains no samples", path.display())));
    }
    Ok(out)
}
