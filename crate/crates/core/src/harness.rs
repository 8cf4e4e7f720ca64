//! Experiment configuration, replication runner, sweeps and CSV output.
//!
//! Configs are TOML: top-level keys for the experiment and one `[[path]]`
//! table per path.
//!
//! ```toml
//! scheduler = "sos"         # sos | sos_fec | edf | sedpf
//! baseline = "sedpf"        # optional, fills the improvement columns
//! epsilon = 0.05
//! gamma = 0.5               # sos_fec only
//! mode = "oracle"           # oracle | estimated
//! warmup_packets = 5000     # estimated mode
//! object_size = 100         # or: page = "page.csv" / page = "random"
//! replications = 1000
//! seed = 1
//!
//! [[path]]
//! kind = "gamma"            # deterministic | gamma | uniform | trace
//! mean_ms = 10.0
//! stddev_ms = 1.0
//! propagation_ms = 0.0
//! ```
//!
//! Seeds: path `j` draws from generator seed `derive_seed(seed, j)` (xor the
//! path's own `seed`, if given). Replication `r` uses generator stream
//! `r + 1` and starts trace replay at `warmup_packets + r * object_size`;
//! stream 0 feeds the warm-up. Sweep point `i` runs with root seed
//! `derive_seed(seed, i)`, and so does page `r` of a random-page run.
//! Replications are isolated transfers over idle paths; in estimated mode
//! each starts from the same warmed-up estimation windows.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::delay_sources::{DelayKind, DelaySource, DelaySourceSpec, PreparedSource};
use crate::error::{Error, Result};
use crate::estimation::{nearest_rank, DelayStats, RollingWindow, DEFAULT_WINDOW};
use crate::fec::DEFAULT_GAMMA;
use crate::priority_engine::{PageEngine, PagePolicy, PageResult};
use crate::simulator::{Network, ParamMode, Policy, SchedulerKind, SimConfig, TransferRecord};
use crate::workloads::{load_page_spec, random_page, PageShape, PageSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Oracle,
    Estimated,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Mode::Oracle),
            "estimated" => Ok(Mode::Estimated),
            _ => Err(Error::Usage(format!("unknown mode {s:?} (expected oracle or estimated)"))),
        }
    }
}

/// Scheduler priors for one path, used in estimated mode before any sample.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prior {
    pub mean_ms: f64,
    pub min_ms: f64,
    pub p95_ms: f64,
}

/// One `[[path]]` table: a delay source plus an optional prior.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub kind: DelayKind,
    #[serde(default)]
    pub mean_ms: f64,
    #[serde(default)]
    pub stddev_ms: f64,
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
    #[serde(default)]
    pub prior: Option<Prior>,
}

impl PathConfig {
    pub fn from_source(spec: &DelaySourceSpec) -> Self {
        PathConfig {
            kind: spec.kind,
            mean_ms: spec.mean_ms,
            stddev_ms: spec.stddev_ms,
            min_ms: spec.min_ms,
            max_ms: spec.max_ms,
            trace_path: spec.trace_path.clone(),
            propagation_ms: spec.propagation_ms,
            seed: spec.seed,
            prior: None,
        }
    }

    fn source_spec(&self, seed: u64) -> DelaySourceSpec {
        DelaySourceSpec {
            kind: self.kind,
            mean_ms: self.mean_ms,
            stddev_ms: self.stddev_ms,
            min_ms: self.min_ms,
            max_ms: self.max_ms,
            trace_path: self.trace_path.clone(),
            propagation_ms: self.propagation_ms,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    Fixed { object_size: u64 },
    Page(PathBuf),
    RandomPages(PageShape),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    label: Option<String>,
    scheduler: SchedulerKind,
    #[serde(default)]
    baseline: Option<SchedulerKind>,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    mode: Mode,
    #[serde(default = "default_warmup")]
    warmup_packets: usize,
    #[serde(default = "default_window")]
    window: usize,
    #[serde(default)]
    ack_return_ms: f64,
    #[serde(default)]
    object_size: Option<u64>,
    #[serde(default)]
    page: Option<String>,
    #[serde(default = "default_replications")]
    replications: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    path: Vec<PathConfig>,
}

fn default_epsilon() -> f64 {
    0.05
}
fn default_warmup() -> usize {
    DEFAULT_WINDOW
}
fn default_window() -> usize {
    DEFAULT_WINDOW
}
fn default_replications() -> usize {
    1000
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub scheduler: SchedulerKind,
    pub baseline: Option<SchedulerKind>,
    pub epsilon: f64,
    pub gamma: f64,
    pub mode: Mode,
    pub warmup_packets: usize,
    pub window: usize,
    pub ack_return_ms: f64,
    pub workload: Workload,
    pub replications: usize,
    pub seed: u64,
    pub paths: Vec<PathConfig>,
}

impl ExperimentConfig {
    /// Fixed-size workload with library defaults.
    pub fn fixed(scheduler: SchedulerKind, paths: Vec<PathConfig>, object_size: u64) -> Self {
        ExperimentConfig {
            label: scheduler.name().to_string(),
            scheduler,
            baseline: None,
            epsilon: default_epsilon(),
            gamma: DEFAULT_GAMMA,
            mode: Mode::Oracle,
            warmup_packets: default_warmup(),
            window: default_window(),
            ack_return_ms: 0.0,
            workload: Workload::Fixed { object_size },
            replications: default_replications(),
            seed: default_seed(),
            paths,
        }
    }

    /// Parse a TOML config; relative trace and page paths resolve against
    /// `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Usage(format!("invalid config: {e}")))?;
        let workload = match (raw.object_size, raw.page) {
            (Some(n), None) => Workload::Fixed { object_size: n },
            (None, Some(p)) if p == "random" => Workload::RandomPages(PageShape::default()),
            (None, Some(p)) => Workload::Page(base_dir.join(p)),
            (None, None) => return Err(Error::Usage("config needs object_size or page".into())),
            (Some(_), Some(_)) => return Err(Error::Usage("config sets both object_size and page".into())),
        };
        if raw.gamma.is_some() && raw.scheduler != SchedulerKind::SosFec {
            return Err(Error::Usage("gamma only applies to the sos_fec scheduler".into()));
        }
        let paths = raw
            .path
            .into_iter()
            .map(|mut p| {
                p.trace_path = p.trace_path.map(|t| base_dir.join(t));
                p
            })
            .collect();
        let cfg = ExperimentConfig {
            label: raw.label.unwrap_or_else(|| raw.scheduler.name().to_string()),
            scheduler: raw.scheduler,
            baseline: raw.baseline,
            epsilon: raw.epsilon,
            gamma: raw.gamma.unwrap_or(DEFAULT_GAMMA),
            mode: raw.mode,
            warmup_packets: raw.warmup_packets,
            window: raw.window,
            ack_return_ms: raw.ack_return_ms,
            workload,
            replications: raw.replications,
            seed: raw.seed,
            paths,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        if self.paths.is_empty() {
            return usage("at least one path is required".into());
        }
        if self.replications == 0 {
            return usage("replications must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return usage(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return usage(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if self.window == 0 {
            return usage("window must be at least 1".into());
        }
        if !(self.ack_return_ms >= 0.0 && self.ack_return_ms.is_finite()) {
            return usage("ack_return_ms must be finite and nonnegative".into());
        }
        if let Workload::Fixed { object_size: 0 } = self.workload {
            return usage("object_size must be positive".into());
        }
        for (j, p) in self.paths.iter().enumerate() {
            p.source_spec(0)
                .validate()
                .map_err(|e| Error::Usage(format!("path {j}: {e}")))?;
        }
        Ok(())
    }

    pub fn policy(&self, kind: SchedulerKind) -> Policy {
        Policy::new(kind).with_epsilon(self.epsilon).with_gamma(self.gamma)
    }
}

/// Split a root seed into child seeds (SplitMix64 of `root + index`).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sources, statistics and warm-up state shared by all replications.
struct Setup {
    sources: Vec<PreparedSource>,
    props: Vec<f64>,
    oracle: Vec<DelayStats>,
    priors: Vec<DelayStats>,
    warm: Vec<RollingWindow>,
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let sources = cfg
            .paths
            .iter()
            .enumerate()
            .map(|(j, p)| PreparedSource::new(p.source_spec(derive_seed(cfg.seed, j as u64) ^ p.seed)))
            .collect::<Result<Vec<_>>>()?;
        let oracle: Vec<DelayStats> = sources.iter().map(PreparedSource::oracle_stats).collect();
        let priors = cfg
            .paths
            .iter()
            .zip(&oracle)
            .map(|(p, o)| match p.prior {
                Some(pr) => DelayStats {
                    mean_ms: pr.mean_ms,
                    stddev_ms: 0.0,
                    min_ms: pr.min_ms,
                    p95_ms: pr.p95_ms,
                },
                None => *o,
            })
            .collect();
        let warm = if cfg.mode == Mode::Estimated {
            sources
                .iter()
                .map(|s| {
                    let mut w = RollingWindow::new(cfg.window);
                    let mut src = s.open(0, 0);
                    for _ in 0..cfg.warmup_packets {
                        w.record_sample(src.next_delay())?;
                    }
                    Ok(w)
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Setup {
            props: sources.iter().map(PreparedSource::propagation_ms).collect(),
            sources,
            oracle,
            priors,
            warm,
        })
    }

    fn sim_config(&self, cfg: &ExperimentConfig, kind: SchedulerKind) -> SimConfig {
        let mode = match cfg.mode {
            Mode::Oracle => ParamMode::Oracle(self.oracle.clone()),
            Mode::Estimated => ParamMode::Estimated {
                priors: self.priors.clone(),
            },
        };
        let mut sc = SimConfig::new(cfg.policy(kind), mode);
        sc.ack_return_ms = cfg.ack_return_ms;
        sc.window = cfg.window;
        sc
    }

    fn open(&self, r: usize, per_rep: u64, warmup: usize) -> Vec<DelaySource> {
        let offset = warmup + r * per_rep as usize;
        self.sources.iter().map(|s| s.open(r as u64 + 1, offset)).collect()
    }

    fn network(&self, sc: SimConfig, r: usize, per_rep: u64, warmup: usize) -> Result<Network> {
        let mut net = Network::new(sc, self.open(r, per_rep, warmup), self.props.clone())?;
        for (j, w) in self.warm.iter().enumerate() {
            net.set_window(j, w.clone());
        }
        Ok(net)
    }
}

/// Per-replication outcomes of a fixed-size experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub records: Vec<TransferRecord>,
}

impl RunOutcome {
    pub fn delays(&self) -> Vec<f64> {
        self.records.iter().map(TransferRecord::delay_ms).collect()
    }

    pub fn mean_ms(&self) -> f64 {
        self.records.iter().map(TransferRecord::delay_ms).sum::<f64>() / self.records.len() as f64
    }

    pub fn p95_ms(&self) -> f64 {
        nearest_rank(&self.delays(), 95)
    }

    /// Redundant packets over useful packets.
    pub fn redundancy_fraction(&self) -> f64 {
        let extra: u64 = self.records.iter().map(|r| r.redundancy).sum();
        let useful: u64 = self
            .records
            .iter()
            .map(|r| r.sent_per_path.iter().sum::<u64>() - r.redundancy)
            .sum();
        extra as f64 / useful as f64
    }
}

/// Run every replication of a fixed-size experiment with `kind`.
pub fn run_replications(cfg: &ExperimentConfig, kind: SchedulerKind) -> Result<RunOutcome> {
    cfg.validate()?;
    let Workload::Fixed { object_size: n } = cfg.workload else {
        return Err(Error::Usage("fixed-size workload required".into()));
    };
    let setup = Setup::new(cfg)?;
    let sc = setup.sim_config(cfg, kind);
    let records = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut net = setup.network(sc.clone(), r, n, cfg.warmup_packets)?;
            let o = net.add_object(format!("r{r}"), n);
            net.dispatch(o, n)?;
            net.drain();
            Ok(net.record(o).expect("object completes once the network drains"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutcome { records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub label: String,
    pub mean_delay_ms: f64,
    pub p95_delay_ms: f64,
    pub redundancy_fraction: f64,
    pub improvement_mean_pct: Option<f64>,
    pub improvement_p95_pct: Option<f64>,
}

/// `(baseline / candidate - 1) * 100`.
pub fn improvement_pct(baseline_ms: f64, candidate_ms: f64) -> Result<f64> {
    if !(baseline_ms > 0.0 && candidate_ms > 0.0) {
        return Err(Error::Domain(format!(
            "improvement needs positive delays, got baseline {baseline_ms} and candidate {candidate_ms}"
        )));
    }
    Ok((baseline_ms / candidate_ms - 1.0) * 100.0)
}

fn row(label: String, cand: (f64, f64), redundancy: f64, base: Option<(f64, f64)>) -> Result<MetricsRow> {
    let (improvement_mean_pct, improvement_p95_pct) = match base {
        Some((m, p)) => (Some(improvement_pct(m, cand.0)?), Some(improvement_pct(p, cand.1)?)),
        None => (None, None),
    };
    Ok(MetricsRow {
        label,
        mean_delay_ms: cand.0,
        p95_delay_ms: cand.1,
        redundancy_fraction: redundancy,
        improvement_mean_pct,
        improvement_p95_pct,
    })
}

/// Run a fixed-size experiment (and its baseline, if any).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsRow> {
    let cand = run_replications(cfg, cfg.scheduler)?;
    let base = match cfg.baseline {
        Some(b) => {
            let o = run_replications(cfg, b)?;
            Some((o.mean_ms(), o.p95_ms()))
        }
        None => None,
    };
    row(
        cfg.label.clone(),
        (cand.mean_ms(), cand.p95_ms()),
        cand.redundancy_fraction(),
        base,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Standard deviation of one Gamma path.
    Sigma { path: usize },
    ObjectSize,
    Gamma,
}

impl SweepAxis {
    pub fn parse(name: &str, path: usize) -> Result<Self> {
        match name {
            "sigma" => Ok(SweepAxis::Sigma { path }),
            "object_size" => Ok(SweepAxis::ObjectSize),
            "gamma" => Ok(SweepAxis::Gamma),
            _ => Err(Error::Usage(format!(
                "unknown sweep axis {name:?} (expected sigma, object_size or gamma)"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            SweepAxis::Sigma { .. } => "sigma",
            SweepAxis::ObjectSize => "object_size",
            SweepAxis::Gamma => "gamma",
        }
    }
}

/// Config of sweep point `index` at `value`.
pub fn sweep_point(base: &ExperimentConfig, axis: SweepAxis, index: usize, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::Sigma { path } => {
            let p = cfg
                .paths
                .get_mut(path)
                .ok_or_else(|| Error::Usage(format!("sigma sweep on missing path {path}")))?;
            if p.kind != DelayKind::Gamma {
                return Err(Error::Usage(format!("sigma sweep needs a gamma source on path {path}")));
            }
            p.stddev_ms = value;
        }
        SweepAxis::ObjectSize => {
            if !matches!(cfg.workload, Workload::Fixed { .. }) {
                return Err(Error::Usage("object_size sweep needs a fixed-size workload".into()));
            }
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::Usage(format!("object size must be a positive integer, got {value}")));
            }
            cfg.workload = Workload::Fixed {
                object_size: value as u64,
            };
        }
        SweepAxis::Gamma => {
            if cfg.scheduler != SchedulerKind::SosFec {
                return Err(Error::Usage("gamma sweep needs the sos_fec scheduler".into()));
            }
            cfg.gamma = value;
        }
    }
    cfg.label = format!("{} {}={}", base.label, axis.name(), value);
    cfg.seed = derive_seed(base.seed, index as u64);
    cfg.validate()?;
    Ok(cfg)
}

/// One row per value, in value order.
pub fn run_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<MetricsRow>> {
    if values.is_empty() {
        return Err(Error::Usage("sweep needs at least one value".into()));
    }
    let points = values
        .iter()
        .enumerate()
        .map(|(i, &v)| sweep_point(base, axis, i, v))
        .collect::<Result<Vec<_>>>()?;
    points.par_iter().map(run_experiment).collect()
}

/// DOM and page completion times of each page load.
#[derive(Debug, Clone, PartialEq)]
pub struct PageOutcome {
    pub results: Vec<PageResult>,
}

impl PageOutcome {
    pub fn mean_dom_ms(&self) -> f64 {
        self.results.iter().map(|r| r.dom_complete_ms).sum::<f64>() / self.results.len() as f64
    }

    pub fn p95_dom_ms(&self) -> f64 {
        let v: Vec<f64> = self.results.iter().map(|r| r.dom_complete_ms).collect();
        nearest_rank(&v, 95)
    }
}

/// Load `replications` pages under `policy`. Page `r` uses replication
/// stream `r + 1`, so both policies see the same delay realisations.
pub fn run_pages(cfg: &ExperimentConfig, policy: PagePolicy) -> Result<PageOutcome> {
    cfg.validate()?;
    let fixed_page = match &cfg.workload {
        Workload::Page(p) => Some(load_page_spec(p)?),
        Workload::RandomPages(_) => None,
        Workload::Fixed { .. } => return Err(Error::Usage("page workload required".into())),
    };
    let setup = Setup::new(cfg)?;
    let sc = setup.sim_config(cfg, cfg.scheduler);
    let results = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let page: PageSpec = match (&fixed_page, &cfg.workload) {
                (Some(p), _) => p.clone(),
                (None, Workload::RandomPages(shape)) => random_page(derive_seed(cfg.seed, r as u64), shape),
                _ => unreachable!("workload checked above"),
            };
            let srcs = setup.open(r, page.total_packets(), cfg.warmup_packets);
            let mut engine = PageEngine::new(&page, policy, srcs, setup.props.clone(), sc.clone())?;
            for (j, w) in setup.warm.iter().enumerate() {
                engine.network_mut().set_window(j, w.clone());
            }
            Ok(engine.finish()?.result)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PageOutcome { results })
}

/// FIFO and priority rows for a page workload; the priority row's
/// improvement columns compare against FIFO.
pub fn run_page_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    let fifo = run_pages(cfg, PagePolicy::Fifo)?;
    let prio = run_pages(cfg, PagePolicy::Priority)?;
    let f = (fifo.mean_dom_ms(), fifo.p95_dom_ms());
    Ok(vec![
        row(format!("{} policy=fifo", cfg.label), f, 0.0, None)?,
        row(
            format!("{} policy=priority", cfg.label),
            (prio.mean_dom_ms(), prio.p95_dom_ms()),
            0.0,
            Some(f),
        )?,
    ])
}

pub const CSV_HEADER: &str =
    "label,mean_delay_ms,p95_delay_ms,redundancy_fraction,improvement_mean_pct,improvement_p95_pct";

/// Ten significant digits, plain notation where practical.
fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..15).contains(&mag) {
        format!("{:.*}", (9 - mag).max(0) as usize, x)
    } else {
        format!("{x:.9e}")
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: e.to_string(),
    }
}

pub fn render_csv(rows: &[MetricsRow]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
    w.write_record(CSV_HEADER.split(',')).expect("writing to memory");
    for r in rows {
        w.write_record([
            r.label.clone(),
            fmt_num(r.mean_delay_ms),
            fmt_num(r.p95_delay_ms),
            fmt_num(r.redundancy_fraction),
            opt(r.improvement_mean_pct),
            opt(r.improvement_p95_pct),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV of UTF-8 fields")
}

pub fn write_csv(rows: &[MetricsRow], out: impl AsRef<Path>) -> Result<()> {
    fs::write(out, render_csv(rows))?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("{kind:?}"),
        },
    })?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        rows.push(MetricsRow {
            label: rec[0].to_string(),
            mean_delay_ms: num(&rec[1])?,
            p95_delay_ms: num(&rec[2])?,
            redundancy_fraction: num(&rec[3])?,
            improvement_mean_pct: opt(&rec[4])?,
            improvement_p95_pct: opt(&rec[5])?,
        });
    }
    Ok(rows)
}
