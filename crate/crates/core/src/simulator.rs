//! Deterministic discrete-event transfer of objects over serial paths.
//!
//! Each path is a single server fed by a FIFO send queue. A packet entering
//! service draws its inter-packet delay `T` from the path's delay source,
//! leaves service `T` later and is delivered after the path's propagation
//! delay. The sender observes the delivery `ack_return_ms` later and feeds
//! `T` into that path's estimation window.
//!
//! Packets of one object may be withdrawn from the send queues before they
//! enter service (used for preemption); packets in service or propagating are
//! never cancelled.
//!
//! Simultaneous events are ordered by (kind, path, insertion sequence), with
//! deliveries first, then acknowledgements, object arrivals and finally
//! service completions.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{edf_assign, sedpf_assign, PathLoad, PathQueueState};
use crate::delay_sources::DelaySource;
use crate::error::{Error, Result};
use crate::estimation::{DelayStats, RollingWindow, DEFAULT_WINDOW};
use crate::fec::{solve_fec_split, DEFAULT_GAMMA};
use crate::scheduler::{d_upper, d_upper_loaded, split_object, PathParams, SplitVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Sos,
    SosFec,
    Edf,
    Sedpf,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] = [Self::Sos, Self::SosFec, Self::Edf, Self::Sedpf];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Sos => "sos",
            SchedulerKind::SosFec => "sos_fec",
            SchedulerKind::Edf => "edf",
            SchedulerKind::Sedpf => "sedpf",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown scheduler {s:?} (expected sos, sos_fec, edf or sedpf)")))
    }
}

/// Scheduler choice with its design parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub kind: SchedulerKind,
    pub epsilon: f64,
    pub gamma: f64,
}

impl Policy {
    pub fn new(kind: SchedulerKind) -> Self {
        Policy {
            kind,
            epsilon: 0.05,
            gamma: DEFAULT_GAMMA,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Whether objects are sent with redundancy and decoded from any `n`.
    pub fn coded(&self) -> bool {
        self.kind == SchedulerKind::SosFec
    }
}

/// Where the scheduler's per-path statistics come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamMode {
    /// Fixed statistics of the true delay distributions.
    Oracle(Vec<DelayStats>),
    /// Rolling-window estimates; `priors` stand in while a window is empty.
    Estimated { priors: Vec<DelayStats> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub policy: Policy,
    pub mode: ParamMode,
    pub ack_return_ms: f64,
    pub window: usize,
}

impl SimConfig {
    pub fn new(policy: Policy, mode: ParamMode) -> Self {
        SimConfig {
            policy,
            mode,
            ack_return_ms: 0.0,
            window: DEFAULT_WINDOW,
        }
    }
}

/// Per-object outcome of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    pub object_id: String,
    pub start_ms: f64,
    pub completion_ms: f64,
    pub sent_per_path: Vec<u64>,
    pub redundancy: u64,
    /// Largest number of packets held at the receiver awaiting in-order
    /// delivery (or, for coded objects, awaiting decode).
    pub hol_buffer_peak: u64,
    pub d_upper_at_send: f64,
}

impl TransferRecord {
    pub fn delay_ms(&self) -> f64 {
        self.completion_ms - self.start_ms
    }
}

/// Inputs and outcome of one split decision, kept for replay checks.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchRecord {
    pub object: ObjectId,
    pub time_ms: f64,
    pub count: u64,
    /// Parameters used, with `in_flight` set to the backlog at dispatch.
    pub params: Vec<PathParams>,
    pub split: Vec<u64>,
    pub totals: Vec<u64>,
}

pub type ObjectId = usize;

/// What a call to [`Network::step`] processed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetEvent {
    Delivered {
        object: ObjectId,
        path: usize,
        time_ms: f64,
        /// Packets of this object delivered so far, including this one.
        delivered: u64,
        /// True when this delivery met the object's decode threshold.
        completed: bool,
    },
    Acked {
        path: usize,
        time_ms: f64,
    },
    Arrival {
        token: u64,
        time_ms: f64,
    },
    ServiceDone {
        path: usize,
        time_ms: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Packet {
    object: ObjectId,
    seq: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Delivered { packet: Packet, sample: f64 },
    Ack { sample: f64 },
    Arrival { token: u64 },
    ServiceDone,
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::Delivered { .. } => 0,
            EventKind::Ack { .. } => 1,
            EventKind::Arrival { .. } => 2,
            EventKind::ServiceDone => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
    path: usize,
    seq: u64,
}

impl Event {
    fn key(&self) -> (f64, u8, usize, u64) {
        (self.time, self.kind.rank(), self.path, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so that `BinaryHeap` pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(b.2.cmp(&a.2))
            .then(b.3.cmp(&a.3))
    }
}

struct PathState {
    source: DelaySource,
    prop_ms: f64,
    queue: VecDeque<Packet>,
    in_service: Option<(Packet, f64)>,
    /// Queued, in service or propagating.
    in_flight: u64,
}

struct ObjectState {
    label: String,
    size: u64,
    coded: bool,
    start_ms: f64,
    sent_per_path: Vec<u64>,
    dispatched: u64,
    delivered: u64,
    completion: Option<f64>,
    d_upper_at_send: Option<f64>,
    next_seq: u32,
    free_seqs: Vec<u32>,
    received: Vec<bool>,
    next_expected: u32,
    buffered: u64,
    hol_peak: u64,
}

impl ObjectState {
    fn take_seq(&mut self) -> u32 {
        if let Some(s) = self.free_seqs.pop() {
            s
        } else {
            self.next_seq += 1;
            self.next_seq - 1
        }
    }

    fn on_delivery(&mut self, seq: u32, time: f64) -> bool {
        self.delivered += 1;
        let complete_now = self.completion.is_none() && self.delivered == self.size;
        if self.completion.is_none() {
            if self.coded {
                self.buffered = self.delivered;
            } else {
                let s = seq as usize;
                if self.received.len() <= s {
                    self.received.resize(s + 1, false);
                }
                self.received[s] = true;
                self.buffered += 1;
                while (self.next_expected as usize) < self.received.len()
                    && self.received[self.next_expected as usize]
                {
                    self.next_expected += 1;
                    self.buffered -= 1;
                }
            }
            self.hol_peak = self.hol_peak.max(self.buffered);
        }
        if complete_now {
            self.completion = Some(time);
            self.buffered = 0;
        }
        complete_now
    }
}

/// The multipath sender, its paths and the receiver-side bookkeeping.
pub struct Network {
    cfg: SimConfig,
    paths: Vec<PathState>,
    windows: Vec<RollingWindow>,
    objects: Vec<ObjectState>,
    dispatch_order: Vec<ObjectId>,
    events: BinaryHeap<Event>,
    next_event_seq: u64,
    now: f64,
    log: Vec<DispatchRecord>,
    delivered_total: u64,
}

impl Network {
    pub fn new(cfg: SimConfig, sources: Vec<DelaySource>, prop_ms: Vec<f64>) -> Result<Self> {
        let m = sources.len();
        if m == 0 {
            return Err(Error::Config("at least one path is required".into()));
        }
        if prop_ms.len() != m {
            return Err(Error::Config("one propagation delay per path is required".into()));
        }
        let stats_len = match &cfg.mode {
            ParamMode::Oracle(s) => s.len(),
            ParamMode::Estimated { priors } => priors.len(),
        };
        if stats_len != m {
            return Err(Error::Config(format!(
                "{stats_len} path statistics supplied for {m} paths"
            )));
        }
        if !(cfg.policy.epsilon > 0.0 && cfg.policy.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {}", cfg.policy.epsilon)));
        }
        if !(0.0..=1.0).contains(&cfg.policy.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", cfg.policy.gamma)));
        }
        if !(cfg.ack_return_ms >= 0.0 && cfg.ack_return_ms.is_finite()) {
            return Err(Error::Config("ack_return_ms must be finite and nonnegative".into()));
        }
        if prop_ms.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Config("propagation delays must be finite and nonnegative".into()));
        }
        if cfg.window == 0 {
            return Err(Error::Config("estimation window must hold at least one sample".into()));
        }
        let windows = (0..m).map(|_| RollingWindow::new(cfg.window)).collect();
        let paths = sources
            .into_iter()
            .zip(prop_ms)
            .map(|(source, prop_ms)| PathState {
                source,
                prop_ms,
                queue: VecDeque::new(),
                in_service: None,
                in_flight: 0,
            })
            .collect();
        Ok(Network {
            cfg,
            paths,
            windows,
            objects: Vec::new(),
            dispatch_order: Vec::new(),
            events: BinaryHeap::new(),
            next_event_seq: 0,
            now: 0.0,
            log: Vec::new(),
            delivered_total: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    /// Swap in fresh delay sources, e.g. for the next replication.
    pub fn set_sources(&mut self, sources: Vec<DelaySource>) -> Result<()> {
        if sources.len() != self.paths.len() {
            return Err(Error::Config("one delay source per path is required".into()));
        }
        for (p, s) in self.paths.iter_mut().zip(sources) {
            p.source = s;
        }
        Ok(())
    }

    pub fn window(&self, path: usize) -> &RollingWindow {
        &self.windows[path]
    }

    /// Replace a path's estimation window, e.g. with a warmed-up one.
    pub fn set_window(&mut self, path: usize, window: RollingWindow) {
        self.windows[path] = window;
    }

    /// Feed a sample straight into a path's estimation window.
    pub fn observe(&mut self, path: usize, delay_ms: f64) -> Result<()> {
        self.windows[path].record_sample(delay_ms)
    }

    pub fn in_flight(&self) -> Vec<u64> {
        self.paths.iter().map(|p| p.in_flight).collect()
    }

    pub fn delivered_total(&self) -> u64 {
        self.delivered_total
    }

    pub fn dispatch_log(&self) -> &[DispatchRecord] {
        &self.log
    }

    /// Time of the next event and whether it is an object arrival.
    pub fn peek(&self) -> Option<(f64, bool)> {
        self.events
            .peek()
            .map(|e| (e.time, matches!(e.kind, EventKind::Arrival { .. })))
    }

    pub fn is_idle(&self) -> bool {
        self.events.is_empty()
    }

    /// Statistics the scheduler would use right now.
    pub fn current_stats(&self) -> Vec<DelayStats> {
        match &self.cfg.mode {
            ParamMode::Oracle(s) => s.clone(),
            ParamMode::Estimated { priors } => self
                .windows
                .iter()
                .zip(priors)
                .map(|(w, prior)| w.stats().unwrap_or(*prior))
                .collect(),
        }
    }

    /// Scheduler parameters right now, with in-flight counts filled in.
    pub fn current_params(&self) -> Result<Vec<PathParams>> {
        let eps_j = self.cfg.policy.epsilon / self.paths.len() as f64;
        self.current_stats()
            .iter()
            .zip(&self.paths)
            .map(|(s, p)| Ok(s.to_params(eps_j, p.prop_ms)?.with_in_flight(p.in_flight)))
            .collect()
    }

    /// Register an object of `size` packets starting now.
    pub fn add_object(&mut self, label: impl Into<String>, size: u64) -> ObjectId {
        assert!(size > 0, "objects carry at least one packet");
        let id = self.objects.len();
        self.objects.push(ObjectState {
            label: label.into(),
            size,
            coded: self.cfg.policy.coded(),
            start_ms: self.now,
            sent_per_path: vec![0; self.paths.len()],
            dispatched: 0,
            delivered: 0,
            completion: None,
            d_upper_at_send: None,
            next_seq: 0,
            free_seqs: Vec::new(),
            received: Vec::new(),
            next_expected: 0,
            buffered: 0,
            hol_peak: 0,
        });
        id
    }

    pub fn object_size(&self, obj: ObjectId) -> u64 {
        self.objects[obj].size
    }

    pub fn object_label(&self, obj: ObjectId) -> &str {
        &self.objects[obj].label
    }

    pub fn completion(&self, obj: ObjectId) -> Option<f64> {
        self.objects[obj].completion
    }

    /// Packets of `obj` placed on paths and not withdrawn.
    pub fn dispatched(&self, obj: ObjectId) -> u64 {
        self.objects[obj].dispatched
    }

    pub fn delivered(&self, obj: ObjectId) -> u64 {
        self.objects[obj].delivered
    }

    /// Leading packets of `obj` the receiving application can read: the
    /// in-order prefix, or for coded objects nothing until decode.
    pub fn readable(&self, obj: ObjectId) -> u64 {
        let o = &self.objects[obj];
        if o.completion.is_some() {
            o.size
        } else if o.coded {
            0
        } else {
            u64::from(o.next_expected)
        }
    }

    /// Packets of `obj` still waiting in send queues.
    pub fn unsent(&self, obj: ObjectId) -> u64 {
        self.paths
            .iter()
            .map(|p| p.queue.iter().filter(|k| k.object == obj).count() as u64)
            .sum()
    }

    /// Objects with packets still waiting in send queues, in dispatch order.
    pub fn queued_objects(&self) -> Vec<ObjectId> {
        let mut waiting = vec![false; self.objects.len()];
        for p in &self.paths {
            for k in &p.queue {
                waiting[k.object] = true;
            }
        }
        self.dispatch_order.iter().copied().filter(|&o| waiting[o]).collect()
    }

    /// Split `count` new packets of `obj` across the paths with the configured
    /// scheduler and queue them. Returns the per-path packet counts queued.
    pub fn dispatch(&mut self, obj: ObjectId, count: u64) -> Result<Vec<u64>> {
        if count == 0 {
            return Ok(vec![0; self.paths.len()]);
        }
        let stats = self.current_stats();
        let params = self.current_params()?;
        let (split, totals) = match self.cfg.policy.kind {
            SchedulerKind::Sos => {
                let s = split_object(count, &params)?.into_counts();
                (s.clone(), s)
            }
            SchedulerKind::SosFec => {
                let a = solve_fec_split(count, &params, self.cfg.policy.gamma)?;
                (a.base.into_counts(), a.totals)
            }
            kind @ (SchedulerKind::Edf | SchedulerKind::Sedpf) => {
                let mut state = PathQueueState::new(
                    self.paths
                        .iter()
                        .zip(&stats)
                        .map(|(p, s)| PathLoad {
                            in_flight: p.in_flight,
                            mean_ms: s.mean_ms,
                            stddev_ms: s.stddev_ms,
                            prop_ms: p.prop_ms,
                        })
                        .collect(),
                );
                let mut counts = vec![0u64; self.paths.len()];
                for _ in 0..count {
                    let j = if kind == SchedulerKind::Edf {
                        edf_assign(&state)
                    } else {
                        sedpf_assign(&state)
                    };
                    state.assign(j);
                    counts[j] += 1;
                }
                (counts.clone(), counts)
            }
        };
        let bound = d_upper_loaded(&SplitVector::new(split.clone()), &params)?;
        let o = &mut self.objects[obj];
        o.d_upper_at_send.get_or_insert(bound);
        self.log.push(DispatchRecord {
            object: obj,
            time_ms: self.now,
            count,
            params: params.clone(),
            split,
            totals: totals.clone(),
        });
        self.enqueue(obj, &totals, &params);
        Ok(totals)
    }

    /// Queue `counts[j]` packets of `obj` on each path, numbering them in
    /// order of expected arrival.
    fn enqueue(&mut self, obj: ObjectId, counts: &[u64], params: &[PathParams]) {
        let mut order: Vec<(f64, usize, u64)> = Vec::new();
        for (j, &c) in counts.iter().enumerate() {
            let p = &params[j];
            for k in 1..=c {
                let expected = (p.in_flight + k) as f64 * p.mu_ms + p.prop_ms;
                order.push((expected, j, k));
            }
        }
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let o = &mut self.objects[obj];
        o.free_seqs.sort_unstable_by(|a, b| b.cmp(a));
        let mut per_path: Vec<Vec<Packet>> = vec![Vec::new(); counts.len()];
        for (_, j, _) in order {
            let seq = o.take_seq();
            per_path[j].push(Packet { object: obj, seq });
        }
        for (j, pkts) in per_path.into_iter().enumerate() {
            let n = pkts.len() as u64;
            o.sent_per_path[j] += n;
            o.dispatched += n;
            let path = &mut self.paths[j];
            path.in_flight += n;
            path.queue.extend(pkts);
        }
        self.dispatch_order.retain(|&x| x != obj);
        self.dispatch_order.push(obj);
        for j in 0..self.paths.len() {
            if self.paths[j].in_service.is_none() && !self.paths[j].queue.is_empty() {
                self.start_service(j);
            }
        }
    }

    /// Pull every queued (not yet in service) packet of `obj` back from the
    /// paths. Returns how many were withdrawn.
    pub fn withdraw_unsent(&mut self, obj: ObjectId) -> u64 {
        let mut total = 0;
        for j in 0..self.paths.len() {
            let path = &mut self.paths[j];
            let before = path.queue.len();
            let mut freed = Vec::new();
            path.queue.retain(|k| {
                if k.object == obj {
                    freed.push(k.seq);
                    false
                } else {
                    true
                }
            });
            let n = (before - path.queue.len()) as u64;
            path.in_flight -= n;
            let o = &mut self.objects[obj];
            o.sent_per_path[j] -= n;
            o.dispatched -= n;
            o.free_seqs.extend(freed);
            total += n;
        }
        self.dispatch_order.retain(|&x| x != obj);
        total
    }

    pub fn schedule_arrival(&mut self, time_ms: f64, token: u64) {
        assert!(time_ms >= self.now, "arrival scheduled in the past");
        self.push(time_ms, EventKind::Arrival { token }, 0);
    }

    fn push(&mut self, time: f64, kind: EventKind, path: usize) {
        let seq = self.next_event_seq;
        self.next_event_seq += 1;
        self.events.push(Event { time, kind, path, seq });
    }

    fn start_service(&mut self, j: usize) {
        let path = &mut self.paths[j];
        let Some(pkt) = path.queue.pop_front() else {
            return;
        };
        let t = path.source.next_delay();
        path.in_service = Some((pkt, t));
        let done = self.now + t;
        self.push(done, EventKind::ServiceDone, j);
    }

    /// Process the next event; `None` once nothing is pending.
    pub fn step(&mut self) -> Option<NetEvent> {
        let ev = self.events.pop()?;
        debug_assert!(ev.time >= self.now);
        self.now = ev.time;
        let j = ev.path;
        Some(match ev.kind {
            EventKind::ServiceDone => {
                let (packet, sample) = self.paths[j].in_service.take().expect("service in progress");
                let at = self.now + self.paths[j].prop_ms;
                self.push(at, EventKind::Delivered { packet, sample }, j);
                self.start_service(j);
                NetEvent::ServiceDone { path: j, time_ms: self.now }
            }
            EventKind::Delivered { packet, sample } => {
                self.paths[j].in_flight -= 1;
                self.delivered_total += 1;
                let now = self.now;
                let o = &mut self.objects[packet.object];
                let completed = o.on_delivery(packet.seq, now);
                let delivered = o.delivered;
                self.push(now + self.cfg.ack_return_ms, EventKind::Ack { sample }, j);
                NetEvent::Delivered {
                    object: packet.object,
                    path: j,
                    time_ms: now,
                    delivered,
                    completed,
                }
            }
            EventKind::Ack { sample } => {
                self.windows[j]
                    .record_sample(sample)
                    .expect("delay sources emit nonnegative samples");
                NetEvent::Acked { path: j, time_ms: self.now }
            }
            EventKind::Arrival { token } => NetEvent::Arrival {
                token,
                time_ms: self.now,
            },
        })
    }

    /// Run until no events remain.
    pub fn drain(&mut self) {
        while self.step().is_some() {}
    }

    pub fn record(&self, obj: ObjectId) -> Option<TransferRecord> {
        let o = &self.objects[obj];
        let completion_ms = o.completion?;
        let sent: u64 = o.sent_per_path.iter().sum();
        Some(TransferRecord {
            object_id: o.label.clone(),
            start_ms: o.start_ms,
            completion_ms,
            sent_per_path: o.sent_per_path.clone(),
            redundancy: sent.saturating_sub(o.size),
            hol_buffer_peak: o.hol_peak,
            d_upper_at_send: o.d_upper_at_send.unwrap_or(f64::NAN),
        })
    }
}

/// An object offered to [`run_transfer`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransferObject {
    pub id: String,
    pub size_packets: u64,
    pub arrival_ms: f64,
}

/// Send `objects` in arrival order, each split on arrival with the current
/// in-flight backlog, and return one record per object in input order.
pub fn run_transfer(
    objects: &[TransferObject],
    sources: Vec<DelaySource>,
    prop_ms: Vec<f64>,
    cfg: SimConfig,
) -> Result<Vec<TransferRecord>> {
    let mut net = Network::new(cfg, sources, prop_ms)?;
    for (i, o) in objects.iter().enumerate() {
        if o.size_packets == 0 {
            return Err(Error::Config(format!("object {} has no packets", o.id)));
        }
        if !(o.arrival_ms >= 0.0 && o.arrival_ms.is_finite()) {
            return Err(Error::Config(format!("object {} has an invalid arrival time", o.id)));
        }
        net.schedule_arrival(o.arrival_ms, i as u64);
    }
    let mut ids = vec![None; objects.len()];
    while let Some(ev) = net.step() {
        if let NetEvent::Arrival { token, .. } = ev {
            let spec = &objects[token as usize];
            let id = net.add_object(spec.id.clone(), spec.size_packets);
            net.dispatch(id, spec.size_packets)?;
            ids[token as usize] = Some(id);
        }
    }
    Ok(ids
        .into_iter()
        .map(|id| net.record(id.expect("every arrival processed")).expect("every object completes"))
        .collect())
}

/// The `threshold`-th smallest arrival time.
pub fn completion_time(arrivals: &[f64], threshold: usize) -> Result<f64> {
    if threshold == 0 {
        return Err(Error::Validation("decode threshold must be positive".into()));
    }
    if arrivals.len() < threshold {
        return Err(Error::Infeasible(format!(
            "{} arrivals cannot meet a threshold of {threshold}",
            arrivals.len()
        )));
    }
    let mut buf = arrivals.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(threshold - 1, f64::total_cmp);
    Ok(*v)
}

/// Receive window in packets: `ceil(sum_j D_U / mu_j)`.
pub fn receive_buffer_size(split: &SplitVector, paths: &[PathParams]) -> Result<u64> {
    if let Some(j) = paths.iter().position(|p| p.mu_ms <= 0.0) {
        return Err(Error::UndefinedBufferSize(j));
    }
    let bound = d_upper(split, paths)?;
    let packets: f64 = paths.iter().map(|p| bound / p.mu_ms).sum();
    // Absorb rounding in quotients that are integral in exact arithmetic.
    Ok((packets * (1.0 - 1e-12)).ceil().max(1.0) as u64)
}
