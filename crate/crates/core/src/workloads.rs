//! Object streams: fixed-size objects and web pages.
//!
//! A page is a list of objects, each requested at time zero, at a fixed time
//! or once a given packet of another object has reached the browser. Chunked
//! objects are expanded into one single-packet unit per packet so that a
//! dependent request can fire as soon as its packet lands.
//!
//! Page spec files hold one object per line:
//!
//! ```text
//! # id,size_packets,dom,connection_id,chunked,trigger
//! obj1,2,1,c1,1,t0
//! obj2,5,0,c2,0,dep:obj1:1
//! obj3,3,1,c1,0,dep:obj1:2
//! ```
//!
//! `dom` is 0 for objects not needed to render the page, otherwise the
//! object's priority (1 in the common case). `trigger` is `t0`, `t:<ms>` or
//! `dep:<object_id>:<packet_index>` with a 1-based packet index. Lines
//! starting with `#` and blank lines are ignored, as is a leading header line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::simulator::TransferObject;

#[derive(Debug, Clone, PartialEq)]
pub enum Trigger {
    Start,
    At(f64),
    /// Requested once packet `packet` (1-based) of `object` is readable.
    After { object: String, packet: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub id: String,
    pub size_packets: u64,
    /// Higher is more urgent; zero marks objects outside the DOM.
    pub priority: u32,
    pub connection_id: String,
    pub chunked: bool,
    pub trigger: Trigger,
}

impl ObjectSpec {
    pub fn is_dom(&self) -> bool {
        self.priority > 0
    }
}

/// Request condition of an expanded unit, with references resolved to unit
/// indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitTrigger {
    Start,
    At(f64),
    After { unit: usize, packets: u64 },
}

/// A schedulable unit: a whole object, or one packet of a chunked object.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub id: String,
    /// Index of the owning object in [`PageSpec::objects`].
    pub object: usize,
    pub size_packets: u64,
    pub priority: u32,
    pub connection_id: String,
    pub trigger: UnitTrigger,
}

impl Unit {
    pub fn is_dom(&self) -> bool {
        self.priority > 0
    }
}

/// A validated page with its chunked objects expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct PageSpec {
    objects: Vec<ObjectSpec>,
    units: Vec<Unit>,
}

impl PageSpec {
    /// Validate `objects` and expand them into units.
    pub fn new(objects: Vec<ObjectSpec>) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::Validation("page has no objects".into()));
        }
        let mut index = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if o.id.is_empty() || o.id.contains('#') {
                return Err(Error::Validation(format!("invalid object id {:?}", o.id)));
            }
            if o.size_packets == 0 {
                return Err(Error::Validation(format!("object {} has no packets", o.id)));
            }
            if index.insert(o.id.as_str(), i).is_some() {
                return Err(Error::Validation(format!("duplicate object id {}", o.id)));
            }
        }
        let mut parent = vec![None; objects.len()];
        for (i, o) in objects.iter().enumerate() {
            match &o.trigger {
                Trigger::Start => {}
                Trigger::At(t) => {
                    if !(t.is_finite() && *t >= 0.0) {
                        return Err(Error::Validation(format!("object {} has trigger time {t}", o.id)));
                    }
                }
                Trigger::After { object, packet } => {
                    let &j = index.get(object.as_str()).ok_or_else(|| {
                        Error::Validation(format!("object {} depends on unknown object {object}", o.id))
                    })?;
                    if *packet == 0 || *packet > objects[j].size_packets {
                        return Err(Error::Validation(format!(
                            "object {} depends on packet {packet} of {object}, which has {} packets",
                            o.id, objects[j].size_packets
                        )));
                    }
                    parent[i] = Some(j);
                }
            }
        }
        // Each object has at most one parent, so a cycle shows up as a walk
        // that revisits an object.
        for start in 0..objects.len() {
            let mut seen = vec![false; objects.len()];
            let mut cur = Some(start);
            while let Some(c) = cur {
                if seen[c] {
                    return Err(Error::Validation(format!(
                        "trigger cycle through object {}",
                        objects[c].id
                    )));
                }
                seen[c] = true;
                cur = parent[c];
            }
        }

        let mut first_unit = Vec::with_capacity(objects.len());
        let mut units = Vec::new();
        for (i, o) in objects.iter().enumerate() {
            first_unit.push(units.len());
            let count = if o.chunked { o.size_packets } else { 1 };
            for k in 1..=count {
                units.push(Unit {
                    id: if o.chunked { format!("{}#{k}", o.id) } else { o.id.clone() },
                    object: i,
                    size_packets: if o.chunked { 1 } else { o.size_packets },
                    priority: o.priority,
                    connection_id: o.connection_id.clone(),
                    trigger: UnitTrigger::Start,
                });
            }
        }
        for u in &mut units {
            u.trigger = match &objects[u.object].trigger {
                Trigger::Start => UnitTrigger::Start,
                Trigger::At(t) => UnitTrigger::At(*t),
                Trigger::After { object, packet } => {
                    let j = index[object.as_str()];
                    if objects[j].chunked {
                        UnitTrigger::After {
                            unit: first_unit[j] + (*packet as usize - 1),
                            packets: 1,
                        }
                    } else {
                        UnitTrigger::After {
                            unit: first_unit[j],
                            packets: *packet,
                        }
                    }
                }
            };
        }
        Ok(PageSpec { objects, units })
    }

    pub fn objects(&self) -> &[ObjectSpec] {
        &self.objects
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn total_packets(&self) -> u64 {
        self.objects.iter().map(|o| o.size_packets).sum()
    }

    /// Render in the page spec file format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# id,size_packets,dom,connection_id,chunked,trigger\n");
        for o in &self.objects {
            let trigger = match &o.trigger {
                Trigger::Start => "t0".to_string(),
                Trigger::At(t) => format!("t:{t}"),
                Trigger::After { object, packet } => format!("dep:{object}:{packet}"),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                o.id,
                o.size_packets,
                o.priority,
                o.connection_id,
                u8::from(o.chunked),
                trigger
            )
            .expect("writing to a String");
        }
        out
    }
}

pub fn load_page_spec(path: impl AsRef<Path>) -> Result<PageSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_page_spec(&text, path)
}

pub fn parse_page_spec(text: &str, path: &Path) -> Result<PageSpec> {
    let mut objects = Vec::new();
    let mut seen_row = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_row && cols.first() == Some(&"id") {
            seen_row = true;
            continue;
        }
        seen_row = true;
        if cols.len() != 6 {
            return Err(err(format!("expected 6 columns, found {}", cols.len())));
        }
        let size_packets = cols[1]
            .parse::<u64>()
            .map_err(|_| err(format!("bad size_packets {:?}", cols[1])))?;
        let priority = cols[2]
            .parse::<u32>()
            .map_err(|_| err(format!("bad dom flag {:?}", cols[2])))?;
        let chunked = match cols[4] {
            "0" => false,
            "1" => true,
            other => return Err(err(format!("chunked must be 0 or 1, got {other:?}"))),
        };
        let trigger = parse_trigger(cols[5]).map_err(err)?;
        objects.push(ObjectSpec {
            id: cols[0].to_string(),
            size_packets,
            priority,
            connection_id: cols[3].to_string(),
            chunked,
            trigger,
        });
    }
    PageSpec::new(objects)
}

fn parse_trigger(s: &str) -> std::result::Result<Trigger, String> {
    if s == "t0" {
        return Ok(Trigger::Start);
    }
    if let Some(ms) = s.strip_prefix("t:") {
        return ms
            .parse::<f64>()
            .map(Trigger::At)
            .map_err(|_| format!("bad trigger time {ms:?}"));
    }
    if let Some(rest) = s.strip_prefix("dep:") {
        if let Some((object, packet)) = rest.rsplit_once(':') {
            let packet = packet
                .parse::<u64>()
                .map_err(|_| format!("bad packet index {packet:?}"))?;
            return Ok(Trigger::After {
                object: object.to_string(),
                packet,
            });
        }
    }
    Err(format!("unrecognised trigger {s:?}"))
}

/// Shape of randomly generated pages.
#[derive(Debug, Clone, PartialEq)]
pub struct PageShape {
    pub objects: (usize, usize),
    pub connections: (usize, usize),
    pub dom_fraction: (f64, f64),
    pub max_object_packets: u64,
}

impl Default for PageShape {
    fn default() -> Self {
        PageShape {
            objects: (3, 50),
            connections: (1, 10),
            dom_fraction: (0.1, 0.4),
            max_object_packets: 64,
        }
    }
}

/// A random page: a chunked DOM root requested at time zero, with every
/// other object requested from a packet of an earlier object. DOM objects
/// only depend on DOM objects. Sizes are log-uniform.
pub fn random_page(seed: u64, shape: &PageShape) -> PageSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(shape.objects.0..=shape.objects.1).max(1);
    let conns = rng.random_range(shape.connections.0..=shape.connections.1).clamp(1, n);
    let frac = rng.random_range(shape.dom_fraction.0..=shape.dom_fraction.1);
    let dom_count = ((frac * n as f64).round() as usize).clamp(1, n);
    let mut order: Vec<usize> = (1..n).collect();
    order.shuffle(&mut rng);
    let mut dom = vec![false; n];
    dom[0] = true;
    for &i in order.iter().take(dom_count - 1) {
        dom[i] = true;
    }
    let max_exp = (shape.max_object_packets.max(1) as f64).log2();
    let mut objects: Vec<ObjectSpec> = Vec::with_capacity(n);
    for i in 0..n {
        let size = (2f64.powf(rng.random_range(0.0..=max_exp)).round() as u64)
            .clamp(1, shape.max_object_packets.max(1));
        let trigger = if i == 0 {
            Trigger::Start
        } else {
            let eligible: Vec<usize> = (0..i).filter(|&j| !dom[i] || dom[j]).collect();
            let j = if rng.random_bool(0.6) {
                0
            } else {
                eligible[rng.random_range(0..eligible.len())]
            };
            Trigger::After {
                object: objects[j].id.clone(),
                packet: rng.random_range(1..=objects[j].size_packets),
            }
        };
        objects.push(ObjectSpec {
            id: format!("obj{}", i + 1),
            size_packets: if i == 0 { size.max(2) } else { size },
            priority: u32::from(dom[i]),
            connection_id: if i == 0 {
                "c1".into()
            } else {
                format!("c{}", rng.random_range(1..=conns))
            },
            chunked: i == 0,
            trigger,
        });
    }
    PageSpec::new(objects).expect("generated pages are valid")
}

/// `count` objects of `size` packets, the `k`-th arriving at `k * spacing_ms`.
pub fn fixed_size_objects(size: u64, count: usize, spacing_ms: f64) -> Vec<TransferObject> {
    (0..count)
        .map(|k| TransferObject {
            id: format!("o{k}"),
            size_packets: size,
            arrival_ms: k as f64 * spacing_ms,
        })
        .collect()
}

/// An object waiting to be dispatched.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingObject {
    pub unit: usize,
    pub id: String,
    pub priority: u32,
    pub connection_id: String,
    /// When the request was issued; `None` while still untriggered.
    pub available_at_ms: Option<f64>,
    /// Position in request order; ties are broken on this.
    pub arrival_seq: u64,
}

impl PendingObject {
    fn triggered(&self, now_ms: f64) -> bool {
        self.available_at_ms.is_some_and(|t| t <= now_ms)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PendingQueue {
    items: Vec<PendingObject>,
}

impl PendingQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, item: PendingObject) {
        self.items.push(item);
    }

    pub fn remove(&mut self, unit: usize) -> Option<PendingObject> {
        let pos = self.items.iter().position(|p| p.unit == unit)?;
        Some(self.items.remove(pos))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PendingObject> {
        self.items.iter()
    }
}

/// Highest-priority triggered object, ties broken by request order then id.
/// Objects sharing a connection leave in request order, so only the earliest
/// triggered object of each connection is eligible.
pub fn next_ready_object(pending: &PendingQueue, now_ms: f64) -> Option<&PendingObject> {
    let triggered: Vec<&PendingObject> = pending.iter().filter(|p| p.triggered(now_ms)).collect();
    triggered
        .iter()
        .copied()
        .filter(|p| {
            !triggered
                .iter()
                .any(|q| q.connection_id == p.connection_id && (q.arrival_seq, &q.id) < (p.arrival_seq, &p.id))
        })
        .min_by(|a, b| {
            b.priority
                .cmp(&a.priority)
                .then(a.arrival_seq.cmp(&b.arrival_seq))
                .then(a.id.cmp(&b.id))
        })
}

/// Whether `candidate` may take over from the transmitting `current`: only
/// for strictly higher priority on another connection.
pub fn maybe_preempt(current: &PendingObject, candidate: &PendingObject) -> bool {
    candidate.priority > current.priority && candidate.connection_id != current.connection_id
}
