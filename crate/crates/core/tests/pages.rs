use std::path::Path;

use proptest::prelude::*;
use sos_sched::delay_sources::{DelaySource, DelaySourceSpec, PreparedSource};
use sos_sched::harness::{derive_seed, run_page_experiment, run_pages, ExperimentConfig, PathConfig, Workload};
use sos_sched::priority_engine::{run_page, PagePolicy};
use sos_sched::simulator::{ParamMode, Policy, SchedulerKind, SimConfig};
use sos_sched::workloads::{parse_page_spec, random_page, PageShape, PageSpec, UnitTrigger};

const TWO_PATHS: [(f64, f64); 2] = [(10.0, 1.0), (12.0, 20.0)];

fn specs(seed: u64) -> Vec<DelaySourceSpec> {
    TWO_PATHS
        .iter()
        .enumerate()
        .map(|(j, &(m, s))| DelaySourceSpec::gamma(m, s, derive_seed(seed, j as u64)))
        .collect()
}

fn load(page: &PageSpec, policy: PagePolicy, seed: u64, kind: SchedulerKind) -> sos_sched::priority_engine::PageRun {
    let prepared: Vec<_> = specs(seed).into_iter().map(|s| PreparedSource::new(s).unwrap()).collect();
    let stats = prepared.iter().map(PreparedSource::oracle_stats).collect();
    let sources: Vec<DelaySource> = prepared.iter().map(|p| p.open(1, 0)).collect();
    let mut cfg = SimConfig::new(Policy::new(kind), ParamMode::Oracle(stats));
    cfg.ack_return_ms = 5.0;
    run_page(page, policy, sources, vec![0.0, 0.0], cfg).unwrap()
}

/// HTML in two packets: the first requests a non-DOM image, the second a
/// DOM script.
const TWO_TRIGGER_PAGE: &str = "\
id,size_packets,dom,connection_id,chunked,trigger
obj1,2,1,c1,1,t0
obj2,40,0,c2,0,dep:obj1:1
obj3,10,1,c3,0,dep:obj1:2
";

#[test]
fn two_trigger_page_expands_into_four_units() {
    let page = parse_page_spec(TWO_TRIGGER_PAGE, Path::new("page.csv")).unwrap();
    assert_eq!(page.objects().len(), 3);
    assert_eq!(page.objects().iter().filter(|o| o.is_dom()).count(), 2);
    let ids: Vec<_> = page.units().iter().map(|u| u.id.as_str()).collect();
    assert_eq!(ids, ["obj1#1", "obj1#2", "obj2", "obj3"]);
    assert_eq!(page.units()[2].trigger, UnitTrigger::After { unit: 0, packets: 1 });
    assert_eq!(page.units()[3].trigger, UnitTrigger::After { unit: 1, packets: 1 });
    assert_eq!(page.total_packets(), 52);
}

#[test]
fn priority_renders_two_trigger_page_no_later() {
    let page = parse_page_spec(TWO_TRIGGER_PAGE, Path::new("page.csv")).unwrap();
    for seed in 0..20 {
        for kind in SchedulerKind::ALL {
            let fifo = load(&page, PagePolicy::Fifo, seed, kind).result;
            let prio = load(&page, PagePolicy::Priority, seed, kind).result;
            assert!(prio.dom_complete_ms <= fifo.dom_complete_ms + 1e-9, "seed {seed} {kind:?}");
            assert!(fifo.dom_complete_ms <= fifo.page_complete_ms);
            assert!(prio.dom_complete_ms <= prio.page_complete_ms);
        }
    }
}

#[test]
fn page_loads_are_reproducible() {
    let page = random_page(17, &PageShape::default());
    for policy in [PagePolicy::Fifo, PagePolicy::Priority] {
        assert_eq!(
            load(&page, policy, 3, SchedulerKind::Sos),
            load(&page, policy, 3, SchedulerKind::Sos)
        );
    }
}

#[test]
fn random_pages_respect_their_shape() {
    let shape = PageShape::default();
    for seed in 0..300 {
        let page = random_page(seed, &shape);
        let n = page.objects().len();
        assert!((3..=50).contains(&n));
        let dom = page.objects().iter().filter(|o| o.is_dom()).count();
        assert!(dom >= 1 && dom <= n);
        let conns: std::collections::HashSet<_> = page.objects().iter().map(|o| &o.connection_id).collect();
        assert!(conns.len() <= 10);
        assert!(page.objects().iter().all(|o| (1..=64).contains(&o.size_packets)));
    }
}

#[test]
fn random_page_experiment_favours_priority() {
    let paths = TWO_PATHS
        .iter()
        .map(|&(m, s)| PathConfig::from_source(&DelaySourceSpec::gamma(m, s, 0)))
        .collect();
    let mut cfg = ExperimentConfig::fixed(SchedulerKind::Sos, paths, 1);
    cfg.workload = Workload::RandomPages(PageShape::default());
    cfg.replications = 100;
    cfg.ack_return_ms = 5.0;
    let fifo = run_pages(&cfg, PagePolicy::Fifo).unwrap();
    let prio = run_pages(&cfg, PagePolicy::Priority).unwrap();
    assert!(prio.mean_dom_ms() <= fifo.mean_dom_ms());
    let rows = run_page_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].label.ends_with("policy=fifo"));
    assert!(rows[1].improvement_mean_pct.unwrap() >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chunking_conserves_packets(seed in any::<u64>()) {
        let page = random_page(seed, &PageShape::default());
        let by_objects: u64 = page.objects().iter().map(|o| o.size_packets).sum();
        prop_assert_eq!(page.total_packets(), by_objects);
        for (i, o) in page.objects().iter().enumerate() {
            let units: Vec<_> = page.units().iter().filter(|u| u.object == i).collect();
            if o.chunked {
                prop_assert_eq!(units.len() as u64, o.size_packets);
                prop_assert!(units.iter().all(|u| u.size_packets == 1));
            } else {
                prop_assert_eq!(units.len(), 1);
            }
            prop_assert!(units.iter().all(|u| u.priority == o.priority && u.connection_id == o.connection_id));
        }
    }

    #[test]
    fn spec_text_round_trips(seed in any::<u64>()) {
        let page = random_page(seed, &PageShape::default());
        let again = parse_page_spec(&page.to_text(), Path::new("p.csv")).unwrap();
        prop_assert_eq!(again, page);
    }

    #[test]
    fn every_unit_completes_once_with_all_its_packets(seed in 0u64..10_000, prio in any::<bool>()) {
        let page = random_page(seed, &PageShape { objects: (3, 15), ..PageShape::default() });
        let policy = if prio { PagePolicy::Priority } else { PagePolicy::Fifo };
        let run = load(&page, policy, seed, SchedulerKind::Sos);
        prop_assert_eq!(run.records.len(), page.units().len());
        for (u, r) in page.units().iter().zip(&run.records) {
            prop_assert_eq!(&r.object_id, &u.id);
            prop_assert_eq!(r.sent_per_path.iter().sum::<u64>(), u.size_packets);
            prop_assert!(r.completion_ms >= r.start_ms);
        }
        prop_assert!(run.result.dom_complete_ms <= run.result.page_complete_ms);
    }
}
