use proptest::prelude::*;
use sos_sched::scheduler::{
    d_upper, rounding_candidates, solve_integer, solve_relaxed, solve_with_stats, split_object, t_upper, PathParams,
    SplitVector,
};

/// Bound of one path carrying `k` new packets behind `u` in flight, or
/// `None` when the path is unused.
fn path_bound(k: u64, p: &PathParams) -> Option<f64> {
    if k == 0 {
        return None;
    }
    let x = (k + p.in_flight) as f64;
    Some(x * p.mu_ms + x.sqrt() * p.w + p.prop_ms)
}

fn bound(split: &[u64], paths: &[PathParams]) -> f64 {
    split
        .iter()
        .zip(paths)
        .filter_map(|(&k, p)| path_bound(k, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Every composition of `n` into `m` parts, lexicographically descending.
fn compositions(n: u64, m: usize) -> Vec<Vec<u64>> {
    if m == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in (0..=n).rev() {
        for mut rest in compositions(n - first, m - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Exhaustive minimiser; the first minimum met in descending order is the
/// lexicographically largest.
fn brute_force(n: u64, paths: &[PathParams]) -> (Vec<u64>, f64) {
    let mut best = (Vec::new(), f64::INFINITY);
    for c in compositions(n, paths.len()) {
        let v = bound(&c, paths);
        if v < best.1 {
            best = (c, v);
        }
    }
    best
}

fn params() -> impl Strategy<Value = PathParams> {
    (0.1f64..100.0, 0.0f64..100.0, 0.0f64..50.0).prop_map(|(mu, w, p)| PathParams::new(mu, w, p))
}

#[test]
fn exhaustive_search_agrees_on_a_fixed_grid() {
    let paths = [
        PathParams::new(3.0, 12.0, 0.0),
        PathParams::new(5.0, 0.0, 4.0),
        PathParams::new(1.5, 30.0, 10.0),
    ];
    for n in 1..=40 {
        let (split, v) = brute_force(n, &paths);
        let got = solve_integer(n, &paths).unwrap();
        assert_eq!(got.counts(), &split[..], "n = {n}");
        assert_eq!(d_upper(&got, &paths).unwrap(), v);
    }
}

#[test]
fn dominant_and_symmetric_examples() {
    let fast = PathParams::new(1.0, 0.0, 0.0);
    let slow = PathParams::new(100.0, 0.0, 0.0);
    let s = solve_integer(10, &[fast, slow]).unwrap();
    assert_eq!(s.counts(), &[10, 0]);
    assert_eq!(d_upper(&s, &[fast, slow]).unwrap(), 10.0);
    let s = solve_integer(10, &[fast, fast]).unwrap();
    assert_eq!(s.counts(), &[5, 5]);
    assert_eq!(d_upper(&s, &[fast, fast]).unwrap(), 5.0);
}

#[test]
fn heavy_backlog_leaves_path_unused() {
    // 1000 packets queued on path 1 take 1000 ms; path 2 alone delivers 10
    // packets in 100 ms, so nothing new goes to path 1.
    let paths = [
        PathParams::new(1.0, 0.0, 0.0).with_in_flight(1000),
        PathParams::new(10.0, 0.0, 0.0),
    ];
    let s = split_object(10, &paths).unwrap();
    assert_eq!(s.counts(), &[0, 10]);
    assert_eq!(brute_force(10, &paths).0, vec![0, 10]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn two_paths_match_exhaustive_search(n in 1u64..=200, a in params(), b in params()) {
        let paths = [a, b];
        let (split, v) = brute_force(n, &paths);
        let got = solve_integer(n, &paths).unwrap();
        prop_assert_eq!(d_upper(&got, &paths).unwrap(), v);
        prop_assert_eq!(got.counts(), &split[..]);
    }

    #[test]
    fn three_and_four_paths_match_exhaustive_search(
        n in 1u64..=18,
        paths in prop::collection::vec(params(), 3..=4),
    ) {
        let (split, v) = brute_force(n, &paths);
        let got = solve_integer(n, &paths).unwrap();
        prop_assert_eq!(d_upper(&got, &paths).unwrap(), v);
        prop_assert_eq!(got.counts(), &split[..]);
    }

    #[test]
    fn in_flight_split_matches_exhaustive_search(
        n in 1u64..=60,
        paths in prop::collection::vec((params(), 0u64..80), 2..=3),
    ) {
        let paths: Vec<_> = paths.into_iter().map(|(p, u)| p.with_in_flight(u)).collect();
        let (split, _) = brute_force(n, &paths);
        let got = split_object(n, &paths).unwrap();
        prop_assert_eq!(got.counts(), &split[..]);
    }

    #[test]
    fn idle_split_object_is_solve_integer(n in 1u64..=500, paths in prop::collection::vec(params(), 1..=4)) {
        prop_assert_eq!(split_object(n, &paths).unwrap(), solve_integer(n, &paths).unwrap());
    }

    #[test]
    fn split_sums_to_n(n in 0u64..=5000, paths in prop::collection::vec(params(), 1..=5)) {
        let s = solve_integer(n, &paths).unwrap();
        prop_assert_eq!(s.len(), paths.len());
        prop_assert_eq!(s.counts().iter().sum::<u64>(), n);
        prop_assert_eq!(s.total(), n);
    }

    #[test]
    fn relaxed_levels_equalise(n in 1u64..=10_000, paths in prop::collection::vec(params(), 2..=4)) {
        let x = solve_relaxed(n, &paths).unwrap();
        prop_assert!((x.iter().sum::<f64>() - n as f64).abs() <= 1e-6 * n as f64);
        let level = |j: usize| x[j] * paths[j].mu_ms + x[j].sqrt() * paths[j].w + paths[j].prop_ms;
        let used: Vec<usize> = (0..paths.len()).filter(|&j| x[j] > 0.0).collect();
        let top = used.iter().map(|&j| level(j)).fold(f64::NEG_INFINITY, f64::max);
        for &j in &used {
            prop_assert!((top - level(j)).abs() <= 1e-6 * top, "{:?}", x);
        }
        // Idle paths would only start above the common level.
        for j in (0..paths.len()).filter(|&j| x[j] == 0.0) {
            prop_assert!(paths[j].prop_ms >= top * (1.0 - 1e-9));
        }
    }

    #[test]
    fn integer_beats_every_rounding_corner(n in 1u64..=2000, paths in prop::collection::vec(params(), 2..=4)) {
        let best = d_upper(&solve_integer(n, &paths).unwrap(), &paths).unwrap();
        let relaxed = solve_relaxed(n, &paths).unwrap();
        for c in rounding_candidates(&relaxed, n) {
            prop_assert!(best <= d_upper(&c, &paths).unwrap());
        }
    }

    #[test]
    fn bound_grows_with_object_size(n in 1u64..=3000, paths in prop::collection::vec(params(), 1..=4)) {
        let a = d_upper(&solve_integer(n, &paths).unwrap(), &paths).unwrap();
        let b = d_upper(&solve_integer(n + 1, &paths).unwrap(), &paths).unwrap();
        prop_assert!(b >= a);
    }

    #[test]
    fn scaling_all_delays_scales_the_bound(
        n in 1u64..=3000,
        paths in prop::collection::vec(params(), 1..=4),
        exp in -6i32..=6,
    ) {
        // Powers of two scale every intermediate value exactly.
        let c = 2f64.powi(exp);
        let scaled: Vec<_> = paths.iter().map(|p| PathParams::new(p.mu_ms * c, p.w * c, p.prop_ms * c)).collect();
        let s = solve_integer(n, &paths).unwrap();
        let t = solve_integer(n, &scaled).unwrap();
        prop_assert_eq!(&s, &t);
        prop_assert_eq!(d_upper(&t, &scaled).unwrap(), c * d_upper(&s, &paths).unwrap());
    }

    #[test]
    fn scaling_by_arbitrary_factor_keeps_the_bound_proportional(
        n in 1u64..=3000,
        paths in prop::collection::vec(params(), 2..=3),
        c in 0.01f64..100.0,
    ) {
        let scaled: Vec<_> = paths.iter().map(|p| PathParams::new(p.mu_ms * c, p.w * c, p.prop_ms * c)).collect();
        let a = d_upper(&solve_integer(n, &paths).unwrap(), &paths).unwrap();
        let b = d_upper(&solve_integer(n, &scaled).unwrap(), &scaled).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-9 * b.max(1.0));
    }

    #[test]
    fn two_path_evaluation_budget(n in 1u64..=1_000_000, a in params(), b in params()) {
        let (_, stats) = solve_with_stats(n, &[a, b], false).unwrap();
        let budget = 2 * (64 - n.leading_zeros()) as usize + 4;
        prop_assert!(stats.evaluations <= budget, "{} > {}", stats.evaluations, budget);
    }

    #[test]
    fn t_upper_offsets_compose(n in 0u64..1000, u in 0u64..1000, p in params()) {
        prop_assert_eq!(t_upper(n, u, &p), t_upper(n + u, 0, &p));
    }
}

#[test]
fn empty_split_bound_is_largest_propagation() {
    let paths = [PathParams::new(1.0, 1.0, 3.0), PathParams::new(2.0, 0.0, 8.0)];
    assert_eq!(d_upper(&SplitVector::zeros(2), &paths).unwrap(), 8.0);
}
