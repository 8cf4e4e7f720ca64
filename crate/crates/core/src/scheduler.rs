//! Object-aware split of an `n`-packet object across `m` paths.
//!
//! Each path `j` is summarised by its mean inter-packet delay `mu`, a
//! variability parameter `w` derived from a Chernoff-Hoeffding bound on the
//! inter-packet delay range `[a, b]`, and its propagation delay `P`. The
//! high-probability bound on the time needed to push `k` packets through a
//! path that already carries `u` undelivered packets is
//!
//! ```text
//! T_U(k) = (k + u) * mu + sqrt(k + u) * w
//! ```
//!
//! and the object bound of a split is `D_U = max_j T_U(n_j) + P_j` over the
//! paths that carry packets of the object. The scheduler picks the integer
//! split minimising `D_U`. For two paths this is a bisection on the count of
//! the first path; for more paths the relaxed (fractional) problem is solved
//! first by equalising `T_U + P` over the used paths, then the integer optimum
//! is recovered from its floor.
//!
//! Ties between integer splits with equal `D_U` are broken towards giving
//! more packets to the lowest-index path (lexicographically largest split).

use std::cell::Cell;

use crate::error::{Error, Result};

/// Per-path delay statistics feeding every scheduling decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    /// Mean inter-packet delay.
    pub mu_ms: f64,
    /// Lower bound on the inter-packet delay.
    pub a_ms: f64,
    /// Upper bound on the inter-packet delay.
    pub b_ms: f64,
    /// Variability parameter, in ms per square-root packet.
    pub w: f64,
    /// Propagation delay, added once per object.
    pub prop_ms: f64,
    /// Packets dispatched on this path and not yet delivered.
    pub in_flight: u64,
}

impl PathParams {
    /// Parameters with a known mean and variability; `a` and `b` are set to
    /// the mean.
    pub fn new(mu_ms: f64, w: f64, prop_ms: f64) -> Self {
        PathParams {
            mu_ms,
            a_ms: mu_ms,
            b_ms: mu_ms,
            w,
            prop_ms,
            in_flight: 0,
        }
    }

    /// Build parameters from delay bounds, deriving `w` for the per-path
    /// tail probability `epsilon_j`.
    pub fn from_bounds(mu_ms: f64, a_ms: f64, b_ms: f64, prop_ms: f64, epsilon_j: f64) -> Result<Self> {
        let w = compute_w(epsilon_j, a_ms, b_ms)?;
        Ok(PathParams {
            mu_ms,
            a_ms,
            b_ms,
            w,
            prop_ms,
            in_flight: 0,
        })
    }

    pub fn with_in_flight(mut self, in_flight: u64) -> Self {
        self.in_flight = in_flight;
        self
    }

    /// A path whose inter-packet delay is identically zero.
    fn is_free(&self) -> bool {
        self.mu_ms == 0.0 && self.w == 0.0
    }
}

/// Per-path packet counts for one object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplitVector {
    counts: Vec<u64>,
    total: u64,
}

impl SplitVector {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        SplitVector { counts, total }
    }

    pub fn zeros(m: usize) -> Self {
        SplitVector::new(vec![0; m])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn into_counts(self) -> Vec<u64> {
        self.counts
    }
}

/// Design parameters of the object scheduler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerConfig {
    /// Target probability that the realised object delay exceeds `D_U`.
    pub epsilon: f64,
    pub max_paths: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            epsilon: 0.05,
            max_paths: 8,
        }
    }
}

impl SchedulerConfig {
    /// The tail budget is shared evenly between the paths.
    pub fn per_path_epsilon(&self, m: usize) -> f64 {
        self.epsilon / m as f64
    }
}

/// Variability parameter from the Chernoff-Hoeffding bound:
/// `w = sqrt(-ln(eps_j) * (b - a)^2 / 2)`.
pub fn compute_w(epsilon_j: f64, a_ms: f64, b_ms: f64) -> Result<f64> {
    if !(epsilon_j > 0.0 && epsilon_j <= 1.0) {
        return Err(Error::Domain(format!(
            "per-path epsilon must lie in (0, 1], got {epsilon_j}"
        )));
    }
    if a_ms.is_nan() || b_ms.is_nan() || a_ms > b_ms {
        return Err(Error::Validation(format!(
            "lower delay bound {a_ms} exceeds upper bound {b_ms}"
        )));
    }
    let range = b_ms - a_ms;
    // ln(1) is exactly zero, so eps_j = 1 yields w = 0 without special casing.
    Ok((-epsilon_j.ln() * range * range / 2.0).max(0.0).sqrt())
}

/// `T_U(n_j + u_j)`; propagation delay is not included.
pub fn t_upper(n_j: u64, u_j: u64, params: &PathParams) -> f64 {
    let k = (n_j + u_j) as f64;
    k * params.mu_ms + k.sqrt() * params.w
}

/// Object delay bound of `split`, ignoring packets already in flight.
///
/// Paths carrying no packets of the object do not contribute; an empty
/// object is defined to have bound `max_j P_j`.
pub fn d_upper(split: &SplitVector, paths: &[PathParams]) -> Result<f64> {
    check_lengths(split, paths)?;
    Ok(Objective::new(paths, false).eval(split.counts()))
}

/// Object delay bound of `split` on top of each path's in-flight backlog.
pub fn d_upper_loaded(split: &SplitVector, paths: &[PathParams]) -> Result<f64> {
    check_lengths(split, paths)?;
    Ok(Objective::new(paths, true).eval(split.counts()))
}

fn check_lengths(split: &SplitVector, paths: &[PathParams]) -> Result<()> {
    if split.len() != paths.len() {
        return Err(Error::Validation(format!(
            "split has {} entries but there are {} paths",
            split.len(),
            paths.len()
        )));
    }
    Ok(())
}

fn validate_paths(paths: &[PathParams]) -> Result<()> {
    if paths.is_empty() {
        return Err(Error::Validation("at least one path is required".into()));
    }
    for (j, p) in paths.iter().enumerate() {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(p.mu_ms) && ok(p.w) && ok(p.prop_ms)) {
            return Err(Error::Validation(format!(
                "path {j}: mu, w and propagation delay must be finite and nonnegative"
            )));
        }
    }
    if paths.iter().all(PathParams::is_free) {
        return Err(Error::Degenerate);
    }
    Ok(())
}

/// Relaxed (fractional) optimum, ignoring in-flight packets.
///
/// Used paths end up with equal `T_U + P`; a path whose propagation delay
/// alone exceeds that level receives nothing.
pub fn solve_relaxed(n: u64, paths: &[PathParams]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Validation("object must contain at least one packet".into()));
    }
    validate_paths(paths)?;
    Ok(Objective::new(paths, false).relaxed(n).0)
}

/// Relaxed optimum on top of each path's in-flight backlog.
pub fn solve_relaxed_loaded(n: u64, paths: &[PathParams]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Validation("object must contain at least one packet".into()));
    }
    validate_paths(paths)?;
    Ok(Objective::new(paths, true).relaxed(n).0)
}

/// Integer split minimising `D_U`, ignoring in-flight packets.
pub fn solve_integer(n: u64, paths: &[PathParams]) -> Result<SplitVector> {
    Ok(solve_with_stats(n, paths, false)?.0)
}

/// Integer split minimising `D_U` evaluated at `n_j + u_j`. The returned
/// counts are the new packets only.
pub fn split_object(n: u64, paths: &[PathParams]) -> Result<SplitVector> {
    Ok(solve_with_stats(n, paths, true)?.0)
}

/// Work done by one integer solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Number of split evaluations (each computes every path's `T_U + P`).
    pub evaluations: usize,
}

/// Integer solve that also reports how many split evaluations it needed.
pub fn solve_with_stats(n: u64, paths: &[PathParams], loaded: bool) -> Result<(SplitVector, SolveStats)> {
    validate_paths(paths)?;
    let m = paths.len();
    if n == 0 {
        return Ok((SplitVector::zeros(m), SolveStats::default()));
    }
    let obj = Objective::new(paths, loaded);
    let counts = match m {
        1 => vec![n],
        2 => obj.bisect_two(n),
        _ => obj.integer_general(n),
    };
    Ok((
        SplitVector::new(counts),
        SolveStats {
            evaluations: obj.evals.get(),
        },
    ))
}

/// Every floor/ceil rounding of `relaxed` whose entries sum to `n`.
pub fn rounding_candidates(relaxed: &[f64], n: u64) -> Vec<SplitVector> {
    let m = relaxed.len();
    let floors: Vec<u64> = relaxed.iter().map(|x| x.max(0.0).floor() as u64).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << m) {
        let counts: Vec<u64> = (0..m)
            .map(|j| {
                let up = mask >> j & 1 == 1 && relaxed[j].fract() > 0.0;
                floors[j] + u64::from(up)
            })
            .collect();
        if counts.iter().sum::<u64>() == n {
            let s = SplitVector::new(counts);
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

/// Per-path `T_U + P` terms with optional in-flight offsets.
struct Objective<'a> {
    paths: &'a [PathParams],
    offsets: Vec<u64>,
    evals: Cell<usize>,
}

impl<'a> Objective<'a> {
    fn new(paths: &'a [PathParams], loaded: bool) -> Self {
        let offsets = paths
            .iter()
            .map(|p| if loaded { p.in_flight } else { 0 })
            .collect();
        Objective {
            paths,
            offsets,
            evals: Cell::new(0),
        }
    }

    /// `T_U + P` on path `j` when it carries `k >= 1` new packets.
    fn term(&self, j: usize, k: u64) -> f64 {
        t_upper(k, self.offsets[j], &self.paths[j]) + self.paths[j].prop_ms
    }

    /// `None` stands for "path unused", which never attains the maximum.
    fn term_opt(&self, j: usize, k: u64) -> Option<f64> {
        (k > 0).then(|| self.term(j, k))
    }

    fn eval(&self, counts: &[u64]) -> f64 {
        self.evals.set(self.evals.get() + 1);
        let used = counts
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(j, &k)| self.term(j, k))
            .fold(f64::NEG_INFINITY, f64::max);
        if used == f64::NEG_INFINITY {
            self.paths.iter().map(|p| p.prop_ms).fold(f64::NEG_INFINITY, f64::max)
        } else {
            used
        }
    }

    /// Two paths: the first path's term is increasing in its count `k` and the
    /// second's is decreasing, so the max is unimodal in `k`. Find the first
    /// `k` where the first term reaches the second and compare `k - 1`, `k`.
    fn bisect_two(&self, n: u64) -> Vec<u64> {
        let crosses = |k: u64| {
            self.evals.set(self.evals.get() + 1);
            match (self.term_opt(0, k), self.term_opt(1, n - k)) {
                (_, None) => true,
                (None, Some(_)) => false,
                (Some(f), Some(g)) => f >= g,
            }
        };
        let (mut lo, mut hi) = (0u64, n);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if crosses(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let mut best = lo;
        let mut best_val = self.eval(&[lo, n - lo]);
        if lo > 0 {
            let below = self.eval(&[lo - 1, n - lo + 1]);
            if below < best_val {
                best = lo - 1;
                best_val = below;
            }
        }
        // A zero-delay first path is flat, so every larger count ties.
        if self.paths[0].is_free() && best < n && self.eval(&[n, 0]) <= best_val {
            best = n;
        }
        vec![best, n - best]
    }

    /// Any number of paths: greedy completion from just below the relaxed
    /// optimum gives the optimal level, then a lexicographic fill at that
    /// level applies the tie-break.
    fn integer_general(&self, n: u64) -> Vec<u64> {
        let (relaxed, _) = self.relaxed(n);
        let mut counts: Vec<u64> = relaxed
            .iter()
            .map(|x| (x.floor() as u64).saturating_sub(1))
            .collect();
        let mut placed: u64 = counts.iter().sum();
        if placed > n {
            counts.iter_mut().for_each(|c| *c = 0);
            placed = 0;
        }
        // Marginal allocation: each remaining packet goes where it raises
        // that path's term the least.
        while placed < n {
            let (j, _) = (0..self.paths.len())
                .map(|j| (j, self.term(j, counts[j] + 1)))
                .fold((usize::MAX, f64::INFINITY), |acc, (j, v)| if v < acc.1 { (j, v) } else { acc });
            counts[j] += 1;
            placed += 1;
        }
        let level = self.eval(&counts);
        self.lexicographic_fill(n, level).unwrap_or(counts)
    }

    /// Largest new-packet count path `j` can take with its term at most `level`.
    fn capacity(&self, j: usize, level: f64, n: u64) -> u64 {
        let p = &self.paths[j];
        if p.is_free() {
            return if p.prop_ms <= level { n } else { 0 };
        }
        let total = invert_term(p, level);
        let mut k = if total.is_finite() {
            ((total.floor() as u64).saturating_sub(self.offsets[j])).min(n)
        } else {
            n
        };
        while k < n && self.term(j, k + 1) <= level {
            k += 1;
        }
        while k > 0 && self.term(j, k) > level {
            k -= 1;
        }
        k
    }

    fn lexicographic_fill(&self, n: u64, level: f64) -> Option<Vec<u64>> {
        let mut rem = n;
        let mut counts = Vec::with_capacity(self.paths.len());
        for j in 0..self.paths.len() {
            let take = self.capacity(j, level, n).min(rem);
            counts.push(take);
            rem -= take;
        }
        (rem == 0).then_some(counts)
    }

    /// New-packet load path `j` carries when its term equals `level`.
    fn load_at(&self, j: usize, level: f64) -> f64 {
        (invert_term(&self.paths[j], level) - self.offsets[j] as f64).max(0.0)
    }

    /// Bisection on the common level `lambda`. Returns the fractional split
    /// (summing to `n`) and the level.
    fn relaxed(&self, n: u64) -> (Vec<f64>, f64) {
        let m = self.paths.len();
        let target = n as f64;
        let free = (0..m)
            .filter(|&j| self.paths[j].is_free())
            .min_by(|&a, &b| self.paths[a].prop_ms.total_cmp(&self.paths[b].prop_ms));
        let busy: Vec<usize> = (0..m).filter(|&j| !self.paths[j].is_free()).collect();
        let load = |lambda: f64| busy.iter().map(|&j| self.load_at(j, lambda)).sum::<f64>();

        let mut out = vec![0.0; m];
        if let Some(f) = free {
            let cap_level = self.paths[f].prop_ms;
            let carried = load(cap_level);
            if carried < target {
                // The zero-delay path absorbs whatever the others cannot
                // carry at its own propagation delay.
                for &j in &busy {
                    out[j] = self.load_at(j, cap_level);
                }
                out[f] = target - carried;
                return (out, cap_level);
            }
        }

        let mut lo = busy
            .iter()
            .map(|&j| t_upper(0, self.offsets[j], &self.paths[j]) + self.paths[j].prop_ms)
            .fold(f64::INFINITY, f64::min);
        let mut step = 1.0f64.max(lo.abs());
        let mut hi = lo + step;
        while load(hi) < target {
            lo = hi;
            step *= 2.0;
            hi = lo + step;
        }
        let mut lambda = hi;
        for _ in 0..400 {
            if hi - lo <= 1e-12 * hi.abs().max(f64::MIN_POSITIVE) {
                break;
            }
            let mid = lo + (hi - lo) / 2.0;
            let s = load(mid);
            if (s - target).abs() <= 1e-9 * target {
                lambda = mid;
                break;
            }
            if s < target {
                lo = mid;
            } else {
                hi = mid;
            }
            lambda = hi;
        }
        let mut total = 0.0;
        for &j in &busy {
            out[j] = self.load_at(j, lambda);
            total += out[j];
        }
        if total > 0.0 {
            let scale = target / total;
            out.iter_mut().for_each(|x| *x *= scale);
        }
        (out, lambda)
    }
}

/// Total packet count `k` (including backlog) at which `k*mu + sqrt(k)*w + P`
/// reaches `level`; zero below the propagation delay.
fn invert_term(p: &PathParams, level: f64) -> f64 {
    let c = level - p.prop_ms;
    if c <= 0.0 {
        return 0.0;
    }
    // Positive root of mu*s^2 + w*s - c = 0 in the cancellation-free form.
    let s = 2.0 * c / (p.w + (p.w * p.w + 4.0 * p.mu_ms * c).sqrt());
    s * s
}
