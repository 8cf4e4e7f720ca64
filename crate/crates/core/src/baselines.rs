//! Per-packet baseline schedulers: EDF and SEDPF.
//!
//! Both decide one packet at a time from the per-path backlog. EDF picks the
//! path with the earliest expected delivery of the new packet. SEDPF models
//! each path's backlog as a Gaussian sum and picks the path that minimises
//! the expected maximum delivery time over all paths, using Clark's
//! moment-matching approximation for the maximum of Gaussians.

use statrs::function::erf::erfc;

/// Backlog and delay model of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoad {
    pub in_flight: u64,
    pub mean_ms: f64,
    pub stddev_ms: f64,
    pub prop_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathQueueState {
    pub paths: Vec<PathLoad>,
}

impl PathQueueState {
    pub fn new(paths: Vec<PathLoad>) -> Self {
        PathQueueState { paths }
    }

    pub fn assign(&mut self, path: usize) {
        self.paths[path].in_flight += 1;
    }

    pub fn deliver(&mut self, path: usize) {
        let p = &mut self.paths[path];
        p.in_flight = p.in_flight.checked_sub(1).expect("delivery on a path with nothing in flight");
    }
}

/// Expected delivery time of one more packet on each path.
fn next_delivery(p: &PathLoad) -> f64 {
    (p.in_flight + 1) as f64 * p.mean_ms + p.prop_ms
}

/// Earliest expected delivery; ties go to the lowest index.
pub fn edf_assign(state: &PathQueueState) -> usize {
    assert!(!state.paths.is_empty(), "no paths");
    let mut best = 0;
    for j in 1..state.paths.len() {
        if next_delivery(&state.paths[j]) < next_delivery(&state.paths[best]) {
            best = j;
        }
    }
    best
}

/// Smallest expected maximum delivery time across paths after adding the
/// packet. Equal expectations fall back to the candidate's own expected
/// delivery, then to the lowest index.
pub fn sedpf_assign(state: &PathQueueState) -> usize {
    assert!(!state.paths.is_empty(), "no paths");
    let mut best = (0, f64::INFINITY, f64::INFINITY);
    for c in 0..state.paths.len() {
        let mut acc: Option<Gaussian> = None;
        for (j, p) in state.paths.iter().enumerate() {
            let k = (p.in_flight + u64::from(j == c)) as f64;
            let g = Gaussian {
                mean: k * p.mean_ms + p.prop_ms,
                var: k * p.stddev_ms * p.stddev_ms,
            };
            acc = Some(match acc {
                None => g,
                Some(a) => clark_max(a, g),
            });
        }
        let expected = acc.map(|g| g.mean).unwrap_or(f64::INFINITY);
        let own = next_delivery(&state.paths[c]);
        if expected < best.1 || (expected == best.1 && own < best.2) {
            best = (c, expected, own);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub var: f64,
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// First two moments of `max(X, Y)` for independent Gaussians, matched back
/// to a Gaussian (Clark, 1961).
pub fn clark_max(x: Gaussian, y: Gaussian) -> Gaussian {
    let theta = (x.var + y.var).sqrt();
    if theta <= 1e-12 * (x.mean.abs() + y.mean.abs()).max(1.0) {
        return if x.mean >= y.mean { x } else { y };
    }
    let alpha = (x.mean - y.mean) / theta;
    let (cdf, cdf_neg, pdf) = (std_normal_cdf(alpha), std_normal_cdf(-alpha), std_normal_pdf(alpha));
    let m1 = x.mean * cdf + y.mean * cdf_neg + theta * pdf;
    let m2 = (x.mean * x.mean + x.var) * cdf + (y.mean * y.mean + y.var) * cdf_neg + (x.mean + y.mean) * theta * pdf;
    Gaussian {
        mean: m1,
        var: (m2 - m1 * m1).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(in_flight: u64, mean_ms: f64, stddev_ms: f64, prop_ms: f64) -> PathLoad {
        PathLoad {
            in_flight,
            mean_ms,
            stddev_ms,
            prop_ms,
        }
    }

    #[test]
    fn edf_examples() {
        let s = PathQueueState::new(vec![load(0, 10.0, 0.0, 0.0), load(0, 12.0, 0.0, 0.0)]);
        assert_eq!(edf_assign(&s), 0);
        let s = PathQueueState::new(vec![load(1, 10.0, 0.0, 0.0), load(0, 12.0, 0.0, 0.0)]);
        assert_eq!(edf_assign(&s), 1);
        let s = PathQueueState::new(vec![load(2, 5.0, 0.0, 1.0), load(2, 5.0, 0.0, 1.0)]);
        assert_eq!(edf_assign(&s), 0);
    }

    #[test]
    fn sedpf_single_path() {
        let s = PathQueueState::new(vec![load(3, 10.0, 4.0, 0.0)]);
        assert_eq!(sedpf_assign(&s), 0);
    }

    #[test]
    fn sedpf_avoids_variable_path_for_small_objects() {
        // Candidate 1: E[max(N(10, 50^2), 0)] ~ 25.34; candidate 2: E[max(0, N(12, 1))] ~ 12.
        let s = PathQueueState::new(vec![load(0, 10.0, 50.0, 0.0), load(0, 12.0, 1.0, 0.0)]);
        assert_eq!(sedpf_assign(&s), 1);
        let a = clark_max(Gaussian { mean: 10.0, var: 2500.0 }, Gaussian { mean: 0.0, var: 0.0 });
        let exact = 10.0 * std_normal_cdf(0.2) + 50.0 * std_normal_pdf(0.2);
        assert!((a.mean - exact).abs() < 1e-9);
        assert!((a.mean - 25.345).abs() < 0.001, "{a:?}");
    }

    #[test]
    fn clark_matches_monte_carlo_moments() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let x = Gaussian { mean: 3.0, var: 4.0 };
        let y = Gaussian { mean: 4.0, var: 1.0 };
        let got = clark_max(x, y);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let nx = Normal::<f64>::new(3.0, 2.0).unwrap();
        let ny = Normal::<f64>::new(4.0, 1.0).unwrap();
        let n = 400_000;
        let samples: Vec<f64> = (0..n).map(|_| nx.sample(&mut rng).max(ny.sample(&mut rng))).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((got.mean - mean).abs() < 0.01, "{got:?} vs {mean}");
        assert!((got.var - var).abs() < 0.03, "{got:?} vs {var}");
    }

    #[test]
    fn edf_balances_stream() {
        let mut s = PathQueueState::new(vec![load(0, 3.0, 0.0, 0.0), load(0, 7.0, 0.0, 0.0), load(0, 2.0, 0.0, 0.0)]);
        for _ in 0..500 {
            let j = edf_assign(&s);
            s.assign(j);
            let loads: Vec<f64> = s.paths.iter().map(|p| p.in_flight as f64 * p.mean_ms).collect();
            let max_mean = 7.0;
            for a in 0..3 {
                for b in 0..3 {
                    if s.paths[a].in_flight > 0 && s.paths[b].in_flight > 0 {
                        assert!((loads[a] - loads[b]).abs() <= max_mean + 1e-9, "{loads:?}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn zero_variance_sedpf_is_edf(
            paths in prop::collection::vec((0.1f64..30.0, 0.0f64..20.0), 1..=4),
            initial in prop::collection::vec(0u64..20, 4),
            steps in 1usize..60,
        ) {
            let mut s = PathQueueState::new(
                paths.iter().zip(&initial).map(|(&(m, p), &u)| load(u, m, 0.0, p)).collect(),
            );
            for _ in 0..steps {
                let e = edf_assign(&s);
                prop_assert_eq!(sedpf_assign(&s), e);
                s.assign(e);
            }
        }

        #[test]
        fn assigners_are_deterministic(
            paths in prop::collection::vec((0.1f64..30.0, 0.0f64..20.0, 0.0f64..10.0, 0u64..50), 1..=4),
        ) {
            let s = PathQueueState::new(paths.iter().map(|&(m, sd, p, u)| load(u, m, sd, p)).collect());
            prop_assert_eq!(edf_assign(&s), edf_assign(&s.clone()));
            prop_assert_eq!(sedpf_assign(&s), sedpf_assign(&s.clone()));
        }
    }
}
