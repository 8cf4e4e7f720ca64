//! SOS-FEC: opportunistic redundancy on top of the object split.
//!
//! For every path `i` the split is re-solved with that path's variability
//! term discounted by `gamma` (every other path keeps its full `w`). The
//! count the re-solve assigns to path `i` is what gets sent on it; the excess
//! over the plain split is redundant coded traffic. The receiver can rebuild
//! the object from any `n` of the packets sent.

use crate::error::{Error, Result};
use crate::scheduler::{split_object, PathParams, SplitVector};

pub const DEFAULT_GAMMA: f64 = 0.5;

/// Plain split plus per-path totals including redundancy.
#[derive(Debug, Clone, PartialEq)]
pub struct FecAllocation {
    pub base: SplitVector,
    pub totals: Vec<u64>,
    pub gamma: f64,
    pub redundancy: u64,
}

impl FecAllocation {
    /// Redundant packets on each path.
    pub fn extra_per_path(&self) -> Vec<u64> {
        self.totals
            .iter()
            .zip(self.base.counts())
            .map(|(t, b)| t - b)
            .collect()
    }
}

/// Per-path totals for an `n`-packet object. In-flight counts on `paths` are
/// honoured, so with idle paths the base split equals `solve_integer`.
pub fn solve_fec_split(n: u64, paths: &[PathParams], gamma: f64) -> Result<FecAllocation> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    let base = split_object(n, paths)?;
    let mut totals = Vec::with_capacity(paths.len());
    for i in 0..paths.len() {
        if gamma == 1.0 {
            totals.push(base.counts()[i]);
            continue;
        }
        let mut discounted = paths.to_vec();
        discounted[i].w *= gamma;
        let eta = split_object(n, &discounted)?;
        totals.push(eta.counts()[i]);
    }
    for (i, (&t, &b)) in totals.iter().zip(base.counts()).enumerate() {
        if t < b {
            return Err(Error::Infeasible(format!(
                "discounted split gave path {i} fewer packets ({t}) than the plain split ({b})"
            )));
        }
    }
    let redundancy = totals.iter().sum::<u64>() - base.total();
    Ok(FecAllocation {
        base,
        totals,
        gamma,
        redundancy,
    })
}

/// Packets needed at the receiver: the object size.
pub fn decode_threshold(allocation: &FecAllocation) -> u64 {
    allocation.base.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduler::solve_integer;
    use proptest::prelude::*;

    fn path(mu: f64, w: f64, prop: f64) -> PathParams {
        PathParams::new(mu, w, prop)
    }

    #[test]
    fn gamma_one_is_plain_split() {
        let paths = [path(10.0, 40.0, 0.0), path(12.0, 2.0, 3.0)];
        let a = solve_fec_split(100, &paths, 1.0).unwrap();
        assert_eq!(a.totals, a.base.counts());
        assert_eq!(a.redundancy, 0);
        assert_eq!(a.base, solve_integer(100, &paths).unwrap());
    }

    #[test]
    fn no_variability_no_redundancy() {
        let paths = [path(10.0, 0.0, 0.0), path(12.0, 0.0, 1.0)];
        for g in [0.0, 0.3, 0.9] {
            assert_eq!(solve_fec_split(57, &paths, g).unwrap().redundancy, 0);
        }
    }

    #[test]
    fn threshold_is_object_size() {
        let a = FecAllocation {
            base: SplitVector::new(vec![60, 40]),
            totals: vec![80, 40],
            gamma: 0.5,
            redundancy: 20,
        };
        assert_eq!(decode_threshold(&a), 100);
        let b = FecAllocation {
            totals: vec![100, 100],
            redundancy: 100,
            ..a.clone()
        };
        assert_eq!(decode_threshold(&b), 100);
        let c = FecAllocation {
            totals: vec![60, 40],
            redundancy: 0,
            ..a
        };
        assert_eq!(decode_threshold(&c), c.totals.iter().sum::<u64>());
    }

    #[test]
    fn gamma_out_of_range() {
        let paths = [path(1.0, 1.0, 0.0)];
        assert!(solve_fec_split(3, &paths, 1.5).is_err());
        assert!(solve_fec_split(3, &paths, -0.1).is_err());
    }

    fn brute_eta(n: u64, paths: &[PathParams; 2], i: usize, gamma: f64) -> u64 {
        let mut p = *paths;
        p[i].w *= gamma;
        let term = |j: usize, k: u64| k as f64 * p[j].mu_ms + (k as f64).sqrt() * p[j].w + p[j].prop_ms;
        let mut best = (0, f64::INFINITY);
        for k in (0..=n).rev() {
            let mut v = f64::NEG_INFINITY;
            if k > 0 {
                v = v.max(term(0, k));
            }
            if k < n {
                v = v.max(term(1, n - k));
            }
            if v < best.1 {
                best = (k, v);
            }
        }
        if i == 0 {
            best.0
        } else {
            n - best.0
        }
    }

    proptest! {
        #[test]
        fn totals_match_brute_force(
            n in 1u64..=100,
            mu in prop::array::uniform2(0.1f64..50.0),
            w in prop::array::uniform2(0.0f64..60.0),
            prop_ms in prop::array::uniform2(0.0f64..30.0),
            gamma in 0.0f64..1.0,
        ) {
            let paths = [path(mu[0], w[0], prop_ms[0]), path(mu[1], w[1], prop_ms[1])];
            let a = solve_fec_split(n, &paths, gamma).unwrap();
            for i in 0..2 {
                prop_assert_eq!(a.totals[i], brute_eta(n, &paths, i, gamma));
            }
        }

        #[test]
        fn redundancy_never_negative(
            n in 1u64..=300,
            params in prop::collection::vec((0.1f64..50.0, 0.0f64..60.0, 0.0f64..30.0), 2..=4),
            gamma in 0.0f64..=1.0,
        ) {
            let paths: Vec<_> = params.iter().map(|&(m, w, p)| path(m, w, p)).collect();
            let a = solve_fec_split(n, &paths, gamma).unwrap();
            for (t, b) in a.totals.iter().zip(a.base.counts()) {
                prop_assert!(t >= b);
            }
            prop_assert_eq!(a.redundancy, a.totals.iter().sum::<u64>() - n);
        }
    }
}
