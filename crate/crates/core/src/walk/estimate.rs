//! Monte Carlo estimators of the walk sequences `r_n`, `rho_n`, `U_n` and of
//! the occupation statistics of the origin.

use rand::Rng;
use rand_distr::Exp1;
use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::lattice::Site;
use crate::stats::{try_map_replicas, Moments, Purpose, Streams};

use super::{WalkModel, Walker};

/// An estimate with its Monte Carlo standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    fn proportion(hits: u64, m: u64) -> Estimate {
        let p = hits as f64 / m as f64;
        Estimate {
            value: p,
            se: (p * (1.0 - p) / m as f64).sqrt(),
        }
    }

    fn from_moments(m: &Moments) -> Estimate {
        Estimate {
            value: m.mean(),
            se: m.std_error(),
        }
    }
}

pub(crate) fn check_grid(n_grid: &[u64]) -> Result<()> {
    if n_grid.is_empty() {
        return invalid("n grid is empty");
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("n grid must be strictly increasing");
    }
    Ok(())
}

fn check_replicas(m: u64) -> Result<()> {
    if m == 0 {
        return invalid("replica count M must be at least 1");
    }
    Ok(())
}

/// First step `k` in `1..=n_max` with `X_k = 0`, if any.
pub(crate) fn first_return<R: Rng>(model: &WalkModel, n_max: u64, rng: R) -> Result<Option<u64>> {
    let mut w = Walker::new(model, rng);
    for k in 1..=n_max {
        if w.advance()?.is_origin() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub n: u64,
    pub r: Estimate,
}

/// `r_n = P(X_1 != 0, ..., X_n != 0)` on every grid point, from `m` shared paths.
pub fn estimate_r(model: &WalkModel, n_grid: &[u64], m: u64, streams: &Streams) -> Result<Vec<RateEstimate>> {
    check_grid(n_grid)?;
    check_replicas(m)?;
    let n_max = *n_grid.last().unwrap();
    let returns = try_map_replicas(m, |rep| first_return(model, n_max, streams.stream(rep, Purpose::Walk)))?;
    Ok(n_grid
        .iter()
        .map(|&n| {
            let survivors = returns.iter().filter(|t| t.is_none_or(|t| t > n)).count() as u64;
            RateEstimate {
                n,
                r: Estimate::proportion(survivors, m),
            }
        })
        .collect())
}

/// The two routes to `rho_n = E(R_n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub n: u64,
    /// `sum_{k=0}^n r_k` with `r_0 = 1`, i.e. the mean of `min(T, n + 1)` where
    /// `T` is the first return time.
    pub via_returns: Estimate,
    /// Mean range size.
    pub via_range: Estimate,
}

impl RhoEstimate {
    pub fn combined_se(&self) -> f64 {
        self.via_returns.se.hypot(self.via_range.se)
    }

    /// Whether the two estimates differ by at most `k` combined standard errors.
    pub fn agrees_within(&self, k: f64) -> bool {
        (self.via_returns.value - self.via_range.value).abs() <= k * self.combined_se()
    }
}

pub fn estimate_rho(model: &WalkModel, n_grid: &[u64], m: u64, streams: &Streams) -> Result<Vec<RhoEstimate>> {
    check_grid(n_grid)?;
    check_replicas(m)?;
    let n_max = *n_grid.last().unwrap();
    let profiles = try_map_replicas(m, |rep| -> Result<(Option<u64>, Vec<u64>)> {
        let mut w = Walker::new(model, streams.stream(rep, Purpose::Walk));
        let mut seen = FxHashSet::default();
        seen.insert(Site::ORIGIN);
        let mut first = None;
        let mut ranges = Vec::with_capacity(n_grid.len());
        let mut next = 0;
        while next < n_grid.len() && n_grid[next] == 0 {
            ranges.push(1);
            next += 1;
        }
        for k in 1..=n_max {
            let x = w.advance()?;
            if first.is_none() && x.is_origin() {
                first = Some(k);
            }
            seen.insert(x);
            if k == n_grid[next] {
                ranges.push(seen.len() as u64);
                next += 1;
            }
        }
        Ok((first, ranges))
    })?;
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let via_returns: Moments = profiles
                .iter()
                .map(|(t, _)| t.map_or(n + 1, |t| t.min(n + 1)) as f64)
                .collect();
            let via_range: Moments = profiles.iter().map(|(_, r)| r[j] as f64).collect();
            RhoEstimate {
                n,
                via_returns: Estimate::from_moments(&via_returns),
                via_range: Estimate::from_moments(&via_range),
            }
        })
        .collect())
}

/// Window `[a n, b n]` used for the return-in-window statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReturnWindow {
    pub a: f64,
    pub b: f64,
}

impl Default for ReturnWindow {
    fn default() -> Self {
        ReturnWindow { a: 1.0, b: 2.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OccupationStats {
    pub n: u64,
    pub r: Estimate,
    /// `U_n`, estimated by the mean of `L_n`.
    pub u: Estimate,
    /// `r_hat * L_n` per path.
    pub scaled_visits: Vec<f64>,
    /// `r_hat * l(0, n)` per path, `l(0, n)` being the visits weighted by fresh
    /// mean-one exponential marks.
    pub scaled_local_time: Vec<f64>,
    pub window: ReturnWindow,
    /// Fraction of paths that visit the origin at some step in `[a n, b n]`.
    pub window_return: Estimate,
}

pub fn occupation_stats(
    model: &WalkModel,
    n: u64,
    m: u64,
    streams: &Streams,
    window: ReturnWindow,
) -> Result<OccupationStats> {
    check_replicas(m)?;
    if !(window.a > 0.0 && window.b > window.a) || !window.b.is_finite() {
        return invalid(format!("return window needs 0 < a < b, got a={}, b={}", window.a, window.b));
    }
    let lo = (window.a * n as f64).ceil() as u64;
    let hi = (window.b * n as f64).floor() as u64;
    let horizon = n.max(hi);
    struct Replica {
        survived: bool,
        visits: u64,
        local_time: f64,
        window_hit: bool,
    }
    let reps = try_map_replicas(m, |rep| -> Result<Replica> {
        let mut w = Walker::new(model, streams.stream(rep, Purpose::Walk));
        let mut marks = streams.stream(rep, Purpose::Marks);
        let mut visits = 1u64;
        let mut local_time: f64 = marks.sample(Exp1);
        let mut survived = true;
        let mut window_hit = false;
        for k in 1..=horizon {
            if w.advance()?.is_origin() {
                if k <= n {
                    visits += 1;
                    local_time += marks.sample::<f64, _>(Exp1);
                    survived = false;
                }
                if k >= lo && k <= hi {
                    window_hit = true;
                }
            }
        }
        Ok(Replica {
            survived,
            visits,
            local_time,
            window_hit,
        })
    })?;
    let r = Estimate::proportion(reps.iter().filter(|x| x.survived).count() as u64, m);
    let u: Moments = reps.iter().map(|x| x.visits as f64).collect();
    Ok(OccupationStats {
        n,
        r,
        u: Estimate::from_moments(&u),
        scaled_visits: reps.iter().map(|x| r.value * x.visits as f64).collect(),
        scaled_local_time: reps.iter().map(|x| r.value * x.local_time).collect(),
        window,
        window_return: Estimate::proportion(reps.iter().filter(|x| x.window_hit).count() as u64, m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_vs_exponential;

    #[test]
    fn no_return_for_right_walk() {
        let m = WalkModel::asym1d(1.0).unwrap();
        let est = estimate_r(&m, &[1, 10, 1000], 50, &Streams::new(3)).unwrap();
        assert!(est.iter().all(|e| e.r.value == 1.0 && e.r.se == 0.0));
    }

    #[test]
    fn first_step_never_returns() {
        for m in [WalkModel::srw(1).unwrap(), WalkModel::heavy1d(0.5, 100).unwrap()] {
            let est = estimate_r(&m, &[1], 500, &Streams::new(4)).unwrap();
            assert_eq!(est[0].r.value, 1.0);
        }
    }

    // P(X_2 != 0) = 1/2 for srw(1).
    #[test]
    fn srw1_two_step_survival() {
        let est = estimate_r(&WalkModel::srw(1).unwrap(), &[2], 20_000, &Streams::new(5)).unwrap();
        assert!((est[0].r.value - 0.5).abs() <= 3.0 * est[0].r.se);
    }

    #[test]
    fn rho_routes_for_right_walk_are_exact() {
        let m = WalkModel::asym1d(1.0).unwrap();
        for e in estimate_rho(&m, &[0, 1, 7, 100], 20, &Streams::new(6)).unwrap() {
            assert_eq!(e.via_returns.value, (e.n + 1) as f64);
            assert_eq!(e.via_range.value, (e.n + 1) as f64);
            assert!(e.agrees_within(3.0));
        }
    }

    #[test]
    fn rho_two_steps_srw1() {
        let e = estimate_rho(&WalkModel::srw(1).unwrap(), &[2], 20_000, &Streams::new(7)).unwrap()[0];
        assert!((e.via_returns.value - 2.5).abs() <= 3.0 * e.via_returns.se);
        assert!((e.via_range.value - 2.5).abs() <= 3.0 * e.via_range.se);
        assert!(e.agrees_within(3.0));
    }

    #[test]
    fn grid_validation() {
        let m = WalkModel::srw(1).unwrap();
        assert!(estimate_r(&m, &[], 10, &Streams::new(1)).is_err());
        assert!(estimate_r(&m, &[5, 5], 10, &Streams::new(1)).is_err());
        assert!(estimate_r(&m, &[5], 0, &Streams::new(1)).is_err());
    }

    #[test]
    fn right_walk_occupation_is_trivial() {
        let m = WalkModel::asym1d(1.0).unwrap();
        let st = occupation_stats(&m, 1000, 20_000, &Streams::new(8), ReturnWindow::default()).unwrap();
        assert_eq!(st.r.value, 1.0);
        assert!(st.scaled_visits.iter().all(|&x| x == 1.0));
        assert_eq!(st.window_return.value, 0.0);
        // a single exponential mark per path
        assert!(ks_vs_exponential(&st.scaled_local_time).unwrap() < 0.02);
    }

    #[test]
    fn window_validation() {
        let m = WalkModel::srw(1).unwrap();
        let bad = ReturnWindow { a: 2.0, b: 1.0 };
        assert!(occupation_stats(&m, 10, 10, &Streams::new(1), bad).is_err());
    }
}
