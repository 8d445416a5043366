//! The scaling bundle: `r_n`, `rho_n`, `U_n` on an n-grid and the derived
//! `v_n = s_{rho_n}`, `nu_n = v_n / r_n`, its inverse `n(.)` and `a(eps)`.
//!
//! Between grid points all sequences are interpolated linearly in log-log
//! coordinates. The inverse is right-continuous: `n(u)` is the largest `n` in
//! the interpolated grid with `nu_n <= u`.

use serde::Serialize;

use crate::env::TailLaw;
use crate::error::{invalid, Error, Result};
use crate::stats::{isotonic_nonincreasing, try_map_replicas, Moments, Purpose, Streams};

use super::estimate::check_grid;
use super::{WalkModel, Walker};

/// `ceil(2^(j/2))` for `j = 0, 1, ...` below `n_max`, deduplicated, followed by `n_max`.
pub fn geometric_grid(n_max: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut j = 0i32;
    loop {
        let n = 2f64.powf(j as f64 / 2.0).ceil() as u64;
        if n >= n_max {
            break;
        }
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        j += 1;
    }
    grid.push(n_max.max(1));
    grid
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub n: u64,
    /// Raw survival fraction.
    pub r_raw: f64,
    /// Isotonic (nonincreasing) fit of `r_raw`.
    pub r: f64,
    pub r_se: f64,
    pub rho: f64,
    pub rho_se: f64,
    pub u: f64,
    pub u_se: f64,
    pub s: f64,
    pub v: f64,
    pub nu: f64,
}

#[derive(Clone, Debug)]
pub struct ScalingBundle {
    law: TailLaw,
    replicas: u64,
    rows: Vec<ScalingRow>,
}

/// Position inside the grid: `ln n = (1 - w) ln n_j + w ln n_{j+1}`.
#[derive(Clone, Copy, Debug)]
struct GridPos {
    j: usize,
    w: f64,
}

fn lerp_log(a: f64, b: f64, w: f64) -> f64 {
    if w == 0.0 {
        return a;
    }
    ((1.0 - w) * a.ln() + w * b.ln()).exp()
}

impl ScalingBundle {
    /// Estimates the bundle on `n_grid` (strictly increasing, `n >= 1`) from `m`
    /// walk replicas. `rho` is the mean of `min(T, n + 1)`, `T` the first return
    /// time, which is `sum_{k <= n} r_k` for the empirical survival curve.
    pub fn estimate(model: &WalkModel, law: TailLaw, n_grid: &[u64], m: u64, streams: &Streams) -> Result<Self> {
        check_grid(n_grid)?;
        if n_grid[0] == 0 {
            return invalid("scaling grid must start at n >= 1");
        }
        if m == 0 {
            return invalid("replica count M must be at least 1");
        }
        let n_max = *n_grid.last().unwrap();
        let reps = try_map_replicas(m, |rep| -> Result<(Option<u64>, Vec<u64>)> {
            let mut w = Walker::new(model, streams.stream(rep, Purpose::Walk));
            let mut first = None;
            let mut visits = 1u64;
            let mut at_grid = Vec::with_capacity(n_grid.len());
            let mut next = 0;
            for k in 1..=n_max {
                if w.advance()?.is_origin() {
                    visits += 1;
                    first.get_or_insert(k);
                }
                if k == n_grid[next] {
                    at_grid.push(visits);
                    next += 1;
                }
            }
            Ok((first, at_grid))
        })?;
        let mf = m as f64;
        let r_raw: Vec<f64> = n_grid
            .iter()
            .map(|&n| reps.iter().filter(|(t, _)| t.is_none_or(|t| t > n)).count() as f64 / mf)
            .collect();
        let r = isotonic_nonincreasing(&r_raw, &vec![1.0; r_raw.len()]);
        let mut rows = Vec::with_capacity(n_grid.len());
        for (j, &n) in n_grid.iter().enumerate() {
            let rho: Moments = reps.iter().map(|(t, _)| t.map_or(n + 1, |t| t.min(n + 1)) as f64).collect();
            let u: Moments = reps.iter().map(|(_, l)| l[j] as f64).collect();
            let s = law.quantile_at(rho.mean())?;
            let nu = if r[j] > 0.0 { s / r[j] } else { f64::INFINITY };
            rows.push(ScalingRow {
                n,
                r_raw: r_raw[j],
                r: r[j],
                r_se: (r_raw[j] * (1.0 - r_raw[j]) / mf).sqrt(),
                rho: rho.mean(),
                rho_se: rho.std_error(),
                u: u.mean(),
                u_se: u.std_error(),
                s,
                v: s,
                nu,
            });
        }
        Ok(ScalingBundle { law, replicas: m, rows })
    }

    pub fn law(&self) -> &TailLaw {
        &self.law
    }

    pub fn replicas(&self) -> u64 {
        self.replicas
    }

    pub fn rows(&self) -> &[ScalingRow] {
        &self.rows
    }

    fn nu_range(&self) -> (f64, f64) {
        (self.rows[0].nu, self.rows.last().unwrap().nu)
    }

    fn exhausted(&self, requested: f64) -> Error {
        let (lo, hi) = self.nu_range();
        Error::GridExhausted { requested, lo, hi }
    }

    fn locate_nu(&self, u: f64) -> Result<GridPos> {
        if !(u > 0.0) || u.is_nan() {
            return invalid(format!("n(u) needs u > 0, got {u}"));
        }
        let j = self.rows.partition_point(|row| row.nu <= u);
        if j == 0 {
            let (lo, _) = self.nu_range();
            return invalid(format!(
                "n(u) requested below the grid: u = {u:e} < nu at the first grid point = {lo:e}"
            ));
        }
        let j = j - 1;
        if j == self.rows.len() - 1 {
            return if u == self.rows[j].nu {
                Ok(GridPos { j, w: 0.0 })
            } else {
                Err(self.exhausted(u))
            };
        }
        let (a, b) = (self.rows[j].nu, self.rows[j + 1].nu);
        if !b.is_finite() {
            return Err(self.exhausted(u));
        }
        Ok(GridPos {
            j,
            w: (u / a).ln() / (b / a).ln(),
        })
    }

    fn locate_n(&self, n: f64) -> Result<GridPos> {
        let first = self.rows[0].n as f64;
        let last = self.rows.last().unwrap().n as f64;
        if n > last && n.is_finite() {
            return Err(Error::GridExhausted {
                requested: n,
                lo: first,
                hi: last,
            });
        }
        if !(n >= first && n <= last) {
            return invalid(format!("n = {n} outside the scaling grid [{first}, {last}]"));
        }
        let j = self.rows.partition_point(|row| row.n as f64 <= n) - 1;
        if j == self.rows.len() - 1 {
            return Ok(GridPos { j, w: 0.0 });
        }
        let (a, b) = (self.rows[j].n as f64, self.rows[j + 1].n as f64);
        Ok(GridPos {
            j,
            w: (n / a).ln() / (b / a).ln(),
        })
    }

    fn at<F: Fn(&ScalingRow) -> f64>(&self, pos: GridPos, f: F) -> f64 {
        let a = f(&self.rows[pos.j]);
        if pos.w == 0.0 {
            return a;
        }
        lerp_log(a, f(&self.rows[pos.j + 1]), pos.w)
    }

    /// `n(u)`, the right-continuous inverse of `nu`.
    pub fn n_of(&self, u: f64) -> Result<f64> {
        let pos = self.locate_nu(u)?;
        Ok(self.at(pos, |r| r.n as f64))
    }

    /// `v_{n(u)}`, interpolated at the same grid position as `n(u)`.
    pub fn v_at_nu(&self, u: f64) -> Result<f64> {
        let pos = self.locate_nu(u)?;
        Ok(self.at(pos, |r| r.v))
    }

    /// `nu_n` for real `n` inside the grid.
    pub fn nu_of(&self, n: f64) -> Result<f64> {
        let pos = self.locate_n(n)?;
        Ok(self.at(pos, |r| r.nu))
    }

    /// `v_n` for real `n` inside the grid.
    pub fn v_of(&self, n: f64) -> Result<f64> {
        let pos = self.locate_n(n)?;
        Ok(self.at(pos, |r| r.v))
    }

    /// `a(eps) = 1 / v_{n(1/eps)}` for `eps` in `(0, 1)`.
    pub fn a(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("eps must lie in (0,1), got {eps}"));
        }
        Ok(1.0 / self.v_at_nu(1.0 / eps)?)
    }
}

/// Scale factor `a(eps)` for every requested `eps`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingPoint {
    pub eps: f64,
    pub n: f64,
    pub a: f64,
}

/// Estimates the bundle on `geometric_grid(n_max)` and evaluates `a(eps)` on
/// `eps_grid`.
pub fn build_scaling(
    model: &WalkModel,
    law: TailLaw,
    eps_grid: &[f64],
    n_max: u64,
    m: u64,
    streams: &Streams,
) -> Result<(ScalingBundle, Vec<ScalingPoint>)> {
    if eps_grid.is_empty() {
        return invalid("eps grid is empty");
    }
    if let Some(e) = eps_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return invalid(format!("eps values must lie in (0,1), got {e}"));
    }
    let bundle = ScalingBundle::estimate(model, law, &geometric_grid(n_max), m, streams)?;
    let points = eps_grid
        .iter()
        .map(|&eps| {
            Ok(ScalingPoint {
                eps,
                n: bundle.n_of(1.0 / eps)?,
                a: bundle.a(eps)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((bundle, points))
}
