//! Range-intersection diagnostic and samplers of the rescaled energy.

use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::env::{Environment, TailLaw};
use crate::error::{invalid, Result};
use crate::lattice::Site;
use crate::stats::{try_map_replicas, Moments, Purpose, Streams};
use crate::walk::{check_grid, ScalingBundle, WalkModel, Walker};

use super::{ClockProcess, Marks};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntersectionPoint {
    pub n: u64,
    /// Mean of `I_n = |range(X) ∩ range(X')|`.
    pub intersection: f64,
    pub intersection_se: f64,
    /// Mean range size over both walks of every pair.
    pub rho: f64,
    pub rho_se: f64,
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub ratio_se: f64,
}

/// `I_n / rho_n` on `n_grid` from `m` pairs of independent walks. The second
/// walk of pair `i` uses the `Aux` stream of replica `i`.
pub fn intersection_ratio(model: &WalkModel, n_grid: &[u64], m: u64, streams: &Streams) -> Result<Vec<IntersectionPoint>> {
    check_grid(n_grid)?;
    if m == 0 {
        return invalid("replica count M must be at least 1");
    }
    let n_max = *n_grid.last().unwrap();
    let reps = try_map_replicas(m, |rep| -> Result<Vec<(u64, u64, u64)>> {
        let mut a = Walker::new(model, streams.stream(rep, Purpose::Walk));
        let mut b = Walker::new(model, streams.stream(rep, Purpose::Aux));
        let mut ra = FxHashSet::default();
        let mut rb = FxHashSet::default();
        ra.insert(Site::ORIGIN);
        rb.insert(Site::ORIGIN);
        let mut common = 1u64;
        let mut out = Vec::with_capacity(n_grid.len());
        let mut next = 0;
        if n_grid[0] == 0 {
            out.push((1, 1, 1));
            next = 1;
        }
        for k in 1..=n_max {
            let xa = a.advance()?;
            if ra.insert(xa) && rb.contains(&xa) {
                common += 1;
            }
            let xb = b.advance()?;
            if rb.insert(xb) && ra.contains(&xb) {
                common += 1;
            }
            if k == n_grid[next] {
                out.push((common, ra.len() as u64, rb.len() as u64));
                next += 1;
            }
        }
        Ok(out)
    })?;
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let i: Moments = reps.iter().map(|r| r[j].0 as f64).collect();
            let rho: Moments = reps.iter().flat_map(|r| [r[j].1 as f64, r[j].2 as f64]).collect();
            let ratio = i.mean() / rho.mean();
            let ratio_se = ratio * ((i.std_error() / i.mean()).powi(2) + (rho.std_error() / rho.mean()).powi(2)).sqrt();
            IntersectionPoint {
                n,
                intersection: i.mean(),
                intersection_se: i.std_error(),
                rho: rho.mean(),
                rho_se: rho.std_error(),
                ratio,
                ratio_se,
            }
        })
        .collect())
}

/// `m` annealed samples of `a(eps) Y_{t / eps}`, one per replica.
pub fn sample_rescaled_energy(
    model: &WalkModel,
    law: TailLaw,
    bundle: &ScalingBundle,
    eps: f64,
    t: f64,
    m: u64,
    streams: &Streams,
) -> Result<Vec<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("t must be finite and >= 0, got {t}"));
    }
    let a = bundle.a(eps)?;
    try_map_replicas(m, |rep| {
        let env = Environment::new(law, streams.word(rep, Purpose::Env), model.dim())?;
        let mut p = ClockProcess::for_replica(model, &env, Marks::Exponential, streams, rep)?;
        p.seek(t / eps)?;
        Ok(a * p.tau())
    })
}
