//! Aging functions of the energy process, annealed and quenched.

use std::fmt;

use serde::Serialize;

use crate::env::{Environment, TailLaw};
use crate::error::{invalid, Error, Result};
use crate::stats::{normal_quantile, try_map_replicas, wilson_interval, Moments, Purpose, Streams};
use crate::walk::{ScalingBundle, WalkModel};

use super::{ClockProcess, Marks};

/// Confidence level of every interval attached to an aging estimate.
pub const CI_LEVEL: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum AgingMode {
    /// `P(Y_t = Y_{t + theta t})`.
    R,
    /// Probability that the clock does not jump in `(t, t + s]`.
    Pi,
    /// `E exp(-s / Y_t)`, which equals the `Pi` probability exactly.
    PiLaplace,
    /// Probability that the running maximum of `Y` grows on `(t, t + theta t]`.
    Omega,
}

impl AgingMode {
    pub const ALL: [AgingMode; 4] = [AgingMode::R, AgingMode::Pi, AgingMode::PiLaplace, AgingMode::Omega];

    pub fn is_indicator(self) -> bool {
        self != AgingMode::PiLaplace
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgingMode::R => "R",
            AgingMode::Pi => "Pi",
            AgingMode::PiLaplace => "Pi_laplace",
            AgingMode::Omega => "Omega",
        }
    }
}

impl fmt::Display for AgingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AgingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AgingMode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown aging mode '{s}' (expected R, Pi, Pi_laplace or Omega)")))
    }
}

/// Window length `s` of the `Pi` modes.
#[derive(Clone, Copy, Debug)]
pub enum PiWindow<'a> {
    /// `s = theta v_{n(t)}`.
    Scaled(&'a ScalingBundle),
    /// `s = theta t`, the window of the `R` mode.
    Linear,
}

impl PiWindow<'_> {
    fn scale(&self, t: f64) -> Result<f64> {
        match self {
            PiWindow::Scaled(b) => b.v_at_nu(t),
            PiWindow::Linear => Ok(t),
        }
    }
}

/// Family of environments sampled in quenched experiments.
#[derive(Clone, Copy, Debug)]
pub enum EnvFamily {
    Law(TailLaw),
    /// Every environment is flat with this depth; a test hook.
    Flat(f64),
}

impl EnvFamily {
    fn realize(&self, seed: u64, dim: usize) -> Result<Environment> {
        match *self {
            EnvFamily::Law(law) => Environment::new(law, seed, dim),
            EnvFamily::Flat(depth) => Environment::constant(depth, dim),
        }
    }
}

/// Where trap depths come from.
#[derive(Clone, Copy, Debug)]
pub enum EnvChoice<'a> {
    /// A fresh environment per replica.
    Annealed(TailLaw),
    /// One environment shared by all replicas.
    Quenched(&'a Environment),
}

#[derive(Clone, Debug)]
pub struct AgingRequest<'a> {
    pub modes: Vec<AgingMode>,
    pub thetas: Vec<f64>,
    pub ts: Vec<f64>,
    pub pi_window: PiWindow<'a>,
    pub marks: Marks,
    pub m: u64,
}

impl AgingRequest<'_> {
    fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return invalid("no aging mode requested");
        }
        if self.thetas.is_empty() || self.ts.is_empty() {
            return invalid("theta and t grids must be nonempty");
        }
        if let Some(th) = self.thetas.iter().find(|th| !(**th >= 0.0 && th.is_finite())) {
            return invalid(format!("theta values must be finite and >= 0, got {th}"));
        }
        if let Some(t) = self.ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return invalid(format!("t values must be finite and > 0, got {t}"));
        }
        if self.m == 0 {
            return invalid("replica count M must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgingPoint {
    pub theta: f64,
    pub t: f64,
    /// Window length `s` used for this point.
    pub s: f64,
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Largest walk index reached over the replicas.
    pub n_used: u64,
    pub m: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AgingCurve {
    pub mode: AgingMode,
    pub quenched: bool,
    pub points: Vec<AgingPoint>,
}

impl AgingCurve {
    pub fn point(&self, theta: f64, t: f64) -> Option<&AgingPoint> {
        self.points.iter().find(|p| p.theta == theta && p.t == t)
    }
}

/// State of the clock process at one query time `q`.
#[derive(Clone, Copy, Debug)]
struct Snapshot {
    index: u64,
    tau: f64,
    clock: f64,
    running_max: f64,
}

/// Runs one replica through the sorted query times.
fn snapshots(mut p: ClockProcess<'_>, queries: &[f64]) -> Result<Vec<Snapshot>> {
    let mut out = Vec::with_capacity(queries.len());
    let mut running_max = p.tau();
    for &q in queries {
        while p.clock() <= q {
            if p.index() >= super::MAX_CLOCK_STEPS {
                return Err(Error::TraceExhausted { t: q, clock_end: p.clock() });
            }
            p.advance()?;
            running_max = running_max.max(p.tau());
        }
        out.push(Snapshot {
            index: p.index(),
            tau: p.tau(),
            clock: p.clock(),
            running_max,
        });
    }
    Ok(out)
}

/// Per-replica outcome for every `(mode, theta, t)` cell, plus the walk index
/// reached.
struct ReplicaOutcome {
    values: Vec<f64>,
    reach: Vec<u64>,
}

struct Layout {
    queries: Vec<f64>,
    /// For each `(t, theta)`: window `s`, query slot of `t`, slot of `t + theta t`.
    cells: Vec<(f64, f64, f64, usize, usize)>,
}

fn layout(req: &AgingRequest<'_>) -> Result<Layout> {
    let mut queries = Vec::new();
    let mut raw = Vec::new();
    for &t in &req.ts {
        let scale = req.pi_window.scale(t)?;
        for &theta in &req.thetas {
            queries.push(t);
            queries.push(t + theta * t);
            raw.push((theta, t, theta * scale));
        }
    }
    queries.sort_by(f64::total_cmp);
    queries.dedup();
    let slot = |q: f64| queries.binary_search_by(|x| x.total_cmp(&q)).unwrap();
    let cells = raw
        .iter()
        .map(|&(theta, t, s)| (theta, t, s, slot(t), slot(t + theta * t)))
        .collect();
    Ok(Layout { queries, cells })
}

fn evaluate(mode: AgingMode, snaps: &[Snapshot], cell: &(f64, f64, f64, usize, usize)) -> (f64, u64) {
    let &(_, t, s, at, after) = cell;
    let now = snaps[at];
    let later = snaps[after];
    match mode {
        // Continuous depths: equal depths mean the same site almost surely;
        // bitwise equality also covers a flat landscape.
        AgingMode::R => ((now.tau == later.tau) as u8 as f64, later.index),
        AgingMode::Pi => ((now.clock > t + s) as u8 as f64, now.index),
        AgingMode::PiLaplace => ((-s / now.tau).exp(), now.index),
        AgingMode::Omega => ((later.running_max > now.running_max) as u8 as f64, later.index),
    }
}

fn run_replicas(
    model: &WalkModel,
    env: EnvChoice<'_>,
    req: &AgingRequest<'_>,
    streams: &Streams,
    lay: &Layout,
) -> Result<Vec<ReplicaOutcome>> {
    try_map_replicas(req.m, |rep| {
        let local;
        let env_ref = match env {
            EnvChoice::Annealed(law) => {
                local = Environment::new(law, streams.word(rep, Purpose::Env), model.dim())?;
                &local
            }
            EnvChoice::Quenched(e) => e,
        };
        let p = ClockProcess::for_replica(model, env_ref, req.marks, streams, rep)?;
        let snaps = snapshots(p, &lay.queries)?;
        let mut values = Vec::with_capacity(req.modes.len() * lay.cells.len());
        let mut reach = Vec::with_capacity(values.capacity());
        for &mode in &req.modes {
            for cell in &lay.cells {
                let (v, k) = evaluate(mode, &snaps, cell);
                values.push(v);
                reach.push(k);
            }
        }
        Ok(ReplicaOutcome { values, reach })
    })
}

fn summarize(mode: AgingMode, theta: f64, t: f64, s: f64, column: impl Iterator<Item = (f64, u64)>, m: u64) -> Result<AgingPoint> {
    let mut mom = Moments::default();
    let mut hits = 0u64;
    let mut n_used = 0u64;
    for (v, k) in column {
        mom.push(v);
        if v == 1.0 {
            hits += 1;
        }
        n_used = n_used.max(k);
    }
    let (estimate, se, ci_lo, ci_hi) = if mode.is_indicator() {
        let p = hits as f64 / m as f64;
        let (lo, hi) = wilson_interval(hits, m, CI_LEVEL)?;
        (p, (p * (1.0 - p) / m as f64).sqrt(), lo, hi)
    } else {
        let z = normal_quantile(CI_LEVEL);
        let se = mom.std_error();
        let mean = mom.mean();
        (mean, se, (mean - z * se).max(0.0), (mean + z * se).min(1.0))
    };
    Ok(AgingPoint {
        theta,
        t,
        s,
        estimate,
        se,
        ci_lo,
        ci_hi,
        n_used,
        m,
    })
}

/// Estimates every requested mode on the `theta x t` grid from one set of
/// shared traces.
pub fn estimate_aging(
    model: &WalkModel,
    env: EnvChoice<'_>,
    req: &AgingRequest<'_>,
    streams: &Streams,
) -> Result<Vec<AgingCurve>> {
    req.validate()?;
    if let EnvChoice::Quenched(e) = env {
        if e.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: e.dim(),
                got: model.dim(),
            });
        }
    }
    let lay = layout(req)?;
    let reps = run_replicas(model, env, req, streams, &lay)?;
    let ncell = lay.cells.len();
    req.modes
        .iter()
        .enumerate()
        .map(|(mi, &mode)| {
            let points = lay
                .cells
                .iter()
                .enumerate()
                .map(|(ci, &(theta, t, s, _, _))| {
                    let col = mi * ncell + ci;
                    summarize(mode, theta, t, s, reps.iter().map(|r| (r.values[col], r.reach[col])), req.m)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AgingCurve {
                mode,
                quenched: matches!(env, EnvChoice::Quenched(_)),
                points,
            })
        })
        .collect()
}

/// Single-mode annealed estimate with the `Pi` window `theta v_{n(t)}`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_aging_mode(
    model: &WalkModel,
    law: TailLaw,
    bundle: &ScalingBundle,
    mode: AgingMode,
    thetas: &[f64],
    ts: &[f64],
    m: u64,
    streams: &Streams,
) -> Result<AgingCurve> {
    let req = AgingRequest {
        modes: vec![mode],
        thetas: thetas.to_vec(),
        ts: ts.to_vec(),
        pi_window: PiWindow::Scaled(bundle),
        marks: Marks::Exponential,
        m,
    };
    Ok(estimate_aging(model, EnvChoice::Annealed(law), &req, streams)?.remove(0))
}

#[derive(Clone, Debug, Serialize)]
pub struct QuenchedPoint {
    pub t: f64,
    /// Conditional estimate in each environment.
    pub per_env: Vec<f64>,
    /// Sample variance of `per_env` across environments.
    pub across_variance: f64,
    /// Expected contribution of within-environment Monte Carlo noise.
    pub noise_floor: f64,
    /// `across_variance - noise_floor`.
    pub excess: f64,
    /// Standard error of `excess`, from the spread of the per-environment
    /// squared deviations.
    pub excess_se: f64,
}

/// Across-environment variance of the conditional aging estimate at each `t`.
///
/// Environment `e` has seed `streams.word(e, Env)`; its walks and marks come
/// from `streams.child(e + 1)`.
#[allow(clippy::too_many_arguments)]
pub fn quenched_aging_variance(
    model: &WalkModel,
    family: EnvFamily,
    pi_window: PiWindow<'_>,
    mode: AgingMode,
    theta: f64,
    ts: &[f64],
    env_count: u64,
    m_per_env: u64,
    streams: &Streams,
) -> Result<Vec<QuenchedPoint>> {
    if env_count < 2 {
        return invalid("quenched variance needs at least two environments");
    }
    if m_per_env < 2 {
        return invalid("quenched variance needs at least two walks per environment");
    }
    let req = AgingRequest {
        modes: vec![mode],
        thetas: vec![theta],
        ts: ts.to_vec(),
        pi_window,
        marks: Marks::Exponential,
        m: m_per_env,
    };
    req.validate()?;
    let lay = layout(&req)?;
    // (mean, within-environment variance of the mean) per environment and t
    let per_env: Vec<Vec<(f64, f64)>> = (0..env_count)
        .map(|e| {
            let env = family.realize(streams.word(e, Purpose::Env), model.dim())?;
            let child = streams.child(e + 1);
            let reps = run_replicas(model, EnvChoice::Quenched(&env), &req, &child, &lay)?;
            Ok((0..lay.cells.len())
                .map(|ci| {
                    let mom: Moments = reps.iter().map(|r| r.values[ci]).collect();
                    (mom.mean(), mom.variance() / m_per_env as f64)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(lay
        .cells
        .iter()
        .enumerate()
        .map(|(ci, cell)| {
            let means: Vec<f64> = per_env.iter().map(|v| v[ci].0).collect();
            let across: Moments = means.iter().copied().collect();
            let floor = per_env.iter().map(|v| v[ci].1).sum::<f64>() / env_count as f64;
            let mu = across.mean();
            let k = env_count as f64;
            let dev: Moments = per_env
                .iter()
                .map(|v| (v[ci].0 - mu).powi(2) * k / (k - 1.0) - v[ci].1)
                .collect();
            QuenchedPoint {
                t: cell.1,
                per_env: means,
                across_variance: across.variance(),
                noise_floor: floor,
                excess: across.variance() - floor,
                excess_se: dev.std_error(),
            }
        })
        .collect())
}
