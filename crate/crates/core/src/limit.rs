//! The limit objects: the alpha-stable subordinator `Upsilon`, the marked
//! subordinator `V = int T dUpsilon`, its inverse `W` and the limit trap
//! process `Z_t = Upsilon(W_t) - Upsilon(W_t -)`.
//!
//! `Upsilon` has Levy density `alpha x^(-1-alpha)`, so jumps larger than `s`
//! arrive at rate `s^-alpha` per unit time. Only jumps above `delta0` are
//! simulated: they form a Poisson process of rate `delta0^-alpha` with sizes
//! `delta0 U^(-1/alpha)`. The jumps below `delta0` carry mass
//! `alpha delta0^(1-alpha) / (1-alpha)` per unit time; with
//! [`SmallJumps::Compensate`] that mass is added to `V` as a linear drift,
//! which is what the marks would contribute on average.

use rand::Rng;
use rand_distr::Open01;
use serde::Serialize;
use statrs::function::beta::checked_beta_reg;

use crate::error::{invalid, Error, Result};
use crate::stats::{normal_quantile, try_map_replicas, wilson_interval, Moments, Purpose, StreamRng, Streams};
use crate::trap::{AgingCurve, AgingMode, AgingPoint, CI_LEVEL};

/// Refuse to simulate more than this many jumps in one path.
pub const MAX_JUMPS: f64 = 1e8;

/// Treatment of the jumps below the truncation level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum SmallJumps {
    /// Drop them from both `Upsilon` and `V`.
    Discard,
    /// Replace their contribution to `V` by its mean drift.
    #[default]
    Compensate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitParams {
    pub alpha: f64,
    pub delta0: f64,
    pub small: SmallJumps,
    /// Multiplies every jump size (and the drift); `1` is the normalisation
    /// described in the module docs.
    pub scale: f64,
}

impl LimitParams {
    pub fn new(alpha: f64, delta0: f64) -> Result<Self> {
        let p = LimitParams {
            alpha,
            delta0,
            small: SmallJumps::default(),
            scale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return invalid(format!("delta0 must be positive, got {}", self.delta0));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return invalid(format!("scale must be positive, got {}", self.scale));
        }
        Ok(())
    }

    /// Jumps per unit of `Upsilon`-time.
    pub fn rate(&self) -> f64 {
        self.delta0.powf(-self.alpha)
    }

    /// Drift of `V` per unit of `Upsilon`-time.
    pub fn drift(&self) -> f64 {
        match self.small {
            SmallJumps::Discard => 0.0,
            SmallJumps::Compensate => self.scale * self.alpha * self.delta0.powf(1.0 - self.alpha) / (1.0 - self.alpha),
        }
    }
}

/// What the inverse of `V` straddles at a given time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Straddle {
    /// The jump with this index.
    Jump(usize),
    /// A stretch where `V` moves by drift only; `Z` there is below `delta0`.
    SubThreshold,
}

#[derive(Clone, Debug)]
pub struct SubordinatorPath {
    params: LimitParams,
    horizon: f64,
    locations: Vec<f64>,
    sizes: Vec<f64>,
    marks: Vec<f64>,
    /// `V` just before each jump.
    v_before: Vec<f64>,
    /// `V` just after each jump.
    v_after: Vec<f64>,
    next_location: f64,
    rng: StreamRng,
}

/// Samples the path on `[0, x_max]`.
pub fn sample_subordinator(params: LimitParams, x_max: f64, rng: StreamRng) -> Result<SubordinatorPath> {
    params.validate()?;
    let mut path = SubordinatorPath {
        params,
        horizon: 0.0,
        locations: Vec::new(),
        sizes: Vec::new(),
        marks: Vec::new(),
        v_before: Vec::new(),
        v_after: Vec::new(),
        next_location: 0.0,
        rng,
    };
    path.next_location = path.gap();
    path.extend_to(x_max)?;
    Ok(path)
}

impl SubordinatorPath {
    fn gap(&mut self) -> f64 {
        let u: f64 = self.rng.sample(Open01);
        -u.ln() / self.params.rate()
    }

    /// Appends the pending jump and draws the location of the next one.
    fn push_jump(&mut self) {
        let x = self.next_location;
        let u: f64 = self.rng.sample(Open01);
        let size = self.params.scale * self.params.delta0 * u.powf(-1.0 / self.params.alpha);
        let w: f64 = self.rng.sample(Open01);
        let mark = -w.ln();
        let before = self.v_at_location(x);
        self.locations.push(x);
        self.sizes.push(size);
        self.marks.push(mark);
        self.v_before.push(before);
        self.v_after.push(before + mark * size);
        self.horizon = self.horizon.max(x);
        self.next_location = x + self.gap();
    }

    /// `V(x)` for `x` at or beyond the last jump.
    fn v_at_location(&self, x: f64) -> f64 {
        let (last_x, last_v) = match (self.locations.last(), self.v_after.last()) {
            (Some(&lx), Some(&lv)) => (lx, lv),
            _ => (0.0, 0.0),
        };
        last_v + self.params.drift() * (x - last_x)
    }

    fn check_budget(&self, x_max: f64) -> Result<()> {
        let expected = x_max * self.params.rate();
        if expected > MAX_JUMPS {
            return Err(Error::TooManyJumps { expected });
        }
        Ok(())
    }

    /// Continues the path to `Upsilon`-time `x_max`.
    pub fn extend_to(&mut self, x_max: f64) -> Result<()> {
        if !(x_max > 0.0 && x_max.is_finite()) {
            return invalid(format!("horizon must be positive and finite, got {x_max}"));
        }
        self.check_budget(x_max)?;
        while self.next_location <= x_max {
            self.push_jump();
        }
        self.horizon = self.horizon.max(x_max);
        Ok(())
    }

    /// Continues the path jump by jump until `V` exceeds `target`; the horizon
    /// then sits at the jump that crossed it, or where the drift crossed it.
    pub fn extend_until_v(&mut self, target: f64) -> Result<()> {
        let d = self.params.drift();
        while self.v_end() <= target {
            if d > 0.0 {
                let x_last = self.locations.last().copied().unwrap_or(0.0);
                let v_last = self.v_after.last().copied().unwrap_or(0.0);
                let x_star = x_last + (target - v_last) / d;
                let h = x_star + x_star.abs() * 1e-12 + f64::MIN_POSITIVE;
                if h < self.next_location {
                    self.horizon = self.horizon.max(h);
                    if self.v_end() > target {
                        break;
                    }
                }
            }
            if self.sizes.len() as f64 >= MAX_JUMPS {
                return Err(Error::TooManyJumps {
                    expected: self.next_location * self.params.rate(),
                });
            }
            self.push_jump();
        }
        Ok(())
    }

    pub fn params(&self) -> &LimitParams {
        &self.params
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jump_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    /// `V` after each jump.
    pub fn v_values(&self) -> &[f64] {
        &self.v_after
    }

    /// `V` at the horizon.
    pub fn v_end(&self) -> f64 {
        self.v_at_location(self.horizon)
    }

    pub fn straddle(&self, t: f64) -> Result<Straddle> {
        if !(t >= 0.0) {
            return invalid(format!("time must be nonnegative, got {t}"));
        }
        if t >= self.v_end() {
            return Err(Error::HorizonExhausted { t, v_end: self.v_end() });
        }
        // first jump whose after-value exceeds t
        let i = self.v_after.partition_point(|&v| v <= t);
        if i < self.v_before.len() && self.v_before[i] <= t {
            Ok(Straddle::Jump(i))
        } else {
            Ok(Straddle::SubThreshold)
        }
    }

    /// `Z_t`. In a drift stretch the true value is below `delta0` and
    /// `delta0` (times the scale) is returned.
    pub fn z_at(&self, t: f64) -> Result<f64> {
        Ok(match self.straddle(t)? {
            Straddle::Jump(i) => self.sizes[i],
            Straddle::SubThreshold => self.params.scale * self.params.delta0,
        })
    }

    /// `sup_{r <= t} Z_r`: the largest jump whose `V` interval starts by `t`.
    pub fn running_max_z(&self, t: f64) -> Result<f64> {
        if t >= self.v_end() {
            return Err(Error::HorizonExhausted { t, v_end: self.v_end() });
        }
        let k = self.v_before.partition_point(|&v| v <= t);
        let floor = self.params.scale * self.params.delta0;
        Ok(self.sizes[..k].iter().copied().fold(floor, f64::max))
    }

    /// The same path with only the jumps above `delta` (in unscaled units),
    /// no drift, and `V` recomputed. Marks are kept, so the thinned path is
    /// coupled to this one.
    pub fn thinned(&self, delta: f64) -> Result<SubordinatorPath> {
        if !(delta >= self.params.delta0) {
            return invalid(format!("thinning level {delta} below the truncation {}", self.params.delta0));
        }
        let params = LimitParams {
            delta0: delta,
            small: SmallJumps::Discard,
            ..self.params
        };
        let mut out = SubordinatorPath {
            params,
            horizon: self.horizon,
            locations: Vec::new(),
            sizes: Vec::new(),
            marks: Vec::new(),
            v_before: Vec::new(),
            v_after: Vec::new(),
            next_location: f64::INFINITY,
            rng: self.rng.clone(),
        };
        let mut v = 0.0;
        for i in 0..self.sizes.len() {
            if self.sizes[i] > delta * self.params.scale {
                out.locations.push(self.locations[i]);
                out.sizes.push(self.sizes[i]);
                out.marks.push(self.marks[i]);
                out.v_before.push(v);
                v += self.marks[i] * self.sizes[i];
                out.v_after.push(v);
            }
        }
        Ok(out)
    }
}

/// `R(theta) = sin(pi alpha)/pi int_{theta/(1+theta)}^1 s^-alpha (1-s)^(alpha-1) ds`,
/// i.e. the regularized incomplete beta `I_{1/(1+theta)}(alpha, 1-alpha)`.
pub fn closed_form_r(theta: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (0,1), got {alpha}"));
    }
    if !(theta >= 0.0) {
        return invalid(format!("theta must be >= 0, got {theta}"));
    }
    if theta == 0.0 {
        return Ok(1.0);
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    checked_beta_reg(alpha, 1.0 - alpha, 1.0 / (1.0 + theta)).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Per-path values of the limit aging events for one `theta`.
fn limit_events(path: &SubordinatorPath, theta: f64) -> Result<(f64, f64, f64)> {
    if theta == 0.0 {
        return Ok((1.0, 1.0, 0.0));
    }
    let (r, z1) = match path.straddle(1.0)? {
        Straddle::Jump(i) => (path.v_after[i] > 1.0 + theta, path.sizes[i]),
        Straddle::SubThreshold => (false, path.params.scale * path.params.delta0),
    };
    let laplace = (-theta / z1).exp();
    let omega = path.running_max_z(1.0 + theta)? > path.running_max_z(1.0)?;
    Ok((r as u8 as f64, laplace, omega as u8 as f64))
}

/// Per-replica `(R, Laplace, Omega)` draws per theta and the jump count used.
type ReplicaDraw = (Vec<(f64, f64, f64)>, usize);

/// Estimates the limit aging functions at `t = 1` from `n` paths, path `i`
/// drawn from the `Limit` stream of replica `i`. Each path is grown until
/// `V` passes `1 + max(theta)`.
pub fn estimate_limit_aging(
    params: LimitParams,
    modes: &[AgingMode],
    thetas: &[f64],
    n: u64,
    streams: &Streams,
) -> Result<Vec<AgingCurve>> {
    params.validate()?;
    if n == 0 {
        return invalid("path count N must be at least 1");
    }
    if thetas.is_empty() {
        return invalid("theta grid is empty");
    }
    if let Some(th) = thetas.iter().find(|th| !(**th >= 0.0 && th.is_finite())) {
        return invalid(format!("theta values must be finite and >= 0, got {th}"));
    }
    if let Some(m) = modes.iter().find(|m| **m == AgingMode::Pi) {
        return invalid(format!("mode {m} is not defined for the limit process; use Pi_laplace"));
    }
    let top = thetas.iter().copied().fold(0.0, f64::max);
    let reps = try_map_replicas(n, |rep| -> Result<ReplicaDraw> {
        let mut path = sample_subordinator(params, f64::MIN_POSITIVE, streams.stream(rep, Purpose::Limit))?;
        path.extend_until_v(1.0 + top)?;
        let ev = thetas.iter().map(|&th| limit_events(&path, th)).collect::<Result<Vec<_>>>()?;
        Ok((ev, path.jump_count()))
    })?;
    let n_used = reps.iter().map(|r| r.1).max().unwrap_or(0) as u64;
    modes
        .iter()
        .map(|&mode| {
            let points = thetas
                .iter()
                .enumerate()
                .map(|(j, &theta)| {
                    let pick = |e: &(f64, f64, f64)| match mode {
                        AgingMode::R => e.0,
                        AgingMode::PiLaplace => e.1,
                        _ => e.2,
                    };
                    let mom: Moments = reps.iter().map(|r| pick(&r.0[j])).collect();
                    let (estimate, se, ci_lo, ci_hi) = if mode.is_indicator() {
                        let hits = reps.iter().filter(|r| pick(&r.0[j]) == 1.0).count() as u64;
                        let p = hits as f64 / n as f64;
                        let (lo, hi) = wilson_interval(hits, n, CI_LEVEL)?;
                        (p, (p * (1.0 - p) / n as f64).sqrt(), lo, hi)
                    } else {
                        let z = normal_quantile(CI_LEVEL);
                        let (mean, se) = (mom.mean(), mom.std_error());
                        (mean, se, (mean - z * se).max(0.0), (mean + z * se).min(1.0))
                    };
                    Ok(AgingPoint {
                        theta,
                        t: 1.0,
                        s: theta,
                        estimate,
                        se,
                        ci_lo,
                        ci_hi,
                        n_used,
                        m: n,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AgingCurve {
                mode,
                quenched: false,
                points,
            })
        })
        .collect()
}

/// `n` samples of `Z_t`, path `i` drawn from the `Limit` stream of replica `i`.
pub fn sample_z(params: LimitParams, t: f64, n: u64, streams: &Streams) -> Result<Vec<f64>> {
    params.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("t must be finite and >= 0, got {t}"));
    }
    try_map_replicas(n, |rep| {
        let mut path = sample_subordinator(params, f64::MIN_POSITIVE, streams.stream(rep, Purpose::Limit))?;
        path.extend_until_v(t)?;
        path.z_at(t)
    })
}
