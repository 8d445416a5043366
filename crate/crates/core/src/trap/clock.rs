use rand::Rng;
use rand_distr::Open01;

use crate::env::Environment;
use crate::error::{invalid, Error, Result};
use crate::lattice::Site;
use crate::stats::{Purpose, StreamRng, Streams};
use crate::walk::{ScalingBundle, WalkModel, Walker};

/// Law of the holding-time marks `T_k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Marks {
    /// Mean-one exponentials.
    #[default]
    Exponential,
    /// Every mark equals 1; a test hook that makes the clock deterministic
    /// given the path.
    Unit,
}

/// Hard ceiling on the number of steps one clock may take before giving up.
pub const MAX_CLOCK_STEPS: u64 = 1 << 36;

/// The clock `C_k = sum_{i <= k} tau_{X_i} T_i`, generated one step at a time.
///
/// Steps and marks come from separate streams, so a process can always be
/// continued further without touching what was already drawn.
pub struct ClockProcess<'a> {
    walker: Walker<'a, StreamRng>,
    env: &'a Environment,
    marks: Marks,
    mark_rng: StreamRng,
    site: Site,
    tau: f64,
    mark: f64,
    clock: f64,
}

impl<'a> ClockProcess<'a> {
    pub fn new(
        model: &'a WalkModel,
        env: &'a Environment,
        marks: Marks,
        walk_rng: StreamRng,
        mark_rng: StreamRng,
    ) -> Result<Self> {
        if model.dim() != env.dim() {
            return Err(Error::DimensionMismatch {
                expected: env.dim(),
                got: model.dim(),
            });
        }
        let mut p = ClockProcess {
            walker: Walker::new(model, walk_rng),
            env,
            marks,
            mark_rng,
            site: Site::ORIGIN,
            tau: env.tau(&Site::ORIGIN),
            mark: 0.0,
            clock: 0.0,
        };
        p.mark = p.draw_mark();
        p.clock = p.tau * p.mark;
        Ok(p)
    }

    /// Replica `replica` of the experiment keyed by `streams`.
    pub fn for_replica(
        model: &'a WalkModel,
        env: &'a Environment,
        marks: Marks,
        streams: &Streams,
        replica: u64,
    ) -> Result<Self> {
        ClockProcess::new(
            model,
            env,
            marks,
            streams.stream(replica, Purpose::Walk),
            streams.stream(replica, Purpose::Marks),
        )
    }

    #[inline]
    fn draw_mark(&mut self) -> f64 {
        match self.marks {
            Marks::Exponential => {
                let u: f64 = self.mark_rng.sample(Open01);
                -u.ln()
            }
            Marks::Unit => 1.0,
        }
    }

    #[inline]
    pub fn advance(&mut self) -> Result<()> {
        self.site = self.walker.advance()?;
        self.tau = self.env.tau(&self.site);
        self.mark = self.draw_mark();
        self.clock += self.tau * self.mark;
        Ok(())
    }

    /// Index `k` of the current step.
    pub fn index(&self) -> u64 {
        self.walker.step() as u64
    }

    pub fn site(&self) -> Site {
        self.site
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mark(&self) -> f64 {
        self.mark
    }

    /// `C_k` for the current step.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Advances to `I_t = min{k : C_k > t}`, which must not lie behind the
    /// current step.
    pub fn seek(&mut self, t: f64) -> Result<()> {
        while self.clock <= t {
            if self.index() >= MAX_CLOCK_STEPS {
                return Err(Error::TraceExhausted {
                    t,
                    clock_end: self.clock,
                });
            }
            self.advance()?;
        }
        Ok(())
    }
}

/// A stored stretch `k = 0..=n` of the clock process.
pub struct ClockTrace<'a> {
    process: Option<ClockProcess<'a>>,
    positions: Vec<Site>,
    taus: Vec<f64>,
    marks: Vec<f64>,
    clock: Vec<f64>,
}

/// Builds the trace up to step `n` for replica `replica` of `streams`.
pub fn build_clock_trace<'a>(
    model: &'a WalkModel,
    env: &'a Environment,
    n: u64,
    marks: Marks,
    streams: &Streams,
    replica: u64,
) -> Result<ClockTrace<'a>> {
    let process = ClockProcess::for_replica(model, env, marks, streams, replica)?;
    let mut trace = ClockTrace {
        positions: vec![process.site()],
        taus: vec![process.tau()],
        marks: vec![process.mark()],
        clock: vec![process.clock()],
        process: Some(process),
    };
    trace.extend_to(n)?;
    Ok(trace)
}

impl ClockTrace<'static> {
    /// A trace assembled from explicit depths and marks, for checking lookups
    /// by hand. It cannot be extended.
    pub fn from_parts(positions: Vec<Site>, taus: Vec<f64>, marks: Vec<f64>) -> Result<Self> {
        if positions.is_empty() || positions.len() != taus.len() || taus.len() != marks.len() {
            return invalid("trace parts must be nonempty and of equal length");
        }
        if taus.iter().chain(&marks).any(|v| !(*v > 0.0 && v.is_finite())) {
            return invalid("depths and marks must be positive and finite");
        }
        let clock = taus
            .iter()
            .zip(&marks)
            .scan(0.0, |c, (t, m)| {
                *c += t * m;
                Some(*c)
            })
            .collect();
        Ok(ClockTrace {
            process: None,
            positions,
            taus,
            marks,
            clock,
        })
    }
}

impl<'a> ClockTrace<'a> {
    pub fn steps(&self) -> u64 {
        self.clock.len() as u64 - 1
    }

    pub fn positions(&self) -> &[Site] {
        &self.positions
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn clock(&self) -> &[f64] {
        &self.clock
    }

    pub fn clock_end(&self) -> f64 {
        *self.clock.last().unwrap()
    }

    /// Continues the trace to step `n` with the same random streams.
    pub fn extend_to(&mut self, n: u64) -> Result<()> {
        let Some(p) = self.process.as_mut() else {
            return if n <= self.steps() {
                Ok(())
            } else {
                invalid("trace built from explicit parts cannot be extended")
            };
        };
        while p.index() < n {
            p.advance()?;
            self.positions.push(p.site());
            self.taus.push(p.tau());
            self.marks.push(p.mark());
            self.clock.push(p.clock());
        }
        Ok(())
    }

    /// Doubles the trace length until `C_n > t`.
    pub fn extend_past(&mut self, t: f64) -> Result<()> {
        while self.clock_end() <= t {
            let n = self.steps();
            if n >= MAX_CLOCK_STEPS || self.process.is_none() {
                return Err(Error::TraceExhausted {
                    t,
                    clock_end: self.clock_end(),
                });
            }
            self.extend_to((2 * n).max(1))?;
        }
        Ok(())
    }

    /// `I_t = min{k : C_k > t}`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) {
            return invalid(format!("time must be nonnegative, got {t}"));
        }
        let k = self.clock.partition_point(|&c| c <= t);
        if k == self.clock.len() {
            return Err(Error::TraceExhausted {
                t,
                clock_end: self.clock_end(),
            });
        }
        Ok(k)
    }

    /// `Y_t = tau_{X_{I_t}}`.
    pub fn energy_at(&self, t: f64) -> Result<f64> {
        Ok(self.taus[self.index_at(t)?])
    }

    /// `a(eps) Y_{t / eps}`.
    pub fn rescaled_energy(&self, bundle: &ScalingBundle, eps: f64, t: f64) -> Result<f64> {
        let a = bundle.a(eps)?;
        Ok(a * self.energy_at(t / eps)?)
    }
}
