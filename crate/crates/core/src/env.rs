//! Heavy-tailed trap depths and the lazily realized random environment.
//!
//! Two tail families are provided:
//!
//! * `pareto`: `P(tau > t) = t^-alpha` for `t >= 1`;
//! * `log_pareto`: `P(tau > t) = t^-alpha (1 + ln t)` for `t >= t0`, where `t0`
//!   is the largest solution of `t^-alpha (1 + ln t) = 1` (the function first
//!   rises above one after `t = 1`, so the support starts past its maximum at
//!   `ln t = 1/alpha - 1`).
//!
//! Both laws are continuous, so distinct sites carry distinct depths almost
//! surely and there is no distinction between equal sites and equal depths.

use std::fmt;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher13;

use crate::error::{invalid, Error, Result};
use crate::lattice::Site;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailFamily {
    Pareto,
    LogPareto,
}

impl fmt::Display for TailFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailFamily::Pareto => "pareto",
            TailFamily::LogPareto => "log_pareto",
        })
    }
}

impl std::str::FromStr for TailFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pareto" => Ok(TailFamily::Pareto),
            "log_pareto" => Ok(TailFamily::LogPareto),
            other => invalid(format!("unknown tail family '{other}' (expected pareto or log_pareto)")),
        }
    }
}

/// The trap-depth law `Q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailLaw {
    alpha: f64,
    family: TailFamily,
    /// `ln` of the support minimum.
    log_min: f64,
}

impl TailLaw {
    pub fn new(alpha: f64, family: TailFamily) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("alpha must lie in (0,1), got {alpha}"));
        }
        let log_min = match family {
            TailFamily::Pareto => 0.0,
            TailFamily::LogPareto => log_pareto_support(alpha),
        };
        Ok(TailLaw { alpha, family, log_min })
    }

    pub fn pareto(alpha: f64) -> Result<Self> {
        TailLaw::new(alpha, TailFamily::Pareto)
    }

    pub fn log_pareto(alpha: f64) -> Result<Self> {
        TailLaw::new(alpha, TailFamily::LogPareto)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn family(&self) -> TailFamily {
        self.family
    }

    pub fn support_min(&self) -> f64 {
        self.log_min.exp()
    }

    /// `P(tau > t)`.
    pub fn tail(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 1.0;
        }
        let y = t.ln();
        if y <= self.log_min {
            return 1.0;
        }
        self.log_tail(y).exp()
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.tail(t)
    }

    /// `ln P(tau > e^y)` for `y` on the support.
    fn log_tail(&self, y: f64) -> f64 {
        match self.family {
            TailFamily::Pareto => -self.alpha * y,
            TailFamily::LogPareto => -self.alpha * y + (1.0 + y).ln(),
        }
    }

    /// The `t >= support_min` with `P(tau > t) = u`, for `u` in `(0, 1]`.
    fn invert_tail(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u <= 1.0);
        match self.family {
            TailFamily::Pareto => u.powf(-1.0 / self.alpha),
            TailFamily::LogPareto => self.solve_log_tail(u.ln()).exp(),
        }
    }

    /// Solves `-alpha y + ln(1 + y) = target` (target <= 0) for `y >= log_min`.
    ///
    /// The left side is concave and decreasing on the support, so Newton's
    /// method started at the support minimum lands to the right of the root and
    /// then decreases monotonically onto it. A bisection bracket guards the
    /// iteration; the result is accurate to about one ulp in `y`.
    fn solve_log_tail(&self, target: f64) -> f64 {
        let a = self.alpha;
        let f = |y: f64| -a * y + (1.0 + y).ln() - target;
        let mut lo = self.log_min;
        if f(lo) <= 0.0 {
            return lo;
        }
        let mut hi = lo + 1.0;
        while f(hi) > 0.0 {
            hi = lo + 2.0 * (hi - lo);
        }
        let mut y = hi;
        for _ in 0..200 {
            let fy = f(y);
            if fy > 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            let d = -a + 1.0 / (1.0 + y);
            let mut next = y - fy / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 1e-15 * y.abs().max(1.0) || hi - lo <= 1e-15 * hi.abs().max(1.0) {
                return next;
            }
            y = next;
        }
        y
    }

    /// `s_n = inf{t : P(tau > t) <= 1/n}`, sought on the support, for real `n >= 1`.
    pub fn quantile_at(&self, n: f64) -> Result<f64> {
        if !(n >= 1.0) || !n.is_finite() {
            return invalid(format!("tail quantile needs finite n >= 1, got {n}"));
        }
        Ok(match self.family {
            TailFamily::Pareto => n.powf(1.0 / self.alpha),
            TailFamily::LogPareto => self.solve_log_tail(-n.ln()).exp(),
        })
    }

    pub fn tail_quantile(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return invalid("tail quantile needs n >= 1");
        }
        self.quantile_at(n as f64)
    }

    /// Inverse-CDF draw: the depth whose tail probability is `u`.
    pub fn sample_tau(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return invalid(format!("sample_tau needs u in (0,1), got {u}"));
        }
        Ok(self.invert_tail(u))
    }
}

/// Largest root of `-alpha y + ln(1 + y) = 0`; it lies beyond `1/alpha - 1`.
fn log_pareto_support(alpha: f64) -> f64 {
    let f = |y: f64| -alpha * y + (1.0 + y).ln();
    let mut lo = 1.0 / alpha - 1.0;
    let mut hi = 2.0 * lo + 2.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// Key half mixed into every site hash, separating environments from any
/// other use of the same seed.
const ENV_HASH_KEY: u64 = 0x7472_6170_7369_6d01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnvSource {
    Random { law: TailLaw, seed: u64 },
    /// Every site has the same depth. Used to test code paths whose answer is
    /// known for a flat landscape.
    Constant(f64),
}

/// Trap depths `tau_x`, computed on demand as a pure function of the seed and
/// the site.
///
/// The uniform variate for site `x` is obtained from SipHash-1-3 keyed with
/// `(seed, ENV_HASH_KEY)` over the little-endian bytes of the `d` coordinates
/// `x_1, ..., x_d` (as `i64`). The top 53 bits of the hash `h` give
/// `u = ((h >> 11) + 1/2) 2^-53`, which lies strictly inside `(0, 1)`, and the
/// depth is the tail quantile at `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Environment {
    source: EnvSource,
    dim: usize,
}

impl Environment {
    pub fn new(law: TailLaw, seed: u64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Environment {
            source: EnvSource::Random { law, seed },
            dim,
        })
    }

    pub fn constant(depth: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(depth > 0.0 && depth.is_finite()) {
            return invalid(format!("constant depth must be positive, got {depth}"));
        }
        Ok(Environment {
            source: EnvSource::Constant(depth),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &EnvSource {
        &self.source
    }

    pub fn tau_at(&self, x: &[i64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.tau_coords(x))
    }

    /// Depth at a site whose dimension is already known to match.
    #[inline]
    pub fn tau(&self, site: &Site) -> f64 {
        self.tau_coords(site.coords(self.dim))
    }

    #[inline]
    fn tau_coords(&self, coords: &[i64]) -> f64 {
        match self.source {
            EnvSource::Constant(v) => v,
            EnvSource::Random { law, seed } => law.invert_tail(site_uniform(seed, coords)),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > crate::lattice::MAX_DIM {
        return invalid(format!(
            "dimension must be in 1..={}, got {dim}",
            crate::lattice::MAX_DIM
        ));
    }
    Ok(())
}

#[inline]
fn site_uniform(seed: u64, coords: &[i64]) -> f64 {
    let mut h = SipHasher13::new_with_keys(seed, ENV_HASH_KEY);
    for c in coords {
        h.write(&c.to_le_bytes());
    }
    let bits = h.finish() >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pareto_quantiles() {
        for alpha in [0.1, 0.5, 0.9] {
            assert_eq!(TailLaw::pareto(alpha).unwrap().tail_quantile(1).unwrap(), 1.0);
        }
        let q = TailLaw::pareto(0.5).unwrap().tail_quantile(100).unwrap();
        assert!((q - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn log_pareto_quantile_residual() {
        let law = TailLaw::log_pareto(0.5).unwrap();
        let t = law.tail_quantile(100).unwrap();
        let residual = t.powf(-0.5) * (1.0 + t.ln()) - 0.01;
        assert!(residual.abs() < 1e-10, "residual {residual}");
        // the neighbouring point below still has tail above 1/n
        assert!(law.tail(t * (1.0 - 1e-9)) > 0.01);
    }

    #[test]
    fn log_pareto_support_is_past_the_bump() {
        for alpha in [0.2, 0.5, 0.8] {
            let law = TailLaw::log_pareto(alpha).unwrap();
            let t0 = law.support_min();
            assert!(t0.ln() > 1.0 / alpha - 1.0);
            assert!((t0.powf(-alpha) * (1.0 + t0.ln()) - 1.0).abs() < 1e-12);
            assert_eq!(law.tail(t0 * 0.5), 1.0);
            assert!(law.tail(t0 * 1.001) < 1.0);
        }
    }

    #[test]
    fn sample_tau_values() {
        let law = TailLaw::pareto(0.5).unwrap();
        assert!((law.sample_tau(0.25).unwrap() - 16.0).abs() < 1e-12);
        assert!((law.sample_tau(0.01).unwrap() - 10_000.0).abs() < 1e-8);
        let near_one = law.sample_tau(1.0 - 1e-15).unwrap();
        assert!((near_one - 1.0).abs() < 1e-12);
        assert!(law.sample_tau(0.0).is_err());
        assert!(law.sample_tau(1.0).is_err());
    }

    #[test]
    fn log_pareto_inversion_roundtrip() {
        let law = TailLaw::log_pareto(0.3).unwrap();
        for u in [0.999_999, 0.5, 0.1, 1e-3, 1e-9, 1e-15] {
            let t = law.sample_tau(u).unwrap();
            assert!((law.tail(t) / u - 1.0).abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn rejects_alpha_outside_unit_interval() {
        assert!(TailLaw::pareto(0.0).is_err());
        assert!(TailLaw::pareto(1.0).is_err());
        assert!(TailLaw::log_pareto(-0.5).is_err());
    }

    #[test]
    fn tau_at_is_pure_and_checks_dimension() {
        let env = Environment::new(TailLaw::pareto(0.5).unwrap(), 7, 2).unwrap();
        let a = env.tau_at(&[3, -4]).unwrap();
        assert_eq!(a, env.tau_at(&[3, -4]).unwrap());
        assert_ne!(a, env.tau_at(&[-4, 3]).unwrap());
        assert_eq!(
            env.tau_at(&[1, 2, 3]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        );
        let other = Environment::new(TailLaw::pareto(0.5).unwrap(), 8, 2).unwrap();
        assert_ne!(a, other.tau_at(&[3, -4]).unwrap());
    }
}
