use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lattice::Site;

use super::WalkModel;

/// Streaming position generator `X_0 = 0, X_{k+1} = X_k + xi_{k+1}`.
pub struct Walker<'a, R> {
    model: &'a WalkModel,
    rng: R,
    pos: Site,
    step: usize,
}

impl<'a, R: Rng> Walker<'a, R> {
    pub fn new(model: &'a WalkModel, rng: R) -> Self {
        Walker {
            model,
            rng,
            pos: Site::ORIGIN,
            step: 0,
        }
    }

    pub fn position(&self) -> Site {
        self.pos
    }

    /// Index of the current position.
    pub fn step(&self) -> usize {
        self.step
    }

    #[inline]
    pub fn advance(&mut self) -> Result<Site> {
        let xi = self.model.sample_step(&mut self.rng);
        self.step += 1;
        self.pos = self
            .pos
            .checked_add(&xi)
            .ok_or(Error::CoordinateOverflow { step: self.step })?;
        Ok(self.pos)
    }
}

/// A simulated trajectory `X_0..X_n` with its range bookkeeping.
#[derive(Clone, Debug)]
pub struct PathRecord {
    positions: Vec<Site>,
    discovery_times: Vec<usize>,
    occupation: FxHashMap<Site, u64>,
}

impl PathRecord {
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn positions(&self) -> &[Site] {
        &self.positions
    }

    /// `sigma_0 < sigma_1 < ...`: the steps at which a new site is reached.
    pub fn discovery_times(&self) -> &[usize] {
        &self.discovery_times
    }

    /// The distinct sites in order of discovery.
    pub fn distinct_sites(&self) -> impl ExactSizeIterator<Item = Site> + '_ {
        self.discovery_times.iter().map(|&k| self.positions[k])
    }

    pub fn range_size(&self) -> usize {
        self.discovery_times.len()
    }

    /// `L(x, n)`: number of `k <= n` with `X_k = x`.
    pub fn occupation(&self, x: &Site) -> u64 {
        self.occupation.get(x).copied().unwrap_or(0)
    }

    pub fn occupation_map(&self) -> &FxHashMap<Site, u64> {
        &self.occupation
    }
}

pub fn simulate_path<R: Rng>(model: &WalkModel, n: usize, rng: R) -> Result<PathRecord> {
    let mut walker = Walker::new(model, rng);
    let mut positions = Vec::with_capacity(n + 1);
    let mut discovery_times = vec![0];
    let mut occupation = FxHashMap::default();
    positions.push(Site::ORIGIN);
    occupation.insert(Site::ORIGIN, 1);
    for k in 1..=n {
        let x = walker.advance()?;
        positions.push(x);
        let count = occupation.entry(x).or_insert(0);
        if *count == 0 {
            discovery_times.push(k);
        }
        *count += 1;
    }
    Ok(PathRecord {
        positions,
        discovery_times,
        occupation,
    })
}
