use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{invalid, Error, Result};
use crate::lattice::{Site, MAX_DIM};

/// Default truncation for [`JumpLaw::Heavy1d`].
pub const DEFAULT_KMAX: u64 = 1 << 20;

/// The jump law `mu` on `Z^d \ {0}`.
#[derive(Clone, Debug, PartialEq)]
pub enum JumpLaw {
    /// Uniform over the `2d` nearest neighbours.
    Srw { dim: usize },
    /// One-dimensional nearest-neighbour walk with `P(+1) = p`.
    Asym1d { p: f64 },
    /// `P(+-k) ∝ k^(-1-beta)` for `1 <= k <= kmax`, symmetric.
    Heavy1d { beta: f64, kmax: u64 },
    /// Explicit finite law.
    Table { dim: usize, entries: Vec<(Site, f64)> },
}

#[derive(Clone, Debug)]
enum Sampler {
    Srw { dim: usize },
    Asym { p: f64 },
    Heavy { index: Arc<WeightedAliasIndex<f64>> },
    Table { offsets: Arc<Vec<Site>>, index: Arc<WeightedAliasIndex<f64>> },
}

#[derive(Clone, Debug)]
pub struct WalkModel {
    law: JumpLaw,
    dim: usize,
    sampler: Sampler,
}

impl WalkModel {
    pub fn new(law: JumpLaw) -> Result<Self> {
        let (dim, sampler) = match &law {
            JumpLaw::Srw { dim } => {
                if *dim == 0 || *dim > MAX_DIM {
                    return invalid(format!("srw dimension must be in 1..={MAX_DIM}, got {dim}"));
                }
                (*dim, Sampler::Srw { dim: *dim })
            }
            JumpLaw::Asym1d { p } => {
                if !(*p >= 0.0 && *p <= 1.0) {
                    return invalid(format!("asym1d needs p in [0,1], got {p}"));
                }
                (1, Sampler::Asym { p: *p })
            }
            JumpLaw::Heavy1d { beta, kmax } => {
                if !(*beta > 0.0) || *kmax == 0 || *kmax > (1 << 30) {
                    return invalid(format!(
                        "heavy1d needs beta > 0 and 1 <= kmax <= 2^30, got beta={beta}, kmax={kmax}"
                    ));
                }
                let weights: Vec<f64> = (1..=*kmax).map(|k| (k as f64).powf(-1.0 - beta)).collect();
                let index = WeightedAliasIndex::new(weights)
                    .map_err(|e| Error::InvalidParameter(format!("heavy1d weights: {e}")))?;
                (1, Sampler::Heavy { index: Arc::new(index) })
            }
            JumpLaw::Table { dim, entries } => {
                if *dim == 0 || *dim > MAX_DIM {
                    return invalid(format!("table dimension must be in 1..={MAX_DIM}, got {dim}"));
                }
                if entries.is_empty() {
                    return invalid("table law has no entries");
                }
                let mut total = 0.0;
                for (site, p) in entries {
                    if site.is_origin() {
                        return invalid("jump law must not charge the zero offset");
                    }
                    if site.0[*dim..].iter().any(|&c| c != 0) {
                        return invalid(format!("offset {site:?} has more than {dim} coordinates"));
                    }
                    if !(*p > 0.0) {
                        return invalid(format!("table probabilities must be positive, got {p}"));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return invalid(format!("table probabilities sum to {total}, not 1 (tolerance 1e-12)"));
                }
                let offsets: Vec<Site> = entries.iter().map(|e| e.0).collect();
                let index = WeightedAliasIndex::new(entries.iter().map(|e| e.1).collect())
                    .map_err(|e| Error::InvalidParameter(format!("table weights: {e}")))?;
                (
                    *dim,
                    Sampler::Table {
                        offsets: Arc::new(offsets),
                        index: Arc::new(index),
                    },
                )
            }
        };
        Ok(WalkModel { law, dim, sampler })
    }

    pub fn srw(dim: usize) -> Result<Self> {
        WalkModel::new(JumpLaw::Srw { dim })
    }

    pub fn asym1d(p: f64) -> Result<Self> {
        WalkModel::new(JumpLaw::Asym1d { p })
    }

    pub fn heavy1d(beta: f64, kmax: u64) -> Result<Self> {
        WalkModel::new(JumpLaw::Heavy1d { beta, kmax })
    }

    pub fn table(dim: usize, entries: Vec<(Site, f64)>) -> Result<Self> {
        WalkModel::new(JumpLaw::Table { dim, entries })
    }

    /// Reads a table law from CSV rows `x_1,...,x_d,probability`. A header row
    /// is allowed; `#` starts a comment line.
    pub fn table_from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        let mut dim = None;
        let mut entries = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record
                .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
            let fields: Vec<&str> = record.iter().collect();
            if row == 0 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
                continue; // header
            }
            if fields.len() < 2 {
                return invalid(format!("{} row {}: need offset coordinates and a probability", path.display(), row + 1));
            }
            let d = fields.len() - 1;
            if *dim.get_or_insert(d) != d {
                return invalid(format!("{} row {}: inconsistent dimension", path.display(), row + 1));
            }
            let coords = fields[..d]
                .iter()
                .map(|f| f.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidParameter(format!("{} row {}: {e}", path.display(), row + 1)))?;
            let p: f64 = fields[d]
                .parse()
                .map_err(|e| Error::InvalidParameter(format!("{} row {}: {e}", path.display(), row + 1)))?;
            entries.push((Site::from_slice(&coords)?, p));
        }
        let Some(dim) = dim else {
            return invalid(format!("{} holds no table rows", path.display()));
        };
        WalkModel::table(dim, entries)
    }

    pub fn law(&self) -> &JumpLaw {
        &self.law
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One increment `xi` distributed as `mu`; never the zero vector.
    #[inline]
    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Site {
        match &self.sampler {
            Sampler::Srw { dim } => {
                let k = rng.random_range(0..2 * *dim as u32) as usize;
                Site::axis(k >> 1, if k & 1 == 0 { 1 } else { -1 })
            }
            Sampler::Asym { p } => {
                let up = *p >= 1.0 || rng.random::<f64>() < *p;
                Site::axis(0, if up { 1 } else { -1 })
            }
            Sampler::Heavy { index } => {
                let k = index.sample(rng) as i64 + 1;
                Site::axis(0, if rng.random::<bool>() { k } else { -k })
            }
            Sampler::Table { offsets, index } => offsets[index.sample(rng)],
        }
    }
}

impl fmt::Display for WalkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            JumpLaw::Srw { dim } => write!(f, "srw({dim})"),
            JumpLaw::Asym1d { p } => write!(f, "asym1d(p={p})"),
            JumpLaw::Heavy1d { beta, kmax } => write!(f, "heavy1d(beta={beta};kmax={kmax})"),
            JumpLaw::Table { dim, entries } => write!(f, "table(d={dim};atoms={})", entries.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_atom_table() {
        let m = WalkModel::table(2, vec![(Site::from_slice(&[1, 0]).unwrap(), 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(m.sample_step(&mut rng), Site::from_slice(&[1, 0]).unwrap());
        }
    }

    #[test]
    fn totally_asymmetric_steps_right() {
        let m = WalkModel::asym1d(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((0..1000).all(|_| m.sample_step(&mut rng) == Site::axis(0, 1)));
    }

    #[test]
    fn srw1_is_fair() {
        let m = WalkModel::srw(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let up = (0..n).filter(|_| m.sample_step(&mut rng) == Site::axis(0, 1)).count();
        assert!((up as f64 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn steps_are_never_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for m in [
            WalkModel::srw(3).unwrap(),
            WalkModel::asym1d(0.3).unwrap(),
            WalkModel::heavy1d(0.7, 1000).unwrap(),
        ] {
            assert!((0..10_000).all(|_| !m.sample_step(&mut rng).is_origin()));
        }
    }

    #[test]
    fn heavy1d_frequencies() {
        // P(|xi| = 1) = 1 / H where H = sum_k k^-2 over k <= 4
        let m = WalkModel::heavy1d(1.0, 4).unwrap();
        let h: f64 = (1..=4).map(|k| 1.0 / (k * k) as f64).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let ones = (0..n).filter(|_| m.sample_step(&mut rng).0[0].abs() == 1).count();
        assert!((ones as f64 / n as f64 - 1.0 / h).abs() < 0.005);
    }

    #[test]
    fn table_validation() {
        let o = Site::from_slice(&[0, 0]).unwrap();
        let e = Site::from_slice(&[1, 0]).unwrap();
        assert!(WalkModel::table(2, vec![(o, 1.0)]).is_err());
        assert!(WalkModel::table(2, vec![(e, 0.5)]).is_err());
        assert!(WalkModel::table(2, vec![(e, 0.5), (Site::from_slice(&[0, -1]).unwrap(), 0.5)]).is_ok());
        assert!(WalkModel::table(1, vec![(e, 0.5), (Site::from_slice(&[0, 1]).unwrap(), 0.5)]).is_err());
    }

    #[test]
    fn table_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("law.csv");
        std::fs::write(&path, "dx,dy,p\n1,0,0.25\n-1,0,0.25\n0,1,0.25\n0,-1,0.25\n").unwrap();
        let m = WalkModel::table_from_csv(&path).unwrap();
        assert_eq!(m.dim(), 2);
        std::fs::write(&path, "1,0,0.5\n-1,0.5\n").unwrap();
        assert!(WalkModel::table_from_csv(&path).is_err());
    }
}
