//! Integer lattice points of Z^d, 1 <= d <= [`MAX_DIM`].

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported lattice dimension. Unused trailing coordinates are zero.
pub const MAX_DIM: usize = 4;

/// Coordinates are kept below this bound in absolute value.
pub const COORD_LIMIT: i64 = 1 << 62;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Site(pub [i64; MAX_DIM]);

impl Site {
    pub const ORIGIN: Site = Site([0; MAX_DIM]);

    pub fn from_slice(coords: &[i64]) -> Result<Site> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "lattice dimension must be in 1..={MAX_DIM}, got {}",
                coords.len()
            )));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Site(c))
    }

    pub fn axis(dim_index: usize, value: i64) -> Site {
        let mut c = [0; MAX_DIM];
        c[dim_index] = value;
        Site(c)
    }

    pub fn is_origin(&self) -> bool {
        self.0 == [0; MAX_DIM]
    }

    pub fn coords(&self, dim: usize) -> &[i64] {
        &self.0[..dim]
    }

    /// Adds `step`, failing when any coordinate would leave `(-2^62, 2^62)`.
    #[inline]
    pub fn checked_add(&self, step: &Site) -> Option<Site> {
        let mut out = [0; MAX_DIM];
        for ((o, a), b) in out.iter_mut().zip(self.0).zip(step.0) {
            let v = a.checked_add(b)?;
            if v.abs() >= COORD_LIMIT {
                return None;
            }
            *o = v;
        }
        Some(Site(out))
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}
