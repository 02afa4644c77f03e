use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Axis-aligned search box, `lo[i] <= x[i] <= hi[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds<R> {
    lo: Vec<R>,
    hi: Vec<R>,
}

impl<R: Real> Bounds<R> {
    pub fn new(lo: Vec<R>, hi: Vec<R>) -> Result<Self> {
        Error::check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::Config("bounds need at least one dimension".into()));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::Config(format!("invalid interval [{l}, {h}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The same interval in every dimension.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![R::of(lo); dim], vec![R::of(hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[R] {
        &self.lo
    }

    pub fn hi(&self) -> &[R] {
        &self.hi
    }

    pub fn contains(&self, x: &[R]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    pub fn width(&self, i: usize) -> R {
        self.hi[i] - self.lo[i]
    }

    pub fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> Vec<R> {
        (0..self.dim())
            .map(|i| self.lo[i] + self.width(i) * R::of(rng.random::<f64>()))
            .collect()
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[R]) -> Vec<R> {
        u.iter()
            .enumerate()
            .map(|(i, &v)| self.lo[i] + self.width(i) * v)
            .collect()
    }

    pub fn to_unit(&self, x: &[R]) -> Vec<R> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| (v - self.lo[i]) / self.width(i))
            .collect()
    }

    pub fn center(&self) -> Vec<R> {
        self.from_unit(&vec![R::of(0.5); self.dim()])
    }
}
