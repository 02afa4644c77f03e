//! Hypervolume of a point set with respect to a reference point.
//!
//! The exact value is the Lebesgue measure of the union of boxes `[p, r]`
//! over all points `p` that dominate the reference `r`. Two objectives use a
//! sort-and-sweep; three or more use the WFG exclusive-volume recursion.
//! A seeded Monte-Carlo estimator is provided as an independent cross-check.

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dominance::{lex_cmp, non_dominated_indices};
use crate::error::{Error, Result};
use crate::scalar::{self, Real, Scalar};

/// Clamp applied before taking the logarithm in [`hv_log_diff`].
pub const LOG_DIFF_EPS: f64 = 1e-12;

/// Upper corner anchoring the hypervolume, minimization sense.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePoint<S>(Vec<S>);

impl<S: Scalar> ReferencePoint<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite_value()) {
            return Err(Error::NonFinite(format!("reference coordinate {v:?}")));
        }
        Ok(Self(values))
    }
}

impl<S> Deref for ReferencePoint<S> {
    type Target = [S];

    fn deref(&self) -> &[S] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HvEstimate<R> {
    pub value: R,
    /// Zero for exact values.
    pub stderr: R,
    /// Zero for exact values.
    pub n_samples: usize,
}

fn check_dims<S: Scalar, P: AsRef<[S]>>(points: &[P], reference: &[S]) -> Result<()> {
    for p in points {
        Error::check_dim(reference.len(), p.as_ref().len())?;
    }
    Ok(())
}

/// Points strictly better than the reference in every coordinate.
fn contributing<S: Scalar, P: AsRef<[S]>>(points: &[P], reference: &[S]) -> Vec<Vec<S>> {
    points
        .iter()
        .map(|p| p.as_ref())
        .filter(|p| p.iter().zip(reference).all(|(a, r)| a < r))
        .map(|p| p.to_vec())
        .collect()
}

/// Exact hypervolume. Dispatches to [`hv_sweep_2d`] or [`hv_wfg`].
pub fn hv_exact<S: Scalar, P: AsRef<[S]>>(points: &[P], reference: &[S]) -> Result<S> {
    if reference.len() == 2 {
        hv_sweep_2d(points, reference)
    } else {
        hv_wfg(points, reference)
    }
}

/// Two-objective hypervolume by sorting on the first objective and sweeping.
pub fn hv_sweep_2d<S: Scalar, P: AsRef<[S]>>(points: &[P], reference: &[S]) -> Result<S> {
    Error::check_dim(2, reference.len())?;
    check_dims(points, reference)?;
    let mut pts = contributing(points, reference);
    pts.sort_by(|a, b| lex_cmp(a, b));
    let mut total = S::zero();
    let mut ceiling = reference[1];
    for p in &pts {
        if p[1] < ceiling {
            total = total + (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    Ok(total)
}

/// Hypervolume by the WFG recursion, for any number of objectives.
///
/// The exclusive volume of a point is its own box minus the hypervolume of
/// the later points limited against it (`max(p, q)` coordinate-wise).
pub fn hv_wfg<S: Scalar, P: AsRef<[S]>>(points: &[P], reference: &[S]) -> Result<S> {
    check_dims(points, reference)?;
    let pts = contributing(points, reference);
    Ok(wfg(nondominated_unique(pts), reference))
}

fn nondominated_unique<S: Scalar>(pts: Vec<Vec<S>>) -> Vec<Vec<S>> {
    let keep = non_dominated_indices(&pts);
    let mut out: Vec<Vec<S>> = keep.into_iter().map(|i| pts[i].clone()).collect();
    out.sort_by(|a, b| lex_cmp(a, b));
    out.dedup();
    out
}

fn box_volume<S: Scalar>(p: &[S], reference: &[S]) -> S {
    p.iter()
        .zip(reference)
        .fold(S::one(), |acc, (&a, &r)| acc * (r - a))
}

/// `pts` must be non-dominated, duplicate-free and sorted lexicographically.
fn wfg<S: Scalar>(pts: Vec<Vec<S>>, reference: &[S]) -> S {
    match pts.len() {
        0 => S::zero(),
        1 => box_volume(&pts[0], reference),
        _ => {
            let mut total = S::zero();
            for (k, p) in pts.iter().enumerate() {
                total = total + exclusive_volume(p, &pts[k + 1..], reference);
            }
            total
        }
    }
}

fn exclusive_volume<S: Scalar>(p: &[S], rest: &[Vec<S>], reference: &[S]) -> S {
    let limited: Vec<Vec<S>> = rest
        .iter()
        .map(|q| q.iter().zip(p).map(|(&a, &b)| scalar::max(a, b)).collect())
        .collect();
    box_volume(p, reference) - wfg(nondominated_unique(limited), reference)
}

/// Monte-Carlo hypervolume estimate over the box spanned by the coordinate-wise
/// minimum of the contributing points and the reference.
pub fn hv_monte_carlo<R: Real, P: AsRef<[R]>>(
    points: &[P],
    reference: &[R],
    n_draws: usize,
    seed: u64,
) -> Result<HvEstimate<R>> {
    if n_draws == 0 {
        return Err(Error::Config("n_draws must be at least 1".into()));
    }
    check_dims(points, reference)?;
    let pts = contributing(points, reference);
    let zero = HvEstimate {
        value: R::zero(),
        stderr: R::zero(),
        n_samples: n_draws,
    };
    if pts.is_empty() {
        return Ok(zero);
    }
    let m = reference.len();
    let lo: Vec<R> = (0..m)
        .map(|k| pts.iter().map(|p| p[k]).fold(R::infinity(), R::min))
        .collect();
    let volume = box_volume(&lo, reference);
    if !(volume > R::zero()) {
        return Ok(zero);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = vec![R::zero(); m];
    let mut hits = 0usize;
    for _ in 0..n_draws {
        for k in 0..m {
            draw[k] = lo[k] + (reference[k] - lo[k]) * R::of(rng.random::<f64>());
        }
        if pts
            .iter()
            .any(|p| p.iter().zip(&draw).all(|(a, u)| a <= u))
        {
            hits += 1;
        }
    }
    let frac = hits as f64 / n_draws as f64;
    let se = (frac * (1.0 - frac) / n_draws as f64).sqrt();
    Ok(HvEstimate {
        value: R::of(frac) * volume,
        stderr: R::of(se) * volume,
        n_samples: n_draws,
    })
}

/// `ln(max(hv_max - hv_cur, 1e-12))`.
pub fn hv_log_diff<R: Real>(hv_max: R, hv_cur: R) -> R {
    R::max(hv_max - hv_cur, R::of(LOG_DIFF_EPS)).ln()
}
