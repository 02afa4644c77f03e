//! Dominance-ranked labelling and learned region boundaries.
//!
//! A node's samples are ranked by dominance number; the better half is
//! labelled [`Side::Good`] and an SVM is fit to separate the halves in
//! decision space. A region is the root box intersected with the chosen side
//! of every classifier on the path from the root.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::dominance::{dominance_numbers, SampleSet};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::svm::{svm_train, Side, SvmConfig, SvmModel};

/// Labels the `⌈n/2⌉` samples with the smallest dominance numbers as good.
/// Ties keep insertion order.
pub fn label_by_dominance<R: Real>(set: &SampleSet<R>) -> Result<Vec<Side>> {
    if set.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: set.len(),
        });
    }
    let counts = dominance_numbers(set);
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by_key(|&i| counts[i]);
    let n_good = set.len().div_ceil(2);
    let mut labels = vec![Side::Bad; set.len()];
    for &i in &order[..n_good] {
        labels[i] = Side::Good;
    }
    Ok(labels)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "R: Real + Deserialize<'de>"))]
pub struct SplitConfig<R> {
    /// A node needs at least `2 * leaf_min` samples to be split.
    pub leaf_min: usize,
    /// Minimum training accuracy for a classifier to be accepted.
    pub acc_min: R,
    pub svm: SvmConfig<R>,
}

impl<R: Real> Default for SplitConfig<R> {
    fn default() -> Self {
        Self {
            leaf_min: 10,
            acc_min: R::of(0.6),
            svm: SvmConfig::default(),
        }
    }
}

/// Trained classifier for a splittable node, `None` otherwise.
pub fn is_splittable<R: Real>(set: &SampleSet<R>, cfg: &SplitConfig<R>) -> Option<SvmModel<R>> {
    if set.len() < cfg.leaf_min.max(1).saturating_mul(2) {
        return None;
    }
    let labels = label_by_dominance(set).ok()?;
    let xs: Vec<Vec<R>> = set.iter().map(|s| s.x.clone()).collect();
    let model = svm_train(&xs, &labels, &cfg.svm).ok()?;
    if model.training_accuracy < cfg.acc_min {
        return None;
    }
    let good = xs.iter().filter(|x| model.predict(x) == Side::Good).count();
    if good == 0 || good == xs.len() {
        return None;
    }
    Some(model)
}

/// Root box plus the classifier constraints along a tree path.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionPath<R> {
    bounds: Arc<Bounds<R>>,
    constraints: Vec<(Arc<SvmModel<R>>, Side)>,
}

impl<R: Real> RegionPath<R> {
    pub fn root(bounds: Arc<Bounds<R>>) -> Self {
        Self {
            bounds,
            constraints: Vec::new(),
        }
    }

    pub fn child(&self, model: Arc<SvmModel<R>>, side: Side) -> Self {
        let mut constraints = self.constraints.clone();
        constraints.push((model, side));
        Self {
            bounds: self.bounds.clone(),
            constraints,
        }
    }

    /// The first `depth` constraints only.
    pub fn prefix(&self, depth: usize) -> Self {
        Self {
            bounds: self.bounds.clone(),
            constraints: self.constraints[..depth.min(self.constraints.len())].to_vec(),
        }
    }

    pub fn bounds(&self) -> &Bounds<R> {
        &self.bounds
    }

    pub fn depth(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[(Arc<SvmModel<R>>, Side)] {
        &self.constraints
    }

    pub fn contains(&self, x: &[R]) -> bool {
        self.bounds.contains(x) && self.constraints.iter().all(|(m, side)| m.predict(x) == *side)
    }
}

pub fn region_contains<R: Real>(path: &RegionPath<R>, x: &[R]) -> bool {
    path.contains(x)
}
