//! Pareto dominance, dominance numbers and Pareto-front extraction.
//!
//! Every objective is minimized. A vector `a` dominates `b` when it is no
//! worse in any coordinate and strictly better in at least one; equal vectors
//! therefore never dominate each other.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// Objective values of one evaluated point, minimization sense.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveVector<S>(Vec<S>);

impl<S: Scalar> ObjectiveVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite_value()) {
            return Err(Error::NonFinite(format!("objective value {v:?}")));
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }
}

impl<S> Deref for ObjectiveVector<S> {
    type Target = [S];

    fn deref(&self) -> &[S] {
        &self.0
    }
}

impl<S> AsRef<[S]> for ObjectiveVector<S> {
    fn as_ref(&self) -> &[S] {
        &self.0
    }
}

/// A decision vector together with its objectives and dominance number.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<S> {
    pub x: Vec<S>,
    pub f: ObjectiveVector<S>,
    /// Number of samples in the containing set that dominate this one.
    pub dominance: usize,
}

/// Ordered collection of samples sharing input and objective dimensions.
///
/// Insertion order is significant: it breaks ties wherever a ranking is needed.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet<S> {
    samples: Vec<Sample<S>>,
    dim: usize,
    n_obj: usize,
}

impl<S: Scalar> SampleSet<S> {
    pub fn new(dim: usize, n_obj: usize) -> Self {
        Self {
            samples: Vec::new(),
            dim,
            n_obj,
        }
    }

    /// Builds a set from raw `(x, f)` pairs and fills in dominance numbers.
    pub fn from_pairs<I>(dim: usize, n_obj: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<S>, Vec<S>)>,
    {
        let mut set = Self::new(dim, n_obj);
        for (x, f) in pairs {
            set.push(x, ObjectiveVector::new(f)?)?;
        }
        set.refresh_dominance();
        Ok(set)
    }

    /// Set of objective vectors only; decision vectors are empty.
    pub fn from_objectives<I>(n_obj: usize, objectives: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<S>>,
    {
        Self::from_pairs(0, n_obj, objectives.into_iter().map(|f| (Vec::new(), f)))
    }

    /// Appends a sample. Its dominance number is left at 0 until
    /// [`SampleSet::refresh_dominance`] is called.
    pub fn push(&mut self, x: Vec<S>, f: ObjectiveVector<S>) -> Result<()> {
        Error::check_dim(self.dim, x.len())?;
        Error::check_dim(self.n_obj, f.len())?;
        self.samples.push(Sample { x, f, dominance: 0 });
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_obj(&self) -> usize {
        self.n_obj
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample<S>] {
        &self.samples
    }

    pub fn get(&self, i: usize) -> Option<&Sample<S>> {
        self.samples.get(i)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample<S>> {
        self.samples.iter()
    }

    pub fn objectives(&self) -> Vec<&[S]> {
        self.samples.iter().map(|s| &s.f[..]).collect()
    }

    /// Recomputes every sample's dominance number against this set.
    pub fn refresh_dominance(&mut self) {
        let counts = dominance_numbers(self);
        for (s, c) in self.samples.iter_mut().zip(counts) {
            s.dominance = c;
        }
    }

    /// New set holding the listed samples in the given order, with dominance
    /// numbers recomputed relative to the subset.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut out = Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            dim: self.dim,
            n_obj: self.n_obj,
        };
        out.refresh_dominance();
        out
    }
}

impl<'a, S> IntoIterator for &'a SampleSet<S> {
    type Item = &'a Sample<S>;
    type IntoIter = std::slice::Iter<'a, Sample<S>>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

/// Returns whether `a` Pareto-dominates `b` (minimization).
pub fn dominates<S: Scalar>(a: &[S], b: &[S]) -> Result<bool> {
    Error::check_dim(a.len(), b.len())?;
    Ok(dominates_unchecked(a, b))
}

#[inline]
pub(crate) fn dominates_unchecked<S: Scalar>(a: &[S], b: &[S]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Pairwise O(M·n²) dominance counts. Reference implementation for
/// [`dominance_counts`].
pub fn dominance_counts_bruteforce<S: Scalar, P: AsRef<[S]>>(points: &[P]) -> Vec<usize> {
    let mut out = vec![0; points.len()];
    for (i, pi) in points.iter().enumerate() {
        for (j, pj) in points.iter().enumerate() {
            if i != j && dominates_unchecked(pj.as_ref(), pi.as_ref()) {
                out[i] += 1;
            }
        }
    }
    out
}

/// Dominance counts. Two objectives use an O(n log n) sort-and-sweep;
/// more objectives fall back to the pairwise loop.
pub fn dominance_counts<S: Scalar, P: AsRef<[S]>>(points: &[P]) -> Vec<usize> {
    match points.first().map(|p| p.as_ref().len()) {
        Some(2) if points.iter().all(|p| p.as_ref().len() == 2) => counts_two_objectives(points),
        _ => dominance_counts_bruteforce(points),
    }
}

fn counts_two_objectives<S: Scalar, P: AsRef<[S]>>(points: &[P]) -> Vec<usize> {
    let n = points.len();
    let f = |i: usize, k: usize| points[i].as_ref()[k];

    // Dense ranks of the second objective.
    let mut by_f2: Vec<usize> = (0..n).collect();
    by_f2.sort_by(|&a, &b| scalar::cmp(&f(a, 1), &f(b, 1)));
    let mut rank = vec![0usize; n];
    let mut distinct = 0;
    for (pos, &i) in by_f2.iter().enumerate() {
        if pos > 0 && f(by_f2[pos - 1], 1) != f(i, 1) {
            distinct += 1;
        }
        rank[i] = distinct;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scalar::cmp(&f(a, 0), &f(b, 0)).then_with(|| scalar::cmp(&f(a, 1), &f(b, 1)))
    });

    let mut tree = Fenwick::new(distinct + 1);
    let mut out = vec![0; n];
    let mut start = 0;
    while start < n {
        // Group of equal first objective.
        let mut end = start + 1;
        while end < n && f(order[end], 0) == f(order[start], 0) {
            end += 1;
        }
        // Within the group, points with strictly smaller f2 dominate.
        let mut smaller = 0;
        let mut k = start;
        while k < end {
            let mut run_end = k + 1;
            while run_end < end && f(order[run_end], 1) == f(order[k], 1) {
                run_end += 1;
            }
            for &i in &order[k..run_end] {
                // Earlier groups: strictly smaller f1 and f2 <= ours.
                out[i] = smaller + tree.prefix(rank[i]);
            }
            smaller += run_end - k;
            k = run_end;
        }
        for &i in &order[start..end] {
            tree.add(rank[i]);
        }
        start = end;
    }
    out
}

struct Fenwick {
    tree: Vec<usize>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0; n + 1],
        }
    }

    fn add(&mut self, idx: usize) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted indices `<= idx`.
    fn prefix(&self, idx: usize) -> usize {
        let mut i = idx + 1;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        sum
    }
}

pub fn dominance_numbers_bruteforce<S: Scalar>(set: &SampleSet<S>) -> Vec<usize> {
    dominance_counts_bruteforce(&set.objectives())
}

pub fn dominance_numbers<S: Scalar>(set: &SampleSet<S>) -> Vec<usize> {
    dominance_counts(&set.objectives())
}

/// Indices of non-dominated points, ascending.
///
/// Points are visited in lexicographic order, so a point can only be
/// dominated by one visited before it; each is checked against the running
/// front only. Cost is O(n·|front|) rather than O(n²).
pub fn non_dominated_indices<S: Scalar, P: AsRef<[S]>>(points: &[P]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(points[a].as_ref(), points[b].as_ref()));
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        let p = points[i].as_ref();
        if !front
            .iter()
            .any(|&j| dominates_unchecked(points[j].as_ref(), p))
        {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

pub(crate) fn lex_cmp<S: Scalar>(a: &[S], b: &[S]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = scalar::cmp(x, y);
        if o.is_ne() {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Samples with dominance number 0, in insertion order.
pub fn pareto_front<S: Scalar>(set: &SampleSet<S>) -> SampleSet<S> {
    let keep = non_dominated_indices(&set.objectives());
    set.subset(&keep)
}
