//! Soft-margin kernel SVM trained with sequential minimal optimization.
//!
//! The solver is the randomized-pair variant of SMO: sweep over all
//! multipliers, and for each one violating the KKT conditions pick a random
//! partner and solve the two-variable subproblem analytically. Training stops
//! after `max_passes` consecutive sweeps without an update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::scalar::Real;

/// Binary label; `Good` is the positive class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Good,
    Bad,
}

impl Side {
    pub fn sign<R: Real>(self) -> R {
        match self {
            Side::Good => R::one(),
            Side::Bad => -R::one(),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Side::Good => Side::Bad,
            Side::Bad => Side::Good,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma<R> {
    /// `1 / (d · var(X))` over all entries of the training matrix.
    Scale,
    Value(R),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "R: Real + Deserialize<'de>"))]
pub struct KernelSpec<R> {
    pub kind: KernelKind,
    pub degree: u32,
    pub gamma: Gamma<R>,
    pub coef0: R,
}

impl<R: Real> Default for KernelSpec<R> {
    fn default() -> Self {
        Self::polynomial(4)
    }
}

impl<R: Real> KernelSpec<R> {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            ..Self::polynomial(4)
        }
    }

    pub fn polynomial(degree: u32) -> Self {
        Self {
            kind: KernelKind::Polynomial,
            degree,
            gamma: Gamma::Scale,
            coef0: R::one(),
        }
    }

    pub fn rbf() -> Self {
        Self {
            kind: KernelKind::Rbf,
            ..Self::polynomial(4)
        }
    }

    fn resolve(&self, xs: &[Vec<R>]) -> Result<Kernel<R>> {
        if self.degree < 1 {
            return Err(Error::Config("polynomial degree must be at least 1".into()));
        }
        let gamma = match self.gamma {
            Gamma::Value(g) => g,
            Gamma::Scale => {
                let d = xs.first().map_or(1, Vec::len);
                let count = R::of((xs.len() * d) as f64);
                let mean = xs.iter().flatten().copied().sum::<R>() / count;
                let var = xs
                    .iter()
                    .flatten()
                    .map(|&v| (v - mean) * (v - mean))
                    .sum::<R>()
                    / count;
                if var > R::zero() {
                    R::one() / (R::of(d as f64) * var)
                } else {
                    R::one()
                }
            }
        };
        if !(gamma > R::zero() && gamma.is_finite()) {
            return Err(Error::Config(format!("kernel gamma must be positive, got {gamma}")));
        }
        Ok(Kernel {
            kind: self.kind,
            degree: self.degree,
            gamma,
            coef0: self.coef0,
        })
    }
}

/// Kernel with `gamma` resolved against the training data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel<R> {
    pub kind: KernelKind,
    pub degree: u32,
    pub gamma: R,
    pub coef0: R,
}

impl<R: Real> Kernel<R> {
    pub fn eval(&self, a: &[R], b: &[R]) -> R {
        match self.kind {
            KernelKind::Linear => dot(a, b),
            KernelKind::Polynomial => (self.gamma * dot(a, b) + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => {
                let sq: R = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
                (-self.gamma * sq).exp()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "R: Real + Deserialize<'de>"))]
pub struct SvmConfig<R> {
    pub kernel: KernelSpec<R>,
    /// Box constraint on the dual multipliers.
    pub c: R,
    /// KKT tolerance.
    pub tol: R,
    /// Consecutive update-free sweeps required to stop.
    pub max_passes: usize,
    /// Hard cap on the total number of sweeps.
    pub max_sweeps: usize,
    pub seed: u64,
}

impl<R: Real> Default for SvmConfig<R> {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::polynomial(4),
            c: R::one(),
            tol: R::of(1e-3),
            max_passes: 50,
            max_sweeps: 2_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel<R> {
    pub support_vectors: Vec<Vec<R>>,
    /// `αᵢ·yᵢ` for each support vector.
    pub dual_coef: Vec<R>,
    pub bias: R,
    pub kernel: Kernel<R>,
    pub c: R,
    pub training_accuracy: R,
    pub sweeps: usize,
}

impl<R: Real> SvmModel<R> {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// Raw decision value `Σ αᵢyᵢ k(xᵢ, x) + b`.
    pub fn decision_value(&self, x: &[R]) -> R {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, &a)| a * self.kernel.eval(sv, x))
            .sum::<R>()
            + self.bias
    }

    /// Predicted side. An exact zero maps to [`Side::Good`].
    pub fn predict(&self, x: &[R]) -> Side {
        if self.decision_value(x) >= R::zero() {
            Side::Good
        } else {
            Side::Bad
        }
    }
}

/// Checked prediction.
pub fn svm_decision<R: Real>(model: &SvmModel<R>, x: &[R]) -> Result<Side> {
    Error::check_dim(model.dim(), x.len())?;
    Ok(model.predict(x))
}

/// Full SMO training state, kept for inspection by tests.
pub(crate) struct Solution<R> {
    pub alphas: Vec<R>,
    pub bias: R,
    pub sweeps: usize,
}

pub(crate) fn smo<R: Real>(
    gram: &[Vec<R>],
    y: &[R],
    cfg: &SvmConfig<R>,
) -> Solution<R> {
    let n = y.len();
    let c = cfg.c;
    let tol = cfg.tol;
    let two = R::of(2.0);
    let min_step = R::of(1e-5);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut alphas = vec![R::zero(); n];
    // f_cache[k] = Σ αᵢyᵢ K(i, k), without bias.
    let mut f_cache = vec![R::zero(); n];
    let mut b = R::zero();
    let mut passes = 0;
    let mut sweeps = 0;

    while passes < cfg.max_passes && sweeps < cfg.max_sweeps {
        let mut changed = 0;
        for i in 0..n {
            let e_i = f_cache[i] + b - y[i];
            let violates = (y[i] * e_i < -tol && alphas[i] < c) || (y[i] * e_i > tol && alphas[i] > R::zero());
            if !violates {
                continue;
            }
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let e_j = f_cache[j] + b - y[j];
            let (ai_old, aj_old) = (alphas[i], alphas[j]);
            let (lo, hi) = if y[i] != y[j] {
                (R::max(R::zero(), aj_old - ai_old), R::min(c, c + aj_old - ai_old))
            } else {
                (R::max(R::zero(), ai_old + aj_old - c), R::min(c, ai_old + aj_old))
            };
            if lo >= hi {
                continue;
            }
            let eta = two * gram[i][j] - gram[i][i] - gram[j][j];
            if eta >= R::zero() {
                continue;
            }
            let aj = (aj_old - y[j] * (e_i - e_j) / eta).max(lo).min(hi);
            if (aj - aj_old).abs() < min_step {
                continue;
            }
            let ai = (ai_old + y[i] * y[j] * (aj_old - aj)).max(R::zero()).min(c);
            let di = (ai - ai_old) * y[i];
            let dj = (aj - aj_old) * y[j];
            let b1 = b - e_i - di * gram[i][i] - dj * gram[i][j];
            let b2 = b - e_j - di * gram[i][j] - dj * gram[j][j];
            b = if ai > R::zero() && ai < c {
                b1
            } else if aj > R::zero() && aj < c {
                b2
            } else {
                (b1 + b2) / two
            };
            alphas[i] = ai;
            alphas[j] = aj;
            for (k, fk) in f_cache.iter_mut().enumerate() {
                *fk = *fk + di * gram[i][k] + dj * gram[j][k];
            }
            changed += 1;
        }
        sweeps += 1;
        if changed == 0 {
            passes += 1;
        } else {
            passes = 0;
        }
    }
    Solution {
        alphas,
        bias: b,
        sweeps,
    }
}

pub(crate) fn validate_training_set<R: Real>(xs: &[Vec<R>], labels: &[Side]) -> Result<()> {
    Error::check_dim(xs.len(), labels.len())?;
    if xs.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            found: xs.len(),
        });
    }
    let d = xs[0].len();
    for x in xs {
        Error::check_dim(d, x.len())?;
    }
    let good = labels.iter().filter(|&&s| s == Side::Good).count();
    if good == 0 || good == labels.len() {
        return Err(Error::DegenerateLabels);
    }
    Ok(())
}

/// Trains a binary SVM. Deterministic for a given input order and seed.
pub fn svm_train<R: Real>(xs: &[Vec<R>], labels: &[Side], cfg: &SvmConfig<R>) -> Result<SvmModel<R>> {
    validate_training_set(xs, labels)?;
    if !(cfg.c > R::zero()) {
        return Err(Error::Config("SVM C must be positive".into()));
    }
    let kernel = cfg.kernel.resolve(xs)?;
    let gram: Vec<Vec<R>> = xs
        .iter()
        .map(|a| xs.iter().map(|b| kernel.eval(a, b)).collect())
        .collect();
    let y: Vec<R> = labels.iter().map(|s| s.sign()).collect();
    let sol = smo(&gram, &y, cfg);

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for (i, &a) in sol.alphas.iter().enumerate() {
        if a > R::zero() {
            support_vectors.push(xs[i].clone());
            dual_coef.push(a * y[i]);
        }
    }
    let mut model = SvmModel {
        support_vectors,
        dual_coef,
        bias: sol.bias,
        kernel,
        c: cfg.c,
        training_accuracy: R::zero(),
        sweeps: sol.sweeps,
    };
    let correct = xs
        .iter()
        .zip(labels)
        .filter(|(x, &l)| model.predict(x) == l)
        .count();
    model.training_accuracy = R::of(correct as f64 / xs.len() as f64);
    Ok(model)
}
