//! Candidate generation inside a selected region.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dominance::{dominance_numbers, dominates_unchecked, SampleSet};
use crate::error::{Error, Result};
use crate::linalg::{identity, mat_vec, norm, symmetric_eigen, Matrix};
use crate::partition::RegionPath;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    #[default]
    Random,
    Cmaes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeafSamplerConfig {
    pub kind: SamplerKind,
    pub q: usize,
    /// Attempts allowed per accepted point before a constraint is dropped.
    pub rejection_cap: usize,
    pub generations: usize,
}

impl Default for LeafSamplerConfig {
    fn default() -> Self {
        Self {
            kind: SamplerKind::Random,
            q: 5,
            rejection_cap: 10_000,
            generations: 10,
        }
    }
}

impl LeafSamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Config("batch size q must be at least 1".into()));
        }
        if self.rejection_cap == 0 {
            return Err(Error::Config("rejection cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// A proposed point, with its objectives if the sampler already evaluated it.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<R> {
    pub x: Vec<R>,
    pub f: Option<Vec<R>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch<R> {
    pub candidates: Vec<Candidate<R>>,
    /// Depth of the region prefix the points were actually drawn from.
    pub effective_depth: usize,
    /// True when constraints had to be dropped to fill the batch.
    pub fallback: bool,
    /// Objective evaluations spent on candidates that were not returned.
    pub inner_evaluations: usize,
}

/// Uniform points of the root box that satisfy the region. When `cap`
/// consecutive draws fail, the deepest remaining constraint is dropped.
pub fn rejection_sample<R: Real>(
    region: &RegionPath<R>,
    q: usize,
    cap: usize,
    rng: &mut (impl Rng + ?Sized),
) -> (Vec<Vec<R>>, usize) {
    let mut depth = region.depth();
    let mut current = region.clone();
    let mut out = Vec::with_capacity(q);
    let mut misses = 0;
    while out.len() < q {
        let x = region.bounds().sample(rng);
        if current.contains(&x) {
            out.push(x);
            misses = 0;
            continue;
        }
        misses += 1;
        if misses >= cap.max(1) && depth > 0 {
            depth -= 1;
            current = region.prefix(depth);
            misses = 0;
        }
    }
    (out, depth)
}

pub fn leaf_sample_random<R: Real>(
    region: &RegionPath<R>,
    q: usize,
    cap: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Batch<R> {
    let (xs, depth) = rejection_sample(region, q, cap, rng);
    Batch {
        candidates: xs.into_iter().map(|x| Candidate { x, f: None }).collect(),
        effective_depth: depth,
        fallback: depth < region.depth(),
        inner_evaluations: 0,
    }
}

/// Standard (μ/μ_w, λ)-CMA-ES with rank-one and rank-μ updates and
/// cumulative step-size adaptation.
#[derive(Clone, Debug)]
pub struct CmaesState<R> {
    pub mean: Vec<R>,
    pub sigma: R,
    pub cov: Matrix<R>,
    pub p_sigma: Vec<R>,
    pub p_c: Vec<R>,
    pub lambda: usize,
    pub weights: Vec<R>,
    pub mu_eff: R,
    pub generation: usize,
    c_sigma: R,
    d_sigma: R,
    c_c: R,
    c_1: R,
    c_mu: R,
    chi_n: R,
    /// Eigenbasis (columns) and axis lengths of `cov`.
    basis: Matrix<R>,
    axes: Vec<R>,
}

const EIGEN_FLOOR: f64 = 1e-12;

impl<R: Real> CmaesState<R> {
    pub fn default_lambda(dim: usize) -> usize {
        4 + (3.0 * (dim.max(1) as f64).ln()).floor() as usize
    }

    pub fn new(mean: Vec<R>, sigma: R, lambda: usize) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::Config("CMA-ES needs at least one dimension".into()));
        }
        if lambda < 4 {
            return Err(Error::Config(format!("CMA-ES population must be at least 4, got {lambda}")));
        }
        if !(sigma > R::zero()) || !sigma.is_finite() {
            return Err(Error::Config(format!("CMA-ES step size must be positive, got {sigma}")));
        }
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let mu_eff = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
        let nf = n as f64;
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Ok(Self {
            mean,
            sigma,
            cov: identity(n),
            p_sigma: vec![R::zero(); n],
            p_c: vec![R::zero(); n],
            lambda,
            weights: w.into_iter().map(R::of).collect(),
            mu_eff: R::of(mu_eff),
            generation: 0,
            c_sigma: R::of(c_sigma),
            d_sigma: R::of(d_sigma),
            c_c: R::of(c_c),
            c_1: R::of(c_1),
            c_mu: R::of(c_mu),
            chi_n: R::of(chi_n),
            basis: identity(n),
            axes: vec![R::one(); n],
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Draws `λ` candidates from `N(mean, σ²·C)`.
    pub fn ask(&self, rng: &mut (impl Rng + ?Sized)) -> Vec<Vec<R>> {
        let n = self.dim();
        (0..self.lambda)
            .map(|_| {
                let z: Vec<R> = (0..n)
                    .map(|i| self.axes[i] * R::of(rng.sample::<f64, _>(StandardNormal)))
                    .collect();
                let y = mat_vec(&self.basis, &z);
                (0..n).map(|i| self.mean[i] + self.sigma * y[i]).collect()
            })
            .collect()
    }

    /// Updates the distribution from evaluated candidates (smaller fitness is
    /// better). Non-finite fitness ranks last.
    pub fn tell(&mut self, candidates: &[Vec<R>], fitness: &[R]) -> Result<()> {
        Error::check_dim(self.lambda, candidates.len())?;
        Error::check_dim(self.lambda, fitness.len())?;
        let n = self.dim();
        for c in candidates {
            Error::check_dim(n, c.len())?;
        }
        let key = |f: R| if f.is_finite() { f } else { R::infinity() };
        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| crate::scalar::cmp(&key(fitness[a]), &key(fitness[b])));

        let old_mean = self.mean.clone();
        let ys: Vec<Vec<R>> = order[..self.weights.len()]
            .iter()
            .map(|&k| (0..n).map(|i| (candidates[k][i] - old_mean[i]) / self.sigma).collect())
            .collect();
        let y_w: Vec<R> = (0..n)
            .map(|i| self.weights.iter().zip(&ys).map(|(&w, y)| w * y[i]).sum())
            .collect();
        for i in 0..n {
            self.mean[i] = old_mean[i] + self.sigma * y_w[i];
        }

        // C^{-1/2}·y_w = B·D^{-1}·Bᵀ·y_w
        let bt_y: Vec<R> = (0..n)
            .map(|k| (0..n).map(|i| self.basis[i][k] * y_w[i]).sum::<R>() / self.axes[k])
            .collect();
        let inv_sqrt_y = mat_vec(&self.basis, &bt_y);
        let one = R::one();
        let two = R::of(2.0);
        let cs = self.c_sigma;
        let ps_coef = (cs * (two - cs) * self.mu_eff).sqrt();
        for i in 0..n {
            self.p_sigma[i] = (one - cs) * self.p_sigma[i] + ps_coef * inv_sqrt_y[i];
        }
        self.generation += 1;
        let ps_norm = norm(&self.p_sigma);
        let decay = (one - (one - cs).powi(2 * self.generation as i32)).sqrt();
        let h_sigma = ps_norm / decay < (R::of(1.4) + two / R::of(n as f64 + 1.0)) * self.chi_n;
        let h = if h_sigma { one } else { R::zero() };
        let cc = self.c_c;
        let pc_coef = (cc * (two - cc) * self.mu_eff).sqrt();
        for i in 0..n {
            self.p_c[i] = (one - cc) * self.p_c[i] + h * pc_coef * y_w[i];
        }

        let (c1, cmu) = (self.c_1, self.c_mu);
        let correction = (one - h) * cc * (two - cc);
        for i in 0..n {
            for j in 0..n {
                let rank_mu: R = self.weights.iter().zip(&ys).map(|(&w, y)| w * y[i] * y[j]).sum();
                self.cov[i][j] = (one - c1 - cmu) * self.cov[i][j]
                    + c1 * (self.p_c[i] * self.p_c[j] + correction * self.cov[i][j])
                    + cmu * rank_mu;
            }
        }
        self.sigma = self.sigma * ((cs / self.d_sigma) * (ps_norm / self.chi_n - one)).exp();
        if !self.sigma.is_finite() || !(self.sigma > R::zero()) {
            return Err(Error::Numeric(format!("CMA-ES step size became {}", self.sigma)));
        }
        self.repair();
        Ok(())
    }

    /// Symmetrizes the covariance, clamps its eigenvalues and refreshes the
    /// sampling basis.
    fn repair(&mut self) {
        let n = self.dim();
        for i in 0..n {
            for j in 0..i {
                let avg = (self.cov[i][j] + self.cov[j][i]) / R::of(2.0);
                self.cov[i][j] = avg;
                self.cov[j][i] = avg;
            }
        }
        let (mut vals, vecs) = symmetric_eigen(&self.cov);
        let floor = R::of(EIGEN_FLOOR);
        let clamped = vals.iter().any(|v| !(*v >= floor));
        for v in vals.iter_mut() {
            if !(*v >= floor) {
                *v = floor;
            }
        }
        if clamped {
            for i in 0..n {
                for j in 0..n {
                    self.cov[i][j] = (0..n).map(|k| vecs[i][k] * vals[k] * vecs[j][k]).sum();
                }
            }
        }
        self.axes = vals.iter().map(|v| v.sqrt()).collect();
        self.basis = vecs;
    }

    pub fn eigenvalues(&self) -> Vec<R> {
        self.axes.iter().map(|a| *a * *a).collect()
    }
}

/// Number of archive members that dominate `f`.
pub fn dominance_against<R: Real>(archive: &SampleSet<R>, f: &[R]) -> usize {
    archive.iter().filter(|s| dominates_unchecked(&s.f, f)).count()
}

/// CMA-ES on the dominance number inside a region.
///
/// The search runs in unit-cube coordinates of the root box. Candidates
/// outside the region are not evaluated; they get the penalty
/// `|archive| + 1 + distance to the starting mean` instead.
pub fn leaf_sample_cmaes<R: Real, F>(
    region: &RegionPath<R>,
    archive: &SampleSet<R>,
    cfg: &LeafSamplerConfig,
    objective: &mut F,
    rng: &mut (impl Rng + ?Sized),
) -> Result<Batch<R>>
where
    F: FnMut(&[R]) -> Result<Vec<R>> + ?Sized,
{
    cfg.validate()?;
    if archive.is_empty() {
        return Err(Error::Empty("CMA-ES leaf sampler needs a non-empty archive"));
    }
    let bounds = region.bounds();
    let mut fallback_depth = region.depth();
    let counts = dominance_numbers(archive);
    let start = (0..archive.len())
        .filter(|&i| region.contains(&archive.samples()[i].x))
        .min_by_key(|&i| counts[i]);
    let start_x = match start {
        Some(i) => archive.samples()[i].x.clone(),
        None => {
            let (pts, depth) = rejection_sample(region, 256, cfg.rejection_cap, rng);
            fallback_depth = fallback_depth.min(depth);
            let d = bounds.dim();
            (0..d)
                .map(|k| pts.iter().map(|p| p[k]).sum::<R>() / R::of(pts.len() as f64))
                .collect()
        }
    };
    let start_u = bounds.to_unit(&start_x);
    let d = bounds.dim();
    let mut state = CmaesState::new(start_u.clone(), R::of(0.3), CmaesState::<R>::default_lambda(d))?;
    let penalty_base = R::of(archive.len() as f64 + 1.0);

    let mut evaluated: Vec<(usize, usize, Candidate<R>)> = Vec::new();
    for _ in 0..cfg.generations {
        let asked = state.ask(rng);
        let mut fitness = Vec::with_capacity(asked.len());
        for u in &asked {
            let x = bounds.from_unit(u);
            if region.contains(&x) {
                let f = objective(&x)?;
                let o = dominance_against(archive, &f);
                fitness.push(R::of(o as f64));
                evaluated.push((o, evaluated.len(), Candidate { x, f: Some(f) }));
            } else {
                let dist: R = u
                    .iter()
                    .zip(&start_u)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<R>()
                    .sqrt();
                fitness.push(penalty_base + dist);
            }
        }
        state.tell(&asked, &fitness)?;
    }

    let inner = evaluated.len();
    evaluated.sort_by_key(|(o, seq, _)| (*o, *seq));
    let mut candidates: Vec<Candidate<R>> = evaluated.into_iter().take(cfg.q).map(|(_, _, c)| c).collect();
    let returned_evaluated = candidates.len();
    if candidates.len() < cfg.q {
        let (pad, depth) = rejection_sample(region, cfg.q - candidates.len(), cfg.rejection_cap, rng);
        fallback_depth = fallback_depth.min(depth);
        candidates.extend(pad.into_iter().map(|x| Candidate { x, f: None }));
    }
    Ok(Batch {
        candidates,
        effective_depth: fallback_depth,
        fallback: fallback_depth < region.depth(),
        inner_evaluations: inner - returned_evaluated,
    })
}

/// A strategy for proposing `q` points inside a region.
pub trait LeafSampler<R: Real> {
    fn propose(
        &mut self,
        region: &RegionPath<R>,
        archive: &SampleSet<R>,
        objective: &mut dyn FnMut(&[R]) -> Result<Vec<R>>,
        rng: &mut dyn RngCore,
    ) -> Result<Batch<R>>;
}

pub struct RandomSampler {
    pub cfg: LeafSamplerConfig,
}

pub struct CmaesSampler {
    pub cfg: LeafSamplerConfig,
}

impl<R: Real> LeafSampler<R> for RandomSampler {
    fn propose(
        &mut self,
        region: &RegionPath<R>,
        _archive: &SampleSet<R>,
        _objective: &mut dyn FnMut(&[R]) -> Result<Vec<R>>,
        rng: &mut dyn RngCore,
    ) -> Result<Batch<R>> {
        self.cfg.validate()?;
        Ok(leaf_sample_random(region, self.cfg.q, self.cfg.rejection_cap, rng))
    }
}

impl<R: Real> LeafSampler<R> for CmaesSampler {
    fn propose(
        &mut self,
        region: &RegionPath<R>,
        archive: &SampleSet<R>,
        objective: &mut dyn FnMut(&[R]) -> Result<Vec<R>>,
        rng: &mut dyn RngCore,
    ) -> Result<Batch<R>> {
        leaf_sample_cmaes(region, archive, &self.cfg, objective, rng)
    }
}

pub fn make_sampler<R: Real>(cfg: LeafSamplerConfig) -> Box<dyn LeafSampler<R>> {
    match cfg.kind {
        SamplerKind::Random => Box::new(RandomSampler { cfg }),
        SamplerKind::Cmaes => Box::new(CmaesSampler { cfg }),
    }
}
