//! Sample-allocation analysis for iterated halving with an (α, η)-oracle.
//!
//! An oracle that sees `k` samples of a set `S` containing the optimum keeps
//! it in the good half with probability at least `1 - exp(-k / (η·|S|^α))`.
//! Everything here works in `f64`.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleParams {
    pub n: u64,
    pub alpha: f64,
    pub eta: f64,
    /// Total sample budget.
    pub k: f64,
    pub t: u32,
}

impl OracleParams {
    /// Validates the parameters. A non power of two `n` is rounded up; the
    /// second value reports whether that happened.
    pub fn new(n: u64, alpha: f64, eta: f64, k: f64, t: u32) -> Result<(Self, bool)> {
        if n < 2 {
            return Err(Error::Config(format!("N must be at least 2, got {n}")));
        }
        let rounded = n.checked_next_power_of_two().ok_or_else(|| Error::Config(format!("N = {n} too large")))?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Config(format!("eta must be positive, got {eta}")));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Config(format!("budget K must be positive, got {k}")));
        }
        let max_t = rounded.trailing_zeros();
        if t < 1 || t > max_t {
            return Err(Error::Config(format!("T must lie in 1..={max_t}, got {t}")));
        }
        Ok((Self { n: rounded, alpha, eta, k, t }, rounded != n))
    }

    /// `w_t = η·(N / 2^(t-1))^α` for `t = 1..=T`.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.t)
            .map(|i| self.eta * (self.n as f64 / 2f64.powi(i as i32)).powf(self.alpha))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionSequence {
    pub k: Vec<f64>,
    pub lambda: f64,
    pub weights: Vec<f64>,
}

pub fn phi(alpha: f64, t: u32) -> f64 {
    if alpha == 0.0 {
        return f64::from(t);
    }
    (1.0 - 2f64.powf(-alpha * f64::from(t))) / (1.0 - 2f64.powf(-alpha))
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::Empty("weights"));
    }
    if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("weights must be positive and finite".into()));
    }
    Ok(())
}

/// `g(λ) = Σ w_t·ln(1 + 1/(λ·w_t))`.
pub fn g(lambda: f64, w: &[f64]) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    check_weights(w)?;
    Ok(g_unchecked(lambda, w))
}

fn g_unchecked(lambda: f64, w: &[f64]) -> f64 {
    w.iter().map(|&wt| wt * (1.0 / (lambda * wt)).ln_1p()).sum()
}

/// Solves `g(λ) = K` by bisection on `ln λ`.
///
/// The bracket starts at `[1e-12, 1e12]` and is widened by factors of 1e6
/// if it does not contain the root. Fails when the root is not a normal
/// positive `f64`, which happens once `K` exceeds roughly `700·Σw`.
pub fn g_inverse(k: f64, w: &[f64]) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("budget must be positive, got {k}")));
    }
    check_weights(w)?;
    let (mut lo, mut hi) = (1e-12f64.ln(), 1e12f64.ln());
    let widen = 1e6f64.ln();
    while g_unchecked(lo.exp(), w) < k {
        lo -= widen;
        if lo < f64::MIN_POSITIVE.ln() {
            return Err(Error::Numeric(format!("g(lambda) = {k} needs lambda below the smallest positive f64")));
        }
    }
    while g_unchecked(hi.exp(), w) > k {
        hi += widen;
        if !hi.exp().is_finite() {
            return Err(Error::Numeric(format!("cannot bracket g(lambda) = {k}")));
        }
    }
    let tol = 1e-9 * k.max(1.0);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let v = g_unchecked(mid.exp(), w);
        if (v - k).abs() <= tol && hi - lo < 1e-12 {
            return Ok(mid.exp());
        }
        if v > k {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    if (g_unchecked(mid.exp(), w) - k).abs() <= tol {
        Ok(mid.exp())
    } else {
        Err(Error::Numeric(format!("bisection for g(lambda) = {k} did not reach tolerance")))
    }
}

/// Lower and upper bounds on `g⁻¹(K)` from the harmonic mean and the
/// maximum of the weights.
pub fn lambda_bounds(k: f64, w: &[f64]) -> Result<(f64, f64)> {
    check_weights(w)?;
    let t = w.len() as f64;
    let harmonic = t / w.iter().map(|v| 1.0 / v).sum::<f64>();
    let w_max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = |wb: f64| (1.0 / wb) / (k / (wb * t)).exp_m1();
    Ok((bound(harmonic), bound(w_max)))
}

pub fn optimal_actions(p: &OracleParams) -> Result<ActionSequence> {
    let weights = p.weights();
    let lambda = g_inverse(p.k, &weights)?;
    let k = weights.iter().map(|&w| w * (1.0 / (lambda * w)).ln_1p()).collect();
    Ok(ActionSequence { k, lambda, weights })
}

/// `(1/N)·exp[(ln 2 - η·N^α·φ(α, T)/K)·T]`, unclamped.
pub fn reward_lower_bound(p: &OracleParams) -> f64 {
    let n = p.n as f64;
    let t = f64::from(p.t);
    ((2f64.ln() - p.eta * n.powf(p.alpha) * phi(p.alpha, p.t) / p.k) * t).exp() / n
}

/// Probability that stage `t` keeps the optimum when it spends `k_t` samples.
fn stage_probabilities(p: &OracleParams, actions: &[f64]) -> Result<Vec<f64>> {
    Error::check_dim(p.t as usize, actions.len())?;
    if actions.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::Domain("sample counts must be non-negative".into()));
    }
    Ok(p.weights().iter().zip(actions).map(|(w, a)| -(-a / w).exp_m1()).collect())
}

/// `(2^T/N)·Π_t (1 - exp(-k_t / w_t))`.
pub fn exact_reward(p: &OracleParams, actions: &[f64]) -> Result<f64> {
    let probs = stage_probabilities(p, actions)?;
    Ok(2f64.powi(p.t as i32) / p.n as f64 * probs.iter().product::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl Estimate {
    fn from_hits(hits: usize, trials: usize) -> Self {
        let p = hits as f64 / trials as f64;
        let var = if trials > 1 {
            p * (1.0 - p) * trials as f64 / (trials - 1) as f64
        } else {
            0.0
        };
        Self {
            mean: p,
            stderr: (var / trials as f64).sqrt(),
            trials,
        }
    }
}

/// Monte-Carlo run of the halving chain: every stage keeps the optimum with
/// its oracle probability, then one element of the final set is picked
/// uniformly. The reward of a trial is 1 if the optimum is picked.
pub fn simulate_reward(p: &OracleParams, actions: &[f64], trials: usize, seed: u64) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let probs = stage_probabilities(p, actions)?;
    let final_size = p.n >> p.t;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..trials {
        if probs.iter().all(|&q| rng.random::<f64>() < q) && rng.random_range(0..final_size) == 0 {
            hits += 1;
        }
    }
    Ok(Estimate::from_hits(hits, trials))
}

/// Whether a simulated reward agrees with the exact one within 4 standard
/// errors. The binomial error of the exact value is used when it exceeds the
/// empirical one, so a run with no variance is not held to zero tolerance.
pub fn agrees(sim: &Estimate, exact: f64) -> bool {
    let exact_se = (exact * (1.0 - exact) / sim.trials as f64).max(0.0).sqrt();
    (sim.mean - exact).abs() <= 4.0 * sim.stderr.max(exact_se) + 1e-12
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleCheck {
    pub estimate: Estimate,
    /// `1 - exp(-k/|S|)`.
    pub bound: f64,
    pub holds: bool,
}

/// Simulates the uniform-draw oracle: draw `k` distinct elements of `S`,
/// put the best `⌈k/2⌉` of them in the good half and fill the rest of the
/// good half (size `|S|/2`) with random unsampled elements. Measures how
/// often the best element of `S` ends up in the good half.
pub fn uniform_oracle_check(size: usize, k: usize, trials: usize, seed: u64) -> Result<OracleCheck> {
    if size < 2 || k == 0 || k > size {
        return Err(Error::Config(format!("need 1 <= k <= |S| and |S| >= 2, got k = {k}, |S| = {size}")));
    }
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let good_size = size / 2;
    let ranked_good = k.div_ceil(2).min(good_size);
    let fill = good_size - ranked_good;
    let mut hits = 0;
    for _ in 0..trials {
        // rank 0 is the optimum; a random total order is a uniform relabelling
        let drawn = sample_indices(&mut rng, size, k);
        let best_drawn = drawn.iter().min().unwrap_or(usize::MAX);
        let kept = if best_drawn == 0 {
            true
        } else {
            size > k && rng.random_range(0..size - k) < fill
        };
        if kept {
            hits += 1;
        }
    }
    let estimate = Estimate::from_hits(hits, trials);
    let bound = -(-(k as f64) / size as f64).exp_m1();
    Ok(OracleCheck {
        estimate,
        bound,
        holds: estimate.mean >= bound - 4.0 * estimate.stderr,
    })
}

/// `T` non-negative amounts summing to `K`, uniform on the simplex.
pub fn random_allocation(t: usize, k: f64, rng: &mut impl Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..t).map(|_| rng.sample(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| k * v / s).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub params: OracleParams,
    /// Budget multiplier `c` in `K = N^α·c`.
    pub budget_factor: f64,
    pub lambda: f64,
    pub bound: f64,
    pub exact: f64,
    pub simulated: Estimate,
    pub bound_above_one: bool,
}

pub const GRID_N: [u64; 2] = [1 << 8, 1 << 12];
pub const GRID_ALPHA: [f64; 3] = [0.0, 0.5, 1.0];
pub const GRID_ETA: [f64; 2] = [0.5, 1.0];
pub const GRID_BUDGET_FACTOR: [f64; 3] = [1.0, 4.0, 16.0];

/// Every parameter combination of the standard grid, `T = 2..=log2 N`.
pub fn grid_params() -> Vec<(OracleParams, f64)> {
    let mut out = Vec::new();
    for n in GRID_N {
        for alpha in GRID_ALPHA {
            for eta in GRID_ETA {
                for c in GRID_BUDGET_FACTOR {
                    for t in 2..=n.trailing_zeros() {
                        let k = (n as f64).powf(alpha) * c;
                        let (p, _) = OracleParams::new(n, alpha, eta, k, t).expect("grid parameters are valid");
                        out.push((p, c));
                    }
                }
            }
        }
    }
    out
}

pub fn theory_grid(trials: usize, seed: u64) -> Result<Vec<GridRow>> {
    grid_params()
        .into_iter()
        .enumerate()
        .map(|(i, (params, c))| {
            let actions = optimal_actions(&params)?;
            let bound = reward_lower_bound(&params);
            Ok(GridRow {
                params,
                budget_factor: c,
                lambda: actions.lambda,
                bound,
                exact: exact_reward(&params, &actions.k)?,
                simulated: simulate_reward(&params, &actions.k, trials, seed.wrapping_add(i as u64))?,
                bound_above_one: bound > 1.0,
            })
        })
        .collect()
}
