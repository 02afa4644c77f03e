//! Test problems and their reference points.
//!
//! Every problem is exposed in minimization form. Objectives that are
//! naturally maximized are negated inside `evaluate`, and reference points
//! given in the maximization sense are negated once at construction.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, mat_vec, solve, Matrix};
use crate::scalar::Real;

pub const BRANIN_CURRIN_HV_MAX: f64 = 59.36011874867746;
pub const VEHICLE_SAFETY_HV_MAX: f64 = 246.81607081187002;
pub const NASBENCH201_HV_MAX: f64 = 8.06987476348877;
pub const DTLZ2_M2_HV_MAX: f64 = 1.4460165933151778;
pub const DTLZ2_M10_HV_MAX: f64 = 2.5912520655298095;

pub const VEHICLE_SAFETY_REF: [f64; 3] = [1864.72022, 11.81993945, 0.2903999384];

type Evaluator<R> = Arc<dyn Fn(&[R]) -> Result<Vec<R>> + Send + Sync>;

#[derive(Clone)]
pub struct Problem<R> {
    pub name: String,
    pub bounds: Arc<Bounds<R>>,
    pub n_obj: usize,
    /// Minimization-sense reference point.
    pub reference: Vec<R>,
    pub hv_max: Option<R>,
    evaluator: Evaluator<R>,
}

impl<R> fmt::Debug for Problem<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n_obj", &self.n_obj)
            .finish_non_exhaustive()
    }
}

impl<R: Real> Problem<R> {
    pub fn new(
        name: impl Into<String>,
        bounds: Bounds<R>,
        reference: Vec<R>,
        hv_max: Option<R>,
        evaluator: impl Fn(&[R]) -> Result<Vec<R>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            bounds: Arc::new(bounds),
            n_obj: reference.len(),
            reference,
            hv_max,
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Objectives at `x`; fails outside the box.
    pub fn evaluate(&self, x: &[R]) -> Result<Vec<R>> {
        Error::check_dim(self.dim(), x.len())?;
        if !self.bounds.contains(x) {
            return Err(Error::Domain(format!("{}: point outside the search box", self.name)));
        }
        let f = (self.evaluator)(x)?;
        Error::check_dim(self.n_obj, f.len())?;
        Ok(f)
    }
}

fn in_box<R: Real>(x: &[R], lo: f64, hi: f64, name: &str) -> Result<()> {
    if x.iter().all(|&v| v >= R::of(lo) && v <= R::of(hi)) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name}: input outside [{lo}, {hi}]")))
    }
}

pub fn eval_branin_currin<R: Real>(x: &[R]) -> Result<[R; 2]> {
    Error::check_dim(2, x.len())?;
    in_box(x, 0.0, 1.0, "branin_currin")?;
    let c = R::of;
    let pi = c(PI);
    let (x1, x2) = (x[0], x[1]);
    let u = c(15.0) * x1 - c(5.0);
    let inner = c(15.0) * x2 - c(5.1) * u * u / (c(4.0) * pi * pi) + (c(75.0) * x1 - c(25.0)) / pi - c(5.0);
    let f1 = inner * inner + (c(10.0) - c(10.0) / (c(8.0) * pi)) * u.cos();
    let bracket = if x2 == R::zero() {
        R::one()
    } else {
        R::one() - (-R::one() / (c(2.0) * x2)).exp()
    };
    let num = c(2300.0) * x1.powi(3) + c(1900.0) * x1 * x1 + c(2092.0) * x1 + c(60.0);
    let den = c(100.0) * x1.powi(3) + c(500.0) * x1 * x1 + c(4.0) * x1 + c(20.0);
    Ok([f1, bracket * num / den])
}

pub fn eval_vehicle_safety<R: Real>(x: &[R]) -> Result<[R; 3]> {
    Error::check_dim(5, x.len())?;
    in_box(x, 1.0, 3.0, "vehicle_safety")?;
    let c = R::of;
    let (x1, x2, x3, x4, x5) = (x[0], x[1], x[2], x[3], x[4]);
    let f1 = c(1640.2823) + c(2.3573285) * x1 + c(2.3220035) * x2 + c(4.5688768) * x3 + c(7.7213633) * x4
        + c(4.4559504) * x5;
    let f2 = c(6.5856) + c(1.15) * x1 - c(1.0427) * x2 + c(0.9738) * x3 + c(0.8364) * x4 - c(0.3695) * x1 * x4
        + c(0.0861) * x1 * x5
        + c(0.3628) * x2 * x4
        + c(0.1106) * x1 * x1
        - c(0.3437) * x3 * x3
        + c(0.1764) * x4 * x4;
    let f3 = c(-0.0551) + c(0.0181) * x1 + c(0.1024) * x2 + c(0.0421) * x3 - c(0.0073) * x1 * x2
        + c(0.024) * x2 * x3
        - c(0.0118) * x2 * x4
        - c(0.0204) * x3 * x4
        - c(0.008) * x3 * x5
        - c(0.0241) * x2 * x2
        + c(0.0109) * x4 * x4;
    Ok([f1, f2, f3])
}

pub fn eval_dtlz2<R: Real>(x: &[R], m: usize) -> Result<Vec<R>> {
    let d = x.len();
    if m < 2 || d < m {
        return Err(Error::Config(format!("dtlz2 needs 2 <= M <= d, got d = {d}, M = {m}")));
    }
    in_box(x, 0.0, 1.0, "dtlz2")?;
    let half = R::of(0.5);
    let g: R = x[m - 1..].iter().map(|&v| (v - half) * (v - half)).sum();
    let angle = |v: R| R::of(PI / 2.0) * v;
    let scale = R::one() + g;
    // f_i = (1+g)·Π_{j < M-1-i} cos(θ_j)·(sin(θ_{M-1-i}) if i > 0)
    Ok((0..m)
        .map(|i| {
            let k = m - 1 - i;
            let mut v = scale;
            for &xj in &x[..k] {
                v = v * angle(xj).cos();
            }
            if i > 0 {
                v = v * angle(x[k]).sin();
            }
            v
        })
        .collect())
}

/// `f_j(x) = (x - c_j)ᵀ H_j (x - c_j)` with positive definite `H_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFamily<R> {
    centers: Vec<Vec<R>>,
    matrices: Vec<Matrix<R>>,
}

impl<R: Real> QuadraticFamily<R> {
    pub fn new(centers: Vec<Vec<R>>, matrices: Vec<Matrix<R>>) -> Result<Self> {
        Error::check_dim(centers.len(), matrices.len())?;
        let d = centers.first().map_or(0, Vec::len);
        if centers.len() < 2 || d == 0 {
            return Err(Error::Config("quadratic family needs at least two non-empty centers".into()));
        }
        for (c, h) in centers.iter().zip(&matrices) {
            Error::check_dim(d, c.len())?;
            Error::check_dim(d, h.len())?;
            cholesky(h)?;
        }
        Ok(Self { centers, matrices })
    }

    pub fn isotropic(centers: Vec<Vec<R>>) -> Result<Self> {
        let d = centers.first().map_or(0, Vec::len);
        let m = centers.len();
        Self::new(centers, vec![crate::linalg::identity(d); m])
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn n_obj(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Vec<R>] {
        &self.centers
    }

    pub fn matrices(&self) -> &[Matrix<R>] {
        &self.matrices
    }

    pub fn evaluate(&self, x: &[R]) -> Result<Vec<R>> {
        Error::check_dim(self.dim(), x.len())?;
        Ok(self
            .centers
            .iter()
            .zip(&self.matrices)
            .map(|(c, h)| {
                let diff: Vec<R> = x.iter().zip(c).map(|(&a, &b)| a - b).collect();
                crate::linalg::dot(&diff, &mat_vec(h, &diff))
            })
            .collect())
    }
}

/// Minimizer of `μ f_1 + (1 - μ) f_2`, a point of the Pareto set.
pub fn pareto_point_two_quadratics<R: Real>(
    mu: R,
    c1: &[R],
    c2: &[R],
    h1: &Matrix<R>,
    h2: &Matrix<R>,
) -> Result<Vec<R>> {
    if !(mu >= R::zero() && mu <= R::one()) {
        return Err(Error::Domain(format!("weight must lie in [0, 1], got {mu}")));
    }
    let d = c1.len();
    Error::check_dim(d, c2.len())?;
    let nu = R::one() - mu;
    let a: Matrix<R> = (0..d)
        .map(|i| (0..d).map(|j| mu * h1[i][j] + nu * h2[i][j]).collect())
        .collect();
    let r1 = mat_vec(h1, c1);
    let r2 = mat_vec(h2, c2);
    let b: Vec<R> = (0..d).map(|i| mu * r1[i] + nu * r2[i]).collect();
    solve(&a, &b)
}

pub const TABULAR_HEADER: [&str; 8] = ["k0", "k1", "k2", "k3", "k4", "k5", "accuracy", "flops"];
pub const TABULAR_DIM: usize = 6;
pub const TABULAR_CARDINALITY: u8 = 5;

#[derive(Debug, Deserialize)]
struct TabularRow {
    k0: u8,
    k1: u8,
    k2: u8,
    k3: u8,
    k4: u8,
    k5: u8,
    accuracy: f64,
    flops: f64,
}

/// Lookup table over `{0..4}^6` keyed architectures.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularProblem {
    table: HashMap<[u8; TABULAR_DIM], (f64, f64)>,
    acc_range: (f64, f64),
    flops_range: (f64, f64),
}

pub fn load_tabular(path: &Path) -> Result<TabularProblem> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| Error::Parse { row: 1, message: e.to_string() })?;
    if headers.iter().ne(TABULAR_HEADER) {
        return Err(Error::Parse {
            row: 1,
            message: format!("expected header {}", TABULAR_HEADER.join(",")),
        });
    }
    let mut table = HashMap::new();
    for (i, rec) in reader.deserialize::<TabularRow>().enumerate() {
        let row = i + 2;
        let r = rec.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        let key = [r.k0, r.k1, r.k2, r.k3, r.k4, r.k5];
        if key.iter().any(|&k| k >= TABULAR_CARDINALITY) {
            return Err(Error::Parse { row, message: format!("key {key:?} outside 0..=4") });
        }
        if !r.accuracy.is_finite() || !r.flops.is_finite() {
            return Err(Error::Parse { row, message: "non-finite accuracy or flops".into() });
        }
        table.insert(key, (r.accuracy, r.flops));
    }
    if table.is_empty() {
        return Err(Error::Parse { row: 1, message: "table has no rows".into() });
    }
    let range = |sel: fn(&(f64, f64)) -> f64| {
        table.values().map(sel).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    Ok(TabularProblem {
        acc_range: range(|p| p.0),
        flops_range: range(|p| p.1),
        table,
    })
}

fn normalize(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

impl TabularProblem {
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Floor of every coordinate, clamped to `0..=4`.
    pub fn key_of<R: Real>(x: &[R]) -> Result<[u8; TABULAR_DIM]> {
        Error::check_dim(TABULAR_DIM, x.len())?;
        let mut key = [0u8; TABULAR_DIM];
        for (k, &v) in key.iter_mut().zip(x) {
            let f = v.as_f64();
            if !f.is_finite() || f < 0.0 {
                return Err(Error::Domain(format!("tabular coordinate {f} outside [0, 5]")));
            }
            *k = f.floor().min(f64::from(TABULAR_CARDINALITY - 1)) as u8;
        }
        Ok(key)
    }

    pub fn raw(&self, key: &[u8; TABULAR_DIM]) -> Result<(f64, f64)> {
        self.table.get(key).copied().ok_or_else(|| Error::Lookup(key.to_vec()))
    }

    /// `(accuracy in [0, 1], flops in [-1, 0])`, both to be maximized.
    pub fn normalized(&self, key: &[u8; TABULAR_DIM]) -> Result<(f64, f64)> {
        let (acc, flops) = self.raw(key)?;
        Ok((normalize(acc, self.acc_range), -normalize(flops, self.flops_range)))
    }

    pub fn evaluate<R: Real>(&self, x: &[R]) -> Result<Vec<R>> {
        let (acc, flops) = self.normalized(&Self::key_of(x)?)?;
        Ok(vec![R::of(-acc), R::of(-flops)])
    }
}

/// Name and parameters of a registered problem.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub table: Option<PathBuf>,
    pub centers: Option<Vec<Vec<f64>>>,
    /// Overrides the bundled maximum hypervolume.
    pub hv_max: Option<f64>,
    /// Overrides the bundled reference point (minimization sense).
    pub reference: Option<Vec<f64>>,
}

impl ProblemSpec {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), ..Self::default() }
    }
}

pub const REGISTRY: [(&str, &str); 5] = [
    ("branin_currin", "d=2, M=2, box [0,1]^2"),
    ("vehicle_safety", "d=5, M=3, box [1,3]^5"),
    ("dtlz2", "d (default 18) >= M (default 2), box [0,1]^d"),
    ("nasbench201", "tabular, d=6, M=2, needs `table`"),
    ("quadratic", "isotropic quadratics, d (default 2), M (default 2), box [0,1]^d"),
];

fn dtlz2_hv_max(m: usize) -> Option<f64> {
    match m {
        2 => Some(DTLZ2_M2_HV_MAX),
        10 => Some(DTLZ2_M10_HV_MAX),
        _ => None,
    }
}

pub fn build_problem<R: Real>(spec: &ProblemSpec) -> Result<Problem<R>> {
    let v = |xs: &[f64]| xs.iter().map(|&x| R::of(x)).collect::<Vec<R>>();
    let fixed_dims = |d: usize, m: usize| -> Result<()> {
        if spec.d.is_some_and(|x| x != d) || spec.m.is_some_and(|x| x != m) {
            return Err(Error::Config(format!("{} has fixed d = {d}, M = {m}", spec.name)));
        }
        Ok(())
    };
    let mut problem = match spec.name.as_str() {
        "branin_currin" => {
            fixed_dims(2, 2)?;
            Problem::new(
                "branin_currin",
                Bounds::cube(2, 0.0, 1.0)?,
                v(&[18.0, 6.0]),
                Some(R::of(BRANIN_CURRIN_HV_MAX)),
                |x| eval_branin_currin(x).map(Vec::from),
            )
        }
        "vehicle_safety" => {
            fixed_dims(5, 3)?;
            Problem::new(
                "vehicle_safety",
                Bounds::cube(5, 1.0, 3.0)?,
                v(&VEHICLE_SAFETY_REF),
                Some(R::of(VEHICLE_SAFETY_HV_MAX)),
                |x| eval_vehicle_safety(x).map(Vec::from),
            )
        }
        "dtlz2" => {
            let m = spec.m.unwrap_or(2);
            let d = spec.d.unwrap_or(18);
            if m < 2 || d < m {
                return Err(Error::Config(format!("dtlz2 needs 2 <= M <= d, got d = {d}, M = {m}")));
            }
            Problem::new(
                "dtlz2",
                Bounds::cube(d, 0.0, 1.0)?,
                vec![R::of(1.1); m],
                dtlz2_hv_max(m).map(R::of),
                move |x| eval_dtlz2(x, m),
            )
        }
        "nasbench201" => {
            fixed_dims(TABULAR_DIM, 2)?;
            let path = spec
                .table
                .as_ref()
                .ok_or_else(|| Error::Config("nasbench201 needs a `table` path".into()))?;
            let table = load_tabular(path)?;
            // (-3, -6) in the maximization sense
            Problem::new(
                "nasbench201",
                Bounds::cube(TABULAR_DIM, 0.0, 5.0)?,
                v(&[3.0, 6.0]),
                Some(R::of(NASBENCH201_HV_MAX)),
                move |x| table.evaluate(x),
            )
        }
        "quadratic" => {
            let d = spec.d.unwrap_or(2);
            let m = spec.m.unwrap_or(2);
            let centers = match &spec.centers {
                Some(c) => c.clone(),
                None if m >= 2 => (0..m)
                    .map(|j| vec![0.25 + 0.5 * j as f64 / (m - 1) as f64; d])
                    .collect(),
                None => return Err(Error::Config("quadratic needs M >= 2".into())),
            };
            let family = QuadraticFamily::isotropic(centers.iter().map(|c| v(c)).collect())?;
            let d = family.dim();
            let m = family.n_obj();
            Problem::new(
                "quadratic",
                Bounds::cube(d, 0.0, 1.0)?,
                vec![R::of(1.1 * d as f64); m],
                None,
                move |x| family.evaluate(x),
            )
        }
        other => return Err(Error::Config(format!("unknown problem `{other}`"))),
    };
    if let Some(r) = &spec.reference {
        Error::check_dim(problem.n_obj, r.len())?;
        problem.reference = v(r);
    }
    if let Some(h) = spec.hv_max {
        problem.hv_max = Some(R::of(h));
    }
    Ok(problem)
}
