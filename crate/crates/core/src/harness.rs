//! End-to-end optimization runs, traces and CSV output.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::benchmarks::{build_problem, Problem, ProblemSpec};
use crate::dominance::{ObjectiveVector, SampleSet};
use crate::error::{Error, Result};
use crate::hypervolume::{hv_exact, hv_log_diff};
use crate::partition::{RegionPath, SplitConfig};
use crate::samplers::{make_sampler, LeafSamplerConfig, SamplerKind};
use crate::svm::SvmConfig;
use crate::tree::{build_tree, cp_value, CpSchedule, LeafUcb};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionVariant {
    #[default]
    Path,
    Leaf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub init_samples: usize,
    /// Points proposed per iteration (`q`).
    pub batch: usize,
    pub iterations: usize,
    pub sampler: SamplerKind,
    pub rejection_cap: usize,
    pub cmaes_generations: usize,
    pub cp: CpSchedule<f64>,
    pub svm: SvmConfig<f64>,
    pub leaf_min: usize,
    pub acc_min: f64,
    pub selection: SelectionVariant,
    pub leaf_ucb: LeafUcb,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sampler = LeafSamplerConfig::default();
        let split = SplitConfig::<f64>::default();
        Self {
            problem: ProblemSpec::named("branin_currin"),
            init_samples: 10,
            batch: sampler.q,
            iterations: 40,
            sampler: sampler.kind,
            rejection_cap: sampler.rejection_cap,
            cmaes_generations: sampler.generations,
            cp: CpSchedule::default(),
            svm: split.svm,
            leaf_min: split.leaf_min,
            acc_min: split.acc_min,
            selection: SelectionVariant::Path,
            leaf_ucb: LeafUcb::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn sampler_config(&self) -> LeafSamplerConfig {
        LeafSamplerConfig {
            kind: self.sampler,
            q: self.batch,
            rejection_cap: self.rejection_cap,
            generations: self.cmaes_generations,
        }
    }

    pub fn split_config(&self) -> SplitConfig<f64> {
        SplitConfig {
            leaf_min: self.leaf_min,
            acc_min: self.acc_min,
            svm: self.svm,
        }
    }

    /// Checks every setting and builds the problem.
    pub fn validate(&self) -> Result<Problem<f64>> {
        if self.init_samples < 2 {
            return Err(Error::Config(format!("init_samples must be at least 2, got {}", self.init_samples)));
        }
        if self.iterations < 1 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        self.sampler_config().validate()?;
        if self.leaf_min < 1 {
            return Err(Error::Config("leaf_min must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.acc_min) {
            return Err(Error::Config(format!("acc_min must lie in [0, 1], got {}", self.acc_min)));
        }
        if !(self.svm.c > 0.0) || !(self.svm.tol > 0.0) || self.svm.kernel.degree < 1 {
            return Err(Error::Config("SVM needs C > 0, tol > 0 and degree >= 1".into()));
        }
        let problem = build_problem::<f64>(&self.problem)?;
        cp_value(&self.cp, problem.hv_max, 0.0)?;
        Ok(problem)
    }

    /// SHA-256 of the configuration with the seed zeroed, so repeats of one
    /// experiment share a hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.seed = 0;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub num_samples: usize,
    pub hypervolume: f64,
    pub hv_log_diff: Option<f64>,
    pub leaf_depth: usize,
    pub fallback: bool,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<TraceRow>,
    /// Objective evaluations made by the sampler beyond the archive budget.
    pub inner_evaluations: usize,
}

impl Trace {
    pub fn final_hv(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.hypervolume)
    }

    /// Sample count of the first row whose hypervolume reaches `target`.
    pub fn samples_to_reach(&self, target: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.hypervolume >= target).map(|r| r.num_samples)
    }

    /// Equality of everything except wall time, with floats compared bitwise.
    pub fn same_outcome(&self, other: &Trace) -> bool {
        self.seed == other.seed
            && self.config_hash == other.config_hash
            && self.inner_evaluations == other.inner_evaluations
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.iteration == b.iteration
                    && a.num_samples == b.num_samples
                    && a.hypervolume.to_bits() == b.hypervolume.to_bits()
                    && a.hv_log_diff.map(f64::to_bits) == b.hv_log_diff.map(f64::to_bits)
                    && a.leaf_depth == b.leaf_depth
                    && a.fallback == b.fallback
            })
    }
}

/// The archive and trace of a finished run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: Trace,
    pub archive: SampleSet<f64>,
}

pub fn run_lamoo(cfg: &RunConfig) -> Result<Trace> {
    Ok(run(cfg, true)?.trace)
}

/// Same loop as [`run_lamoo`] with the region fixed to the whole box.
pub fn run_baseline(cfg: &RunConfig) -> Result<Trace> {
    Ok(run(cfg, false)?.trace)
}

pub fn run(cfg: &RunConfig, partition: bool) -> Result<RunOutput> {
    let problem = cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut archive = SampleSet::new(problem.dim(), problem.n_obj);
    for _ in 0..cfg.init_samples {
        let x = problem.bounds.sample(&mut rng);
        let f = problem.evaluate(&x)?;
        archive.push(x, ObjectiveVector::new(f)?)?;
    }
    archive.refresh_dominance();

    let split = cfg.split_config();
    let mut sampler = make_sampler::<f64>(cfg.sampler_config());
    let root = RegionPath::root(problem.bounds.clone());
    let mut hv = hv_exact(&archive.objectives(), &problem.reference)?;
    let mut rows = Vec::with_capacity(cfg.iterations);
    let mut inner_evaluations = 0;
    for iteration in 1..=cfg.iterations {
        let start = Instant::now();
        let region = if partition {
            let tree = build_tree(&archive, problem.bounds.clone(), &problem.reference, &split)?;
            let cp = cp_value(&cfg.cp, problem.hv_max, hv)?;
            match cfg.selection {
                SelectionVariant::Path => tree.select_path(cp).path,
                SelectionVariant::Leaf => tree.select_leaf_direct(cp, cfg.leaf_ucb).path,
            }
        } else {
            root.clone()
        };
        let mut objective = |x: &[f64]| problem.evaluate(x);
        let batch = sampler.propose(&region, &archive, &mut objective, &mut rng)?;
        inner_evaluations += batch.inner_evaluations;
        for c in batch.candidates {
            let f = match c.f {
                Some(f) => f,
                None => problem.evaluate(&c.x)?,
            };
            archive.push(c.x, ObjectiveVector::new(f)?)?;
        }
        archive.refresh_dominance();
        hv = hv_exact(&archive.objectives(), &problem.reference)?;
        rows.push(TraceRow {
            iteration,
            num_samples: archive.len(),
            hypervolume: hv,
            hv_log_diff: problem.hv_max.map(|m| hv_log_diff(m, hv)),
            leaf_depth: batch.effective_depth,
            fallback: batch.fallback,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(RunOutput {
        trace: Trace {
            seed: cfg.seed,
            config_hash: cfg.hash(),
            rows,
            inner_evaluations,
        },
        archive,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    /// Standard deviation of the mean.
    pub sem: f64,
}

/// Mean, sample standard deviation and standard error. Values are sorted
/// before summation so the result does not depend on input order.
pub fn summarize(values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    let std = if v.len() > 1 { (dev.iter().sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Summary { mean, std, sem: std / n.sqrt() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub iteration: usize,
    pub num_samples: usize,
    pub hypervolume: Summary,
    pub hv_log_diff: Option<Summary>,
}

pub fn aggregate(traces: &[Trace]) -> Result<Vec<AggregateRow>> {
    let first = traces.first().ok_or(Error::Empty("no traces to aggregate"))?;
    for t in traces {
        if t.rows.len() != first.rows.len() {
            return Err(Error::RaggedTraces(first.rows.len(), t.rows.len()));
        }
    }
    Ok((0..first.rows.len())
        .map(|i| {
            let hv: Vec<f64> = traces.iter().map(|t| t.rows[i].hypervolume).collect();
            let logs: Option<Vec<f64>> = traces.iter().map(|t| t.rows[i].hv_log_diff).collect();
            AggregateRow {
                iteration: first.rows[i].iteration,
                num_samples: first.rows[i].num_samples,
                hypervolume: summarize(&hv),
                hv_log_diff: logs.map(|l| summarize(&l)),
            }
        })
        .collect())
}

pub const TRACE_HEADER: [&str; 8] = [
    "seed",
    "iteration",
    "num_samples",
    "hypervolume",
    "hv_log_diff",
    "leaf_depth",
    "fallback",
    "wall_time_ms",
];

pub const AGGREGATE_HEADER: [&str; 8] = [
    "iteration",
    "num_samples",
    "hv_mean",
    "hv_std",
    "hv_sem",
    "hv_log_diff_mean",
    "hv_log_diff_std",
    "hv_log_diff_sem",
];

/// Ten significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.9e}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Io {
            path: path.into(),
            source: std::io::Error::other(format!("{other:?}")),
        },
    }
}

pub fn write_traces<W: Write>(traces: &[Trace], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for t in traces {
        for r in &t.rows {
            w.write_record([
                t.seed.to_string(),
                r.iteration.to_string(),
                r.num_samples.to_string(),
                fmt_float(r.hypervolume),
                r.hv_log_diff.map(fmt_float).unwrap_or_default(),
                r.leaf_depth.to_string(),
                u8::from(r.fallback).to_string(),
                fmt_float(r.wall_ms),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(traces: &[Trace], path: &Path) -> Result<()> {
    if traces.is_empty() {
        return Err(Error::Empty("no traces to write"));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_traces(traces, file).map_err(|e| csv_error(path, e))
}

pub fn write_aggregate<W: Write>(rows: &[AggregateRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        let log = |f: fn(&Summary) -> f64| r.hv_log_diff.as_ref().map(|s| fmt_float(f(s))).unwrap_or_default();
        w.write_record([
            r.iteration.to_string(),
            r.num_samples.to_string(),
            fmt_float(r.hypervolume.mean),
            fmt_float(r.hypervolume.std),
            fmt_float(r.hypervolume.sem),
            log(|s| s.mean),
            log(|s| s.std),
            log(|s| s.sem),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_aggregate_csv(rows: &[AggregateRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Empty("aggregate has no rows"));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_aggregate(rows, file).map_err(|e| csv_error(path, e))
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    seed: u64,
    iteration: usize,
    num_samples: usize,
    hypervolume: f64,
    hv_log_diff: Option<f64>,
    leaf_depth: usize,
    fallback: u8,
    wall_time_ms: f64,
}

/// Reads a file written by [`emit_csv`] back into `(seed, row)` pairs.
pub fn read_trace_csv(path: &Path) -> Result<Vec<(u64, TraceRow)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader
        .deserialize::<CsvRow>()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| Error::Parse { row: i + 2, message: e.to_string() })?;
            Ok((
                r.seed,
                TraceRow {
                    iteration: r.iteration,
                    num_samples: r.num_samples,
                    hypervolume: r.hypervolume,
                    hv_log_diff: r.hv_log_diff,
                    leaf_depth: r.leaf_depth,
                    fallback: r.fallback != 0,
                    wall_ms: r.wall_time_ms,
                },
            ))
        })
        .collect()
}
