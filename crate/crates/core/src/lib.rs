//! Multi-objective black-box optimization by learned space partitioning.
//!
//! The search space is split recursively by kernel SVMs trained to separate
//! samples with low dominance numbers from the rest. Each iteration the tree
//! is rebuilt, a region is chosen by UCB over node hypervolumes, and a leaf
//! sampler proposes new points inside it.
//!
//! Numeric code is generic over the scalar type. The aliases below fix it to
//! `f64` (and `f32` where useful).

pub mod benchmarks;
pub mod bounds;
pub mod dominance;
pub mod error;
pub mod harness;
pub mod hypervolume;
pub mod linalg;
pub mod partition;
pub mod samplers;
pub mod scalar;
pub mod svm;
pub mod theory;
pub mod tree;

pub use error::{Error, Result};
pub use harness::{aggregate, emit_csv, run_baseline, run_lamoo, RunConfig, Trace, TraceRow};
pub use hypervolume::{hv_exact, hv_log_diff, hv_monte_carlo};
pub use scalar::{Real, Scalar};

pub type ObjectiveVector = dominance::ObjectiveVector<f64>;
pub type Sample = dominance::Sample<f64>;
pub type SampleSet = dominance::SampleSet<f64>;
pub type SampleSet32 = dominance::SampleSet<f32>;
pub type ReferencePoint = hypervolume::ReferencePoint<f64>;
pub type HvEstimate = hypervolume::HvEstimate<f64>;
pub type Bounds = bounds::Bounds<f64>;
pub type KernelSpec = svm::KernelSpec<f64>;
pub type SvmConfig = svm::SvmConfig<f64>;
pub type SvmModel = svm::SvmModel<f64>;
pub type SvmModel32 = svm::SvmModel<f32>;
pub type SplitConfig = partition::SplitConfig<f64>;
pub type RegionPath = partition::RegionPath<f64>;
pub type RegionTree = tree::RegionTree<f64>;
pub type TreeNode = tree::TreeNode<f64>;
pub type CpSchedule = tree::CpSchedule<f64>;
pub type CmaesState = samplers::CmaesState<f64>;
pub type Problem = benchmarks::Problem<f64>;
pub type QuadraticFamily = benchmarks::QuadraticFamily<f64>;
