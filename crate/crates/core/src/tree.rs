//! Region tree over the current archive, rebuilt from scratch every iteration.
//!
//! Nodes live in a breadth-first arena: index 0 is the root and children are
//! appended in the order they are created, so iterating `nodes()` visits the
//! tree in breadth-first order.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::dominance::SampleSet;
use crate::error::{Error, Result};
use crate::hypervolume::hv_exact;
use crate::partition::{is_splittable, RegionPath, SplitConfig};
use crate::scalar::Real;
use crate::svm::{Side, SvmModel};

#[derive(Clone, Debug)]
pub struct TreeNode<R> {
    pub samples: SampleSet<R>,
    /// Hypervolume of this node's samples against the problem reference point.
    pub hv: R,
    pub classifier: Option<Arc<SvmModel<R>>>,
    /// `[good, bad]` child indices.
    pub children: Option<[usize; 2]>,
    pub parent: Option<usize>,
    pub path: RegionPath<R>,
}

impl<R: Real> TreeNode<R> {
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn depth(&self) -> usize {
        self.path.depth()
    }
}

#[derive(Clone, Debug)]
pub struct RegionTree<R> {
    nodes: Vec<TreeNode<R>>,
}

/// Which node a selection step landed on, and the region it stands for.
#[derive(Clone, Debug)]
pub struct Selection<R> {
    pub node: usize,
    pub path: RegionPath<R>,
}

/// Leaf scoring for direct leaf selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafUcb {
    /// `v + 2·Cp·sqrt(2·ln(n_parent) / n_leaf)`, the same score as path descent.
    #[default]
    ParentLog,
    /// `v + 2·Cp·sqrt(2·ln(n_leaf) / n_parent)`, argument order swapped.
    LeafLog,
}

/// Builds the tree breadth-first, splitting every node that passes
/// [`is_splittable`].
pub fn build_tree<R: Real>(
    samples: &SampleSet<R>,
    bounds: Arc<Bounds<R>>,
    reference: &[R],
    cfg: &SplitConfig<R>,
) -> Result<RegionTree<R>> {
    if samples.is_empty() {
        return Err(Error::Empty("tree needs at least one sample"));
    }
    Error::check_dim(samples.n_obj(), reference.len())?;
    let mut nodes = vec![TreeNode {
        samples: samples.clone(),
        hv: node_hv(samples, reference)?,
        classifier: None,
        children: None,
        parent: None,
        path: RegionPath::root(bounds),
    }];
    let mut next = 0;
    while next < nodes.len() {
        let current = next;
        next += 1;
        let Some(model) = is_splittable(&nodes[current].samples, cfg) else {
            continue;
        };
        let model = Arc::new(model);
        let (good, bad): (Vec<usize>, Vec<usize>) = (0..nodes[current].n())
            .partition(|&i| model.predict(&nodes[current].samples.samples()[i].x) == Side::Good);
        let mut ids = [0; 2];
        for (slot, (side, idx)) in [(Side::Good, good), (Side::Bad, bad)].into_iter().enumerate() {
            let child_samples = nodes[current].samples.subset(&idx);
            let hv = node_hv(&child_samples, reference)?;
            let path = nodes[current].path.child(model.clone(), side);
            ids[slot] = nodes.len();
            nodes.push(TreeNode {
                samples: child_samples,
                hv,
                classifier: None,
                children: None,
                parent: Some(current),
                path,
            });
        }
        nodes[current].classifier = Some(model);
        nodes[current].children = Some(ids);
    }
    Ok(RegionTree { nodes })
}

fn node_hv<R: Real>(samples: &SampleSet<R>, reference: &[R]) -> Result<R> {
    hv_exact(&samples.objectives(), reference)
}

/// `child_hv + 2·cp·sqrt(2·ln(parent_n) / child_n)`; infinite for an empty child.
pub fn ucb<R: Real>(child_hv: R, child_n: usize, parent_n: usize, cp: R) -> R {
    if child_n == 0 {
        return R::infinity();
    }
    let two = R::of(2.0);
    let ratio = two * R::of(parent_n as f64).ln() / R::of(child_n as f64);
    child_hv + two * cp * ratio.max(R::zero()).sqrt()
}

impl<R: Real> RegionTree<R> {
    pub fn root(&self) -> &TreeNode<R> {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[TreeNode<R>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode<R> {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf indices in breadth-first order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    /// Descends from the root, taking the child with the larger UCB at every
    /// level. Ties go to the good child.
    pub fn select_path(&self, cp: R) -> Selection<R> {
        let mut k = 0;
        while let Some([good, bad]) = self.nodes[k].children {
            let parent_n = self.nodes[k].n();
            let score = |c: usize| ucb(self.nodes[c].hv, self.nodes[c].n(), parent_n, cp);
            k = if score(bad) > score(good) { bad } else { good };
        }
        self.selection(k)
    }

    /// Score of a leaf under direct leaf selection. A root-only tree uses the
    /// root's own count as the parent count.
    pub fn leaf_score(&self, leaf: usize, cp: R, formula: LeafUcb) -> R {
        let node = &self.nodes[leaf];
        let parent_n = node.parent.map_or(node.n(), |p| self.nodes[p].n());
        match formula {
            LeafUcb::ParentLog => ucb(node.hv, node.n(), parent_n, cp),
            LeafUcb::LeafLog => ucb(node.hv, parent_n, node.n(), cp),
        }
    }

    /// Picks the leaf with the largest score; ties go to the first leaf in
    /// breadth-first order.
    pub fn select_leaf_direct(&self, cp: R, formula: LeafUcb) -> Selection<R> {
        let mut best = 0;
        let mut best_score = R::neg_infinity();
        for leaf in self.leaves() {
            let s = self.leaf_score(leaf, cp, formula);
            if s > best_score {
                best = leaf;
                best_score = s;
            }
        }
        self.selection(best)
    }

    fn selection(&self, node: usize) -> Selection<R> {
        Selection {
            node,
            path: self.nodes[node].path.clone(),
        }
    }

    /// One line per node in breadth-first order: `depth n hv leaf`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            let _ = writeln!(
                out,
                "{} {} {:.10e} {}",
                node.depth(),
                node.n(),
                node.hv,
                if node.is_leaf() { "leaf" } else { "inner" }
            );
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpMode {
    Fixed,
    FractionOfMax,
    FractionOfCurrent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "R: Real + Deserialize<'de>"))]
pub struct CpSchedule<R> {
    pub mode: CpMode,
    pub value: R,
}

impl<R: Real> Default for CpSchedule<R> {
    fn default() -> Self {
        Self {
            mode: CpMode::FractionOfMax,
            value: R::of(0.1),
        }
    }
}

pub fn cp_value<R: Real>(schedule: &CpSchedule<R>, hv_max_known: Option<R>, hv_current: R) -> Result<R> {
    if !(schedule.value >= R::zero()) {
        return Err(Error::Config(format!("Cp value must be non-negative, got {}", schedule.value)));
    }
    match schedule.mode {
        CpMode::Fixed => Ok(schedule.value),
        CpMode::FractionOfMax => hv_max_known
            .map(|m| schedule.value * m)
            .ok_or_else(|| Error::Config("Cp as a fraction of max HV needs a known max HV".into())),
        CpMode::FractionOfCurrent => Ok(schedule.value * hv_current),
    }
}
