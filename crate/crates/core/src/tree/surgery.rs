//! Tree surgery that turns any labeling into a well-ordered one without
//! lowering its success probability.
//!
//! A surgery site is a node labeled `ã != a` whose ancestors are all labeled
//! `a` and which has an `a`-labeled node below it. For each output `y`, the
//! subtree `B_y` below the site's child along `y` is lifted one level up, its
//! leaves become `ã`-labeled nodes with fresh leaves, and the result replaces
//! the site's subtree. Averaging the success probability of these
//! realizations with weights `P(y|ã)` returns the success probability of the
//! original tree exactly, so the best realization is never worse.

use super::{ScoreParams, StrategyTree};
use crate::channel::Alphabet;
use crate::{Error, Result, Symbol, EXACT_TOL};

/// A full `|Y|`-ary labeled tree with `levels` levels of labeled nodes, in
/// breadth-first order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subtree {
    pub levels: usize,
    pub outputs: Alphabet,
    pub labels: Vec<Symbol>,
}

impl Subtree {
    /// Number of leaves below the deepest labeled level.
    pub fn leaf_count(&self) -> usize {
        self.outputs.size().pow(self.levels as u32)
    }

    /// Labels of level `j`, in path order.
    pub fn level(&self, j: usize) -> &[Symbol] {
        let k = self.outputs.size();
        let start: usize = (0..j).map(|i| k.pow(i as u32)).sum();
        &self.labels[start..start + k.pow(j as u32)]
    }
}

/// First node of each level of the subtree rooted at `root`, paired with the
/// level width.
fn level_ranges(tree: &StrategyTree, root: usize) -> Vec<(usize, usize)> {
    let levels = tree.depth - tree.node_depth(root);
    let k = tree.outputs.size();
    let mut out = Vec::with_capacity(levels);
    let (mut first, mut width) = (root, 1);
    for _ in 0..levels {
        out.push((first, width));
        first = tree.child(first, 0);
        width *= k;
    }
    out
}

fn subtree_of(tree: &StrategyTree, root: usize) -> Subtree {
    let ranges = level_ranges(tree, root);
    let labels = ranges.iter().flat_map(|&(first, width)| tree.labels[first..first + width].iter().copied()).collect();
    Subtree { levels: ranges.len(), outputs: tree.outputs, labels }
}

/// A validated surgery site within a tree.
#[derive(Clone, Debug)]
pub struct SurgerySite<'t> {
    tree: &'t StrategyTree,
    node: usize,
    depth: usize,
    a: Symbol,
}

impl<'t> SurgerySite<'t> {
    pub fn new(tree: &'t StrategyTree, node: usize, a: Symbol) -> Result<Self> {
        if node >= tree.node_count() {
            return Err(Error::InvalidSite(format!("no node {node}")));
        }
        if tree.label(node) == a {
            return Err(Error::InvalidSite(format!("node {node} is labeled a")));
        }
        let mut v = node;
        while let Some(p) = tree.parent(v) {
            if tree.label(p) != a {
                return Err(Error::InvalidSite(format!("ancestor {p} of {node} is not labeled a")));
            }
            v = p;
        }
        let below = level_ranges(tree, node);
        let has_a = below[1..].iter().any(|&(first, width)| tree.labels[first..first + width].contains(&a));
        if !has_a {
            return Err(Error::InvalidSite(format!("node {node} has no descendant labeled a")));
        }
        Ok(Self { tree, node, depth: tree.node_depth(node), a })
    }

    pub fn tree(&self) -> &'t StrategyTree {
        self.tree
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The site's label `ã`.
    pub fn label(&self) -> Symbol {
        self.tree.label(self.node)
    }

    /// Whether some child (not just some descendant) is labeled `a`.
    pub fn has_a_child(&self) -> bool {
        self.tree.outputs.symbols().any(|y| self.tree.label(self.tree.child(self.node, y)) == self.a)
    }
}

/// Every surgery site for `a`, in breadth-first order.
pub fn find_sites(tree: &StrategyTree, a: Symbol) -> Vec<usize> {
    let n = tree.node_count();
    let k = tree.outputs.size();
    // a_path[v]: v and all its ancestors are labeled a
    let mut a_path = vec![false; n];
    // a_below[v]: some strict descendant of v is labeled a
    let mut a_below = vec![false; n];
    for v in 0..n {
        let parent_ok = tree.parent(v).is_none_or(|p| a_path[p]);
        a_path[v] = parent_ok && tree.labels[v] == a;
    }
    for v in (1..n).rev() {
        let p = (v - 1) / k;
        if tree.labels[v] == a || a_below[v] {
            a_below[p] = true;
        }
    }
    (0..n).filter(|&v| tree.labels[v] != a && a_below[v] && tree.parent(v).is_none_or(|p| a_path[p])).collect()
}

/// `B_y` lifted by one level: its leaves become `ã`-labeled nodes, each with
/// a full set of fresh leaves.
pub fn augmented_subtree(site: &SurgerySite<'_>, y: Symbol) -> Result<Subtree> {
    let tree = site.tree;
    tree.outputs.check(y)?;
    let mut b = subtree_of(tree, tree.child(site.node, y));
    let leaves = b.leaf_count();
    b.labels.extend(std::iter::repeat_n(site.label(), leaves));
    b.levels += 1;
    Ok(b)
}

/// The realization `A_y`: the tree with the site's subtree replaced by the
/// augmented `B_y`.
pub fn replacement_realization(site: &SurgerySite<'_>, y: Symbol) -> Result<StrategyTree> {
    let aug = augmented_subtree(site, y)?;
    let mut out = site.tree.clone();
    for (j, &(first, width)) in level_ranges(site.tree, site.node).iter().enumerate() {
        out.labels[first..first + width].copy_from_slice(aug.level(j));
    }
    Ok(out)
}

/// `sum_y P(y|ã) P(A_y)`.
pub fn expected_replacement_success(site: &SurgerySite<'_>, p: &ScoreParams) -> Result<f64> {
    let at = site.label();
    let mut total = 0.0;
    for y in site.tree.outputs.symbols() {
        let w = p.dmc.prob(at, y);
        total += w * replacement_realization(site, y)?.success_probability(p)?;
    }
    Ok(total)
}

/// One surgery at the first site in breadth-first order, keeping the best
/// realization (smallest `y` on ties).
pub fn well_order_step(tree: &StrategyTree, p: &ScoreParams) -> Result<StrategyTree> {
    let node = *find_sites(tree, p.a).first().ok_or(Error::AlreadyWellOrdered)?;
    let site = SurgerySite::new(tree, node, p.a)?;
    let mut best: Option<(f64, StrategyTree)> = None;
    for y in tree.outputs.symbols() {
        let cand = replacement_realization(&site, y)?;
        let v = cand.success_probability(p)?;
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, cand));
        }
    }
    let (v, out) = best.expect("nonempty output alphabet");
    if cfg!(debug_assertions) {
        let before = tree.success_probability(p)?;
        assert!(v >= before - EXACT_TOL, "surgery lowered success: {before} -> {v}");
    }
    Ok(out)
}

/// The sequence of success probabilities visited by repeated surgery.
#[derive(Clone, Debug)]
pub struct WellOrderTrace {
    /// `P(T_0), P(T_1), ..`; one more entry than surgeries performed.
    pub probabilities: Vec<f64>,
    pub tree: StrategyTree,
}

impl WellOrderTrace {
    pub fn steps(&self) -> usize {
        self.probabilities.len() - 1
    }

    /// Largest decrease between consecutive trees (0 when monotone).
    pub fn max_drop(&self) -> f64 {
        self.probabilities.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

/// Applies [`well_order_step`] until the tree is well-ordered, giving up
/// after `max_steps` surgeries.
pub fn well_order(tree: &StrategyTree, p: &ScoreParams, max_steps: usize) -> Result<WellOrderTrace> {
    let mut current = tree.clone();
    let mut probabilities = vec![current.success_probability(p)?];
    while !current.is_well_ordered(p.a) {
        if probabilities.len() > max_steps {
            return Err(Error::InvalidParams(format!("well-ordering did not finish within {max_steps} steps")));
        }
        current = well_order_step(&current, p)?;
        probabilities.push(current.success_probability(p)?);
    }
    Ok(WellOrderTrace { probabilities, tree: current })
}
