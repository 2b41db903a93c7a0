//! Adaptive input strategies as labeled full `|Y|`-ary trees.
//!
//! A strategy of depth `n` assigns an input to every output history of length
//! `0..n`. The tree stores these inputs as node labels in breadth-first order:
//! the root (empty history) is node 0 and the child of node `v` along output
//! `y` is node `v * |Y| + y + 1`. Leaves are the output sequences `y^n` and
//! are never materialised.

mod enumerate;
mod strategy;
mod surgery;

use std::fmt;
use std::str::FromStr;

pub use enumerate::{exhaustive_max_success, tree_count, TreeEnumerator};
pub use strategy::{FnStrategy, Strategy, StrategyCursor, ThresholdStrategy};
pub use surgery::{
    augmented_subtree, expected_replacement_success, find_sites, replacement_realization, well_order, well_order_step,
    Subtree, SurgerySite, WellOrderTrace,
};

use crate::channel::{content_lines, parse_num, Alphabet, Dmc};
use crate::{Error, Result, Symbol, EXACT_TOL};

/// Largest number of nodes a tree may have, and largest number of leaves any
/// leaf enumeration may visit.
pub const MAX_NODES: u128 = 1 << 24;
pub const MAX_LEAVES: u128 = 1 << 24;

/// `(|Y|^n - 1) / (|Y| - 1)`, or `n` for a unary output alphabet.
pub fn node_count(outputs: usize, depth: usize) -> u128 {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..depth {
        total = total.saturating_add(level);
        level = level.saturating_mul(outputs as u128);
    }
    total
}

pub fn leaf_count(outputs: usize, depth: usize) -> u128 {
    (outputs as u128).saturating_pow(depth as u32)
}

/// Relative margin under which a score counts as equal to the threshold.
pub const SCORE_TIE_TOL: f64 = 1e-9;

/// The pair `(a, b)`, threshold `mu` and channel that define the score
/// `s_i = sum_l 1{x_l = a} (1{y_l = b} - P(b|a))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreParams {
    pub a: Symbol,
    pub b: Symbol,
    pub mu: f64,
    pub dmc: Dmc,
}

impl ScoreParams {
    pub fn new(dmc: Dmc, a: Symbol, b: Symbol, mu: f64) -> Result<Self> {
        dmc.inputs().check(a)?;
        dmc.outputs().check(b)?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::NonpositiveMu(mu));
        }
        Ok(Self { a, b, mu, dmc })
    }

    /// `P(b|a)`.
    pub fn p(&self) -> f64 {
        self.dmc.prob(self.a, self.b)
    }

    /// `n * mu`.
    pub fn threshold(&self, n: usize) -> f64 {
        n as f64 * self.mu
    }

    /// Score after one more step with input `x` and output `y`.
    ///
    /// Every score in the crate is accumulated through this function, in path
    /// order, so that comparisons against the threshold agree bit for bit
    /// between strategies, trees and the exhaustive search.
    #[inline]
    pub fn advance(&self, score: f64, x: Symbol, y: Symbol) -> f64 {
        if x == self.a {
            score + ((if y == self.b { 1.0 } else { 0.0 }) - self.p())
        } else {
            score
        }
    }

    /// Whether `|score| > n mu`.
    ///
    /// Scores are float sums of `1 - P(b|a)` and `-P(b|a)`, so a score that
    /// equals `n mu` in exact arithmetic can land a few ulps on either side.
    /// Such ties are resolved as "not above" by comparing with a margin of
    /// [`SCORE_TIE_TOL`] relative to the threshold.
    #[inline]
    pub fn exceeds(&self, score: f64, n: usize) -> bool {
        let t = self.threshold(n);
        score.abs() > t + SCORE_TIE_TOL * t.max(1.0)
    }

    /// Whether a final score counts as a success: `|s_n| > n mu`.
    #[inline]
    pub fn succeeds(&self, score: f64, n: usize) -> bool {
        self.exceeds(score, n)
    }

    /// The smallest input symbol other than `a`.
    pub fn other_input(&self) -> Result<Symbol> {
        if self.dmc.inputs().size() < 2 {
            return Err(Error::SingletonInputAlphabet);
        }
        Ok(if self.a == 0 { 1 } else { 0 })
    }
}

/// A labeled full `|Y|`-ary tree of depth `n` encoding a deterministic
/// adaptive strategy.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StrategyTree {
    depth: usize,
    inputs: Alphabet,
    outputs: Alphabet,
    labels: Vec<Symbol>,
}

impl StrategyTree {
    fn check_shape(depth: usize, outputs: Alphabet) -> Result<usize> {
        if depth == 0 {
            return Err(Error::ZeroDepth);
        }
        let nodes = node_count(outputs.size(), depth);
        if nodes > MAX_NODES {
            return Err(Error::DepthOverflow(nodes));
        }
        Ok(nodes as usize)
    }

    pub fn from_labels(depth: usize, inputs: Alphabet, outputs: Alphabet, labels: Vec<Symbol>) -> Result<Self> {
        let nodes = Self::check_shape(depth, outputs)?;
        if labels.len() != nodes {
            return Err(Error::ShapeMismatch(format!(
                "depth {depth} tree over {} outputs has {nodes} nodes, got {} labels",
                outputs.size(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| !inputs.contains(l)) {
            return Err(Error::LabelOutOfAlphabet { label: bad, size: inputs.size() });
        }
        Ok(Self { depth, inputs, outputs, labels })
    }

    /// The tree whose every node carries label `a`.
    pub fn constant(depth: usize, inputs: Alphabet, outputs: Alphabet, a: Symbol) -> Result<Self> {
        let nodes = Self::check_shape(depth, outputs)?;
        Self::from_labels(depth, inputs, outputs, vec![a; nodes])
    }

    /// Tabulates `h` on every history of length `< depth`.
    pub fn from_strategy<S: Strategy + ?Sized>(
        h: &S,
        depth: usize,
        inputs: Alphabet,
        outputs: Alphabet,
    ) -> Result<Self> {
        let nodes = Self::check_shape(depth, outputs)?;
        let mut labels = Vec::with_capacity(nodes);
        let mut history = vec![0; depth];
        for k in 0..depth {
            // histories of length k in lexicographic order = BFS order
            let count = outputs.size().pow(k as u32);
            history[..k].fill(0);
            for _ in 0..count {
                let x = h.input(&history[..k]);
                if !inputs.contains(x) {
                    return Err(Error::LabelOutOfAlphabet { label: x, size: inputs.size() });
                }
                labels.push(x);
                increment(&mut history[..k], outputs.size());
            }
        }
        Ok(Self { depth, inputs, outputs, labels })
    }

    /// The threshold strategy `h*`: input `a` while `|s_{k-1}| <= n mu`, the
    /// smallest other symbol afterwards.
    pub fn optimal(depth: usize, params: &ScoreParams) -> Result<Self> {
        let h = ThresholdStrategy::new(depth, params.clone())?;
        Self::from_strategy(&h, depth, params.dmc.inputs(), params.dmc.outputs())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn inputs(&self) -> Alphabet {
        self.inputs
    }

    pub fn outputs(&self) -> Alphabet {
        self.outputs
    }

    pub fn labels(&self) -> &[Symbol] {
        &self.labels
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn leaf_count(&self) -> u128 {
        leaf_count(self.outputs.size(), self.depth)
    }

    pub fn label(&self, node: usize) -> Symbol {
        self.labels[node]
    }

    #[inline]
    pub fn child(&self, node: usize, y: Symbol) -> usize {
        node * self.outputs.size() + y + 1
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        (node > 0).then(|| (node - 1) / self.outputs.size())
    }

    /// Depth of a node; the root has depth 0.
    pub fn node_depth(&self, node: usize) -> usize {
        let mut d = 0;
        let mut v = node;
        while let Some(p) = self.parent(v) {
            v = p;
            d += 1;
        }
        d
    }

    /// Output history leading from the root to `node`.
    pub fn path_to(&self, node: usize) -> Vec<Symbol> {
        let k = self.outputs.size();
        let mut path = Vec::new();
        let mut v = node;
        while v > 0 {
            path.push((v - 1) % k);
            v = (v - 1) / k;
        }
        path.reverse();
        path
    }

    /// Node reached by `path`, which must be shorter than the depth.
    pub fn node_at(&self, path: &[Symbol]) -> Result<usize> {
        if path.len() >= self.depth {
            return Err(Error::PathTooLong { len: path.len(), depth: self.depth - 1 });
        }
        let mut v = 0;
        for &y in path {
            self.outputs.check(y)?;
            v = self.child(v, y);
        }
        Ok(v)
    }

    /// Input chosen after observing `path`.
    pub fn input_at(&self, path: &[Symbol]) -> Result<Symbol> {
        Ok(self.labels[self.node_at(path)?])
    }

    fn check_params(&self, p: &ScoreParams) -> Result<()> {
        if p.dmc.inputs() != self.inputs || p.dmc.outputs() != self.outputs {
            return Err(Error::ShapeMismatch(format!(
                "tree over {}x{} alphabets, channel is {}x{}",
                self.inputs.size(),
                self.outputs.size(),
                p.dmc.inputs().size(),
                p.dmc.outputs().size()
            )));
        }
        Ok(())
    }

    /// `s_i(y^i)` along a partial output path of length `i <= n`.
    pub fn score(&self, ys: &[Symbol], p: &ScoreParams) -> Result<f64> {
        self.check_params(p)?;
        if ys.len() > self.depth {
            return Err(Error::PathTooLong { len: ys.len(), depth: self.depth });
        }
        let mut s = 0.0;
        let mut v = 0;
        for (i, &y) in ys.iter().enumerate() {
            self.outputs.check(y)?;
            s = p.advance(s, self.labels[v], y);
            if i + 1 < self.depth {
                v = self.child(v, y);
            }
        }
        Ok(s)
    }

    /// Visits every leaf `y^n` with its path probability and final score.
    pub fn for_each_leaf<F>(&self, p: &ScoreParams, mut f: F) -> Result<()>
    where
        F: FnMut(&[Symbol], f64, f64),
    {
        self.check_params(p)?;
        let leaves = self.leaf_count();
        if leaves > MAX_LEAVES {
            return Err(Error::DepthOverflow(leaves));
        }
        let mut path = vec![0; self.depth];
        self.visit(0, 0, 1.0, 0.0, p, &mut path, &mut f);
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn visit<F>(
        &self,
        node: usize,
        depth: usize,
        prob: f64,
        score: f64,
        p: &ScoreParams,
        path: &mut [Symbol],
        f: &mut F,
    ) where
        F: FnMut(&[Symbol], f64, f64),
    {
        let x = self.labels[node];
        for y in self.outputs.symbols() {
            path[depth] = y;
            let pr = prob * p.dmc.prob(x, y);
            let s = p.advance(score, x, y);
            if depth + 1 == self.depth {
                f(path, pr, s);
            } else {
                self.visit(self.child(node, y), depth + 1, pr, s, p, path, f);
            }
        }
    }

    /// The leaves with `|s_n| > n mu`.
    pub fn success_set(&self, p: &ScoreParams) -> Result<Vec<Vec<Symbol>>> {
        let mut out = Vec::new();
        self.for_each_leaf(p, |path, _, s| {
            if p.succeeds(s, self.depth) {
                out.push(path.to_vec());
            }
        })?;
        Ok(out)
    }

    /// `P(T)`: total probability of the success set under the tree's inputs.
    pub fn success_probability(&self, p: &ScoreParams) -> Result<f64> {
        let mut total = 0.0;
        self.for_each_leaf(p, |_, pr, s| {
            if p.succeeds(s, self.depth) {
                total += pr;
            }
        })?;
        Ok(total)
    }

    /// Sum of all leaf path probabilities; one up to rounding.
    pub fn total_probability(&self, p: &ScoreParams) -> Result<f64> {
        let mut total = 0.0;
        self.for_each_leaf(p, |_, pr, _| total += pr)?;
        Ok(total)
    }

    /// Success probability after checking that the leaf masses sum to one.
    pub fn checked_success_probability(&self, p: &ScoreParams) -> Result<f64> {
        let mut total = 0.0;
        let mut success = 0.0;
        self.for_each_leaf(p, |_, pr, s| {
            total += pr;
            if p.succeeds(s, self.depth) {
                success += pr;
            }
        })?;
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::SumNotOne(total - 1.0));
        }
        Ok(success)
    }

    /// True iff no node labeled other than `a` has a descendant labeled `a`.
    pub fn is_well_ordered(&self, a: Symbol) -> bool {
        // A node may carry `a` only if its parent does.
        (1..self.labels.len()).all(|v| self.labels[v] != a || self.labels[(v - 1) / self.outputs.size()] == a)
    }
}

/// Base-`k` odometer increment, last position fastest.
pub(crate) fn increment(digits: &mut [Symbol], k: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < k {
            return true;
        }
        *d = 0;
    }
    false
}

impl Strategy for StrategyTree {
    fn input(&self, history: &[Symbol]) -> Symbol {
        self.input_at(history).expect("history within the tree")
    }

    fn cursor(&self) -> Box<dyn StrategyCursor + '_> {
        Box::new(TreeCursor { tree: self, node: 0, depth: 0 })
    }
}

struct TreeCursor<'a> {
    tree: &'a StrategyTree,
    node: usize,
    depth: usize,
}

impl StrategyCursor for TreeCursor<'_> {
    fn next_input(&mut self) -> Symbol {
        self.tree.labels[self.node]
    }

    fn observe(&mut self, y: Symbol) {
        self.depth += 1;
        if self.depth < self.tree.depth {
            self.node = self.tree.child(self.node, y);
        }
    }
}

impl fmt::Display for StrategyTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tree {} {} {}", self.depth, self.inputs.size(), self.outputs.size())?;
        let labels: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        writeln!(f, "{}", labels.join(" "))
    }
}

impl FromStr for StrategyTree {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(0, "empty tree file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 4 || head[0] != "tree" {
            return Err(Error::parse(hl, "expected `tree n |X| |Y|`"));
        }
        let depth: usize = parse_num(hl, head[1])?;
        let inputs = Alphabet::new(parse_num(hl, head[2])?)?;
        let outputs = Alphabet::new(parse_num(hl, head[3])?)?;
        let (ll, body) = lines.next().ok_or_else(|| Error::parse(hl, "missing label line"))?;
        let labels = body.split_whitespace().map(|t| parse_num(ll, t)).collect::<Result<Vec<Symbol>>>()?;
        if let Some((extra, _)) = lines.next() {
            return Err(Error::parse(extra, "unexpected content after labels"));
        }
        Self::from_labels(depth, inputs, outputs, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn params(p: f64, a: Symbol, b: Symbol, mu: f64) -> ScoreParams {
        ScoreParams::new(Dmc::bsc(p).unwrap(), a, b, mu).unwrap()
    }

    #[test]
    fn node_counts() {
        assert_eq!(node_count(2, 3), 7);
        assert_eq!(node_count(3, 2), 4);
        assert_eq!(node_count(1, 5), 5);
        assert_eq!(leaf_count(3, 3), 27);
    }

    #[test]
    fn tabulates_ternary_output_strategy() {
        // h1 = 1; h2 = 0 if y1 in {0, 2}, else 1
        let h = FnStrategy(|hist: &[Symbol]| match hist {
            [] => 1,
            [1] => 1,
            _ => 0,
        });
        let t = StrategyTree::from_strategy(&h, 2, bin(), Alphabet::new(3).unwrap()).unwrap();
        assert_eq!(t.labels(), &[1, 0, 1, 0]);
    }

    #[test]
    fn constant_strategy() {
        let h = FnStrategy(|_: &[Symbol]| 1);
        let t = StrategyTree::from_strategy(&h, 3, bin(), bin()).unwrap();
        assert!(t.labels().iter().all(|&l| l == 1));
    }

    #[test]
    fn from_strategy_rejects_bad_label() {
        let h = FnStrategy(|_: &[Symbol]| 2);
        assert!(matches!(
            StrategyTree::from_strategy(&h, 2, bin(), bin()),
            Err(Error::LabelOutOfAlphabet { label: 2, size: 2 })
        ));
    }

    #[test]
    fn depth_overflow() {
        assert!(matches!(StrategyTree::constant(25, bin(), bin(), 0), Err(Error::DepthOverflow(_))));
        assert!(matches!(StrategyTree::constant(0, bin(), bin(), 0), Err(Error::ZeroDepth)));
    }

    #[test]
    fn navigation() {
        let t = StrategyTree::constant(3, bin(), Alphabet::new(3).unwrap(), 0).unwrap();
        assert_eq!(t.node_count(), 13);
        let v = t.node_at(&[2, 1]).unwrap();
        assert_eq!(v, t.child(t.child(0, 2), 1));
        assert_eq!(t.path_to(v), vec![2, 1]);
        assert_eq!(t.node_depth(v), 2);
        assert_eq!(t.parent(v), Some(3));
        assert!(t.node_at(&[0, 0, 0]).is_err());
    }

    #[test]
    fn score_examples() {
        let p = params(0.5, 0, 1, 0.1);
        let all_a = StrategyTree::constant(2, bin(), bin(), 0).unwrap();
        assert_eq!(all_a.score(&[1, 1], &p).unwrap(), 1.0);

        let no_a = StrategyTree::constant(3, bin(), bin(), 1).unwrap();
        assert_eq!(no_a.score(&[1, 0, 1], &p).unwrap(), 0.0);

        let p = params(0.3, 0, 1, 0.1);
        let all_a = StrategyTree::constant(3, bin(), bin(), 0).unwrap();
        let s = all_a.score(&[1, 0, 0], &p).unwrap();
        assert!((s - 0.1).abs() < 1e-15);
        assert!(matches!(all_a.score(&[1, 0, 0, 0], &p), Err(Error::PathTooLong { len: 4, depth: 3 })));
    }

    #[test]
    fn success_set_examples() {
        let p = params(0.5, 0, 1, 0.3);
        let t = StrategyTree::constant(1, bin(), bin(), 0).unwrap();
        assert_eq!(t.success_set(&p).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(t.success_probability(&p).unwrap(), 1.0);

        let p = params(0.5, 0, 1, 1.0);
        let t = StrategyTree::constant(3, bin(), bin(), 0).unwrap();
        assert!(t.success_set(&p).unwrap().is_empty());
        assert_eq!(t.success_probability(&p).unwrap(), 0.0);

        let p = params(0.2, 0, 1, 0.01);
        let t = StrategyTree::constant(3, bin(), bin(), 1).unwrap();
        assert!(t.success_set(&p).unwrap().is_empty());
    }

    #[test]
    fn total_probability_is_one() {
        let dmc = Dmc::new(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]]).unwrap();
        let p = ScoreParams::new(dmc, 1, 2, 0.2).unwrap();
        let t = StrategyTree::from_labels(2, bin(), Alphabet::new(3).unwrap(), vec![0, 1, 0, 1]).unwrap();
        assert!((t.total_probability(&p).unwrap() - 1.0).abs() < 1e-12);
        assert!(t.checked_success_probability(&p).is_ok());
    }

    #[test]
    fn optimal_tree_examples() {
        // n mu = 0.8; scores after one step are +-0.5
        let p = params(0.5, 0, 1, 0.4);
        let t = StrategyTree::optimal(2, &p).unwrap();
        assert_eq!(t.labels(), &[0, 0, 0]);

        let t = StrategyTree::optimal(1, &params(0.3, 1, 0, 0.9)).unwrap();
        assert_eq!(t.labels(), &[1]);

        // vanishing mu: root a, every later node already above threshold
        let t = StrategyTree::optimal(3, &params(0.3, 0, 1, 1e-9)).unwrap();
        assert_eq!(t.labels(), &[0, 1, 1, 1, 1, 1, 1]);
        assert!(t.is_well_ordered(0));

        let single = Dmc::new(vec![vec![0.5, 0.5]]).unwrap();
        let p = ScoreParams::new(single, 0, 0, 0.2).unwrap();
        assert!(matches!(StrategyTree::optimal(2, &p), Err(Error::SingletonInputAlphabet)));
    }

    #[test]
    fn exact_ties_are_not_successes() {
        // 3 * 0.6 rounds below 1.8; both scores equal n mu exactly
        let p = params(0.1, 0, 0, 0.6);
        assert!(!p.succeeds(-1.8, 3));
        let (_, best) = crate::tree::exhaustive_max_success(3, &p).unwrap();
        assert!((best - 0.001).abs() < 1e-15);

        let p = params(0.1, 0, 0, 0.15);
        let s = [0, 0, 0, 1].iter().fold(0.0, |s, &y| p.advance(s, 0, y));
        assert!((s + 0.6).abs() < 1e-12 && !p.succeeds(s, 4));
        let (_, best) = crate::tree::exhaustive_max_success(4, &p).unwrap();
        assert!((best - 0.271).abs() < 1e-12);
    }

    #[test]
    fn well_ordered_examples() {
        let all_a = StrategyTree::constant(3, bin(), bin(), 0).unwrap();
        assert!(all_a.is_well_ordered(0));
        let t = StrategyTree::from_labels(2, bin(), bin(), vec![1, 0, 1]).unwrap();
        assert!(!t.is_well_ordered(0));
        // a = 1: the root is 1 and the 1-labeled child hangs below it
        assert!(t.is_well_ordered(1));
        let t = StrategyTree::from_labels(2, bin(), bin(), vec![0, 1, 1]).unwrap();
        assert!(t.is_well_ordered(0));
    }

    #[test]
    fn text_format() {
        let t = StrategyTree::from_labels(2, bin(), Alphabet::new(3).unwrap(), vec![1, 0, 1, 0]).unwrap();
        let text = t.to_string();
        assert_eq!(text, "tree 2 2 3\n1 0 1 0\n");
        assert_eq!(text.parse::<StrategyTree>().unwrap(), t);
        assert!("tree 2 2 3\n1 0 1\n".parse::<StrategyTree>().is_err());
        assert!("tree 2 2 3\n1 0 1 2\n".parse::<StrategyTree>().is_err());
        assert!("tre 2 2 3\n1 0 1 0\n".parse::<StrategyTree>().is_err());
    }

    #[test]
    fn cursor_matches_labels() {
        let t = StrategyTree::from_labels(3, bin(), bin(), vec![0, 1, 0, 1, 1, 0, 0]).unwrap();
        for leaf in 0..8usize {
            let ys = [leaf >> 2 & 1, leaf >> 1 & 1, leaf & 1];
            let mut c = t.cursor();
            for k in 0..3 {
                assert_eq!(c.next_input(), t.input_at(&ys[..k]).unwrap());
                c.observe(ys[k]);
            }
        }
    }
}
