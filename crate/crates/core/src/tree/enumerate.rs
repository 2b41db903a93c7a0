use rayon::prelude::*;

use super::{increment, node_count, ScoreParams, StrategyTree};
use crate::channel::Alphabet;
use crate::{Error, Result, Symbol};

/// Largest number of trees an exhaustive search may visit.
pub const MAX_TREES: u128 = 1 << 26;

/// `|X|^{node count}`, saturating.
pub fn tree_count(depth: usize, inputs: Alphabet, outputs: Alphabet) -> u128 {
    let nodes = node_count(outputs.size(), depth);
    let mut total: u128 = 1;
    for _ in 0..nodes.min(128) {
        total = total.saturating_mul(inputs.size() as u128);
    }
    if nodes > 128 && inputs.size() > 1 {
        u128::MAX
    } else {
        total
    }
}

/// Every labeling of the depth-`n` tree, in lexicographic order of the
/// breadth-first label array.
#[derive(Clone, Debug)]
pub struct TreeEnumerator {
    depth: usize,
    inputs: Alphabet,
    outputs: Alphabet,
    next: Option<Vec<Symbol>>,
    remaining: u64,
}

impl TreeEnumerator {
    pub fn new(depth: usize, inputs: Alphabet, outputs: Alphabet) -> Result<Self> {
        let count = checked_count(depth, inputs, outputs)?;
        let nodes = node_count(outputs.size(), depth) as usize;
        Ok(Self { depth, inputs, outputs, next: Some(vec![0; nodes]), remaining: count })
    }

    /// The `index`-th tree in enumeration order.
    pub fn tree_at(&self, index: u64) -> Result<StrategyTree> {
        let nodes = node_count(self.outputs.size(), self.depth) as usize;
        let labels = labels_at(index, nodes, self.inputs.size());
        StrategyTree::from_labels(self.depth, self.inputs, self.outputs, labels)
    }
}

fn checked_count(depth: usize, inputs: Alphabet, outputs: Alphabet) -> Result<u64> {
    if depth == 0 {
        return Err(Error::ZeroDepth);
    }
    let count = tree_count(depth, inputs, outputs);
    if count > MAX_TREES {
        return Err(Error::EnumerationTooLarge(count));
    }
    Ok(count as u64)
}

fn labels_at(mut index: u64, nodes: usize, k: usize) -> Vec<Symbol> {
    let mut labels = vec![0; nodes];
    for slot in labels.iter_mut().rev() {
        *slot = (index % k as u64) as Symbol;
        index /= k as u64;
    }
    labels
}

impl Iterator for TreeEnumerator {
    type Item = StrategyTree;

    fn next(&mut self) -> Option<StrategyTree> {
        let labels = self.next.take()?;
        self.remaining -= 1;
        if self.remaining > 0 {
            let mut succ = labels.clone();
            increment(&mut succ, self.inputs.size());
            self.next = Some(succ);
        }
        Some(StrategyTree { depth: self.depth, inputs: self.inputs, outputs: self.outputs, labels })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}

impl ExactSizeIterator for TreeEnumerator {}

const CHUNK: u64 = 1024;

/// `max_T P(T)` over all depth-`n` trees, by brute force. Ties resolve to the
/// first tree in enumeration order.
pub fn exhaustive_max_success(n: usize, p: &ScoreParams) -> Result<(StrategyTree, f64)> {
    let (inputs, outputs) = (p.dmc.inputs(), p.dmc.outputs());
    let count = checked_count(n, inputs, outputs)?;
    let nodes = node_count(outputs.size(), n) as usize;
    // Leaf enumeration guard, checked once up front.
    StrategyTree::constant(n, inputs, outputs, 0)?.success_probability(p)?;

    let chunks = count.div_ceil(CHUNK);
    let (value, index) = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(f64, u64)> {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(count);
            let mut tree = StrategyTree { depth: n, inputs, outputs, labels: labels_at(start, nodes, inputs.size()) };
            let mut best = (f64::NEG_INFINITY, start);
            for i in start..end {
                let v = tree.success_probability(p)?;
                if v > best.0 {
                    best = (v, i);
                }
                increment(&mut tree.labels, inputs.size());
            }
            Ok(best)
        })
        .try_reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |x, y| Ok(if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
        )?;
    let tree = StrategyTree::from_labels(n, inputs, outputs, labels_at(index, nodes, inputs.size()))?;
    Ok((tree, value))
}
