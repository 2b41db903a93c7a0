use super::ScoreParams;
use crate::{Result, Symbol};

/// A deterministic adaptive input strategy: the input at step `k` is a
/// function of the outputs `y^{k-1}` observed so far.
pub trait Strategy: Sync {
    /// Input at step `history.len() + 1`.
    fn input(&self, history: &[Symbol]) -> Symbol;

    /// Incremental evaluation for long horizons. The default replays
    /// [`input`](Self::input) on a growing history.
    fn cursor(&self) -> Box<dyn StrategyCursor + '_> {
        Box::new(Replay { strategy: self, history: Vec::new() })
    }
}

/// Step-by-step view of a strategy inside a closed loop.
pub trait StrategyCursor {
    fn next_input(&mut self) -> Symbol;
    fn observe(&mut self, y: Symbol);
}

struct Replay<'a, S: ?Sized> {
    strategy: &'a S,
    history: Vec<Symbol>,
}

impl<S: Strategy + ?Sized> StrategyCursor for Replay<'_, S> {
    fn next_input(&mut self) -> Symbol {
        self.strategy.input(&self.history)
    }

    fn observe(&mut self, y: Symbol) {
        self.history.push(y);
    }
}

/// Adapts a closure over the output history.
pub struct FnStrategy<F>(pub F);

impl<F> Strategy for FnStrategy<F>
where
    F: Fn(&[Symbol]) -> Symbol + Sync,
{
    fn input(&self, history: &[Symbol]) -> Symbol {
        (self.0)(history)
    }
}

/// Feeds `a` while the running score satisfies `|s| <= n mu`, then the
/// smallest symbol other than `a` for the remaining steps.
#[derive(Clone, Debug)]
pub struct ThresholdStrategy {
    n: usize,
    params: ScoreParams,
    other: Symbol,
}

impl ThresholdStrategy {
    pub fn new(n: usize, params: ScoreParams) -> Result<Self> {
        let other = params.other_input()?;
        Ok(Self { n, params, other })
    }

    pub fn params(&self) -> &ScoreParams {
        &self.params
    }

    #[inline]
    fn choose(&self, score: f64) -> Symbol {
        if !self.params.exceeds(score, self.n) {
            self.params.a
        } else {
            self.other
        }
    }
}

impl Strategy for ThresholdStrategy {
    fn input(&self, history: &[Symbol]) -> Symbol {
        let mut s = 0.0;
        for &y in history {
            let x = self.choose(s);
            s = self.params.advance(s, x, y);
        }
        self.choose(s)
    }

    fn cursor(&self) -> Box<dyn StrategyCursor + '_> {
        Box::new(ThresholdCursor { h: self, score: 0.0 })
    }
}

struct ThresholdCursor<'a> {
    h: &'a ThresholdStrategy,
    score: f64,
}

impl StrategyCursor for ThresholdCursor<'_> {
    fn next_input(&mut self) -> Symbol {
        self.h.choose(self.score)
    }

    fn observe(&mut self, y: Symbol) {
        let x = self.h.choose(self.score);
        self.score = self.h.params.advance(self.score, x, y);
    }
}
