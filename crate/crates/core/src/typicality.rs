//! Deviation probabilities of the score process and the `1/(4 n mu^2)` bound.
//!
//! For a pair `(a, b)` the final score `S_n = N_ab - N_a P(b|a)` equals `n`
//! times the gap between the joint type at `(a, b)` and the input type at `a`
//! scaled by `P(b|a)`. The event `|S_n| > n mu` is the deviation event, and
//! its probability is bounded by `1/(4 n mu^2)` for every adaptive strategy.

use std::fmt;

use rayon::prelude::*;

use crate::rng::RngStream;
use crate::stats::{wilson_interval, Z95};
use crate::tree::{exhaustive_max_success, leaf_count, ScoreParams, Strategy, StrategyTree};
use crate::{Error, Result, Symbol, EXACT_TOL};

/// Minimum number of Monte Carlo trials.
pub const MIN_TRIALS: u64 = 1000;

/// Largest `|Y|^n` the martingale check will enumerate.
pub const MAX_HISTORIES: u128 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ExactEnumeration,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ExactEnumeration => "exact",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationReport {
    pub n: usize,
    pub mu: f64,
    pub a: Symbol,
    pub b: Symbol,
    /// Exact probability or Monte Carlo estimate.
    pub value: f64,
    pub bound: f64,
    /// `bound - value`.
    pub margin: f64,
    pub method: Method,
    /// 95% Wilson interval; degenerate at `value` for exact reports.
    pub ci: (f64, f64),
    pub ci_halfwidth: f64,
    /// Zero for exact reports.
    pub trials: u64,
    pub successes: u64,
}

impl DeviationReport {
    /// Exact: `value <= bound` up to rounding. Monte Carlo: the upper end of
    /// the confidence interval is within the bound.
    pub fn passes(&self) -> bool {
        match self.method {
            Method::ExactEnumeration => self.value <= self.bound + EXACT_TOL,
            Method::MonteCarlo => self.ci.1 <= self.bound,
        }
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveMu(mu))
    }
}

/// `1 / (4 n mu^2)`.
pub fn lemma1_bound(n: usize, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    if n == 0 {
        return Err(Error::ZeroDepth);
    }
    Ok(1.0 / (4.0 * n as f64 * mu * mu))
}

/// `p (1 - p) / (n mu^2)` with `p = P(b|a)`: the variance bound before
/// `p (1 - p)` is replaced by its maximum `1/4`.
pub fn kolmogorov_rhs(n: usize, mu: f64, p: &ScoreParams) -> Result<f64> {
    let bound = lemma1_bound(n, mu)?;
    let q = p.p();
    let rhs = q * (1.0 - q) / (n as f64 * mu * mu);
    assert!(rhs <= bound * (1.0 + 1e-15), "p(1-p) exceeded 1/4");
    Ok(rhs)
}

/// Maximum deviation probability over all depth-`n` strategies, by brute
/// force, checked against the bound.
pub fn verify_lemma1_exhaustive(n: usize, p: &ScoreParams) -> Result<(DeviationReport, StrategyTree)> {
    let bound = lemma1_bound(n, p.mu)?;
    let (tree, value) = exhaustive_max_success(n, p)?;
    if value > bound + EXACT_TOL {
        return Err(Error::BoundViolated { value, bound });
    }
    let report = DeviationReport {
        n,
        mu: p.mu,
        a: p.a,
        b: p.b,
        value,
        bound,
        margin: bound - value,
        method: Method::ExactEnumeration,
        ci: (value, value),
        ci_halfwidth: 0.0,
        trials: 0,
        successes: 0,
    };
    Ok((report, tree))
}

/// Exact deviation probability of one tree, as a report.
pub fn exact_deviation(tree: &StrategyTree, p: &ScoreParams) -> Result<DeviationReport> {
    let n = tree.depth();
    let bound = lemma1_bound(n, p.mu)?;
    let value = tree.checked_success_probability(p)?;
    Ok(DeviationReport {
        n,
        mu: p.mu,
        a: p.a,
        b: p.b,
        value,
        bound,
        margin: bound - value,
        method: Method::ExactEnumeration,
        ci: (value, value),
        ci_halfwidth: 0.0,
        trials: 0,
        successes: 0,
    })
}

/// Final score of one closed-loop run of `h` over `n` channel uses.
///
/// Trial `t` draws from stream `(seed, t)`, one uniform per channel use.
pub fn simulate_score(h: &dyn Strategy, n: usize, p: &ScoreParams, seed: u64, trial: u64) -> Result<f64> {
    let inputs = p.dmc.inputs();
    let mut rng = RngStream::new(seed, trial);
    let mut cursor = h.cursor();
    let mut s = 0.0;
    for _ in 0..n {
        let x = inputs.check(cursor.next_input())?;
        let y = p.dmc.row(x).sample(&mut rng);
        s = p.advance(s, x, y);
        cursor.observe(y);
    }
    Ok(s)
}

/// Monte Carlo estimate of `P(|S_n| > n mu)` under strategy `h`.
///
/// The result depends only on `(seed, trials)`, not on the thread count.
pub fn monte_carlo_deviation(
    h: &dyn Strategy,
    n: usize,
    p: &ScoreParams,
    trials: u64,
    seed: u64,
) -> Result<DeviationReport> {
    if trials < MIN_TRIALS {
        return Err(Error::TooFewTrials { what: "monte carlo deviation", min: MIN_TRIALS, got: trials });
    }
    let bound = lemma1_bound(n, p.mu)?;
    let successes = (0..trials)
        .into_par_iter()
        .map(|t| simulate_score(h, n, p, seed, t).map(|s| u64::from(p.succeeds(s, n))))
        .try_reduce(|| 0, |x, y| Ok(x + y))?;
    let value = successes as f64 / trials as f64;
    let ci = wilson_interval(successes, trials, Z95);
    Ok(DeviationReport {
        n,
        mu: p.mu,
        a: p.a,
        b: p.b,
        value,
        bound,
        margin: bound - value,
        method: Method::MonteCarlo,
        ci,
        ci_halfwidth: (ci.1 - ci.0) / 2.0,
        trials,
        successes,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleReport {
    pub n: usize,
    /// Max over histories `y^{k-1}`, `k <= n`, of `|E[S_k - S_{k-1} | y^{k-1}]|`.
    pub max_abs_step_bias: f64,
    /// Number of histories examined.
    pub histories: u64,
}

impl MartingaleReport {
    pub fn passes(&self) -> bool {
        self.max_abs_step_bias <= EXACT_TOL
    }
}

/// Exact conditional mean of every score increment under `h`.
pub fn martingale_check(h: &dyn Strategy, n: usize, p: &ScoreParams) -> Result<MartingaleReport> {
    if n == 0 {
        return Err(Error::ZeroDepth);
    }
    let outputs = p.dmc.outputs().size();
    let leaves = leaf_count(outputs, n);
    if leaves > MAX_HISTORIES {
        return Err(Error::DepthOverflow(leaves));
    }
    let inputs = p.dmc.inputs();
    let q = p.p();
    let mut max_bias: f64 = 0.0;
    let mut histories = 0u64;
    let mut history = Vec::with_capacity(n);
    for k in 0..n {
        history.clear();
        history.resize(k, 0);
        loop {
            histories += 1;
            let x = inputs.check(h.input(&history))?;
            if x == p.a {
                let bias: f64 = p
                    .dmc
                    .row(x)
                    .weights()
                    .iter()
                    .enumerate()
                    .map(|(y, &w)| w * (if y == p.b { 1.0 } else { 0.0 } - q))
                    .sum();
                max_bias = max_bias.max(bias.abs());
            }
            if !crate::tree::increment(&mut history, outputs) {
                break;
            }
        }
    }
    Ok(MartingaleReport { n, max_abs_step_bias: max_bias, histories })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Alphabet, Dmc};
    use crate::tree::{FnStrategy, ThresholdStrategy};

    fn params(p: f64, mu: f64) -> ScoreParams {
        ScoreParams::new(Dmc::bsc(p).unwrap(), 0, 1, mu).unwrap()
    }

    #[test]
    fn bound_examples() {
        assert!((lemma1_bound(100, 0.1).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(lemma1_bound(1, 0.5).unwrap(), 1.0);
        assert!((lemma1_bound(10_000, 0.1).unwrap() - 0.0025).abs() < 1e-15);
        assert!(matches!(lemma1_bound(3, 0.0), Err(Error::NonpositiveMu(_))));
        assert!(matches!(lemma1_bound(3, -1.0), Err(Error::NonpositiveMu(_))));
    }

    #[test]
    fn kolmogorov_examples() {
        let half = kolmogorov_rhs(7, 0.3, &params(0.5, 0.3)).unwrap();
        assert!((half - lemma1_bound(7, 0.3).unwrap()).abs() < 1e-15);
        assert_eq!(kolmogorov_rhs(7, 0.3, &params(0.0, 0.3)).unwrap(), 0.0);
        assert_eq!(kolmogorov_rhs(7, 0.3, &params(1.0, 0.3)).unwrap(), 0.0);
        assert!((kolmogorov_rhs(100, 0.1, &params(0.3, 0.1)).unwrap() - 0.21).abs() < 1e-12);
        for i in 0..=100 {
            let q = i as f64 / 100.0;
            let rhs = kolmogorov_rhs(5, 0.2, &params(q, 0.2)).unwrap();
            assert!(rhs <= lemma1_bound(5, 0.2).unwrap());
        }
    }

    #[test]
    fn exhaustive_examples() {
        let (r, _) = verify_lemma1_exhaustive(3, &params(0.3, 0.5)).unwrap();
        assert!((r.bound - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.value - 0.027).abs() < 1e-12);
        assert!(r.passes());

        let (r, _) = verify_lemma1_exhaustive(3, &params(0.3, 1.0)).unwrap();
        assert_eq!(r.value, 0.0);

        let (r, _) = verify_lemma1_exhaustive(4, &params(0.5, 0.3)).unwrap();
        assert!((r.bound - 1.0 / 0.36 / 4.0).abs() < 1e-12);
        assert!((r.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn deterministic_channel_never_deviates() {
        let p = ScoreParams::new(Dmc::bsc(0.0).unwrap(), 0, 1, 0.1).unwrap();
        let h = FnStrategy(|_: &[Symbol]| 0);
        let r = monte_carlo_deviation(&h, 50, &p, 1000, 9).unwrap();
        assert_eq!(r.successes, 0);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn too_few_trials() {
        let p = params(0.3, 0.2);
        let h = FnStrategy(|_: &[Symbol]| 0);
        assert!(matches!(monte_carlo_deviation(&h, 3, &p, 999, 0), Err(Error::TooFewTrials { .. })));
    }

    #[test]
    fn monte_carlo_matches_exact_small_n() {
        let p = params(0.3, 0.25);
        let h = ThresholdStrategy::new(3, p.clone()).unwrap();
        let exact = StrategyTree::optimal(3, &p).unwrap().success_probability(&p).unwrap();
        let r = monte_carlo_deviation(&h, 3, &p, 100_000, 1).unwrap();
        assert!(r.ci.0 <= exact && exact <= r.ci.1, "{exact} outside {:?}", r.ci);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let p = params(0.3, 0.2);
        let h = ThresholdStrategy::new(20, p.clone()).unwrap();
        let a = monte_carlo_deviation(&h, 20, &p, 2000, 5).unwrap();
        let b = monte_carlo_deviation(&h, 20, &p, 2000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn martingale_all_a_and_mixed() {
        let p = params(0.3, 0.2);
        let all_a = StrategyTree::constant(4, Alphabet::new(2).unwrap(), Alphabet::new(2).unwrap(), 0).unwrap();
        let r = martingale_check(&all_a, 4, &p).unwrap();
        assert_eq!(r.histories, 15);
        assert!(r.passes());
        // increments 0.7 w.p. 0.3 and -0.3 w.p. 0.7
        assert!((0.3 * 0.7 + 0.7 * -0.3_f64).abs() < 1e-15);

        let none = FnStrategy(|_: &[Symbol]| 1);
        assert_eq!(martingale_check(&none, 3, &p).unwrap().max_abs_step_bias, 0.0);
    }

    #[test]
    fn martingale_guard() {
        let p = params(0.3, 0.2);
        let h = FnStrategy(|_: &[Symbol]| 0);
        assert!(matches!(martingale_check(&h, 21, &p), Err(Error::DepthOverflow(_))));
    }
}
