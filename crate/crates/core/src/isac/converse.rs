//! Finite-blocklength pieces of the converse argument: the set of messages
//! that are decoded and estimated well often enough, and the probability of
//! the set of state/output sequences on which decoding succeeds, distortion
//! stays within the cap and every `(x, s, y)` type stays close to its mean.

use rayon::prelude::*;

use super::code::transmit_once;
use super::{DistortionFn, IsacCode};
use crate::channel::{Pmf, Sdmc};
use crate::tree::SCORE_TIE_TOL;
use crate::typicality::lemma1_bound;
use crate::{Error, Result, Symbol, EXACT_TOL};

/// Largest `(|S| |Y|)^n` an exact enumeration will visit.
pub const MAX_PAIRS: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct ConverseParams {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    /// The distortion cap `D`.
    pub max_distortion: f64,
}

impl ConverseParams {
    pub fn new(n: usize, eps: f64, delta: f64, eta: f64, max_distortion: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if n == 0 {
            return Err(Error::ZeroDepth);
        }
        if !(eps >= 0.0 && delta >= 0.0 && eps + delta < 1.0) {
            return bad(format!("need eps, delta >= 0 and eps + delta < 1, got {eps}, {delta}"));
        }
        if !(eta > 0.0 && eta < 1.0 - eps - delta) {
            return bad(format!("need 0 < eta < 1 - eps - delta, got {eta}"));
        }
        if !(max_distortion >= 0.0 && max_distortion.is_finite()) {
            return bad(format!("distortion cap must be nonnegative, got {max_distortion}"));
        }
        Ok(Self { n, eps, delta, eta, max_distortion })
    }

    /// `n^{-1/4}`.
    pub fn mu(&self) -> f64 {
        (self.n as f64).powf(-0.25)
    }

    /// `eta - |X||Y||S| / (4 n mu^2)`.
    pub fn delta_lower_bound(&self, sdmc: &Sdmc) -> f64 {
        let cells = (sdmc.inputs().size() * sdmc.states().size() * sdmc.outputs().size()) as f64;
        self.eta - cells / (4.0 * self.n as f64 * self.mu() * self.mu())
    }
}

/// Exact conditional probabilities for one message.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageAnalysis {
    pub m: Symbol,
    /// `P(M_hat != m | M = m)`.
    pub p_error: f64,
    /// `P(dist^n > D | M = m)`.
    pub p_excess: f64,
    /// `P(M_hat != m or dist^n > D | M = m)`.
    pub p_fail: f64,
    /// Mass of the pairs `(s^n, y^n)` that decode correctly, meet the cap and
    /// keep every triple deviation within `mu`.
    pub delta: f64,
    /// `P(|pi(a,b,c) - pi(a) P_S(b) P(c|a,b)| > mu | M = m)`, indexed
    /// `(a * |S| + b) * |Y| + c`.
    pub triple_deviation: Vec<f64>,
    /// `1 / (4 n mu^2)`.
    pub triple_bound: f64,
}

impl MessageAnalysis {
    pub fn triples_within_bound(&self) -> bool {
        self.triple_deviation.iter().all(|&p| p <= self.triple_bound + EXACT_TOL)
    }

    pub fn max_triple_deviation(&self) -> f64 {
        self.triple_deviation.iter().cloned().fold(0.0, f64::max)
    }
}

fn check_inputs(code: &IsacCode, sdmc: &Sdmc, ps: &Pmf, cp: &ConverseParams) -> Result<()> {
    code.check_channel(sdmc)?;
    if ps.len() != sdmc.states().size() {
        return Err(Error::ShapeMismatch("state pmf does not match channel".into()));
    }
    if cp.n != code.n() {
        return Err(Error::InvalidParams(format!("parameters are for n = {}, code has n = {}", cp.n, code.n())));
    }
    Ok(())
}

struct Walk<'a> {
    code: &'a IsacCode,
    sdmc: &'a Sdmc,
    ps: &'a Pmf,
    d: &'a DistortionFn,
    est: super::PerLetterEstimator,
    m: Symbol,
    mu: f64,
    cap: f64,
    xs: Vec<Symbol>,
    ys: Vec<Symbol>,
    x_counts: Vec<u32>,
    triple_counts: Vec<u32>,
    out: MessageAnalysis,
}

impl Walk<'_> {
    fn visit(&mut self, prob: f64, dist: f64) {
        let i = self.ys.len();
        if i == self.code.n() {
            self.leaf(prob, dist);
            return;
        }
        let (ns, ny) = (self.sdmc.states().size(), self.sdmc.outputs().size());
        let x = self.code.encode(self.m, &self.ys);
        self.xs.push(x);
        self.x_counts[x] += 1;
        for s in 0..ns {
            for y in 0..ny {
                let pr = prob * self.ps.prob(s) * self.sdmc.prob(x, s, y);
                let t = (x * ns + s) * ny + y;
                self.triple_counts[t] += 1;
                self.ys.push(y);
                let step = self.d.get(self.est.estimate(x, y), s);
                self.visit(pr, dist + step);
                self.ys.pop();
                self.triple_counts[t] -= 1;
            }
        }
        self.x_counts[x] -= 1;
        self.xs.pop();
    }

    fn leaf(&mut self, prob: f64, dist: f64) {
        let n = self.code.n() as f64;
        let err = self.code.decode(&self.ys) != self.m;
        let excess = super::exceeds_cap(dist / n, self.cap);
        if err {
            self.out.p_error += prob;
        }
        if excess {
            self.out.p_excess += prob;
        }
        if err || excess {
            self.out.p_fail += prob;
        }
        let (ns, ny) = (self.sdmc.states().size(), self.sdmc.outputs().size());
        let mut worst: f64 = 0.0;
        for a in 0..self.sdmc.inputs().size() {
            let pa = self.x_counts[a] as f64 / n;
            for b in 0..ns {
                for c in 0..ny {
                    let t = (a * ns + b) * ny + c;
                    let dev = (self.triple_counts[t] as f64 / n - pa * self.ps.prob(b) * self.sdmc.prob(a, b, c)).abs();
                    // same tie rule as the score threshold
                    if dev > self.mu * (1.0 + SCORE_TIE_TOL) {
                        self.out.triple_deviation[t] += prob;
                    }
                    worst = worst.max(dev);
                }
            }
        }
        if !err && !excess && worst <= self.mu * (1.0 + SCORE_TIE_TOL) {
            self.out.delta += prob;
        }
    }
}

/// Exact analysis of message `m` by enumerating every `(s^n, y^n)`.
pub fn analyze_message(
    code: &IsacCode,
    sdmc: &Sdmc,
    ps: &Pmf,
    d: &DistortionFn,
    m: Symbol,
    cp: &ConverseParams,
) -> Result<MessageAnalysis> {
    check_inputs(code, sdmc, ps, cp)?;
    if m >= code.messages() {
        return Err(Error::InvalidParams(format!("message {m} out of range 0..{}", code.messages())));
    }
    let pairs =
        ((sdmc.states().size() * sdmc.outputs().size()) as u128).checked_pow(code.n() as u32).unwrap_or(u128::MAX);
    if pairs > MAX_PAIRS {
        return Err(Error::EnumerationTooLarge(pairs));
    }
    let cells = sdmc.inputs().size() * sdmc.states().size() * sdmc.outputs().size();
    let mut walk = Walk {
        code,
        sdmc,
        ps,
        d,
        est: code.estimator(sdmc, ps, d)?,
        m,
        mu: cp.mu(),
        cap: cp.max_distortion,
        xs: Vec::with_capacity(code.n()),
        ys: Vec::with_capacity(code.n()),
        x_counts: vec![0; sdmc.inputs().size()],
        triple_counts: vec![0; cells],
        out: MessageAnalysis {
            m,
            p_error: 0.0,
            p_excess: 0.0,
            p_fail: 0.0,
            delta: 0.0,
            triple_deviation: vec![0.0; cells],
            triple_bound: lemma1_bound(code.n(), cp.mu())?,
        },
    };
    walk.visit(1.0, 0.0);
    Ok(walk.out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    /// Per message, `trials` transmissions; message `m`, trial `t` uses
    /// stream `(seed, m * trials + t)`.
    MonteCarlo {
        trials: u64,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoodMessageSet {
    /// Messages whose failure probability is at most `1 - eta`.
    pub messages: Vec<Symbol>,
    /// Failure probability (or estimate) of every message.
    pub failures: Vec<f64>,
    pub p_e: f64,
    pub p_d: f64,
    /// `1 - (P_e + P_D) / (1 - eta)`.
    pub gamma: f64,
    /// `|M~| / floor(2^{nR})`.
    pub fraction: f64,
}

impl GoodMessageSet {
    pub fn satisfies_markov(&self) -> bool {
        self.fraction >= self.gamma - EXACT_TOL
    }
}

/// The messages that fail with probability at most `1 - eta`, and the
/// Markov lower bound on their share. In exact mode a share below the bound
/// is reported as [`Error::BoundViolated`].
pub fn build_good_message_set(
    code: &IsacCode,
    sdmc: &Sdmc,
    ps: &Pmf,
    d: &DistortionFn,
    cp: &ConverseParams,
    mode: Mode,
) -> Result<GoodMessageSet> {
    check_inputs(code, sdmc, ps, cp)?;
    let count = code.messages();
    let per_message: Vec<(f64, f64, f64)> = match mode {
        Mode::Exact => (0..count)
            .into_par_iter()
            .map(|m| analyze_message(code, sdmc, ps, d, m, cp).map(|a| (a.p_error, a.p_excess, a.p_fail)))
            .collect::<Result<_>>()?,
        Mode::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return Err(Error::TooFewTrials { what: "good message set", min: 1, got: 0 });
            }
            let est = code.estimator(sdmc, ps, d)?;
            (0..count)
                .into_par_iter()
                .map(|m| {
                    let (mut e, mut x, mut f) = (0u64, 0u64, 0u64);
                    for t in 0..trials {
                        let stream = m as u64 * trials + t;
                        let (err, exc) = transmit_once(code, sdmc, ps, d, &est, m, cp.max_distortion, seed, stream);
                        e += u64::from(err);
                        x += u64::from(exc);
                        f += u64::from(err || exc);
                    }
                    let t = trials as f64;
                    (e as f64 / t, x as f64 / t, f as f64 / t)
                })
                .collect()
        }
    };
    let set = collect_good(&per_message, cp.eta);
    if mode == Mode::Exact && !set.satisfies_markov() {
        return Err(Error::BoundViolated { value: set.fraction, bound: set.gamma });
    }
    Ok(set)
}

/// The good message set of exactly analysed messages (indexed by message),
/// without the Markov check.
pub fn good_message_set_from(analyses: &[MessageAnalysis], eta: f64) -> GoodMessageSet {
    let per_message: Vec<_> = analyses.iter().map(|a| (a.p_error, a.p_excess, a.p_fail)).collect();
    collect_good(&per_message, eta)
}

fn collect_good(per_message: &[(f64, f64, f64)], eta: f64) -> GoodMessageSet {
    let count = per_message.len();
    let p_e = per_message.iter().map(|p| p.0).sum::<f64>() / count as f64;
    let p_d = per_message.iter().map(|p| p.1).sum::<f64>() / count as f64;
    let failures: Vec<f64> = per_message.iter().map(|p| p.2).collect();
    let messages: Vec<Symbol> = (0..count).filter(|&m| failures[m] <= 1.0 - eta).collect();
    GoodMessageSet {
        fraction: messages.len() as f64 / count as f64,
        gamma: 1.0 - (p_e + p_d) / (1.0 - eta),
        messages,
        failures,
        p_e,
        p_d,
    }
}

/// Probability, given `M = m`, of the pairs `(s^n, y^n)` on which `m` is
/// decoded, the distortion cap holds and all triple deviations are within
/// `n^{-1/4}`. When `m` is a good message and the lower bound
/// `eta - |X||Y||S| / (4 n mu^2)` is positive, falling below it is reported
/// as [`Error::BoundViolated`].
pub fn restricted_measure_mass(
    code: &IsacCode,
    sdmc: &Sdmc,
    ps: &Pmf,
    d: &DistortionFn,
    m: Symbol,
    cp: &ConverseParams,
) -> Result<f64> {
    let a = analyze_message(code, sdmc, ps, d, m, cp)?;
    let rhs = cp.delta_lower_bound(sdmc);
    let good = a.p_fail <= 1.0 - cp.eta;
    if rhs > 0.0 && good && a.delta < rhs - EXACT_TOL {
        return Err(Error::BoundViolated { value: a.delta, bound: rhs });
    }
    Ok(a.delta)
}
