use std::str::FromStr;

use super::{DistortionFn, PerLetterEstimator};
use crate::channel::{content_lines, parse_num, Alphabet, Pmf, Sdmc};
use crate::rng::RngStream;
use crate::stats::{wilson_interval, Z95};
use crate::tree::{node_count, Strategy, StrategyTree, MAX_NODES};
use crate::{Error, Result, Symbol};

/// Largest message set a code may declare.
pub const MAX_MESSAGES: usize = 1 << 32;

/// How inputs are chosen from the message and the feedback.
#[derive(Clone, Debug, PartialEq)]
pub enum Encoder {
    /// One strategy tree per message.
    Table(Vec<StrategyTree>),
    /// The same input always.
    Constant(Symbol),
    /// `x_i = m` for every `i`.
    Repetition,
    /// `x^n` spells `m` in base `|X|`, most significant digit first.
    Digits,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decoder {
    /// Message for every `y^n`, in lexicographic order of `y^n`.
    Table(Vec<Symbol>),
    Constant(Symbol),
    /// Most frequent output symbol (smallest on ties), read as a message.
    Majority,
    /// `y^n` read as a base-`|Y|` number, most significant digit first.
    Digits,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EstimatorSpec {
    Optimal,
    /// `s_hat` for every `(x, y)`, indexed `x * |Y| + y`.
    Table(Vec<Symbol>),
}

/// A blocklength-`n` feedback code with a per-letter state estimator.
///
/// Out-of-range decoder results from the `Majority` and `Digits` rules are
/// mapped to message 0.
#[derive(Clone, Debug, PartialEq)]
pub struct IsacCode {
    n: usize,
    rate: f64,
    inputs: Alphabet,
    outputs: Alphabet,
    messages: usize,
    encoder: Encoder,
    decoder: Decoder,
    estimator: EstimatorSpec,
}

/// `floor(2^{nR})`, with a little slack so that rates like `log2(3) / n`
/// give 3 messages.
pub fn message_count(n: usize, rate: f64) -> Result<usize> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidCode(format!("rate must be nonnegative, got {rate}")));
    }
    let m = ((n as f64 * rate).exp2() + 1e-9).floor();
    if m > MAX_MESSAGES as f64 {
        return Err(Error::InvalidCode(format!("{m} messages exceeds the cap")));
    }
    Ok(m as usize)
}

impl IsacCode {
    pub fn new(
        n: usize,
        rate: f64,
        inputs: Alphabet,
        outputs: Alphabet,
        encoder: Encoder,
        decoder: Decoder,
        estimator: EstimatorSpec,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDepth);
        }
        let messages = message_count(n, rate)?;
        let code = Self { n, rate, inputs, outputs, messages, encoder, decoder, estimator };
        code.validate()?;
        Ok(code)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCode(msg));
        let m = self.messages;
        match &self.encoder {
            Encoder::Table(trees) => {
                if trees.len() != m {
                    return bad(format!("{} encoders for {m} messages", trees.len()));
                }
                for t in trees {
                    if t.depth() != self.n || t.inputs() != self.inputs || t.outputs() != self.outputs {
                        return bad("encoder tree shape does not match the code".into());
                    }
                }
            }
            Encoder::Constant(x) => {
                self.inputs.check(*x)?;
            }
            Encoder::Repetition => {
                if m > self.inputs.size() {
                    return bad(format!("repetition needs at most |X| = {} messages, got {m}", self.inputs.size()));
                }
            }
            Encoder::Digits => {
                let cap = (self.inputs.size() as f64).powi(self.n as i32);
                if m as f64 > cap {
                    return bad(format!("{m} messages do not fit in {} input digits", self.n));
                }
            }
        }
        match &self.decoder {
            Decoder::Table(t) => {
                let want = (self.outputs.size() as u128).checked_pow(self.n as u32);
                if want != Some(t.len() as u128) {
                    return bad(format!("decoder table has {} entries, expected |Y|^n", t.len()));
                }
                if let Some(&e) = t.iter().find(|&&e| e >= m) {
                    return bad(format!("decoder outputs message {e} of {m}"));
                }
            }
            Decoder::Constant(e) if *e >= m => return bad(format!("decoder outputs message {e} of {m}")),
            _ => {}
        }
        if let EstimatorSpec::Table(t) = &self.estimator {
            if t.len() != self.inputs.size() * self.outputs.size() {
                return bad(format!("estimator table has {} entries, expected |X||Y|", t.len()));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn inputs(&self) -> Alphabet {
        self.inputs
    }

    pub fn outputs(&self) -> Alphabet {
        self.outputs
    }

    /// `floor(2^{nR})`.
    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    /// Input at step `history.len() + 1` for message `m`.
    pub fn encode(&self, m: Symbol, history: &[Symbol]) -> Symbol {
        match &self.encoder {
            Encoder::Table(trees) => {
                let t = &trees[m];
                let mut v = 0;
                for &y in history {
                    v = t.child(v, y);
                }
                t.label(v)
            }
            Encoder::Constant(x) => *x,
            Encoder::Repetition => m,
            Encoder::Digits => {
                let k = self.inputs.size();
                let shift = self.n - 1 - history.len();
                (m / k.pow(shift as u32)) % k
            }
        }
    }

    pub fn decode(&self, ys: &[Symbol]) -> Symbol {
        let fit = |v: usize| if v < self.messages { v } else { 0 };
        match &self.decoder {
            Decoder::Table(t) => t[ys.iter().fold(0, |acc, &y| acc * self.outputs.size() + y)],
            Decoder::Constant(m) => *m,
            Decoder::Majority => {
                let mut counts = vec![0usize; self.outputs.size()];
                for &y in ys {
                    counts[y] += 1;
                }
                let top = (0..counts.len()).fold(0, |b, y| if counts[y] > counts[b] { y } else { b });
                fit(top)
            }
            Decoder::Digits => {
                let mut v: u128 = 0;
                for &y in ys {
                    v = v.saturating_mul(self.outputs.size() as u128).saturating_add(y as u128);
                }
                fit(usize::try_from(v).unwrap_or(usize::MAX))
            }
        }
    }

    /// The per-letter estimator this code uses on `sdmc`.
    pub fn estimator(&self, sdmc: &Sdmc, ps: &Pmf, d: &DistortionFn) -> Result<PerLetterEstimator> {
        match &self.estimator {
            EstimatorSpec::Optimal => PerLetterEstimator::optimal(sdmc, ps, d),
            EstimatorSpec::Table(t) => {
                PerLetterEstimator::from_table(self.inputs, self.outputs, d.estimates(), t.clone())
            }
        }
    }

    /// The strategy tree of message `m`.
    pub fn encoder_tree(&self, m: Symbol) -> Result<StrategyTree> {
        StrategyTree::from_strategy(&MessageStrategy { code: self, m }, self.n, self.inputs, self.outputs)
    }

    pub(crate) fn check_channel(&self, sdmc: &Sdmc) -> Result<()> {
        if sdmc.inputs() != self.inputs || sdmc.outputs() != self.outputs {
            return Err(Error::ShapeMismatch(format!(
                "code is over {}x{} symbols, channel over {}x{}",
                self.inputs.size(),
                self.outputs.size(),
                sdmc.inputs().size(),
                sdmc.outputs().size()
            )));
        }
        Ok(())
    }
}

/// The encoder of one message, viewed as an adaptive input strategy.
pub struct MessageStrategy<'a> {
    pub code: &'a IsacCode,
    pub m: Symbol,
}

impl Strategy for MessageStrategy<'_> {
    fn input(&self, history: &[Symbol]) -> Symbol {
        self.code.encode(self.m, history)
    }
}

fn symbols(line: usize, toks: &[&str]) -> Result<Vec<Symbol>> {
    toks.iter().map(|t| parse_num(line, t)).collect()
}

impl FromStr for IsacCode {
    type Err = Error;

    /// ```text
    /// code <n> <R> <|X|> <|Y|>
    /// family table | constant <x> <m> | repetition | identity-decoder
    /// encoder <m> <labels in breadth-first order>   (table family, one per message)
    /// decoder <message for each y^n>                (table family)
    /// estimator optimal | table <s_hat for each (x, y)>
    /// ```
    fn from_str(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(0, "empty code file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let (n, rate, nx, ny) = match head.as_slice() {
            ["code", n, r, x, y] => (
                parse_num::<usize>(hl, n)?,
                parse_num::<f64>(hl, r)?,
                parse_num::<usize>(hl, x)?,
                parse_num::<usize>(hl, y)?,
            ),
            _ => return Err(Error::parse(hl, "expected `code n R |X| |Y|`")),
        };
        let (inputs, outputs) = (Alphabet::new(nx)?, Alphabet::new(ny)?);
        if n == 0 {
            return Err(Error::ZeroDepth);
        }
        let messages = message_count(n, rate).map_err(|e| Error::parse(hl, e.to_string()))?;

        let mut family: Option<(usize, Vec<&str>)> = None;
        let mut encoders: Vec<Option<Vec<Symbol>>> = Vec::new();
        let mut decoder = None;
        let mut estimator = EstimatorSpec::Optimal;
        for (ln, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks[0] {
                "family" => family = Some((ln, toks[1..].to_vec())),
                "encoder" => {
                    let m: usize = parse_num(ln, toks.get(1).ok_or_else(|| Error::parse(ln, "missing message"))?)?;
                    if m >= messages {
                        return Err(Error::parse(ln, format!("message {m} out of range 0..{messages}")));
                    }
                    if encoders.is_empty() {
                        encoders.resize(messages, None);
                    }
                    if encoders[m].replace(symbols(ln, &toks[2..])?).is_some() {
                        return Err(Error::parse(ln, format!("duplicate encoder for message {m}")));
                    }
                }
                "decoder" => decoder = Some(symbols(ln, &toks[1..])?),
                "estimator" => {
                    estimator = match toks.get(1) {
                        Some(&"optimal") => EstimatorSpec::Optimal,
                        Some(&"table") => EstimatorSpec::Table(symbols(ln, &toks[2..])?),
                        _ => return Err(Error::parse(ln, "expected `estimator optimal|table ...`")),
                    }
                }
                other => return Err(Error::parse(ln, format!("unknown directive `{other}`"))),
            }
        }

        let (fl, fam) = family.ok_or_else(|| Error::parse(hl, "missing `family` line"))?;
        let (enc, dec) = match fam.as_slice() {
            ["table"] => {
                if node_count(outputs.size(), n) > MAX_NODES {
                    return Err(Error::DepthOverflow(node_count(outputs.size(), n)));
                }
                let mut trees = Vec::with_capacity(messages);
                for (m, labels) in encoders.into_iter().enumerate() {
                    let labels = labels.ok_or_else(|| Error::parse(fl, format!("missing encoder for message {m}")))?;
                    trees.push(StrategyTree::from_labels(n, inputs, outputs, labels)?);
                }
                if trees.len() != messages {
                    return Err(Error::parse(fl, "missing encoder lines"));
                }
                let table = decoder.ok_or_else(|| Error::parse(fl, "missing `decoder` line"))?;
                (Encoder::Table(trees), Decoder::Table(table))
            }
            ["constant", x, m] => (Encoder::Constant(parse_num(fl, x)?), Decoder::Constant(parse_num(fl, m)?)),
            ["repetition"] => (Encoder::Repetition, Decoder::Majority),
            ["identity-decoder"] => (Encoder::Digits, Decoder::Digits),
            _ => return Err(Error::parse(fl, "unknown family")),
        };
        Self::new(n, rate, inputs, outputs, enc, dec, estimator)
    }
}

/// Monte Carlo error and excess-distortion rates of a code.
#[derive(Clone, Debug, PartialEq)]
pub struct SimStats {
    pub trials: u64,
    pub errors: u64,
    pub excess: u64,
    /// `P(M_hat != M)`.
    pub p_e: f64,
    /// `P(dist^n > D)`.
    pub p_d: f64,
    pub ci_e: (f64, f64),
    pub ci_d: (f64, f64),
    pub mean_distortion: f64,
}

const SIM_CHUNK: u64 = 4096;

/// One closed-loop transmission: message `m`, states and outputs drawn from
/// `rng`. Returns `(decoded, total distortion)`.
#[allow(clippy::too_many_arguments)]
fn transmit(
    code: &IsacCode,
    sdmc: &Sdmc,
    ps: &Pmf,
    d: &DistortionFn,
    est: &PerLetterEstimator,
    m: Symbol,
    rng: &mut RngStream,
    ys: &mut Vec<Symbol>,
) -> (Symbol, f64) {
    ys.clear();
    let mut dist = 0.0;
    for _ in 0..code.n {
        let s = ps.sample(rng);
        let x = code.encode(m, ys);
        let y = sdmc.row(x, s).sample(rng);
        dist += d.get(est.estimate(x, y), s);
        ys.push(y);
    }
    (code.decode(ys), dist)
}

/// Simulates `trials` uniformly drawn messages. Trial `t` uses stream
/// `(seed, t)`: one draw for the message, then a state draw and an output
/// draw per channel use.
pub fn simulate_code(
    code: &IsacCode,
    sdmc: &Sdmc,
    ps: &Pmf,
    d: &DistortionFn,
    max_distortion: f64,
    trials: u64,
    seed: u64,
) -> Result<SimStats> {
    use rayon::prelude::*;

    if trials == 0 {
        return Err(Error::TooFewTrials { what: "code simulation", min: 1, got: 0 });
    }
    code.check_channel(sdmc)?;
    let est = code.estimator(sdmc, ps, d)?;
    let n = code.n as f64;
    let partials: Vec<(u64, u64, f64)> = (0..trials.div_ceil(SIM_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut ys = Vec::with_capacity(code.n);
            let (mut err, mut exc, mut total) = (0, 0, 0.0);
            for t in c * SIM_CHUNK..((c + 1) * SIM_CHUNK).min(trials) {
                let mut rng = RngStream::new(seed, t);
                let m = rng.below(code.messages);
                let (m_hat, dist) = transmit(code, sdmc, ps, d, &est, m, &mut rng, &mut ys);
                err += u64::from(m_hat != m);
                exc += u64::from(super::exceeds_cap(dist / n, max_distortion));
                total += dist / n;
            }
            (err, exc, total)
        })
        .collect();
    let (errors, excess, total) = partials.iter().fold((0, 0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2));
    Ok(SimStats {
        trials,
        errors,
        excess,
        p_e: errors as f64 / trials as f64,
        p_d: excess as f64 / trials as f64,
        ci_e: wilson_interval(errors, trials, Z95),
        ci_d: wilson_interval(excess, trials, Z95),
        mean_distortion: total / trials as f64,
    })
}

/// Failure indicators of one transmission of message `m` on stream
/// `(seed, stream)`: `(decoding error, excess distortion)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn transmit_once(
    code: &IsacCode,
    sdmc: &Sdmc,
    ps: &Pmf,
    d: &DistortionFn,
    est: &PerLetterEstimator,
    m: Symbol,
    max_distortion: f64,
    seed: u64,
    stream: u64,
) -> (bool, bool) {
    let mut rng = RngStream::new(seed, stream);
    let mut ys = Vec::with_capacity(code.n);
    let (m_hat, dist) = transmit(code, sdmc, ps, d, est, m, &mut rng, &mut ys);
    (m_hat != m, super::exceeds_cap(dist / code.n as f64, max_distortion))
}
