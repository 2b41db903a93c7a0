//! Finite alphabets, probability mass functions, channel laws and empirical
//! types.
//!
//! All values here are immutable after construction. Sampling is inverse-CDF
//! over the canonical symbol order and consumes exactly one uniform draw.

use std::fmt;
use std::str::FromStr;

use crate::rng::RngStream;
use crate::{Error, Result, Symbol, EXACT_TOL};

/// A finite alphabet `{0, .., size-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn contains(self, s: Symbol) -> bool {
        s < self.0
    }

    pub fn check(self, s: Symbol) -> Result<Symbol> {
        if self.contains(s) {
            Ok(s)
        } else {
            Err(Error::SymbolOutOfRange { symbol: s, size: self.0 })
        }
    }

    pub fn symbols(self) -> std::ops::Range<Symbol> {
        0..self.0
    }
}

/// A probability mass function over an alphabet. Weights are stored exactly
/// as given; validation does not renormalise.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    weights: Vec<f64>,
}

impl Pmf {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyPmf);
        }
        for (index, &value) in weights.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let dev = weights.iter().sum::<f64>() - 1.0;
        if dev.abs() > EXACT_TOL {
            return Err(Error::SumNotOne(dev));
        }
        Ok(Self { weights })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        Alphabet::new(size)?;
        Ok(Self { weights: vec![1.0 / size as f64; size] })
    }

    pub fn point_mass(size: usize, at: Symbol) -> Result<Self> {
        Alphabet::new(size)?.check(at)?;
        let mut weights = vec![0.0; size];
        weights[at] = 1.0;
        Ok(Self { weights })
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.weights.len())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prob(&self, s: Symbol) -> f64 {
        self.weights[s]
    }

    /// Inverse-CDF sample from one uniform draw.
    pub fn sample(&self, rng: &mut RngStream) -> Symbol {
        self.sample_with(rng.uniform())
    }

    /// Inverse CDF at `u` in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> Symbol {
        let mut cdf = 0.0;
        let mut last = 0;
        for (s, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                cdf += w;
                last = s;
                if u < cdf {
                    return s;
                }
            }
        }
        // Rounding left the total just below u.
        last
    }
}

fn validate_rows(rows: Vec<Vec<f64>>, width: usize) -> Result<Vec<Pmf>> {
    rows.into_iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != width {
                return Err(Error::ShapeMismatch(format!("row {i} has {} entries, expected {width}", row.len())));
            }
            Pmf::new(row)
        })
        .collect()
}

/// A discrete memoryless channel `P(y|x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dmc {
    inputs: Alphabet,
    outputs: Alphabet,
    rows: Vec<Pmf>,
}

impl Dmc {
    /// One row per input symbol, each a pmf over the output alphabet.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = Alphabet::new(rows.len())?;
        let outputs = Alphabet::new(rows[0].len())?;
        let rows = validate_rows(rows, outputs.size())?;
        Ok(Self { inputs, outputs, rows })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn inputs(&self) -> Alphabet {
        self.inputs
    }

    pub fn outputs(&self) -> Alphabet {
        self.outputs
    }

    pub fn row(&self, x: Symbol) -> &Pmf {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }

    /// `P(y|x)`. Panics on out-of-range symbols.
    #[inline]
    pub fn prob(&self, x: Symbol, y: Symbol) -> f64 {
        self.rows[x].weights[y]
    }

    pub fn sample(&self, x: Symbol, rng: &mut RngStream) -> Result<Symbol> {
        self.inputs.check(x)?;
        Ok(self.rows[x].sample(rng))
    }
}

impl fmt::Display for Dmc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dmc {} {}", self.inputs.size(), self.outputs.size())?;
        for row in &self.rows {
            write_row(f, row.weights())?;
        }
        Ok(())
    }
}

/// A state-dependent DMC `P(y|x,s)`; rows are stored input-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Sdmc {
    inputs: Alphabet,
    states: Alphabet,
    outputs: Alphabet,
    rows: Vec<Pmf>,
}

impl Sdmc {
    /// `rows[x * |S| + s]` is the output law for input `x` in state `s`.
    pub fn new(inputs: usize, states: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = Alphabet::new(inputs)?;
        let states = Alphabet::new(states)?;
        if rows.len() != inputs.size() * states.size() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} rows, got {}",
                inputs.size() * states.size(),
                rows.len()
            )));
        }
        let outputs = Alphabet::new(rows[0].len())?;
        let rows = validate_rows(rows, outputs.size())?;
        Ok(Self { inputs, states, outputs, rows })
    }

    /// A channel that ignores the state.
    pub fn state_independent(dmc: &Dmc, states: usize) -> Result<Self> {
        let rows = dmc.rows().iter().flat_map(|r| std::iter::repeat_n(r.weights().to_vec(), states)).collect();
        Self::new(dmc.inputs().size(), states, rows)
    }

    pub fn inputs(&self) -> Alphabet {
        self.inputs
    }

    pub fn states(&self) -> Alphabet {
        self.states
    }

    pub fn outputs(&self) -> Alphabet {
        self.outputs
    }

    pub fn row(&self, x: Symbol, s: Symbol) -> &Pmf {
        &self.rows[x * self.states.size() + s]
    }

    /// `P(y|x,s)`. Panics on out-of-range symbols.
    #[inline]
    pub fn prob(&self, x: Symbol, s: Symbol, y: Symbol) -> f64 {
        self.rows[x * self.states.size() + s].weights[y]
    }

    pub fn sample(&self, x: Symbol, s: Symbol, rng: &mut RngStream) -> Result<Symbol> {
        self.inputs.check(x)?;
        self.states.check(s)?;
        Ok(self.row(x, s).sample(rng))
    }

    fn check_state_pmf(&self, state: &Pmf) -> Result<()> {
        if state.len() != self.states.size() {
            return Err(Error::ShapeMismatch(format!(
                "state pmf has {} entries, channel has {} states",
                state.len(),
                self.states.size()
            )));
        }
        Ok(())
    }

    /// The state-averaged channel `P(y|x) = sum_s P_S(s) P(y|x,s)`.
    pub fn averaged(&self, state: &Pmf) -> Result<Dmc> {
        self.check_state_pmf(state)?;
        let rows = self
            .inputs
            .symbols()
            .map(|x| {
                self.outputs
                    .symbols()
                    .map(|y| self.states.symbols().map(|s| state.prob(s) * self.prob(x, s, y)).sum())
                    .collect()
            })
            .collect();
        // Rounding in the averages can exceed the pmf tolerance only for
        // pathological inputs; renormalise nothing and let validation decide.
        Dmc::new(rows)
    }

    /// The channel from `x` to the pair `(s, y)`, output index `s * |Y| + y`,
    /// with `P(s, y | x) = P_S(s) P(y|x,s)`.
    pub fn joint_state_output(&self, state: &Pmf) -> Result<Dmc> {
        self.check_state_pmf(state)?;
        let rows = self
            .inputs
            .symbols()
            .map(|x| {
                let mut row = Vec::with_capacity(self.states.size() * self.outputs.size());
                for s in self.states.symbols() {
                    for y in self.outputs.symbols() {
                        row.push(state.prob(s) * self.prob(x, s, y));
                    }
                }
                row
            })
            .collect();
        Dmc::new(rows)
    }
}

impl fmt::Display for Sdmc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sdmc {} {} {}", self.inputs.size(), self.states.size(), self.outputs.size())?;
        for row in &self.rows {
            write_row(f, row.weights())?;
        }
        Ok(())
    }
}

fn write_row(f: &mut fmt::Formatter<'_>, row: &[f64]) -> fmt::Result {
    let mut first = true;
    for w in row {
        if !first {
            f.write_str(" ")?;
        }
        first = false;
        write!(f, "{w}")?;
    }
    writeln!(f)
}

/// A parsed channel file.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelFile {
    Dmc(Dmc),
    Sdmc(Sdmc),
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub(crate) fn parse_num<T: FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::parse(line, format!("cannot parse `{tok}`")))
}

impl FromStr for ChannelFile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(0, "empty channel file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let dims: Vec<usize> = head[1..].iter().map(|t| parse_num(hl, t)).collect::<Result<_>>()?;
        let (n_rows, width) = match (head[0], dims.as_slice()) {
            ("dmc", &[x, y]) => (x, y),
            ("sdmc", &[x, s, y]) => (x * s, y),
            _ => return Err(Error::parse(hl, "expected `dmc |X| |Y|` or `sdmc |X| |S| |Y|`")),
        };
        let mut rows = Vec::with_capacity(n_rows);
        for (ln, l) in lines {
            let row: Vec<f64> = l.split_whitespace().map(|t| parse_num(ln, t)).collect::<Result<_>>()?;
            if row.len() != width {
                return Err(Error::parse(ln, format!("expected {width} probabilities, got {}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() != n_rows {
            return Err(Error::parse(hl, format!("expected {n_rows} rows, got {}", rows.len())));
        }
        if dims.contains(&0) {
            return Err(Error::EmptyAlphabet);
        }
        match head[0] {
            "dmc" => Ok(ChannelFile::Dmc(Dmc::new(rows)?)),
            _ => Ok(ChannelFile::Sdmc(Sdmc::new(dims[0], dims[1], rows)?)),
        }
    }
}

impl FromStr for Dmc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse()? {
            ChannelFile::Dmc(d) => Ok(d),
            ChannelFile::Sdmc(_) => Err(Error::parse(1, "expected a `dmc` file")),
        }
    }
}

impl FromStr for Sdmc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse()? {
            ChannelFile::Sdmc(d) => Ok(d),
            ChannelFile::Dmc(_) => Err(Error::parse(1, "expected an `sdmc` file")),
        }
    }
}

/// Empirical type of a tuple of equal-length sequences, stored as integer
/// counts over the product alphabet (row-major, first sequence slowest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointType {
    shape: Vec<usize>,
    counts: Vec<u64>,
    n: u64,
}

impl JointType {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        for &k in shape {
            Alphabet::new(k)?;
        }
        let cells = shape.iter().product();
        Ok(Self { shape: shape.to_vec(), counts: vec![0; cells], n: 0 })
    }

    fn cell(&self, symbols: &[Symbol]) -> Result<usize> {
        if symbols.len() != self.shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates for a {}-way type",
                symbols.len(),
                self.shape.len()
            )));
        }
        let mut idx = 0;
        for (&s, &k) in symbols.iter().zip(&self.shape) {
            if s >= k {
                return Err(Error::SymbolOutOfRange { symbol: s, size: k });
            }
            idx = idx * k + s;
        }
        Ok(idx)
    }

    /// Adds one occurrence of the tuple `symbols`.
    pub fn push(&mut self, symbols: &[Symbol]) -> Result<()> {
        let c = self.cell(symbols)?;
        self.counts[c] += 1;
        self.n += 1;
        Ok(())
    }

    pub fn from_sequences(seqs: &[&[Symbol]], shape: &[usize]) -> Result<Self> {
        if seqs.len() != shape.len() {
            return Err(Error::ShapeMismatch("one alphabet per sequence".into()));
        }
        let n = seqs.first().map_or(0, |s| s.len());
        for s in seqs {
            if s.len() != n {
                return Err(Error::LengthMismatch { left: n, right: s.len() });
            }
        }
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        let mut t = Self::zeros(shape)?;
        let mut tuple = vec![0; seqs.len()];
        for i in 0..n {
            for (slot, s) in tuple.iter_mut().zip(seqs) {
                *slot = s[i];
            }
            t.push(&tuple)?;
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, symbols: &[Symbol]) -> Result<u64> {
        Ok(self.counts[self.cell(symbols)?])
    }

    /// `count / n`.
    pub fn frequency(&self, symbols: &[Symbol]) -> Result<f64> {
        Ok(self.count(symbols)? as f64 / self.n as f64)
    }

    /// Normalised weights as a pmf over the product alphabet.
    pub fn to_pmf(&self) -> Result<Pmf> {
        if self.n == 0 {
            return Err(Error::EmptySequence);
        }
        Pmf::new(self.counts.iter().map(|&c| c as f64 / self.n as f64).collect())
    }

    /// Exact marginal onto the listed axes, in the listed order.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointType> {
        for &a in axes {
            if a >= self.shape.len() {
                return Err(Error::ShapeMismatch(format!("no axis {a}")));
            }
        }
        let shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let mut out = JointType::zeros(&shape)?;
        let mut tuple = vec![0; self.shape.len()];
        let mut sub = vec![0; axes.len()];
        for (idx, &c) in self.counts.iter().enumerate() {
            let mut rem = idx;
            for (slot, &k) in tuple.iter_mut().zip(&self.shape).rev() {
                *slot = rem % k;
                rem /= k;
            }
            for (dst, &a) in sub.iter_mut().zip(axes) {
                *dst = tuple[a];
            }
            let cell = out.cell(&sub)?;
            out.counts[cell] += c;
        }
        out.n = self.n;
        Ok(out)
    }
}

/// Type of a single sequence.
pub fn sequence_type(xs: &[Symbol], alphabet: Alphabet) -> Result<JointType> {
    JointType::from_sequences(&[xs], &[alphabet.size()])
}

/// Joint type of `(xs, ys)`.
pub fn joint_type(xs: &[Symbol], ys: &[Symbol], inputs: Alphabet, outputs: Alphabet) -> Result<JointType> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    JointType::from_sequences(&[xs, ys], &[inputs.size(), outputs.size()])
}

/// `|pi(a,b) - pi(a) P(b|a)|` for a joint type of `(x^n, y^n)` and the type
/// of `x^n`.
pub fn conditional_deviation(joint: &JointType, marginal: &JointType, a: Symbol, b: Symbol, dmc: &Dmc) -> Result<f64> {
    dmc.inputs().check(a)?;
    dmc.outputs().check(b)?;
    if joint.len() != marginal.len() {
        return Err(Error::LengthMismatch { left: joint.len() as usize, right: marginal.len() as usize });
    }
    let pab = joint.frequency(&[a, b])?;
    let pa = marginal.frequency(&[a])?;
    Ok((pab - pa * dmc.prob(a, b)).abs())
}
