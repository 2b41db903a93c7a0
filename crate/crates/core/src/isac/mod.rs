//! Joint communication and state estimation over a state-dependent channel
//! with output feedback.
//!
//! The transmitter sees `y_i` after each use and estimates the i.i.d. state
//! sequence from `(x^n, y^n)`. Since the state is independent of the input,
//! the posterior of `s_i` given `(x_i, y_i)` does not depend on the input law,
//! and the best per-letter estimator is fixed once the channel, state law and
//! distortion are known.

mod code;
mod converse;
mod frontier;

use std::fmt;
use std::str::FromStr;

pub use code::{simulate_code, Decoder, Encoder, EstimatorSpec, IsacCode, MessageStrategy, SimStats};
pub use converse::{
    analyze_message, build_good_message_set, good_message_set_from, restricted_measure_mass, ConverseParams,
    GoodMessageSet, MessageAnalysis, Mode, MAX_PAIRS,
};
pub use frontier::{frontier_sweep, Frontier, FrontierPoint, MAX_FRONTIER_INPUTS, MAX_GRID_INPUTS};

use crate::channel::{content_lines, parse_num, Alphabet, Dmc, Pmf, Sdmc};
use crate::{Error, Result, Symbol};

/// Distortion table `d(s_hat, s)`, rows indexed by the estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionFn {
    estimates: Alphabet,
    states: Alphabet,
    table: Vec<f64>,
}

impl DistortionFn {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let estimates = Alphabet::new(rows.len())?;
        let states = Alphabet::new(rows[0].len())?;
        let mut table = Vec::with_capacity(estimates.size() * states.size());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != states.size() {
                return Err(Error::InvalidDistortion(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    states.size()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidDistortion(format!("entry {v} in row {i}")));
            }
            table.extend(row);
        }
        Ok(Self { estimates, states, table })
    }

    /// `d(s_hat, s) = 1{s_hat != s}`.
    pub fn hamming(size: usize) -> Result<Self> {
        let a = Alphabet::new(size)?;
        Self::new(a.symbols().map(|i| a.symbols().map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect())
    }

    pub fn estimates(&self) -> Alphabet {
        self.estimates
    }

    pub fn states(&self) -> Alphabet {
        self.states
    }

    #[inline]
    pub fn get(&self, estimate: Symbol, state: Symbol) -> f64 {
        self.table[estimate * self.states.size() + state]
    }

    fn check_states(&self, sdmc: &Sdmc) -> Result<()> {
        if self.states != sdmc.states() {
            return Err(Error::ShapeMismatch(format!(
                "distortion has {} state columns, channel has {} states",
                self.states.size(),
                sdmc.states().size()
            )));
        }
        Ok(())
    }
}

impl FromStr for DistortionFn {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(0, "empty distortion file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let (rows_n, cols) = match head.as_slice() {
            ["dist", r, c] => (parse_num::<usize>(hl, r)?, parse_num::<usize>(hl, c)?),
            _ => return Err(Error::parse(hl, "expected `dist |S_hat| |S|`")),
        };
        let mut rows = Vec::with_capacity(rows_n);
        for (ln, l) in lines {
            let row: Vec<f64> = l.split_whitespace().map(|t| parse_num(ln, t)).collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::parse(ln, format!("expected {cols} entries, got {}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() != rows_n {
            return Err(Error::parse(hl, format!("expected {rows_n} rows, got {}", rows.len())));
        }
        if rows_n == 0 || cols == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Self::new(rows)
    }
}

impl fmt::Display for DistortionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dist {} {}", self.estimates.size(), self.states.size())?;
        for row in self.table.chunks(self.states.size()) {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

fn check_state_law(sdmc: &Sdmc, ps: &Pmf) -> Result<()> {
    if ps.len() != sdmc.states().size() {
        return Err(Error::ShapeMismatch(format!(
            "state pmf has {} entries, channel has {} states",
            ps.len(),
            sdmc.states().size()
        )));
    }
    Ok(())
}

/// Whether an average distortion is above the cap `D`, with ties (up to
/// float error in the running sum) counted as within the cap.
#[inline]
pub(crate) fn exceeds_cap(average: f64, cap: f64) -> bool {
    average > cap + crate::tree::SCORE_TIE_TOL * cap.max(1.0)
}

/// `P(s | x, y)` by Bayes' rule.
pub fn posterior_state(sdmc: &Sdmc, ps: &Pmf, x: Symbol, y: Symbol) -> Result<Pmf> {
    check_state_law(sdmc, ps)?;
    sdmc.inputs().check(x)?;
    sdmc.outputs().check(y)?;
    let joint: Vec<f64> = sdmc.states().symbols().map(|s| ps.prob(s) * sdmc.prob(x, s, y)).collect();
    let total: f64 = joint.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroLikelihood { x, y });
    }
    Pmf::new(joint.into_iter().map(|w| w / total).collect())
}

/// Posterior expected distortion of each candidate estimate.
pub fn posterior_costs(posterior: &Pmf, d: &DistortionFn) -> Vec<f64> {
    d.estimates().symbols().map(|e| d.states().symbols().map(|s| posterior.prob(s) * d.get(e, s)).sum()).collect()
}

/// Index of the smallest entry; the first one on ties.
fn argmin(costs: &[f64]) -> Symbol {
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate().skip(1) {
        if c < costs[best] {
            best = i;
        }
    }
    best
}

/// The estimate minimising posterior expected distortion given `(x, y)`.
pub fn optimal_estimate(sdmc: &Sdmc, ps: &Pmf, d: &DistortionFn, x: Symbol, y: Symbol) -> Result<Symbol> {
    d.check_states(sdmc)?;
    let post = posterior_state(sdmc, ps, x, y)?;
    Ok(argmin(&posterior_costs(&post, d)))
}

/// A deterministic per-letter estimator `(x, y) -> s_hat`, stored as a table
/// indexed `x * |Y| + y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerLetterEstimator {
    inputs: Alphabet,
    outputs: Alphabet,
    estimates: Alphabet,
    table: Vec<Symbol>,
}

impl PerLetterEstimator {
    pub fn from_table(inputs: Alphabet, outputs: Alphabet, estimates: Alphabet, table: Vec<Symbol>) -> Result<Self> {
        if table.len() != inputs.size() * outputs.size() {
            return Err(Error::ShapeMismatch(format!(
                "estimator table needs {} entries, got {}",
                inputs.size() * outputs.size(),
                table.len()
            )));
        }
        for &e in &table {
            estimates.check(e)?;
        }
        Ok(Self { inputs, outputs, estimates, table })
    }

    /// The posterior-optimal estimator. Pairs `(x, y)` that cannot occur map
    /// to estimate 0.
    pub fn optimal(sdmc: &Sdmc, ps: &Pmf, d: &DistortionFn) -> Result<Self> {
        d.check_states(sdmc)?;
        let mut table = Vec::with_capacity(sdmc.inputs().size() * sdmc.outputs().size());
        for x in sdmc.inputs().symbols() {
            for y in sdmc.outputs().symbols() {
                table.push(match optimal_estimate(sdmc, ps, d, x, y) {
                    Ok(e) => e,
                    Err(Error::ZeroLikelihood { .. }) => 0,
                    Err(e) => return Err(e),
                });
            }
        }
        Self::from_table(sdmc.inputs(), sdmc.outputs(), d.estimates(), table)
    }

    /// Every map `(x, y) -> s_hat`, in lexicographic order of the table.
    pub fn all(inputs: Alphabet, outputs: Alphabet, estimates: Alphabet) -> Result<Vec<Self>> {
        let cells = inputs.size() * outputs.size();
        let count = (estimates.size() as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
        if count > 1 << 20 {
            return Err(Error::EnumerationTooLarge(count));
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut table = vec![0; cells];
        loop {
            out.push(Self { inputs, outputs, estimates, table: table.clone() });
            if !crate::tree::increment(&mut table, estimates.size()) {
                break;
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn estimate(&self, x: Symbol, y: Symbol) -> Symbol {
        self.table[x * self.outputs.size() + y]
    }

    pub fn table(&self) -> &[Symbol] {
        &self.table
    }

    fn check_shape(&self, sdmc: &Sdmc, d: &DistortionFn) -> Result<()> {
        if self.inputs != sdmc.inputs() || self.outputs != sdmc.outputs() || self.estimates != d.estimates() {
            return Err(Error::ShapeMismatch("estimator does not match channel or distortion".into()));
        }
        Ok(())
    }
}

/// Per-input expected distortion `c(x) = sum_{s,y} P_S(s) P(y|x,s) d(e(x,y), s)`.
pub fn input_costs(sdmc: &Sdmc, ps: &Pmf, d: &DistortionFn, est: &PerLetterEstimator) -> Result<Vec<f64>> {
    check_state_law(sdmc, ps)?;
    d.check_states(sdmc)?;
    est.check_shape(sdmc, d)?;
    Ok(sdmc
        .inputs()
        .symbols()
        .map(|x| {
            let mut c = 0.0;
            for s in sdmc.states().symbols() {
                for y in sdmc.outputs().symbols() {
                    c += ps.prob(s) * sdmc.prob(x, s, y) * d.get(est.estimate(x, y), s);
                }
            }
            c
        })
        .collect())
}

fn check_input_law(sdmc: &Sdmc, px: &Pmf) -> Result<()> {
    if px.len() != sdmc.inputs().size() {
        return Err(Error::ShapeMismatch(format!(
            "input pmf has {} entries, channel has {} inputs",
            px.len(),
            sdmc.inputs().size()
        )));
    }
    Ok(())
}

/// `E[d(e(X,Y), S)]` under `P_X P_S P(y|x,s)` for a given estimator.
pub fn expected_distortion_with(
    px: &Pmf,
    sdmc: &Sdmc,
    ps: &Pmf,
    d: &DistortionFn,
    est: &PerLetterEstimator,
) -> Result<f64> {
    check_input_law(sdmc, px)?;
    let costs = input_costs(sdmc, ps, d, est)?;
    Ok(costs.iter().zip(px.weights()).map(|(c, w)| c * w).sum())
}

/// Expected distortion of the optimal estimator.
pub fn expected_distortion(px: &Pmf, sdmc: &Sdmc, ps: &Pmf, d: &DistortionFn) -> Result<f64> {
    let est = PerLetterEstimator::optimal(sdmc, ps, d)?;
    expected_distortion_with(px, sdmc, ps, d, &est)
}

/// `I(X;Y)` in bits for input law `px` over a DMC.
pub fn mutual_information_dmc(px: &Pmf, dmc: &Dmc) -> Result<f64> {
    if px.len() != dmc.inputs().size() {
        return Err(Error::ShapeMismatch(format!(
            "input pmf has {} entries, channel has {} inputs",
            px.len(),
            dmc.inputs().size()
        )));
    }
    let py: Vec<f64> =
        dmc.outputs().symbols().map(|y| dmc.inputs().symbols().map(|x| px.prob(x) * dmc.prob(x, y)).sum()).collect();
    let mut info = 0.0;
    for x in dmc.inputs().symbols() {
        let wx = px.prob(x);
        if wx == 0.0 {
            continue;
        }
        for (y, &qy) in py.iter().enumerate() {
            let w = dmc.prob(x, y);
            if w > 0.0 {
                info += wx * w * (w / qy).log2();
            }
        }
    }
    Ok(info.max(0.0))
}

/// `I(X;Y)` in bits with the state averaged out.
pub fn mutual_information(px: &Pmf, sdmc: &Sdmc, ps: &Pmf) -> Result<f64> {
    check_input_law(sdmc, px)?;
    mutual_information_dmc(px, &sdmc.averaged(ps)?)
}
