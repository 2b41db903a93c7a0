//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as a plain binary (`harness = false`).

use std::collections::HashMap;
use std::time::Instant;

use closedloop::channel::{Alphabet, Dmc, Pmf, Sdmc};
use closedloop::experiments::{builtin, random_tree};
use closedloop::isac::{
    analyze_message, build_good_message_set, expected_distortion_with, frontier_sweep, optimal_estimate,
    ConverseParams, DistortionFn, IsacCode, Mode, PerLetterEstimator,
};
use closedloop::tree::{
    exhaustive_max_success, expected_replacement_success, find_sites, well_order, ScoreParams, StrategyTree,
    SurgerySite, ThresholdStrategy, TreeEnumerator,
};
use closedloop::typicality::{lemma1_bound, martingale_check, monte_carlo_deviation, verify_lemma1_exhaustive};
use closedloop::Error;

const TOL: f64 = 1e-12;
const BSC_TENTHS: [u64; 3] = [1, 3, 5];
const MU_HUNDREDTHS: [u64; 4] = [15, 25, 40, 60];

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: closedloop::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// A channel whose transition probabilities are multiples of 1/10, kept in
/// integer tenths for the exact oracle.
struct TenthsChannel {
    name: String,
    rows: Vec<Vec<u64>>,
}

impl TenthsChannel {
    fn bsc(p: u64) -> Self {
        Self { name: format!("BSC(0.{p})"), rows: vec![vec![10 - p, p], vec![p, 10 - p]] }
    }

    fn ternary() -> Self {
        Self { name: "ternary".into(), rows: vec![vec![5, 3, 2], vec![1, 3, 6]] }
    }

    fn dmc(&self) -> Dmc {
        Dmc::new(self.rows.iter().map(|r| r.iter().map(|&t| t as f64 / 10.0).collect()).collect()).unwrap()
    }

    /// Largest probability, over all adaptive strategies, that
    /// `|#{i: x_i=a, y_i=b} - P(b|a) #{i: x_i=a}| > n mu`, by dynamic
    /// programming over (count of b, count of a) in integer arithmetic.
    /// `mu = mu_h / 100`.
    fn max_deviation(&self, n: u64, mu_h: u64, a: usize, b: usize) -> f64 {
        let mut memo = HashMap::new();
        self.value(n, mu_h, a, b, 0, 0, 0, &mut memo)
    }

    #[allow(clippy::too_many_arguments)]
    fn value(
        &self,
        n: u64,
        mu_h: u64,
        a: usize,
        b: usize,
        depth: u64,
        k: u64,
        na: u64,
        memo: &mut HashMap<(u64, u64, u64), f64>,
    ) -> f64 {
        if depth == n {
            // 100 * score = 100 k - 10 * na * P10(b|a); threshold 100 n mu = n mu_h
            let scaled = (100 * k) as i64 - (10 * na * self.rows[a][b]) as i64;
            return if scaled.unsigned_abs() > n * mu_h { 1.0 } else { 0.0 };
        }
        if let Some(&v) = memo.get(&(depth, k, na)) {
            return v;
        }
        let mut best: f64 = 0.0;
        for (x, row) in self.rows.iter().enumerate() {
            let mut v = 0.0;
            for (y, &w) in row.iter().enumerate() {
                let (k2, na2) = if x == a { (k + u64::from(y == b), na + 1) } else { (k, na) };
                v += w as f64 / 10.0 * self.value(n, mu_h, a, b, depth + 1, k2, na2, memo);
            }
            best = best.max(v);
        }
        memo.insert((depth, k, na), best);
        best
    }
}

fn binary_grid() -> Vec<(TenthsChannel, u64, u64, usize, usize)> {
    let mut out = Vec::new();
    for n in 2..=4 {
        for p in BSC_TENTHS {
            for mu in MU_HUNDREDTHS {
                for a in 0..2 {
                    for b in 0..2 {
                        out.push((TenthsChannel::bsc(p), n, mu, a, b));
                    }
                }
            }
        }
    }
    out
}

fn params(ch: &TenthsChannel, mu_h: u64, a: usize, b: usize) -> ScoreParams {
    ScoreParams::new(ch.dmc(), a, b, mu_h as f64 / 100.0).unwrap()
}

fn criterion_1() -> Check {
    let grid = binary_grid();
    let mut worst: f64 = 0.0;
    for (ch, n, mu, a, b) in &grid {
        let p = params(ch, *mu, *a, *b);
        let n = *n as usize;
        let opt = lib(lib(StrategyTree::optimal(n, &p))?.checked_success_probability(&p))?;
        let (_, best) = lib(exhaustive_max_success(n, &p))?;
        let oracle = ch.max_deviation(n as u64, *mu, *a, *b);
        let gap = (opt - best).abs().max((best - oracle).abs());
        ensure(gap <= TOL, || {
            format!("{} n={n} mu=0.{mu} a={a} b={b}: optimal {opt}, exhaustive {best}, exact oracle {oracle}", ch.name)
        })?;
        worst = worst.max(gap);
    }
    Ok(format!("{} instances, max |optimal - exhaustive| and |exhaustive - oracle| = {worst:.1e}", grid.len()))
}

fn criterion_2() -> Check {
    let mut cases: Vec<_> = binary_grid();
    for mu in MU_HUNDREDTHS {
        for a in 0..2 {
            for b in 0..3 {
                cases.push((TenthsChannel::ternary(), 3, mu, a, b));
            }
        }
    }
    let mut tightest = f64::INFINITY;
    for (ch, n, mu, a, b) in &cases {
        let p = params(ch, *mu, *a, *b);
        let bound = 10_000.0 / (4.0 * *n as f64 * (*mu * *mu) as f64);
        let value = match verify_lemma1_exhaustive(*n as usize, &p) {
            Ok((r, _)) => r.value,
            Err(Error::BoundViolated { value, bound }) => {
                return Err(format!("{} n={n} mu=0.{mu} a={a} b={b}: {value} > {bound}", ch.name))
            }
            Err(e) => return Err(e.to_string()),
        };
        let oracle = ch.max_deviation(*n, *mu, *a, *b);
        ensure((value - oracle).abs() <= TOL, || {
            format!("{} n={n} mu=0.{mu} a={a} b={b}: exhaustive {value} vs exact oracle {oracle}", ch.name)
        })?;
        ensure(oracle <= bound + TOL, || format!("{} n={n}: oracle {oracle} > bound {bound}", ch.name))?;
        tightest = tightest.min(bound - value);
    }
    Ok(format!("{} instances incl. 24 ternary, smallest margin {tightest:.4}", cases.len()))
}

fn criterion_3() -> Check {
    let n = 10_000;
    let mu = (n as f64).powf(-0.25);
    let p = lib(ScoreParams::new(lib(Dmc::bsc(0.5))?, 0, 1, mu))?;
    let h = lib(ThresholdStrategy::new(n, p.clone()))?;
    let r = lib(monte_carlo_deviation(&h, n, &p, 100_000, 1))?;
    let bound = lib(lemma1_bound(n, mu))?;
    ensure((bound - 0.0025).abs() < 1e-12, || format!("bound {bound} != 0.0025"))?;
    ensure(r.ci.1 <= bound, || format!("Wilson upper {} > {bound}", r.ci.1))?;
    Ok(format!("n=1e4, 1e5 trials: {} successes, Wilson upper {:.2e} <= {bound}", r.successes, r.ci.1))
}

fn criterion_4() -> Check {
    let (bin, n) = (lib(Alphabet::new(2))?, 3);
    let trees: Vec<StrategyTree> = lib(TreeEnumerator::new(n, bin, bin))?.collect();
    ensure(trees.len() == 128, || format!("{} trees", trees.len()))?;
    let (mut sites, mut surgeries, mut gap, mut drop) = (0usize, 0usize, 0f64, 0f64);
    for p_t in BSC_TENTHS {
        for mu in MU_HUNDREDTHS {
            for a in 0..2 {
                for b in 0..2 {
                    let p = params(&TenthsChannel::bsc(p_t), mu, a, b);
                    for t in &trees {
                        let before = lib(t.success_probability(&p))?;
                        for v in find_sites(t, a) {
                            let site = lib(SurgerySite::new(t, v, a))?;
                            gap = gap.max((lib(expected_replacement_success(&site, &p))? - before).abs());
                            sites += 1;
                        }
                        let trace = lib(well_order(t, &p, t.node_count()))?;
                        ensure(trace.steps() <= t.node_count(), || format!("{} steps", trace.steps()))?;
                        ensure(trace.tree.is_well_ordered(a), || "result not well-ordered".into())?;
                        drop = drop.max(trace.max_drop());
                        surgeries += trace.steps();
                    }
                }
            }
        }
    }
    ensure(gap <= TOL, || format!("identity gap {gap:e}"))?;
    ensure(drop <= TOL, || format!("success probability dropped by {drop:e}"))?;
    ensure(sites > 0 && surgeries > 0, || "no surgery exercised".into())?;
    Ok(format!(
        "128 trees x 48 settings: {sites} sites (max gap {gap:.1e}), {surgeries} surgeries (max drop {drop:.1e})"
    ))
}

fn criterion_5() -> Check {
    let bin = lib(Alphabet::new(2))?;
    let mut worst: f64 = 0.0;
    let mut strategies = 0usize;
    for p_t in BSC_TENTHS {
        for a in 0..2 {
            for b in 0..2 {
                let p = params(&TenthsChannel::bsc(p_t), 25, a, b);
                for n in 1..=4 {
                    let trees: Vec<StrategyTree> = if n <= 3 {
                        lib(TreeEnumerator::new(n, bin, bin))?.collect()
                    } else {
                        (0..100)
                            .map(|i| random_tree(&p, n, 7, i))
                            .collect::<closedloop::Result<_>>()
                            .map_err(|e| e.to_string())?
                    };
                    for t in &trees {
                        worst = worst.max(lib(martingale_check(t, n, &p))?.max_abs_step_bias);
                    }
                    strategies += trees.len();
                }
            }
        }
    }
    ensure(worst <= TOL, || format!("step bias {worst:e}"))?;
    Ok(format!("{strategies} strategies, max |step bias| {worst:.1e}"))
}

struct RawSdmc {
    /// `w[x][s][y]`.
    w: Vec<Vec<Vec<f64>>>,
    ps: Vec<f64>,
}

fn bundled_sdmc() -> Result<(Sdmc, Pmf, RawSdmc), String> {
    let sdmc: Sdmc = lib(builtin("isac_2x2x2").unwrap().parse())?;
    let ps = lib(Pmf::new(vec![0.7, 0.3]))?;
    let raw = RawSdmc {
        w: vec![vec![vec![0.9, 0.1], vec![0.6, 0.4]], vec![vec![0.1, 0.9], vec![0.8, 0.2]]],
        ps: vec![0.7, 0.3],
    };
    Ok((sdmc, ps, raw))
}

fn criterion_6() -> Check {
    let (sdmc, ps, raw) = bundled_sdmc()?;
    let d = lib(DistortionFn::hamming(2))?;
    let ham = |e: usize, s: usize| if e == s { 0.0 } else { 1.0 };
    for x in 0..2 {
        for y in 0..2 {
            let e_star = lib(optimal_estimate(&sdmc, &ps, &d, x, y))?;
            let cost = |e: usize| (0..2).map(|s| raw.ps[s] * raw.w[x][s][y] * ham(e, s)).sum::<f64>();
            for e in 0..2 {
                ensure(cost(e_star) <= cost(e) + TOL, || format!("(x={x}, y={y}): estimate {e_star} beaten by {e}"))?;
            }
        }
    }
    let exact = |px: &[f64], table: &[usize]| -> f64 {
        let mut total = 0.0;
        for x in 0..2 {
            for s in 0..2 {
                for y in 0..2 {
                    total += px[x] * raw.ps[s] * raw.w[x][s][y] * ham(table[x * 2 + y], s);
                }
            }
        }
        total
    };
    let opt = lib(PerLetterEstimator::optimal(&sdmc, &ps, &d))?;
    let maps = lib(PerLetterEstimator::all(sdmc.inputs(), sdmc.outputs(), d.estimates()))?;
    ensure(maps.len() == 16, || format!("{} maps", maps.len()))?;
    let mut checked = 0;
    for k in 0..=10 {
        let px = [k as f64 / 10.0, 1.0 - k as f64 / 10.0];
        let pmf = lib(Pmf::new(px.to_vec()))?;
        let best = exact(&px, opt.table());
        let lib_best = lib(expected_distortion_with(&pmf, &sdmc, &ps, &d, &opt))?;
        ensure((best - lib_best).abs() <= TOL, || format!("library {lib_best} vs oracle {best}"))?;
        for m in &maps {
            let v = exact(&px, m.table());
            ensure(v >= best - TOL, || format!("map {:?} gives {v} < {best} at P_X={px:?}", m.table()))?;
            checked += 1;
        }
    }
    Ok(format!("argmin at all 4 (x,y); {checked} (P_X, map) pairs, none beats the optimal map {:?}", opt.table()))
}

fn h2(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

fn criterion_7() -> Check {
    // a state-independent BSC(0.11) seen through a two-state channel
    let bsc = lib(Dmc::bsc(0.11))?;
    let sdmc = lib(Sdmc::state_independent(&bsc, 2))?;
    let ps = lib(Pmf::new(vec![0.7, 0.3]))?;
    let uniform = lib(Pmf::uniform(2))?;
    let mi = lib(closedloop::isac::mutual_information(&uniform, &sdmc, &ps))?;
    let expect = 1.0 - h2(0.11);
    ensure((mi - expect).abs() <= 1e-6, || format!("I = {mi}, 1 - h2(0.11) = {expect}"))?;

    let (sdmc, ps, raw) = bundled_sdmc()?;
    let d = lib(DistortionFn::hamming(2))?;
    let frontier = lib(frontier_sweep(&sdmc, &ps, &d, 101))?;
    let avg: Vec<Vec<f64>> =
        (0..2).map(|x| (0..2).map(|y| (0..2).map(|s| raw.ps[s] * raw.w[x][s][y]).sum()).collect()).collect();
    let rate = |q: f64| -> f64 {
        let px = [q, 1.0 - q];
        let py: Vec<f64> = (0..2).map(|y| px[0] * avg[0][y] + px[1] * avg[1][y]).collect();
        let mut r = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let j = px[x] * avg[x][y];
                if j > 0.0 {
                    r += j * (avg[x][y] / py[y]).log2();
                }
            }
        }
        r
    };
    let points = 100_000;
    let oracle = (0..=points).map(|i| rate(i as f64 / points as f64)).fold(0.0, f64::max);
    let got = frontier.max_rate().rate;
    ensure((got - oracle).abs() <= 1e-3, || format!("frontier max R {got} vs refinement {oracle}"))?;
    Ok(format!("I = {mi:.7} (1 - h2(0.11) = {expect:.7}); max R {got:.6} vs 1e5-point oracle {oracle:.6}"))
}

/// Per-message restricted measure mass of the bundled code, from an
/// independent exact rational enumeration of all 256 `(s^4, y^4)` pairs.
const FROZEN_DELTA: [f64; 4] = [0.49966875, 0.48265875, 0.48265875, 0.44741403];

fn criterion_8() -> Check {
    let (sdmc, ps, _) = bundled_sdmc()?;
    let d = lib(DistortionFn::hamming(2))?;
    let code: IsacCode = lib(builtin("feedback_n4").unwrap().parse())?;
    ensure(code.n() == 4 && code.messages() == 4, || "unexpected bundled code".into())?;
    let mut notes = Vec::new();
    for eta in [0.1, 0.3] {
        let cp = lib(ConverseParams::new(4, 0.4, 0.2, eta, 0.25))?;
        let set = lib(build_good_message_set(&code, &sdmc, &ps, &d, &cp, Mode::Exact))?;
        ensure(set.fraction >= set.gamma - TOL, || format!("eta={eta}: {} < gamma {}", set.fraction, set.gamma))?;
        for (m, &frozen) in FROZEN_DELTA.iter().enumerate() {
            let a = lib(analyze_message(&code, &sdmc, &ps, &d, m, &cp))?;
            ensure((a.delta - frozen).abs() <= TOL, || format!("m={m}: delta {} vs {frozen}", a.delta))?;
            ensure(a.triples_within_bound(), || {
                format!("m={m}: triple deviation {} > {}", a.max_triple_deviation(), a.triple_bound)
            })?;
        }
        notes.push(format!("eta={eta}: |M~|/M = {} >= gamma {:.4}", set.fraction, set.gamma));
    }
    Ok(format!("{}; 4 deltas match the frozen oracle", notes.join(", ")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("optimal tree equals exhaustive maximum (n<=4, BSC grid)", criterion_1),
        ("exhaustive deviation <= 1/(4 n mu^2) (BSC grid + ternary)", criterion_2),
        ("Monte Carlo deviation at n=1e4, mu=n^-1/4", criterion_3),
        ("surgery identity and monotone well-ordering (all n=3 trees)", criterion_4),
        ("score has zero conditional drift (n<=4)", criterion_5),
        ("per-letter estimator is optimal (2x2x2, Hamming)", criterion_6),
        ("mutual information and frontier maximum rate", criterion_7),
        ("good-message fraction and restricted measure (n=4 code)", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = check();
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
