use rayon::prelude::*;

use super::{ExperimentConfig, NamedDmc, Outcome, Table};
use crate::isac::{
    analyze_message, build_good_message_set, frontier_sweep, good_message_set_from, simulate_code, ConverseParams,
    Mode, MAX_PAIRS,
};
use crate::rng::RngStream;
use crate::tree::{
    exhaustive_max_success, expected_replacement_success, find_sites, tree_count, well_order, ScoreParams, Strategy,
    StrategyTree, SurgerySite, ThresholdStrategy, TreeEnumerator,
};
use crate::typicality::{martingale_check, monte_carlo_deviation, verify_lemma1_exhaustive};
use crate::{Error, Result, EXACT_TOL};

/// Largest number of trees the surgery and martingale audits enumerate.
const AUDIT_TREES: u128 = 1 << 16;

fn f(v: f64) -> String {
    format!("{v}")
}

fn labels(t: &StrategyTree) -> String {
    t.labels().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

struct Instance<'c> {
    channel: &'c NamedDmc,
    n: usize,
    params: ScoreParams,
}

impl Instance<'_> {
    fn key(&self) -> Vec<String> {
        vec![
            self.channel.name.clone(),
            self.n.to_string(),
            f(self.params.mu),
            self.params.a.to_string(),
            self.params.b.to_string(),
        ]
    }

    fn context(&self) -> String {
        format!("{} n={} mu={} a={} b={}", self.channel.name, self.n, self.params.mu, self.params.a, self.params.b)
    }
}

fn instances(cfg: &ExperimentConfig) -> Result<Vec<Instance<'_>>> {
    let g = &cfg.grid;
    let mut out = Vec::new();
    for channel in &cfg.channels {
        for &n in &g.n {
            for mu in g.mu.values(n) {
                for a in g.a.resolve(channel.dmc.inputs().size()) {
                    for b in g.b.resolve(channel.dmc.outputs().size()) {
                        let params = ScoreParams::new(channel.dmc.clone(), a, b, mu)?;
                        out.push(Instance { channel, n, params });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn with_key(inst: &Instance<'_>, rest: Vec<String>) -> Vec<String> {
    let mut row = inst.key();
    row.extend(rest);
    row
}

fn finish(mut table: Table, rows: Vec<(Vec<String>, bool)>) -> Outcome {
    let all_pass = rows.iter().all(|r| r.1);
    table.rows = rows.into_iter().map(|r| r.0).collect();
    Outcome { tables: vec![table], all_pass }
}

pub(super) fn lemma1_scan(cfg: &ExperimentConfig) -> Result<Outcome> {
    let table =
        Table::new("lemma1_scan.csv", &["channel", "n", "mu", "a", "b", "method", "value", "ci", "bound", "pass"]);
    let rows = instances(cfg)?
        .par_iter()
        .map(|inst| {
            let (value, bound, pass) = match verify_lemma1_exhaustive(inst.n, &inst.params) {
                Ok((r, _)) => (r.value, r.bound, r.passes()),
                Err(Error::BoundViolated { value, bound }) => (value, bound, false),
                Err(e) => return Err(e.in_instance(inst.context())),
            };
            let rest = vec!["exact".into(), f(value), "0".into(), f(bound), pass.to_string()];
            Ok((with_key(inst, rest), pass))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(table, rows))
}

pub(super) fn optimal_audit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let table = Table::new(
        "optimal_audit.csv",
        &["channel", "n", "mu", "a", "b", "optimal", "exhaustive", "abs_diff", "equal", "labels"],
    );
    let rows = instances(cfg)?
        .par_iter()
        .map(|inst| {
            let run = || -> Result<_> {
                let tree = StrategyTree::optimal(inst.n, &inst.params)?;
                let opt = tree.checked_success_probability(&inst.params)?;
                let (_, best) = exhaustive_max_success(inst.n, &inst.params)?;
                Ok((tree, opt, best))
            };
            let (tree, opt, best) = run().map_err(|e| e.in_instance(inst.context()))?;
            let diff = (opt - best).abs();
            let equal = diff <= EXACT_TOL;
            let rest = vec![f(opt), f(best), f(diff), equal.to_string(), labels(&tree)];
            Ok((with_key(inst, rest), equal))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(table, rows))
}

/// Per-tree results of the surgery audit.
#[derive(Clone, Copy, Default)]
struct SurgeryStats {
    trees: u64,
    sites: u64,
    max_gap: f64,
    max_drop: f64,
    max_steps: usize,
    overran: bool,
}

impl SurgeryStats {
    fn merge(self, o: Self) -> Self {
        Self {
            trees: self.trees + o.trees,
            sites: self.sites + o.sites,
            max_gap: self.max_gap.max(o.max_gap),
            max_drop: self.max_drop.max(o.max_drop),
            max_steps: self.max_steps.max(o.max_steps),
            overran: self.overran || o.overran,
        }
    }
}

fn audit_tree(tree: &StrategyTree, p: &ScoreParams) -> Result<SurgeryStats> {
    let before = tree.success_probability(p)?;
    let mut s = SurgeryStats { trees: 1, ..Default::default() };
    for node in find_sites(tree, p.a) {
        let site = SurgerySite::new(tree, node, p.a)?;
        s.sites += 1;
        s.max_gap = s.max_gap.max((expected_replacement_success(&site, p)? - before).abs());
    }
    match well_order(tree, p, tree.node_count()) {
        Ok(trace) => {
            s.max_drop = trace.max_drop();
            s.max_steps = trace.steps();
        }
        Err(Error::InvalidParams(_)) => s.overran = true,
        Err(e) => return Err(e),
    }
    Ok(s)
}

fn enumerable(inst: &Instance<'_>) -> Result<TreeEnumerator> {
    let dmc = &inst.params.dmc;
    let count = tree_count(inst.n, dmc.inputs(), dmc.outputs());
    if count > AUDIT_TREES {
        return Err(Error::EnumerationTooLarge(count).in_instance(inst.context()));
    }
    TreeEnumerator::new(inst.n, dmc.inputs(), dmc.outputs())
}

pub(super) fn surgery_audit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let table = Table::new(
        "surgery_audit.csv",
        &[
            "channel",
            "n",
            "mu",
            "a",
            "b",
            "trees",
            "sites",
            "max_identity_gap",
            "max_drop",
            "max_steps",
            "node_count",
            "pass",
        ],
    );
    let mut rows = Vec::new();
    for inst in instances(cfg)? {
        let trees: Vec<StrategyTree> = enumerable(&inst)?.collect();
        let nodes = trees[0].node_count();
        let stats = trees
            .par_iter()
            .map(|t| audit_tree(t, &inst.params))
            .try_reduce(SurgeryStats::default, |x, y| Ok(x.merge(y)))
            .map_err(|e| e.in_instance(inst.context()))?;
        let pass =
            stats.max_gap <= EXACT_TOL && stats.max_drop <= EXACT_TOL && !stats.overran && stats.max_steps <= nodes;
        let rest = vec![
            stats.trees.to_string(),
            stats.sites.to_string(),
            f(stats.max_gap),
            f(stats.max_drop),
            stats.max_steps.to_string(),
            nodes.to_string(),
            pass.to_string(),
        ];
        rows.push((with_key(&inst, rest), pass));
    }
    Ok(finish(table, rows))
}

/// Uniformly random labeling; tree `index` uses stream `(seed, index)`.
pub fn random_tree(params: &ScoreParams, n: usize, seed: u64, index: u64) -> Result<StrategyTree> {
    let (inputs, outputs) = (params.dmc.inputs(), params.dmc.outputs());
    let nodes = crate::tree::node_count(outputs.size(), n);
    if nodes > crate::tree::MAX_NODES {
        return Err(Error::DepthOverflow(nodes));
    }
    let mut rng = RngStream::new(seed, index);
    let labels = (0..nodes).map(|_| rng.below(inputs.size())).collect();
    StrategyTree::from_labels(n, inputs, outputs, labels)
}

pub(super) fn martingale_audit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let table = Table::new(
        "martingale_audit.csv",
        &["channel", "n", "mu", "a", "b", "method", "strategies", "max_abs_step_bias", "pass"],
    );
    let g = &cfg.grid;
    let mut rows = Vec::new();
    for inst in instances(cfg)? {
        let dmc = &inst.params.dmc;
        let exhaustive = inst.n <= 3 && tree_count(inst.n, dmc.inputs(), dmc.outputs()) <= AUDIT_TREES;
        let mut trees: Vec<StrategyTree> = if exhaustive {
            enumerable(&inst)?.collect()
        } else {
            (0..g.random_trees as u64)
                .map(|i| random_tree(&inst.params, inst.n, g.seed, i))
                .collect::<Result<_>>()
                .map_err(|e| e.in_instance(inst.context()))?
        };
        if let Some(t) = &cfg.tree {
            if t.depth() == inst.n && t.inputs() == dmc.inputs() && t.outputs() == dmc.outputs() {
                trees.push(t.clone());
            }
        }
        let bias = trees
            .par_iter()
            .map(|t| martingale_check(t, inst.n, &inst.params).map(|r| r.max_abs_step_bias))
            .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))
            .map_err(|e| e.in_instance(inst.context()))?;
        let pass = bias <= EXACT_TOL;
        let method = if exhaustive { "exhaustive" } else { "random" };
        let rest = vec![method.into(), trees.len().to_string(), f(bias), pass.to_string()];
        rows.push((with_key(&inst, rest), pass));
    }
    Ok(finish(table, rows))
}

pub(super) fn mc_deviation(cfg: &ExperimentConfig) -> Result<Outcome> {
    let table = Table::new(
        "mc_deviation.csv",
        &["channel", "n", "mu", "a", "b", "method", "value", "ci_lo", "ci_hi", "bound", "trials", "pass"],
    );
    let g = &cfg.grid;
    let mut rows = Vec::new();
    for inst in instances(cfg)? {
        let threshold;
        let h: &dyn Strategy = match &cfg.tree {
            Some(t) if t.depth() == inst.n => t,
            _ => {
                threshold =
                    ThresholdStrategy::new(inst.n, inst.params.clone()).map_err(|e| e.in_instance(inst.context()))?;
                &threshold
            }
        };
        let r = monte_carlo_deviation(h, inst.n, &inst.params, g.trials, g.seed)
            .map_err(|e| e.in_instance(inst.context()))?;
        let pass = r.passes();
        let rest = vec![
            r.method.to_string(),
            f(r.value),
            f(r.ci.0),
            f(r.ci.1),
            f(r.bound),
            r.trials.to_string(),
            pass.to_string(),
        ];
        rows.push((with_key(&inst, rest), pass));
    }
    Ok(finish(table, rows))
}

struct IsacInputs<'c> {
    sdmc: &'c crate::channel::Sdmc,
    ps: &'c crate::channel::Pmf,
    d: &'c crate::isac::DistortionFn,
}

fn isac_inputs(cfg: &ExperimentConfig) -> Result<IsacInputs<'_>> {
    let missing = |w: &str| Error::Config(format!("{} needs `{w}`", cfg.kind));
    Ok(IsacInputs {
        sdmc: cfg.sdmc.as_ref().ok_or_else(|| missing("sdmc"))?,
        ps: cfg.state_pmf.as_ref().ok_or_else(|| missing("state_pmf"))?,
        d: cfg.distortion.as_ref().ok_or_else(|| missing("distortion"))?,
    })
}

pub(super) fn isac_frontier(cfg: &ExperimentConfig) -> Result<Outcome> {
    let io = isac_inputs(cfg)?;
    let frontier = frontier_sweep(io.sdmc, io.ps, io.d, cfg.grid.resolution)?;
    let k = io.sdmc.inputs().size();
    let mut header: Vec<String> = (0..k).map(|x| format!("px_{x}")).collect();
    header.extend(["R_bits".to_string(), "D".to_string()]);
    let rows = frontier
        .points
        .iter()
        .map(|p| {
            let mut row: Vec<String> = p.px.weights().iter().map(|&w| f(w)).collect();
            row.extend([f(p.rate), f(p.distortion)]);
            row
        })
        .collect();
    let table = Table { file: "isac_frontier.csv".into(), header, rows };
    Ok(Outcome { tables: vec![table], all_pass: true })
}

pub(super) fn isac_simulate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let io = isac_inputs(cfg)?;
    let code = cfg.code.as_ref().ok_or_else(|| Error::Config("isac-simulate needs `code`".into()))?;
    let g = &cfg.grid;
    let s = simulate_code(code, io.sdmc, io.ps, io.d, g.distortion_cap, g.trials, g.seed)?;
    let mut table = Table::new(
        "isac_simulate.csv",
        &[
            "n",
            "rate",
            "messages",
            "trials",
            "distortion_cap",
            "p_e",
            "p_e_lo",
            "p_e_hi",
            "p_d",
            "p_d_lo",
            "p_d_hi",
            "mean_distortion",
        ],
    );
    table.rows.push(vec![
        code.n().to_string(),
        f(code.rate()),
        code.messages().to_string(),
        s.trials.to_string(),
        f(g.distortion_cap),
        f(s.p_e),
        f(s.ci_e.0),
        f(s.ci_e.1),
        f(s.p_d),
        f(s.ci_d.0),
        f(s.ci_d.1),
        f(s.mean_distortion),
    ]);
    Ok(Outcome { tables: vec![table], all_pass: true })
}

pub(super) fn converse_demo(cfg: &ExperimentConfig) -> Result<Outcome> {
    let io = isac_inputs(cfg)?;
    let code = cfg.code.as_ref().ok_or_else(|| Error::Config("converse-demo needs `code`".into()))?;
    let g = &cfg.grid;
    let pairs = ((io.sdmc.states().size() * io.sdmc.outputs().size()) as u128)
        .checked_pow(code.n() as u32)
        .unwrap_or(u128::MAX);
    let exact = pairs <= MAX_PAIRS;

    let mut messages = Table::new(
        "converse_messages.csv",
        &[
            "eta",
            "m",
            "p_error",
            "p_excess",
            "p_fail",
            "good",
            "delta",
            "delta_lower_bound",
            "max_triple_deviation",
            "triple_bound",
            "pass",
        ],
    );
    let mut summary = Table::new(
        "converse_summary.csv",
        &["eta", "mode", "messages", "good", "fraction", "gamma", "p_e", "p_d", "pass"],
    );
    let mut all_pass = true;
    for &eta in &g.eta {
        let ctx = format!("eta={eta}");
        let cp =
            ConverseParams::new(code.n(), g.eps, g.delta, eta, g.distortion_cap).map_err(|e| e.in_instance(&ctx))?;
        let set = if exact {
            let analyses = (0..code.messages())
                .into_par_iter()
                .map(|m| analyze_message(code, io.sdmc, io.ps, io.d, m, &cp))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_instance(&ctx))?;
            let rhs = cp.delta_lower_bound(io.sdmc);
            for a in &analyses {
                let good = a.p_fail <= 1.0 - eta;
                let bound_ok = !(rhs > 0.0 && good) || a.delta >= rhs - EXACT_TOL;
                let pass = bound_ok && a.triples_within_bound();
                all_pass &= pass;
                messages.rows.push(vec![
                    f(eta),
                    a.m.to_string(),
                    f(a.p_error),
                    f(a.p_excess),
                    f(a.p_fail),
                    good.to_string(),
                    f(a.delta),
                    f(rhs),
                    f(a.max_triple_deviation()),
                    f(a.triple_bound),
                    pass.to_string(),
                ]);
            }
            good_message_set_from(&analyses, eta)
        } else {
            let mode = Mode::MonteCarlo { trials: g.trials, seed: g.seed };
            build_good_message_set(code, io.sdmc, io.ps, io.d, &cp, mode).map_err(|e| e.in_instance(&ctx))?
        };
        let markov = set.satisfies_markov();
        all_pass &= markov;
        summary.rows.push(vec![
            f(eta),
            if exact { "exact" } else { "monte_carlo" }.into(),
            code.messages().to_string(),
            set.messages.len().to_string(),
            f(set.fraction),
            f(set.gamma),
            f(set.p_e),
            f(set.p_d),
            markov.to_string(),
        ]);
    }
    Ok(Outcome { tables: vec![summary, messages], all_pass })
}
