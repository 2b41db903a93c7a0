use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::channel::{Dmc, Pmf, Sdmc};
use crate::isac::{DistortionFn, IsacCode};
use crate::tree::StrategyTree;
use crate::{Error, Result, Symbol};

/// The eight experiment kinds, one per subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Lemma1Scan,
    OptimalAudit,
    SurgeryAudit,
    MartingaleAudit,
    McDeviation,
    IsacFrontier,
    IsacSimulate,
    ConverseDemo,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Lemma1Scan,
        Kind::OptimalAudit,
        Kind::SurgeryAudit,
        Kind::MartingaleAudit,
        Kind::McDeviation,
        Kind::IsacFrontier,
        Kind::IsacSimulate,
        Kind::ConverseDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Lemma1Scan => "lemma1-scan",
            Kind::OptimalAudit => "optimal-audit",
            Kind::SurgeryAudit => "surgery-audit",
            Kind::MartingaleAudit => "martingale-audit",
            Kind::McDeviation => "mc-deviation",
            Kind::IsacFrontier => "isac-frontier",
            Kind::IsacSimulate => "isac-simulate",
            Kind::ConverseDemo => "converse-demo",
        }
    }

    /// The configuration used when none is given on the command line.
    pub fn default_config(self) -> &'static str {
        match self {
            Kind::Lemma1Scan | Kind::OptimalAudit => {
                "[grid]\nn = 2, 3, 4\nmu = 0.15, 0.25, 0.4, 0.6\na = all\nb = all\n\
                 [experiment]\nchannel = bsc:0.1, bsc:0.3, bsc:0.5\n"
            }
            Kind::SurgeryAudit => {
                "[grid]\nn = 3\nmu = 0.15, 0.25, 0.4, 0.6\na = all\nb = all\n\
                 [experiment]\nchannel = bsc:0.1, bsc:0.3, bsc:0.5\n"
            }
            Kind::MartingaleAudit => {
                "[grid]\nn = 1, 2, 3, 4\nmu = 0.25\na = all\nb = all\nrandom_trees = 100\n\
                 [experiment]\nchannel = bsc:0.1, bsc:0.3, bsc:0.5, builtin:ternary\n"
            }
            Kind::McDeviation => {
                "[grid]\nn = 10000\nmu = n^-1/4\na = 0\nb = 1\ntrials = 100000\n\
                 [experiment]\nchannel = bsc:0.5\n"
            }
            Kind::IsacFrontier => {
                "[grid]\nresolution = 101\n\
                 [experiment]\nsdmc = builtin:isac_2x2x2\nstate_pmf = 0.7 0.3\ndistortion = hamming\n"
            }
            Kind::IsacSimulate => {
                "[grid]\ntrials = 100000\ndistortion_cap = 0.25\n\
                 [experiment]\nsdmc = builtin:isac_2x2x2\nstate_pmf = 0.7 0.3\ndistortion = hamming\n\
                 code = builtin:feedback_n4\n"
            }
            Kind::ConverseDemo => {
                "[grid]\neta = 0.1, 0.3\neps = 0.4\ndelta = 0.2\ndistortion_cap = 0.25\n\
                 [experiment]\nsdmc = builtin:isac_2x2x2\nstate_pmf = 0.7 0.3\ndistortion = hamming\n\
                 code = builtin:feedback_n4\n"
            }
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// Data files compiled into the binary, addressed as `builtin:<name>`.
pub fn builtin(name: &str) -> Option<&'static str> {
    Some(match name {
        "bsc03" => include_str!("../../data/bsc03.dmc"),
        "ternary" => include_str!("../../data/ternary.dmc"),
        "isac_2x2x2" => include_str!("../../data/isac_2x2x2.sdmc"),
        "hamming2" => include_str!("../../data/hamming2.dist"),
        "feedback_n4" => include_str!("../../data/feedback_n4.code"),
        _ => return None,
    })
}

/// A channel with the name it was given in the config.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedDmc {
    pub name: String,
    pub dmc: Dmc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MuSpec {
    Values(Vec<f64>),
    /// `mu = n^{-1/4}`.
    Schedule,
}

impl MuSpec {
    pub fn values(&self, n: usize) -> Vec<f64> {
        match self {
            MuSpec::Values(v) => v.clone(),
            MuSpec::Schedule => vec![(n as f64).powf(-0.25)],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SymbolSel {
    All,
    List(Vec<Symbol>),
}

impl SymbolSel {
    pub fn resolve(&self, size: usize) -> Vec<Symbol> {
        match self {
            SymbolSel::All => (0..size).collect(),
            SymbolSel::List(v) => v.iter().copied().filter(|&s| s < size).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub n: Vec<usize>,
    pub mu: MuSpec,
    pub a: SymbolSel,
    pub b: SymbolSel,
    pub trials: u64,
    pub seed: u64,
    pub resolution: usize,
    pub eta: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
    pub distortion_cap: f64,
    pub random_trees: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            n: vec![3],
            mu: MuSpec::Values(vec![0.25]),
            a: SymbolSel::All,
            b: SymbolSel::All,
            trials: 100_000,
            seed: 1,
            resolution: 101,
            eta: vec![0.1],
            eps: 0.1,
            delta: 0.1,
            distortion_cap: 0.25,
            random_trees: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub channels: Vec<NamedDmc>,
    pub sdmc: Option<Sdmc>,
    pub state_pmf: Option<Pmf>,
    pub distortion: Option<DistortionFn>,
    pub code: Option<IsacCode>,
    pub tree: Option<StrategyTree>,
    pub grid: Grid,
    pub out_dir: PathBuf,
    /// The text the config was parsed from.
    pub source: String,
}

const KEYS: &[(&str, &[&str])] = &[
    ("experiment", &["kind", "channel", "sdmc", "state_pmf", "distortion", "code", "tree"]),
    (
        "grid",
        &["n", "mu", "a", "b", "trials", "seed", "resolution", "eta", "eps", "delta", "distortion_cap", "random_trees"],
    ),
    ("output", &["dir"]),
];

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<T> = v
        .split([',', ' ', '\t'])
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{t}`"))))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

fn symbols(key: &str, v: &str) -> Result<SymbolSel> {
    if v.trim() == "all" {
        Ok(SymbolSel::All)
    } else {
        list(key, v).map(SymbolSel::List)
    }
}

/// Reads a referenced file, either compiled in or relative to `base`.
fn load_text(spec: &str, base: &Path) -> Result<(String, String)> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let text = builtin(name).ok_or_else(|| Error::Config(format!("no builtin `{name}`")))?;
        return Ok((spec.to_string(), text.to_string()));
    }
    let path = base.join(spec);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::from(e).in_file(&path))?;
    Ok((spec.to_string(), text))
}

fn load_parsed<T: FromStr<Err = Error>>(spec: &str, base: &Path) -> Result<T> {
    let (name, text) = load_text(spec, base)?;
    text.parse().map_err(|e: Error| e.in_file(name))
}

fn load_channel(spec: &str, base: &Path) -> Result<NamedDmc> {
    let dmc = match spec.strip_prefix("bsc:") {
        Some(p) => Dmc::bsc(one("channel", p)?)?,
        None => load_parsed(spec, base)?,
    };
    Ok(NamedDmc { name: spec.to_string(), dmc })
}

impl ExperimentConfig {
    /// Parses a config. Relative paths resolve against `base`; `kind`, when
    /// given, must agree with the file's `kind` key (which may be omitted).
    pub fn parse(text: &str, base: &Path, kind: Option<Kind>) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(format!("line {}: {}", e.line, e.msg)))?;
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::Config(format!("key `{k}` outside any section")));
                }
                continue;
            };
            let allowed = KEYS
                .iter()
                .find(|(s, _)| *s == sec)
                .ok_or_else(|| Error::Config(format!("unknown section [{sec}]")))?
                .1;
            if let Some((k, _)) = props.iter().find(|(k, _)| !allowed.contains(k)) {
                return Err(Error::Config(format!("unknown key `{k}` in [{sec}]")));
            }
        }
        let get = |sec: &str, key: &str| ini.section(Some(sec)).and_then(|p| p.get(key));

        let kind = match (get("experiment", "kind").map(Kind::from_str).transpose()?, kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!("config is for {a}, not {b}")));
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(Error::Config("missing [experiment] kind".into())),
        };

        let mut grid = Grid::default();
        if let Some(v) = get("grid", "n") {
            grid.n = list("n", v)?;
            if grid.n.contains(&0) {
                return Err(Error::Config("n: blocklengths must be positive".into()));
            }
        }
        if let Some(v) = get("grid", "mu") {
            grid.mu = if v.trim() == "n^-1/4" { MuSpec::Schedule } else { MuSpec::Values(list("mu", v)?) };
        }
        if let Some(v) = get("grid", "a") {
            grid.a = symbols("a", v)?;
        }
        if let Some(v) = get("grid", "b") {
            grid.b = symbols("b", v)?;
        }
        if let Some(v) = get("grid", "trials") {
            grid.trials = one("trials", v)?;
        }
        if let Some(v) = get("grid", "seed") {
            grid.seed = one("seed", v)?;
        }
        if let Some(v) = get("grid", "resolution") {
            grid.resolution = one("resolution", v)?;
        }
        if let Some(v) = get("grid", "eta") {
            grid.eta = list("eta", v)?;
        }
        if let Some(v) = get("grid", "eps") {
            grid.eps = one("eps", v)?;
        }
        if let Some(v) = get("grid", "delta") {
            grid.delta = one("delta", v)?;
        }
        if let Some(v) = get("grid", "distortion_cap") {
            grid.distortion_cap = one("distortion_cap", v)?;
        }
        if let Some(v) = get("grid", "random_trees") {
            grid.random_trees = one("random_trees", v)?;
        }

        let channels = match get("experiment", "channel") {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| load_channel(s, base))
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let state_pmf =
            get("experiment", "state_pmf").map(|v| list::<f64>("state_pmf", v).and_then(Pmf::new)).transpose()?;
        let sdmc: Option<Sdmc> = get("experiment", "sdmc").map(|v| load_parsed(v.trim(), base)).transpose()?;
        let distortion = match get("experiment", "distortion").map(str::trim) {
            None => None,
            Some("hamming") => {
                let k = sdmc
                    .as_ref()
                    .map(|s| s.states().size())
                    .ok_or_else(|| Error::Config("`hamming` distortion needs an sdmc or `hamming:<size>`".into()))?;
                Some(DistortionFn::hamming(k)?)
            }
            Some(v) => match v.strip_prefix("hamming:") {
                Some(k) => Some(DistortionFn::hamming(one("distortion", k)?)?),
                None => Some(load_parsed(v, base)?),
            },
        };
        let code = get("experiment", "code").map(|v| load_parsed(v.trim(), base)).transpose()?;
        let tree = get("experiment", "tree").map(|v| load_parsed(v.trim(), base)).transpose()?;
        let out_dir = get("output", "dir").map(|d| base.join(d)).unwrap_or_else(|| PathBuf::from("out"));

        let cfg =
            Self { kind, channels, sdmc, state_pmf, distortion, code, tree, grid, out_dir, source: text.to_string() };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, kind: Option<Kind>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, kind).map_err(|e| match e {
            Error::File { .. } => e,
            e => e.in_file(path),
        })
    }

    /// The built-in configuration for `kind`.
    pub fn default_for(kind: Kind) -> Self {
        Self::parse(kind.default_config(), Path::new("."), Some(kind)).expect("built-in config is valid")
    }

    fn check(&self) -> Result<()> {
        let need = |what: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{} needs `{what}`", self.kind)))
            }
        };
        match self.kind {
            Kind::Lemma1Scan | Kind::OptimalAudit | Kind::SurgeryAudit | Kind::MartingaleAudit | Kind::McDeviation => {
                need("channel", !self.channels.is_empty())
            }
            Kind::IsacFrontier => {
                need("sdmc", self.sdmc.is_some())?;
                need("state_pmf", self.state_pmf.is_some())?;
                need("distortion", self.distortion.is_some())
            }
            Kind::IsacSimulate | Kind::ConverseDemo => {
                need("sdmc", self.sdmc.is_some())?;
                need("state_pmf", self.state_pmf.is_some())?;
                need("distortion", self.distortion.is_some())?;
                need("code", self.code.is_some())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        for k in Kind::ALL {
            let c = ExperimentConfig::default_for(k);
            assert_eq!(c.kind, k);
            assert_eq!(k.name().parse::<Kind>().unwrap(), k);
        }
        let c = ExperimentConfig::default_for(Kind::McDeviation);
        assert_eq!(c.grid.mu, MuSpec::Schedule);
        assert_eq!(c.grid.mu.values(10_000), vec![0.1]);
        let c = ExperimentConfig::default_for(Kind::ConverseDemo);
        assert_eq!(c.code.unwrap().messages(), 4);
        assert_eq!(c.distortion.unwrap(), DistortionFn::hamming(2).unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        let p = Path::new(".");
        assert!(matches!(ExperimentConfig::parse("[grid]\nn = 3\n", p, None), Err(Error::Config(_))));
        assert!(ExperimentConfig::parse("[experiment]\nkind = nope\n", p, None).is_err());
        assert!(ExperimentConfig::parse("[experiment]\nkind = lemma1-scan\nchanel = bsc:0.1\n", p, None).is_err());
        assert!(ExperimentConfig::parse("[experiment]\nkind = lemma1-scan\n", p, None).is_err());
        assert!(ExperimentConfig::parse(
            "[experiment]\nkind = lemma1-scan\nchannel = bsc:0.1\n",
            p,
            Some(Kind::McDeviation)
        )
        .is_err());
        assert!(ExperimentConfig::parse("[experiment]\nkind = lemma1-scan\nchannel = missing.dmc\n", p, None).is_err());
    }

    #[test]
    fn relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("c.dmc"), "dmc 2 2\n1 0\n0 1\n").unwrap();
        std::fs::write(
            dir.path().join("x.ini"),
            "[experiment]\nkind = lemma1-scan\nchannel = c.dmc, bsc:0.2\n[grid]\nn = 2\nmu = 0.3\na = 0\nb = 1\n[output]\ndir = res\n",
        )
        .unwrap();
        let c = ExperimentConfig::load(&dir.path().join("x.ini"), None).unwrap();
        assert_eq!(c.channels.len(), 2);
        assert_eq!(c.channels[0].dmc.prob(0, 0), 1.0);
        assert_eq!(c.out_dir, dir.path().join("res"));
        assert_eq!(c.grid.a, SymbolSel::List(vec![0]));
    }
}
