//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default; [`RunConfig::to_text`] writes all of them back out in the same
//! grammar, so a resolved file reproduces a run exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::{GridSpec, ScalarProposal};
use crate::error::{usage, Result};
use crate::tanh::{InitialDist, PoolStrategy, TanhModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    Ehmm,
    Metropolis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolKind {
    Fixed,
    PerObs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProposalKind {
    Independence,
    RandomWalk,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitRule {
    Data,
    Zero,
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub sigma: f64,
    pub eta: f64,
    pub tau: f64,
    pub n: usize,
    pub init_mean: f64,
    pub init_sd: f64,
    pub sampler: SamplerKind,
    pub pool_size: usize,
    pub alpha: f64,
    pub pool: PoolKind,
    pub mu: f64,
    pub nu: f64,
    pub proposal: ProposalKind,
    pub proposal_sd: f64,
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_m: usize,
    pub probes: Vec<usize>,
    pub max_lag: usize,
    pub init: InitRule,
    pub strict: bool,
    /// Write wall-clock seconds per update to `timing.csv`.
    pub timing: bool,
    pub data: Option<PathBuf>,
    pub samples: Option<PathBuf>,
    pub oracle: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sigma: 2.5,
            eta: 2.5,
            tau: 0.4,
            n: 1000,
            init_mean: 0.0,
            init_sd: 1.0,
            sampler: SamplerKind::Ehmm,
            pool_size: 10,
            alpha: 0.0,
            pool: PoolKind::Fixed,
            mu: 0.0,
            nu: 1.0,
            proposal: ProposalKind::Independence,
            proposal_sd: 1.0,
            iters: 600,
            burnin: 0,
            thin: 1,
            seeds: vec![1],
            out: PathBuf::from("out"),
            grid_lo: -3.0,
            grid_hi: 3.0,
            grid_m: 400,
            probes: vec![200, 675],
            max_lag: 20,
            init: InitRule::Data,
            strict: false,
            timing: false,
            data: None,
            samples: None,
            oracle: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| usage!("invalid value for {key}: {v:?}"))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl SamplerKind {
    fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Ehmm => "ehmm",
            SamplerKind::Metropolis => "metropolis",
        }
    }
}

impl FromStr for SamplerKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ehmm" => Ok(SamplerKind::Ehmm),
            "metropolis" => Ok(SamplerKind::Metropolis),
            _ => Err(usage!("sampler must be ehmm or metropolis, got {s:?}")),
        }
    }
}

impl PoolKind {
    fn as_str(self) -> &'static str {
        match self {
            PoolKind::Fixed => "fixed",
            PoolKind::PerObs => "per-obs",
        }
    }
}

impl FromStr for PoolKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(PoolKind::Fixed),
            "per-obs" => Ok(PoolKind::PerObs),
            _ => Err(usage!("pool must be fixed or per-obs, got {s:?}")),
        }
    }
}

impl ProposalKind {
    fn as_str(self) -> &'static str {
        match self {
            ProposalKind::Independence => "independence",
            ProposalKind::RandomWalk => "random-walk",
        }
    }
}

impl FromStr for ProposalKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independence" => Ok(ProposalKind::Independence),
            "random-walk" => Ok(ProposalKind::RandomWalk),
            _ => Err(usage!("proposal must be independence or random-walk, got {s:?}")),
        }
    }
}

impl FromStr for InitRule {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "data" => Ok(InitRule::Data),
            "zero" => Ok(InitRule::Zero),
            _ => match s.strip_prefix("file=") {
                Some(p) if !p.is_empty() => Ok(InitRule::File(PathBuf::from(p))),
                _ => Err(usage!("init must be data, zero or file=PATH, got {s:?}")),
            },
        }
    }
}

impl std::fmt::Display for InitRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitRule::Data => f.write_str("data"),
            InitRule::Zero => f.write_str("zero"),
            InitRule::File(p) => write!(f, "file={}", p.display()),
        }
    }
}

impl RunConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "sigma" => self.sigma = parse(key, v)?,
            "eta" => self.eta = parse(key, v)?,
            "tau" => self.tau = parse(key, v)?,
            "n" => self.n = parse(key, v)?,
            "init_mean" => self.init_mean = parse(key, v)?,
            "init_sd" => self.init_sd = parse(key, v)?,
            "sampler" => self.sampler = v.parse()?,
            "K" => self.pool_size = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "pool" => self.pool = v.parse()?,
            "mu" => self.mu = parse(key, v)?,
            "nu" => self.nu = parse(key, v)?,
            "proposal" => self.proposal = v.parse()?,
            "proposal_sd" => self.proposal_sd = parse(key, v)?,
            "iters" => self.iters = parse(key, v)?,
            "burnin" => self.burnin = parse(key, v)?,
            "thin" => self.thin = parse(key, v)?,
            "seed" => self.seeds = parse_list(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "grid_lo" => self.grid_lo = parse(key, v)?,
            "grid_hi" => self.grid_hi = parse(key, v)?,
            "grid_m" => self.grid_m = parse(key, v)?,
            "probe" => self.probes = parse_list(key, v)?,
            "max_lag" => self.max_lag = parse(key, v)?,
            "init" => self.init = v.parse()?,
            "strict" => self.strict = parse(key, v)?,
            "timing" => self.timing = parse(key, v)?,
            "data" => self.data = (!v.is_empty()).then(|| PathBuf::from(v)),
            "samples" => self.samples = (!v.is_empty()).then(|| PathBuf::from(v)),
            "oracle" => self.oracle = (!v.is_empty()).then(|| PathBuf::from(v)),
            other => return Err(usage!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Apply every setting in a config text, in order.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage!("config line {}: expected key = value", lineno + 1))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Check value ranges shared by all commands.
    pub fn validate(&self) -> Result<()> {
        self.model_params().validate()?;
        if !(self.init_sd > 0.0 && self.init_sd.is_finite()) {
            return Err(usage!("init_sd must be positive"));
        }
        if self.n == 0 {
            return Err(usage!("n must be >= 1"));
        }
        if self.pool_size == 0 {
            return Err(usage!("K must be >= 1"));
        }
        if !(self.alpha.abs() < 1.0) {
            return Err(usage!("alpha must lie in (-1, 1)"));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(usage!("nu must be positive"));
        }
        self.proposal().validate()?;
        if self.thin == 0 {
            return Err(usage!("thin must be >= 1"));
        }
        if self.burnin > self.iters {
            return Err(usage!("burnin must not exceed iters"));
        }
        if self.seeds.is_empty() {
            return Err(usage!("at least one seed is required"));
        }
        self.grid().validate()
    }

    pub fn model_params(&self) -> TanhModelParams {
        TanhModelParams {
            sigma: self.sigma,
            eta: self.eta,
            tau: self.tau,
        }
    }

    pub fn initial_dist(&self) -> InitialDist {
        InitialDist {
            mean: self.init_mean,
            sd: self.init_sd,
        }
    }

    pub fn pool_strategy(&self) -> PoolStrategy {
        match self.pool {
            PoolKind::Fixed => PoolStrategy::Fixed {
                mu: self.mu,
                nu: self.nu,
            },
            PoolKind::PerObs => PoolStrategy::PerObs,
        }
    }

    pub fn proposal(&self) -> ScalarProposal {
        match self.proposal {
            ProposalKind::Independence => ScalarProposal::Independence {
                mean: 0.0,
                sd: self.proposal_sd,
            },
            ProposalKind::RandomWalk => ScalarProposal::RandomWalk { sd: self.proposal_sd },
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            lo: self.grid_lo,
            hi: self.grid_hi,
            m: self.grid_m,
        }
    }

    pub fn data_path(&self) -> PathBuf {
        self.data.clone().unwrap_or_else(|| self.out.join("data.csv"))
    }

    pub fn samples_path(&self) -> PathBuf {
        self.samples.clone().unwrap_or_else(|| self.out.join("samples.csv"))
    }

    pub fn oracle_path(&self) -> PathBuf {
        self.oracle.clone().unwrap_or_else(|| self.out.join("oracle.csv"))
    }

    /// The config with every default made explicit, in `key = value` form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("sigma", self.sigma.to_string());
        kv("eta", self.eta.to_string());
        kv("tau", self.tau.to_string());
        kv("n", self.n.to_string());
        kv("init_mean", self.init_mean.to_string());
        kv("init_sd", self.init_sd.to_string());
        kv("sampler", self.sampler.as_str().into());
        kv("K", self.pool_size.to_string());
        kv("alpha", self.alpha.to_string());
        kv("pool", self.pool.as_str().into());
        kv("mu", self.mu.to_string());
        kv("nu", self.nu.to_string());
        kv("proposal", self.proposal.as_str().into());
        kv("proposal_sd", self.proposal_sd.to_string());
        kv("iters", self.iters.to_string());
        kv("burnin", self.burnin.to_string());
        kv("thin", self.thin.to_string());
        kv("seed", join(&self.seeds));
        kv("out", self.out.display().to_string());
        kv("grid_lo", self.grid_lo.to_string());
        kv("grid_hi", self.grid_hi.to_string());
        kv("grid_m", self.grid_m.to_string());
        kv("probe", join(&self.probes));
        kv("max_lag", self.max_lag.to_string());
        kv("init", self.init.to_string());
        kv("strict", self.strict.to_string());
        kv("timing", self.timing.to_string());
        kv("data", self.data_path().display().to_string());
        kv("samples", self.samples_path().display().to_string());
        kv("oracle", self.oracle_path().display().to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# demo\nsigma = 0.1\nseed = 3, 4\nprobe = 5\ninit = file=x.csv\nK=20\n")
            .unwrap();
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.pool_size, 20);
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back.to_text(), cfg.to_text());
        assert_eq!(back.sigma, 0.1);
        assert_eq!(back.init, InitRule::File("x.csv".into()));
    }

    #[test]
    fn bad_lines_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_text("sigma 2").is_err());
        assert!(cfg.apply_text("bogus = 1").is_err());
        assert!(cfg.apply_text("sampler = gibbs").is_err());
        assert!(cfg.apply_text("init = file=").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.burnin = cfg.iters + 1;
        assert!(cfg.validate().is_err());
    }
}
