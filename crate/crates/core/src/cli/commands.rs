//! `simulate`, `sample`, `oracle` and `report`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::baselines::{grid_oracle_marginals, run_metropolis_observed, GridOracle, MetropolisConfig};
use crate::diagnostics::{autocorr, oracle_error_from_samples, sign_switch_count, OracleError};
use crate::ehmm::{run_chain_observed, ChainRecord, EhmmConfig};
use crate::error::{domain, usage, Result};
use crate::model::{ObsSeq, StateSeq};
use crate::rng::{purpose, RngStream};
use crate::tanh::{gauss_pool_kernels, make_tanh_model, TanhModel};

use super::config::{InitRule, RunConfig, SamplerKind};
use super::csvio::{self, finish, fmt_f64, writer};

/// File name of the resolved-config artifact written by every command.
pub const RESOLVED_CONFIG: &str = "config_resolved.txt";

fn prepare(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join(RESOLVED_CONFIG), cfg.to_text())?;
    Ok(())
}

fn model(cfg: &RunConfig) -> Result<TanhModel> {
    make_tanh_model(cfg.model_params())?.with_init(cfg.initial_dist())
}

/// Simulate states and observations; writes `data.csv`.
pub fn simulate(cfg: &RunConfig) -> Result<PathBuf> {
    prepare(cfg)?;
    let m = model(cfg)?;
    let mut rng = RngStream::new(cfg.seeds[0], 0).derive(&[purpose::SIMULATE]);
    let (x, y) = m.simulate(cfg.n, &mut rng)?;
    let path = cfg.data_path();
    csvio::write_data(&path, x.as_slice(), y.as_slice())?;
    Ok(path)
}

fn load_observations(cfg: &RunConfig) -> Result<ObsSeq<f64>> {
    let data = csvio::read_data(&cfg.data_path())?;
    if data.y.len() != cfg.n {
        return Err(usage!(
            "config has n = {} but {} holds {} observations",
            cfg.n,
            cfg.data_path().display(),
            data.y.len()
        ));
    }
    ObsSeq::new(data.y)
}

fn initial_states(cfg: &RunConfig, y: &ObsSeq<f64>) -> Result<StateSeq<f64>> {
    let x = match &cfg.init {
        InitRule::Data => y.as_slice().to_vec(),
        InitRule::Zero => vec![0.0; y.len()],
        InitRule::File(p) => {
            let x = csvio::read_states(p)?;
            if x.len() != y.len() {
                return Err(usage!("initial state file has {} states, need {}", x.len(), y.len()));
            }
            x
        }
    };
    StateSeq::new(x)
}

fn with_seed_suffix(path: &Path, seed: u64, many: bool) -> PathBuf {
    if !many {
        return path.to_path_buf();
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}_seed{seed}.csv"))
}

fn run_one(
    cfg: &RunConfig,
    m: &TanhModel,
    y: &ObsSeq<f64>,
    x0: &StateSeq<f64>,
    seed: u64,
) -> Result<(ChainRecord<f64>, Vec<usize>)> {
    let mut switches = Vec::with_capacity(cfg.iters + 1);
    let observe = |_: usize, x: &StateSeq<f64>| switches.push(sign_switch_count(x.as_slice()));
    let rec = match cfg.sampler {
        SamplerKind::Ehmm => {
            let kernels = gauss_pool_kernels(cfg.pool_strategy(), y, &cfg.model_params(), cfg.alpha)?;
            let ec = EhmmConfig::new(cfg.pool_size, kernels)
                .iterations(cfg.iters)
                .burn_in(cfg.burnin)
                .thin(cfg.thin)
                .seed(seed);
            run_chain_observed(m, &ec, x0, y, observe)?
        }
        SamplerKind::Metropolis => {
            let mc = MetropolisConfig::new(cfg.proposal())
                .iterations(cfg.iters)
                .burn_in(cfg.burnin)
                .thin(cfg.thin)
                .seed(seed);
            run_metropolis_observed(m, &mc, x0, y, observe)?
        }
    };
    Ok((rec, switches))
}

fn write_chain(cfg: &RunConfig, seed: u64, many: bool, rec: &ChainRecord<f64>, switches: &[usize]) -> Result<()> {
    let mut w = writer(&with_seed_suffix(&cfg.samples_path(), seed, many), &["iter", "t", "x"])?;
    for (iter, s) in rec.sample_iters.iter().zip(&rec.samples) {
        for (t, x) in s.as_slice().iter().enumerate() {
            w.write_record([iter.to_string(), t.to_string(), fmt_f64(*x)])?;
        }
    }
    finish(w)?;

    let mut w = writer(
        &with_seed_suffix(&cfg.out.join("summary.csv"), seed, many),
        &["iter", "log_joint", "switches", "moves", "ops"],
    )?;
    for i in 0..=rec.iterations() {
        w.write_record([
            i.to_string(),
            fmt_f64(rec.log_joint[i]),
            switches[i].to_string(),
            rec.moves[i].to_string(),
            rec.ops[i].to_string(),
        ])?;
    }
    finish(w)?;

    if !cfg.timing {
        return Ok(());
    }
    let mut w = writer(
        &with_seed_suffix(&cfg.out.join("timing.csv"), seed, many),
        &["iter", "seconds"],
    )?;
    for (i, s) in rec.seconds.iter().enumerate() {
        w.write_record([i.to_string(), fmt_f64(*s)])?;
    }
    finish(w)
}

/// Run the configured sampler from the data file, once per seed.
///
/// Writes `samples.csv`, `summary.csv` and, with `timing` set, `timing.csv`
/// (suffixed with `_seed<S>` when several seeds are given; chains then run
/// in parallel).
pub fn sample(cfg: &RunConfig) -> Result<Vec<ChainRecord<f64>>> {
    prepare(cfg)?;
    let m = model(cfg)?;
    let y = load_observations(cfg)?;
    let x0 = initial_states(cfg, &y)?;
    let many = cfg.seeds.len() > 1;
    let results: Vec<Result<(ChainRecord<f64>, Vec<usize>)>> = if many {
        std::thread::scope(|s| {
            let handles: Vec<_> = cfg
                .seeds
                .iter()
                .map(|&seed| {
                    let (m, y, x0) = (&m, &y, &x0);
                    s.spawn(move || run_one(cfg, m, y, x0, seed))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect()
        })
    } else {
        vec![run_one(cfg, &m, &y, &x0, cfg.seeds[0])]
    };
    let mut records = Vec::with_capacity(results.len());
    for (seed, res) in cfg.seeds.iter().zip(results) {
        let (rec, switches) = res?;
        write_chain(cfg, *seed, many, &rec, &switches)?;
        records.push(rec);
    }
    Ok(records)
}

/// Grid-oracle marginals for the data file; writes `oracle.csv`.
pub fn oracle(cfg: &RunConfig) -> Result<GridOracle> {
    prepare(cfg)?;
    let m = model(cfg)?;
    let y = load_observations(cfg)?;
    let o = grid_oracle_marginals(&m, &y, &cfg.grid())?;
    if let Some(msg) = o.warning() {
        if cfg.strict {
            return Err(domain!("{msg}"));
        }
        eprintln!("warning: {msg}");
    }
    let mut w = writer(&cfg.oracle_path(), &["t", "p_positive", "mean", "sd"])?;
    for t in 0..y.len() {
        w.write_record([
            t.to_string(),
            fmt_f64(o.p_positive[t]),
            fmt_f64(o.mean[t]),
            fmt_f64(o.sd[t]),
        ])?;
    }
    finish(w)?;
    Ok(o)
}

/// Diagnostics computed by [`report`].
#[derive(Clone, Debug)]
pub struct Report {
    pub error: OracleError,
    /// `(t, trace, acf)` per probe time; `acf` is `None` for a constant trace.
    pub probes: Vec<(usize, Vec<f64>, Option<Vec<f64>>)>,
}

/// Compare samples against the oracle; writes `diag.csv`.
///
/// `diag.csv` is long format `metric,t,k,value` with metrics `abs_err`
/// (per time), `mean_abs_err`, `trace` (`k` = iteration) and `acf`
/// (`k` = lag) for each probe time. Fields that do not apply are empty.
pub fn report(cfg: &RunConfig) -> Result<Report> {
    prepare(cfg)?;
    let stored = csvio::read_samples(&cfg.samples_path())?;
    if stored.is_empty() {
        return Err(usage!("{} holds no samples", cfg.samples_path().display()));
    }
    let oracle = csvio::read_oracle(&cfg.oracle_path())?;
    let iters: Vec<usize> = stored.keys().copied().collect();
    let samples: Vec<Vec<f64>> = stored.into_values().collect();
    let n = samples[0].len();
    if oracle.len() != n {
        return Err(usage!("samples have n = {n} but the oracle has {}", oracle.len()));
    }
    if let Some(&t) = cfg.probes.iter().find(|&&t| t >= n) {
        return Err(usage!("probe time {t} out of range for n = {n}"));
    }
    let p: Vec<f64> = oracle.iter().map(|r| r.p_positive).collect();
    let error = oracle_error_from_samples(&samples, &p)?;

    let mut w = writer(&cfg.out.join("diag.csv"), &["metric", "t", "k", "value"])?;
    for (t, e) in error.per_time.iter().enumerate() {
        w.write_record(["abs_err", &t.to_string(), "", &fmt_f64(*e)])?;
    }
    w.write_record(["mean_abs_err", "", "", &fmt_f64(error.mean)])?;
    let mut probes = Vec::new();
    for &t in &cfg.probes {
        let trace: Vec<f64> = samples.iter().map(|s| s[t]).collect();
        for (i, v) in iters.iter().zip(&trace) {
            w.write_record(["trace", &t.to_string(), &i.to_string(), &fmt_f64(*v)])?;
        }
        let max_lag = cfg.max_lag.min(trace.len().saturating_sub(1));
        let acf = autocorr(&trace, max_lag).ok();
        match &acf {
            Some(acf) => {
                for (lag, v) in acf.iter().enumerate() {
                    w.write_record(["acf", &t.to_string(), &lag.to_string(), &fmt_f64(*v)])?;
                }
            }
            None => eprintln!("warning: autocorrelation undefined for the trace at t={t}"),
        }
        probes.push((t, trace, acf));
    }
    finish(w)?;
    Ok(Report { error, probes })
}
