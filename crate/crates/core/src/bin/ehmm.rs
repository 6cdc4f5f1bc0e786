use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ehmm::cli::{self, RunConfig};
use ehmm::Error;

#[derive(Parser)]
#[command(
    name = "ehmm",
    version,
    about = "Embedded-HMM sampling for the tanh state-space model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a state/observation sequence into data.csv
    Simulate(Opts),
    /// Run a sampler on data.csv; writes samples.csv and summary.csv (plus timing.csv with --timing)
    Sample(Opts),
    /// Grid-discretized exact posterior marginals; writes oracle.csv
    Oracle(Opts),
    /// Compare samples to the oracle; writes diag.csv
    Report(Opts),
}

#[derive(Args)]
struct Opts {
    /// Config file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; repeat or comma-separate for several chains
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["ehmm", "metropolis"])]
    sampler: Option<String>,
    /// Pool size
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, value_parser = ["fixed", "per-obs"])]
    pool: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long, num_args = 3, value_names = ["LO", "HI", "M"], allow_negative_numbers = true)]
    grid: Option<Vec<String>>,
    /// Probe times for traces and autocorrelations
    #[arg(long, num_args = 1..)]
    probe: Option<Vec<usize>>,
    /// Initial sequence: data, zero or file=PATH
    #[arg(long)]
    init: Option<String>,
    /// Treat a grid-too-small warning as an error
    #[arg(long)]
    strict: bool,
    /// Also write wall-clock seconds per update to timing.csv
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_parser = ["independence", "random-walk"])]
    proposal: Option<String>,
    #[arg(long = "proposal-sd")]
    proposal_sd: Option<f64>,
    #[arg(long = "max-lag")]
    max_lag: Option<usize>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    oracle: Option<PathBuf>,
}

impl Opts {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let mut set = |k: &str, v: Option<String>| -> Result<(), Error> {
            match v {
                Some(v) => cfg.set(k, &v),
                None => Ok(()),
            }
        };
        let s = |v: &Option<f64>| v.map(|x| x.to_string());
        let u = |v: &Option<usize>| v.map(|x| x.to_string());
        let p = |v: &Option<PathBuf>| v.as_ref().map(|x| x.display().to_string());
        set(
            "seed",
            (!self.seed.is_empty()).then(|| self.seed.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
        )?;
        set("out", p(&self.out))?;
        set("sampler", self.sampler.clone())?;
        set("K", u(&self.k))?;
        set("alpha", s(&self.alpha))?;
        set("pool", self.pool.clone())?;
        set("mu", s(&self.mu))?;
        set("nu", s(&self.nu))?;
        set("iters", u(&self.iters))?;
        set("burnin", u(&self.burnin))?;
        set("thin", u(&self.thin))?;
        if let Some(g) = &self.grid {
            set("grid_lo", Some(g[0].clone()))?;
            set("grid_hi", Some(g[1].clone()))?;
            set("grid_m", Some(g[2].clone()))?;
        }
        set(
            "probe",
            self.probe
                .as_ref()
                .map(|v| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")),
        )?;
        set("init", self.init.clone())?;
        if self.strict {
            set("strict", Some("true".into()))?;
        }
        if self.timing {
            set("timing", Some("true".into()))?;
        }
        set("sigma", s(&self.sigma))?;
        set("eta", s(&self.eta))?;
        set("tau", s(&self.tau))?;
        set("n", u(&self.n))?;
        set("proposal", self.proposal.clone())?;
        set("proposal_sd", s(&self.proposal_sd))?;
        set("max_lag", u(&self.max_lag))?;
        set("data", p(&self.data))?;
        set("samples", p(&self.samples))?;
        set("oracle", p(&self.oracle))?;
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate(o) => {
            let path = cli::simulate(&o.resolve()?)?;
            println!("wrote {}", path.display());
        }
        Command::Sample(o) => {
            let cfg = o.resolve()?;
            for (seed, rec) in cfg.seeds.iter().zip(cli::sample(&cfg)?) {
                let secs: f64 = rec.seconds.iter().sum();
                println!(
                    "seed {seed}: {} iterations, {} stored samples, {secs:.3} s",
                    rec.iterations(),
                    rec.samples.len()
                );
            }
        }
        Command::Oracle(o) => {
            let cfg = o.resolve()?;
            cli::oracle(&cfg)?;
            println!("wrote {}", cfg.oracle_path().display());
        }
        Command::Report(o) => {
            let cfg = o.resolve()?;
            let r = cli::report(&cfg)?;
            println!("mean |P(x_t > 0) error| = {:.4}", r.error.mean);
            for (t, _, acf) in &r.probes {
                if let Some(lag10) = acf.as_ref().and_then(|a| a.get(10)) {
                    println!("t = {t}: lag-10 autocorrelation {lag10:.3}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
