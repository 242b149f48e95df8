mod artifact;
mod check;
mod commands;
mod config;
mod error;
mod reproduce;
mod selfcheck;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::artifact::Artifacts;
use crate::config::{Form, RunConfig};
use crate::error::CliError;

/// Asian option pricing, density estimation and Leland hedging experiments.
///
/// Exit codes: 0 success, 1 acceptance FAIL, 2 config error, 3 estimator
/// error, 4 sample-quality error.
#[derive(Debug, Parser)]
#[command(name = "asianhedge", version)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel engines.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Use the paper's sample counts (L = 500000) for pricing and density.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[arg(long, global = true, hide = true)]
    sabotage: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Option value C0 across a volatility ladder.
    Price(PriceArgs),
    /// Hedging error of the Leland strategy across revision counts.
    Hedge(HedgeArgs),
    /// Density of the exponential functional with quality diagnostics.
    Density(DensityArgs),
    /// All tables of the simulation study and a PASS/FAIL summary.
    ReproduceTables,
    /// Invariant suite at reduced sample counts.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
struct PriceArgs {
    #[arg(long, value_delimiter = ',')]
    sigma_list: Option<Vec<f64>>,
    #[arg(long)]
    strike: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    /// Monte Carlo samples L.
    #[arg(long)]
    samples: Option<usize>,
    /// Inner time steps N per sample.
    #[arg(long)]
    n_inner: Option<usize>,
    #[arg(long, value_enum)]
    form: Option<Form>,
}

#[derive(Debug, Args)]
struct HedgeArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long)]
    strike: Option<f64>,
    #[arg(long)]
    kappa0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Paths M per revision count.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    pool_samples: Option<usize>,
    #[arg(long)]
    n_inner: Option<usize>,
    #[arg(long)]
    refine: Option<usize>,
    /// Also write one row per simulated path.
    #[arg(long)]
    dump_paths: bool,
}

#[derive(Debug, Args)]
struct DensityArgs {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Number of z grid points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    direct_samples: Option<usize>,
    /// Also estimate dq/dz and dq/dv.
    #[arg(long)]
    derivatives: bool,
    /// Largest tolerated fraction of discarded bridge samples.
    #[arg(long)]
    max_discard: Option<f64>,
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    /// Repeat the suite for this many consecutive seeds.
    #[arg(long)]
    seeds: Option<u64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Cli {
    fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        set(&mut c.seed, self.seed);
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        set(&mut c.out, self.out.clone());
        c.paper_scale |= self.paper_scale;
        c.sabotage |= self.sabotage;
        match &self.command {
            Command::Price(a) => {
                let p = &mut c.price;
                set(&mut p.sigma_list, a.sigma_list.clone());
                set(&mut p.strike, a.strike);
                set(&mut p.s0, a.s0);
                set(&mut p.samples, a.samples);
                set(&mut p.n_inner, a.n_inner);
                set(&mut p.form, a.form);
            }
            Command::Hedge(a) => {
                let h = &mut c.hedge;
                set(&mut h.sigma, a.sigma);
                set(&mut h.s0, a.s0);
                set(&mut h.strike, a.strike);
                set(&mut h.kappa0, a.kappa0);
                set(&mut h.alpha, a.alpha);
                set(&mut h.n_list, a.n_list.clone());
                set(&mut h.paths, a.paths);
                set(&mut h.pool_samples, a.pool_samples);
                set(&mut h.n_inner, a.n_inner);
                set(&mut h.refine, a.refine);
                h.dump_paths |= a.dump_paths;
            }
            Command::Density(a) => {
                let d = &mut c.density;
                set(&mut d.sigma, a.sigma);
                set(&mut d.v, a.v);
                set(&mut d.samples, a.samples);
                set(&mut d.nodes, a.nodes);
                set(&mut d.points, a.points);
                set(&mut d.direct_samples, a.direct_samples);
                d.derivatives |= a.derivatives;
                set(&mut d.max_discard, a.max_discard);
            }
            Command::Selfcheck(a) => set(&mut c.selfcheck.seeds, a.seeds),
            Command::ReproduceTables => {}
        }
        c.resolve()
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    {
        eprintln!("note: built without the parallel feature; ignoring --threads {n}");
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = cli.run_config()?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(true);
    }
    init_threads(cfg.threads)?;
    let art = Artifacts::new(&cfg)?;
    match cli.command {
        Command::Price(_) => commands::price(&cfg, &art),
        Command::Hedge(_) => commands::hedge(&cfg, &art),
        Command::Density(_) => commands::density(&cfg, &art),
        Command::ReproduceTables => reproduce::reproduce(&cfg, &art),
        Command::Selfcheck(_) => selfcheck::selfcheck(&cfg, &art),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
