use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use dstsp_lab::config::List;
use dstsp_lab::{ConfigError, ExperimentConfig, ModelSpec, Subcommand};

#[derive(Parser)]
#[command(name = "dstsp-lab", version, about = "Dynamic stochastic TSP laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Fit the small-time exponent and agility on a grid of anchors
    EstimateAgility(Flags),
    /// Tile the unit support with root cells
    BuildCover(Flags),
    /// Tours through iid targets drawn from a density
    RunDstsp(Flags),
    /// Tours under the worst-case density against the adversarial bounds
    RunAdversarial(Flags),
    /// Optimal plan of a hierarchical collection instance
    HcpSolve(Flags),
    /// Evaluate the lower and upper bound constants
    CheckBounds(Flags),
    /// Greedy and exhaustive orienteering counts against the budget bound
    CboCheck(Flags),
    /// Balls-in-bins tail frequencies against the concentration bounds
    Concentration(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model name or inline JSON object
    #[arg(long)]
    model: Option<ModelSpec>,
    /// uniform, linear, worst, anti, or a GridField JSON file
    #[arg(long)]
    density: Option<String>,
    /// Comma-separated target counts
    #[arg(long)]
    n: Option<List<usize>>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated exponents (concentration) or regularization level (cbo-check)
    #[arg(long)]
    zeta: Option<List<f64>>,
    #[arg(long)]
    eps0: Option<f64>,
    /// Worker threads; defaults to the available cores
    #[arg(long, env = "DSTSP_LAB_THREADS")]
    threads: Option<usize>,
    /// Exit nonzero when a checked property fails
    #[arg(long)]
    assert: bool,
    /// Output directory for tables and the run manifest
    #[arg(long)]
    out: Option<PathBuf>,
    /// HCP instance JSON for hcp-solve
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Comma-separated budgets for cbo-check
    #[arg(long)]
    lambda: Option<List<f64>>,
    /// Comma-separated bin counts for concentration
    #[arg(long)]
    m: Option<List<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Grid cells per axis
    #[arg(long)]
    grid: Option<usize>,
    /// Reachable-set samples per agility estimate
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    s: Option<u32>,
    /// Cover branching (measured when absent)
    #[arg(long)]
    b: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    int_g_inv: Option<f64>,
}

impl Flags {
    fn into_config(self, sub: Subcommand) -> Result<ExperimentConfig, ConfigError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        c.subcommand = Some(sub);
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $(if self.$f.is_some() { c.$f = self.$f; })* };
        }
        set!(model, density, seeds, seed, delta, trials, samples, s);
        if let Some(List(v)) = self.lambda {
            c.lambda = v;
        }
        if let Some(List(v)) = self.m {
            c.m = v;
        }
        c.n = self.n.map(|l| l.0).or(c.n);
        c.zeta = self.zeta.map(|l| l.0).or(c.zeta);
        set_opt!(eps0, threads, out, instance, grid, b, alpha, gamma, j, int_g_inv);
        c.assert = self.assert;
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, flags) = match cli.command {
        Command::EstimateAgility(f) => (Subcommand::EstimateAgility, f),
        Command::BuildCover(f) => (Subcommand::BuildCover, f),
        Command::RunDstsp(f) => (Subcommand::RunDstsp, f),
        Command::RunAdversarial(f) => (Subcommand::RunAdversarial, f),
        Command::HcpSolve(f) => (Subcommand::HcpSolve, f),
        Command::CheckBounds(f) => (Subcommand::CheckBounds, f),
        Command::CboCheck(f) => (Subcommand::CboCheck, f),
        Command::Concentration(f) => (Subcommand::Concentration, f),
    };
    let cfg = match flags.into_config(sub).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = pool.install(|| {
        let mut stdout = std::io::BufWriter::new(std::io::stdout());
        dstsp_lab::run(&cfg, &mut stdout)
    });
    match result {
        Ok(out) if out.violations.is_empty() => ExitCode::SUCCESS,
        Ok(out) => {
            for v in &out.violations {
                eprintln!("violation: {v}");
            }
            if cfg.assert {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
