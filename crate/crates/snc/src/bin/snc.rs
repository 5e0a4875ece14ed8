//! Thin CLI over the library: reproducible experiments to CSV.

use clap::{Args, Parser, Subcommand};
use snc::cli::{self, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "snc", about = "sparse network coding workbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Scenario {
    /// generation size
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// field order: 2, 16/2^4, 256/2^8
    #[arg(long, default_value = "2")]
    q: String,
    /// row weight (density p = w/n)
    #[arg(long)]
    w: Option<usize>,
    /// nonzero-coefficient probability; alternative to --w
    #[arg(long)]
    p: Option<f64>,
    /// channel erasure probability
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Monte Carlo trials
    #[arg(long, default_value_t = 50_000)]
    trials: usize,
    /// horizon in transmissions (default 2n)
    #[arg(long)]
    m_max: Option<usize>,
    /// comma-separated decoded-count thresholds (default 1..n)
    #[arg(long)]
    x_list: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// cap trials at 2000 for quick runs
    #[arg(long, default_value_t = false)]
    fast: bool,
    /// output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Scenario {
    fn config(&self) -> Result<ExperimentConfig, snc::Error> {
        let q = cli::parse_field_order(&self.q)?;
        let m_max = self.m_max.unwrap_or(2 * self.n);
        let x_list = match &self.x_list {
            Some(s) => cli::parse_x_list(s)?,
            None => (1..=self.n).collect(),
        };
        Ok(ExperimentConfig {
            n: self.n,
            q,
            w: self.w,
            p: self.p,
            epsilon: self.epsilon,
            trials: self.trials,
            m_max,
            x_list,
            seed: self.seed,
            fast: self.fast,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// analytical partial-decoding grid
    Model(Scenario),
    /// Monte Carlo campaign
    Simulate(Scenario),
    /// model-vs-simulation deviation report
    Validate(Scenario),
    /// density-tuning schedule
    Tune {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value = "2")]
        q: String,
        /// completion-overhead cap vs RLNC (fraction); "none" removes the cap
        #[arg(long, default_value = "0.03")]
        ant_cap: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// also write a gnuplot script for the schedule
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
    /// ADD/ANT sweep (fixed weights, RLNC, tuned schedule)
    Table1 {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value = "2")]
        q: String,
        #[arg(long, default_value_t = 5000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> Result<(), snc::Error> {
    if let Ok(threads) = std::env::var("SNC_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Model(s) => cli::cmd_model(&s.config()?, s.out.as_deref()),
        Command::Simulate(s) => cli::cmd_simulate(&s.config()?, s.out.as_deref()),
        Command::Validate(s) => cli::cmd_validate(&s.config()?, s.out.as_deref()).map(|_| ()),
        Command::Tune { n, q, ant_cap, out, plot_script } => {
            let q = cli::parse_field_order(&q)?;
            let cap = if ant_cap == "none" {
                None
            } else {
                Some(ant_cap.parse::<f64>().map_err(|e| {
                    snc::Error::BadParams(format!("bad --ant-cap '{ant_cap}': {e}"))
                })?)
            };
            cli::cmd_tune(n, q, cap, out.as_deref(), plot_script.as_deref())
        }
        Command::Table1 { n, q, trials, seed, out } => {
            let q = cli::parse_field_order(&q)?;
            cli::cmd_table1(n, q, trials, seed, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
