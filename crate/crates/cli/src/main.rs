//! `ispval`: run the experiments or compute a p-value from a file of weighted draws.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 when the run itself fails.

mod commands;
mod input;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use ispval::experiments::KeyValues;

#[derive(Debug, Parser)]
#[command(name = "ispval", version, about = "Valid importance-sampling p-values and their experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Master seed; recorded in the manifest.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Output directory (default: runs/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo sample size.
    #[arg(long, global = true)]
    n: Option<u64>,
    #[arg(long, global = true)]
    replications: Option<u64>,
    /// `key = value` file of per-experiment settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a p-value from a CSV of weighted draws and print it as JSON.
    Pvalue {
        /// Input file (`-` for stdin) with header `role,stat,log_w`.
        input: PathBuf,
        /// p_hat, p_tilde, p_hat_star, p_tilde_star or q_hat.
        #[arg(long, default_value = "p_tilde_star")]
        estimator: String,
        /// Confidence level of the q_hat upper limit.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Mean squared error of the four estimators on the Gaussian grid.
    GaussianMse,
    /// Null cdfs of the four estimators on the Gaussian grid.
    GaussianCdf,
    /// Bonferroni multiple testing with permutation tests.
    Multitest,
    /// Coverage of Rasch confidence sets built by inversion.
    RaschCi,
    /// Conditional-Poisson trajectory on the structured 52 x 102 table.
    Table52,
    /// Co-occurrence test on the finch incidence matrix.
    Finch,
    /// Validity of the lag-tilted point-process test on null spike trains.
    Ppvalidity,
    /// Check the weighted-rank inequality on random rational instances.
    Lemma1 {
        #[arg(long, default_value_t = 10_000)]
        instances: u64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Pvalue { .. } => "pvalue",
            Command::GaussianMse => "gaussian-mse",
            Command::GaussianCdf => "gaussian-cdf",
            Command::Multitest => "multitest",
            Command::RaschCi => "rasch-ci",
            Command::Table52 => "table52",
            Command::Finch => "finch",
            Command::Ppvalidity => "ppvalidity",
            Command::Lemma1 { .. } => "lemma1",
        }
    }
}

/// Settings shared by every subcommand after merging config file, `--set` and flags.
pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub settings: KeyValues,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}\n");
    eprintln!("{}", Cli::command().render_help());
    ExitCode::from(1)
}

fn settings(global: &GlobalArgs) -> Result<KeyValues, String> {
    let mut kv = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            KeyValues::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => KeyValues::default(),
    };
    for pair in &global.set {
        let (k, v) = pair.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{pair}`"))?;
        kv.insert(k.trim(), v.trim());
    }
    if let Some(n) = global.n {
        kv.insert("n", n.to_string());
    }
    if let Some(r) = global.replications {
        kv.insert("replications", r.to_string());
    }
    Ok(kv)
}

fn dispatch(argv: impl IntoIterator<Item = OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_help());
            return ExitCode::from(1);
        }
    };
    let settings = match settings(&cli.global) {
        Ok(kv) => kv,
        Err(msg) => return usage_error(&msg),
    };
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let name = cli.command.name();
    let ctx = Context {
        seed: cli.global.seed,
        out: cli.global.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(name)),
        settings,
    };
    let result = match &cli.command {
        Command::Pvalue { input, estimator, level } => {
            commands::pvalue(input, estimator, *level, cli.global.out.is_some().then_some(&ctx))
        }
        Command::GaussianMse => commands::gaussian_mse(&ctx),
        Command::GaussianCdf => commands::gaussian_cdf(&ctx),
        Command::Multitest => commands::multitest(&ctx),
        Command::RaschCi => commands::rasch_ci(&ctx),
        Command::Table52 => commands::table52(&ctx),
        Command::Finch => commands::finch(&ctx),
        Command::Ppvalidity => commands::ppvalidity(&ctx),
        Command::Lemma1 { instances } => commands::lemma1(&ctx, *instances),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {name}: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    dispatch(std::env::args_os())
}
