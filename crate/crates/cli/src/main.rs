use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use valagg_cli::commands::{self, PlotConstants, PlotKind};
use valagg_cli::config::RawConfig;
use valagg_cli::CliResult;

#[derive(Parser)]
#[command(
    name = "valagg",
    version,
    about = "Run and check value-aggregation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write trace.csv and summary.json.
    Run(ExperimentArgs),
    /// Run the Cartesian product of comma-separated axis values.
    Sweep(ExperimentArgs),
    /// Run the built-in verification suite; exits 4 on any failure.
    Verify {
        /// Criterion numbers or bound tags, comma-separated.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Multiply θ in every bound check (deliberately breaks the suite).
        #[arg(long, hide = true, default_value_t = 1.0)]
        corrupt_theta: f64,
    },
    /// Log-log plot of one or more trace CSVs against their envelopes.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// self_value, s_curve or step_norm.
        #[arg(long, default_value = "self_value")]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        g2: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
}

/// Every flag is passed to the config layer as text, so lists and
/// validation behave exactly as in a config file.
#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// counterexample, affine or imitation.
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    /// Affine matrix: rows split by `;`, entries by `,`.
    #[arg(long = "M", value_name = "ROWS")]
    matrix: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    x1: Option<String>,
    /// none, mixing, weighted or weighted-expert.
    #[arg(long)]
    transformer: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// none, uniform, bernoulli or gaussian-unchecked.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    m0: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long, alias = "seeds")]
    seed: Option<String>,
    /// Output directory (default: $VAL_AGG_OUT or ./valagg-out).
    #[arg(long)]
    out: Option<String>,
    /// Comma list of csv, json, svg.
    #[arg(long)]
    emit: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    max_points: Option<String>,
}

impl ExperimentArgs {
    fn into_raw(self) -> CliResult<RawConfig> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::new(),
        };
        let named = [
            ("instance", self.instance),
            ("theta", self.theta),
            ("M", self.matrix),
            ("b", self.b),
            ("alpha", self.alpha),
            ("iters", self.iters),
            ("x1", self.x1),
            ("transformer", self.transformer),
            ("lambda", self.lambda),
            ("q", self.q),
            ("noise", self.noise),
            ("sigma", self.sigma),
            ("m0", self.m0),
            ("r", self.r),
            ("seed", self.seed),
            ("out", self.out),
            ("emit", self.emit),
            ("jobs", self.jobs),
            ("max_points", self.max_points),
        ];
        for pair in &self.set {
            raw.set_pair(pair)?;
        }
        for (key, value) in named {
            if let Some(v) = value {
                raw.set_flag(key, &v)?;
            }
        }
        Ok(raw)
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Run(args) => commands::run(&args.into_raw()?),
        Command::Sweep(args) => commands::sweep(&args.into_raw()?),
        Command::Verify {
            only,
            corrupt_theta,
        } => commands::verify(&only, corrupt_theta),
        Command::Plot {
            traces,
            kind,
            out,
            theta,
            alpha,
            g2,
            eps,
        } => commands::plot(
            &traces,
            PlotKind::parse(&kind)?,
            &out,
            PlotConstants {
                theta,
                alpha,
                g2,
                eps,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
