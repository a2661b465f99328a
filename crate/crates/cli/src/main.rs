use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rw2cf::{
    cmd_cv, cmd_fit, cmd_predict, cmd_report, cmd_simulate, load_synthetic_spec, CliError,
    CliResult, RunConfig,
};

#[derive(Parser)]
#[command(name = "rw2cf", version, about = "Counterfactual monthly forecasts with an RW2 trend")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, value_hint = clap::ValueHint::FilePath)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> CliResult<(RunConfig, PathBuf)> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let out = cfg.out_dir(self.out.as_deref());
        Ok((cfg, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample the posterior: draws.csv, coefficients.json, diagnostics.json.
    Fit(Common),
    /// Counterfactual for the horizon: counterfactual.csv, excess.json.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Draws to use; defaults to draws.csv in the output directory.
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Leave-one-year-out cross-validation: cv_report.json, cv_predictions.csv.
    Cv(Common),
    /// Generate synthetic.csv from a synthetic-data spec given as --config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render ribbon_data.csv, report.md and plot.svg from a counterfactual CSV.
    Report {
        /// Counterfactual CSV; defaults to counterfactual.csv in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Run configuration, used only to locate the output directory.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "Counterfactual report")]
        title: String,
        /// Decimal places in report.md.
        #[arg(long, default_value_t = 0)]
        decimals: usize,
    },
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    match cli.command {
        Command::Fit(c) => {
            let (cfg, out) = c.load()?;
            cmd_fit(&cfg, &out)
        }
        Command::Predict { common, draws } => {
            let (cfg, out) = common.load()?;
            cmd_predict(&cfg, &out, draws.as_deref())
        }
        Command::Cv(c) => {
            let (cfg, out) = c.load()?;
            cmd_cv(&cfg, &out)
        }
        Command::Simulate { config, out, seed } => {
            let mut spec = load_synthetic_spec(&config)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            cmd_simulate(&spec, &out)
        }
        Command::Report {
            input,
            config,
            out,
            title,
            decimals,
        } => {
            let out = match (out, &config) {
                (Some(o), _) => o,
                (None, Some(c)) => RunConfig::load(c)?.out_dir(None),
                (None, None) => PathBuf::from("out"),
            };
            let input = input.unwrap_or_else(|| out.join("counterfactual.csv"));
            cmd_report(&input, &out, &title, decimals)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &CliError) -> u8 {
    e.exit_code() as u8
}
