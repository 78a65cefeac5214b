use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mmba::harness::{detection_curves, emit, run_figure, sweep, CurveResult, OutputFormat, Profile, SweepAxis, AXIS_NAMES, FIGURES};
use mmba::ExperimentConfig;

/// Monte-Carlo detection curves for statistics-based mm-Wave beam alignment.
#[derive(Parser, Debug)]
#[command(name = "mmba", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One experiment: P_D(T) for every enabled estimator.
    Run(Common),
    /// Sweep one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// codebook_seed, kappa, comb_size, chains_kappa, ue_chains, alpha, users or snr_bbf_db
        #[arg(long)]
        axis: String,
        /// Comma-separated scalars, or `;`-separated tuples such as `3,2,4,4;1,1,12,8`.
        #[arg(long)]
        values: String,
    },
    /// Reproduce one of the reference figures (4 to 10).
    Figure {
        figure: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Print the resolved configuration as TOML.
    Config(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file with config overrides; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "desk")]
    profile: Profile,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    tmax: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let base = ExperimentConfig::for_profile(self.profile);
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path, &base).with_context(|| format!("reading {}", path.display()))?,
            None => base,
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(t) = self.tmax {
            cfg.t_max = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, results: &[CurveResult]) -> Result<()> {
        match &self.out {
            Some(path) => emit::emit_results(results, self.format, path).with_context(|| format!("writing {}", path.display()))?,
            None => {
                let text = emit::to_string(results, self.format)?;
                std::io::stdout().lock().write_all(text.as_bytes())?;
            }
        }
        Ok(())
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            common.emit(&detection_curves(&cfg, "T")?)
        }
        Command::Sweep { common, axis, values } => {
            if !AXIS_NAMES.contains(&axis.as_str()) {
                bail!("unknown axis `{axis}`; expected one of {}", AXIS_NAMES.join(", "));
            }
            let cfg = common.resolve()?;
            let axis = SweepAxis::parse(&axis, &values)?;
            if axis.is_empty() {
                bail!("--values is empty");
            }
            common.emit(&sweep(&cfg, &axis)?)
        }
        Command::Figure { figure, common } => {
            if !FIGURES.contains(&figure) {
                bail!("no preset for figure {figure}; expected one of 4..=10");
            }
            let cfg = common.resolve()?;
            common.emit(&run_figure(figure, common.profile, &cfg)?)
        }
        Command::Config(common) => {
            print!("{}", common.resolve()?.to_toml_string()?);
            Ok(())
        }
    }
}
