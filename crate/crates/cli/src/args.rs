use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ModeSetting, SimConfig, LARGE_WINDOW};

#[derive(Debug, Parser)]
#[command(
    name = "ratelessnet",
    version,
    about = "Rateless vs fixed-rate coding in Poisson cellular downlinks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Analytic curves and gains.
    Analyze,
    /// Monte Carlo run of the configured mode.
    Simulate,
    /// Paired rateless/fixed sweeps against the analytics.
    Compare,
    /// Per-user gains on one fixed realization.
    Peruser,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Peruser => "peruser",
        }
    }
}

/// Config file plus per-field overrides.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML config file; missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub intensity: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub k_bits: Option<f64>,
    #[arg(long, global = true)]
    pub n_max: Option<u32>,
    #[arg(long, global = true)]
    pub window_side: Option<f64>,
    /// Shorthand for the large window (side 60).
    #[arg(long, global = true, conflicts_with = "window_side")]
    pub large_window: bool,
    #[arg(long, global = true)]
    pub crofton_c: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeSetting>,
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
    #[arg(long, global = true)]
    pub fading_trials: Option<usize>,
    #[arg(long, global = true)]
    pub master_seed: Option<u64>,
    /// Comma-separated delay constraints.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n_grid: Option<Vec<u32>>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the effective config as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

impl Overrides {
    pub fn resolve(&self) -> ratelessnet::Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::load(path)?,
            None => SimConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        set!(
            intensity,
            alpha,
            k_bits,
            n_max,
            window_side,
            crofton_c,
            mode,
            realizations,
            fading_trials,
            master_seed,
            n_grid,
            output_dir
        );
        if self.large_window {
            cfg.window_side = LARGE_WINDOW;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
