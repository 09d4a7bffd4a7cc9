use std::process::ExitCode;

use clap::Parser;
use ratelessnet_cli::args::{Cli, Command};
use ratelessnet_cli::{commands, exit_code, EXIT_CONFIG};

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = cli.overrides.resolve()?;
    if cli.overrides.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    if let Some(threads) = cli.overrides.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    let files = match cli.command {
        Command::Analyze => commands::analyze(&cfg)?,
        Command::Simulate => {
            let (files, typical) = commands::simulate(&cfg)?;
            println!(
                "pooled {} links: success fraction {:.4}, mean T {:.3}",
                typical.samples.len(),
                typical.success_fraction(),
                typical.mean_t()
            );
            files
        }
        Command::Compare => {
            let (files, c) = commands::compare(&cfg)?;
            println!(
                "N_f = {}, N_r = {} (analytic N_r = {})",
                c.n_f, c.n_r, c.n_r_analytic
            );
            files
        }
        Command::Peruser => {
            let (files, report) = commands::peruser(&cfg)?;
            let rho = report.distance_gain_correlation();
            println!(
                "{} pairs ({} censored), Spearman(D, G_R) = {}",
                report.records.len(),
                report.censored_count(),
                rho.map_or("n/a".into(), |r| format!("{r:.4}"))
            );
            files
        }
    };
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
