use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use furry_cli::commands::{self, CommandError};
use furry_cli::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "furry",
    version,
    about = "Furry-picture decoupling studies on a Dirac-Coulomb channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads; 0 lets rayon decide.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed for the randomized checks (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the oracle suite.
    Validate,
    /// One-particle spectra and residuals per coupling.
    OneParticle,
    /// Convergence of the truncated series for N = 1 and N = n_particles.
    Converge,
    /// N-particle spectra and inequality diagnostics.
    Nbody,
}

fn load(cli: &Cli) -> Result<RunConfig, CommandError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.output {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CommandError> {
    let cfg = load(cli)?;
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Validate => {
            let report = commands::cmd_validate(&cfg, &out)?;
            for ch in &report.checks {
                let tag = match (ch.passed(), ch.hard) {
                    (true, _) => "ok  ",
                    (false, true) => "FAIL",
                    (false, false) => "warn",
                };
                println!("{tag} {}", ch.describe());
            }
            report.verdict()?;
        }
        Command::OneParticle => {
            for row in commands::cmd_one_particle(&cfg, &out)? {
                println!(
                    "gamma={} ground={:.12} sommerfeld={:.12} rel_err={:.3e} unitarity={:.2e} intertwining={:.2e}",
                    row.gamma, row.ground_state, row.sommerfeld, row.relative_error, row.unitarity, row.intertwining
                );
            }
        }
        Command::Converge => {
            let output = commands::cmd_converge(&cfg, &out)?;
            for w in &output.warnings {
                eprintln!("warning: {w}");
            }
            for report in &output.reports {
                for gamma in report.gammas() {
                    let rows = report.rows_for(gamma);
                    let last = rows.last().expect("at least one row");
                    println!(
                        "N={} gamma={gamma} k={} resolvent_distance={:.3e} weighted_remainder={:.3e} fitted_ratio={:.4}",
                        report.n_particles, last.k, last.resolvent_distance, last.weighted_remainder_norm, last.fitted_ratio
                    );
                }
            }
        }
        Command::Nbody => {
            let output = commands::cmd_nbody(&cfg, &out)?;
            for (d, spectrum) in output.diagnostics.iter().zip(&output.spectra) {
                println!(
                    "gamma={} dim={} lowest={:.12} unitary_equivalence={:.2e} form_bound={:.4}/{:.4} kinetic_weight={:.4}/{:.4}",
                    d.gamma,
                    d.dim,
                    spectrum[0],
                    d.unitary_equivalence,
                    d.form_bound,
                    d.form_bound_limit,
                    d.kinetic_weight,
                    d.kinetic_weight_limit
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
