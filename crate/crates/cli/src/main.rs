use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use octorbit_cli::commands;
use octorbit_cli::config::{Overrides, RunConfig};

/// Collision-based periodic orbit of the octahedral six-body problem:
/// search, region maps, stability reports, and figure data.
#[derive(Parser)]
#[command(name = "octorbit", version)]
struct Cli {
    /// JSON config file; explicit flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Energy level (must be negative).
    #[arg(long, global = true)]
    energy: Option<f64>,
    /// Integrator step in rescaled time.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Event-location bisection width.
    #[arg(long = "tol-event", global = true)]
    tol_event: Option<f64>,
    /// Shooting-root bisection width.
    #[arg(long = "tol-root", global = true)]
    tol_root: Option<f64>,
    /// Artifact directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for grid commands; 0 keeps the pool default.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// α grid as start,stop,step.
    #[arg(long = "alpha-range", global = true, value_parser = parse_range, value_name = "A,B,H")]
    alpha_range: Option<[f64; 3]>,
    /// β grid as start,stop,step.
    #[arg(long = "beta-range", global = true, value_parser = parse_range, value_name = "A,B,H")]
    beta_range: Option<[f64; 3]>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Locate the periodic orbit; writes orbit.json and orbit_trajectory.csv.
    Search,
    /// Classify the (α, β) grid; writes sigma_map.csv and sigma_boundary.csv.
    SigmaMap,
    /// Stability analysis of the orbit; writes stability.json.
    Stability {
        /// Reuse a saved orbit.json instead of searching.
        #[arg(long, value_name = "PATH")]
        orbit: Option<PathBuf>,
    },
    /// β(α) and crossing-residual tables; writes beta_curve.csv and
    /// residual_curve.csv.
    Curves,
    /// Integrate one initial condition; writes trajectory.csv.
    Integrate {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Integration span in rescaled time.
        #[arg(long, default_value_t = 0.5)]
        span: f64,
    },
}

fn parse_range(text: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected start,stop,step, got {text:?}"));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("bad number {part:?}: {e}"))?;
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        energy: cli.energy,
        step: cli.step,
        tol_event: cli.tol_event,
        tol_root: cli.tol_root,
        out: cli.out.clone(),
        workers: cli.workers,
        alpha_range: cli.alpha_range,
        beta_range: cli.beta_range,
    };
    let cfg = match RunConfig::load(cli.config.as_deref(), &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("octorbit: {e:#}");
            return ExitCode::from(1);
        }
    };
    if cfg.workers > 0 {
        // Ignore the error: the global pool can only be sized once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global();
    }

    let result = match cli.cmd {
        Cmd::Search => commands::cmd_search(&cfg),
        Cmd::SigmaMap => commands::cmd_sigma_map(&cfg),
        Cmd::Stability { orbit } => commands::cmd_stability(&cfg, orbit.as_deref()),
        Cmd::Curves => commands::cmd_curves(&cfg),
        Cmd::Integrate { alpha, beta, span } => commands::cmd_integrate(&cfg, alpha, beta, span),
    };
    match result {
        Err(e) => {
            eprintln!("octorbit: {e:#}");
            ExitCode::from(1)
        }
        Ok(reports) => {
            let mut code = 0_u8;
            for report in &reports {
                println!(
                    "wrote {} ({} rows, {} failed)",
                    report.path.display(),
                    report.rows,
                    report.error_rows
                );
                if report.error_fraction() > cfg.max_error_fraction {
                    eprintln!(
                        "octorbit: {}: failure fraction {:.3} exceeds {:.3}",
                        report.path.display(),
                        report.error_fraction(),
                        cfg.max_error_fraction
                    );
                    code = 2;
                }
            }
            ExitCode::from(code)
        }
    }
}
