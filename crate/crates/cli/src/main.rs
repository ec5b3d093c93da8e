use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use splitlab::config::{echo, parse_config, LinearSpec, ParsedConfig};
use splitlab::figures::emit_figures;
use splitlab::linear_report::{run_report, write_report_csv};
use splitlab::runner::{run_scenario, run_sweep, write_reference_csv, SUMMARY_FILE};

/// Operator-splitting error laboratory for a 1D stiff advection-reaction
/// system.
#[derive(Parser)]
#[command(name = "splitlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config; writes the final fields CSV and prints the
    /// error record.
    Run {
        cfg: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a sweep config; writes summary.csv plus per-run fields CSVs.
    Sweep {
        cfg: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads for scenario execution (1 = fully sequential).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Verify the linear splitting theory: orders on random systems,
    /// commuting exactness, the commutator law, stiff scaling.
    Linear {
        /// Optional config (mode = linear) with dim/seed/trials/eps_list.
        cfg: Option<PathBuf>,
        /// Override the system dimension.
        #[arg(long)]
        dim: Option<usize>,
        /// Override the stiffness ladder to {E, E/10, E/100}.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Emit the analytic reference fields for a scenario or sweep config.
    Reference {
        cfg: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render the SVG figure set from a sweep summary CSV.
    Plot {
        summary: PathBuf,
        /// Output directory (defaults to the summary's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { cfg, out } => {
            let parsed = parse_config(&std::fs::read_to_string(&cfg)?)?;
            let ParsedConfig::Scenario(spec) = parsed else {
                return Err(
                    format!("{}: not a scenario config (try `sweep`)", cfg.display()).into(),
                );
            };
            print!("{}", echo(&ParsedConfig::Scenario(spec.clone())));
            let record = run_scenario(&spec, &out)?;
            println!(
                "{}: rrms_mean = {:.6e}, mass_drift = {:.3e}, wall = {:.3} s",
                record.key(),
                record.rrms_mean,
                record.mass_drift,
                record.wall_s
            );
            println!(
                "wrote {}",
                out.join(format!("fields_{}.csv", record.key())).display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { cfg, out, jobs } => {
            let parsed = parse_config(&std::fs::read_to_string(&cfg)?)?;
            let ParsedConfig::Sweep(spec) = parsed else {
                return Err(format!("{}: not a sweep config (try `run`)", cfg.display()).into());
            };
            print!("{}", echo(&ParsedConfig::Sweep(spec.clone())));
            let records = run_sweep(&spec, &out, jobs)?;
            println!(
                "wrote {} ({} rows)",
                out.join(SUMMARY_FILE).display(),
                records.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Linear { cfg, dim, eps, out } => {
            let mut spec = match cfg {
                Some(path) => {
                    let parsed = parse_config(&std::fs::read_to_string(&path)?)?;
                    let ParsedConfig::Linear(spec) = parsed else {
                        return Err(format!("{}: not a linear config", path.display()).into());
                    };
                    spec
                }
                None => LinearSpec::default(),
            };
            if let Some(dim) = dim {
                spec.dim = dim;
            }
            if let Some(eps) = eps {
                spec.eps_list = vec![eps, eps / 10.0, eps / 100.0];
            }
            let rows = run_report(&spec)?;
            std::fs::create_dir_all(&out)?;
            write_report_csv(&rows, &out.join("linear_report.csv"))?;
            let mut all_pass = true;
            for row in &rows {
                let status = if row.pass { "pass" } else { "FAIL" };
                println!("[{status}] {}: {:.6e} ({})", row.name, row.value, row.bound);
                all_pass &= row.pass;
            }
            println!("wrote {}", out.join("linear_report.csv").display());
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Reference { cfg, out } => {
            let parsed = parse_config(&std::fs::read_to_string(&cfg)?)?;
            match parsed {
                ParsedConfig::Scenario(spec) => {
                    let path = write_reference_csv(&spec.base, spec.dx, spec.sequence, &out)?;
                    println!("wrote {}", path.display());
                }
                ParsedConfig::Sweep(spec) => {
                    // One reference per grid spacing; the coupled shape.
                    for &dx in &spec.dx_list {
                        let path = write_reference_csv(
                            &spec.base,
                            dx,
                            splitlab_core::splitting::SplitSequence::GodunovTC,
                            &out,
                        )?;
                        println!("wrote {}", path.display());
                    }
                }
                ParsedConfig::Linear(_) => {
                    return Err(format!(
                        "{}: linear configs have no reference fields",
                        cfg.display()
                    )
                    .into());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { summary, out } => {
            let out_dir = out.unwrap_or_else(|| {
                summary
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            let figures = emit_figures(&summary, &out_dir)?;
            for fig in &figures {
                println!(
                    "wrote {} ({} points, {} rows)",
                    fig.path.display(),
                    fig.points,
                    fig.rows_consumed
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
