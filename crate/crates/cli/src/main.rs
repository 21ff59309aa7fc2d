use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use suvsim_cli::config::{ExperimentKind, Overrides, RunConfig};
use suvsim_cli::plot::{emit_plot, PlotKind};

/// Symmetry-breaking simulations: equilibrium limits, collapse dynamics,
/// decoherence and the classical pencil.
#[derive(Parser)]
#[command(name = "suvsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Order parameter over the (N, B) grid.
    Equilibrium(RunArgs),
    /// Collapse time sweep over (N, epsilon).
    Collapse(RunArgs),
    /// Reorientation time sweep over (N, epsilon).
    Reorient(RunArgs),
    /// Transverse-field Ising ramp across the critical point.
    Quench(RunArgs),
    /// System coupled to a dephasing qubit bath.
    Bath(RunArgs),
    /// Classical inverted pendulum limits.
    Pencil(RunArgs),
    /// Redraw a figure from a result CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run config; defaults for the subcommand when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "N")]
    n: Option<f64>,
    #[arg(long = "B", allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    /// Output directory, relative to $SUVSIM_OUT_ROOT when not absolute.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PlotArgs {
    /// collapse, reorient, limit-scan, pencil, trajectory, bath or quench.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn config_error(errors: Vec<String>) -> ExitCode {
    let body = serde_json::json!({ "errors": errors });
    eprintln!("{}", serde_json::to_string_pretty(&body).unwrap());
    ExitCode::from(EXIT_CONFIG)
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<RunConfig, Vec<String>> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| vec![format!("reading {}: {e}", path.display())])?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::with_defaults(kind),
    };
    if cfg.experiment.kind() != kind {
        return Err(vec![format!(
            "config describes a {} experiment, not {}",
            cfg.experiment.kind().name(),
            kind.name()
        )]);
    }
    let ov = Overrides {
        n: args.n,
        b: args.b,
        eps: args.eps,
        out: args.out.clone(),
        workers: args.workers,
        seed: args.seed,
    };
    ov.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let cfg = match load(kind, args) {
        Ok(c) => c,
        Err(errs) => return config_error(errs),
    };
    match suvsim_cli::run(&cfg, &suvsim_cli::out_root()) {
        Ok(m) => {
            let dir = suvsim_cli::resolve_output_dir(&cfg, &suvsim_cli::out_root());
            let failed = m.failed();
            println!("{}: {} points, {} failed, wrote {}", m.experiment, m.runs.len(), failed, dir.display());
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            if failed > 0 {
                for r in m.runs.iter().filter(|r| r.error.is_some()) {
                    eprintln!("{}: {}", r.label, r.error.as_deref().unwrap_or(""));
                }
                ExitCode::from(EXIT_PARTIAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = match &cli.command {
        Command::Equilibrium(_) => ExperimentKind::EquilibriumScan,
        Command::Collapse(_) => ExperimentKind::CollapseSweep,
        Command::Reorient(_) => ExperimentKind::ReorientSweep,
        Command::Quench(_) => ExperimentKind::Quench,
        Command::Bath(_) => ExperimentKind::BathDemo,
        Command::Pencil(_) => ExperimentKind::Pencil,
        Command::Plot(p) => {
            let kind = match PlotKind::parse(&p.kind) {
                Ok(k) => k,
                Err(e) => return config_error(vec![e.to_string()]),
            };
            return match emit_plot(kind, &p.input, &p.out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            };
        }
    };
    match &cli.command {
        Command::Equilibrium(a)
        | Command::Collapse(a)
        | Command::Reorient(a)
        | Command::Quench(a)
        | Command::Bath(a)
        | Command::Pencil(a) => execute(kind, a),
        Command::Plot(_) => unreachable!(),
    }
}
