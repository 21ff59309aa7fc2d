//! Experiment runner behind the `suvsim` binary.
//!
//! A run takes one validated [`RunConfig`], writes tables, figures and a
//! manifest into its output directory, and reports per-point status.

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod sweep;

use std::path::{Path, PathBuf};

use anyhow::Result;
use chrono::{SecondsFormat, Utc};

use config::{Experiment, RunConfig};
use output::{OutputDir, RunManifest};
use plot::PlotKind;

pub const ARTIFACT: &str = "suvsim";
pub const OUT_ROOT_ENV: &str = "SUVSIM_OUT_ROOT";
pub const DEFAULT_OUT_ROOT: &str = "results";

/// Root for relative output directories: the environment override if set.
pub fn out_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT), PathBuf::from)
}

/// Where a config writes. No `output_dir` means `<root>/<kind>`.
pub fn resolve_output_dir(cfg: &RunConfig, root: &Path) -> PathBuf {
    match &cfg.output_dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => root.join(d),
        None => root.join(cfg.experiment.kind().name()),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Figures drawn after the tables, as (kind, csv, svg).
fn figures(cfg: &RunConfig, written: &[String]) -> Vec<(PlotKind, String, String)> {
    let fixed = |k, csv: &str, svg: &str| vec![(k, csv.to_string(), format!("plots/{svg}"))];
    match &cfg.experiment {
        Experiment::EquilibriumScan(_) => fixed(PlotKind::LimitScan, "limit_scan.csv", "limit_scan.svg"),
        Experiment::CollapseSweep(_) => fixed(PlotKind::Collapse, "collapse_times.csv", "collapse_scaling.svg"),
        Experiment::ReorientSweep(_) => fixed(PlotKind::Reorient, "reorient_times.csv", "reorient_scaling.svg"),
        Experiment::BathDemo(_) => fixed(PlotKind::Bath, "decoherence.csv", "decoherence.svg"),
        Experiment::Pencil(_) => fixed(PlotKind::Pencil, "pencil.csv", "pencil.svg"),
        Experiment::Quench(_) => written
            .iter()
            .filter(|f| f.starts_with("trajectories/quench_") && f.ends_with(".csv"))
            .map(|f| {
                let stem = f.trim_start_matches("trajectories/").trim_end_matches(".csv");
                (PlotKind::Quench, f.clone(), format!("plots/{stem}.svg"))
            })
            .collect(),
    }
}

/// Validates and executes one config. Figures that fail to draw become
/// manifest warnings rather than errors.
pub fn run(cfg: &RunConfig, root: &Path) -> Result<RunManifest> {
    if let Err(errs) = cfg.validate() {
        anyhow::bail!("invalid config: {}", errs.join("; "));
    }
    let started_at = now();
    let mut out = OutputDir::create(&resolve_output_dir(cfg, root))?;
    out.write_text("config.json", &(cfg.canonical_json() + "\n"))?;

    let runs = match &cfg.experiment {
        Experiment::EquilibriumScan(p) => experiments::equilibrium(cfg, p, &mut out)?,
        Experiment::CollapseSweep(p) => experiments::collapse(cfg, p, &mut out)?,
        Experiment::ReorientSweep(p) => experiments::reorient(cfg, p, &mut out)?,
        Experiment::Quench(p) => experiments::quench(cfg, p, &mut out)?,
        Experiment::BathDemo(p) => experiments::bath(cfg, p, &mut out)?,
        Experiment::Pencil(p) => experiments::pencil(cfg, p, &mut out)?,
    };

    let mut warnings = Vec::new();
    let written: Vec<String> = out.written().map(str::to_string).collect();
    for (kind, csv, svg) in figures(cfg, &written) {
        let input = out.root().join(&csv);
        match plot::render(kind, &input) {
            Ok(text) => out.write_text(&svg, &text)?,
            Err(e) => warnings.push(format!("{svg}: {e:#}")),
        }
    }

    let manifest = RunManifest {
        artifact: ARTIFACT.into(),
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment.kind().name().into(),
        config_hash: cfg.hash(),
        started_at,
        finished_at: now(),
        runs,
        warnings,
        files: Vec::new(),
    };
    out.finish(manifest)
}
