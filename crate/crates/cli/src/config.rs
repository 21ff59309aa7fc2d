//! Run configuration: JSON in, validated typed config out.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use suvsim_core::bath::SystemSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Relative paths resolve against the output root.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Only shuffles the order grid points are executed in.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub experiment: Experiment,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Re-run each trajectory at a tenfold tighter tolerance.
    #[serde(default)]
    pub verify: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { tolerance: default_tolerance(), verify: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    EquilibriumScan(EquilibriumParams),
    CollapseSweep(CollapseParams),
    ReorientSweep(ReorientParams),
    Quench(QuenchParams),
    BathDemo(BathParams),
    Pencil(PencilConfig),
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::EquilibriumScan(_) => ExperimentKind::EquilibriumScan,
            Experiment::CollapseSweep(_) => ExperimentKind::CollapseSweep,
            Experiment::ReorientSweep(_) => ExperimentKind::ReorientSweep,
            Experiment::Quench(_) => ExperimentKind::Quench,
            Experiment::BathDemo(_) => ExperimentKind::BathDemo,
            Experiment::Pencil(_) => ExperimentKind::Pencil,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    EquilibriumScan,
    CollapseSweep,
    ReorientSweep,
    Quench,
    BathDemo,
    Pencil,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::EquilibriumScan => "equilibrium-scan",
            ExperimentKind::CollapseSweep => "collapse-sweep",
            ExperimentKind::ReorientSweep => "reorient-sweep",
            ExperimentKind::Quench => "quench",
            ExperimentKind::BathDemo => "bath-demo",
            ExperimentKind::Pencil => "pencil",
        }
    }

    pub fn default_experiment(self) -> Experiment {
        match self {
            ExperimentKind::EquilibriumScan => Experiment::EquilibriumScan(EquilibriumParams {
                n_grid: vec![1e2, 1e3, 1e4],
                b_grid: vec![1e-8, 1e-6, 1e-4, 1e-3],
                theta0: 0.0,
            }),
            ExperimentKind::CollapseSweep => Experiment::CollapseSweep(CollapseParams {
                n_grid: vec![50.0, 100.0, 200.0, 400.0],
                epsilon_grid: vec![1e-3, 10f64.powf(-7.0 / 3.0), 10f64.powf(-5.0 / 3.0), 1e-1],
                ..CollapseParams::default()
            }),
            ExperimentKind::ReorientSweep => Experiment::ReorientSweep(ReorientParams {
                n_grid: vec![50.0, 100.0, 200.0, 400.0],
                epsilon_grid: vec![1e-3, 10f64.powf(-7.0 / 3.0), 10f64.powf(-5.0 / 3.0), 1e-1],
                ..ReorientParams::default()
            }),
            ExperimentKind::Quench => Experiment::Quench(QuenchParams::default()),
            ExperimentKind::BathDemo => Experiment::BathDemo(BathParams::default()),
            ExperimentKind::Pencil => Experiment::Pencil(PencilConfig::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumParams {
    pub n_grid: Vec<f64>,
    pub b_grid: Vec<f64>,
    #[serde(default)]
    pub theta0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseParams {
    pub n_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    /// Equilibrium field in the Hamiltonian; 0 for the free rotor.
    #[serde(default)]
    pub field: f64,
    /// Starting cutoff; doubled until the packet stays inside the window.
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default)]
    pub theta0: f64,
    /// Threshold used for the recorded `t_c` column.
    #[serde(default = "half")]
    pub gamma: f64,
    /// Thresholds for the sensitivity fits.
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    /// Sample spacing in units of `1/(εN)`.
    #[serde(default = "default_collapse_spacing")]
    pub sample_spacing: f64,
    /// Run length limit in units of `1/(εN)`.
    #[serde(default = "hundred")]
    pub budget: f64,
}

impl Default for CollapseParams {
    fn default() -> Self {
        Self {
            n_grid: vec![50.0, 100.0],
            epsilon_grid: vec![1e-3, 1e-2],
            field: 0.0,
            cutoff: default_cutoff(),
            theta0: 0.0,
            gamma: half(),
            gammas: default_gammas(),
            sample_spacing: default_collapse_spacing(),
            budget: hundred(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReorientParams {
    pub n_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    /// Sets the initial packet width `σ_m² = (N/2)√B`.
    #[serde(default = "default_packet_field")]
    pub field: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default)]
    pub theta_start: f64,
    #[serde(default = "right_angle")]
    pub theta_field: f64,
    #[serde(default = "default_angle_tolerance")]
    pub angle_tolerance: f64,
    /// Run length limit in units of `1/ε`.
    #[serde(default = "fifty")]
    pub budget: f64,
}

impl Default for ReorientParams {
    fn default() -> Self {
        Self {
            n_grid: vec![50.0, 100.0],
            epsilon_grid: vec![1e-2, 1e-1],
            field: default_packet_field(),
            cutoff: default_cutoff(),
            theta_start: 0.0,
            theta_field: right_angle(),
            angle_tolerance: default_angle_tolerance(),
            budget: fifty(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchParams {
    pub spins: usize,
    #[serde(default = "default_open")]
    pub open_boundary: bool,
    pub total_time: f64,
    /// Optional piecewise-linear `(t, p)` knots; a linear ramp otherwise.
    #[serde(default)]
    pub knots: Option<Vec<(f64, f64)>>,
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "default_signs")]
    pub field_signs: Vec<f64>,
    #[serde(default = "half")]
    pub record_every: f64,
}

impl Default for QuenchParams {
    fn default() -> Self {
        Self {
            spins: 8,
            open_boundary: true,
            total_time: 50.0,
            knots: None,
            epsilon_grid: vec![0.0, 1e-2],
            field_signs: default_signs(),
            record_every: half(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathParams {
    #[serde(default = "default_system")]
    pub system: SystemSpec,
    pub bath_qubits: usize,
    pub coupling: f64,
    #[serde(default)]
    pub frequencies: Vec<f64>,
    pub t_final: f64,
    pub samples: usize,
}

impl Default for BathParams {
    fn default() -> Self {
        Self { system: SystemSpec::TwoLevel, bath_qubits: 8, coupling: 0.3, frequencies: vec![], t_final: 20.0, samples: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilConfig {
    /// Descending.
    pub b_grid: Vec<f64>,
    /// Descending.
    pub phi0_grid: Vec<f64>,
}

impl Default for PencilConfig {
    fn default() -> Self {
        let decades = |k: i32| (1..=k).map(|i| 10f64.powi(-i)).collect::<Vec<_>>();
        Self { b_grid: decades(8), phi0_grid: decades(8) }
    }
}

fn one() -> usize {
    1
}
fn half() -> f64 {
    0.5
}
fn hundred() -> f64 {
    100.0
}
fn fifty() -> f64 {
    50.0
}
fn right_angle() -> f64 {
    FRAC_PI_2
}
fn default_tolerance() -> f64 {
    suvsim_core::dynamics::DEFAULT_TOLERANCE
}
fn default_cutoff() -> usize {
    32
}
fn default_gammas() -> Vec<f64> {
    vec![0.3, 0.5, 0.7]
}
fn default_collapse_spacing() -> f64 {
    2e-3
}
fn default_packet_field() -> f64 {
    1e-2
}
fn default_angle_tolerance() -> f64 {
    0.1
}
fn default_open() -> bool {
    true
}
fn default_signs() -> Vec<f64> {
    vec![1.0]
}
fn default_system() -> SystemSpec {
    SystemSpec::TwoLevel
}

impl RunConfig {
    pub fn with_defaults(kind: ExperimentKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            output_dir: None,
            seed: 0,
            workers: 1,
            integrator: IntegratorConfig::default(),
            experiment: kind.default_experiment(),
        }
    }

    /// Parses JSON; errors come back as a list of messages.
    pub fn from_json(text: &str) -> Result<Self, Vec<String>> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| vec![e.to_string()])?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serialized with sorted keys and no whitespace.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config is always serializable");
        serde_json::to_string(&v).expect("value is always serializable")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Every problem found, not just the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errs.push(format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.workers == 0 || self.workers > 256 {
            errs.push(format!("workers = {} must lie in 1..=256", self.workers));
        }
        let tol = self.integrator.tolerance;
        if !(tol > 0.0 && tol < 1e-2) {
            errs.push(format!("integrator.tolerance = {tol} must lie in (0, 1e-2)"));
        }
        let mut grid = |name: &str, g: &[f64], allow_zero: bool| {
            if g.is_empty() {
                errs.push(format!("{name} must not be empty"));
            }
            for v in g {
                if !v.is_finite() || *v < 0.0 || (!allow_zero && *v == 0.0) {
                    errs.push(format!("{name} entry {v} must be {}", if allow_zero { "≥ 0" } else { "> 0" }));
                }
            }
        };
        match &self.experiment {
            Experiment::EquilibriumScan(p) => {
                grid("n_grid", &p.n_grid, false);
                grid("b_grid", &p.b_grid, false);
                ascending(&mut errs, "n_grid", &p.n_grid);
                ascending(&mut errs, "b_grid", &p.b_grid);
            }
            Experiment::CollapseSweep(p) => {
                grid("n_grid", &p.n_grid, false);
                grid("epsilon_grid", &p.epsilon_grid, true);
                check_cutoff(&mut errs, p.cutoff);
                if !(p.field >= 0.0) {
                    errs.push(format!("field = {} must be ≥ 0", p.field));
                }
                for g in std::iter::once(&p.gamma).chain(&p.gammas) {
                    if !(*g > 0.0 && *g < 1.0) {
                        errs.push(format!("threshold {g} must lie in (0, 1)"));
                    }
                }
                if !(p.sample_spacing > 0.0 && p.budget > p.sample_spacing) {
                    errs.push("need 0 < sample_spacing < budget".into());
                }
            }
            Experiment::ReorientSweep(p) => {
                grid("n_grid", &p.n_grid, false);
                grid("epsilon_grid", &p.epsilon_grid, false);
                check_cutoff(&mut errs, p.cutoff);
                if !(p.field > 0.0) {
                    errs.push(format!("field = {} must be > 0 (it sets the packet width)", p.field));
                }
                if !(p.angle_tolerance > 0.0) || !(p.budget > 0.0) {
                    errs.push("angle_tolerance and budget must be > 0".into());
                }
                if !p.theta_start.is_finite() || !p.theta_field.is_finite() {
                    errs.push("angles must be finite".into());
                }
            }
            Experiment::Quench(p) => {
                grid("epsilon_grid", &p.epsilon_grid, true);
                if !(2..=12).contains(&p.spins) {
                    errs.push(format!("spins = {} must lie in 2..=12", p.spins));
                }
                if !(p.total_time > 0.0) {
                    errs.push(format!("total_time = {} must be > 0", p.total_time));
                }
                if let Some(k) = &p.knots {
                    if k.last().map(|x| x.0) != Some(p.total_time) {
                        errs.push("last knot time must equal total_time".into());
                    }
                }
                if p.field_signs.is_empty() || p.field_signs.iter().any(|s| s.abs() != 1.0) {
                    errs.push("field_signs entries must be +1 or -1".into());
                }
                if !(p.record_every > 0.0) {
                    errs.push("record_every must be > 0".into());
                }
            }
            Experiment::BathDemo(p) => {
                if !(p.t_final >= 0.0) || p.samples == 0 {
                    errs.push("need t_final ≥ 0 and samples ≥ 1".into());
                }
                let spec = p.composite();
                if let Err(e) = spec.validate() {
                    errs.push(e.to_string());
                }
            }
            Experiment::Pencil(p) => {
                grid("b_grid", &p.b_grid, false);
                grid("phi0_grid", &p.phi0_grid, false);
                descending(&mut errs, "b_grid", &p.b_grid);
                descending(&mut errs, "phi0_grid", &p.phi0_grid);
                if p.phi0_grid.iter().any(|&v| v >= FRAC_PI_2) {
                    errs.push("phi0_grid entries must be below π/2".into());
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

impl BathParams {
    pub fn composite(&self) -> suvsim_core::bath::CompositeSystem {
        suvsim_core::bath::CompositeSystem {
            system: self.system.clone(),
            bath_qubits: self.bath_qubits,
            coupling: self.coupling,
            frequencies: self.frequencies.clone(),
        }
    }
}

fn check_cutoff(errs: &mut Vec<String>, c: usize) {
    if !(4..=4096).contains(&c) {
        errs.push(format!("cutoff = {c} must lie in 4..=4096"));
    }
}

fn ascending(errs: &mut Vec<String>, name: &str, g: &[f64]) {
    if g.windows(2).any(|w| !(w[0] < w[1])) {
        errs.push(format!("{name} must be strictly ascending"));
    }
}

fn descending(errs: &mut Vec<String>, name: &str, g: &[f64]) {
    if g.windows(2).any(|w| !(w[0] > w[1])) {
        errs.push(format!("{name} must be strictly descending"));
    }
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<f64>,
    pub b: Option<f64>,
    pub eps: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    /// `--N`, `--B` and `--eps` collapse the matching grid to one value.
    /// An override that the experiment has no slot for is an error.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let kind = cfg.experiment.kind().name();
        let mut unused = |flag: &str| errs.push(format!("{flag} has no meaning for {kind}"));
        match &mut cfg.experiment {
            Experiment::EquilibriumScan(p) => {
                self.n.map(|v| p.n_grid = vec![v]);
                self.b.map(|v| p.b_grid = vec![v]);
                if self.eps.is_some() {
                    unused("--eps");
                }
            }
            Experiment::CollapseSweep(p) => {
                self.n.map(|v| p.n_grid = vec![v]);
                self.b.map(|v| p.field = v);
                self.eps.map(|v| p.epsilon_grid = vec![v]);
            }
            Experiment::ReorientSweep(p) => {
                self.n.map(|v| p.n_grid = vec![v]);
                self.b.map(|v| p.field = v);
                self.eps.map(|v| p.epsilon_grid = vec![v]);
            }
            Experiment::Quench(p) => {
                if let Some(v) = self.n {
                    if v.fract() != 0.0 || v < 0.0 {
                        errs.push(format!("--N {v} must be a whole number of spins"));
                    } else {
                        p.spins = v as usize;
                    }
                }
                if self.b.is_some() {
                    errs.push(format!("--B has no meaning for {kind}"));
                }
                self.eps.map(|v| p.epsilon_grid = vec![v]);
            }
            Experiment::BathDemo(p) => {
                if let Some(v) = self.n {
                    if v.fract() != 0.0 || v < 0.0 {
                        errs.push(format!("--N {v} must be a whole number of bath qubits"));
                    } else {
                        p.bath_qubits = v as usize;
                    }
                }
                self.b.map(|v| p.coupling = v);
                if self.eps.is_some() {
                    errs.push(format!("--eps has no meaning for {kind}"));
                }
            }
            Experiment::Pencil(p) => {
                self.b.map(|v| p.b_grid = vec![v]);
                if self.n.is_some() || self.eps.is_some() {
                    errs.push(format!("--N and --eps have no meaning for {kind}"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}
