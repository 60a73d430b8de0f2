//! Command-line harness: configuration, experiment dispatch and output files.
//!
//! Every run writes a data file (CSV or JSON) and a `*.meta.json` sidecar holding the
//! configuration echo, tolerances, excluded points and oracle deltas. Data files carry no
//! timestamps, so identical configurations give byte-identical output.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::box_quantum::{
    eigenstate, momentum_amplitude_numeric, momentum_density_closed_form, momentum_normalization,
    quantum_potential_with, BoxConfig, MomentumSpectrum, classical_limit_metric,
};
use crate::diff::Stencil;
use crate::diffusion_wave::{
    boxed_source, equivalence_check, pseudo_helmholtz_residual, separated_solution, solve_parabolic, DirichletValues,
    SolverOptions,
};
use crate::error::Error;
use crate::grid::{default_node_guard, Grid};
use crate::quadrature::GaussLegendre;
use crate::thermo_field::{
    madelung_decompose, probability_from_heat, quantum_potential_from_u, thermo_fields, u_from_heat_with,
};
use crate::time_of_flight::{discrete_norm, energy_bookkeeping, propagate_free, time_of_flight_momenta, PropagationRequest};
use crate::vft_walls::{vft_ratio, work_report, WallMove};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PHYSICS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Eigenstate,
    Momentum,
    ClassicalLimit,
    Tof,
    ThermoChain,
    ThermalBox,
    ParabolicOracle,
    Vft,
    Equivalence,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Eigenstate => "eigenstate",
            Self::Momentum => "momentum",
            Self::ClassicalLimit => "classical-limit",
            Self::Tof => "tof",
            Self::ThermoChain => "thermo-chain",
            Self::ThermalBox => "thermal-box",
            Self::ParabolicOracle => "parabolic-oracle",
            Self::Vft => "vft",
            Self::Equivalence => "equivalence",
        }
    }

    /// Relation checked by the experiment, quoted in the summary line.
    pub fn relation(self) -> &'static str {
        match self {
            Self::Eigenstate => "quantum potential of a stationary state equals E_n",
            Self::Momentum => "closed-form momentum density vs Fourier quadrature",
            Self::ClassicalLimit => "momentum mass near the classical values +-p_n",
            Self::Tof => "free expansion: m(x_peak - L/2)/t -> +-p_n, energy conserved",
            Self::ThermoChain => "P -> heat -> u -> -(hbar/2m) P'/P",
            Self::ThermalBox => "Q'' - (1/D) dQ/dt = -(1+i) k_n^2 Q",
            Self::ParabolicOracle => "Crank-Nicolson vs separated thermal solution",
            Self::Vft => "work -2E dL/L = (dE/dL) dL and ratio exp(-2 dL/L)",
            Self::Equivalence => "|Q|^2 of the thermal box mode vs |psi_n|^2",
        }
    }

    /// Tolerance names and their defaults.
    pub fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Self::Eigenstate => &[("potential", 1e-6)],
            Self::Momentum => &[("oracle", 1e-6), ("normalization", 1e-4)],
            Self::ClassicalLimit => &[("capture", 0.0)],
            Self::Tof => &[("norm", 1e-6), ("momentum", 0.05), ("energy", 0.02), ("share", 0.1)],
            Self::ThermoChain => &[("round-trip", 1e-6)],
            Self::ThermalBox => &[("bound-factor", 1.5)],
            Self::ParabolicOracle => &[("oracle", 1e-4)],
            Self::Vft => &[("identity", 1e-14)],
            Self::Equivalence => &[("density", 1e-12)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_grid_points() -> usize {
    4097
}

fn default_window() -> f64 {
    0.1
}

/// A fully specified run. Serializes to the JSON accepted by `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(rename = "box", default)]
    pub box_cfg: BoxConfig,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Output times; empty selects the experiment's default schedule.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Wall displacement for `vft`.
    #[serde(default)]
    pub dl: Option<f64>,
    /// Relative half-width of the classical momentum windows.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Overrides of the experiment's default tolerances.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub sample_seed: u64,
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            box_cfg: BoxConfig::default(),
            grid_points: default_grid_points(),
            times: Vec::new(),
            dl: None,
            window: default_window(),
            format: OutputFormat::Csv,
            out: None,
            tolerances: BTreeMap::new(),
            sample_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.box_cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.grid_points < 3 {
            return Err(usage("grid-points", "need at least 3 points"));
        }
        if self.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(usage("times", "must be finite and non-negative"));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(usage("times", "must be strictly increasing"));
        }
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(usage("window", "must be positive"));
        }
        if let Some(dl) = self.dl {
            if !dl.is_finite() {
                return Err(usage("dL", "must be finite"));
            }
        }
        if self.experiment == Experiment::Vft && self.dl.is_none() {
            return Err(usage("dL", "required by the vft experiment"));
        }
        let known = self.experiment.default_tolerances();
        for (name, value) in &self.tolerances {
            if !known.iter().any(|(k, _)| k == name) {
                let names: Vec<_> = known.iter().map(|(k, _)| *k).collect();
                return Err(CliError::Usage(format!(
                    "unknown tolerance `--tol-{name}` for {}; expected one of {}",
                    self.experiment.name(),
                    names.join(", ")
                )));
            }
            if !(value.is_finite() && *value >= 0.0) {
                return Err(CliError::Usage(format!("tolerance `--tol-{name}` must be non-negative, got {value}")));
            }
        }
        Ok(())
    }

    /// Default tolerances with overrides applied.
    pub fn effective_tolerances(&self) -> BTreeMap<String, f64> {
        self.experiment
            .default_tolerances()
            .iter()
            .map(|(k, v)| (k.to_string(), *self.tolerances.get(*k).unwrap_or(v)))
            .collect()
    }

    fn tol(&self, name: &str) -> f64 {
        self.effective_tolerances()[name]
    }

    pub fn data_path(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let ext = match self.format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            };
            PathBuf::from(format!("{}.{ext}", self.experiment.name()))
        })
    }

    pub fn sidecar_path(&self) -> PathBuf {
        self.data_path().with_extension("meta.json")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Args(#[from] clap::Error),
    #[error("{0}")]
    Model(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Args(e) if !e.use_stderr() => EXIT_OK,
            Self::Model(Error::NotAsymptotic(_) | Error::SpectralResolution { .. } | Error::NonPositiveDensity { .. }) => {
                EXIT_PHYSICS
            }
            _ => EXIT_USAGE,
        }
    }
}

fn usage(field: &str, reason: &str) -> CliError {
    CliError::Usage(format!("invalid `--{field}`: {reason}"))
}

#[derive(Debug, Parser)]
#[command(name = "subq", version, about = "Boxed quantum states and their diffusion-wave analogues")]
struct Args {
    /// Experiment to run.
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// JSON run configuration; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Quantum number (highest mode for `equivalence`).
    #[arg(long)]
    n: Option<u32>,
    /// Box length.
    #[arg(long = "L", allow_negative_numbers = true)]
    length: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mass: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    hbar: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Comma-separated output times.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    times: Option<Vec<f64>>,
    /// Wall displacement (vft).
    #[arg(long = "dL", allow_negative_numbers = true)]
    dl: Option<f64>,
    /// Relative window around +-p_n (classical-limit).
    #[arg(long, allow_negative_numbers = true)]
    window: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Data file; the sidecar goes next to it as `<stem>.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random test points of `momentum`.
    #[arg(long)]
    sample_seed: Option<u64>,
}

/// Pulls `--tol-<name> <value>` and `--tol-<name>=<value>` out of the argument list.
fn split_tolerances(args: Vec<String>) -> Result<(Vec<String>, BTreeMap<String, f64>), CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut tols = BTreeMap::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(rest_of_flag) = arg.strip_prefix("--tol-") else {
            rest.push(arg);
            continue;
        };
        let (name, raw) = match rest_of_flag.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| CliError::Usage(format!("`--tol-{rest_of_flag}` needs a value")))?;
                (rest_of_flag.to_string(), v)
            }
        };
        let value: f64 = raw
            .parse()
            .map_err(|_| CliError::Usage(format!("invalid `--tol-{name}`: cannot parse `{raw}`")))?;
        tols.insert(name, value);
    }
    Ok((rest, tols))
}

/// Builds a validated configuration from command-line arguments (program name first).
pub fn parse_config<I, S>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let (args, tols) = split_tolerances(args.into_iter().map(Into::into).collect())?;
    let a = Args::try_parse_from(args)?;
    let mut cfg = match &a.config {
        Some(path) => {
            let mut c = read_config(path)?;
            if let Some(e) = a.experiment {
                c.experiment = e;
            }
            c
        }
        None => RunConfig::new(a.experiment.ok_or_else(|| CliError::Usage("missing `--experiment`".into()))?),
    };
    if let Some(n) = a.n {
        cfg.box_cfg.n = n;
    }
    if let Some(l) = a.length {
        cfg.box_cfg.length = l;
    }
    if let Some(m) = a.mass {
        cfg.box_cfg.mass = m;
    }
    if let Some(h) = a.hbar {
        cfg.box_cfg.hbar = h;
    }
    if let Some(g) = a.grid_points {
        cfg.grid_points = g;
    }
    if let Some(t) = a.times {
        cfg.times = t;
    }
    if a.dl.is_some() {
        cfg.dl = a.dl;
    }
    if let Some(w) = a.window {
        cfg.window = w;
    }
    if let Some(f) = a.format {
        cfg.format = f;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    if let Some(s) = a.sample_seed {
        cfg.sample_seed = s;
    }
    cfg.tolerances.extend(tols);
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)?;
    let cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_config(cfg: &RunConfig, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(cfg).expect("config serializes");
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Column-major results of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
    }
}

/// Result of an experiment before anything is written.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub experiment: Experiment,
    pub relation: &'static str,
    pub headline: &'static str,
    pub value: f64,
    /// Threshold the headline was compared against.
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip)]
    pub table: Table,
    /// Secondary comparisons against oracles.
    pub deltas: BTreeMap<String, f64>,
    /// Grid indices left out of pointwise comparisons.
    pub excluded: Vec<usize>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn summary(&self) -> String {
        format!(
            "{} [{}]: {} = {} (tolerance {:e}) {}",
            self.experiment.name(),
            self.relation,
            self.headline,
            format_value(self.value),
            self.tolerance,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_PHYSICS
        }
    }
}

fn format_value(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

struct Draft {
    headline: &'static str,
    value: f64,
    tolerance: f64,
    passed: bool,
    table: Table,
    deltas: BTreeMap<String, f64>,
    excluded: Vec<usize>,
    warnings: Vec<String>,
}

impl Draft {
    fn new(headline: &'static str, value: f64, tolerance: f64, table: Table) -> Self {
        Self {
            headline,
            value,
            tolerance,
            passed: value <= tolerance,
            table,
            deltas: BTreeMap::new(),
            excluded: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn delta(mut self, name: &str, value: f64) -> Self {
        self.deltas.insert(name.to_string(), value);
        self
    }
}

/// Runs the configured experiment without touching the filesystem.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let d = match cfg.experiment {
        Experiment::Eigenstate => run_eigenstate(cfg)?,
        Experiment::Momentum => run_momentum(cfg)?,
        Experiment::ClassicalLimit => run_classical_limit(cfg)?,
        Experiment::Tof => run_tof(cfg)?,
        Experiment::ThermoChain => run_thermo_chain(cfg)?,
        Experiment::ThermalBox => run_thermal_box(cfg)?,
        Experiment::ParabolicOracle => run_parabolic(cfg)?,
        Experiment::Vft => run_vft(cfg)?,
        Experiment::Equivalence => run_equivalence(cfg)?,
    };
    Ok(Outcome {
        experiment: cfg.experiment,
        relation: cfg.experiment.relation(),
        headline: d.headline,
        value: d.value,
        tolerance: d.tolerance,
        passed: d.passed && d.value.is_finite(),
        table: d.table,
        deltas: d.deltas,
        excluded: d.excluded,
        warnings: d.warnings,
    })
}

/// Writes the data file and its sidecar.
pub fn write_outputs(cfg: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    let data = match cfg.format {
        OutputFormat::Csv => outcome.table.to_csv()?,
        OutputFormat::Json => {
            let mut v = serde_json::to_vec_pretty(&outcome.table).expect("table serializes");
            v.push(b'\n');
            v
        }
    };
    fs::File::create(cfg.data_path())?.write_all(&data)?;
    let meta = json!({
        "config": cfg,
        "tolerances": cfg.effective_tolerances(),
        "outcome": outcome,
        "data_file": cfg.data_path(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    fs::write(cfg.sidecar_path(), text)?;
    Ok(())
}

/// Full invocation: parse, run, write, print. Returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let cfg = match parse_config(args) {
        Ok(c) => c,
        Err(CliError::Args(e)) => {
            let _ = e.print();
            return CliError::Args(e).exit_code();
        }
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = write_outputs(&cfg, &outcome) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", outcome.summary());
    outcome.exit_code()
}

fn start_time(cfg: &RunConfig) -> f64 {
    cfg.times.first().copied().unwrap_or(0.0)
}

fn masked_or_nan(values: &[f64], included: &[bool], i: usize) -> f64 {
    if included[i] {
        values[i]
    } else {
        f64::NAN
    }
}

fn run_eigenstate(cfg: &RunConfig) -> Result<Draft, CliError> {
    let b = cfg.box_cfg;
    let grid = b.box_grid(cfg.grid_points)?;
    let psi = eigenstate(&b, &grid, start_time(cfg))?;
    let u = quantum_potential_with(&psi, &b, Stencil::Fourth, default_node_guard(&grid))?;
    let e = b.energy();
    let dev = u.max_deviation_from(e) / e;
    let mut t = Table::new(&["x", "psi_re", "psi_im", "density", "U"]);
    for (i, x) in grid.points().enumerate() {
        let z = psi.values[i];
        t.push(vec![x, z.re, z.im, z.norm_sqr(), masked_or_nan(&u.values, &u.included, i)]);
    }
    let mut d = Draft::new("max_relative_U_deviation", dev, cfg.tol("potential"), t);
    d.excluded = u.excluded_indices();
    if u.included_count() == 0 {
        d.passed = false;
        d.warnings.push("every grid point lies within the node guard; refine the grid".into());
    }
    Ok(d.delta("energy", e))
}

fn momentum_grid(cfg: &BoxConfig, half_width: f64, points: usize) -> Result<Grid, CliError> {
    let resolution = 0.05 * PI * cfg.hbar / cfg.length;
    let needed = (2.0 * half_width / resolution).ceil() as usize + 1;
    Ok(Grid::new(-half_width, half_width, points.max(needed) | 1)?)
}

fn run_momentum(cfg: &RunConfig) -> Result<Draft, CliError> {
    let b = cfg.box_cfg;
    let pn = b.momentum();
    let span = 4.0 * pn + 10.0 * PI * b.hbar / b.length;
    let rule = GaussLegendre::new(20);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed);
    let mut worst: f64 = 0.0;
    let mut taken = 0;
    while taken < 200 {
        let p: f64 = rng.gen_range(-span..span);
        if (p.abs() - pn).abs() < 1e-3 * pn {
            continue;
        }
        let closed = momentum_density_closed_form(&b, p);
        let numeric = momentum_amplitude_numeric(&b, p, &rule).norm_sqr();
        worst = worst.max((closed - numeric).abs() / closed.max(numeric));
        taken += 1;
    }
    let norm = momentum_normalization(&b);
    let norm_error = (norm.total() - 1.0).abs();

    let grid = Grid::new(-span, span, cfg.grid_points)?;
    let mut t = Table::new(&["p", "density", "density_oracle"]);
    for p in grid.points() {
        t.push(vec![p, momentum_density_closed_form(&b, p), momentum_amplitude_numeric(&b, p, &rule).norm_sqr()]);
    }
    let mut d = Draft::new("max_relative_oracle_difference", worst, cfg.tol("oracle"), t)
        .delta("normalization_error", norm_error)
        .delta("normalization_tail", norm.tail_estimate);
    if norm_error > cfg.tol("normalization") {
        d.passed = false;
        d.warnings.push(format!("normalization off by {norm_error:e}"));
    }
    Ok(d)
}

fn run_classical_limit(cfg: &RunConfig) -> Result<Draft, CliError> {
    let b = cfg.box_cfg;
    let pn = b.momentum();
    let grid = momentum_grid(&b, 2.0 * pn + 40.0 * PI * b.hbar / b.length, cfg.grid_points)?;
    let spectrum = MomentumSpectrum::closed_form(&b, &grid)?;
    let captured = classical_limit_metric(&spectrum, &b, cfg.window);
    let mut t = Table::new(&["p", "density"]);
    for (p, rho) in grid.points().zip(&spectrum.density) {
        t.push(vec![p, *rho]);
    }
    let mut d = Draft::new("captured_mass", captured, cfg.tol("capture"), t);
    d.passed = captured >= d.tolerance;
    Ok(d.delta("grid_probability", spectrum.total_probability()))
}

fn run_tof(cfg: &RunConfig) -> Result<Draft, CliError> {
    let b = cfg.box_cfg;
    let crossing = b.length / b.classical_speed();
    let times = if cfg.times.is_empty() {
        [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0].iter().map(|c| c * crossing).collect()
    } else {
        cfg.times.clone()
    };
    let req = PropagationRequest::with_auto_grid(b, times, 0)?;
    let fields = propagate_free(&req)?;
    let split = energy_bookkeeping(&fields, &b)?;
    let e = b.energy();
    let pn = b.momentum();

    let mut t = Table::new(&["t", "norm", "kinetic", "U", "total", "quantum_share", "p_left", "p_right"]);
    let (mut norm_drift, mut energy_error, mut momentum_error): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut asymptotic = 0;
    let mut warnings = Vec::new();
    for (i, (f, s)) in fields.iter().zip(&split).enumerate() {
        let norm = discrete_norm(f);
        norm_drift = norm_drift.max((norm - 1.0).abs());
        energy_error = energy_error.max((s.total - e).abs() / e);
        let (mut pl, mut pr) = (f64::NAN, f64::NAN);
        if f.time >= 3.0 * crossing {
            let m = time_of_flight_momenta(&fields[i..=i], &b)?;
            pl = m.left;
            pr = m.right;
            momentum_error = momentum_error.max((m.left + pn).abs() / pn).max((m.right - pn).abs() / pn);
            asymptotic += 1;
        }
        if !s.reliable {
            warnings.push(format!("t = {}: {:.1}% of the energy sits on density nodes", f.time, 100.0 * s.excluded_fraction));
        }
        t.push(vec![f.time, norm, s.kinetic, s.quantum, s.total, s.quantum_share, pl, pr]);
    }
    let last_share = split.last().map_or(f64::NAN, |s| s.quantum_share);
    let mut d = Draft::new("max_momentum_error", momentum_error, cfg.tol("momentum"), t)
        .delta("norm_drift", norm_drift)
        .delta("energy_error", energy_error)
        .delta("final_quantum_share", last_share);
    d.warnings = warnings;
    if asymptotic == 0 {
        d.passed = false;
        d.warnings.push(format!("no sampled time reaches 3 crossing times ({crossing})"));
    }
    if norm_drift > cfg.tol("norm") || energy_error > cfg.tol("energy") || (asymptotic > 0 && last_share > cfg.tol("share")) {
        d.passed = false;
    }
    Ok(d)
}

fn run_thermo_chain(cfg: &RunConfig) -> Result<Draft, CliError> {
    let b = cfg.box_cfg;
    let grid = b.box_grid(cfg.grid_points)?;
    let pair = madelung_decompose(&eigenstate(&b, &grid, start_time(cfg))?, &b)?;
    let tf = thermo_fields(&pair, None, &b)?;
    let p0 = vec![1.0 / b.length; grid.len()];
    let back = probability_from_heat(&tf.heat, &p0, &b)?;
    let stencil = Stencil::Eighth;
    let u = u_from_heat_with(&tf.heat, &grid, &b, stencil)?;
    let potential = quantum_potential_from_u(&u, &b)?;
    let mask: Vec<bool> = pair.guard_mask(stencil.radius()).iter().zip(&u.included).map(|(a, c)| *a && *c).collect();

    let k = b.wavenumber();
    let scale = b.hbar / (b.mass * b.length);
    let (mut round_trip, mut chain): (f64, f64) = (0.0, 0.0);
    let mut t = Table::new(&["x", "density", "heat", "u", "u_oracle", "U"]);
    for (i, x) in grid.points().enumerate() {
        // -(ħ/2m)·P′/P for P ∝ sin²(kx)
        let exact = -b.hbar / b.mass * k / (k * x).tan();
        if mask[i] {
            round_trip = round_trip.max((back[i] - tf.density[i]).abs() / tf.density[i]);
            chain = chain.max((u.values[i] - exact).abs() / exact.abs().max(scale));
        }
        t.push(vec![
            x,
            tf.density[i],
            tf.heat[i],
            masked_or_nan(&u.values, &mask, i),
            exact,
            masked_or_nan(&potential.values, &potential.included, i),
        ]);
    }
    let mut d = Draft::new("max_u_chain_error", chain.max(round_trip), cfg.tol("round-trip"), t)
        .delta("density_round_trip", round_trip)
        .delta("u_chain", chain);
    d.excluded = (0..grid.len()).filter(|&i| !mask[i]).collect();
    Ok(d)
}

fn run_thermal_box(cfg: &RunConfig) -> Result<Draft, CliError> {
    let b = cfg.box_cfg;
    let grid = b.box_grid(cfg.grid_points)?;
    let state = separated_solution(&b, &grid, start_time(cfg))?;
    let res = pseudo_helmholtz_residual(&state);
    let (k, h) = (b.wavenumber(), grid.spacing());
    let amp = state.field.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // truncation of the three-point Laplacian on sin(kx) plus rounding of the difference quotient
    let bound = (k.powi(4) * h * h / 12.0 + 4.0 * f64::EPSILON / (h * h) + 4.0 * f64::EPSILON * k * k) * amp;
    let mut t = Table::new(&["x", "Qtilde_re", "Qtilde_im", "residual_re", "residual_im"]);
    for (i, x) in grid.points().enumerate() {
        let (q, r) = (state.field.values[i], res.values[i]);
        let r = if res.included[i] { r } else { Complex64::new(f64::NAN, f64::NAN) };
        t.push(vec![x, q.re, q.im, r.re, r.im]);
    }
    let max = res.max_abs();
    let mut d = Draft::new("max_residual", max, cfg.tol("bound-factor") * bound, t).delta("truncation_bound", bound);
    d.excluded = (0..grid.len()).filter(|&i| !res.included[i]).collect();
    Ok(d)
}

fn run_parabolic(cfg: &RunConfig) -> Result<Draft, CliError> {
    let b = cfg.box_cfg;
    let grid = b.box_grid(cfg.grid_points)?;
    let source = boxed_source(&b, &grid)?;
    let t0 = start_time(cfg);
    let init = separated_solution(&b, &grid, t0)?.field;
    let period = 2.0 * PI / b.omega();
    let options = SolverOptions { max_step: period / 2000.0 };
    let run = solve_parabolic(&source, DirichletValues::ZERO, &init, &[t0, t0 + period], options)?;
    let exact = separated_solution(&b, &grid, t0 + period)?.field;
    let got = &run.fields[1];
    let amp = exact.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err = got.max_abs_diff(&exact)? / amp;
    let mut t = Table::new(&["x", "Qtilde_re", "Qtilde_im", "residual_re", "residual_im"]);
    for (i, x) in grid.points().enumerate() {
        let (q, r) = (got.values[i], got.values[i] - exact.values[i]);
        t.push(vec![x, q.re, q.im, r.re, r.im]);
    }
    Ok(Draft::new("max_relative_error", err, cfg.tol("oracle"), t)
        .delta("steps", run.steps as f64)
        .delta("max_step_norm_change", run.max_step_norm_change))
}

fn run_vft(cfg: &RunConfig) -> Result<Draft, CliError> {
    let b = cfg.box_cfg;
    let dl = cfg.dl.expect("validated");
    let m = WallMove::new(b, dl)?;
    let r = work_report(&m);
    let scale = r.work_classical.abs().max(f64::MIN_POSITIVE);
    let identity = (r.work_classical - r.work_quantum).abs() / scale;
    let ratio = vft_ratio(&m);
    let reciprocity = (ratio * (2.0 * m.relative()).exp() - 1.0).abs();
    let mut t = Table::new(&["L", "dL", "work_classical", "work_quantum", "work_numeric", "ratio"]);
    t.push(vec![b.length, dl, r.work_classical, r.work_quantum, r.work_numeric, ratio]);
    let mut d = Draft::new("ratio", ratio, cfg.tol("identity"), t)
        .delta("work_identity", identity)
        .delta("reciprocity", reciprocity)
        .delta("first_order_error", (r.level_shift - r.work_numeric).abs() / b.energy());
    d.passed = identity <= d.tolerance && reciprocity <= 4.0 * f64::EPSILON;
    if r.exceeds_threshold {
        d.warnings.push(format!("|dL|/L = {} is outside the slow-wall regime", m.relative().abs()));
    }
    Ok(d)
}

fn run_equivalence(cfg: &RunConfig) -> Result<Draft, CliError> {
    let b = cfg.box_cfg;
    let grid = b.box_grid(cfg.grid_points)?;
    let times = if cfg.times.is_empty() { vec![0.0, 0.1, 0.5] } else { cfg.times.clone() };
    let mut worst: f64 = 0.0;
    let mut conj: f64 = 0.0;
    for n in 1..=b.n {
        let mode = b.with_mode(n);
        for &time in &times {
            let thermal = separated_solution(&mode, &grid, time)?;
            let psi = eigenstate(&mode, &grid, time)?;
            let rep = equivalence_check(&thermal, &psi)?;
            worst = worst.max(rep.max_density_difference);
            conj = conj.max(rep.max_conjugate_difference);
        }
    }
    let last = *times.last().expect("non-empty");
    let thermal = separated_solution(&b, &grid, last)?.field;
    let psi = eigenstate(&b, &grid, last)?;
    let mut t = Table::new(&["x", "psi_re", "psi_im", "Qtilde_re", "Qtilde_im", "density"]);
    for (i, x) in grid.points().enumerate() {
        let (p, q) = (psi.values[i], thermal.values[i]);
        t.push(vec![x, p.re, p.im, q.re, q.im, p.norm_sqr()]);
    }
    Ok(Draft::new("max_density_difference", worst, cfg.tol("density"), t).delta("max_conjugate_difference", conj))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let cfg = parse_config(["subq", "--experiment", "equivalence", "--n", "3"]).unwrap();
        assert_eq!(cfg.box_cfg.n, 3);
        assert_eq!(cfg.grid_points, 4097);
        assert_eq!(cfg.box_cfg.length, 1.0);
        assert_eq!(cfg.experiment, Experiment::Equivalence);
    }

    #[test]
    fn negative_length_is_a_usage_error() {
        let err = parse_config(["subq", "--experiment", "eigenstate", "--L", "-1"]).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
        assert!(err.to_string().contains('L'));
    }

    #[test]
    fn unknown_experiment_and_tolerance() {
        assert_eq!(parse_config(["subq", "--experiment", "teleport"]).unwrap_err().exit_code(), EXIT_USAGE);
        let err = parse_config(["subq", "--experiment", "vft", "--dL", "0.1", "--tol-bogus", "1"]).unwrap_err();
        assert!(err.to_string().contains("--tol-bogus"));
    }

    #[test]
    fn tolerance_overrides_both_spellings() {
        let cfg = parse_config(["subq", "--experiment", "tof", "--tol-momentum", "0.01", "--tol-norm=1e-8"]).unwrap();
        let t = cfg.effective_tolerances();
        assert_eq!(t["momentum"], 0.01);
        assert_eq!(t["norm"], 1e-8);
        assert_eq!(t["energy"], 0.02);
    }

    #[test]
    fn vft_needs_displacement() {
        assert!(parse_config(["subq", "--experiment", "vft"]).is_err());
        let cfg = parse_config(["subq", "--experiment", "vft", "--dL", "-0.1"]).unwrap();
        let out = run(&cfg).unwrap();
        assert!(out.passed);
        assert!(out.summary().contains("1.2214"));
    }

    #[test]
    fn config_json_round_trip() {
        let mut cfg = RunConfig::new(Experiment::Momentum);
        cfg.box_cfg.n = 7;
        cfg.times = vec![0.0, 0.25];
        cfg.tolerances.insert("oracle".into(), 1e-7);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new(&["x", "U"]);
        t.push(vec![0.5, f64::NAN]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "x,U\n0.5,NaN\n");
    }
}
