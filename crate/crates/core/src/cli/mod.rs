//! The batch front end: run configuration and the four commands.
//!
//! A run is described by one JSON [`RunConfig`]; command-line flags
//! override its fields (flags > config file > built-in defaults). Each
//! command returns its rendered output rather than writing it, so that
//! runs can be compared byte for byte.

pub mod table;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{global_ode, local_ode_with_handoff, projected_p_trajectory, uniform_grid, OdeOptions, State, Trajectory};
use crate::error::Error;
use crate::hamiltonians::{h_k_local, lax_local, schneider_residual, sutherland_residual, vdiejen_residual};
use crate::linalg::{ToleranceProfile, C64};
use crate::local::{local_of_z, p_hat_of_z, z_of_local, CouplingParams, GlobalPoint, LocalPoint};
use crate::momentum::admissible;
use crate::sampling::{random_interior, random_near_corner, DEFAULT_PARAMS};
use crate::verify::{run_all, schneider_point, sutherland_point, VerificationReport};
use table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Verify,
    Simulate,
    Limits,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Projection,
    #[default]
    Local,
    Global,
    Both,
}

/// Starting point of a simulation, in either chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Local { p_hat: Vec<f64>, q_hat: Vec<f64> },
    Global { re: Vec<f64>, im: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LadderKind {
    /// Scale factor of the Sutherland limit.
    Beta,
    /// Shift of the van Diejen limit.
    R,
    /// Shift of the Schneider limit.
    Sigma,
}

impl LadderKind {
    fn name(self) -> &'static str {
        match self {
            LadderKind::Beta => "beta",
            LadderKind::R => "r",
            LadderKind::Sigma => "sigma",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            LadderKind::Beta => vec![1e-2, 5e-3, 2.5e-3],
            LadderKind::R => vec![5.0, 10.0, 15.0],
            LadderKind::Sigma => vec![3.0, 6.0, 9.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub kind: LadderKind,
    pub values: Vec<f64>,
}

/// `count` equally spaced values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        (0..self.count).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64).collect()
    }

    fn check(&self, what: &str) -> Result<(), CliError> {
        if self.count == 0 || !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(CliError::Config(format!("malformed {what} axis: need finite lo <= hi and count >= 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "over", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanConfig {
    /// A product grid over `p̂` at fixed angles.
    Positions { axes: Vec<Axis>, q_hat: Option<Vec<f64>> },
    /// A grid over `(u, v)` at a fixed local point.
    Couplings { u: Axis, v: Axis, point: Option<InitialState> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: CouplingParams,
    pub mode: Option<Mode>,
    /// Defaults to a seeded draw near the corner of the chamber.
    pub initial: Option<InitialState>,
    pub k: usize,
    pub t_max: f64,
    /// Number of steps of the sampling grid; rows are `samples + 1`.
    pub samples: usize,
    pub rtol: f64,
    pub tolerances: ToleranceProfile,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub method: Method,
    pub ladders: Vec<Ladder>,
    pub scan: Option<ScanConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: DEFAULT_PARAMS,
            mode: None,
            initial: None,
            k: 1,
            t_max: 1.0,
            samples: 10,
            rtol: OdeOptions::default().rtol,
            tolerances: ToleranceProfile::default(),
            seed: 42,
            out: None,
            format: None,
            method: Method::default(),
            ladders: [LadderKind::Beta, LadderKind::R, LadderKind::Sigma]
                .into_iter()
                .map(|kind| Ladder { kind, values: kind.default_values() })
                .collect(),
            scan: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn config_error(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_error(e: Error) -> CliError {
    CliError::Runtime(e.to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(config_error)?;
        let n = self.params.n;
        if self.k == 0 || self.k > n {
            return Err(CliError::Config(format!("k = {} must lie in 1..={n}", self.k)));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(CliError::Config(format!("t_max = {} must be finite and non-negative", self.t_max)));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(CliError::Config(format!("rtol = {} must lie in (0, 1)", self.rtol)));
        }
        if let Some(init) = &self.initial {
            self.initial_state(init)?;
        }
        Ok(())
    }

    /// Checks an initial state against `n` and the domain of its chart.
    fn initial_state(&self, init: &InitialState) -> Result<State, CliError> {
        let n = self.params.n;
        match init {
            InitialState::Local { p_hat, q_hat } => {
                if p_hat.len() != n || q_hat.len() != n {
                    return Err(CliError::Config(format!("initial p_hat and q_hat need {n} components")));
                }
                let pt = LocalPoint::new(p_hat.clone(), q_hat.clone()).map_err(config_error)?;
                lax_local(&self.params, &pt).map_err(config_error)?;
                Ok(State::Local(pt))
            }
            InitialState::Global { re, im } => {
                if re.len() != n || im.len() != n {
                    return Err(CliError::Config(format!("initial re and im need {n} components")));
                }
                let z = GlobalPoint::new(re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect()).map_err(config_error)?;
                Ok(State::global(&z))
            }
        }
    }

    fn start(&self) -> Result<State, CliError> {
        match &self.initial {
            Some(init) => self.initial_state(init),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                Ok(State::Local(random_near_corner(self.params.x, self.params.n, &mut rng)))
            }
        }
    }

    fn ode_options(&self) -> OdeOptions {
        OdeOptions::with_rtol(self.rtol)
    }
}

/// Rendered output of a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    /// Secondary JSON document (the deviation summary of `simulate --method both`).
    pub sidecar: Option<String>,
    /// Whether every suite passed; always true outside `verify`.
    pub pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&table.to_json()).expect("serializable");
            s.push('\n');
            s
        }
    }
}

pub fn run(config: &RunConfig, mode: Mode) -> Result<Outcome, CliError> {
    match mode {
        Mode::Verify => cmd_verify(config),
        Mode::Simulate => cmd_simulate(config),
        Mode::Limits => cmd_limits(config),
        Mode::Scan => cmd_scan(config),
    }
}

pub fn verification_report(config: &RunConfig) -> Result<VerificationReport, CliError> {
    config.validate()?;
    run_all(&config.params, config.seed, &config.tolerances).map_err(config_error)
}

/// Runs every suite; JSON by default, one CSV row per suite on request.
pub fn cmd_verify(config: &RunConfig) -> Result<Outcome, CliError> {
    let report = verification_report(config)?;
    let output = match config.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("serializable");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut t = Table::new(["suite", "samples", "max_residual", "tolerance", "pass"]);
            for s in &report.suites {
                t.push(vec![s.name.as_str().into(), s.samples.into(), s.max_residual.into(), s.tolerance.into(), s.pass.into()]);
            }
            t.to_csv()
        }
    };
    Ok(Outcome { output, sidecar: None, pass: report.pass })
}

fn local_columns(n: usize) -> Vec<String> {
    let mut c = vec!["method".to_string(), "t".to_string()];
    c.extend((1..=n).map(|j| format!("p_hat_{j}")));
    c.extend((1..=n).map(|j| format!("q_hat_{j}")));
    c.extend((1..=n).map(|j| format!("h_{j}")));
    c
}

fn global_columns(n: usize) -> Vec<String> {
    let mut c = vec!["method".to_string(), "t".to_string()];
    c.extend((1..=n).map(|j| format!("re_z_{j}")));
    c.extend((1..=n).map(|j| format!("im_z_{j}")));
    c.extend((1..=n).map(|j| format!("h_{j}")));
    c
}

fn numbers(values: &[f64]) -> impl Iterator<Item = Cell> + '_ {
    values.iter().map(|v| Cell::Num(*v))
}

/// Local coordinates of a sample; angles are blank where a component of
/// `z` vanishes and the chart does not reach.
fn local_cells(params: &CouplingParams, state: &State) -> Result<(Vec<Cell>, &'static str), CliError> {
    match state {
        State::Local(pt) => Ok((numbers(&pt.to_vec()).collect(), "local_ode")),
        State::Global { .. } => {
            let z = GlobalPoint::from_slice(&state.coordinates()).map_err(runtime_error)?;
            let mut cells: Vec<Cell> = numbers(&p_hat_of_z(params, &z)).collect();
            match local_of_z(params, &z) {
                Ok(pt) => cells.extend(numbers(&pt.q_hat)),
                Err(_) => cells.extend(std::iter::repeat(Cell::Empty).take(params.n)),
            }
            Ok((cells, "global_ode"))
        }
    }
}

fn local_start(config: &RunConfig, start: &State) -> Result<LocalPoint, CliError> {
    match start {
        State::Local(pt) => Ok(pt.clone()),
        State::Global { .. } => {
            let z = GlobalPoint::from_slice(&start.coordinates()).map_err(runtime_error)?;
            local_of_z(&config.params, &z).map_err(config_error)
        }
    }
}

fn global_start(config: &RunConfig, start: &State) -> Result<GlobalPoint, CliError> {
    match start {
        State::Local(pt) => z_of_local(&config.params, pt).map_err(config_error),
        State::Global { .. } => GlobalPoint::from_slice(&start.coordinates()).map_err(config_error),
    }
}

fn push_trajectory(table: &mut Table, params: &CouplingParams, traj: &Trajectory) -> Result<(), CliError> {
    for ((t, state), h) in traj.times.iter().zip(&traj.states).zip(&traj.conserved) {
        let (coords, method) = local_cells(params, state)?;
        let mut row = vec![Cell::from(method), Cell::Num(*t)];
        row.extend(coords);
        row.extend(numbers(h));
        table.push(row);
    }
    Ok(())
}

/// `p̂(t)` from the projection method; the angles are not reconstructed and
/// the `h_k`, constant along every flow, are those of the start.
fn push_projection(table: &mut Table, config: &RunConfig, start: &State, grid: &[f64]) -> Result<Vec<Vec<f64>>, CliError> {
    let params = &config.params;
    let z = global_start(config, start)?;
    let h = crate::hamiltonians::lax(params, &z).map_err(runtime_error)?.power_traces(params.n);
    let p = projected_p_trajectory(params, &z, config.k, grid).map_err(runtime_error)?;
    for (t, p_hat) in grid.iter().zip(&p) {
        let mut row = vec![Cell::from("projection"), Cell::Num(*t)];
        row.extend(numbers(p_hat));
        row.extend(std::iter::repeat(Cell::Empty).take(params.n));
        row.extend(numbers(&h));
        table.push(row);
    }
    Ok(p)
}

/// Integrates the flow of `h_k` and tabulates the samples.
pub fn cmd_simulate(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    let params = &config.params;
    let n = params.n;
    let start = config.start()?;
    let grid = uniform_grid(config.t_max, config.samples);
    let opts = config.ode_options();
    let format = config.format.unwrap_or(Format::Csv);
    let mut sidecar = None;
    let table = match config.method {
        Method::Global => {
            let z = global_start(config, &start)?;
            let traj = global_ode(params, &z, config.k, &grid, &opts).map_err(runtime_error)?;
            let mut table = Table::new(global_columns(n));
            for ((t, state), h) in traj.times.iter().zip(&traj.states).zip(&traj.conserved) {
                let mut row = vec![Cell::from("global_ode"), Cell::Num(*t)];
                row.extend(numbers(&state.coordinates()));
                row.extend(numbers(h));
                table.push(row);
            }
            table
        }
        Method::Local => {
            let pt = local_start(config, &start)?;
            let traj = local_ode_with_handoff(params, &pt, config.k, &grid, &opts).map_err(runtime_error)?;
            let mut table = Table::new(local_columns(n));
            push_trajectory(&mut table, params, &traj)?;
            table
        }
        Method::Projection => {
            let mut table = Table::new(local_columns(n));
            push_projection(&mut table, config, &start, &grid)?;
            table
        }
        Method::Both => {
            let pt = local_start(config, &start)?;
            let traj = local_ode_with_handoff(params, &pt, config.k, &grid, &opts).map_err(runtime_error)?;
            let mut table = Table::new(local_columns(n));
            push_trajectory(&mut table, params, &traj)?;
            let projected = push_projection(&mut table, config, &start, &grid)?;
            let mut deviation = 0.0f64;
            for (state, p) in traj.states.iter().zip(&projected) {
                let p_ode = match state {
                    State::Local(l) => l.p_hat.clone(),
                    State::Global { .. } => {
                        p_hat_of_z(params, &GlobalPoint::from_slice(&state.coordinates()).map_err(runtime_error)?)
                    }
                };
                deviation = p_ode.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(deviation, f64::max);
            }
            let summary = serde_json::json!({
                "methods": ["local_ode", "projection"],
                "k": config.k,
                "samples": grid.len(),
                "max_deviation_p_hat": deviation,
                "max_relative_drift": traj.max_relative_drift(),
            });
            sidecar = Some(serde_json::to_string_pretty(&summary).expect("serializable") + "\n");
            table
        }
    };
    Ok(Outcome { output: render(&table, format), sidecar, pass: true })
}

/// Residuals of the three limits along their parameter ladders, each at one
/// seeded generic point; `ratio` is the previous residual over the current.
pub fn cmd_limits(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    if config.ladders.is_empty() || config.ladders.iter().any(|l| l.values.is_empty()) {
        return Err(CliError::Config("every limit ladder needs at least one value".into()));
    }
    let params = &config.params;
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (sq, sp) = sutherland_point(n, &mut rng);
    let vd = random_interior(params.x, n, &mut rng);
    let (cq, cp) = schneider_point(params.x, n, &mut rng);
    let mut table = Table::new(["ladder", "parameter", "residual", "ratio"]);
    for ladder in &config.ladders {
        let mut previous: Option<f64> = None;
        for &value in &ladder.values {
            let residual = match ladder.kind {
                LadderKind::Beta => sutherland_residual(params, &sq, &sp, value),
                LadderKind::R => vdiejen_residual(params, &vd, value),
                LadderKind::Sigma => schneider_residual(params, &cq, &cp, value),
            }
            .map_err(runtime_error)?
            .abs();
            let ratio = previous.map(|p| p / residual);
            table.push(vec![ladder.kind.name().into(), value.into(), residual.into(), ratio.into()]);
            previous = Some(residual);
        }
    }
    Ok(Outcome { output: render(&table, config.format.unwrap_or(Format::Csv)), sidecar: None, pass: true })
}

/// The default scan: the `n`-dimensional position grid below the origin.
fn default_scan(params: &CouplingParams) -> ScanConfig {
    let count = if params.n <= 2 { 50 } else { 8 };
    let axes = (0..params.n)
        .map(|j| Axis { lo: -0.6 - (j as f64 + 1.0) * params.x.abs(), hi: 0.2, count })
        .collect();
    ScanConfig::Positions { axes, q_hat: None }
}

fn hamiltonian_cells(params: &CouplingParams, pt: &LocalPoint) -> Vec<Cell> {
    (1..=params.n).map(|k| h_k_local(params, pt, k).ok().into()).collect()
}

/// Evaluates the Hamiltonians over a grid. Rows follow the grid in
/// row-major order whatever the number of workers.
pub fn cmd_scan(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    let params = config.params;
    let n = params.n;
    let scan = config.scan.clone().unwrap_or_else(|| default_scan(&params));
    let mut table;
    match scan {
        ScanConfig::Positions { axes, q_hat } => {
            if axes.len() != n {
                return Err(CliError::Config(format!("position scan needs {n} axes, got {}", axes.len())));
            }
            for (j, a) in axes.iter().enumerate() {
                a.check(&format!("p_hat_{}", j + 1))?;
            }
            let q_hat = q_hat.unwrap_or_else(|| vec![0.0; n]);
            if q_hat.len() != n {
                return Err(CliError::Config(format!("q_hat needs {n} components")));
            }
            let values: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
            let total: usize = values.iter().map(Vec::len).product();
            let mut columns: Vec<String> = (1..=n).map(|j| format!("p_hat_{j}")).collect();
            columns.push("admissible".into());
            columns.extend((1..=n).map(|k| format!("h_{k}")));
            table = Table::new(columns);
            let rows: Vec<Vec<Cell>> = (0..total)
                .into_par_iter()
                .map(|mut index| {
                    let mut p = vec![0.0; n];
                    for j in (0..n).rev() {
                        p[j] = values[j][index % values[j].len()];
                        index /= values[j].len();
                    }
                    let ok = admissible(params.x, &p);
                    let mut row: Vec<Cell> = numbers(&p).collect();
                    row.push(ok.into());
                    if ok {
                        let pt = LocalPoint::new(p, q_hat.clone()).expect("lengths agree");
                        row.extend(hamiltonian_cells(&params, &pt));
                    } else {
                        row.extend(std::iter::repeat(Cell::Empty).take(n));
                    }
                    row
                })
                .collect();
            rows.into_iter().for_each(|r| table.push(r));
        }
        ScanConfig::Couplings { u, v, point } => {
            u.check("u")?;
            v.check("v")?;
            let pt = match point {
                Some(init) => match config.initial_state(&init)? {
                    State::Local(pt) => pt,
                    State::Global { .. } => return Err(CliError::Config("coupling scans take a local point".into())),
                },
                None => random_interior(params.x, n, &mut ChaCha8Rng::seed_from_u64(config.seed)),
            };
            let mut columns = vec!["u".to_string(), "v".to_string(), "admissible".to_string()];
            columns.extend((1..=n).map(|k| format!("h_{k}")));
            table = Table::new(columns);
            let grid: Vec<(f64, f64)> = u.values().into_iter().flat_map(|a| v.values().into_iter().map(move |b| (a, b))).collect();
            let rows: Vec<Vec<Cell>> = grid
                .par_iter()
                .map(|&(a, b)| {
                    let p = CouplingParams { u: a, v: b, ..params };
                    let ok = p.validate().is_ok();
                    let mut row = vec![Cell::Num(a), Cell::Num(b), ok.into()];
                    if ok {
                        row.extend(hamiltonian_cells(&p, &pt));
                    } else {
                        row.extend(std::iter::repeat(Cell::Empty).take(n));
                    }
                    row
                })
                .collect();
            rows.into_iter().for_each(|r| table.push(r));
        }
    }
    Ok(Outcome { output: render(&table, config.format.unwrap_or(Format::Csv)), sidecar: None, pass: true })
}
