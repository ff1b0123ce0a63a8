//! Initial data, simulation runs and temporal convergence studies.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Example, ExperimentConfig, InitialProfile};
use super::snapshot::{snapshot_name, write_snapshot};
use crate::correctors::{Scheme, StepReport, Stepper};
use crate::error::{Error, Result};
use crate::etdrk::ExponentialTableau;
use crate::models::{energy, FlowSpec};
use crate::par;
use crate::spectral::{Field, Grid};

/// Uniform values in `(-1, 1)` drawn in node order from ChaCha8 keyed by `seed`.
pub fn random_field(grid: Arc<Grid>, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len())
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            2.0 * u - 1.0
        })
        .collect();
    Field::new(grid, values).expect("length matches grid")
}

fn tanh_ball(x: [f64; 3], centre: [f64; 3], radius: f64, epsilon: f64) -> f64 {
    let r = ((x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2) + (x[2] - centre[2]).powi(2))
        .sqrt();
    ((radius - r) / (SQRT_2 * epsilon)).tanh()
}

/// Shift applied to the four-sphere sum so the background sits at -1 and the
/// sphere interiors at +1. The unshifted sum is -4 far from the spheres.
pub const SPHERE_SHIFT: f64 = 3.0;

/// Sum of four tanh profiles around the spheres of the 3D examples.
fn spheres(x: [f64; 3], epsilon: f64, shift: f64) -> f64 {
    let q = PI / 4.0;
    shift
        + tanh_ball(x, [-q, -q, 0.0], PI / 6.0, epsilon)
        + tanh_ball(x, [-q, q, 0.0], PI / 5.0, epsilon)
        + tanh_ball(x, [q, q, 0.0], PI / 6.0, epsilon)
        + tanh_ball(x, [0.0, 0.0, PI / 3.0], PI / 6.0, epsilon)
}

/// Initial data of the four examples.
pub fn initial_data(example: Example, grid: Arc<Grid>, seed: u64, epsilon: f64) -> Result<Field> {
    preset_data(example, grid, seed, epsilon, SPHERE_SHIFT)
}

fn preset_data(
    example: Example,
    grid: Arc<Grid>,
    seed: u64,
    epsilon: f64,
    shift: f64,
) -> Result<Field> {
    let need = |d: usize| {
        if grid.dim() == d {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "example {example} is {d}-dimensional, grid is {}-dimensional",
                grid.dim()
            )))
        }
    };
    match example {
        Example::Ac2d => {
            need(2)?;
            Ok(Field::from_fn(grid, |x| {
                tanh_ball([x[0], x[1], 0.0], [PI, PI, 0.0], 1.0, epsilon)
            }))
        }
        Example::Ac3d => {
            need(3)?;
            Ok(Field::from_fn(grid, |x| spheres(x, epsilon, shift)))
        }
        Example::Ch2d => {
            need(2)?;
            Ok(random_field(grid, seed).map(|r| 0.2 + 0.05 * r))
        }
        Example::Ch3d => {
            need(3)?;
            Ok(Field::from_fn(grid, |x| 0.5 * spheres(x, epsilon, shift)))
        }
        Example::Custom => Err(Error::InvalidArgument(
            "the custom example has no preset initial data".into(),
        )),
    }
}

/// Initial field selected by the config's profile.
pub fn initial_field(cfg: &ExperimentConfig, grid: Arc<Grid>) -> Result<Field> {
    match cfg.initial {
        InitialProfile::Preset => initial_data(cfg.example, grid, cfg.seed, cfg.epsilon),
        InitialProfile::Unshifted => preset_data(cfg.example, grid, cfg.seed, cfg.epsilon, 0.0),
        InitialProfile::Cosine => Ok(Field::from_fn(grid, |x| x[0].cos())),
        InitialProfile::Random { mean, amplitude } => {
            Ok(random_field(grid, cfg.seed).map(|r| mean + amplitude * r))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    SteadyState,
    BlowUp,
}

impl RunStatus {
    pub fn exit_code(self) -> u8 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::SteadyState => 3,
            RunStatus::BlowUp => 4,
        }
    }
}

/// One row of `energy.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub eta: f64,
    pub newton_iters: usize,
    pub lambda_max: f64,
    pub energy: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub mean: f64,
}

#[derive(Debug)]
pub struct SimulationOutcome {
    pub final_field: Field,
    /// Row 0 is the initial state.
    pub records: Vec<StepRecord>,
    /// Full corrector reports, one per completed step.
    pub reports: Vec<StepReport>,
    pub snapshots: Vec<PathBuf>,
    pub status: RunStatus,
    pub message: Option<String>,
}

impl SimulationOutcome {
    pub fn max_abs(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.phi_min.abs().max(r.phi_max.abs()))
            .fold(0.0, f64::max)
    }

    /// Largest `E^{n+1} - E^n` scaled by `max(1, |E^n|)`.
    pub fn max_relative_energy_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].energy - w[0].energy) / w[0].energy.abs().max(1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn run_simulation(cfg: &ExperimentConfig) -> Result<SimulationOutcome> {
    cfg.validate()?;
    let flow = cfg.flow()?;
    let tableau = cfg.tableau()?;
    let init = initial_field(cfg, flow.grid().clone())?;
    simulate(cfg, &flow, &tableau, init)
}

/// Runs `cfg` from `initial` with an explicit tableau.
pub fn simulate(
    cfg: &ExperimentConfig,
    flow: &FlowSpec,
    tableau: &ExponentialTableau,
    initial: Field,
) -> Result<SimulationOutcome> {
    let stepper = Stepper::new(cfg.scheme, tableau, flow, cfg.tau, cfg.corrector_configs(flow))?;
    let steps = cfg.steps();
    let snap_steps: Vec<usize> = if cfg.snapshot_times.is_empty() {
        vec![steps]
    } else {
        cfg.snapshot_times
            .iter()
            .map(|t| (t / cfg.tau).round() as usize)
            .collect()
    };
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
    }
    let mut snapshots = Vec::new();
    let mut snap = |n: usize, field: &Field| -> Result<()> {
        if let Some(dir) = &cfg.out {
            if snap_steps.contains(&n) {
                let path = dir.join(snapshot_name(n as f64 * cfg.tau));
                write_snapshot(field, &path)?;
                snapshots.push(path);
            }
        }
        Ok(())
    };

    let (lo, hi) = initial.min_max();
    let mut records = vec![StepRecord {
        n: 0,
        t: 0.0,
        eta: 0.0,
        newton_iters: 0,
        lambda_max: 0.0,
        energy: energy(cfg.energy_form, flow, &initial)?,
        phi_min: lo,
        phi_max: hi,
        mean: initial.mean(),
    }];
    snap(0, &initial)?;
    let mut reports = Vec::with_capacity(steps);
    let mut phi = initial;
    let mut status = RunStatus::Completed;
    let mut message = None;
    for n in 1..=steps {
        let (next, rep) = match stepper.step(&phi) {
            Ok(r) => r,
            Err(Error::BlowUp(msg)) => {
                log::error!("blow-up at step {n}: {msg}");
                status = RunStatus::BlowUp;
                message = Some(format!("step {n}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        };
        records.push(StepRecord {
            n,
            t: n as f64 * cfg.tau,
            eta: rep.eta,
            newton_iters: rep.newton_iters,
            lambda_max: rep.lambda_max,
            energy: rep.energy_post_corrector2,
            phi_min: rep.phi_min,
            phi_max: rep.phi_max,
            mean: rep.mass_mean,
        });
        let steady = rep.steady_state_reached;
        reports.push(rep);
        phi = next;
        snap(n, &phi)?;
        if steady && cfg.stop_at_steady_state {
            status = RunStatus::SteadyState;
            message = Some(format!("steady state at step {n}"));
            break;
        }
    }
    if let Some(dir) = &cfg.out {
        write_records(&records, &dir.join("energy.csv"))?;
    }
    Ok(SimulationOutcome {
        final_field: phi,
        records,
        reports,
        snapshots,
        status,
        message,
    })
}

pub fn write_records(records: &[StepRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs independent configs on the worker pool.
pub fn run_batch(configs: &[ExperimentConfig]) -> Vec<Result<SimulationOutcome>> {
    par::map_items(configs, run_simulation)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub ladder: Vec<usize>,
    pub reference_scheme: Scheme,
    pub reference_tableau: String,
    pub reference_steps: usize,
}

impl Default for ConvergenceStudy {
    fn default() -> Self {
        Self {
            ladder: vec![50, 100, 200, 400, 800],
            reference_scheme: Scheme::Pcc,
            reference_tableau: "U-ETDRK4".into(),
            reference_steps: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub label: String,
    pub n: usize,
    pub tau: f64,
    pub error: f64,
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn last_rate(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rate)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n{:>6} {:>12} {:>12} {:>8}\n", self.label, "N", "tau", "error", "rate");
        for r in &self.rows {
            let rate = r.rate.map_or("-".to_string(), |p| format!("{p:.2}"));
            let _ = writeln!(out, "{:>6} {:>12.4e} {:>12.4e} {:>8}", r.n, r.tau, r.error, rate);
        }
        out
    }
}

pub fn write_convergence_csv(tables: &[ConvergenceTable], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in tables.iter().flat_map(|t| &t.rows) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `log(e_{k-1}/e_k) / log(N_k/N_{k-1})`, `None` for the first entry.
pub fn observed_rates(ns: &[usize], errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|k| {
            (k > 0).then(|| {
                (errors[k - 1] / errors[k]).ln() / (ns[k] as f64 / ns[k - 1] as f64).ln()
            })
        })
        .collect()
}

fn final_state(cfg: &ExperimentConfig, flow: &FlowSpec, tableau: &ExponentialTableau) -> Result<Field> {
    let init = initial_field(cfg, flow.grid().clone())?;
    let out = simulate(cfg, flow, tableau, init)?;
    match out.status {
        RunStatus::BlowUp => Err(Error::BlowUp(format!(
            "{} with tau = {:e}: {}",
            cfg.label(),
            cfg.tau,
            out.message.unwrap_or_default()
        ))),
        _ => Ok(out.final_field),
    }
}

fn ladder_config(cfg: &ExperimentConfig, steps: usize) -> ExperimentConfig {
    ExperimentConfig {
        tau: cfg.t_max / steps as f64,
        out: None,
        snapshot_times: Vec::new(),
        stop_at_steady_state: false,
        ..cfg.clone()
    }
}

/// Reference solution at `T` for the study.
pub fn reference_solution(study: &ConvergenceStudy, cfg: &ExperimentConfig) -> Result<Field> {
    let mut rc = ladder_config(cfg, study.reference_steps);
    rc.scheme = study.reference_scheme;
    rc.tableau = study.reference_tableau.clone();
    rc.validate()?;
    let smallest = cfg.t_max / study.ladder.iter().copied().max().unwrap_or(1) as f64;
    if rc.tau > smallest / 10.0 {
        log::warn!(
            "reference tau {:e} exceeds a tenth of the smallest ladder tau {:e}",
            rc.tau,
            smallest
        );
    }
    let flow = rc.flow()?;
    final_state(&rc, &flow, &rc.tableau()?)
}

pub fn run_convergence(study: &ConvergenceStudy, cfg: &ExperimentConfig) -> Result<ConvergenceTable> {
    let reference = reference_solution(study, cfg)?;
    run_convergence_against(study, cfg, &cfg.tableau()?, &reference)
}

/// Ladder of `cfg` with `tableau` against a precomputed reference; the
/// ladder entries run in parallel.
pub fn run_convergence_against(
    study: &ConvergenceStudy,
    cfg: &ExperimentConfig,
    tableau: &ExponentialTableau,
    reference: &Field,
) -> Result<ConvergenceTable> {
    if study.ladder.is_empty() {
        return Err(Error::InvalidArgument("empty convergence ladder".into()));
    }
    let flow = cfg.flow()?;
    let errors = par::map_items(&study.ladder, |&n| -> Result<f64> {
        let c = ladder_config(cfg, n);
        final_state(&c, &flow, tableau)?.l2_distance(reference)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let label = match cfg.scheme {
        Scheme::Plain => tableau.name.clone(),
        s => format!("{}-{}", tableau.name, s),
    };
    let rates = observed_rates(&study.ladder, &errors);
    let rows = study
        .ladder
        .iter()
        .zip(errors)
        .zip(rates)
        .map(|((&n, error), rate)| ConvergenceRow {
            label: label.clone(),
            n,
            tau: cfg.t_max / n as f64,
            error,
            rate,
        })
        .collect();
    Ok(ConvergenceTable { label, rows })
}
