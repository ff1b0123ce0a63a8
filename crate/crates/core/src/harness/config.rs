//! Experiment configuration: example presets, INI files and CLI overrides.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use ini::Ini;

use crate::correctors::{CorrectorConfigs, Scheme};
use crate::error::{Error, Result};
use crate::etdrk::ExponentialTableau;
use crate::models::{EnergyForm, FlowSpec, Mobility, PotentialModel};
use crate::spectral::{Axis, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Example {
    /// Allen–Cahn, 2D disk.
    Ac2d,
    /// Allen–Cahn, 3D spheres.
    Ac3d,
    /// Cahn–Hilliard with Flory–Huggins, 2D random.
    Ch2d,
    /// Cahn–Hilliard with Flory–Huggins, 3D spheres.
    Ch3d,
    Custom,
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "ac2d" | "1" | "example1" | "ex1" => Ok(Example::Ac2d),
            "ac3d" | "2" | "example2" | "ex2" => Ok(Example::Ac3d),
            "ch2d" | "3" | "example3" | "ex3" => Ok(Example::Ch2d),
            "ch3d" | "4" | "example4" | "ex4" => Ok(Example::Ch3d),
            "custom" => Ok(Example::Custom),
            _ => Err(Error::Config(format!("unknown example `{s}`"))),
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Example::Ac2d => "AC2D",
            Example::Ac3d => "AC3D",
            Example::Ch2d => "CH2D",
            Example::Ch3d => "CH3D",
            Example::Custom => "custom",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialChoice {
    DoubleWell,
    FloryHuggins,
    Zero,
}

impl FromStr for PotentialChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "double-well" | "doublewell" | "dw" => Ok(PotentialChoice::DoubleWell),
            "flory-huggins" | "floryhuggins" | "fh" => Ok(PotentialChoice::FloryHuggins),
            "zero" | "none" | "linear" => Ok(PotentialChoice::Zero),
            other => Err(Error::Config(format!("unknown potential `{other}`"))),
        }
    }
}

/// Initial profile. `Preset` uses the example's own formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialProfile {
    Preset,
    /// Preset formula with the 3D four-sphere sum left unshifted.
    Unshifted,
    /// `cos(x)` along the first axis.
    Cosine,
    /// `mean + amplitude · Rand`.
    Random { mean: f64, amplitude: f64 },
}

impl FromStr for InitialProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "preset" {
            return Ok(InitialProfile::Preset);
        }
        if s == "unshifted" {
            return Ok(InitialProfile::Unshifted);
        }
        if s == "cos" || s == "cosine" {
            return Ok(InitialProfile::Cosine);
        }
        // random:<mean>:<amplitude>
        if let Some(rest) = s.strip_prefix("random") {
            let parts: Vec<&str> = rest.split(':').filter(|p| !p.is_empty()).collect();
            let num = |p: &str| {
                p.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number `{p}` in initial profile")))
            };
            return match parts.as_slice() {
                [] => Ok(InitialProfile::Random { mean: 0.0, amplitude: 1.0 }),
                [m, a] => Ok(InitialProfile::Random { mean: num(m)?, amplitude: num(a)? }),
                _ => Err(Error::Config(format!("bad initial profile `{s}`"))),
            };
        }
        Err(Error::Config(format!("unknown initial profile `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub example: Example,
    pub scheme: Scheme,
    pub tableau: String,
    pub dim: usize,
    pub grid: usize,
    pub domain: (f64, f64),
    pub mobility: Mobility,
    pub potential: PotentialChoice,
    pub epsilon: f64,
    pub beta: f64,
    /// `S = stabilizer_scale / ε²`.
    pub stabilizer_scale: f64,
    pub theta0: f64,
    pub delta: f64,
    pub extension_margin: Option<f64>,
    pub tau: f64,
    pub t_max: f64,
    pub energy_form: EnergyForm,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Times at which snapshots are written; empty means only the final time.
    pub snapshot_times: Vec<f64>,
    pub stop_at_steady_state: bool,
    pub initial: InitialProfile,
    pub projection_energy: bool,
    pub newton_rel_tol: f64,
    pub max_newton_iters: usize,
}

impl ExperimentConfig {
    /// Desk-scale defaults of one example.
    pub fn preset(example: Example) -> Self {
        let base = Self {
            example,
            scheme: Scheme::Pcc,
            tableau: "U-ETDRK3".into(),
            dim: 2,
            grid: 128,
            domain: (0.0, 2.0 * PI),
            mobility: Mobility::Identity,
            potential: PotentialChoice::DoubleWell,
            epsilon: 0.1,
            beta: 1.0,
            stabilizer_scale: 1.0,
            theta0: 3.0,
            delta: 0.01,
            extension_margin: None,
            tau: 0.01,
            t_max: 0.5,
            energy_form: EnergyForm::InterpolationSpectral,
            seed: 0,
            out: None,
            snapshot_times: Vec::new(),
            stop_at_steady_state: false,
            initial: InitialProfile::Preset,
            projection_energy: false,
            newton_rel_tol: 1e-10,
            max_newton_iters: 30,
        };
        match example {
            Example::Ac2d => base,
            Example::Ac3d => Self {
                dim: 3,
                grid: 64,
                domain: (-PI, PI),
                t_max: 0.05,
                ..base
            },
            Example::Ch2d => Self {
                mobility: Mobility::MinusLaplacian,
                potential: PotentialChoice::FloryHuggins,
                tau: 1e-4,
                t_max: 0.005,
                ..base
            },
            Example::Ch3d => Self {
                dim: 3,
                grid: 64,
                domain: (-PI, PI),
                mobility: Mobility::MinusLaplacian,
                potential: PotentialChoice::FloryHuggins,
                stabilizer_scale: 5.0,
                tau: 1e-4,
                t_max: 0.002,
                ..base
            },
            Example::Custom => Self {
                dim: 1,
                grid: 32,
                potential: PotentialChoice::Zero,
                epsilon: 1.0,
                stabilizer_scale: 0.0,
                initial: InitialProfile::Cosine,
                t_max: 0.1,
                ..base
            },
        }
    }

    /// Reads an INI file. Sections only group keys; every key is global.
    /// The `example` key, or `cli_example` if given, selects the preset the
    /// remaining keys modify.
    pub fn from_ini_file(path: &Path, cli_example: Option<Example>) -> Result<Self> {
        let ini = Ini::load_from_file(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut pairs = Vec::new();
        for (_, props) in ini.iter() {
            for (k, v) in props.iter() {
                pairs.push((normalize_key(k), v.trim().to_string()));
            }
        }
        let example = match cli_example {
            Some(e) => e,
            None => match pairs.iter().find(|(k, _)| k == "example") {
                Some((_, v)) => v.parse()?,
                None => Example::Ac2d,
            },
        };
        let mut cfg = Self::preset(example);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "example") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Sets one key; names match the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        let v = value.trim();
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("`{key}`: expected a number, got `{v}`")))
        };
        let int = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| Error::Config(format!("`{key}`: expected an integer, got `{v}`")))
        };
        let flag = |v: &str| match v.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{v}`"))),
        };
        match key.as_str() {
            "example" => self.example = v.parse()?,
            "scheme" => self.scheme = v.parse()?,
            "tableau" => {
                ExponentialTableau::catalog(v)?;
                self.tableau = v.to_string();
            }
            "dim" => self.dim = int(v)? as usize,
            "grid" => self.grid = int(v)? as usize,
            "domain-min" => self.domain.0 = num(v)?,
            "domain-max" => self.domain.1 = num(v)?,
            "mobility" => {
                self.mobility = match v.to_ascii_lowercase().as_str() {
                    "identity" | "ac" | "allen-cahn" => Mobility::Identity,
                    "minus-laplacian" | "laplacian" | "ch" | "cahn-hilliard" => {
                        Mobility::MinusLaplacian
                    }
                    _ => return Err(Error::Config(format!("unknown mobility `{v}`"))),
                }
            }
            "potential" => self.potential = v.parse()?,
            "epsilon" => self.epsilon = num(v)?,
            "epsilon2" | "epsilon-squared" => self.epsilon = num(v)?.sqrt(),
            "beta" => self.beta = num(v)?,
            "stabilizer-scale" => self.stabilizer_scale = num(v)?,
            "theta0" => self.theta0 = num(v)?,
            "delta" => self.delta = num(v)?,
            "extension-margin" => self.extension_margin = Some(num(v)?),
            "tau" => self.tau = num(v)?,
            "tmax" => self.t_max = num(v)?,
            "energy-form" => self.energy_form = v.parse()?,
            "seed" => self.seed = int(v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "snapshots" => {
                self.snapshot_times = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(num)
                    .collect::<Result<_>>()?
            }
            "stop-at-steady-state" => self.stop_at_steady_state = flag(v)?,
            "initial" => self.initial = v.parse()?,
            "projection-energy" => self.projection_energy = flag(v)?,
            "newton-tol" => self.newton_rel_tol = num(v)?,
            "max-newton-iters" => self.max_newton_iters = int(v)? as usize,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.t_max >= self.tau) {
            return bad(format!("tmax {} must be at least tau {}", self.t_max, self.tau));
        }
        if self.grid < 4 || self.grid % 2 != 0 {
            return bad(format!("grid must be even and >= 4, got {}", self.grid));
        }
        if !(self.stabilizer_scale >= 0.0) {
            return bad(format!("stabilizer scale must be >= 0, got {}", self.stabilizer_scale));
        }
        if self.snapshot_times.iter().any(|&t| !(t >= 0.0 && t <= self.t_max + 0.5 * self.tau)) {
            return bad("snapshot times must lie in [0, tmax]".into());
        }
        let expected_dim = match self.example {
            Example::Ac2d | Example::Ch2d => Some(2),
            Example::Ac3d | Example::Ch3d => Some(3),
            Example::Custom => None,
        };
        if let Some(d) = expected_dim {
            if self.dim != d && matches!(self.initial, InitialProfile::Preset | InitialProfile::Unshifted) {
                return bad(format!("example {} needs dim {d}, got {}", self.example, self.dim));
            }
        }
        ExponentialTableau::catalog(&self.tableau)?;
        self.potential_model()?;
        self.grid()?;
        Ok(())
    }

    pub fn stabilizer(&self) -> f64 {
        self.stabilizer_scale / (self.epsilon * self.epsilon)
    }

    pub fn potential_model(&self) -> Result<PotentialModel> {
        let s = self.stabilizer();
        match self.potential {
            PotentialChoice::DoubleWell => PotentialModel::double_well(self.epsilon, self.beta, s),
            PotentialChoice::FloryHuggins => {
                let m = PotentialModel::flory_huggins(
                    self.epsilon,
                    self.beta,
                    self.theta0,
                    self.delta,
                    s,
                )?;
                match self.extension_margin {
                    Some(margin) => m.with_extension_margin(margin),
                    None => Ok(m),
                }
            }
            PotentialChoice::Zero => PotentialModel::zero(self.beta, s),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(vec![Axis::new(self.grid, self.domain.0, self.domain.1); self.dim])
    }

    pub fn flow(&self) -> Result<FlowSpec> {
        Ok(FlowSpec::new(
            self.mobility,
            self.potential_model()?,
            Arc::new(self.grid()?),
        ))
    }

    pub fn tableau(&self) -> Result<ExponentialTableau> {
        ExponentialTableau::catalog(&self.tableau)
    }

    pub fn corrector_configs(&self, flow: &FlowSpec) -> CorrectorConfigs {
        let mut c = CorrectorConfigs::for_flow(flow);
        c.form = self.energy_form;
        c.energy.newton_rel_tol = self.newton_rel_tol;
        c.energy.max_newton_iters = self.max_newton_iters;
        c.bound.enforce_projection_energy = self.projection_energy;
        c
    }

    /// Number of steps, `round(T / τ)`.
    pub fn steps(&self) -> usize {
        ((self.t_max / self.tau).round() as usize).max(1)
    }

    /// Short label such as `U-ETDRK3-PCC`.
    pub fn label(&self) -> String {
        match self.scheme {
            Scheme::Plain => self.tableau.clone(),
            s => format!("{}-{}", self.tableau, s),
        }
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('_', "-")
}
