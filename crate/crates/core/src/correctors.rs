//! Energy and bound correctors and the PCC, PCC', PC scheme drivers.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::etdrk::{certify_assumption_a, ExponentialTableau, Propagator, StageForm};
use crate::models::{discrete_variational_derivative, energy, EnergyForm, FlowSpec};
use crate::par;
use crate::spectral::Field;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyCorrectorConfig {
    /// `|D|` tolerance relative to `max(1, |E[φⁿ]|)`.
    pub newton_rel_tol: f64,
    pub max_newton_iters: usize,
    pub bisection_fallback: bool,
    /// Skip the corrector when `‖μ(φⁿ)‖² < steady_state_tol`.
    pub steady_state_tol: f64,
    /// Bracket expansion stops at `eta_cap_factor · τ`.
    pub eta_cap_factor: f64,
}

impl Default for EnergyCorrectorConfig {
    fn default() -> Self {
        Self {
            newton_rel_tol: 1e-10,
            max_newton_iters: 30,
            bisection_fallback: true,
            steady_state_tol: 1e-12,
            eta_cap_factor: 1e12,
        }
    }
}

impl EnergyCorrectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_rel_tol > 0.0 && self.steady_state_tol >= 0.0 && self.eta_cap_factor > 1.0)
            || self.max_newton_iters == 0
        {
            return Err(Error::InvalidArgument(format!("bad energy corrector config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCorrectorConfig {
    pub bound: f64,
    /// Follow the cutoff with `P_h`, evaluated on a grid `projection_refine`
    /// times finer. Exact MBP is traded for the projection-energy property.
    pub enforce_projection_energy: bool,
    pub projection_refine: usize,
}

impl BoundCorrectorConfig {
    pub fn new(bound: f64) -> Self {
        Self {
            bound,
            enforce_projection_energy: false,
            projection_refine: 4,
        }
    }
}

/// Truncation `Φ` to `[-b, b]`.
#[inline]
pub fn cutoff(z: f64, b: f64) -> f64 {
    z.clamp(-b, b)
}

/// Multiplier of the bound constraint at one node.
#[inline]
pub fn cutoff_multiplier(z: f64, b: f64) -> f64 {
    if z < -b {
        (-b - z) / (2.0 * b)
    } else if z > b {
        (z - b) / (2.0 * b)
    } else {
        0.0
    }
}

/// `p(φ) = -(φ + b)(φ - b)`.
#[inline]
pub fn bound_constraint(phi: f64, b: f64) -> f64 {
    -(phi + b) * (phi - b)
}

#[derive(Clone, Debug)]
pub struct BoundProjection {
    pub field: Field,
    pub lambda: Field,
    pub lambda_max: f64,
    /// `max |λ p(φ^{n+1})|`.
    pub complementarity: f64,
    /// `min p(φ^{n+1})`.
    pub constraint_min: f64,
}

pub fn bound_project(
    flow: &FlowSpec,
    phi_star: &Field,
    cfg: &BoundCorrectorConfig,
) -> Result<BoundProjection> {
    let b = cfg.bound;
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("bound must be positive, got {b}")));
    }
    let lambda = phi_star.map(|z| cutoff_multiplier(z, b));
    let field = if cfg.enforce_projection_energy {
        flow.spectral()
            .project_mapped(phi_star, move |z| cutoff(z, b), cfg.projection_refine)?
    } else {
        phi_star.map(|z| cutoff(z, b))
    };
    let (l, f) = (lambda.values(), field.values());
    let complementarity = par::min_max_indexed(l.len(), |i| (l[i] * bound_constraint(f[i], b)).abs()).1;
    let constraint_min = par::min_max_indexed(f.len(), |i| bound_constraint(f[i], b)).0;
    Ok(BoundProjection {
        lambda_max: lambda.max_abs(),
        field,
        lambda,
        complementarity,
        constraint_min,
    })
}

/// `D(η) = E[φ(η)] - E_ref` with `φ(η) = (I - ηΔ)^{-1}[u - η f(u)]`.
pub struct EnergyResidual<'a> {
    flow: &'a FlowSpec,
    form: EnergyForm,
    e_ref: f64,
    base: Field,
    base_energy: f64,
    u_hat: Vec<Complex64>,
    f_hat: Vec<Complex64>,
}

impl<'a> EnergyResidual<'a> {
    pub fn new(flow: &'a FlowSpec, form: EnergyForm, base: &Field, e_ref: f64) -> Result<Self> {
        let sp = flow.spectral();
        let u_hat = sp.forward(base)?;
        let f_hat = sp.forward(&flow.potential.f_field(base))?;
        Ok(Self {
            flow,
            form,
            e_ref,
            base: base.clone(),
            base_energy: energy(form, flow, base)?,
            u_hat,
            f_hat,
        })
    }

    pub fn reference_energy(&self) -> f64 {
        self.e_ref
    }

    pub fn base(&self) -> &Field {
        &self.base
    }

    /// `φ(η)`; `η = 0` returns the base field unchanged.
    pub fn field(&self, eta: f64) -> Result<Field> {
        if eta == 0.0 {
            return Ok(self.base.clone());
        }
        let k2 = self.flow.spectral().wave_squared();
        let (u, f) = (&self.u_hat, &self.f_hat);
        let c = par::collect_indexed(k2.len(), |m| (u[m] - f[m] * eta) / (1.0 + eta * k2[m]));
        self.flow.spectral().inverse(c)
    }

    pub fn value(&self, eta: f64) -> Result<f64> {
        let d = if eta == 0.0 {
            self.base_energy - self.e_ref
        } else {
            energy(self.form, self.flow, &self.field(eta)?)? - self.e_ref
        };
        finite_residual(eta, d)
    }

    /// `D(η)`, `D'(η)` and `φ(η)`.
    pub fn evaluate(&self, eta: f64) -> Result<(f64, f64, Field)> {
        let sp = self.flow.spectral();
        let phi = self.field(eta)?;
        let d = if eta == 0.0 {
            self.base_energy - self.e_ref
        } else {
            energy(self.form, self.flow, &phi)? - self.e_ref
        };
        let d = finite_residual(eta, d)?;
        let k2 = sp.wave_squared();
        let (u, f) = (&self.u_hat, &self.f_hat);
        // dφ/dη = (I - ηΔ)^{-2} Δ (u - η f) - (I - ηΔ)^{-1} f
        let dc = par::collect_indexed(k2.len(), |m| {
            let r = 1.0 / (1.0 + eta * k2[m]);
            -(u[m] - f[m] * eta) * (k2[m] * r * r) - f[m] * r
        });
        let dphi = sp.inverse(dc)?;
        let mu = discrete_variational_derivative(self.form, self.flow, &phi)?;
        let dp = mu.inner(&dphi)?;
        Ok((d, dp, phi))
    }
}

fn finite_residual(eta: f64, d: f64) -> Result<f64> {
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::BlowUp(format!("energy residual D({eta:e}) = {d}")))
    }
}

#[derive(Clone, Debug)]
pub struct EnergyProjection {
    pub field: Field,
    pub eta: f64,
    pub iters: usize,
    /// `D` at the accepted `η`.
    pub residual: f64,
    pub tolerance: f64,
    pub steady_state: bool,
}

/// Solves the energy-projection KKT system for `φ_*`.
///
/// `base` is the field whose nonlinearity enters the implicit step; the
/// constraint is `E[φ_*] <= E[phi_n]`.
pub fn energy_project(
    flow: &FlowSpec,
    form: EnergyForm,
    phi_n: &Field,
    base: &Field,
    tau: f64,
    cfg: &EnergyCorrectorConfig,
) -> Result<EnergyProjection> {
    cfg.validate()?;
    let e_ref = energy(form, flow, phi_n)?;
    let tolerance = cfg.newton_rel_tol * e_ref.abs().max(1.0);
    let mu = discrete_variational_derivative(form, flow, phi_n)?;
    let mu_sq = mu.inner(&mu)?;
    let res = EnergyResidual::new(flow, form, base, e_ref)?;
    let inactive = |steady_state: bool, d: f64| EnergyProjection {
        field: base.clone(),
        eta: 0.0,
        iters: 0,
        residual: d,
        tolerance,
        steady_state,
    };
    if mu_sq < cfg.steady_state_tol {
        return Ok(inactive(true, res.value(0.0)?));
    }
    let d0 = res.value(0.0)?;
    if d0 <= 0.0 {
        return Ok(inactive(false, d0));
    }
    let (eta, iters) = solve_active(&res, tau, tolerance, cfg)?;
    let (eta, d, field) = settle_below(&res, eta, tolerance)?;
    Ok(EnergyProjection {
        field,
        eta,
        iters,
        residual: d,
        tolerance,
        steady_state: false,
    })
}

/// Newton from `η = 0` inside a maintained bracket, bisection when Newton
/// leaves it or stalls. Returns `(η, iterations)`.
fn solve_active(
    res: &EnergyResidual<'_>,
    tau: f64,
    tol: f64,
    cfg: &EnergyCorrectorConfig,
) -> Result<(f64, usize)> {
    let mut lo = 0.0;
    let mut hi: Option<f64> = None;
    let mut eta = 0.0;
    let mut iters = 0;
    let (mut d, mut dp, _) = res.evaluate(0.0)?;
    while iters < cfg.max_newton_iters {
        let cand = eta - d / dp;
        let usable = dp.is_finite()
            && dp.abs() > 1e-300
            && cand.is_finite()
            && cand > lo
            && hi.is_none_or(|h| cand < h);
        if !usable {
            break;
        }
        iters += 1;
        eta = cand;
        (d, dp, _) = res.evaluate(eta)?;
        if d.abs() <= tol {
            return Ok((eta, iters));
        }
        if d > 0.0 {
            lo = eta;
        } else {
            hi = Some(eta);
        }
    }
    if !cfg.bisection_fallback {
        return Err(Error::CorrectorFailure {
            eta_max: eta,
            samples: vec![(eta, d)],
        });
    }
    let hi = match hi {
        Some(h) => h,
        None => {
            let cap = cfg.eta_cap_factor * tau;
            let mut h = tau.max(2.0 * lo);
            let mut samples = Vec::new();
            loop {
                if h > cap {
                    return Err(Error::CorrectorFailure { eta_max: cap, samples });
                }
                let dh = res.value(h)?;
                iters += 1;
                samples.push((h, dh));
                if dh.abs() <= tol {
                    return Ok((h, iters));
                }
                if dh < 0.0 {
                    break h;
                }
                lo = h;
                h *= 2.0;
            }
        }
    };
    bisect(res, lo, hi, tol, iters)
}

fn bisect(
    res: &EnergyResidual<'_>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut iters: usize,
) -> Result<(f64, usize)> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let d = res.value(mid)?;
        iters += 1;
        if d.abs() <= tol {
            return Ok((mid, iters));
        }
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((hi, iters))
}

/// Nudges a converged `η` so that `D(η) <= 0` when that is cheaply reachable.
fn settle_below(res: &EnergyResidual<'_>, eta: f64, tol: f64) -> Result<(f64, f64, Field)> {
    let (d, dp, field) = res.evaluate(eta)?;
    if d <= 0.0 || !(dp < 0.0) {
        return Ok((eta, d, field));
    }
    let mut step = 2.0 * d / -dp;
    for _ in 0..4 {
        let e2 = eta + step.max(eta * 1e-15);
        let (d2, _, f2) = res.evaluate(e2)?;
        if d2 <= 0.0 && d2.abs() <= tol {
            return Ok((e2, d2, f2));
        }
        step *= 4.0;
    }
    Ok((eta, d, field))
}

/// Time-stepping scheme built on an ETDRK predictor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Predictor only.
    Plain,
    /// Predictor, energy corrector, bound corrector.
    Pcc,
    /// Predictor, bound corrector, energy corrector.
    PccPrime,
    /// Stabilized predictor and bound corrector.
    Pc,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" | "none" => Ok(Scheme::Plain),
            "pcc" => Ok(Scheme::Pcc),
            "pcc'" | "pcc-prime" | "pcc_prime" | "pccprime" | "pccp" => Ok(Scheme::PccPrime),
            "pc" => Ok(Scheme::Pc),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Plain => "plain",
            Scheme::Pcc => "PCC",
            Scheme::PccPrime => "PCC'",
            Scheme::Pc => "PC",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectorConfigs {
    pub energy: EnergyCorrectorConfig,
    pub bound: BoundCorrectorConfig,
    pub form: EnergyForm,
    /// Tolerance of the PCC' bound check.
    pub mbp_tol: f64,
}

impl CorrectorConfigs {
    pub fn for_flow(flow: &FlowSpec) -> Self {
        Self {
            energy: EnergyCorrectorConfig::default(),
            bound: BoundCorrectorConfig::new(flow.potential.effective_bound()),
            form: EnergyForm::default(),
            mbp_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub eta: f64,
    pub newton_iters: usize,
    pub lambda_max: f64,
    pub energy_pre: f64,
    pub energy_post_corrector1: f64,
    pub energy_post_corrector2: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub mass_mean: f64,
    pub steady_state_reached: bool,
    /// `D` at the accepted `η` and its tolerance.
    pub energy_residual: f64,
    pub energy_tolerance: f64,
    /// `max |λ p(φ^{n+1})|` and `min p(φ^{n+1})`.
    pub complementarity: f64,
    pub constraint_min: f64,
    /// PCC' only: amount by which `‖φ^{n+1}‖_∞` exceeds `b + mbp_tol`.
    pub mbp_violation: Option<f64>,
    /// PCC' only: `η > 0` with `1/η < max |f'|` on the bound interval.
    pub eta_condition_violated: bool,
}

impl StepReport {
    pub fn max_abs(&self) -> f64 {
        self.phi_min.abs().max(self.phi_max.abs())
    }

    /// `η · D(η)`.
    pub fn eta_times_residual(&self) -> f64 {
        self.eta * self.energy_residual
    }
}

/// Reusable stepper for one `(scheme, tableau, flow, τ)`.
#[derive(Debug)]
pub struct Stepper {
    scheme: Scheme,
    propagator: Propagator,
    cfgs: CorrectorConfigs,
}

impl Stepper {
    pub fn new(
        scheme: Scheme,
        tableau: &ExponentialTableau,
        flow: &FlowSpec,
        tau: f64,
        cfgs: CorrectorConfigs,
    ) -> Result<Self> {
        cfgs.energy.validate()?;
        if scheme == Scheme::Pc && !certify_assumption_a(tableau).certified {
            log::warn!(
                "{} is not certified; PC energy dissipation is not guaranteed",
                tableau.name
            );
        }
        Ok(Self {
            scheme,
            propagator: Propagator::new(tableau, flow, tau)?,
            cfgs,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn flow(&self) -> &FlowSpec {
        self.propagator.flow()
    }

    pub fn tau(&self) -> f64 {
        self.propagator.tau()
    }

    pub fn configs(&self) -> &CorrectorConfigs {
        &self.cfgs
    }

    pub fn step(&self, phi_n: &Field) -> Result<(Field, StepReport)> {
        let flow = self.propagator.flow();
        let form = self.cfgs.form;
        let tau = self.propagator.tau();
        let e_pre = energy(form, flow, phi_n)?;
        let mut rep = StepReport {
            energy_pre: e_pre,
            ..StepReport::default()
        };
        let stage_form = match self.scheme {
            Scheme::Pc => StageForm::Stabilized,
            _ => StageForm::Exponential,
        };
        let pred = self.propagator.step(phi_n, stage_form)?;
        let out = match self.scheme {
            Scheme::Plain => {
                let e = energy(form, flow, &pred)?;
                rep.energy_post_corrector1 = e;
                rep.energy_post_corrector2 = e;
                pred
            }
            Scheme::Pcc => {
                let ep = energy_project(flow, form, phi_n, &pred, tau, &self.cfgs.energy)?;
                rep.energy_post_corrector1 = energy(form, flow, &ep.field)?;
                record_energy(&mut rep, &ep);
                let bp = bound_project(flow, &ep.field, &self.cfgs.bound)?;
                record_bound(&mut rep, &bp);
                rep.energy_post_corrector2 = energy(form, flow, &bp.field)?;
                bp.field
            }
            Scheme::PccPrime => {
                let bp = bound_project(flow, &pred, &self.cfgs.bound)?;
                record_bound(&mut rep, &bp);
                rep.energy_post_corrector1 = energy(form, flow, &bp.field)?;
                let ep = energy_project(flow, form, phi_n, &bp.field, tau, &self.cfgs.energy)?;
                record_energy(&mut rep, &ep);
                rep.energy_post_corrector2 = energy(form, flow, &ep.field)?;
                let b = self.cfgs.bound.bound;
                let excess = ep.field.max_abs() - b;
                if excess > self.cfgs.mbp_tol {
                    log::warn!("PCC' bound exceeded by {excess:e} (eta = {:e})", ep.eta);
                    rep.mbp_violation = Some(excess);
                }
                if ep.eta > 0.0 && 1.0 / ep.eta < flow.potential.max_abs_f_prime_in_bound() {
                    rep.eta_condition_violated = true;
                }
                ep.field
            }
            Scheme::Pc => {
                rep.energy_post_corrector1 = energy(form, flow, &pred)?;
                let bp = bound_project(flow, &pred, &self.cfgs.bound)?;
                record_bound(&mut rep, &bp);
                rep.energy_post_corrector2 = energy(form, flow, &bp.field)?;
                bp.field
            }
        };
        let (lo, hi) = out.min_max();
        rep.phi_min = lo;
        rep.phi_max = hi;
        rep.mass_mean = out.mean();
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::BlowUp(format!("{} step produced non-finite values", self.scheme)));
        }
        Ok((out, rep))
    }
}

fn record_energy(rep: &mut StepReport, ep: &EnergyProjection) {
    rep.eta = ep.eta;
    rep.newton_iters = ep.iters;
    rep.energy_residual = ep.residual;
    rep.energy_tolerance = ep.tolerance;
    rep.steady_state_reached = ep.steady_state;
}

fn record_bound(rep: &mut StepReport, bp: &BoundProjection) {
    rep.lambda_max = bp.lambda_max;
    rep.complementarity = bp.complementarity;
    rep.constraint_min = bp.constraint_min;
}

/// One PCC step (tables are rebuilt per call; use [`Stepper`] in loops).
pub fn step_pcc(
    flow: &FlowSpec,
    tableau: &ExponentialTableau,
    phi_n: &Field,
    tau: f64,
    cfgs: CorrectorConfigs,
) -> Result<(Field, StepReport)> {
    Stepper::new(Scheme::Pcc, tableau, flow, tau, cfgs)?.step(phi_n)
}

/// One PCC' step.
pub fn step_pcc_prime(
    flow: &FlowSpec,
    tableau: &ExponentialTableau,
    phi_n: &Field,
    tau: f64,
    cfgs: CorrectorConfigs,
) -> Result<(Field, StepReport)> {
    Stepper::new(Scheme::PccPrime, tableau, flow, tau, cfgs)?.step(phi_n)
}

/// One PC step.
pub fn step_pc(
    flow: &FlowSpec,
    tableau: &ExponentialTableau,
    phi_n: &Field,
    tau: f64,
    cfgs: CorrectorConfigs,
) -> Result<(Field, StepReport)> {
    Stepper::new(Scheme::Pc, tableau, flow, tau, cfgs)?.step(phi_n)
}
