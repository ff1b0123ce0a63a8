//! Bulk potentials, the gradient-flow specification and discrete energies.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{Field, Grid, Spectral};

/// Shape of the bulk free energy density `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialKind {
    /// `F(φ) = (φ² - β)² / (4ε²)`.
    DoubleWell,
    /// `F(φ) = ε⁻² [(β+φ)ln(β+φ) + (β-φ)ln(β-φ) - θ₀φ²/2]`, used inside the
    /// bound `β - δ`. Past `±(β - margin)` the density and its derivatives
    /// continue as Taylor polynomials so that overshooting stages stay finite.
    FloryHuggins { theta0: f64, delta: f64, margin: f64 },
    /// `F ≡ 0`; the flow reduces to the linear problem.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialModel {
    pub kind: PotentialKind,
    pub epsilon: f64,
    pub beta: f64,
    pub stabilizer: f64,
}

impl PotentialModel {
    pub fn double_well(epsilon: f64, beta: f64, stabilizer: f64) -> Result<Self> {
        Self {
            kind: PotentialKind::DoubleWell,
            epsilon,
            beta,
            stabilizer,
        }
        .validated()
    }

    /// Flory–Huggins with the default extension margin `δ/2`.
    pub fn flory_huggins(
        epsilon: f64,
        beta: f64,
        theta0: f64,
        delta: f64,
        stabilizer: f64,
    ) -> Result<Self> {
        Self {
            kind: PotentialKind::FloryHuggins {
                theta0,
                delta,
                margin: 0.5 * delta,
            },
            epsilon,
            beta,
            stabilizer,
        }
        .validated()
    }

    pub fn zero(beta: f64, stabilizer: f64) -> Result<Self> {
        Self {
            kind: PotentialKind::Zero,
            epsilon: 1.0,
            beta,
            stabilizer,
        }
        .validated()
    }

    pub fn with_extension_margin(mut self, margin: f64) -> Result<Self> {
        match &mut self.kind {
            PotentialKind::FloryHuggins { margin: m, .. } => *m = margin,
            _ => {
                return Err(Error::InvalidModel(
                    "extension margin only applies to Flory-Huggins".into(),
                ))
            }
        }
        self.validated()
    }

    pub fn with_stabilizer(mut self, stabilizer: f64) -> Result<Self> {
        self.stabilizer = stabilizer;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.stabilizer >= 0.0 && self.stabilizer.is_finite()) {
            return bad(format!("stabilizer must be >= 0, got {}", self.stabilizer));
        }
        if let PotentialKind::FloryHuggins {
            theta0,
            delta,
            margin,
        } = self.kind
        {
            if !(theta0 > 0.0) {
                return bad(format!("theta0 must be positive, got {theta0}"));
            }
            if !(delta > 0.0 && delta < self.beta) {
                return bad(format!("delta must lie in (0, beta), got {delta}"));
            }
            if !(margin > 0.0 && margin < delta) {
                return bad(format!("extension margin must lie in (0, delta), got {margin}"));
            }
        }
        let b = self.effective_bound();
        let (lo, hi) = (self.f(-b), self.f(b));
        if lo > 0.0 || hi < 0.0 {
            return bad(format!(
                "sign condition f(-b) <= 0 <= f(b) fails at b = {b}: f(-b) = {lo}, f(b) = {hi}"
            ));
        }
        Ok(self)
    }

    /// The bound the cutoff enforces: `β`, or `β - δ` for Flory–Huggins.
    pub fn effective_bound(&self) -> f64 {
        match self.kind {
            PotentialKind::FloryHuggins { delta, .. } => self.beta - delta,
            _ => self.beta,
        }
    }

    fn inv_eps2(&self) -> f64 {
        1.0 / (self.epsilon * self.epsilon)
    }

    /// Bulk density `F(φ)`.
    pub fn density(&self, phi: f64) -> f64 {
        let (b, k) = (self.beta, self.inv_eps2());
        match self.kind {
            PotentialKind::DoubleWell => {
                let w = phi * phi - b;
                0.25 * k * w * w
            }
            PotentialKind::FloryHuggins { theta0, margin, .. } => {
                let a = b - margin;
                let r = phi.abs();
                if r <= a {
                    fh_density(phi, b, theta0, k)
                } else {
                    let d = r - a;
                    fh_density(a, b, theta0, k)
                        + fh_force(a, b, theta0, k) * d
                        + 0.5 * fh_stiffness(a, b, theta0, k) * d * d
                        + fh_curvature(a, b, k) * d * d * d / 6.0
                }
            }
            PotentialKind::Zero => 0.0,
        }
    }

    /// `f = F'`.
    pub fn f(&self, phi: f64) -> f64 {
        let (b, k) = (self.beta, self.inv_eps2());
        match self.kind {
            PotentialKind::DoubleWell => k * phi * (phi * phi - b),
            PotentialKind::FloryHuggins { theta0, margin, .. } => {
                let a = b - margin;
                let r = phi.abs();
                if r <= a {
                    fh_force(phi, b, theta0, k)
                } else {
                    let d = r - a;
                    let v = fh_force(a, b, theta0, k)
                        + fh_stiffness(a, b, theta0, k) * d
                        + 0.5 * fh_curvature(a, b, k) * d * d;
                    v.copysign(phi)
                }
            }
            PotentialKind::Zero => 0.0,
        }
    }

    /// `f'`.
    pub fn f_prime(&self, phi: f64) -> f64 {
        let (b, k) = (self.beta, self.inv_eps2());
        match self.kind {
            PotentialKind::DoubleWell => k * (3.0 * phi * phi - b),
            PotentialKind::FloryHuggins { theta0, margin, .. } => {
                let a = b - margin;
                let r = phi.abs();
                if r <= a {
                    fh_stiffness(phi, b, theta0, k)
                } else {
                    fh_stiffness(a, b, theta0, k) + fh_curvature(a, b, k) * (r - a)
                }
            }
            PotentialKind::Zero => 0.0,
        }
    }

    /// `g = -f + Sφ`.
    pub fn g(&self, phi: f64) -> f64 {
        -self.f(phi) + self.stabilizer * phi
    }

    /// `max |f'|` over `[-b, b]` with `b` the effective bound.
    pub fn max_abs_f_prime_in_bound(&self) -> f64 {
        let b = self.effective_bound();
        // f' is even and monotone in |φ| for all supported kinds.
        self.f_prime(0.0).abs().max(self.f_prime(b).abs())
    }

    pub fn f_field(&self, field: &Field) -> Field {
        field.map(|v| self.f(v))
    }

    pub fn g_field(&self, field: &Field) -> Field {
        field.map(|v| self.g(v))
    }
}

fn fh_density(phi: f64, b: f64, theta0: f64, k: f64) -> f64 {
    let xlx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    k * (xlx(b + phi) + xlx(b - phi) - 0.5 * theta0 * phi * phi)
}

fn fh_force(phi: f64, b: f64, theta0: f64, k: f64) -> f64 {
    k * ((b + phi).ln() - (b - phi).ln() - theta0 * phi)
}

fn fh_stiffness(phi: f64, b: f64, theta0: f64, k: f64) -> f64 {
    k * (1.0 / (b + phi) + 1.0 / (b - phi) - theta0)
}

fn fh_curvature(phi: f64, b: f64, k: f64) -> f64 {
    k * (1.0 / ((b - phi) * (b - phi)) - 1.0 / ((b + phi) * (b + phi)))
}

/// Dissipation mechanism `𝒢`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mobility {
    /// Allen–Cahn.
    Identity,
    /// Cahn–Hilliard.
    MinusLaplacian,
}

impl Mobility {
    /// Symbol of `𝒢` at a mode with `|k|² = k2`.
    pub fn symbol(self, k2: f64) -> f64 {
        match self {
            Mobility::Identity => 1.0,
            Mobility::MinusLaplacian => k2,
        }
    }
}

/// Gradient flow `φ_t = -𝒢(-Δφ + f(φ))` on a periodic grid.
#[derive(Clone, Debug)]
pub struct FlowSpec {
    pub mobility: Mobility,
    pub potential: PotentialModel,
    spectral: Arc<Spectral>,
}

impl FlowSpec {
    pub fn new(mobility: Mobility, potential: PotentialModel, grid: Arc<Grid>) -> Self {
        Self::with_spectral(mobility, potential, Arc::new(Spectral::new(grid)))
    }

    pub fn with_spectral(
        mobility: Mobility,
        potential: PotentialModel,
        spectral: Arc<Spectral>,
    ) -> Self {
        Self {
            mobility,
            potential,
            spectral,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.spectral.grid()
    }

    pub fn spectral(&self) -> &Arc<Spectral> {
        &self.spectral
    }

    /// `μ = -Δφ + f(φ)` with the spectral Laplacian.
    pub fn variational_derivative(&self, field: &Field) -> Result<Field> {
        let lap = self.spectral.apply(&self.spectral.neg_laplacian(), field)?;
        lap.zip_map(field, |l, v| l + self.potential.f(v))
    }
}

/// Discrete energy functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EnergyForm {
    /// `½‖∇I_hφ‖² + h^d Σ F(φ_j)`.
    #[default]
    InterpolationSpectral,
    /// `½‖∇P_hφ‖² + h^d Σ F(φ_j)`; equal to the interpolation energy on nodal
    /// data, it differs once the cutoff is followed by `P_h`.
    ProjectionSpectral,
    /// `h^d Σ (½|∇_h φ|² + F(φ))` with periodic forward differences.
    FiniteDifference,
}

impl EnergyForm {
    pub fn is_spectral(self) -> bool {
        !matches!(self, EnergyForm::FiniteDifference)
    }
}

impl FromStr for EnergyForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "interpolation" | "i_h" | "ih" => Ok(EnergyForm::InterpolationSpectral),
            "projection" | "p_h" | "ph" => Ok(EnergyForm::ProjectionSpectral),
            "fd" | "finite-difference" | "finite_difference" => Ok(EnergyForm::FiniteDifference),
            other => Err(Error::Config(format!("unknown energy form `{other}`"))),
        }
    }
}

impl fmt::Display for EnergyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnergyForm::InterpolationSpectral => "interpolation",
            EnergyForm::ProjectionSpectral => "projection",
            EnergyForm::FiniteDifference => "fd",
        })
    }
}

/// `h^d Σ F(φ_j)`.
pub fn bulk_energy(potential: &PotentialModel, field: &Field) -> f64 {
    let v = field.values();
    field.grid().cell_volume() * par::sum_indexed(v.len(), |i| potential.density(v[i]))
}

/// `½‖∇I_hφ‖²` computed exactly from the discrete coefficients.
pub fn spectral_gradient_energy(spectral: &Spectral, field: &Field) -> Result<f64> {
    let c = spectral.forward(field)?;
    let k2 = spectral.wave_squared();
    let s = par::sum_indexed(c.len(), |i| k2[i] * c[i].norm_sqr());
    Ok(0.5 * spectral.grid().volume() * s)
}

/// `½ h^d Σ |∇_h φ|²` with periodic forward differences.
pub fn fd_gradient_energy(field: &Field) -> Result<f64> {
    let grid = field.grid();
    if grid.dim() > 2 {
        return Err(Error::UnsupportedEnergyForm("finite-difference"));
    }
    let dims = grid.points_per_axis();
    let h: Vec<f64> = (0..grid.dim()).map(|a| grid.mesh_size(a)).collect();
    let v = field.values();
    let s = par::sum_indexed(v.len(), |i| {
        let idx = grid.unflatten(i);
        let mut acc = 0.0;
        for a in 0..dims.len() {
            let mut nb = idx;
            nb[a] = (idx[a] + 1) % dims[a];
            let d = (v[grid.flatten(&nb[..dims.len()])] - v[i]) / h[a];
            acc += d * d;
        }
        acc
    });
    Ok(0.5 * grid.cell_volume() * s)
}

/// Discrete energy of `field` under `form`.
pub fn energy(form: EnergyForm, flow: &FlowSpec, field: &Field) -> Result<f64> {
    let grad = match form {
        EnergyForm::InterpolationSpectral | EnergyForm::ProjectionSpectral => {
            spectral_gradient_energy(flow.spectral(), field)?
        }
        EnergyForm::FiniteDifference => fd_gradient_energy(field)?,
    };
    Ok(grad + bulk_energy(&flow.potential, field))
}

/// `-Δ_h φ` for the Laplacian consistent with `form`.
pub fn discrete_neg_laplacian(form: EnergyForm, flow: &FlowSpec, field: &Field) -> Result<Field> {
    if form.is_spectral() {
        let sp = flow.spectral();
        return sp.apply(&sp.neg_laplacian(), field);
    }
    let grid = field.grid().clone();
    if grid.dim() > 2 {
        return Err(Error::UnsupportedEnergyForm("finite-difference"));
    }
    let dims = grid.points_per_axis();
    let v = field.values();
    let out = par::collect_indexed(v.len(), |i| {
        let idx = grid.unflatten(i);
        let mut acc = 0.0;
        for a in 0..dims.len() {
            let h = grid.mesh_size(a);
            let mut p = idx;
            p[a] = (idx[a] + 1) % dims[a];
            let mut m = idx;
            m[a] = (idx[a] + dims[a] - 1) % dims[a];
            let d = dims.len();
            acc += (2.0 * v[i] - v[grid.flatten(&p[..d])] - v[grid.flatten(&m[..d])]) / (h * h);
        }
        acc
    });
    Field::new(grid, out)
}

/// Gradient of the discrete energy `form` with respect to nodal values,
/// scaled by `1/h^d`: `-Δ_h φ + f(φ)`.
pub fn discrete_variational_derivative(
    form: EnergyForm,
    flow: &FlowSpec,
    field: &Field,
) -> Result<Field> {
    let lap = discrete_neg_laplacian(form, flow, field)?;
    lap.zip_map(field, |l, v| l + flow.potential.f(v))
}

/// Energy of `P_h map(u)` in the projection form, with the bulk term taken at
/// the nodal values `map(u_j)`.
pub fn projected_map_energy<F>(flow: &FlowSpec, field: &Field, map: F, refine: usize) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync + Send + Copy,
{
    let projected = flow.spectral().project_mapped(field, map, refine)?;
    let grad = spectral_gradient_energy(flow.spectral(), &projected)?;
    Ok(grad + bulk_energy(&flow.potential, &field.map(map)))
}
