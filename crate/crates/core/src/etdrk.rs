//! φ-functions, exponential Runge–Kutta tableaus and the diagonal stage
//! integrator, plus the tableau certification and order-condition sweeps.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::FlowSpec;
use crate::par;
use crate::spectral::Field;

/// Largest φ index accepted by [`phi_eval`].
pub const MAX_PHI_INDEX: usize = 4;

/// Below this `|z|` the recurrence loses digits; a Taylor series is used.
const TAYLOR_RADIUS: f64 = 1.0;
const TAYLOR_TERMS: usize = 30;

/// `φ_k(z)` for `k <= 4` and finite `z`.
pub fn phi_eval(k: usize, z: f64) -> Result<f64> {
    if k > MAX_PHI_INDEX {
        return Err(Error::InvalidArgument(format!(
            "phi index {k} exceeds {MAX_PHI_INDEX}"
        )));
    }
    if !z.is_finite() {
        return Err(Error::InvalidArgument(format!("phi argument must be finite, got {z}")));
    }
    Ok(phi(k, z))
}

/// Unchecked `φ_k(z)`.
pub fn phi(k: usize, z: f64) -> f64 {
    if k == 0 {
        return z.exp();
    }
    if z.abs() < TAYLOR_RADIUS {
        phi_taylor(k, z)
    } else {
        phi_recurrence(k, z)
    }
}

/// `Σ_m z^m / (m+k)!` in nested form.
fn phi_taylor(k: usize, z: f64) -> f64 {
    let mut acc = 1.0;
    for m in (1..TAYLOR_TERMS).rev() {
        acc = 1.0 + acc * z / (m + k) as f64;
    }
    acc / factorial(k)
}

fn phi_recurrence(k: usize, z: f64) -> f64 {
    let mut p = z.exp_m1() / z;
    let mut inv_fact = 1.0;
    for j in 1..k {
        p = (p - inv_fact) / z;
        inv_fact /= (j + 1) as f64;
    }
    p
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// One term `w · φ_k(γ z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiTerm {
    pub weight: f64,
    pub k: usize,
    pub scale: f64,
}

/// `Σ w · φ_k(γ z)`; empty means the zero function.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhiCombination(pub Vec<PhiTerm>);

impl PhiCombination {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn term(weight: f64, k: usize, scale: f64) -> Self {
        Self(vec![PhiTerm { weight, k, scale }])
    }

    pub fn plus(mut self, weight: f64, k: usize, scale: f64) -> Self {
        self.0.push(PhiTerm { weight, k, scale });
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|t| t.weight == 0.0)
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.0.iter().map(|t| t.weight * phi(t.k, t.scale * z)).sum()
    }
}

/// Exponential Butcher tableau with `s` stages.
///
/// `a[i]` holds the `i` coefficients `a_{i+1, 1..i}` (so `a[0]` is empty),
/// `b` the `s` final weights, `c` the nodes with `c[0] = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialTableau {
    pub name: String,
    pub c: Vec<f64>,
    pub a: Vec<Vec<PhiCombination>>,
    pub b: Vec<PhiCombination>,
    pub order: usize,
    pub energy_stable: bool,
}

/// Names accepted by [`ExponentialTableau::catalog`].
pub const CATALOG: [&str; 5] = ["ETDRK1", "ETDRK2", "ETDRK3", "U-ETDRK3", "U-ETDRK4"];

impl ExponentialTableau {
    pub fn new(
        name: impl Into<String>,
        c: Vec<f64>,
        a: Vec<Vec<PhiCombination>>,
        b: Vec<PhiCombination>,
        order: usize,
        energy_stable: bool,
    ) -> Result<Self> {
        let name = name.into();
        let s = c.len();
        let bad = |m: String| Err(Error::InvalidArgument(format!("tableau {name}: {m}")));
        if s == 0 || c[0] != 0.0 {
            return bad("need at least one stage and c_1 = 0".into());
        }
        if c[1..].iter().any(|&ci| !(ci > 0.0 && ci <= 1.0)) {
            return bad("nodes must lie in (0, 1]".into());
        }
        if a.len() != s || a.iter().enumerate().any(|(i, row)| row.len() != i) {
            return bad("a must be strictly lower triangular with s rows".into());
        }
        if b.len() != s {
            return bad(format!("expected {s} weights, got {}", b.len()));
        }
        let all = a.iter().flatten().chain(b.iter());
        if all.flat_map(|p| p.0.iter()).any(|t| t.k > MAX_PHI_INDEX) {
            return bad(format!("phi index above {MAX_PHI_INDEX}"));
        }
        Ok(Self {
            name,
            c,
            a,
            b,
            order,
            energy_stable,
        })
    }

    pub fn catalog(name: &str) -> Result<Self> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        let p = PhiCombination::term;
        let z = PhiCombination::zero;
        let t = match key.as_str() {
            "ETDRK1" => Self::new("ETDRK1", vec![0.0], vec![vec![]], vec![p(1.0, 1, 1.0)], 1, true),
            "ETDRK2" => Self::new(
                "ETDRK2",
                vec![0.0, 1.0],
                vec![vec![], vec![p(1.0, 1, 1.0)]],
                vec![p(1.0, 1, 1.0).plus(-1.0, 2, 1.0), p(1.0, 2, 1.0)],
                2,
                true,
            ),
            "ETDRK3" => {
                let s = 2.0 / 3.0;
                Self::new(
                    "ETDRK3",
                    vec![0.0, 1.0, s],
                    vec![
                        vec![],
                        vec![p(1.0, 1, 1.0)],
                        vec![
                            p(2.0 / 3.0, 1, s).plus(-4.0 / 9.0, 2, s),
                            p(4.0 / 9.0, 2, s),
                        ],
                    ],
                    vec![
                        p(0.75, 1, 1.0).plus(-1.0, 2, 1.0),
                        p(1.0, 2, 1.0).plus(-0.5, 1, 1.0),
                        p(0.75, 1, 1.0),
                    ],
                    3,
                    true,
                )
            }
            "UETDRK3" => Self::new(
                "U-ETDRK3",
                vec![0.0, 0.5, 1.0],
                vec![
                    vec![],
                    vec![p(0.5, 1, 0.5)],
                    vec![p(-1.0, 1, 1.0), p(2.0, 1, 1.0)],
                ],
                vec![
                    p(4.0, 3, 1.0).plus(-3.0, 2, 1.0).plus(1.0, 1, 1.0),
                    p(-8.0, 3, 1.0).plus(4.0, 2, 1.0),
                    p(4.0, 3, 1.0).plus(-1.0, 2, 1.0),
                ],
                3,
                false,
            ),
            "UETDRK4" => Self::new(
                "U-ETDRK4",
                vec![0.0, 0.5, 0.5, 1.0],
                vec![
                    vec![],
                    vec![p(0.5, 1, 0.5)],
                    vec![p(0.5, 1, 0.5).plus(-1.0, 2, 0.5), p(1.0, 2, 0.5)],
                    vec![p(1.0, 1, 1.0).plus(-2.0, 2, 1.0), z(), p(2.0, 2, 1.0)],
                ],
                vec![
                    p(1.0, 1, 1.0).plus(-3.0, 2, 1.0).plus(4.0, 3, 1.0),
                    p(2.0, 2, 1.0).plus(-4.0, 3, 1.0),
                    p(2.0, 2, 1.0).plus(-4.0, 3, 1.0),
                    p(4.0, 3, 1.0).plus(-1.0, 2, 1.0),
                ],
                4,
                false,
            ),
            _ => return Err(Error::UnknownTableau(name.to_string())),
        };
        t
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }

    /// Node of row `r` in `0..=s`; row `s` is the final combination with node 1.
    pub fn node(&self, r: usize) -> f64 {
        if r == self.stages() {
            1.0
        } else {
            self.c[r]
        }
    }

    /// Coefficients of row `r` in `1..=s`; row `s` is `b`.
    pub fn row(&self, r: usize) -> &[PhiCombination] {
        if r == self.stages() {
            &self.b
        } else {
            &self.a[r]
        }
    }

    /// Largest violation of `Σ_j a_ij(z) = c_i φ_1(c_i z)` and
    /// `Σ_j b_j(z) = φ_1(z)` over `samples`.
    pub fn consistency_residual(&self, samples: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &z in samples {
            for r in 1..=self.stages() {
                let ci = self.node(r);
                let sum: f64 = self.row(r).iter().map(|p| p.eval(z)).sum();
                worst = worst.max((sum - ci * phi(1, ci * z)).abs());
            }
        }
        worst
    }

    pub fn is_consistent(&self, tol: f64) -> bool {
        self.consistency_residual(&consistency_samples()) <= tol
    }

    /// `A(z)`: rows `a_{2,·}, …, a_{s,·}, b`.
    pub fn coefficient_matrix(&self, z: f64) -> DMatrix<f64> {
        let s = self.stages();
        DMatrix::from_fn(s, s, |i, j| {
            let row = self.row(i + 1);
            if j < row.len() {
                row[j].eval(z)
            } else {
                0.0
            }
        })
    }
}

/// `n` points log-spaced between `-hi` and `-lo` (both positive magnitudes).
pub fn negative_log_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            -(a + t * (b - a)).exp()
        })
        .collect()
}

/// 64 points in `[-1e3, -1e-3]` plus zero.
pub fn consistency_samples() -> Vec<f64> {
    let mut z = negative_log_samples(1e-3, 1e3, 64);
    z.push(0.0);
    z
}

/// How stage values are assembled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StageForm {
    /// `χ_i φⁿ + τ Σ a_ij 𝒢 g_j`.
    #[default]
    Exponential,
    /// `φⁿ + τ Σ a_ij (𝒢 g_j − 𝒢 L φⁿ)`; identical for consistent tableaus.
    Stabilized,
}

/// Per-mode coefficient tables of one tableau for fixed `(τ, grid, S, 𝒢)`.
#[derive(Debug)]
pub struct Propagator {
    tableau: ExponentialTableau,
    flow: FlowSpec,
    tau: f64,
    /// `e^{c_r z}` per row `r = 1..=s` (index `r - 1`).
    growth: Vec<Vec<f64>>,
    /// `τ a_{r,j}(z) m` per row and column; `None` for zero coefficients.
    weights: Vec<Vec<Option<Vec<f64>>>>,
    /// Symbol of `L`.
    l_symbol: Vec<f64>,
}

impl Propagator {
    pub fn new(tableau: &ExponentialTableau, flow: &FlowSpec, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        let k2 = flow.spectral().wave_squared();
        let s_stab = flow.potential.stabilizer;
        let mobility: Vec<f64> = k2.iter().map(|&k| flow.mobility.symbol(k)).collect();
        let l_symbol: Vec<f64> = k2.iter().map(|&k| k + s_stab).collect();
        let zs: Vec<f64> = (0..k2.len()).map(|i| -tau * mobility[i] * l_symbol[i]).collect();
        let s = tableau.stages();
        let mut growth = Vec::with_capacity(s);
        let mut weights = Vec::with_capacity(s);
        for r in 1..=s {
            let cr = tableau.node(r);
            growth.push(par::collect_indexed(zs.len(), |m| (cr * zs[m]).exp()));
            let row = tableau
                .row(r)
                .iter()
                .map(|coef| {
                    if coef.is_zero() {
                        None
                    } else {
                        Some(par::collect_indexed(zs.len(), |m| {
                            tau * coef.eval(zs[m]) * mobility[m]
                        }))
                    }
                })
                .collect();
            weights.push(row);
        }
        Ok(Self {
            tableau: tableau.clone(),
            flow: flow.clone(),
            tau,
            growth,
            weights,
            l_symbol,
        })
    }

    pub fn tableau(&self) -> &ExponentialTableau {
        &self.tableau
    }

    pub fn flow(&self) -> &FlowSpec {
        &self.flow
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// The prediction `φ^{n,s+1}`.
    pub fn step(&self, phi_n: &Field, form: StageForm) -> Result<Field> {
        let sp = self.flow.spectral();
        let pot = &self.flow.potential;
        let phi_hat = sp.forward(phi_n)?;
        let s = self.tableau.stages();
        let g_of = |v: &[f64]| par::collect_indexed(v.len(), |i| pot.g(v[i]));
        let mut g_hat = Vec::with_capacity(s);
        g_hat.push(sp.forward_values(&g_of(phi_n.values())));
        for r in 1..=s {
            let hat = self.combine(r, &phi_hat, &g_hat, form);
            let values = sp.inverse_values(&hat);
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::BlowUp(format!(
                    "{} stage {} produced {} at node {i}",
                    self.tableau.name,
                    r + 1,
                    values[i]
                )));
            }
            if r == s {
                return Ok(sp.field(values)?.with_spectrum(hat));
            }
            g_hat.push(sp.forward_values(&g_of(&values)));
        }
        unreachable!("tableau has at least one stage")
    }

    fn combine(
        &self,
        r: usize,
        phi_hat: &[Complex64],
        g_hat: &[Vec<Complex64>],
        form: StageForm,
    ) -> Vec<Complex64> {
        let growth = &self.growth[r - 1];
        let row = &self.weights[r - 1];
        let l = &self.l_symbol;
        par::collect_indexed(phi_hat.len(), |m| {
            let p = phi_hat[m];
            let mut acc = match form {
                StageForm::Exponential => p * growth[m],
                StageForm::Stabilized => p,
            };
            for (j, w) in row.iter().enumerate() {
                if let Some(w) = w {
                    acc += match form {
                        StageForm::Exponential => g_hat[j][m] * w[m],
                        StageForm::Stabilized => (g_hat[j][m] - p * l[m]) * w[m],
                    };
                }
            }
            acc
        })
    }
}

/// One-shot step; builds the coefficient tables every call.
pub fn etdrk_step(
    tableau: &ExponentialTableau,
    flow: &FlowSpec,
    field: &Field,
    tau: f64,
) -> Result<Field> {
    Propagator::new(tableau, flow, tau)?.step(field, StageForm::Exponential)
}

/// Outcome of the positive-definiteness sweep of `P(z)`.
#[derive(Clone, Debug)]
pub struct CertificationReport {
    pub tableau: String,
    pub samples: Vec<f64>,
    /// Minimum eigenvalue of `(P + Pᵀ)/2` per sample; NaN where `A(z)` is singular.
    pub min_eigenvalues: Vec<f64>,
    pub certified: bool,
    pub first_failure: Option<f64>,
}

impl CertificationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let status = if self.certified { "certified" } else { "NOT certified" };
        let _ = writeln!(out, "tableau: {}", self.tableau);
        let _ = writeln!(out, "samples: {} in [{:e}, {:e}]", self.samples.len(),
            self.samples.first().copied().unwrap_or(f64::NAN),
            self.samples.last().copied().unwrap_or(f64::NAN));
        let _ = writeln!(out, "status: {status}");
        match self.first_failure {
            Some(z) => {
                let _ = writeln!(out, "first failing z: {z:e}");
            }
            None => {
                let _ = writeln!(out, "first failing z: none");
            }
        }
        let lowest = self
            .min_eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let _ = writeln!(out, "smallest eigenvalue: {lowest:e}");
        let _ = writeln!(out, "{:>16} {:>16}", "z", "min_eig");
        for (z, e) in self.samples.iter().zip(&self.min_eigenvalues) {
            let _ = writeln!(out, "{z:>16.6e} {e:>16.6e}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["tableau", "z", "min_eig"])?;
        for (z, e) in self.samples.iter().zip(&self.min_eigenvalues) {
            w.write_record([self.tableau.clone(), z.to_string(), e.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }
}

/// Sweep size and range of the certification.
pub const CERTIFY_SAMPLES: usize = 200;
pub const CERTIFY_RANGE: (f64, f64) = (1e-6, 1e6);

/// Minimum eigenvalue of the symmetric part of
/// `P(z) = z E_L + A(z)^{-1} E_L - (z/2) I`, or `None` if `A(z)` is singular.
pub fn assumption_a_min_eigenvalue(tableau: &ExponentialTableau, z: f64) -> Option<f64> {
    let s = tableau.stages();
    let a = tableau.coefficient_matrix(z);
    if (0..s).any(|i| !(a[(i, i)].abs() > 1e-300) || !a[(i, i)].is_finite()) {
        return None;
    }
    let el = DMatrix::from_fn(s, s, |i, j| if j <= i { 1.0 } else { 0.0 });
    let ainv_el = a.solve_lower_triangular(&el)?;
    if ainv_el.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let p = &el * z + ainv_el - DMatrix::identity(s, s) * (0.5 * z);
    let sym = (&p + p.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    Some(eig.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn certify_assumption_a(tableau: &ExponentialTableau) -> CertificationReport {
    let samples = negative_log_samples(CERTIFY_RANGE.0, CERTIFY_RANGE.1, CERTIFY_SAMPLES);
    let min_eigenvalues: Vec<f64> = samples
        .iter()
        .map(|&z| assumption_a_min_eigenvalue(tableau, z).unwrap_or(f64::NAN))
        .collect();
    let first_failure = samples
        .iter()
        .zip(&min_eigenvalues)
        .find(|(_, e)| !(**e > 0.0))
        .map(|(z, _)| *z);
    CertificationReport {
        tableau: tableau.name.clone(),
        samples,
        certified: first_failure.is_none(),
        min_eigenvalues,
        first_failure,
    }
}

/// Largest residual of one order condition over the samples.
#[derive(Clone, Debug)]
pub struct OrderCondition {
    pub name: String,
    /// With `ψ_{j,i}` built from `φ_j(c_i z)`.
    pub residual: f64,
    /// With `ψ_{j,i}` built from `φ_j(-c_i z)`; equals `residual` for
    /// conditions without a `ψ_{j,i}` term.
    pub residual_as_printed: f64,
}

#[derive(Clone, Debug)]
pub struct OrderReport {
    pub tableau: String,
    pub order: usize,
    pub samples: usize,
    pub conditions: Vec<OrderCondition>,
}

impl OrderReport {
    pub fn max_residual(&self) -> f64 {
        self.conditions.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn condition(&self, name: &str) -> Option<&OrderCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "tableau {} order {} ({} samples)",
            self.tableau, self.order, self.samples
        );
        let _ = writeln!(out, "{:<24} {:>14} {:>14}", "condition", "scaled", "as_printed");
        for c in &self.conditions {
            let _ = writeln!(
                out,
                "{:<24} {:>14.4e} {:>14.4e}",
                c.name, c.residual, c.residual_as_printed
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["tableau", "order", "condition", "residual", "residual_as_printed"])?;
        for c in &self.conditions {
            w.write_record([
                self.tableau.clone(),
                self.order.to_string(),
                c.name.clone(),
                c.residual.to_string(),
                c.residual_as_printed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn psi(t: &ExponentialTableau, j: usize, z: f64) -> f64 {
    let f = factorial(j - 1);
    let sum: f64 = (0..t.stages())
        .map(|k| t.b[k].eval(z) * t.c[k].powi(j as i32 - 1) / f)
        .sum();
    phi(j, z) - sum
}

/// `ψ_{j,i}` for 1-based stage `i`; `sign = 1` scales the argument by `c_i`,
/// `sign = -1` follows the printed `φ_j(-c_i z)`.
fn psi_stage(t: &ExponentialTableau, j: usize, i: usize, z: f64, sign: f64) -> f64 {
    let ci = t.c[i - 1];
    let f = factorial(j - 1);
    let sum: f64 = t.a[i - 1]
        .iter()
        .enumerate()
        .map(|(k, a)| a.eval(z) * t.c[k].powi(j as i32 - 1) / f)
        .sum();
    ci.powi(j as i32) * phi(j, sign * ci * z) - sum
}

/// Residuals of the stiff order conditions up to `order` (1 to 3).
pub fn check_order_conditions(tableau: &ExponentialTableau, order: usize) -> Result<OrderReport> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!("order must be 1, 2 or 3, got {order}")));
    }
    if order > tableau.order {
        return Err(Error::InvalidArgument(format!(
            "{} claims order {}, cannot check order {order}",
            tableau.name, tableau.order
        )));
    }
    let zs = {
        let mut z = negative_log_samples(1e-3, 1e3, 64);
        z.push(0.0);
        z
    };
    let max_over = |f: &dyn Fn(f64) -> f64| zs.iter().map(|&z| f(z).abs()).fold(0.0, f64::max);
    let plain = |name: &str, r: f64| OrderCondition {
        name: name.to_string(),
        residual: r,
        residual_as_printed: r,
    };
    let s = tableau.stages();
    let mut conditions = vec![plain("psi_1", max_over(&|z| psi(tableau, 1, z)))];
    if order >= 2 {
        conditions.push(plain("psi_2", max_over(&|z| psi(tableau, 2, z))));
    }
    for i in 2..=order.min(s) {
        conditions.push(OrderCondition {
            name: format!("psi_1,{i}"),
            residual: max_over(&|z| psi_stage(tableau, 1, i, z, 1.0)),
            residual_as_printed: max_over(&|z| psi_stage(tableau, 1, i, z, -1.0)),
        });
    }
    if order >= 3 {
        conditions.push(plain("psi_3(0)", psi(tableau, 3, 0.0).abs()));
        let b0: Vec<f64> = tableau.b.iter().map(|b| b.eval(0.0)).collect();
        let summed = |sign: f64| {
            max_over(&|z| {
                (2..=s)
                    .map(|i| b0[i - 1] * psi_stage(tableau, 2, i, z, sign))
                    .sum::<f64>()
            })
        };
        let blockwise = |sign: f64| {
            max_over(&|z| {
                (2..=s)
                    .map(|i| (b0[i - 1] * psi_stage(tableau, 2, i, z, sign)).abs())
                    .fold(0.0, f64::max)
            })
        };
        conditions.push(OrderCondition {
            name: "sum b_i(0) psi_2,i".into(),
            residual: summed(1.0),
            residual_as_printed: summed(-1.0),
        });
        conditions.push(OrderCondition {
            name: "b_i(0) psi_2,i blockwise".into(),
            residual: blockwise(1.0),
            residual_as_printed: blockwise(-1.0),
        });
    }
    Ok(OrderReport {
        tableau: tableau.name.clone(),
        order,
        samples: zs.len(),
        conditions,
    })
}
