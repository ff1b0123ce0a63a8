//! Periodic tensor grids, nodal fields and Fourier-diagonal operators.
//!
//! Nodal data is stored with the x index fastest: node `(i, j, k)` lives at
//! `i + Mx * (j + My * k)`. Spectral coefficients use the same layout in FFT
//! order, so position `j` along an axis holds wavenumber `j` for `j < M/2` and
//! `j - M` otherwise, which covers the lattice `[-M/2, M/2 - 1]`.
//!
//! The forward transform carries the `1/M^d` factor and the inverse carries
//! none. Phases are referenced to the lower corner of the domain, so on
//! `[0, 2π]^d` the coefficients are exactly `(1/M^d) Σ u_j e^{-i l·x_j}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub points: usize,
    pub min: f64,
    pub max: f64,
}

impl Axis {
    pub fn new(points: usize, min: f64, max: f64) -> Self {
        Self { points, min, max }
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    pub fn mesh_size(&self) -> f64 {
        self.length() / self.points as f64
    }
}

/// Uniform periodic grid in one to three dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {}",
                axes.len()
            )));
        }
        for (a, ax) in axes.iter().enumerate() {
            if ax.points < 4 || ax.points % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: points per axis must be even and at least 4, got {}",
                    ax.points
                )));
            }
            if !(ax.min.is_finite() && ax.max.is_finite() && ax.max > ax.min) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: bad extent [{}, {}]",
                    ax.min, ax.max
                )));
            }
        }
        Ok(Self { axes })
    }

    /// Isotropic grid `[min, max]^dim` with `m` points per axis.
    pub fn uniform(dim: usize, m: usize, min: f64, max: f64) -> Result<Self> {
        Self::new(vec![Axis::new(m, min, max); dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn points_per_axis(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    /// Total number of nodes, `Π M_a`.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mesh_size(&self, axis: usize) -> f64 {
        self.axes[axis].mesh_size()
    }

    /// Quadrature weight `h^d` of a single node.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::mesh_size).product()
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Integer wavenumbers in FFT order for one axis.
    pub fn wavenumbers(&self, axis: usize) -> Vec<i64> {
        let m = self.axes[axis].points as i64;
        (0..m).map(|j| if j < m / 2 { j } else { j - m }).collect()
    }

    /// Physical wavenumbers `2π l / L` in FFT order for one axis.
    pub fn angular_wavenumbers(&self, axis: usize) -> Vec<f64> {
        let scale = 2.0 * PI / self.axes[axis].length();
        self.wavenumbers(axis)
            .into_iter()
            .map(|l| scale * l as f64)
            .collect()
    }

    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        let ax = self.axes[axis];
        let h = ax.mesh_size();
        (0..ax.points).map(|j| ax.min + h * j as f64).collect()
    }

    /// Per-axis integer indices of flat node `flat`.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (a, ax) in self.axes.iter().enumerate() {
            idx[a] = flat % ax.points;
            flat /= ax.points;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for a in (0..self.dim()).rev() {
            flat = flat * self.axes[a].points + idx[a];
        }
        flat
    }

    /// Physical coordinates of flat node `flat` (unused trailing entries are zero).
    pub fn node(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; 3];
        for (a, ax) in self.axes.iter().enumerate() {
            x[a] = ax.min + ax.mesh_size() * idx[a] as f64;
        }
        x
    }

    /// Same domain with `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            self.axes
                .iter()
                .map(|a| Axis::new(a.points * factor, a.min, a.max))
                .collect(),
        )
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.axes.iter().map(|a| a.points.to_string()).collect();
        write!(f, "{}", dims.join("x"))
    }
}

/// Real nodal samples on a grid, optionally carrying their discrete Fourier
/// coefficients.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
    spectrum: Option<Arc<[Complex64]>>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but grid {} has {} nodes",
                values.len(),
                grid,
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            spectrum: None,
        })
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![value; n],
            spectrum: None,
        }
    }

    /// Samples `f` at every node; `f` receives the coordinates `[x, y, z]`.
    pub fn from_fn<F>(grid: Arc<Grid>, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        let values = par::collect_indexed(grid.len(), |i| f(grid.node(i)));
        Self {
            grid,
            values,
            spectrum: None,
        }
    }

    pub(crate) fn with_spectrum(mut self, spectrum: Vec<Complex64>) -> Self {
        debug_assert_eq!(spectrum.len(), self.values.len());
        self.spectrum = Some(spectrum.into());
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cached_spectrum(&self) -> Option<&[Complex64]> {
        self.spectrum.as_deref()
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Pointwise map; the spectral cache is dropped.
    pub fn map<F>(&self, f: F) -> Field
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let v = &self.values;
        Field {
            grid: self.grid.clone(),
            values: par::collect_indexed(v.len(), |i| f(v[i])),
            spectrum: None,
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<F>(&self, other: &Field, f: F) -> Result<Field>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let (a, b) = (&self.values, &other.values);
        Ok(Field {
            grid: self.grid.clone(),
            values: par::collect_indexed(a.len(), |i| f(a[i], b[i])),
            spectrum: None,
        })
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min_max(&self) -> (f64, f64) {
        let v = &self.values;
        par::min_max_indexed(v.len(), |i| v[i])
    }

    pub fn max_abs(&self) -> f64 {
        let (lo, hi) = self.min_max();
        lo.abs().max(hi.abs())
    }

    pub fn mean(&self) -> f64 {
        let v = &self.values;
        par::sum_indexed(v.len(), |i| v[i]) / v.len() as f64
    }

    /// Discrete inner product `h^d Σ u_j v_j`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let (a, b) = (&self.values, &other.values);
        Ok(self.grid.cell_volume() * par::sum_indexed(a.len(), |i| a[i] * b[i]))
    }

    /// Discrete L² norm `sqrt(h^d Σ u_j²)`.
    pub fn l2_norm(&self) -> f64 {
        let v = &self.values;
        (self.grid.cell_volume() * par::sum_indexed(v.len(), |i| v[i] * v[i])).sqrt()
    }

    /// `sqrt(h^d Σ (u_j - v_j)²)`.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let (a, b) = (&self.values, &other.values);
        Ok((self.grid.cell_volume()
            * par::sum_indexed(a.len(), |i| (a[i] - b[i]) * (a[i] - b[i])))
        .sqrt())
    }

    pub fn max_abs_difference(&self, other: &Field) -> Result<f64> {
        let d = self.zip_map(other, |a, b| a - b)?;
        Ok(d.max_abs())
    }
}

/// Which trigonometric representation of nodal data a result should follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// `I_h`: the interpolant through the nodal values.
    Interpolation,
    /// `P_h`: truncation to the wavenumber lattice of the grid.
    Truncation,
}

/// A real, diagonal operator in Fourier space.
#[derive(Clone, Debug)]
pub struct FourierMultiplier {
    grid: Arc<Grid>,
    symbol: Vec<f64>,
}

impl FourierMultiplier {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Multiplier values per mode, FFT-ordered.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Pointwise product of the two symbols.
    pub fn compose(&self, other: &FourierMultiplier) -> Result<FourierMultiplier> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        let (a, b) = (&self.symbol, &other.symbol);
        Ok(FourierMultiplier {
            grid: self.grid.clone(),
            symbol: par::collect_indexed(a.len(), |i| a[i] * b[i]),
        })
    }

    /// Applies a scalar function to the symbol, e.g. `exp` or a resolvent.
    pub fn map<F>(&self, f: F) -> Result<FourierMultiplier>
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let s = &self.symbol;
        let symbol = par::collect_indexed(s.len(), |i| f(s[i]));
        FourierMultiplier::checked(self.grid.clone(), symbol)
    }

    fn checked(grid: Arc<Grid>, symbol: Vec<f64>) -> Result<Self> {
        if let Some(index) = symbol.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index,
                value: symbol[index],
            });
        }
        Ok(Self { grid, symbol })
    }
}

/// Transform plans and wavenumber tables for one grid.
pub struct Spectral {
    grid: Arc<Grid>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    wave_squared: Vec<f64>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Arc<Grid>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid
            .axes()
            .iter()
            .map(|a| planner.plan_fft_forward(a.points))
            .collect();
        let inverse = grid
            .axes()
            .iter()
            .map(|a| planner.plan_fft_inverse(a.points))
            .collect();
        let kx: Vec<Vec<f64>> = (0..grid.dim())
            .map(|a| grid.angular_wavenumbers(a))
            .collect();
        let wave_squared = par::collect_indexed(grid.len(), |i| {
            let idx = grid.unflatten(i);
            (0..kx.len()).map(|a| kx[a][idx[a]] * kx[a][idx[a]]).sum()
        });
        Self {
            grid,
            forward,
            inverse,
            wave_squared,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `|k|²` per mode; this is the symbol of `-Δ`.
    pub fn wave_squared(&self) -> &[f64] {
        &self.wave_squared
    }

    pub fn field(&self, values: Vec<f64>) -> Result<Field> {
        Field::new(self.grid.clone(), values)
    }

    fn check_grid(&self, field: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, field.grid()) || *self.grid == **field.grid() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Discrete Fourier coefficients `ũ_l` of a field.
    pub fn forward(&self, field: &Field) -> Result<Vec<Complex64>> {
        self.check_grid(field)?;
        if let Some(s) = field.cached_spectrum() {
            return Ok(s.to_vec());
        }
        field.check_finite()?;
        Ok(self.forward_values(field.values()))
    }

    /// Forward transform of raw nodal values (no finiteness check).
    pub fn forward_values(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        let scale = 1.0 / data.len() as f64;
        par::for_each_chunk_mut(&mut data, par::REDUCE_CHUNK, |_, c| {
            c.iter_mut().for_each(|z| *z *= scale)
        });
        data
    }

    /// Real part of the inverse transform.
    pub fn inverse_values(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.transform(&mut data, true);
        data.into_iter().map(|z| z.re).collect()
    }

    /// Field whose coefficients are `coeffs`; the coefficients are cached.
    pub fn inverse(&self, coeffs: Vec<Complex64>) -> Result<Field> {
        if coeffs.len() != self.grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a grid of {} nodes",
                coeffs.len(),
                self.grid.len()
            )));
        }
        let values = self.inverse_values(&coeffs);
        Ok(Field::new(self.grid.clone(), values)?.with_spectrum(coeffs))
    }

    /// Field with its spectral cache filled in.
    pub fn with_spectrum(&self, field: Field) -> Result<Field> {
        if field.cached_spectrum().is_some() {
            return Ok(field);
        }
        let s = self.forward(&field)?;
        Ok(field.with_spectrum(s))
    }

    /// Multiplier with symbol `f(k)` evaluated on the physical wave vector.
    /// Symbols should be even in `k` for the output of `apply` to be real.
    pub fn multiplier<F>(&self, f: F) -> Result<FourierMultiplier>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let dim = self.grid.dim();
        let kx: Vec<Vec<f64>> = (0..dim).map(|a| self.grid.angular_wavenumbers(a)).collect();
        let grid = &self.grid;
        let symbol = par::collect_indexed(grid.len(), |i| {
            let idx = grid.unflatten(i);
            let mut k = [0.0; 3];
            for a in 0..dim {
                k[a] = kx[a][idx[a]];
            }
            f(&k[..dim])
        });
        FourierMultiplier::checked(self.grid.clone(), symbol)
    }

    /// Multiplier as a function of `|k|²`.
    pub fn radial_multiplier<F>(&self, f: F) -> Result<FourierMultiplier>
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let k2 = &self.wave_squared;
        let symbol = par::collect_indexed(k2.len(), |i| f(k2[i]));
        FourierMultiplier::checked(self.grid.clone(), symbol)
    }

    pub fn identity(&self) -> FourierMultiplier {
        FourierMultiplier {
            grid: self.grid.clone(),
            symbol: vec![1.0; self.grid.len()],
        }
    }

    /// `-Δ`.
    pub fn neg_laplacian(&self) -> FourierMultiplier {
        FourierMultiplier {
            grid: self.grid.clone(),
            symbol: self.wave_squared.clone(),
        }
    }

    /// `(I - ηΔ)^{-1}`.
    pub fn resolvent(&self, eta: f64) -> Result<FourierMultiplier> {
        self.radial_multiplier(|k2| 1.0 / (1.0 + eta * k2))
    }

    pub fn apply(&self, op: &FourierMultiplier, field: &Field) -> Result<Field> {
        if *op.grid != *self.grid {
            return Err(Error::GridMismatch);
        }
        let mut c = self.forward(field)?;
        let s = op.symbol();
        par::for_each_chunk_mut(&mut c, par::REDUCE_CHUNK, |ci, chunk| {
            let base = ci * par::REDUCE_CHUNK;
            for (j, z) in chunk.iter_mut().enumerate() {
                *z *= s[base + j];
            }
        });
        self.inverse(c)
    }

    /// `I_h` or `P_h` of nodal data. At the grid's own resolution both
    /// reproduce the nodal values; the distinction matters once a nonlinear
    /// map is involved, see [`Spectral::project_mapped`].
    pub fn project(&self, field: &Field, target: Projection) -> Result<Field> {
        self.check_grid(field)?;
        match target {
            Projection::Interpolation => Ok(field.clone()),
            Projection::Truncation => {
                let c = self.forward(field)?;
                self.inverse(c)
            }
        }
    }

    /// `P_h map(I_h u)` sampled at the nodes.
    ///
    /// The interpolant of `u` is evaluated on a grid `refine` times finer,
    /// `map` is applied there, and the fine-grid coefficients are truncated
    /// to the lattice `[-M/2, M/2 - 1]^d` of this grid. The Nyquist mode of
    /// the interpolant is taken as a cosine.
    pub fn project_mapped<F>(&self, field: &Field, map: F, refine: usize) -> Result<Field>
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        if refine < 1 {
            return Err(Error::InvalidArgument("refinement factor must be >= 1".into()));
        }
        let fine_grid = Arc::new(self.grid.refined(refine)?);
        let fine = Spectral::new(fine_grid.clone());
        let coarse = self.forward(field)?;
        let padded = self.zero_pad(&coarse, &fine_grid);
        let fine_values = fine.inverse_values(&padded);
        let mapped: Vec<f64> = fine_values.into_iter().map(&map).collect();
        let fine_coeffs = fine.forward_values(&mapped);
        let truncated = self.truncate_from(&fine_coeffs, &fine_grid);
        self.inverse(truncated)
    }

    /// Coefficients of the coarse interpolant placed on a finer lattice.
    fn zero_pad(&self, coarse: &[Complex64], fine_grid: &Grid) -> Vec<Complex64> {
        let dim = self.grid.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); fine_grid.len()];
        let cm = self.grid.points_per_axis();
        let fm = fine_grid.points_per_axis();
        for (flat, &c) in coarse.iter().enumerate() {
            let idx = self.grid.unflatten(flat);
            // Each Nyquist axis splits the coefficient evenly onto ±M/2.
            let mut targets: Vec<([usize; 3], f64)> = vec![([0; 3], 1.0)];
            for a in 0..dim {
                let l = if idx[a] < cm[a] / 2 {
                    idx[a] as i64
                } else {
                    idx[a] as i64 - cm[a] as i64
                };
                let wrap = |l: i64| l.rem_euclid(fm[a] as i64) as usize;
                let mut next = Vec::with_capacity(targets.len() * 2);
                for (t, w) in targets {
                    if l == -(cm[a] as i64) / 2 && fm[a] > cm[a] {
                        let mut lo = t;
                        lo[a] = wrap(l);
                        let mut hi = t;
                        hi[a] = wrap(-l);
                        next.push((lo, 0.5 * w));
                        next.push((hi, 0.5 * w));
                    } else {
                        let mut t2 = t;
                        t2[a] = wrap(l);
                        next.push((t2, w));
                    }
                }
                targets = next;
            }
            for (t, w) in targets {
                out[fine_grid.flatten(&t[..dim])] += c * w;
            }
        }
        out
    }

    /// Keeps the fine-lattice modes that belong to this grid's lattice.
    fn truncate_from(&self, fine: &[Complex64], fine_grid: &Grid) -> Vec<Complex64> {
        let dim = self.grid.dim();
        let cm = self.grid.points_per_axis();
        let fm = fine_grid.points_per_axis();
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (flat, slot) in out.iter_mut().enumerate() {
            let idx = self.grid.unflatten(flat);
            let mut t = [0usize; 3];
            for a in 0..dim {
                let l = if idx[a] < cm[a] / 2 {
                    idx[a] as i64
                } else {
                    idx[a] as i64 - cm[a] as i64
                };
                t[a] = l.rem_euclid(fm[a] as i64) as usize;
            }
            *slot = fine[fine_grid.flatten(&t[..dim])];
        }
        out
    }

    /// In-place unnormalized N-d FFT over the x-fastest layout.
    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plans = if inverse { &self.inverse } else { &self.forward };
        let dims = self.grid.points_per_axis();
        let total = data.len();
        let mut stride = 1;
        for (a, &n) in dims.iter().enumerate() {
            let fft = plans[a].clone();
            let scratch_len = fft.get_inplace_scratch_len();
            let lines_per_task = (par::REDUCE_CHUNK / n).max(1);
            let run = |buf: &mut [Complex64]| {
                par::for_each_chunk_mut_init(
                    buf,
                    n * lines_per_task,
                    || vec![Complex64::new(0.0, 0.0); scratch_len],
                    |scratch, chunk| fft.process_with_scratch(chunk, scratch),
                );
            };
            if stride == 1 {
                run(data);
            } else {
                // Gather every line along this axis into contiguous storage.
                let slab = stride * n;
                let mut lines = vec![Complex64::new(0.0, 0.0); total];
                {
                    let src = &*data;
                    par::fill_indexed(&mut lines, |p| {
                        let line = p / n;
                        let m = p % n;
                        let outer = line / stride;
                        let inner = line % stride;
                        src[outer * slab + inner + m * stride]
                    });
                }
                run(&mut lines);
                let src = &lines;
                par::fill_indexed(data, |q| {
                    let outer = q / slab;
                    let rem = q % slab;
                    let m = rem / stride;
                    let inner = rem % stride;
                    src[(outer * stride + inner) * n + m]
                });
            }
            stride *= n;
        }
    }
}
