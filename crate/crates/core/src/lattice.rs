//! Periodic-lattice Cauchy data `(a, e)` in temporal gauge.
//!
//! Fields are algebra-valued and live on the sites of a periodic cube `n³`
//! with spacing `h`. All spatial derivatives are central differences,
//! `D_k f(x) = (f(x + ê_k) − f(x − ê_k)) / 2h`, which are exactly
//! antisymmetric with respect to the lattice inner product. The magnetic
//! force used by [`evolve`] is therefore the exact negative gradient of the
//! discrete magnetic energy and the leapfrog scheme is symplectic.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::LatticeError;
use crate::lie::{Complex64, LieAlgebraSpec};

/// Number of spatial axes.
pub const AXES: usize = 3;

/// Axis pairs `(j, k)` with `j < k`, in storage order.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Periodic cube of `n³` sites with spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(n: usize, h: f64) -> Result<Self, LatticeError> {
        if n < 2 {
            return Err(LatticeError::BadGrid(format!("need n >= 2, got {n}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(LatticeError::BadGrid(format!("need h > 0, got {h}")));
        }
        Ok(Grid { n, h })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn sites(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Volume element `h³`.
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// Site index of `(x, y, z)`: `x + n (y + n z)`.
    #[inline]
    pub fn site(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.n * (y + self.n * z)
    }

    #[inline]
    pub fn coords(&self, site: usize) -> [usize; 3] {
        let n = self.n;
        [site % n, (site / n) % n, site / (n * n)]
    }

    /// Neighbour of `site` one step along `axis` in direction `+1` or `−1`.
    #[inline]
    pub fn shift(&self, site: usize, axis: usize, forward: bool) -> usize {
        let mut c = self.coords(site);
        c[axis] = if forward { (c[axis] + 1) % self.n } else { (c[axis] + self.n - 1) % self.n };
        self.site(c[0], c[1], c[2])
    }

    /// Largest stable time step, `0.5 h / √3`.
    pub fn cfl_bound(&self) -> f64 {
        0.5 * self.h / 3f64.sqrt()
    }
}

/// Algebra-valued field indexed by `(site, Lie index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim_g: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid, dim_g: usize) -> Self {
        ScalarField { dim_g, values: vec![0.0; grid.sites() * dim_g] }
    }

    pub fn from_values(grid: &Grid, dim_g: usize, values: Vec<f64>) -> Result<Self, LatticeError> {
        let expected = grid.sites() * dim_g;
        if values.len() != expected {
            return Err(LatticeError::ShapeMismatch { what: "scalar field", expected, found: values.len() });
        }
        Ok(ScalarField { dim_g, values })
    }

    pub fn random<R: Rng>(grid: &Grid, dim_g: usize, amplitude: f64, rng: &mut R) -> Self {
        let values = (0..grid.sites() * dim_g).map(|_| amplitude * rng.random_range(-1.0..1.0)).collect();
        ScalarField { dim_g, values }
    }

    pub fn dim_g(&self) -> usize {
        self.dim_g
    }

    #[inline]
    pub fn at(&self, site: usize) -> &[f64] {
        &self.values[site * self.dim_g..(site + 1) * self.dim_g]
    }

    #[inline]
    pub fn at_mut(&mut self, site: usize) -> &mut [f64] {
        &mut self.values[site * self.dim_g..(site + 1) * self.dim_g]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Lattice inner product `h³ Σ u·v`.
    pub fn inner(&self, other: &Self, grid: &Grid) -> f64 {
        grid.cell_volume() * dot(&self.values, &other.values)
    }

    /// Lattice `L²` norm.
    pub fn norm(&self, grid: &Grid) -> f64 {
        self.inner(self, grid).sqrt()
    }
}

/// Algebra-valued 3-vector field indexed by `(site, axis, Lie index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField {
    dim_g: usize,
    values: Vec<f64>,
}

impl GaugeField {
    pub fn zeros(grid: &Grid, dim_g: usize) -> Self {
        GaugeField { dim_g, values: vec![0.0; grid.sites() * AXES * dim_g] }
    }

    pub fn from_values(grid: &Grid, dim_g: usize, values: Vec<f64>) -> Result<Self, LatticeError> {
        let expected = grid.sites() * AXES * dim_g;
        if values.len() != expected {
            return Err(LatticeError::ShapeMismatch { what: "gauge field", expected, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::Format("non-finite field entry".into()));
        }
        Ok(GaugeField { dim_g, values })
    }

    pub fn random<R: Rng>(grid: &Grid, dim_g: usize, amplitude: f64, rng: &mut R) -> Self {
        let values = (0..grid.sites() * AXES * dim_g)
            .map(|_| amplitude * rng.random_range(-1.0..1.0))
            .collect();
        GaugeField { dim_g, values }
    }

    /// Field equal to `value` (a Lie coefficient vector) on every site along every axis listed.
    pub fn constant(grid: &Grid, per_axis: [&[f64]; AXES]) -> Self {
        let dim_g = per_axis[0].len();
        let mut f = GaugeField::zeros(grid, dim_g);
        for s in 0..grid.sites() {
            for (k, v) in per_axis.iter().enumerate() {
                f.at_mut(s, k).copy_from_slice(v);
            }
        }
        f
    }

    pub fn dim_g(&self) -> usize {
        self.dim_g
    }

    #[inline]
    pub fn at(&self, site: usize, axis: usize) -> &[f64] {
        let o = (site * AXES + axis) * self.dim_g;
        &self.values[o..o + self.dim_g]
    }

    #[inline]
    pub fn at_mut(&mut self, site: usize, axis: usize) -> &mut [f64] {
        let o = (site * AXES + axis) * self.dim_g;
        &mut self.values[o..o + self.dim_g]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn inner(&self, other: &Self, grid: &Grid) -> f64 {
        grid.cell_volume() * dot(&self.values, &other.values)
    }

    pub fn norm(&self, grid: &Grid) -> f64 {
        self.inner(self, grid).sqrt()
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        GaugeField { dim_g: self.dim_g, values: self.values.iter().map(|v| alpha * v).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        GaugeField {
            dim_g: self.dim_g,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Temporal-gauge Cauchy data: potential `a` and electric field `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub a: GaugeField,
    pub e: GaugeField,
}

impl CauchyData {
    pub fn zeros(grid: &Grid, dim_g: usize) -> Self {
        CauchyData { a: GaugeField::zeros(grid, dim_g), e: GaugeField::zeros(grid, dim_g) }
    }
}

/// Curvature components `F_jk` for `j < k`, indexed `(site, pair, Lie index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    dim_g: usize,
    values: Vec<f64>,
}

impl CurvatureField {
    fn zeros(grid: &Grid, dim_g: usize) -> Self {
        CurvatureField { dim_g, values: vec![0.0; grid.sites() * PAIRS.len() * dim_g] }
    }

    #[inline]
    fn slot(&self, site: usize, pair: usize) -> usize {
        (site * PAIRS.len() + pair) * self.dim_g
    }

    /// Stored component for pair index `p` (see [`PAIRS`]).
    pub fn pair(&self, site: usize, p: usize) -> &[f64] {
        let o = self.slot(site, p);
        &self.values[o..o + self.dim_g]
    }

    /// `F_jk` with the antisymmetric extension: returns the sign and the stored slice.
    pub fn component(&self, site: usize, j: usize, k: usize) -> Option<(f64, &[f64])> {
        if j == k {
            return None;
        }
        let (lo, hi, sign) = if j < k { (j, k, 1.0) } else { (k, j, -1.0) };
        let p = PAIRS.iter().position(|&pq| pq == (lo, hi)).expect("valid axis pair");
        Some((sign, self.pair(site, p)))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_gauge(grid: &Grid, g: &LieAlgebraSpec, f: &GaugeField, what: &'static str) -> Result<(), LatticeError> {
    let expected = grid.sites() * AXES * g.dim();
    if f.values.len() != expected || f.dim_g != g.dim() {
        return Err(LatticeError::ShapeMismatch { what, expected, found: f.values.len() });
    }
    Ok(())
}

pub(crate) fn check_scalar(grid: &Grid, g: &LieAlgebraSpec, f: &ScalarField, what: &'static str) -> Result<(), LatticeError> {
    let expected = grid.sites() * g.dim();
    if f.values.len() != expected || f.dim_g != g.dim() {
        return Err(LatticeError::ShapeMismatch { what, expected, found: f.values.len() });
    }
    Ok(())
}

/// Central difference of component `axis_of_field` of `f` along `axis_of_diff` at `site`.
#[inline]
fn central_diff(grid: &Grid, f: &GaugeField, site: usize, diff_axis: usize, comp: usize, out: &mut [f64]) {
    let inv = 0.5 / grid.h();
    let fwd = f.at(grid.shift(site, diff_axis, true), comp);
    let bwd = f.at(grid.shift(site, diff_axis, false), comp);
    for ((o, p), m) in out.iter_mut().zip(fwd).zip(bwd) {
        *o = (p - m) * inv;
    }
}

/// `F_jk = D_j a_k − D_k a_j − [a_j, a_k]` (bracket scaled by the coupling).
pub fn curvature(g: &LieAlgebraSpec, grid: &Grid, a: &GaugeField) -> Result<CurvatureField, LatticeError> {
    check_gauge(grid, g, a, "potential")?;
    let d = g.dim();
    let mut f = CurvatureField::zeros(grid, d);
    let mut djak = vec![0.0; d];
    let mut dkaj = vec![0.0; d];
    for s in 0..grid.sites() {
        for (p, &(j, k)) in PAIRS.iter().enumerate() {
            central_diff(grid, a, s, j, k, &mut djak);
            central_diff(grid, a, s, k, j, &mut dkaj);
            let o = f.slot(s, p);
            let out = &mut f.values[o..o + d];
            for i in 0..d {
                out[i] = djak[i] - dkaj[i];
            }
            let br = g.bracket(a.at(s, j), a.at(s, k));
            for i in 0..d {
                out[i] -= br[i];
            }
        }
    }
    Ok(f)
}

fn killing_sq(g: &LieAlgebraSpec, v: &[f64]) -> f64 {
    let m = g.metric();
    let d = g.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += v[i] * m[(i, j)] * v[j];
        }
    }
    s
}

/// Electric and magnetic parts of the energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    pub electric: f64,
    pub magnetic: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.electric + self.magnetic
    }
}

pub fn energy_parts(g: &LieAlgebraSpec, grid: &Grid, c: &CauchyData) -> Result<EnergyParts, LatticeError> {
    check_gauge(grid, g, &c.a, "potential")?;
    check_gauge(grid, g, &c.e, "electric field")?;
    let f = curvature(g, grid, &c.a)?;
    let vol = grid.cell_volume();
    let d = g.dim();
    let mut electric = 0.0;
    for s in 0..grid.sites() {
        for k in 0..AXES {
            electric += killing_sq(g, c.e.at(s, k));
        }
    }
    let magnetic: f64 = f.values.chunks(d).map(|v| killing_sq(g, v)).sum();
    Ok(EnergyParts { electric: 0.5 * vol * electric, magnetic: 0.5 * vol * magnetic })
}

/// `h³ Σ (1/2)(e⋆e + B⋆B)` with `B = (F_23, F_31, F_12)`.
pub fn energy(g: &LieAlgebraSpec, grid: &Grid, c: &CauchyData) -> Result<f64, LatticeError> {
    Ok(energy_parts(g, grid, c)?.total())
}

/// `ė_k = Σ_j D_j F_jk − [a_j, F_jk]`, the exact negative gradient of the
/// discrete magnetic energy (per unit cell volume).
pub fn magnetic_force(g: &LieAlgebraSpec, grid: &Grid, a: &GaugeField) -> Result<GaugeField, LatticeError> {
    let f = curvature(g, grid, a)?;
    let d = g.dim();
    let inv = 0.5 / grid.h();
    let mut out = GaugeField::zeros(grid, d);
    for s in 0..grid.sites() {
        for k in 0..AXES {
            let mut acc = vec![0.0; d];
            for j in 0..AXES {
                if j == k {
                    continue;
                }
                let fwd = grid.shift(s, j, true);
                let bwd = grid.shift(s, j, false);
                let (sign, fp) = f.component(fwd, j, k).expect("j != k");
                let (_, fm) = f.component(bwd, j, k).expect("j != k");
                for i in 0..d {
                    acc[i] += sign * (fp[i] - fm[i]) * inv;
                }
                let (_, fs) = f.component(s, j, k).expect("j != k");
                let fs: Vec<f64> = fs.iter().map(|v| sign * v).collect();
                g.bracket_transpose_add(a.at(s, j), &fs, &mut acc);
            }
            out.at_mut(s, k).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

/// Velocity-Verlet form of the leapfrog scheme for `∂_t a = e`, `∂_t e = force(a)`.
///
/// Negative `dt` integrates backwards; `|dt|` must satisfy [`Grid::cfl_bound`].
pub fn evolve(
    g: &LieAlgebraSpec,
    grid: &Grid,
    c0: &CauchyData,
    dt: f64,
    steps: usize,
) -> Result<CauchyData, LatticeError> {
    evolve_observed(g, grid, c0, dt, steps, |_, _| {})
}

/// [`evolve`] with a callback invoked after every completed step.
pub fn evolve_observed<F>(
    g: &LieAlgebraSpec,
    grid: &Grid,
    c0: &CauchyData,
    dt: f64,
    steps: usize,
    mut observer: F,
) -> Result<CauchyData, LatticeError>
where
    F: FnMut(usize, &CauchyData),
{
    check_gauge(grid, g, &c0.a, "potential")?;
    check_gauge(grid, g, &c0.e, "electric field")?;
    let bound = grid.cfl_bound();
    if !(dt.abs() <= bound) || dt == 0.0 {
        return Err(LatticeError::CflViolated { dt, bound });
    }
    let mut c = c0.clone();
    let mut force = magnetic_force(g, grid, &c.a)?;
    for step in 1..=steps {
        c.e.axpy(0.5 * dt, &force);
        c.a.axpy(dt, &c.e);
        force = magnetic_force(g, grid, &c.a)?;
        c.e.axpy(0.5 * dt, &force);
        observer(step, &c);
    }
    Ok(c)
}

/// `div_a e = Σ_k D_k e_k − [a_k, e_k]` as a lattice field.
pub fn gauss_law(g: &LieAlgebraSpec, grid: &Grid, c: &CauchyData) -> Result<ScalarField, LatticeError> {
    crate::helmholtz::gauge_div(g, grid, &c.a, &c.e)
}

/// Lattice `L²` norm of `div_a e`.
pub fn constraint_residual(g: &LieAlgebraSpec, grid: &Grid, c: &CauchyData) -> Result<f64, LatticeError> {
    Ok(gauss_law(g, grid, c)?.norm(grid))
}

/// Self-convergence of the leapfrog scheme under `dt`-halving.
///
/// Runs to a fixed final time with `dt`, `dt/2`, `dt/4`. The energy order
/// comes from the drift `E(T) − E(0)` directly; the constraint and field
/// orders come from Richardson differences `‖G(dt) − G(dt/2)‖ / ‖G(dt/2) − G(dt/4)‖`,
/// which cancel the `dt`-independent spatial error of the discrete Gauss law.
#[derive(Debug, Clone, Serialize)]
pub struct DtConvergence {
    pub dt: [f64; 3],
    pub energy_drift: [f64; 3],
    pub energy_order: f64,
    pub constraint_residual: [f64; 3],
    pub constraint_differences: [f64; 2],
    pub constraint_order: f64,
    pub field_differences: [f64; 2],
    pub field_order: f64,
}

pub fn dt_convergence(
    g: &LieAlgebraSpec,
    grid: &Grid,
    c0: &CauchyData,
    dt: f64,
    steps: usize,
) -> Result<DtConvergence, LatticeError> {
    let e0 = energy(g, grid, c0)?;
    let mut finals = Vec::with_capacity(3);
    let mut dts = [0.0; 3];
    for (i, f) in [1usize, 2, 4].into_iter().enumerate() {
        dts[i] = dt / f as f64;
        finals.push(evolve(g, grid, c0, dts[i], steps * f)?);
    }
    let mut drift = [0.0; 3];
    let mut residual = [0.0; 3];
    let mut gauss = Vec::with_capacity(3);
    for (i, c) in finals.iter().enumerate() {
        drift[i] = energy(g, grid, c)? - e0;
        let gl = gauss_law(g, grid, c)?;
        residual[i] = gl.norm(grid);
        gauss.push(gl);
    }
    let diff_scalar = |a: &ScalarField, b: &ScalarField| {
        let v: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum();
        (grid.cell_volume() * v).sqrt()
    };
    let diff_cauchy = |a: &CauchyData, b: &CauchyData| {
        let da = a.a.sub(&b.a).norm(grid);
        let de = a.e.sub(&b.e).norm(grid);
        (da * da + de * de).sqrt()
    };
    let cd = [diff_scalar(&gauss[0], &gauss[1]), diff_scalar(&gauss[1], &gauss[2])];
    let fd = [diff_cauchy(&finals[0], &finals[1]), diff_cauchy(&finals[1], &finals[2])];
    Ok(DtConvergence {
        dt: dts,
        energy_drift: drift,
        energy_order: (drift[0].abs() / drift[1].abs()).log2(),
        constraint_residual: residual,
        constraint_differences: cd,
        constraint_order: (cd[0] / cd[1]).log2(),
        field_differences: fd,
        field_order: (fd[0] / fd[1]).log2(),
    })
}

/// Group-valued lattice function in the defining representation.
#[derive(Debug, Clone)]
pub struct GroupField {
    pub values: Vec<DMatrix<Complex64>>,
}

impl GroupField {
    pub fn identity(grid: &Grid, rep_dim: usize) -> Self {
        GroupField { values: vec![DMatrix::identity(rep_dim, rep_dim); grid.sites()] }
    }

    pub fn constant(grid: &Grid, m: DMatrix<Complex64>) -> Self {
        GroupField { values: vec![m; grid.sites()] }
    }

    /// `exp(u(x))` at every site, `u` algebra-valued.
    pub fn exp_of(g: &LieAlgebraSpec, grid: &Grid, u: &ScalarField) -> Result<Self, LatticeError> {
        check_scalar(grid, g, u, "gauge generator")?;
        let values = (0..grid.sites())
            .map(|s| g.to_matrix(u.at(s)).map(|m| m.exp()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GroupField { values })
    }

    /// Pointwise product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        GroupField { values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect() }
    }

    fn check_unitary(&self, grid: &Grid) -> Result<(), LatticeError> {
        if self.values.len() != grid.sites() {
            return Err(LatticeError::ShapeMismatch {
                what: "gauge function",
                expected: grid.sites(),
                found: self.values.len(),
            });
        }
        for (site, m) in self.values.iter().enumerate() {
            let id = DMatrix::<Complex64>::identity(m.nrows(), m.ncols());
            let r = (m * m.adjoint() - id).iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
            if r > 1e-10 {
                return Err(LatticeError::NotUnitary { site, residual: r });
            }
        }
        Ok(())
    }
}

/// `a^g_k = Ad(g) a_k − (D_k g) g⁻¹`, projected onto the algebra.
pub fn gauge_transform(
    g: &LieAlgebraSpec,
    grid: &Grid,
    a: &GaugeField,
    gfun: &GroupField,
) -> Result<GaugeField, LatticeError> {
    check_gauge(grid, g, a, "potential")?;
    gfun.check_unitary(grid)?;
    let inv = Complex64::new(0.5 / grid.h(), 0.0);
    let mut out = GaugeField::zeros(grid, g.dim());
    for s in 0..grid.sites() {
        let gs = &gfun.values[s];
        let ginv = gs.adjoint();
        for k in 0..AXES {
            let ak = g.to_matrix(a.at(s, k))?;
            let dg = (&gfun.values[grid.shift(s, k, true)] - &gfun.values[grid.shift(s, k, false)]) * inv;
            let m = gs * ak * &ginv - dg * &ginv;
            out.at_mut(s, k).copy_from_slice(&g.from_matrix(&m)?);
        }
    }
    Ok(out)
}

/// Pointwise `Ad(g) v`, used for the electric field, which transforms homogeneously.
pub fn adjoint_action(
    g: &LieAlgebraSpec,
    grid: &Grid,
    v: &GaugeField,
    gfun: &GroupField,
) -> Result<GaugeField, LatticeError> {
    check_gauge(grid, g, v, "field")?;
    gfun.check_unitary(grid)?;
    let mut out = GaugeField::zeros(grid, g.dim());
    for s in 0..grid.sites() {
        let gs = &gfun.values[s];
        let ginv = gs.adjoint();
        for k in 0..AXES {
            let m = gs * g.to_matrix(v.at(s, k))? * &ginv;
            out.at_mut(s, k).copy_from_slice(&g.from_matrix(&m)?);
        }
    }
    Ok(out)
}

/// JSON header accompanying a binary field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub h: f64,
    pub dim_g: usize,
    pub axes: usize,
    pub components: Vec<String>,
    pub layout: String,
    pub algebra: String,
}

pub const FIELD_FORMAT: &str = "ymgap-field";
pub const FIELD_LAYOUT: &str =
    "component-major; within a component: site-major (site = x + n*(y + n*z)), then axis, then Lie index; f64 little-endian";

fn field_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.json")), dir.join(format!("{stem}.bin")))
}

/// Writes `(a, e)` as `<stem>.json` + `<stem>.bin`.
pub fn save_cauchy(
    dir: &Path,
    stem: &str,
    grid: &Grid,
    g: &LieAlgebraSpec,
    c: &CauchyData,
) -> Result<(PathBuf, PathBuf), LatticeError> {
    check_gauge(grid, g, &c.a, "potential")?;
    check_gauge(grid, g, &c.e, "electric field")?;
    let header = FieldHeader {
        format: FIELD_FORMAT.into(),
        version: 1,
        n: grid.n(),
        h: grid.h(),
        dim_g: g.dim(),
        axes: AXES,
        components: vec!["a".into(), "e".into()],
        layout: FIELD_LAYOUT.into(),
        algebra: g.label().into(),
    };
    let (json_path, bin_path) = field_paths(dir, stem);
    let json = serde_json::to_string_pretty(&header).map_err(|e| LatticeError::Format(e.to_string()))?;
    fs::write(&json_path, json)?;
    let mut bytes = Vec::with_capacity(8 * (c.a.values.len() + c.e.values.len()));
    for v in c.a.values.iter().chain(&c.e.values) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::File::create(&bin_path)?.write_all(&bytes)?;
    Ok((json_path, bin_path))
}

pub fn load_cauchy(dir: &Path, stem: &str) -> Result<(FieldHeader, Grid, CauchyData), LatticeError> {
    let (json_path, bin_path) = field_paths(dir, stem);
    let header: FieldHeader =
        serde_json::from_str(&fs::read_to_string(json_path)?).map_err(|e| LatticeError::Format(e.to_string()))?;
    if header.format != FIELD_FORMAT || header.axes != AXES || header.components.len() != 2 {
        return Err(LatticeError::Format("unrecognised field header".into()));
    }
    let grid = Grid::new(header.n, header.h)?;
    let bytes = fs::read(bin_path)?;
    let per = grid.sites() * AXES * header.dim_g;
    if bytes.len() != 16 * per {
        return Err(LatticeError::ShapeMismatch { what: "field file", expected: 16 * per, found: bytes.len() });
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|ch| f64::from_le_bytes(ch.try_into().expect("chunk of 8")))
        .collect();
    let a = GaugeField::from_values(&grid, header.dim_g, vals[..per].to_vec())?;
    let e = GaugeField::from_values(&grid, header.dim_g, vals[per..].to_vec())?;
    Ok((header, grid, CauchyData { a, e }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::build_algebra;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn su2() -> LieAlgebraSpec {
        build_algebra("su", 2).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 1.0).is_err());
        assert!(Grid::new(4, 0.0).is_err());
        let g = Grid::new(4, 1.0).unwrap();
        for s in 0..g.sites() {
            let [x, y, z] = g.coords(s);
            assert_eq!(g.site(x, y, z), s);
            for k in 0..3 {
                assert_eq!(g.shift(g.shift(s, k, true), k, false), s);
            }
        }
    }

    #[test]
    fn curvature_examples() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let zero = GaugeField::zeros(&grid, 3);
        assert_eq!(curvature(&g, &grid, &zero).unwrap().max_abs(), 0.0);

        let dir = [0.3, -0.2, 0.5];
        let par = GaugeField::constant(&grid, [&dir, &dir, &dir]);
        assert!(curvature(&g, &grid, &par).unwrap().max_abs() < 1e-16);

        let (alpha, beta) = (0.7, -1.3);
        let a = GaugeField::constant(&grid, [&[alpha, 0.0, 0.0], &[0.0, beta, 0.0], &[0.0, 0.0, 0.0]]);
        let f = curvature(&g, &grid, &a).unwrap();
        let want = -alpha * beta * std::f64::consts::FRAC_1_SQRT_2;
        for s in 0..grid.sites() {
            let f12 = f.pair(s, 0);
            assert!(f12[0].abs() < 1e-15 && f12[1].abs() < 1e-15);
            assert!((f12[2] - want).abs() < 1e-15);
            assert_eq!(f.pair(s, 1), &[0.0; 3]);
        }
    }

    #[test]
    fn energy_examples() {
        let g = su2();
        let grid = Grid::new(4, 0.5).unwrap();
        let zero = CauchyData::zeros(&grid, 3);
        assert_eq!(energy(&g, &grid, &zero).unwrap(), 0.0);
        let mut c = CauchyData::zeros(&grid, 3);
        c.e.at_mut(5, 0)[0] = 1.0;
        let want = grid.cell_volume() / 2.0;
        assert!((energy(&g, &grid, &c).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn plane_wave_energy_matches_continuum() {
        // Cartan-direction plane wave a_y = A cos(k x) e_3: continuum energy is
        // (1/2) A² k² · V/2; the lattice value carries sin²(kh)/h² instead.
        let g = su2();
        let len = 2.0 * std::f64::consts::PI;
        let mut errs = Vec::new();
        for &n in &[16usize, 32, 64] {
            let h = len / n as f64;
            let grid = Grid::new(n, h).unwrap();
            let k = 1.0;
            let amp = 0.1;
            let mut c = CauchyData::zeros(&grid, 3);
            for s in 0..grid.sites() {
                let x = grid.coords(s)[0] as f64 * h;
                c.a.at_mut(s, 1)[2] = amp * (k * x).cos();
            }
            let e = energy(&g, &grid, &c).unwrap();
            let cont = 0.5 * amp * amp * k * k * len.powi(3) / 2.0;
            let lattice = 0.5 * amp * amp * ((k * h).sin() / h).powi(2) * len.powi(3) / 2.0;
            assert!((e - lattice).abs() < 1e-12 * cont);
            errs.push((e - cont).abs());
        }
        // second-order convergence
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.1, "{errs:?}");
        assert!((errs[1] / errs[2] - 4.0).abs() < 0.05, "{errs:?}");
    }

    #[test]
    fn force_is_negative_energy_gradient() {
        let g = su2();
        let grid = Grid::new(3, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = GaugeField::random(&grid, 3, 0.6, &mut rng);
        let force = magnetic_force(&g, &grid, &a).unwrap();
        let e0 = GaugeField::zeros(&grid, 3);
        let eps = 1e-5;
        for idx in [0usize, 7, 40, 77] {
            let mut ap = a.clone();
            ap.values_mut()[idx] += eps;
            let mut am = a.clone();
            am.values_mut()[idx] -= eps;
            let ep = energy(&g, &grid, &CauchyData { a: ap, e: e0.clone() }).unwrap();
            let em = energy(&g, &grid, &CauchyData { a: am, e: e0.clone() }).unwrap();
            let fd = -(ep - em) / (2.0 * eps) / grid.cell_volume();
            assert!((fd - force.values()[idx]).abs() < 1e-7, "{idx}: {fd} vs {}", force.values()[idx]);
        }
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let z = CauchyData::zeros(&grid, 3);
        let out = evolve(&g, &grid, &z, 0.1, 10).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn cfl_guard() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let z = CauchyData::zeros(&grid, 3);
        match evolve(&g, &grid, &z, 0.5, 1) {
            Err(LatticeError::CflViolated { bound, .. }) => assert!((bound - 0.5 / 3f64.sqrt()).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn evolution_is_time_reversible() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = CauchyData {
            a: GaugeField::random(&grid, 3, 0.5, &mut rng),
            e: GaugeField::random(&grid, 3, 0.5, &mut rng),
        };
        let fwd = evolve(&g, &grid, &c, 0.1, 40).unwrap();
        let back = evolve(&g, &grid, &fwd, -0.1, 40).unwrap();
        let err = back.a.sub(&c.a).values().iter().chain(back.e.sub(&c.e).values()).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn linear_wave_matches_discrete_fourier_solution() {
        // coupling 0: a_y = cos(kx) mode oscillates with ω = sin(kh)/h
        let g = su2().with_coupling(0.0);
        let n = 8;
        let grid = Grid::new(n, 1.0).unwrap();
        let k = 2.0 * std::f64::consts::PI / n as f64;
        let omega = k.sin();
        let mut c = CauchyData::zeros(&grid, 3);
        for s in 0..grid.sites() {
            let x = grid.coords(s)[0] as f64;
            c.a.at_mut(s, 1)[0] = 0.2 * (k * x).cos();
        }
        // at a quarter period the phase error enters linearly
        let quarter = 0.5 * std::f64::consts::PI / omega;
        let mut errs = Vec::new();
        for &steps in &[16usize, 32, 64] {
            let dt = quarter / steps as f64;
            let out = evolve(&g, &grid, &c, dt, steps).unwrap();
            let mut err = 0.0f64;
            for s in 0..grid.sites() {
                let x = grid.coords(s)[0] as f64;
                let exact = 0.2 * (k * x).cos() * (omega * quarter).cos();
                err = err.max((out.a.at(s, 1)[0] - exact).abs());
            }
            errs.push(err);
        }
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.4, "{errs:?}");
        assert!((errs[1] / errs[2] - 4.0).abs() < 0.2, "{errs:?}");

        // energy drift over one full period is O(dt²)
        let period = 4.0 * quarter;
        let e0 = energy(&g, &grid, &c).unwrap();
        let drift: Vec<f64> = [64usize, 128]
            .iter()
            .map(|&steps| {
                let out = evolve(&g, &grid, &c, period / steps as f64, steps).unwrap();
                (energy(&g, &grid, &out).unwrap() - e0).abs() / e0
            })
            .collect();
        assert!(drift[0] < 1e-6 && drift[1] <= drift[0] / 3.0, "{drift:?}");
    }

    #[test]
    fn dt_self_convergence_is_second_order() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let c = CauchyData {
            a: GaugeField::random(&grid, 3, 0.3, &mut rng),
            e: GaugeField::random(&grid, 3, 0.3, &mut rng),
        };
        let r = dt_convergence(&g, &grid, &c, 0.1, 20).unwrap();
        assert!((r.energy_order - 2.0).abs() < 0.3, "{r:?}");
        assert!((r.constraint_order - 2.0).abs() < 0.3, "{r:?}");
        assert!((r.field_order - 2.0).abs() < 0.3, "{r:?}");
    }

    #[test]
    fn constraint_residual_examples() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = CauchyData { a: GaugeField::random(&grid, 3, 1.0, &mut rng), e: GaugeField::zeros(&grid, 3) };
        assert_eq!(constraint_residual(&g, &grid, &c).unwrap(), 0.0);

        // e = D u, a = 0: residual = ‖Σ_k D_k D_k u‖ computed by hand
        let u = ScalarField::random(&grid, 3, 1.0, &mut rng);
        let mut e = GaugeField::zeros(&grid, 3);
        for s in 0..grid.sites() {
            for k in 0..3 {
                let (p, m) = (grid.shift(s, k, true), grid.shift(s, k, false));
                for i in 0..3 {
                    e.at_mut(s, k)[i] = (u.at(p)[i] - u.at(m)[i]) / 2.0;
                }
            }
        }
        let mut lap = ScalarField::zeros(&grid, 3);
        for s in 0..grid.sites() {
            for k in 0..3 {
                let (p, m) = (grid.shift(grid.shift(s, k, true), k, true), grid.shift(grid.shift(s, k, false), k, false));
                for i in 0..3 {
                    lap.at_mut(s)[i] += (u.at(p)[i] - 2.0 * u.at(s)[i] + u.at(m)[i]) / 4.0;
                }
            }
        }
        let c = CauchyData { a: GaugeField::zeros(&grid, 3), e };
        let r = constraint_residual(&g, &grid, &c).unwrap();
        assert!((r - lap.norm(&grid)).abs() < 1e-12 * r.max(1.0));
        assert!(r > 0.0);
    }

    #[test]
    fn gauge_transform_examples() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = GaugeField::random(&grid, 3, 0.7, &mut rng);
        let e = GaugeField::random(&grid, 3, 0.7, &mut rng);
        let id = GroupField::identity(&grid, 2);
        let same = gauge_transform(&g, &grid, &a, &id).unwrap();
        assert!(same.sub(&a).values().iter().all(|v| v.abs() < 1e-14));

        let gm = g.to_matrix(&[0.4, -1.1, 0.9]).unwrap().exp();
        let gc = GroupField::constant(&grid, gm);
        let zero = GaugeField::zeros(&grid, 3);
        let t0 = gauge_transform(&g, &grid, &zero, &gc).unwrap();
        assert!(t0.values().iter().all(|v| v.abs() < 1e-15));

        let ag = gauge_transform(&g, &grid, &a, &gc).unwrap();
        let eg = adjoint_action(&g, &grid, &e, &gc).unwrap();
        let e0 = energy(&g, &grid, &CauchyData { a: a.clone(), e: e.clone() }).unwrap();
        let e1 = energy(&g, &grid, &CauchyData { a: ag.clone(), e: eg }).unwrap();
        assert!((e0 - e1).abs() < 1e-12 * e0, "{e0} {e1}");

        // composition for constant gauge functions
        let gm2 = g.to_matrix(&[-0.2, 0.3, 0.8]).unwrap().exp();
        let gc2 = GroupField::constant(&grid, gm2);
        let lhs = gauge_transform(&g, &grid, &a, &gc.mul(&gc2)).unwrap();
        let rhs = gauge_transform(&g, &grid, &gauge_transform(&g, &grid, &a, &gc2).unwrap(), &gc).unwrap();
        assert!(lhs.sub(&rhs).values().iter().all(|v| v.abs() < 1e-13));

        let mut bad = GroupField::identity(&grid, 2);
        bad.values[3] *= Complex64::new(1.1, 0.0);
        assert!(matches!(gauge_transform(&g, &grid, &a, &bad), Err(LatticeError::NotUnitary { site: 3, .. })));
    }

    #[test]
    fn shape_errors() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let other = Grid::new(3, 1.0).unwrap();
        let a = GaugeField::zeros(&other, 3);
        assert!(matches!(curvature(&g, &grid, &a), Err(LatticeError::ShapeMismatch { .. })));
    }

    #[test]
    fn field_file_round_trip() {
        let g = su2();
        let grid = Grid::new(3, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = CauchyData {
            a: GaugeField::random(&grid, 3, 1.0, &mut rng),
            e: GaugeField::random(&grid, 3, 1.0, &mut rng),
        };
        let dir = std::env::temp_dir().join(format!("ymgap-field-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        save_cauchy(&dir, "data", &grid, &g, &c).unwrap();
        let bytes = fs::read(dir.join("data.bin")).unwrap();
        // first value is a at site 0, axis 0, Lie index 0
        assert_eq!(f64::from_le_bytes(bytes[..8].try_into().unwrap()), c.a.at(0, 0)[0]);
        let (header, grid2, c2) = load_cauchy(&dir, "data").unwrap();
        assert_eq!(header.dim_g, 3);
        assert_eq!(grid2, grid);
        assert_eq!(c2, c);
        fs::remove_dir_all(&dir).unwrap();
    }
}
