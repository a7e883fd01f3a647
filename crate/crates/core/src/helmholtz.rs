//! Gauge-covariant vector calculus on the lattice and the gauge Helmholtz
//! projector `P_a = grad_a Δ_a⁻¹ div_a`.
//!
//! `div_a` is built as the exact negative adjoint of `grad_a`, so `−Δ_a` is
//! symmetric positive semidefinite and conjugate gradients apply. On a torus
//! `Δ_a` has a kernel (constants and, for even `n`, the period-two
//! alternating patterns of the central difference), which is detected and
//! deflated explicitly.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LatticeError, SolverError};
use crate::lattice::{check_gauge, check_scalar, dot, gauge_transform, CauchyData, GaugeField, Grid, GroupField, AXES};
use crate::lie::LieAlgebraSpec;

pub use crate::lattice::ScalarField;

/// Above this many unknowns the kernel is found by block inverse iteration
/// instead of a dense eigendecomposition.
const DENSE_KERNEL_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub deflate_tol: f64,
}

impl SolverConfig {
    pub fn new(tol: f64, max_iter: usize, deflate_tol: f64) -> Result<Self, SolverError> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(SolverError::BadConfig(format!("tol must lie in (0, 1), got {tol}")));
        }
        if max_iter == 0 {
            return Err(SolverError::BadConfig("max_iter must be positive".into()));
        }
        if !(deflate_tol >= 0.0) {
            return Err(SolverError::BadConfig(format!("deflate_tol must be >= 0, got {deflate_tol}")));
        }
        Ok(SolverConfig { tol, max_iter, deflate_tol })
    }

    /// `tol = 1e-8`, `deflate_tol = 1e-10`, `max_iter = 10 × unknowns`.
    pub fn default_for(grid: &Grid, dim_g: usize) -> Self {
        SolverConfig { tol: 1e-8, max_iter: 10 * grid.sites() * dim_g, deflate_tol: 1e-10 }
    }
}

/// `grad_a u = D_k u − [a_k, u]`.
pub fn gauge_grad(g: &LieAlgebraSpec, grid: &Grid, a: &GaugeField, u: &ScalarField) -> Result<GaugeField, LatticeError> {
    check_gauge(grid, g, a, "potential")?;
    check_scalar(grid, g, u, "scalar field")?;
    let mut out = GaugeField::zeros(grid, g.dim());
    grad_into(g, grid, a, u.values(), out.values_mut());
    Ok(out)
}

/// `div_a v = Σ_k D_k v_k − [a_k, v_k]`, the negative adjoint of [`gauge_grad`].
pub fn gauge_div(g: &LieAlgebraSpec, grid: &Grid, a: &GaugeField, v: &GaugeField) -> Result<ScalarField, LatticeError> {
    check_gauge(grid, g, a, "potential")?;
    check_gauge(grid, g, v, "vector field")?;
    let mut out = ScalarField::zeros(grid, g.dim());
    div_into(g, grid, a, v.values(), out.values_mut());
    Ok(out)
}

/// `Δ_a u = div_a grad_a u`.
pub fn gauge_laplacian(g: &LieAlgebraSpec, grid: &Grid, a: &GaugeField, u: &ScalarField) -> Result<ScalarField, LatticeError> {
    let gu = gauge_grad(g, grid, a, u)?;
    gauge_div(g, grid, a, &gu)
}

/// Ordinary central-difference divergence.
pub fn divergence(grid: &Grid, v: &GaugeField) -> ScalarField {
    let d = v.dim_g();
    let inv = 0.5 / grid.h();
    let mut out = ScalarField::zeros(grid, d);
    for s in 0..grid.sites() {
        let o = out.at_mut(s);
        for k in 0..AXES {
            let p = v.at(grid.shift(s, k, true), k);
            let m = v.at(grid.shift(s, k, false), k);
            for i in 0..d {
                o[i] += (p[i] - m[i]) * inv;
            }
        }
    }
    out
}

fn grad_into(g: &LieAlgebraSpec, grid: &Grid, a: &GaugeField, u: &[f64], out: &mut [f64]) {
    let d = g.dim();
    let inv = 0.5 / grid.h();
    out.fill(0.0);
    let mut br = vec![0.0; d];
    for s in 0..grid.sites() {
        let us = &u[s * d..(s + 1) * d];
        for k in 0..AXES {
            let p = grid.shift(s, k, true) * d;
            let m = grid.shift(s, k, false) * d;
            let o = (s * AXES + k) * d;
            br.fill(0.0);
            g.bracket_add(a.at(s, k), us, &mut br);
            for i in 0..d {
                out[o + i] = (u[p + i] - u[m + i]) * inv - br[i];
            }
        }
    }
}

fn div_into(g: &LieAlgebraSpec, grid: &Grid, a: &GaugeField, v: &[f64], out: &mut [f64]) {
    let d = g.dim();
    let inv = 0.5 / grid.h();
    out.fill(0.0);
    for s in 0..grid.sites() {
        let o = &mut out[s * d..(s + 1) * d];
        for k in 0..AXES {
            let p = (grid.shift(s, k, true) * AXES + k) * d;
            let m = (grid.shift(s, k, false) * AXES + k) * d;
            for i in 0..d {
                o[i] += (v[p + i] - v[m + i]) * inv;
            }
            let vs = (s * AXES + k) * d;
            g.bracket_transpose_add(a.at(s, k), &v[vs..vs + d], o);
        }
    }
}

/// `−Δ_a` together with its numerically detected kernel.
pub struct GaugeLaplacian<'a> {
    g: &'a LieAlgebraSpec,
    grid: &'a Grid,
    a: &'a GaugeField,
    cfg: SolverConfig,
    kernel: Vec<Vec<f64>>,
}

/// Result of a deflated solve.
#[derive(Debug, Clone)]
pub struct LaplaceSolution {
    pub u: ScalarField,
    pub iterations: usize,
    pub relative_residual: f64,
    /// `‖Q f‖ / ‖f‖` for the kernel projector `Q`.
    pub kernel_component: f64,
    pub kernel_dim: usize,
}

impl<'a> GaugeLaplacian<'a> {
    pub fn new(g: &'a LieAlgebraSpec, grid: &'a Grid, a: &'a GaugeField, cfg: SolverConfig) -> Result<Self, SolverError> {
        check_gauge(grid, g, a, "potential")?;
        let mut op = GaugeLaplacian { g, grid, a, cfg, kernel: Vec::new() };
        op.kernel = if op.unknowns() <= DENSE_KERNEL_LIMIT { op.dense_kernel() } else { op.iterative_kernel()? };
        Ok(op)
    }

    /// Same operator with the kernel always found iteratively.
    pub fn new_iterative(
        g: &'a LieAlgebraSpec,
        grid: &'a Grid,
        a: &'a GaugeField,
        cfg: SolverConfig,
    ) -> Result<Self, SolverError> {
        check_gauge(grid, g, a, "potential")?;
        let mut op = GaugeLaplacian { g, grid, a, cfg, kernel: Vec::new() };
        op.kernel = op.iterative_kernel()?;
        Ok(op)
    }

    pub fn unknowns(&self) -> usize {
        self.grid.sites() * self.g.dim()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.len()
    }

    /// Orthonormal (Euclidean) kernel basis.
    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    /// `out = −Δ_a x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; x.len() * AXES];
        grad_into(self.g, self.grid, self.a, x, &mut tmp);
        div_into(self.g, self.grid, self.a, &tmp, out);
        for o in out.iter_mut() {
            *o = -*o;
        }
    }

    fn dense_kernel(&self) -> Vec<Vec<f64>> {
        let n = self.unknowns();
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            m.column_mut(j).copy_from_slice(&col);
        }
        let m = (&m + m.transpose()) * 0.5;
        let eig = m.symmetric_eigen();
        let mut out = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() < self.cfg.deflate_tol {
                out.push(eig.eigenvectors.column(k).iter().copied().collect());
            }
        }
        out
    }

    fn iterative_kernel(&self) -> Result<Vec<Vec<f64>>, SolverError> {
        let n = self.unknowns();
        let shift = 1e-2;
        let lnorm = 4.0 * AXES as f64 / (self.grid.h() * self.grid.h());
        let target = 1e-12 * lnorm;
        let mut rng = ChaCha8Rng::seed_from_u64(0x6b65726e);
        let mut p = (self.g.dim() + 4).min(n);
        loop {
            let mut x: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            orthonormalize(&mut x);
            let mut theta = Vec::new();
            let mut prev_worst = f64::INFINITY;
            let mut prev_next = f64::NAN;
            // inner solves stay loose until a kernel candidate shows up
            let mut inner_tol = 1e-8;
            for it in 0..80 {
                let used_tol = inner_tol;
                let mut y: Vec<Vec<f64>> = x
                    .par_iter()
                    .map(|b| {
                        let shifted = |v: &[f64], out: &mut [f64]| {
                            self.apply(v, out);
                            for (o, vi) in out.iter_mut().zip(v) {
                                *o += shift * vi;
                            }
                        };
                        cg(shifted, b, 0.0, used_tol, 20 * n, &[]).x
                    })
                    .collect();
                orthonormalize(&mut y);
                let ly: Vec<Vec<f64>> = y
                    .par_iter()
                    .map(|v| {
                        let mut o = vec![0.0; n];
                        self.apply(v, &mut o);
                        o
                    })
                    .collect();
                let q = y.len();
                let h = DMatrix::from_fn(q, q, |i, j| 0.5 * (dot(&y[i], &ly[j]) + dot(&y[j], &ly[i])));
                let eig = h.symmetric_eigen();
                let mut order: Vec<usize> = (0..q).collect();
                order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
                let mut nx = Vec::with_capacity(q);
                let mut worst = 0.0f64;
                theta.clear();
                for &c in &order {
                    let mut v = vec![0.0; n];
                    let mut lv = vec![0.0; n];
                    for (r, (yr, lyr)) in y.iter().zip(&ly).enumerate() {
                        let w = eig.eigenvectors[(r, c)];
                        for ((vi, lvi), (a, b)) in v.iter_mut().zip(lv.iter_mut()).zip(yr.iter().zip(lyr)) {
                            *vi += w * a;
                            *lvi += w * b;
                        }
                    }
                    let th = eig.eigenvalues[c];
                    if th < self.cfg.deflate_tol {
                        let res: f64 = lv.iter().zip(&v).map(|(l, vi)| (l - th * vi).powi(2)).sum::<f64>().sqrt();
                        worst = worst.max(res);
                    }
                    theta.push(th);
                    nx.push(v);
                }
                x = nx;
                let k = theta.iter().filter(|&&t| t < self.cfg.deflate_tol).count();
                // the first non-kernel Ritz value must settle, otherwise a
                // kernel direction may still be emerging from the block
                let next = theta.get(k).copied().unwrap_or(f64::INFINITY);
                let settled = next.is_infinite() || (next - prev_next).abs() <= 1e-3 * next;
                let kernel_done = k == 0
                    || (used_tol < 1e-12 && (worst <= target || (worst < 1e-9 * lnorm && worst > 0.5 * prev_worst)));
                if it >= 2 && settled && kernel_done {
                    break;
                }
                if k > 0 {
                    inner_tol = 1e-14;
                }
                prev_next = next;
                prev_worst = if used_tol < 1e-12 { worst } else { f64::INFINITY };
            }
            let k = theta.iter().filter(|&&t| t < self.cfg.deflate_tol).count();
            if k == p && p < n {
                p = (2 * p).min(n);
                continue;
            }
            x.truncate(k);
            orthonormalize(&mut x);
            return Ok(x);
        }
    }

    fn kernel_project_out(&self, v: &mut [f64]) -> f64 {
        let mut removed = 0.0;
        for q in &self.kernel {
            let c = dot(q, v);
            removed += c * c;
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
        removed.sqrt()
    }

    /// Solves `Δ_a u = f` on the orthogonal complement of the kernel.
    pub fn solve(&self, f: &ScalarField) -> Result<LaplaceSolution, SolverError> {
        self.solve_scaled(f, 0.0)
    }

    /// As [`solve`](Self::solve), with tolerances taken relative to
    /// `max(‖f‖, scale)` so that a right-hand side which is itself rounding
    /// noise is not mistaken for a kernel component.
    fn solve_scaled(&self, f: &ScalarField, scale: f64) -> Result<LaplaceSolution, SolverError> {
        check_scalar(self.grid, self.g, f, "right-hand side")?;
        let n = self.unknowns();
        let fnorm = dot(f.values(), f.values()).sqrt();
        if fnorm == 0.0 {
            return Ok(LaplaceSolution {
                u: ScalarField::zeros(self.grid, self.g.dim()),
                iterations: 0,
                relative_residual: 0.0,
                kernel_component: 0.0,
                kernel_dim: self.kernel.len(),
            });
        }
        let mut rhs: Vec<f64> = f.values().iter().map(|v| -v).collect();
        let reference = fnorm.max(scale);
        let component = self.kernel_project_out(&mut rhs) / reference;
        if component > self.cfg.tol {
            return Err(SolverError::RankDeficient {
                component,
                tol: self.cfg.tol,
                kernel_dim: self.kernel.len(),
            });
        }
        let r = cg(|v, out| self.apply(v, out), &rhs, reference, self.cfg.tol, self.cfg.max_iter, &self.kernel);
        if !r.converged {
            return Err(SolverError::NotConverged { iterations: r.iterations, residual: r.relative_residual });
        }
        debug_assert_eq!(r.x.len(), n);
        Ok(LaplaceSolution {
            u: ScalarField::from_values(self.grid, self.g.dim(), r.x)?,
            iterations: r.iterations,
            relative_residual: r.relative_residual,
            kernel_component: component,
            kernel_dim: self.kernel.len(),
        })
    }

    /// `(a, e − P_a e)` for the background this operator was built on.
    pub fn transversal(&self, e: &GaugeField) -> Result<CauchyData, SolverError> {
        let pe = self.project(e)?;
        Ok(CauchyData { a: self.a.clone(), e: e.sub(&pe) })
    }

    /// `P_a v = grad_a Δ_a⁻¹ div_a v`.
    pub fn project(&self, v: &GaugeField) -> Result<GaugeField, SolverError> {
        let dv = gauge_div(self.g, self.grid, self.a, v)?;
        let scale = dot(v.values(), v.values()).sqrt() / self.grid.h();
        let u = self.solve_scaled(&dv, scale)?.u;
        Ok(gauge_grad(self.g, self.grid, self.a, &u)?)
    }
}

struct CgResult {
    x: Vec<f64>,
    iterations: usize,
    relative_residual: f64,
    converged: bool,
}

fn project_out(basis: &[Vec<f64>], v: &mut [f64]) {
    for q in basis {
        let c = dot(q, v);
        for (vi, qi) in v.iter_mut().zip(q) {
            *vi -= c * qi;
        }
    }
}

/// Conjugate gradients for an SPD operator, kept orthogonal to `deflate`.
fn cg<F>(apply: F, b: &[f64], scale: f64, tol: f64, max_iter: usize, deflate: &[Vec<f64>]) -> CgResult
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = dot(b, b).sqrt().max(scale);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return CgResult { x, iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut r = b.to_vec();
    project_out(deflate, &mut r);
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut it = 0;
    while it < max_iter {
        if rr.sqrt() <= tol * bnorm {
            break;
        }
        apply(&p, &mut ap);
        project_out(deflate, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        it += 1;
    }
    // true residual, guarding against drift of the recurrence
    apply(&x, &mut ap);
    let mut res: Vec<f64> = b.iter().zip(&ap).map(|(bi, a)| bi - a).collect();
    project_out(deflate, &mut res);
    let rel = dot(&res, &res).sqrt() / bnorm;
    CgResult { x, iterations: it, relative_residual: rel, converged: rel <= 2.0 * tol }
}

fn orthonormalize(vs: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs.drain(..) {
        let mut v = v;
        let n0 = dot(&v, &v).sqrt();
        for _ in 0..2 {
            project_out(&out, &mut v);
        }
        let nv = dot(&v, &v).sqrt();
        if nv > 1e-10 * n0 && nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
            out.push(v);
        }
    }
    *vs = out;
}

pub fn solve_laplacian(
    g: &LieAlgebraSpec,
    grid: &Grid,
    a: &GaugeField,
    f: &ScalarField,
    cfg: SolverConfig,
) -> Result<ScalarField, SolverError> {
    Ok(GaugeLaplacian::new(g, grid, a, cfg)?.solve(f)?.u)
}

pub fn helmholtz_project(
    g: &LieAlgebraSpec,
    grid: &Grid,
    a: &GaugeField,
    v: &GaugeField,
    cfg: SolverConfig,
) -> Result<GaugeField, SolverError> {
    GaugeLaplacian::new(g, grid, a, cfg)?.project(v)
}

/// `(a, e − P_a e)`.
pub fn transversal(g: &LieAlgebraSpec, grid: &Grid, c: &CauchyData, cfg: SolverConfig) -> Result<CauchyData, SolverError> {
    GaugeLaplacian::new(g, grid, &c.a, cfg)?.transversal(&c.e)
}

/// Outcome of [`minimize_orbit`].
#[derive(Debug, Clone)]
pub struct OrbitResult {
    pub a: GaugeField,
    pub converged: bool,
    pub iterations: usize,
    /// Lattice norm of the ordinary divergence at the returned iterate.
    pub grad_norm: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
}

/// Steepest descent of `‖a^g‖²` over lattice gauge functions, with Armijo
/// backtracking. The gauge is accumulated incrementally, `b ← b^{exp(−α div b)}`.
pub fn minimize_orbit(g: &LieAlgebraSpec, grid: &Grid, a: &GaugeField, cfg: SolverConfig) -> Result<OrbitResult, SolverError> {
    check_gauge(grid, g, a, "potential")?;
    let initial_norm = a.norm(grid);
    let mut b = a.clone();
    let mut f = b.inner(&b, grid);
    let mut alpha = grid.h() * grid.h();
    let mut div = divergence(grid, &b);
    let mut gnorm = div.norm(grid);
    let mut it = 0;
    while it < cfg.max_iter && gnorm >= cfg.tol {
        // directional derivative of ‖b‖² along u = −div b is −2‖div b‖²
        let slope = 2.0 * gnorm * gnorm;
        let noise = 64.0 * f64::EPSILON * f;
        let mut accepted = None;
        let mut step = alpha;
        for _ in 0..60 {
            let mut u = div.clone();
            u.values_mut().iter_mut().for_each(|v| *v *= -step);
            let gf = GroupField::exp_of(g, grid, &u)?;
            let nb = gauge_transform(g, grid, &b, &gf)?;
            let nf = nb.inner(&nb, grid);
            let ndiv = divergence(grid, &nb);
            let ngnorm = ndiv.norm(grid);
            let armijo = nf <= f - 1e-4 * step * slope;
            // near the minimum the predicted decrease drops below rounding in
            // ‖b‖²; fall back to requiring a smaller gradient
            let flat = 1e-4 * step * slope < noise && nf <= f + noise && ngnorm < gnorm;
            if armijo || flat {
                accepted = Some((nb, nf, ndiv, ngnorm));
                break;
            }
            step *= 0.5;
        }
        let Some((nb, nf, ndiv, ngnorm)) = accepted else { break };
        b = nb;
        f = nf;
        div = ndiv;
        gnorm = ngnorm;
        alpha = (2.0 * step).min(4.0 * grid.h() * grid.h());
        it += 1;
    }
    Ok(OrbitResult {
        final_norm: b.norm(grid),
        a: b,
        converged: gnorm < cfg.tol,
        iterations: it,
        grad_norm: gnorm,
        initial_norm,
    })
}

/// Residuals of the projector identities on random data.
#[derive(Debug, Clone, Serialize)]
pub struct HelmholtzReport {
    pub kernel_dim: usize,
    pub adjointness: f64,
    pub laplacian_symmetry: f64,
    pub idempotence: f64,
    pub gradient_fixed: f64,
    pub divergence_free_complement: f64,
    pub orthogonality: f64,
    pub transversal_constraint: f64,
}

impl HelmholtzReport {
    /// Every identity within `10 · tol`.
    pub fn passed(&self, tol: f64) -> bool {
        let c = 10.0 * tol;
        self.adjointness <= 1e-12
            && self.laplacian_symmetry <= 1e-12
            && [self.idempotence, self.gradient_fixed, self.divergence_free_complement, self.orthogonality, self.transversal_constraint]
                .iter()
                .all(|&r| r <= c)
    }
}

/// Runs the identity suite on random `a`, `u`, `v`, `w` of the given amplitude.
pub fn identity_suite<R: Rng>(
    g: &LieAlgebraSpec,
    grid: &Grid,
    amplitude: f64,
    cfg: SolverConfig,
    rng: &mut R,
) -> Result<HelmholtzReport, SolverError> {
    let d = g.dim();
    let a = GaugeField::random(grid, d, amplitude, rng);
    let u = ScalarField::random(grid, d, 1.0, rng);
    let u2 = ScalarField::random(grid, d, 1.0, rng);
    let v = GaugeField::random(grid, d, 1.0, rng);
    let w = GaugeField::random(grid, d, 1.0, rng);

    let gu = gauge_grad(g, grid, &a, &u)?;
    let dv = gauge_div(g, grid, &a, &v)?;
    let adjointness = (-gu.inner(&v, grid) - u.inner(&dv, grid)).abs() / (gu.norm(grid) * v.norm(grid));

    let lu = gauge_laplacian(g, grid, &a, &u)?;
    let lu2 = gauge_laplacian(g, grid, &a, &u2)?;
    let laplacian_symmetry = (lu.inner(&u2, grid) - u.inner(&lu2, grid)).abs() / (lu.norm(grid) * u2.norm(grid));

    let lap = GaugeLaplacian::new(g, grid, &a, cfg)?;
    let pv = lap.project(&v)?;
    let ppv = lap.project(&pv)?;
    let vn = v.norm(grid);
    let idempotence = ppv.sub(&pv).norm(grid) / vn;
    let pgu = lap.project(&gu)?;
    let gradient_fixed = pgu.sub(&gu).norm(grid) / gu.norm(grid);
    let comp = v.sub(&pv);
    let divergence_free_complement = gauge_div(g, grid, &a, &comp)?.norm(grid) / dv.norm(grid).max(f64::MIN_POSITIVE);
    let pw = lap.project(&w)?;
    let orthogonality = pv.inner(&w.sub(&pw), grid).abs() / (vn * w.norm(grid));
    let t = lap.transversal(&v)?;
    let transversal_constraint = crate::lattice::constraint_residual(g, grid, &t)? / dv.norm(grid).max(f64::MIN_POSITIVE);

    Ok(HelmholtzReport {
        kernel_dim: lap.kernel_dim(),
        adjointness,
        laplacian_symmetry,
        idempotence,
        gradient_fixed,
        divergence_free_complement,
        orthogonality,
        transversal_constraint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::build_algebra;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn su2() -> LieAlgebraSpec {
        build_algebra("su", 2).unwrap()
    }

    fn plane(grid: &Grid, k: [usize; 3], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = grid.n() as f64;
        (0..grid.sites())
            .map(|s| {
                let c = grid.coords(s);
                let phase: f64 = (0..3).map(|j| 2.0 * PI * k[j] as f64 * c[j] as f64 / n).sum();
                f(phase)
            })
            .collect()
    }

    #[test]
    fn grad_examples() {
        let g = su2();
        let grid = Grid::new(6, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = GaugeField::random(&grid, 3, 1.0, &mut rng);
        let zero = ScalarField::zeros(&grid, 3);
        assert!(gauge_grad(&g, &grid, &a, &zero).unwrap().values().iter().all(|&v| v == 0.0));

        // plane wave at a = 0: D_x cos(kx) = −(sin(kh)/h) sin(kx)
        let a0 = GaugeField::zeros(&grid, 3);
        let c = plane(&grid, [1, 0, 0], f64::cos);
        let s = plane(&grid, [1, 0, 0], f64::sin);
        let mut u = ScalarField::zeros(&grid, 3);
        for site in 0..grid.sites() {
            u.at_mut(site)[1] = c[site];
        }
        let gu = gauge_grad(&g, &grid, &a0, &u).unwrap();
        let sym = (2.0 * PI / 6.0).sin() / grid.h();
        for site in 0..grid.sites() {
            assert!((gu.at(site, 0)[1] + sym * s[site]).abs() < 1e-12);
            assert!(gu.at(site, 1)[1].abs() < 1e-12);
        }

        // constant u: −[a_k, u]
        let uc = [0.3, -0.4, 1.2];
        let mut u = ScalarField::zeros(&grid, 3);
        for site in 0..grid.sites() {
            u.at_mut(site).copy_from_slice(&uc);
        }
        let gu = gauge_grad(&g, &grid, &a, &u).unwrap();
        for site in [0usize, 17, 100] {
            for k in 0..3 {
                let br = g.bracket(a.at(site, k), &uc);
                for i in 0..3 {
                    assert!((gu.at(site, k)[i] + br[i]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn div_at_zero_is_central_divergence() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = GaugeField::random(&grid, 3, 1.0, &mut rng);
        let a0 = GaugeField::zeros(&grid, 3);
        let d1 = gauge_div(&g, &grid, &a0, &v).unwrap();
        let d2 = divergence(&grid, &v);
        assert_eq!(d1, d2);
        assert!(gauge_div(&g, &grid, &a0, &GaugeField::zeros(&grid, 3)).unwrap().values().iter().all(|&x| x == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn adjointness_and_semidefiniteness(seed in any::<u64>(), amp in 0.0f64..2.0) {
            let g = su2();
            let grid = Grid::new(3, 0.7).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = GaugeField::random(&grid, 3, amp, &mut rng);
            let u = ScalarField::random(&grid, 3, 1.0, &mut rng);
            let v = GaugeField::random(&grid, 3, 1.0, &mut rng);
            let gu = gauge_grad(&g, &grid, &a, &u).unwrap();
            let dv = gauge_div(&g, &grid, &a, &v).unwrap();
            let lhs = -gu.inner(&v, &grid);
            let rhs = u.inner(&dv, &grid);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * gu.norm(&grid) * v.norm(&grid));
            let lu = gauge_laplacian(&g, &grid, &a, &u).unwrap();
            let q = u.inner(&lu, &grid);
            let gn = gu.norm(&grid);
            prop_assert!(q <= 1e-12 * gn * gn);
            prop_assert!((q + gn * gn).abs() <= 1e-12 * gn * gn);
        }
    }

    #[test]
    fn kernel_at_zero_background() {
        let g = su2();
        let cfg = |grid: &Grid| SolverConfig::default_for(grid, 3);
        let even = Grid::new(4, 1.0).unwrap();
        let a = GaugeField::zeros(&even, 3);
        assert_eq!(GaugeLaplacian::new(&g, &even, &a, cfg(&even)).unwrap().kernel_dim(), 24);
        let odd = Grid::new(5, 1.0).unwrap();
        let a = GaugeField::zeros(&odd, 3);
        assert_eq!(GaugeLaplacian::new(&g, &odd, &a, cfg(&odd)).unwrap().kernel_dim(), 3);
    }

    #[test]
    fn iterative_kernel_agrees_with_dense() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let cfg = SolverConfig::default_for(&grid, 3);
        for amp in [0.0, 0.4] {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let a = GaugeField::random(&grid, 3, amp, &mut rng);
            let dense = GaugeLaplacian::new(&g, &grid, &a, cfg).unwrap();
            let iter = GaugeLaplacian::new_iterative(&g, &grid, &a, cfg).unwrap();
            assert_eq!(dense.kernel_dim(), iter.kernel_dim(), "amp {amp}");
            // same subspace: every iterative vector lies in the dense span
            for q in iter.kernel() {
                let mut v = q.clone();
                project_out(dense.kernel(), &mut v);
                assert!(dot(&v, &v).sqrt() < 1e-8);
            }
        }
    }

    #[test]
    fn solve_examples() {
        let g = su2();
        let grid = Grid::new(6, 1.0).unwrap();
        let cfg = SolverConfig::default_for(&grid, 3);
        let a0 = GaugeField::zeros(&grid, 3);
        let lap = GaugeLaplacian::new(&g, &grid, &a0, cfg).unwrap();
        let zero = lap.solve(&ScalarField::zeros(&grid, 3)).unwrap();
        assert!(zero.u.values().iter().all(|&v| v == 0.0));

        // single Fourier mode: Δ symbol −Σ sin²(k_j h)/h²
        let k = [1usize, 2, 0];
        let wave = plane(&grid, k, f64::cos);
        let mut f = ScalarField::zeros(&grid, 3);
        for s in 0..grid.sites() {
            f.at_mut(s)[2] = wave[s];
        }
        let lam: f64 = -k.iter().map(|&kj| (2.0 * PI * kj as f64 / 6.0).sin().powi(2)).sum::<f64>();
        let sol = lap.solve(&f).unwrap();
        for s in 0..grid.sites() {
            assert!((sol.u.at(s)[2] - wave[s] / lam).abs() < 1e-7);
        }

        // constant f lies in the kernel
        let mut c = ScalarField::zeros(&grid, 3);
        c.values_mut().iter_mut().for_each(|v| *v = 1.0);
        assert!(matches!(lap.solve(&c), Err(SolverError::RankDeficient { .. })));
    }

    #[test]
    fn solve_round_trip_random_background() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let cfg = SolverConfig::default_for(&grid, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = GaugeField::random(&grid, 3, 0.8, &mut rng);
        let lap = GaugeLaplacian::new(&g, &grid, &a, cfg).unwrap();
        let mut w = ScalarField::random(&grid, 3, 1.0, &mut rng);
        let mut wv = w.values().to_vec();
        lap.kernel_project_out(&mut wv);
        w = ScalarField::from_values(&grid, 3, wv).unwrap();
        let f = gauge_laplacian(&g, &grid, &a, &w).unwrap();
        let sol = lap.solve(&f).unwrap();
        let err = sol.u.values().iter().zip(w.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-6 * dot(w.values(), w.values()).sqrt(), "{err}");
    }

    #[test]
    fn projector_fourier_examples() {
        let g = su2();
        let grid = Grid::new(6, 1.0).unwrap();
        let cfg = SolverConfig::default_for(&grid, 3);
        let a0 = GaugeField::zeros(&grid, 3);
        let lap = GaugeLaplacian::new(&g, &grid, &a0, cfg).unwrap();
        let k = [1usize, 1, 0];
        let wave = plane(&grid, k, f64::cos);
        let s: Vec<f64> = k.iter().map(|&kj| (2.0 * PI * kj as f64 / 6.0).sin()).collect();
        let build = |dir: [f64; 3]| {
            let mut v = GaugeField::zeros(&grid, 3);
            for site in 0..grid.sites() {
                for j in 0..3 {
                    v.at_mut(site, j)[0] = dir[j] * wave[site];
                }
            }
            v
        };
        let trans = build([s[1], -s[0], 0.0]);
        let p = lap.project(&trans).unwrap();
        assert!(p.norm(&grid) < 1e-8 * trans.norm(&grid));
        let long = build([s[0], s[1], s[2]]);
        let p = lap.project(&long).unwrap();
        assert!(p.sub(&long).norm(&grid) < 1e-7 * long.norm(&grid));
        // general direction: (s·v̂/|s|²) s
        let dir = [0.3, 0.9, -0.5];
        let v = build(dir);
        let sv: f64 = (0..3).map(|j| s[j] * dir[j]).sum();
        let ss: f64 = s.iter().map(|x| x * x).sum();
        let want = build([sv / ss * s[0], sv / ss * s[1], sv / ss * s[2]]);
        assert!(lap.project(&v).unwrap().sub(&want).norm(&grid) < 1e-7 * v.norm(&grid));
    }

    #[test]
    fn projector_identities_random_background() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let cfg = SolverConfig::default_for(&grid, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = identity_suite(&g, &grid, 0.6, cfg, &mut rng).unwrap();
        assert!(r.passed(cfg.tol), "{r:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let r = identity_suite(&g, &grid, 0.0, cfg, &mut rng).unwrap();
        assert!(r.passed(cfg.tol), "{r:?}");
        assert_eq!(r.kernel_dim, 24);
    }

    #[test]
    fn transversal_examples() {
        let g = su2();
        let grid = Grid::new(4, 1.0).unwrap();
        let cfg = SolverConfig::default_for(&grid, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = GaugeField::random(&grid, 3, 0.5, &mut rng);
        let pure = CauchyData { a: a.clone(), e: GaugeField::zeros(&grid, 3) };
        assert_eq!(transversal(&g, &grid, &pure, cfg).unwrap(), pure);

        let u = ScalarField::random(&grid, 3, 1.0, &mut rng);
        let gu = gauge_grad(&g, &grid, &a, &u).unwrap();
        let t = transversal(&g, &grid, &CauchyData { a: a.clone(), e: gu.clone() }, cfg).unwrap();
        assert!(t.e.norm(&grid) < 1e-7 * gu.norm(&grid));

        let e = GaugeField::random(&grid, 3, 1.0, &mut rng);
        let t1 = transversal(&g, &grid, &CauchyData { a: a.clone(), e }, cfg).unwrap();
        let t2 = transversal(&g, &grid, &t1, cfg).unwrap();
        assert!(t2.e.sub(&t1.e).norm(&grid) <= 2e-7 * t1.e.norm(&grid));
    }

    fn smooth_gauge(g: &LieAlgebraSpec, grid: &Grid, amp: f64) -> GroupField {
        let n = grid.n() as f64;
        let mut u = ScalarField::zeros(grid, g.dim());
        for s in 0..grid.sites() {
            let c = grid.coords(s);
            let x = 2.0 * PI * c[0] as f64 / n;
            let y = 2.0 * PI * c[1] as f64 / n;
            let z = 2.0 * PI * c[2] as f64 / n;
            u.at_mut(s).copy_from_slice(&[amp * x.sin(), amp * (y + z).cos(), amp * (x - z).sin()]);
        }
        GroupField::exp_of(g, grid, &u).unwrap()
    }

    #[test]
    fn minimize_orbit_examples() {
        let g = su2();
        let grid = Grid::new(6, 1.0).unwrap();
        let cfg = SolverConfig::default_for(&grid, 3);
        let zero = GaugeField::zeros(&grid, 3);
        let r = minimize_orbit(&g, &grid, &zero, cfg).unwrap();
        assert!(r.converged && r.iterations == 0 && r.a == zero);

        // pure gauge: the discrete orbit does not pass exactly through zero,
        // but descent removes nearly all of the norm
        let gf = smooth_gauge(&g, &grid, 0.4);
        let a = gauge_transform(&g, &grid, &zero, &gf).unwrap();
        let r = minimize_orbit(&g, &grid, &a, cfg).unwrap();
        assert!(r.final_norm <= 0.05 * r.initial_norm, "{} {}", r.final_norm, r.initial_norm);
        assert!(r.grad_norm < 10.0 * cfg.tol, "{}", r.grad_norm);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = GaugeField::random(&grid, 3, 0.3, &mut rng);
        let r = minimize_orbit(&g, &grid, &a, cfg).unwrap();
        assert!(r.final_norm <= r.initial_norm);
        assert!(r.converged && r.grad_norm < cfg.tol);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(1.5, 10, 1e-10).is_err());
        assert!(SolverConfig::new(1e-8, 0, 1e-10).is_err());
        assert!(SolverConfig::new(1e-8, 10, -1.0).is_err());
        assert!(SolverConfig::new(1e-8, 10, 0.0).is_ok());
    }
}
