//! Chernoff-product approximation of coherent-state transition amplitudes.
//!
//! The iterated Gaussian integrals are realized as matrix products on the
//! truncated Fock space: each step is the anti-Wick quantization of the
//! symbol `exp(−iτH)`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FockError, PropagatorError};
use crate::fock::{
    coherent_tail, coherent_vector, quantize_antiwick_truncated, FockBasis, FockOperator, Ordering,
    PolynomialSymbol, DENSE_LIMIT,
};
use crate::lie::Complex64;

/// How the step symbol is quantized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepMethod {
    /// Taylor series of `exp(−iτH)` as a symbol, truncated at `max_order`;
    /// terms are dropped once their operator norm falls below `tol`.
    Taylor { max_order: usize, tol: f64 },
    /// Tensor Gauss-Hermite quadrature of the Toeplitz integral, at most two
    /// modes; `order` nodes per real dimension, checked against `2·order`.
    GaussHermite { order: usize, tol: f64 },
}

impl Default for StepMethod {
    fn default() -> Self {
        StepMethod::Taylor { max_order: 64, tol: 1e-15 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub t: f64,
    pub steps: usize,
    pub method: StepMethod,
}

impl PropagationConfig {
    pub fn new(t: f64, steps: usize, method: StepMethod) -> Result<Self, PropagatorError> {
        if steps == 0 {
            return Err(PropagatorError::BadConfig("need at least one step".into()));
        }
        if !t.is_finite() {
            return Err(PropagatorError::BadConfig(format!("time must be finite, got {t}")));
        }
        match method {
            StepMethod::Taylor { tol, .. } | StepMethod::GaussHermite { tol, .. } if !(tol > 0.0) => {
                return Err(PropagatorError::BadConfig(format!("tolerance must be positive, got {tol}")));
            }
            _ => {}
        }
        Ok(PropagationConfig { t, steps, method })
    }

    pub fn tau(&self) -> f64 {
        self.t / self.steps as f64
    }
}

fn frobenius(op: &FockOperator) -> f64 {
    op.entries().iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt()
}

fn beyond_cutoff(alpha: &[u16], beta: &[u16], n_max: usize) -> bool {
    let a: usize = alpha.iter().map(|&v| v as usize).sum();
    let b: usize = beta.iter().map(|&v| v as usize).sum();
    a > n_max || b > n_max
}

/// Taylor symbol `Σ_k (−iτ)^k H^k / k!` with monomials that vanish under the
/// cutoff pruned, plus the order reached.
pub fn exp_symbol(
    h: &PolynomialSymbol,
    tau: f64,
    basis: &FockBasis,
    max_order: usize,
    tol: f64,
) -> Result<(PolynomialSymbol, usize), PropagatorError> {
    let n_max = basis.n_max();
    let keep = |a: &[u16], b: &[u16]| !beyond_cutoff(a, b, n_max);
    let hp = h.filtered(keep);
    let mut sum = PolynomialSymbol::constant(h.modes(), Complex64::new(1.0, 0.0));
    let mut term = sum.clone();
    for k in 1..=max_order {
        term = term.mul(&hp).filtered(keep).scale(Complex64::new(0.0, -tau / k as f64));
        if term.is_empty() {
            return Ok((sum, k - 1));
        }
        sum.add_assign(&term);
        let size = frobenius(&quantize_antiwick_truncated(&term, basis)?);
        if size < tol {
            return Ok((sum, k));
        }
        if k == max_order {
            return Err(PropagatorError::TaylorRemainder { order: k, remainder: size, tol });
        }
    }
    Ok((sum, max_order))
}

/// Nodes and weights of `order`-point Gauss-Hermite quadrature for `e^{−x²}`.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(order, order, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|k| (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Toeplitz compression `⟨p| ∫ f(z) |z⟩⟨z| dμ |q⟩` of `f = exp(−iτH)` by
/// tensor quadrature over the real and imaginary parts of every mode.
fn toeplitz_quadrature(h: &PolynomialSymbol, tau: f64, basis: &FockBasis, order: usize) -> DMatrix<Complex64> {
    let m = basis.modes();
    let (x, w) = gauss_hermite(order);
    let dim = basis.dim();
    let fact: Vec<f64> = (0..=basis.n_max()).scan(1.0, |f, k| {
        let out = *f;
        *f *= (k + 1) as f64;
        Some(out)
    }).collect();
    let norm: Vec<f64> =
        basis.states().iter().map(|n| n.iter().map(|&k| fact[k as usize]).product::<f64>().sqrt()).collect();
    let mut out = DMatrix::zeros(dim, dim);
    let points = order.pow(2 * m as u32);
    let mut idx = vec![0usize; 2 * m];
    let mut z = vec![Complex64::new(0.0, 0.0); m];
    let mut zp = vec![Complex64::new(0.0, 0.0); dim];
    let mut zq = vec![Complex64::new(0.0, 0.0); dim];
    for _ in 0..points {
        let mut weight = std::f64::consts::PI.powi(-(m as i32));
        for k in 0..m {
            z[k] = Complex64::new(x[idx[2 * k]], x[idx[2 * k + 1]]);
            weight *= w[idx[2 * k]] * w[idx[2 * k + 1]];
        }
        let f = (Complex64::new(0.0, -tau) * h.eval_diag(&z)).exp() * weight;
        for (i, n) in basis.states().iter().enumerate() {
            let mono = n.iter().zip(&z).fold(Complex64::new(1.0, 0.0), |acc, (&k, zk)| acc * zk.powu(k as u32));
            zp[i] = mono / norm[i];
            zq[i] = mono.conj() / norm[i];
        }
        for q in 0..dim {
            let fq = f * zq[q];
            for p in 0..dim {
                out[(p, q)] += zp[p] * fq;
            }
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < order {
                break;
            }
            *slot = 0;
        }
    }
    out
}

fn dense_to_operator(m: &DMatrix<Complex64>, degree: usize, label: &str) -> FockOperator {
    let mut entries = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if m[(r, c)] != Complex64::new(0.0, 0.0) {
                entries.push((r, c, m[(r, c)]));
            }
        }
    }
    FockOperator::from_entries(m.nrows(), entries, label, Ordering::AntiWick, degree)
}

/// Anti-Wick quantization of `exp(−iτH)`.
///
/// The Taylor path truncates like every other quantization here: monomials
/// whose creators pass the cutoff vanish. The quadrature path is the exact
/// Toeplitz compression; both agree on low grades.
pub fn chernoff_step(
    h: &PolynomialSymbol,
    tau: f64,
    basis: &FockBasis,
    method: StepMethod,
) -> Result<FockOperator, PropagatorError> {
    if h.modes() != basis.modes() {
        return Err(FockError::DimensionMismatch { expected: basis.modes(), found: h.modes() }.into());
    }
    match method {
        StepMethod::Taylor { max_order, tol } => {
            let (sym, order) = exp_symbol(h, tau, basis, max_order, tol)?;
            let mut op = quantize_antiwick_truncated(&sym, basis)?;
            op.degree = h.degree();
            op.provenance = format!("chernoff step, taylor order {order}, tau {tau}");
            Ok(op)
        }
        StepMethod::GaussHermite { order, tol } => {
            if basis.modes() > 2 {
                return Err(PropagatorError::TooManyModesForQuadrature(basis.modes()));
            }
            if basis.dim() > DENSE_LIMIT {
                return Err(FockError::DenseLimit { dim: basis.dim(), limit: DENSE_LIMIT }.into());
            }
            let min_order = basis.n_max() + h.degree() / 2 + 1;
            if order < min_order {
                return Err(PropagatorError::QuadratureInsufficient { order, disagreement: f64::INFINITY });
            }
            let a = toeplitz_quadrature(h, tau, basis, order);
            let b = toeplitz_quadrature(h, tau, basis, 2 * order);
            let disagreement = (&a - &b).iter().fold(0.0f64, |m, v| m.max(v.norm()));
            if disagreement > tol {
                return Err(PropagatorError::QuadratureInsufficient { order, disagreement });
            }
            Ok(dense_to_operator(&b, h.degree(), &format!("chernoff step, gauss-hermite order {}, tau {tau}", 2 * order)))
        }
    }
}

/// `step^n · v`.
pub fn apply_power(step: &FockOperator, v: &DVector<Complex64>, n: usize) -> Result<DVector<Complex64>, PropagatorError> {
    let mut out = v.clone();
    for _ in 0..n {
        out = step.apply(&out)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Amplitude {
    pub re: f64,
    pub im: f64,
    /// Relative truncation tail of the two coherent states.
    pub coherent_tail: f64,
}

impl Amplitude {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

fn tails(z0: &[Complex64], zt: &[Complex64], basis: &FockBasis) -> f64 {
    coherent_tail(z0, basis.n_max()).max(coherent_tail(zt, basis.n_max()))
}

/// `⟨zt| step(t/N)^N |z0⟩`.
pub fn propagate(
    h: &PolynomialSymbol,
    z0: &[Complex64],
    zt: &[Complex64],
    cfg: &PropagationConfig,
    basis: &FockBasis,
) -> Result<Amplitude, PropagatorError> {
    for z in [z0, zt] {
        if z.len() != basis.modes() {
            return Err(FockError::DimensionMismatch { expected: basis.modes(), found: z.len() }.into());
        }
    }
    let step = chernoff_step(h, cfg.tau(), basis, cfg.method)?;
    let v = apply_power(&step, &coherent_vector(z0, basis), cfg.steps)?;
    let a = coherent_vector(zt, basis).dotc(&v);
    Ok(Amplitude { re: a.re, im: a.im, coherent_tail: tails(z0, zt, basis) })
}

/// `⟨zt| exp(−itH) |z0⟩` by Hermitian eigendecomposition.
pub fn exact_amplitude(
    h: &FockOperator,
    basis: &FockBasis,
    z0: &[Complex64],
    zt: &[Complex64],
    t: f64,
) -> Result<Complex64, PropagatorError> {
    if h.dim() != basis.dim() {
        return Err(FockError::DimensionMismatch { expected: basis.dim(), found: h.dim() }.into());
    }
    let dense = h.to_dense()?;
    let eig = dense.symmetric_eigen();
    let a = eig.eigenvectors.adjoint() * coherent_vector(z0, basis);
    let b = eig.eigenvectors.adjoint() * coherent_vector(zt, basis);
    Ok((0..basis.dim())
        .map(|k| b[k].conj() * Complex64::new(0.0, -t * eig.eigenvalues[k]).exp() * a[k])
        .sum())
}

/// Single free mode `H = ω z̄z`: amplitude after `steps` Chernoff factors of
/// the untruncated Toeplitz step, `ρ^N exp(z̄t z0 ρ^N)` with `ρ = 1/(1 + iωτ)`,
/// or the exact limit `e^{−iωt} exp(z̄t z0 e^{−iωt})` when `steps` is `None`.
pub fn free_mode_closed_form(omega: f64, z0: Complex64, zt: Complex64, t: f64, steps: Option<usize>) -> Complex64 {
    let factor = match steps {
        Some(n) => {
            let tau = t / n as f64;
            Complex64::new(1.0, omega * tau).inv().powu(n as u32)
        }
        None => Complex64::new(0.0, -omega * t).exp(),
    };
    factor * (zt.conj() * z0 * factor).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
    pub error: f64,
    /// `Σ_j [(z_{j+1} − z_j)̄ · z_j − iτ H(z_j)]` along the straight path.
    pub action_re: f64,
    pub action_im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub t: f64,
    pub reference_re: f64,
    pub reference_im: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `−log error` against `log N`.
    pub order: f64,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,amplitude_re,amplitude_im,error,action_re,action_im\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.steps, r.amplitude_re, r.amplitude_im, r.error, r.action_re, r.action_im
            );
        }
        s
    }

    /// `error(N) / error(2N)` for consecutive rows.
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[0].error / w[1].error).collect()
    }
}

/// Discretized action on the straight path from `z0` to `zt`.
pub fn discrete_action(h: &PolynomialSymbol, z0: &[Complex64], zt: &[Complex64], t: f64, steps: usize) -> Complex64 {
    let tau = t / steps as f64;
    let point = |j: usize| -> Vec<Complex64> {
        let f = j as f64 / steps as f64;
        z0.iter().zip(zt).map(|(a, b)| a + (b - a) * f).collect()
    };
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..steps {
        let (zj, zn) = (point(j), point(j + 1));
        let kin: Complex64 = zn.iter().zip(&zj).map(|(b, a)| (b - a).conj() * a).sum();
        sum += kin - Complex64::new(0.0, tau) * h.eval_diag(&zj);
    }
    sum
}

/// Chernoff amplitudes for every `N` in `steps` against `reference`.
pub fn convergence_study(
    h: &PolynomialSymbol,
    z0: &[Complex64],
    zt: &[Complex64],
    t: f64,
    steps: &[usize],
    method: StepMethod,
    basis: &FockBasis,
    reference: Complex64,
) -> Result<ConvergenceTable, PropagatorError> {
    let mut rows = Vec::with_capacity(steps.len());
    for &n in steps {
        let cfg = PropagationConfig::new(t, n, method)?;
        let a = propagate(h, z0, zt, &cfg, basis)?.value();
        let act = discrete_action(h, z0, zt, t, n);
        rows.push(ConvergenceRow {
            steps: n,
            amplitude_re: a.re,
            amplitude_im: a.im,
            error: (a - reference).norm(),
            action_re: act.re,
            action_im: act.im,
        });
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.error > 0.0).map(|r| ((r.steps as f64).ln(), r.error.ln())).collect();
    let order = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let var: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -cov / var
    } else {
        f64::NAN
    };
    Ok(ConvergenceTable { t, reference_re: reference.re, reference_im: reference.im, rows, order })
}

/// Largest singular value of the step on its safe block.
pub fn step_norm(step: &FockOperator, basis: &FockBasis) -> Result<f64, PropagatorError> {
    let k = basis.safe_dim(step.degree);
    let block = step.block(k)?;
    Ok(block.singular_values().iter().copied().fold(0.0, f64::max))
}
