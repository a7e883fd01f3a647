use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::basis::FockBasis;
use super::operator::{ladder, quantize_antiwick, LadderKind};
use super::symbol::PolynomialSymbol;
use crate::error::FockError;
use crate::lie::Complex64;

/// Components `z^α / √(α!)` over the truncated basis.
pub fn coherent_vector(z: &[Complex64], basis: &FockBasis) -> DVector<Complex64> {
    assert_eq!(z.len(), basis.modes(), "coherent vector needs one amplitude per mode");
    DVector::from_iterator(
        basis.dim(),
        basis.states().iter().map(|n| {
            n.iter().zip(z).fold(Complex64::new(1.0, 0.0), |acc, (&k, zm)| {
                let fact: f64 = (1..=k).map(|j| j as f64).product();
                acc * zm.powu(k as u32) / fact.sqrt()
            })
        }),
    )
}

/// `Σ_{j > n} x^j / j!` for `x ≥ 0`, summed until negligible.
pub fn exp_tail(x: f64, n: usize) -> f64 {
    let mut term: f64 = (1..=n + 1).fold(1.0, |t, j| t * x / j as f64);
    let mut sum = 0.0;
    let mut j = n + 1;
    while term > 1e-300 && term > sum * 1e-17 {
        sum += term;
        j += 1;
        term *= x / j as f64;
    }
    sum
}

/// Truncation tail of `‖coherent(z)‖² ≈ e^{|z|²}` at cutoff `n`, relative to `e^{|z|²}`.
pub fn coherent_tail(z: &[Complex64], n: usize) -> f64 {
    let r2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
    exp_tail(r2, n) / r2.exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelSample {
    pub z_re: Vec<f64>,
    pub z_im: Vec<f64>,
    pub lhs_re: f64,
    pub lhs_im: f64,
    pub rhs_re: f64,
    pub rhs_im: f64,
    /// `|lhs − rhs| / e^{|z|²}`.
    pub deviation: f64,
    pub tail: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    /// Heat parameter used to correct the comparison symbol, if any.
    pub shift: Option<f64>,
    pub max_deviation: f64,
    pub samples: Vec<KernelSample>,
}

/// Compares `⟨z| Â |z⟩` for the anti-Wick quantization `Â` of `sym` against
/// `Θ(z̄, z) e^{z̄z}`, or against the heat-transformed symbol when `shift` is given.
///
/// Samples whose tail estimate exceeds `tail_tol` are rejected.
pub fn kernel_check(
    sym: &PolynomialSymbol,
    basis: &FockBasis,
    samples: &[Vec<Complex64>],
    shift: Option<f64>,
    tail_tol: f64,
) -> Result<KernelReport, FockError> {
    let op = quantize_antiwick(sym, basis)?;
    let cmp = match shift {
        Some(s) => sym.heat_transform(s),
        None => sym.clone(),
    };
    // the operator loses its top `degree` grades to truncation
    let usable = basis.n_max() - sym.degree();
    let mut out = Vec::with_capacity(samples.len());
    let mut max_dev = 0.0f64;
    for z in samples {
        if z.len() != basis.modes() {
            return Err(FockError::DimensionMismatch { expected: basis.modes(), found: z.len() });
        }
        let r2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let tail = coherent_tail(z, usable) * (1.0 + r2).powi(sym.degree() as i32);
        if tail > tail_tol {
            return Err(FockError::TailRegion { tail, tol: tail_tol });
        }
        let v = coherent_vector(z, basis);
        let lhs = op.sandwich(&v, &v)?;
        let rhs = cmp.eval_diag(z) * r2.exp();
        let deviation = (lhs - rhs).norm() / r2.exp();
        max_dev = max_dev.max(deviation);
        out.push(KernelSample {
            z_re: z.iter().map(|v| v.re).collect(),
            z_im: z.iter().map(|v| v.im).collect(),
            lhs_re: lhs.re,
            lhs_im: lhs.im,
            rhs_re: rhs.re,
            rhs_im: rhs.im,
            deviation,
            tail,
        });
    }
    Ok(KernelReport { shift, max_deviation: max_dev, samples: out })
}

/// Exponential of a nilpotent matrix by its finite series.
fn nilpotent_exp(x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = x.nrows();
    let mut out = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=n {
        term = &term * x / Complex64::new(k as f64, 0.0);
        if term.iter().all(|z| z.norm() == 0.0) {
            break;
        }
        out += &term;
    }
    out
}

/// Residual of `e^A e^B = e^{z̄z} e^B e^A`, `A = Σ z̄_m a_m`, `B = Σ z_m a†_m`,
/// measured as the largest entry on states with `Σ n ≤ block_grade`.
pub fn weyl_relation_check(z: &[Complex64], basis: &FockBasis, block_grade: usize) -> Result<f64, FockError> {
    if z.len() != basis.modes() {
        return Err(FockError::DimensionMismatch { expected: basis.modes(), found: z.len() });
    }
    let dim = basis.dim();
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DMatrix::zeros(dim, dim);
    for (m, zm) in z.iter().enumerate() {
        a += ladder(m, LadderKind::Annihilate, basis)?.to_dense()? * zm.conj();
        b += ladder(m, LadderKind::Create, basis)?.to_dense()? * *zm;
    }
    let ea = nilpotent_exp(&a);
    let eb = nilpotent_exp(&b);
    let r2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
    let diff = &ea * &eb - (&eb * &ea) * Complex64::new(r2.exp(), 0.0);
    let k = basis.block_dim(block_grade);
    Ok(diff.view((0, 0), (k, k)).iter().fold(0.0f64, |m, v| m.max(v.norm())))
}
