use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::basis::FockBasis;
use super::symbol::{total, PolynomialSymbol};
use crate::error::FockError;
use crate::lie::Complex64;

/// Dense conversion is refused above this dimension.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    /// Creators left of annihilators.
    Normal,
    /// Annihilators left of creators.
    AntiWick,
}

/// Sparse complex matrix on a truncated Fock basis, in coordinate form
/// sorted by `(row, col)`.
#[derive(Debug, Clone)]
pub struct FockOperator {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
    pub provenance: String,
    pub ordering: Ordering,
    /// Total degree of the generating symbol; the operator is truncation-exact
    /// on states with `Σ n ≤ n_max − degree`.
    pub degree: usize,
}

#[derive(Serialize)]
struct DumpHeader<'a> {
    format: &'static str,
    modes: usize,
    n_max: usize,
    dim: usize,
    nonzeros: usize,
    provenance: &'a str,
    ordering: Ordering,
    degree: usize,
    /// Occupation vector of each row/column index.
    basis: &'a [Vec<u16>],
}

impl FockOperator {
    pub fn from_entries(
        dim: usize,
        mut entries: Vec<(usize, usize, Complex64)>,
        provenance: impl Into<String>,
        ordering: Ordering,
        degree: usize,
    ) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        // merge duplicates
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != Complex64::new(0.0, 0.0));
        FockOperator { dim, entries: merged, provenance: provenance.into(), ordering, degree }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>, FockError> {
        if self.dim > DENSE_LIMIT {
            return Err(FockError::DenseLimit { dim: self.dim, limit: DENSE_LIMIT });
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        Ok(m)
    }

    /// Leading `k × k` block (the compression onto the first `k` basis states).
    pub fn block(&self, k: usize) -> Result<DMatrix<Complex64>, FockError> {
        if k > DENSE_LIMIT {
            return Err(FockError::DenseLimit { dim: k, limit: DENSE_LIMIT });
        }
        let mut m = DMatrix::zeros(k, k);
        for &(r, c, v) in &self.entries {
            if r < k && c < k {
                m[(r, c)] += v;
            }
        }
        Ok(m)
    }

    pub fn apply(&self, x: &DVector<Complex64>) -> Result<DVector<Complex64>, FockError> {
        if x.len() != self.dim {
            return Err(FockError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut y = DVector::zeros(self.dim);
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        Ok(y)
    }

    /// `⟨x|A|y⟩`.
    pub fn sandwich(&self, x: &DVector<Complex64>, y: &DVector<Complex64>) -> Result<Complex64, FockError> {
        Ok(x.dotc(&self.apply(y)?))
    }

    /// Largest `|A_ij − conj(A_ji)|` on the leading `k × k` block.
    pub fn hermiticity_residual(&self, k: usize) -> Result<f64, FockError> {
        let b = self.block(k)?;
        Ok((&b - b.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm())))
    }

    /// Writes `<stem>.json` (header) and `<stem>.txt` (`row col re im` lines).
    pub fn dump(&self, basis: &FockBasis, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), FockError> {
        if basis.dim() != self.dim {
            return Err(FockError::DimensionMismatch { expected: self.dim, found: basis.dim() });
        }
        let header = DumpHeader {
            format: "ymgap-fock-operator",
            modes: basis.modes(),
            n_max: basis.n_max(),
            dim: self.dim,
            nonzeros: self.entries.len(),
            provenance: &self.provenance,
            ordering: self.ordering,
            degree: self.degree,
            basis: basis.states(),
        };
        let json_path = dir.join(format!("{stem}.json"));
        let txt_path = dir.join(format!("{stem}.txt"));
        let json = serde_json::to_string_pretty(&header).expect("header serializes");
        fs::write(&json_path, json)?;
        let mut text = String::with_capacity(self.entries.len() * 48);
        for &(r, c, v) in &self.entries {
            writeln!(text, "{r} {c} {:.17e} {:.17e}", v.re, v.im).expect("writing to a String");
        }
        fs::write(&txt_path, text)?;
        Ok((json_path, txt_path))
    }
}

fn sqrt_ratio(from: u16, to: u16) -> f64 {
    // √(max! / min!)
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    ((lo + 1)..=hi).map(|k| k as f64).product::<f64>().sqrt()
}

/// `(a†)^α a^β |n⟩` or `a^β (a†)^α |n⟩` with truncation at `n_max`.
fn apply_monomial(
    n: &[u16],
    alpha: &[u16],
    beta: &[u16],
    ordering: Ordering,
    n_max: usize,
) -> Option<(Vec<u16>, f64)> {
    let grade = total(n);
    let (ca, cb) = (total(alpha), total(beta));
    let mut amp = 1.0;
    let mut out = n.to_vec();
    match ordering {
        Ordering::Normal => {
            for m in 0..n.len() {
                if out[m] < beta[m] {
                    return None;
                }
            }
            if grade - cb + ca > n_max {
                return None;
            }
            for m in 0..n.len() {
                let mid = out[m] - beta[m];
                amp *= sqrt_ratio(out[m], mid) * sqrt_ratio(mid, mid + alpha[m]);
                out[m] = mid + alpha[m];
            }
        }
        Ordering::AntiWick => {
            if grade + ca > n_max {
                return None;
            }
            for m in 0..n.len() {
                let mid = out[m] + alpha[m];
                if mid < beta[m] {
                    return None;
                }
                amp *= sqrt_ratio(out[m], mid) * sqrt_ratio(mid, mid - beta[m]);
                out[m] = mid - beta[m];
            }
        }
    }
    Some((out, amp))
}

fn quantize(
    sym: &PolynomialSymbol,
    basis: &FockBasis,
    ordering: Ordering,
    label: &str,
    check_degree: bool,
) -> Result<FockOperator, FockError> {
    if sym.modes() != basis.modes() {
        return Err(FockError::DimensionMismatch { expected: basis.modes(), found: sym.modes() });
    }
    let degree = sym.degree();
    if check_degree && degree > basis.n_max() {
        return Err(FockError::DegreeExceedsCutoff { degree, n_max: basis.n_max() });
    }
    let terms: Vec<_> = sym.terms().collect();
    let entries: Vec<(usize, usize, Complex64)> = (0..basis.dim())
        .into_par_iter()
        .flat_map_iter(|col| {
            let n = basis.state(col);
            let mut local = Vec::new();
            for (a, b, c) in &terms {
                if let Some((target, amp)) = apply_monomial(n, a, b, ordering, basis.n_max()) {
                    let row = basis.index_of(&target).expect("target within truncation");
                    local.push((row, col, **c * amp));
                }
            }
            local
        })
        .collect();
    Ok(FockOperator::from_entries(basis.dim(), entries, label, ordering, degree))
}

/// Each monomial `z̄^α z^β` becomes `(a†)^α a^β`.
pub fn quantize_normal(sym: &PolynomialSymbol, basis: &FockBasis) -> Result<FockOperator, FockError> {
    quantize(sym, basis, Ordering::Normal, "normal", true)
}

/// Each monomial `z̄^α z^β` becomes `a^β (a†)^α`.
pub fn quantize_antiwick(sym: &PolynomialSymbol, basis: &FockBasis) -> Result<FockOperator, FockError> {
    quantize(sym, basis, Ordering::AntiWick, "anti-wick", true)
}

/// Anti-Wick quantization without the degree guard: monomials whose creators
/// would leave the cutoff simply vanish. Used for exponentiated symbols.
pub fn quantize_antiwick_truncated(sym: &PolynomialSymbol, basis: &FockBasis) -> Result<FockOperator, FockError> {
    quantize(sym, basis, Ordering::AntiWick, "anti-wick", false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Create,
    Annihilate,
}

/// `a†_m` or `a_m`; creation sends top-grade states to zero.
pub fn ladder(m: usize, kind: LadderKind, basis: &FockBasis) -> Result<FockOperator, FockError> {
    if m >= basis.modes() {
        return Err(FockError::BadMode { mode: m, modes: basis.modes() });
    }
    let sym = match kind {
        LadderKind::Create => PolynomialSymbol::zbar(basis.modes(), m),
        LadderKind::Annihilate => PolynomialSymbol::z(basis.modes(), m),
    };
    let mut op = quantize_normal(&sym, basis)?;
    op.provenance = format!("{kind:?} mode {m}").to_lowercase();
    Ok(op)
}

/// Total number operator `Σ_m a†_m a_m`.
pub fn number_operator(basis: &FockBasis) -> FockOperator {
    let entries = (0..basis.dim()).map(|i| (i, i, Complex64::new(basis.grade(i) as f64, 0.0))).collect();
    FockOperator::from_entries(basis.dim(), entries, "number", Ordering::Normal, 2)
}
