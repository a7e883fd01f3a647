use serde::Serialize;

use super::basis::FockBasis;
use super::operator::{quantize_antiwick, quantize_normal};
use super::symbol::PolynomialSymbol;
use crate::error::FockError;
use crate::lie::Complex64;

/// Heat parameter read off the vacuum moment of `z̄₀z₀`: the anti-Wick
/// quantization gives `N + 1`, the normal one gives `N`, and the heat
/// transform adds `s`.
pub fn moment_shift(basis: &FockBasis) -> Result<f64, FockError> {
    let n = PolynomialSymbol::number(basis.modes(), 0);
    let aw = quantize_antiwick(&n, basis)?.block(1)?;
    let nw = quantize_normal(&n, basis)?.block(1)?;
    Ok((aw[(0, 0)] - nw[(0, 0)]).re)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    pub modes: usize,
    pub n_max: usize,
    pub s: f64,
    pub symbols: usize,
    /// Largest entry of `antiwick(Θ) − normal(heat(Θ, s))` on the safe blocks.
    pub max_residual: f64,
}

/// Compares both quantizations of every symbol on its safe block.
pub fn ordering_equivalence(symbols: &[PolynomialSymbol], basis: &FockBasis, s: f64) -> Result<OrderingReport, FockError> {
    let mut worst = 0.0f64;
    for sym in symbols {
        let k = basis.safe_dim(sym.degree());
        let aw = quantize_antiwick(sym, basis)?.block(k)?;
        let nw = quantize_normal(&sym.heat_transform(s), basis)?.block(k)?;
        worst = (aw - nw).iter().fold(worst, |m, v| m.max(v.norm()));
    }
    Ok(OrderingReport { modes: basis.modes(), n_max: basis.n_max(), s, symbols: symbols.len(), max_residual: worst })
}

/// `heat(z̄z, s) − (z̄z + s)`, largest coefficient.
pub fn number_shift_residual(s: f64) -> f64 {
    let n = PolynomialSymbol::number(1, 0);
    let want = n.add(&PolynomialSymbol::constant(1, Complex64::new(s, 0.0)));
    n.heat_transform(s).sub(&want).max_abs()
}
