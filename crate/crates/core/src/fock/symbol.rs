use std::collections::BTreeMap;

use rand::Rng;

use crate::lie::Complex64;

/// Multi-index over the modes.
pub type MultiIndex = Vec<u16>;

/// Sparse polynomial `Θ(z̄, z) = Σ c_{αβ} z̄^α z^β`.
///
/// Keys are `(α, β)` with `α` the exponents of `z̄` and `β` those of `z`.
/// Exact zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSymbol {
    modes: usize,
    terms: BTreeMap<(MultiIndex, MultiIndex), Complex64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `n! / (n − j)!`
fn falling(n: usize, j: usize) -> f64 {
    ((n - j + 1)..=n).map(|k| k as f64).product()
}

impl PolynomialSymbol {
    pub fn zero(modes: usize) -> Self {
        PolynomialSymbol { modes, terms: BTreeMap::new() }
    }

    pub fn constant(modes: usize, c: Complex64) -> Self {
        let mut s = Self::zero(modes);
        s.add_term(vec![0; modes], vec![0; modes], c);
        s
    }

    pub fn monomial(alpha: MultiIndex, beta: MultiIndex, c: Complex64) -> Self {
        assert_eq!(alpha.len(), beta.len(), "multi-index length mismatch");
        let mut s = Self::zero(alpha.len());
        s.add_term(alpha, beta, c);
        s
    }

    fn unit(modes: usize, m: usize) -> MultiIndex {
        let mut v = vec![0; modes];
        v[m] = 1;
        v
    }

    /// `z_m`.
    pub fn z(modes: usize, m: usize) -> Self {
        Self::monomial(vec![0; modes], Self::unit(modes, m), Complex64::new(1.0, 0.0))
    }

    /// `z̄_m`.
    pub fn zbar(modes: usize, m: usize) -> Self {
        Self::monomial(Self::unit(modes, m), vec![0; modes], Complex64::new(1.0, 0.0))
    }

    /// `z̄_m z_m`.
    pub fn number(modes: usize, m: usize) -> Self {
        Self::monomial(Self::unit(modes, m), Self::unit(modes, m), Complex64::new(1.0, 0.0))
    }

    /// `(z_m + z̄_m)/√2`, the real coordinate of mode `m`.
    pub fn q(modes: usize, m: usize) -> Self {
        let mut s = Self::z(modes, m);
        s.add_assign(&Self::zbar(modes, m));
        s.scale(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
    }

    /// `Σ L_{mn} z̄_m z_n`.
    pub fn quadratic_form(l: &nalgebra::DMatrix<Complex64>) -> Self {
        let m = l.nrows();
        let mut s = Self::zero(m);
        for i in 0..m {
            for j in 0..m {
                s.add_term(Self::unit(m, i), Self::unit(m, j), l[(i, j)]);
            }
        }
        s
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, &Complex64)> {
        self.terms.iter().map(|((a, b), c)| (a, b, c))
    }

    pub fn coeff(&self, alpha: &[u16], beta: &[u16]) -> Complex64 {
        self.terms.get(&(alpha.to_vec(), beta.to_vec())).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, alpha: MultiIndex, beta: MultiIndex, c: Complex64) {
        assert!(alpha.len() == self.modes && beta.len() == self.modes, "multi-index length mismatch");
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let key = (alpha, beta);
        let entry = self.terms.entry(key.clone()).or_default();
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.modes, other.modes);
        for ((a, b), c) in &other.terms {
            self.add_term(a.clone(), b.clone(), *c);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = self.clone();
        s.add_assign(other);
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut s = Self::zero(self.modes);
        for ((a, b), v) in &self.terms {
            s.add_term(a.clone(), b.clone(), v * c);
        }
        s
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.modes, other.modes);
        let mut s = Self::zero(self.modes);
        for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &other.terms {
                let a = a1.iter().zip(a2).map(|(x, y)| x + y).collect();
                let b = b1.iter().zip(b2).map(|(x, y)| x + y).collect();
                s.add_term(a, b, c1 * c2);
            }
        }
        s
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = Self::constant(self.modes, Complex64::new(1.0, 0.0));
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Complex conjugate symbol: `conj(c_{αβ})` moved to `(β, α)`.
    pub fn conj(&self) -> Self {
        let mut s = Self::zero(self.modes);
        for ((a, b), c) in &self.terms {
            s.add_term(b.clone(), a.clone(), c.conj());
        }
        s
    }

    /// Total degree `max |α| + |β|`; zero for the zero symbol.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|(a, b)| total(a) + total(b)).max().unwrap_or(0)
    }

    /// Largest `|α|`, the number of creators in a normal-ordered monomial.
    pub fn creation_degree(&self) -> usize {
        self.terms.keys().map(|(a, _)| total(a)).max().unwrap_or(0)
    }

    pub fn annihilation_degree(&self) -> usize {
        self.terms.keys().map(|(_, b)| total(b)).max().unwrap_or(0)
    }

    /// Largest deviation from `c_{αβ} = conj(c_{βα})`.
    pub fn reality_residual(&self) -> f64 {
        self.sub(&self.conj()).max_abs()
    }

    /// Real on the diagonal `z̄ = conj(z)` within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.reality_residual() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    /// Drops coefficients with modulus `≤ tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let terms = self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(k, c)| (k.clone(), *c)).collect();
        PolynomialSymbol { modes: self.modes, terms }
    }

    /// Keeps only monomials accepted by `keep(α, β)`.
    pub fn filtered<F: Fn(&[u16], &[u16]) -> bool>(&self, keep: F) -> Self {
        let terms = self.terms.iter().filter(|((a, b), _)| keep(a, b)).map(|(k, c)| (k.clone(), *c)).collect();
        PolynomialSymbol { modes: self.modes, terms }
    }

    /// `Θ(w, z)` with `w` substituted for `z̄`.
    pub fn eval(&self, zbar: &[Complex64], z: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((a, b), c) in &self.terms {
            let mut t = *c;
            for m in 0..self.modes {
                t *= zbar[m].powu(a[m] as u32) * z[m].powu(b[m] as u32);
            }
            acc += t;
        }
        acc
    }

    /// Value on the diagonal `z̄ = conj(z)`.
    pub fn eval_diag(&self, z: &[Complex64]) -> Complex64 {
        let zbar: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
        self.eval(&zbar, z)
    }

    /// One application of `Σ_m ∂_{z̄_m} ∂_{z_m}`.
    pub fn contract(&self) -> Self {
        let mut s = Self::zero(self.modes);
        for ((a, b), c) in &self.terms {
            for m in 0..self.modes {
                if a[m] > 0 && b[m] > 0 {
                    let f = a[m] as f64 * b[m] as f64;
                    let mut a2 = a.clone();
                    let mut b2 = b.clone();
                    a2[m] -= 1;
                    b2[m] -= 1;
                    s.add_term(a2, b2, c * f);
                }
            }
        }
        s
    }

    /// `exp(s Σ_m ∂_{z̄_m} ∂_{z_m}) Θ`, exact on polynomials.
    ///
    /// Per mode, `exp(s ∂_{z̄}∂_z) z̄^a z^b = Σ_j s^j/j! · a!/(a−j)! · b!/(b−j)! · z̄^{a−j} z^{b−j}`,
    /// and the mode operators commute, so the full transform is the product.
    pub fn heat_transform(&self, s: f64) -> Self {
        let mut out = Self::zero(self.modes);
        for ((a, b), c) in &self.terms {
            let limits: Vec<usize> = a.iter().zip(b).map(|(x, y)| (*x).min(*y) as usize).collect();
            let mut gamma = vec![0usize; self.modes];
            loop {
                let mut w = 1.0;
                for m in 0..self.modes {
                    let j = gamma[m];
                    w *= s.powi(j as i32) / factorial(j) * falling(a[m] as usize, j) * falling(b[m] as usize, j);
                }
                let a2 = a.iter().zip(&gamma).map(|(x, &j)| x - j as u16).collect();
                let b2 = b.iter().zip(&gamma).map(|(x, &j)| x - j as u16).collect();
                out.add_term(a2, b2, c * w);
                if !advance(&mut gamma, &limits) {
                    break;
                }
            }
        }
        out
    }

    /// Random symbol with `terms` monomials of total degree `≤ max_degree`
    /// and coefficients in the unit square.
    pub fn random<R: Rng>(modes: usize, max_degree: usize, terms: usize, real: bool, rng: &mut R) -> Self {
        let mut s = Self::zero(modes);
        for _ in 0..terms {
            let deg = rng.random_range(0..=max_degree);
            let mut a = vec![0u16; modes];
            let mut b = vec![0u16; modes];
            for _ in 0..deg {
                let m = rng.random_range(0..modes);
                if rng.random_bool(0.5) {
                    a[m] += 1;
                } else {
                    b[m] += 1;
                }
            }
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            s.add_term(a, b, c);
        }
        if real {
            s = s.add(&s.conj()).scale(Complex64::new(0.5, 0.0));
        }
        s
    }
}

/// Odometer step over `0 ≤ γ ≤ limits`; false once every index wrapped.
fn advance(gamma: &mut [usize], limits: &[usize]) -> bool {
    for (g, &l) in gamma.iter_mut().zip(limits) {
        if *g < l {
            *g += 1;
            return true;
        }
        *g = 0;
    }
    false
}

pub(crate) fn total(m: &[u16]) -> usize {
    m.iter().map(|&x| x as usize).sum()
}
