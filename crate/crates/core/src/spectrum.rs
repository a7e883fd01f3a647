//! Quantized energy operator on the lowest transversal modes, its spectra and
//! the lower bound by the extracted mass term.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::SpectrumError;
use crate::fock::{
    binomial, number_operator, quantize_antiwick, quantize_normal, FockBasis, FockOperator, ModeBasis, PolynomialSymbol,
    DENSE_LIMIT,
};
use crate::lattice::PAIRS;
use crate::lie::{Complex64, LieAlgebraSpec};

/// Anti-Wick energy symbol and its normal-ordered decomposition
/// `heat(sym, s) = kinetic + quartic + mass + k`.
#[derive(Debug, Clone)]
pub struct EnergySymbol {
    pub sym: PolynomialSymbol,
    /// `Σ ω z̄z`.
    pub kinetic: PolynomialSymbol,
    /// `(1/2) h³ Σ_x Σ_{j<k} |[a_j, a_k]|²`.
    pub quartic: PolynomialSymbol,
    /// First contraction of the quartic, `s · Σ ∂_z̄ ∂_z quartic`.
    pub mass: PolynomialSymbol,
    pub k: f64,
    pub s: f64,
    pub coupling: f64,
}

impl EnergySymbol {
    /// Sum of the decomposition parts.
    pub fn normal(&self) -> PolynomialSymbol {
        let mut n = self.kinetic.add(&self.quartic).add(&self.mass);
        n.add_term(vec![0; n.modes()], vec![0; n.modes()], Complex64::new(self.k, 0.0));
        n
    }

    pub fn modes(&self) -> usize {
        self.sym.modes()
    }
}

/// Expands `Σ T[m] q_{m0} q_{m1} q_{m2} q_{m3}` with `q = (z + z̄)/√2`.
fn q_polynomial(modes: usize, coeffs: &BTreeMap<[usize; 4], f64>) -> PolynomialSymbol {
    let q: Vec<PolynomialSymbol> = (0..modes).map(|m| PolynomialSymbol::q(modes, m)).collect();
    let mut out = PolynomialSymbol::zero(modes);
    for (idx, &c) in coeffs {
        let mono = q[idx[0]].mul(&q[idx[1]]).mul(&q[idx[2]]).mul(&q[idx[3]]);
        out.add_assign(&mono.scale(Complex64::new(c, 0.0)));
    }
    out
}

/// Quartic bracket energy of the embedded potential as a symbol.
fn quartic_symbol(g: &LieAlgebraSpec, modes: &ModeBasis) -> PolynomialSymbol {
    let grid = modes.grid();
    let d = g.dim();
    let mm = modes.len();
    let patterns: Vec<Vec<f64>> = (0..mm).map(|m| modes.pattern(m)).collect();
    let inv_sqrt_w: Vec<f64> = modes.omegas().iter().map(|w| 1.0 / w.sqrt()).collect();
    let unit = |i: usize| {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    };
    let brackets: Vec<Vec<Vec<f64>>> =
        (0..d).map(|i| (0..d).map(|j| g.bracket(&unit(i), &unit(j))).collect()).collect();
    let metric = g.metric();
    let lie: Vec<usize> = modes.modes().iter().map(|m| m.lie).collect();

    // X^l = Σ B^l[m][m'] q_m q_m'; quartic = (1/2) h³ Σ X^l G_ll' X^l'
    let mut tensor = vec![0.0; mm * mm * mm * mm];
    let mut b = vec![0.0; d * mm * mm];
    for s in 0..grid.sites() {
        for &(j, k) in PAIRS.iter() {
            b.iter_mut().for_each(|v| *v = 0.0);
            let mut any = false;
            for m in 0..mm {
                let cm = inv_sqrt_w[m] * patterns[m][s] * modes.modes()[m].pol[j];
                if cm == 0.0 {
                    continue;
                }
                for mp in 0..mm {
                    let cmp = inv_sqrt_w[mp] * patterns[mp][s] * modes.modes()[mp].pol[k];
                    if cmp == 0.0 {
                        continue;
                    }
                    let br = &brackets[lie[m]][lie[mp]];
                    for l in 0..d {
                        if br[l] != 0.0 {
                            b[(l * mm + m) * mm + mp] += cm * cmp * br[l];
                            any = true;
                        }
                    }
                }
            }
            if !any {
                continue;
            }
            for l in 0..d {
                for lp in 0..d {
                    let gl = metric[(l, lp)];
                    if gl == 0.0 {
                        continue;
                    }
                    let bl = &b[l * mm * mm..(l + 1) * mm * mm];
                    let blp = &b[lp * mm * mm..(lp + 1) * mm * mm];
                    for (u, &x) in bl.iter().enumerate() {
                        if x == 0.0 {
                            continue;
                        }
                        let row = &mut tensor[u * mm * mm..(u + 1) * mm * mm];
                        for (t, &y) in blp.iter().enumerate() {
                            row[t] += gl * x * y;
                        }
                    }
                }
            }
        }
    }
    let scale = 0.5 * grid.cell_volume();
    let mut coeffs: BTreeMap<[usize; 4], f64> = BTreeMap::new();
    for (flat, &v) in tensor.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let mut idx = [flat / (mm * mm * mm), (flat / (mm * mm)) % mm, (flat / mm) % mm, flat % mm];
        idx.sort_unstable();
        *coeffs.entry(idx).or_insert(0.0) += scale * v;
    }
    let max = coeffs.values().fold(0.0f64, |a, v| a.max(v.abs()));
    coeffs.retain(|_, v| v.abs() > 1e-14 * max);
    q_polynomial(mm, &coeffs).pruned(1e-14 * max.max(f64::MIN_POSITIVE))
}

/// Energy of the mode expansion as an anti-Wick symbol, plus its normal
/// decomposition at ordering parameter `s`.
///
/// The cubic cross term between `D a` and `[a, a]` is left out; the symbol is
/// the free part plus the quartic bracket energy.
pub fn build_energy_symbol(
    g: &LieAlgebraSpec,
    modes: &ModeBasis,
    coupling: f64,
    s: f64,
) -> Result<EnergySymbol, SpectrumError> {
    if modes.dim_g() != g.dim() {
        return Err(crate::error::FockError::DimensionMismatch { expected: g.dim(), found: modes.dim_g() }.into());
    }
    let mm = modes.len();
    let mut kinetic = PolynomialSymbol::zero(mm);
    for (m, w) in modes.omegas().into_iter().enumerate() {
        kinetic.add_assign(&PolynomialSymbol::number(mm, m).scale(Complex64::new(w, 0.0)));
    }
    let gc = g.with_coupling(coupling);
    let quartic = if coupling == 0.0 { PolynomialSymbol::zero(mm) } else { quartic_symbol(&gc, modes) };
    let sym = kinetic.add(&quartic);
    let c1 = quartic.contract();
    let mass = c1.scale(Complex64::new(s, 0.0));
    let c2 = c1.contract();
    let k = s * modes.omegas().iter().sum::<f64>() + 0.5 * s * s * c2.coeff(&vec![0; mm], &vec![0; mm]).re;
    Ok(EnergySymbol { sym, kinetic, quartic, mass, k, s, coupling })
}

/// `Ĥ = quantize_antiwick(sym)`.
pub fn assemble_h(es: &EnergySymbol, basis: &FockBasis) -> Result<FockOperator, SpectrumError> {
    let mut h = quantize_antiwick(&es.sym, basis)?;
    h.provenance = "energy".into();
    Ok(h)
}

/// Highest grade on which `op` is truncation-exact.
pub fn safe_grade(op: &FockOperator, basis: &FockBasis) -> Result<usize, SpectrumError> {
    basis
        .n_max()
        .checked_sub(op.degree)
        .ok_or(SpectrumError::EmptySafeBlock { n_max: basis.n_max(), degree: op.degree })
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn hermiticity(m: &DMatrix<Complex64>) -> f64 {
    let scale = m.iter().fold(1.0f64, |a, v| a.max(v.norm()));
    (m - m.adjoint()).iter().fold(0.0f64, |a, v| a.max(v.norm())) / scale
}

fn compress(m: &DMatrix<Complex64>, idx: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Lowest eigenvalue with whole sectors `removed` taken out of the block.
fn sector_min(block: &DMatrix<Complex64>, basis: &FockBasis, grades: usize, removed: &[usize]) -> f64 {
    let idx: Vec<usize> = (0..=grades).filter(|g| !removed.contains(g)).flat_map(|g| basis.sector(g)).collect();
    hermitian_eigenvalues(&compress(block, &idx))[0]
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for t in i..k {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

/// Von Neumann mini-max values `λ_0..λ_n`, counting subspace dimension by
/// whole particle-number sectors of the safe block.
///
/// `λ_j` is the largest, over sets `S` of `j` sectors, of the lowest eigenvalue
/// of `L` compressed to the remaining sectors. Sets are searched exhaustively
/// for `j ≤ 3` and greedily with swap refinement above; ties keep the
/// lexicographically first set. The list stops early when sectors run out.
pub fn vn_minimax(l: &FockOperator, basis: &FockBasis, n: usize) -> Result<Vec<f64>, SpectrumError> {
    let grades = safe_grade(l, basis)?;
    let block = l.block(basis.block_dim(grades))?;
    let herm = hermiticity(&block);
    if herm > 1e-10 {
        return Err(SpectrumError::NotHermitian(herm));
    }
    let sectors = grades + 1;
    let mut out = vec![hermitian_eigenvalues(&block)[0]];
    let mut best_set: Vec<usize> = Vec::new();
    for j in 1..=n.min(grades) {
        let (set, val) = if j <= 3 {
            let mut best: Option<(Vec<usize>, f64)> = None;
            for c in combinations(sectors, j) {
                let v = sector_min(&block, basis, grades, &c);
                if best.as_ref().is_none_or(|b| v > b.1) {
                    best = Some((c, v));
                }
            }
            best.expect("at least one selection")
        } else {
            greedy(&block, basis, grades, &best_set)
        };
        out.push(val);
        best_set = set;
    }
    Ok(out)
}

fn greedy(block: &DMatrix<Complex64>, basis: &FockBasis, grades: usize, prev: &[usize]) -> (Vec<usize>, f64) {
    let sectors = grades + 1;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for add in (0..sectors).filter(|g| !prev.contains(g)) {
        let mut set = prev.to_vec();
        set.push(add);
        set.sort_unstable();
        let v = sector_min(block, basis, grades, &set);
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((set, v));
        }
    }
    let (mut set, mut val) = best.expect("a sector remains");
    loop {
        let mut improved = false;
        'swap: for pos in 0..set.len() {
            for cand in (0..sectors).filter(|g| !set.contains(g)) {
                let mut trial = set.clone();
                trial[pos] = cand;
                trial.sort_unstable();
                let v = sector_min(block, basis, grades, &trial);
                if v > val {
                    set = trial;
                    val = v;
                    improved = true;
                    break 'swap;
                }
            }
        }
        if !improved {
            return (set, val);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub trials: usize,
    pub vacuum_slack: f64,
    /// Smallest `⟨Ĥ⟩ − ⟨M̂⟩ − k` over the sampled states.
    pub min_slack: f64,
    pub min_kinetic: f64,
    pub min_quartic: f64,
}

impl BoundReport {
    /// `⟨Ĥ⟩ ≥ ⟨M̂⟩ + k` on every sample.
    pub fn bound_holds(&self, tol: f64) -> bool {
        self.min_slack >= -tol
    }

    /// Kinetic and normal-ordered quartic expectations both nonnegative.
    /// The quartic one is not guaranteed: normal ordering spoils the sum of
    /// squares on mixed two-particle states.
    pub fn parts_nonnegative(&self, tol: f64) -> bool {
        self.min_kinetic >= -tol && self.min_quartic >= -tol
    }
}

/// Samples normalized random states on the safe block and compares `⟨Ĥ⟩` with
/// the normal-quantized mass term plus `k`. The vacuum is always included.
pub fn bound_check(
    h: &FockOperator,
    es: &EnergySymbol,
    basis: &FockBasis,
    trials: usize,
    seed: u64,
) -> Result<BoundReport, SpectrumError> {
    let grades = safe_grade(h, basis)?;
    let dim = basis.block_dim(grades);
    let hb = h.block(basis.block_dim(grades))?;
    let mb = quantize_normal(&es.mass, basis)?.block(basis.block_dim(grades))?;
    let kb = quantize_normal(&es.kinetic, basis)?.block(basis.block_dim(grades))?;
    let qb = quantize_normal(&es.quartic, basis)?.block(basis.block_dim(grades))?;
    let expect = |m: &DMatrix<Complex64>, v: &DVector<Complex64>| v.dotc(&(m * v)).re;
    let slack = |v: &DVector<Complex64>| expect(&hb, v) - expect(&mb, v) - es.k;

    let mut vac = DVector::zeros(dim);
    vac[0] = Complex64::new(1.0, 0.0);
    let vacuum_slack = slack(&vac);
    let mut report = BoundReport {
        trials,
        vacuum_slack,
        min_slack: vacuum_slack,
        min_kinetic: expect(&kb, &vac),
        min_quartic: expect(&qb, &vac),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut v = DVector::from_fn(dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        v /= Complex64::new(v.norm(), 0.0);
        report.min_slack = report.min_slack.min(slack(&v));
        report.min_kinetic = report.min_kinetic.min(expect(&kb, &v));
        report.min_quartic = report.min_quartic.min(expect(&qb, &v));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub group: String,
    pub modes: usize,
    pub n_max: usize,
    pub coupling: f64,
    pub s: f64,
    pub grid_n: usize,
    pub grid_h: f64,
    pub omegas: Vec<f64>,
    pub dim: usize,
    pub block_dim: usize,
    pub hermiticity: f64,
    /// Safe-block eigenvalues, ascending, with multiplicity.
    pub eigenvalues: Vec<f64>,
    /// Lowest eigenvalue of each particle-number sector.
    pub sector_minima: Vec<f64>,
    pub minimax: Vec<f64>,
    pub lambda0: f64,
    pub lambda1: f64,
    pub gap: f64,
    pub k: f64,
    pub vacuum_expectation: f64,
    pub bound: BoundReport,
}

/// Settings of one spectral computation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumSettings {
    pub n_max: usize,
    pub coupling: f64,
    pub s: f64,
    /// Number of mini-max values beyond `λ_0`.
    pub minimax: usize,
    pub trials: usize,
    pub seed: u64,
}

pub fn spectrum(g: &LieAlgebraSpec, modes: &ModeBasis, set: &SpectrumSettings) -> Result<SpectrumReport, SpectrumError> {
    let dim = binomial(modes.len() + set.n_max, modes.len());
    if dim > DENSE_LIMIT {
        return Err(crate::error::FockError::DenseLimit { dim, limit: DENSE_LIMIT }.into());
    }
    let basis = FockBasis::new(modes.len(), set.n_max);
    let es = build_energy_symbol(g, modes, set.coupling, set.s)?;
    let h = assemble_h(&es, &basis)?;
    let grades = safe_grade(&h, &basis)?;
    let block = h.block(basis.block_dim(grades))?;
    let hermiticity = hermiticity(&block);
    if hermiticity > 1e-10 {
        return Err(SpectrumError::NotHermitian(hermiticity));
    }
    let eigenvalues = hermitian_eigenvalues(&block);
    let sector_minima = (0..=grades)
        .map(|gr| {
            let idx: Vec<usize> = basis.sector(gr).collect();
            hermitian_eigenvalues(&compress(&block, &idx))[0]
        })
        .collect();
    let minimax = vn_minimax(&h, &basis, set.minimax.max(1))?;
    let lambda0 = minimax[0];
    let lambda1 = minimax.get(1).copied().unwrap_or(f64::NAN);
    let bound = bound_check(&h, &es, &basis, set.trials, set.seed)?;
    Ok(SpectrumReport {
        group: g.label().to_string(),
        modes: modes.len(),
        n_max: set.n_max,
        coupling: set.coupling,
        s: set.s,
        grid_n: modes.grid().n(),
        grid_h: modes.grid().h(),
        omegas: modes.omegas(),
        dim: basis.dim(),
        block_dim: block.nrows(),
        hermiticity,
        eigenvalues,
        sector_minima,
        lambda0,
        lambda1,
        gap: lambda1 - lambda0,
        minimax,
        k: es.k,
        vacuum_expectation: block[(0, 0)].re,
        bound,
    })
}

/// One point of a truncation/coupling scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanPoint {
    pub modes: usize,
    pub n_max: usize,
    pub coupling: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ScanOutcome {
    Done(Box<SpectrumReport>),
    Skipped { point: ScanPoint, reason: String },
}

/// Spectral reports over a list of `(M, n_max, coupling)` points. Points whose
/// Fock dimension exceeds the dense limit are skipped with a notice.
pub fn gap_scan(
    g: &LieAlgebraSpec,
    grid: &crate::lattice::Grid,
    k_max: usize,
    points: &[ScanPoint],
    base: &SpectrumSettings,
) -> Result<Vec<ScanOutcome>, SpectrumError> {
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let dim = binomial(p.modes + p.n_max, p.modes);
        if dim > DENSE_LIMIT {
            out.push(ScanOutcome::Skipped {
                point: *p,
                reason: format!("Fock dimension {dim} exceeds the dense limit {DENSE_LIMIT}"),
            });
            continue;
        }
        let modes = ModeBasis::new(grid, g.dim(), p.modes, k_max)?;
        let set = SpectrumSettings { n_max: p.n_max, coupling: p.coupling, ..*base };
        out.push(ScanOutcome::Done(Box::new(spectrum(g, &modes, &set)?)));
    }
    Ok(out)
}

/// `(1/2) [x, y]̄ ⋆ [x, y]` over `2·dim` modes `(x, y)`.
pub fn killing_quartic(g: &LieAlgebraSpec) -> PolynomialSymbol {
    let d = g.dim();
    let gc = g.coupling();
    let metric = g.metric();
    let mut out = PolynomialSymbol::zero(2 * d);
    let unit = |i: usize, j: usize| {
        let mut v = vec![0u16; 2 * d];
        v[i] += 1;
        v[d + j] += 1;
        v
    };
    for i in 0..d {
        for j in 0..d {
            for ip in 0..d {
                for jp in 0..d {
                    let mut c = 0.0;
                    for l in 0..d {
                        let f = g.structure_constant(i, j, l);
                        if f == 0.0 {
                            continue;
                        }
                        for lp in 0..d {
                            c += f * metric[(l, lp)] * g.structure_constant(ip, jp, lp);
                        }
                    }
                    if c != 0.0 {
                        out.add_term(unit(i, j), unit(ip, jp), Complex64::new(0.5 * gc * gc * c, 0.0));
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct WickReport {
    pub group: String,
    pub s: f64,
    /// `s · contract(quartic)` compared with `(s/2)·coupling²·(x̄Cx + ȳCy)`.
    pub residual: f64,
    /// Distance of the contraction matrix `C` from the identity.
    pub casimir_identity_residual: f64,
    /// Largest coefficient of `x̄_i x_i` in the contracted term.
    pub diagonal_coefficient: f64,
}

/// First-order heat term of the quartic Killing polynomial against the
/// Casimir contraction.
pub fn wick_mass_identity(g: &LieAlgebraSpec, s: f64) -> WickReport {
    let d = g.dim();
    let q = killing_quartic(g);
    let got = q.contract().scale(Complex64::new(s, 0.0));
    let cas = g.casimir_contract();
    let coef = 0.5 * s * g.coupling() * g.coupling();
    let mut want = PolynomialSymbol::zero(2 * d);
    for block in 0..2 {
        for i in 0..d {
            for j in 0..d {
                if cas[(i, j)] == 0.0 {
                    continue;
                }
                let mut a = vec![0u16; 2 * d];
                let mut b = vec![0u16; 2 * d];
                a[block * d + i] = 1;
                b[block * d + j] = 1;
                want.add_term(a, b, Complex64::new(coef * cas[(i, j)], 0.0));
            }
        }
    }
    let residual = got.sub(&want).max_abs();
    let diagonal_coefficient = (0..d)
        .map(|i| {
            let mut a = vec![0u16; 2 * d];
            a[i] = 1;
            got.coeff(&a, &a).re
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let id = DMatrix::<f64>::identity(d, d);
    WickReport {
        group: g.label().to_string(),
        s,
        residual,
        casimir_identity_residual: (cas - id).amax(),
        diagonal_coefficient,
    }
}

/// Number operator of a basis, as the mini-max test operator.
pub fn number_minimax(basis: &FockBasis, n: usize) -> Result<Vec<f64>, SpectrumError> {
    vn_minimax(&number_operator(basis), basis, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{CauchyData, Grid};
    use crate::lie::{algebra_from_id, build_algebra};
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn setup(m: usize) -> (LieAlgebraSpec, ModeBasis) {
        let g = algebra_from_id("su2").unwrap();
        let grid = Grid::new(4, 1.0).unwrap();
        let mb = ModeBasis::new(&grid, 3, m, 1).unwrap();
        (g, mb)
    }

    fn random_z(m: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    // (1/2) h³ Σ |[a_j, a_k]|² straight from the lattice field
    fn lattice_quartic(g: &LieAlgebraSpec, grid: &Grid, c: &CauchyData) -> f64 {
        let mut sum = 0.0;
        for s in 0..grid.sites() {
            for &(j, k) in PAIRS.iter() {
                let b = g.bracket(c.a.at(s, j), c.a.at(s, k));
                sum += g.killing_product(&b, &b).unwrap();
            }
        }
        0.5 * grid.cell_volume() * sum
    }

    #[test]
    fn free_symbol() {
        let (g, mb) = setup(5);
        let es = build_energy_symbol(&g, &mb, 0.0, 1.0).unwrap();
        let mut want = PolynomialSymbol::zero(5);
        for (m, w) in mb.omegas().into_iter().enumerate() {
            want.add_term(
                (0..5).map(|i| (i == m) as u16).collect(),
                (0..5).map(|i| (i == m) as u16).collect(),
                c(w),
            );
        }
        assert_eq!(es.sym.sub(&want).max_abs(), 0.0);
        assert!(es.mass.is_empty());
        assert!((es.k - mb.omegas().iter().sum::<f64>()).abs() < 1e-14);
    }

    #[test]
    fn quartic_matches_lattice_energy() {
        let (g, mb) = setup(4);
        for coupling in [0.5, 1.3] {
            let es = build_energy_symbol(&g, &mb, coupling, 1.0).unwrap();
            assert!(es.quartic.is_real(1e-13));
            let gc = g.with_coupling(coupling);
            for seed in 0..5 {
                let z = random_z(4, seed);
                let cd = mb.embed(&z).unwrap();
                let want = lattice_quartic(&gc, mb.grid(), &cd);
                let got = es.quartic.eval_diag(&z);
                assert!((got.re - want).abs() <= 1e-11 * want.max(1.0), "{got} {want}");
                assert!(got.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quartic_nonzero_with_three_modes() {
        let (g, mb) = setup(3);
        let es = build_energy_symbol(&g, &mb, 1.0, 1.0).unwrap();
        assert!(!es.quartic.is_empty());
        for seed in 0..10 {
            assert!(es.quartic.eval_diag(&random_z(3, seed)).re >= 0.0);
        }
        assert!(es.k >= 0.0);
    }

    #[test]
    fn decomposition_sums_to_normal_symbol() {
        let (g, mb) = setup(3);
        for s in [0.5, 1.0] {
            let es = build_energy_symbol(&g, &mb, 0.8, s).unwrap();
            assert!(es.normal().sub(&es.sym.heat_transform(s)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn mass_is_half_laplacian_of_quartic() {
        // s Σ ∂_z̄∂_z f(q) = (s/2) Σ ∂²_q f; central differences with Richardson
        // are exact on a quartic
        let (g, mb) = setup(3);
        let s = 1.0;
        let es = build_energy_symbol(&g, &mb, 1.0, s).unwrap();
        let z = random_z(3, 9);
        let f = |zz: &[Complex64]| lattice_quartic(&g, mb.grid(), &mb.embed(zz).unwrap());
        let second = |eta: f64| {
            let mut acc = 0.0;
            for m in 0..3 {
                // shifting q_m by η moves z_m by η/√2
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[m] += c(eta / std::f64::consts::SQRT_2);
                zm[m] -= c(eta / std::f64::consts::SQRT_2);
                acc += (f(&zp) - 2.0 * f(&z) + f(&zm)) / (eta * eta);
            }
            acc
        };
        let (d1, d2) = (second(0.2), second(0.1));
        let lap = (4.0 * d2 - d1) / 3.0;
        let got = es.mass.eval_diag(&z).re;
        assert!((got - 0.5 * s * lap).abs() <= 1e-8 * lap.abs().max(1.0), "{got} {}", 0.5 * s * lap);
    }

    #[test]
    fn vacuum_expectation_is_k() {
        let (g, mb) = setup(3);
        let basis = FockBasis::new(3, 6);
        let es = build_energy_symbol(&g, &mb, 1.0, 1.0).unwrap();
        let h = assemble_h(&es, &basis).unwrap();
        let vac = h.to_dense().unwrap()[(0, 0)];
        assert!((vac.re - es.k).abs() <= 1e-10, "{} {}", vac.re, es.k);
        assert!(h.hermiticity_residual(basis.block_dim(2)).unwrap() <= 1e-12);
    }

    #[test]
    fn free_spectrum_is_harmonic() {
        let (g, mb) = setup(3);
        let basis = FockBasis::new(3, 6);
        let es = build_energy_symbol(&g, &mb, 0.0, 1.0).unwrap();
        let h = assemble_h(&es, &basis).unwrap();
        let grades = safe_grade(&h, &basis).unwrap();
        let ev = hermitian_eigenvalues(&h.block(basis.block_dim(grades)).unwrap());
        let w = mb.omegas();
        let mut want: Vec<f64> = (0..basis.block_dim(grades))
            .map(|i| basis.state(i).iter().zip(&w).map(|(&n, w)| (n as f64 + 1.0) * w).sum())
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn minimax_examples() {
        let basis = FockBasis::new(2, 6);
        let n = number_minimax(&basis, 4).unwrap();
        assert_eq!(n, vec![0.0, 1.0, 2.0, 3.0, 4.0]);

        let id = quantize_normal(&PolynomialSymbol::constant(2, c(1.0)), &basis).unwrap();
        assert!(vn_minimax(&id, &basis, 3).unwrap().iter().all(|&v| (v - 1.0).abs() < 1e-14));

        // diagonal with sector minima (0, 2, 3.5)
        let b1 = FockBasis::new(1, 2);
        let diag = FockOperator::from_entries(
            3,
            vec![(0, 0, c(0.0)), (1, 1, c(2.0)), (2, 2, c(3.5))],
            "diag",
            crate::fock::Ordering::Normal,
            0,
        );
        let l = vn_minimax(&diag, &b1, 2).unwrap();
        assert_eq!(&l[..2], &[0.0, 2.0]);
        // brute force over every subset
        for (j, &lj) in l.iter().enumerate() {
            let best = combinations(3, j)
                .into_iter()
                .map(|set| (0..3).filter(|g| !set.contains(g)).map(|g| [0.0, 2.0, 3.5][g]).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(lj, best);
        }
    }

    #[test]
    fn greedy_matches_exhaustive_on_number_operator() {
        let basis = FockBasis::new(1, 9);
        let l = number_minimax(&basis, 7).unwrap();
        assert_eq!(l, (0..=7).map(|j| j as f64).collect::<Vec<_>>());
    }

    #[test]
    fn minimax_dominates_conventional() {
        let (g, mb) = setup(3);
        let basis = FockBasis::new(3, 6);
        let es = build_energy_symbol(&g, &mb, 1.0, 1.0).unwrap();
        let h = assemble_h(&es, &basis).unwrap();
        let grades = safe_grade(&h, &basis).unwrap();
        let ev = hermitian_eigenvalues(&h.block(basis.block_dim(grades)).unwrap());
        let l = vn_minimax(&h, &basis, 2).unwrap();
        assert_eq!(l[0], ev[0]);
        for (j, lj) in l.iter().enumerate() {
            assert!(*lj >= ev[j] - 1e-12);
        }
    }

    #[test]
    fn bound_examples() {
        let (g, mb) = setup(3);
        let basis = FockBasis::new(3, 6);
        let free = build_energy_symbol(&g, &mb, 0.0, 1.0).unwrap();
        let h = assemble_h(&free, &basis).unwrap();
        let r = bound_check(&h, &free, &basis, 50, 1).unwrap();
        assert_eq!(r.vacuum_slack.abs(), 0.0);
        assert!(r.min_slack >= 0.0 && r.min_quartic == 0.0);
    }

    #[test]
    fn gap_scan_free_and_deterministic() {
        let g = algebra_from_id("su2").unwrap();
        let grid = Grid::new(4, 1.0).unwrap();
        let base = SpectrumSettings { n_max: 6, coupling: 0.0, s: 1.0, minimax: 2, trials: 20, seed: 3 };
        let pts = [
            ScanPoint { modes: 3, n_max: 6, coupling: 0.0 },
            ScanPoint { modes: 3, n_max: 6, coupling: 0.5 },
            ScanPoint { modes: 30, n_max: 8, coupling: 0.5 },
        ];
        let a = gap_scan(&g, &grid, 1, &pts, &base).unwrap();
        let b = gap_scan(&g, &grid, 1, &pts, &base).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        match &a[0] {
            ScanOutcome::Done(r) => {
                let wmin = r.omegas.iter().copied().fold(f64::INFINITY, f64::min);
                assert!((r.gap - wmin).abs() < 1e-10);
            }
            _ => panic!("free point skipped"),
        }
        assert!(matches!(a[2], ScanOutcome::Skipped { .. }));
    }

    #[test]
    fn gap_continuous_in_coupling() {
        let g = algebra_from_id("su2").unwrap();
        let grid = Grid::new(4, 1.0).unwrap();
        let mb = ModeBasis::new(&grid, 3, 3, 1).unwrap();
        let gap = |cpl: f64| {
            let set = SpectrumSettings { n_max: 6, coupling: cpl, s: 1.0, minimax: 1, trials: 0, seed: 0 };
            spectrum(&g, &mb, &set).unwrap().gap
        };
        let g0 = gap(0.7);
        let diffs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|d| (gap(0.7 + d) - g0).abs()).collect();
        for w in diffs.windows(2) {
            assert!(w[1] < w[0] || w[1] < 1e-12, "{diffs:?}");
        }
    }

    // independent oracle: expand (1/2)|[x,y]|² from the matrix representation
    // and differentiate monomial by monomial
    fn oracle_contraction(g: &LieAlgebraSpec, s: f64) -> BTreeMap<(Vec<u16>, Vec<u16>), f64> {
        let d = g.dim();
        let gens: Vec<DMatrix<Complex64>> =
            (0..d).map(|i| g.to_matrix(&(0..d).map(|k| (k == i) as u8 as f64).collect::<Vec<_>>()).unwrap()).collect();
        let mut poly: BTreeMap<(Vec<u16>, Vec<u16>), f64> = BTreeMap::new();
        for i in 0..d {
            for j in 0..d {
                let cij = g.from_matrix(&(&gens[i] * &gens[j] - &gens[j] * &gens[i])).unwrap();
                for ip in 0..d {
                    for jp in 0..d {
                        let cpq =
                            g.from_matrix(&(&gens[ip] * &gens[jp] - &gens[jp] * &gens[ip])).unwrap();
                        let v = 0.5 * g.killing_product(&cij, &cpq).unwrap() * g.coupling().powi(2);
                        if v.abs() < 1e-15 {
                            continue;
                        }
                        let mut a = vec![0u16; 2 * d];
                        let mut b = vec![0u16; 2 * d];
                        a[i] += 1;
                        a[d + j] += 1;
                        b[ip] += 1;
                        b[d + jp] += 1;
                        *poly.entry((a, b)).or_insert(0.0) += v;
                    }
                }
            }
        }
        let mut out: BTreeMap<(Vec<u16>, Vec<u16>), f64> = BTreeMap::new();
        for ((a, b), v) in poly {
            for m in 0..2 * d {
                if a[m] > 0 && b[m] > 0 {
                    let mut a2 = a.clone();
                    let mut b2 = b.clone();
                    a2[m] -= 1;
                    b2[m] -= 1;
                    *out.entry((a2, b2)).or_insert(0.0) += s * v * a[m] as f64 * b[m] as f64;
                }
            }
        }
        out
    }

    #[test]
    fn wick_identity_su2_su3() {
        for (id, n) in [("su", 2), ("su", 3)] {
            let g = build_algebra(id, n).unwrap();
            for s in [0.5, 1.0] {
                let r = wick_mass_identity(&g, s);
                assert!(r.residual <= 1e-12, "{r:?}");
                assert!((r.diagonal_coefficient - s / 2.0).abs() <= 1e-12);
                let got = killing_quartic(&g).contract().scale(c(s));
                let oracle = oracle_contraction(&g, s);
                for ((a, b), v) in &oracle {
                    assert!((got.coeff(a, b).re - v).abs() <= 1e-12);
                }
                assert!(got.terms().all(|(a, b, v)| v.norm() < 1e-12 || oracle.contains_key(&(a.clone(), b.clone()))));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn vacuum_expectation_matches_k(coupling in 0.0f64..2.0, seed in 0u64..4) {
            let (g, _) = setup(3);
            let grid = Grid::new(4, 1.0).unwrap();
            let mb = ModeBasis::new(&grid, 3, 2 + seed as usize % 2, 1).unwrap();
            let basis = FockBasis::new(mb.len(), 5);
            let es = build_energy_symbol(&g, &mb, coupling, 1.0).unwrap();
            let h = assemble_h(&es, &basis).unwrap();
            prop_assert!((h.to_dense().unwrap()[(0, 0)].re - es.k).abs() <= 1e-10);
        }
    }
}
