use serde::Serialize;

use crate::error::FockError;
use crate::lattice::{CauchyData, GaugeField, Grid, AXES};
use crate::lie::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

/// One real transversal mode: `N · trig(2π κ·x / n) · pol ⊗ T_lie`.
#[derive(Debug, Clone, Serialize)]
pub struct Mode {
    pub kappa: [i32; 3],
    pub trig: Trig,
    pub polarization: usize,
    pub pol: [f64; 3],
    pub lie: usize,
    pub omega: f64,
}

/// The lowest transversal Fourier modes of a periodic grid at zero background.
///
/// Coordinates: `a = Σ ω^{-1/2} q φ`, `e = Σ ω^{1/2} p φ`, `z = (q + i p)/√2`,
/// so the free energy is `Σ ω |z|²`.
#[derive(Debug, Clone, Serialize)]
pub struct ModeBasis {
    grid: Grid,
    dim_g: usize,
    modes: Vec<Mode>,
}

fn symbol(kappa: [i32; 3], grid: &Grid) -> [f64; 3] {
    let n = grid.n() as f64;
    kappa.map(|k| (std::f64::consts::TAU * k as f64 / n).sin() / grid.h())
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

fn polarizations(s: [f64; 3]) -> [[f64; 3]; 2] {
    let axis = (0..3).min_by(|&i, &j| s[i].abs().total_cmp(&s[j].abs())).unwrap();
    let mut u = [0.0; 3];
    u[axis] = 1.0;
    let e1 = normalized(cross(s, u));
    let e2 = normalized(cross(normalized(s), e1));
    [e1, e2]
}

impl ModeBasis {
    /// The first `count` modes, taking wave vectors with `|κ_j| ≤ k_max`.
    ///
    /// Shells of equal frequency are filled in increasing order; inside a
    /// shell, spatial patterns are interleaved with Lie indices so that a
    /// handful of modes already carries distinct colours and polarizations.
    pub fn new(grid: &Grid, dim_g: usize, count: usize, k_max: usize) -> Result<Self, FockError> {
        if count == 0 || dim_g == 0 {
            return Err(FockError::ModeBasis("need at least one mode and one Lie direction".into()));
        }
        let n = grid.n() as i32;
        let kmax = (k_max as i32).min(n / 2);
        let mut kappas = Vec::new();
        for k0 in -kmax..=kmax {
            for k1 in -kmax..=kmax {
                for k2 in -kmax..=kmax {
                    let k = [k0, k1, k2];
                    // one representative of ±κ, and κ ≡ -κ when 2κ ≡ 0
                    let first = k.iter().copied().find(|&c| c != 0);
                    if first.is_none_or(|c| c < 0) {
                        continue;
                    }
                    if k.iter().any(|&c| c == -n / 2 && n % 2 == 0) {
                        continue;
                    }
                    let s = symbol(k, grid);
                    let omega = s.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if omega > 1e-12 {
                        kappas.push((omega, k));
                    }
                }
            }
        }
        kappas.sort_by(|a, b| {
            let (na, nb) = (a.1.iter().map(|c| c * c).sum::<i32>(), b.1.iter().map(|c| c * c).sum::<i32>());
            a.0.total_cmp(&b.0).then(na.cmp(&nb)).then(b.1.cmp(&a.1))
        });
        let mut modes = Vec::with_capacity(count);
        let mut start = 0;
        while modes.len() < count && start < kappas.len() {
            let w = kappas[start].0;
            let mut end = start;
            while end < kappas.len() && (kappas[end].0 - w).abs() <= 1e-9 * w {
                end += 1;
            }
            let mut patterns = Vec::new();
            for &(omega, k) in &kappas[start..end] {
                let s = symbol(k, grid);
                let pols = polarizations(s);
                for trig in [Trig::Cos, Trig::Sin] {
                    for (pi, pol) in pols.iter().enumerate() {
                        patterns.push((omega, k, trig, pi, *pol));
                    }
                }
            }
            let np = patterns.len();
            let mut pairs: Vec<(usize, usize)> = (0..np).flat_map(|p| (0..dim_g).map(move |i| (p, i))).collect();
            pairs.sort_by_key(|&(p, i)| ((p + np * dim_g - i) % np, p, i));
            for (p, i) in pairs {
                if modes.len() == count {
                    break;
                }
                let (omega, kappa, trig, polarization, pol) = patterns[p];
                modes.push(Mode { kappa, trig, polarization, pol, lie: i, omega });
            }
            start = end;
        }
        if modes.len() < count {
            return Err(FockError::ModeBasis(format!(
                "only {} transversal modes available with k_max = {k_max}, requested {count}",
                modes.len()
            )));
        }
        Ok(ModeBasis { grid: grid.clone(), dim_g, modes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim_g(&self) -> usize {
        self.dim_g
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn omega(&self, m: usize) -> f64 {
        self.modes[m].omega
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    /// Scalar profile `N · trig(2π κ·x / n)` of mode `m` at every site.
    pub fn pattern(&self, m: usize) -> Vec<f64> {
        let mode = &self.modes[m];
        let n = self.grid.n();
        let norm = (2.0 / (self.grid.cell_volume() * (n * n * n) as f64)).sqrt();
        (0..self.grid.sites())
            .map(|s| {
                let x = self.grid.coords(s);
                let phase: f64 = (0..3).map(|j| mode.kappa[j] as f64 * x[j] as f64).sum::<f64>()
                    * std::f64::consts::TAU
                    / n as f64;
                norm * match mode.trig {
                    Trig::Cos => phase.cos(),
                    Trig::Sin => phase.sin(),
                }
            })
            .collect()
    }

    /// Unit-norm lattice field of mode `m`.
    pub fn field(&self, m: usize) -> GaugeField {
        let mut f = GaugeField::zeros(&self.grid, self.dim_g);
        self.add_field(m, 1.0, &mut f);
        f
    }

    fn add_field(&self, m: usize, scale: f64, out: &mut GaugeField) {
        let mode = &self.modes[m];
        for (s, p) in self.pattern(m).into_iter().enumerate() {
            for k in 0..AXES {
                out.at_mut(s, k)[mode.lie] += scale * p * mode.pol[k];
            }
        }
    }

    /// Cauchy data of the mode amplitudes `z`.
    pub fn embed(&self, z: &[Complex64]) -> Result<CauchyData, FockError> {
        if z.len() != self.len() {
            return Err(FockError::DimensionMismatch { expected: self.len(), found: z.len() });
        }
        let mut c = CauchyData::zeros(&self.grid, self.dim_g);
        for (m, zm) in z.iter().enumerate() {
            let w = self.modes[m].omega;
            let (q, p) = (std::f64::consts::SQRT_2 * zm.re, std::f64::consts::SQRT_2 * zm.im);
            self.add_field(m, q / w.sqrt(), &mut c.a);
            self.add_field(m, p * w.sqrt(), &mut c.e);
        }
        Ok(c)
    }

    /// Mode amplitudes of the orthogonal projection of `c` onto the span.
    pub fn project(&self, c: &CauchyData) -> Result<Vec<Complex64>, FockError> {
        (0..self.len())
            .map(|m| {
                let f = self.field(m);
                let w = self.modes[m].omega;
                let q = w.sqrt() * f.inner(&c.a, &self.grid);
                let p = f.inner(&c.e, &self.grid) / w.sqrt();
                Ok(Complex64::new(q, p) / std::f64::consts::SQRT_2)
            })
            .collect()
    }
}
