//! Finite-dimensional calculus for compact semisimple Lie algebras.
//!
//! An algebra is carried by its structure constants `c[i][j][k]`
//! (`[e_i, e_j] = Σ_k c[i][j][k] e_k`) together with the Killing metric
//! `e_i ⋆ e_j = −Tr(ad e_i · ad e_j)`. [`build_algebra`] always returns a
//! Killing-orthonormal basis, in which the structure constants are totally
//! antisymmetric and `ad X` is an antisymmetric matrix.

use nalgebra::{Complex, DMatrix};

use crate::error::LieError;

pub type Complex64 = Complex<f64>;

/// Tolerance used by the structural checks on built algebras.
pub const LIE_TOL: f64 = 1e-12;

/// Supported matrix families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GroupFamily {
    /// Special unitary `su(N)`.
    Su,
    /// Special orthogonal `so(N)`.
    So,
}

impl std::str::FromStr for GroupFamily {
    type Err = LieError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "su" => Ok(GroupFamily::Su),
            "so" => Ok(GroupFamily::So),
            other => Err(LieError::UnsupportedGroup(other.to_string())),
        }
    }
}

/// Structure constants, Killing metric and (when available) the defining
/// representation of a real Lie algebra in a fixed basis.
#[derive(Debug, Clone)]
pub struct LieAlgebraSpec {
    label: String,
    dim: usize,
    /// Flattened `c[i][j][k]`, index `(i * dim + j) * dim + k`.
    c: Vec<f64>,
    metric: DMatrix<f64>,
    /// Basis elements as matrices of the defining representation.
    generators: Option<Vec<DMatrix<Complex64>>>,
    /// Gram matrix `Re Tr(T_a† T_b)` of the generators, inverted.
    gram_inv: Option<DMatrix<f64>>,
    coupling: f64,
}

impl LieAlgebraSpec {
    /// Builds an algebra from raw structure constants in the given basis.
    ///
    /// Checks antisymmetry in the first two indices and the Jacobi identity;
    /// the Killing metric is computed but positivity is not required here
    /// (an abelian diagnostic algebra is allowed). Use [`Self::orthonormalized`]
    /// to demand semisimplicity.
    pub fn from_structure_constants(
        label: impl Into<String>,
        dim: usize,
        c: Vec<f64>,
    ) -> Result<Self, LieError> {
        if dim == 0 || c.len() != dim * dim * dim {
            return Err(LieError::LengthMismatch {
                expected: dim * dim * dim,
                found: c.len(),
            });
        }
        let mut alg = LieAlgebraSpec {
            label: label.into(),
            dim,
            c,
            metric: DMatrix::zeros(dim, dim),
            generators: None,
            gram_inv: None,
            coupling: 1.0,
        };
        let anti = alg.antisymmetry_residual();
        if anti > LIE_TOL {
            return Err(LieError::NotAntisymmetric(anti));
        }
        let jac = alg.jacobi_residual();
        if jac > 1e-10 {
            return Err(LieError::JacobiViolated(jac));
        }
        alg.metric = alg.killing_metric_from_constants();
        Ok(alg)
    }

    fn from_generators(label: String, generators: Vec<DMatrix<Complex64>>) -> Result<Self, LieError> {
        let dim = generators.len();
        let gram = DMatrix::from_fn(dim, dim, |a, b| trace_form(&generators[a], &generators[b]));
        let gram_inv = gram
            .clone()
            .try_inverse()
            .ok_or(LieError::DegenerateMetric(0.0))?;
        let mut c = vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let comm = &generators[i] * &generators[j] - &generators[j] * &generators[i];
                let coeffs = project_coefficients(&generators, &gram_inv, &comm);
                for (k, v) in coeffs.into_iter().enumerate() {
                    c[(i * dim + j) * dim + k] = v;
                }
            }
        }
        let mut alg = Self::from_structure_constants(label, dim, c)?;
        alg.generators = Some(generators);
        alg.gram_inv = Some(gram_inv);
        Ok(alg)
    }

    /// Returns the same algebra in a Killing-orthonormal basis.
    ///
    /// Fails with [`LieError::DegenerateMetric`] when the Killing form is not
    /// positive definite (non-semisimple or non-compact input).
    pub fn orthonormalized(&self) -> Result<Self, LieError> {
        let dim = self.dim;
        let sym = (&self.metric + self.metric.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if !(min_eig > 1e-10 * scale) {
            return Err(LieError::DegenerateMetric(min_eig));
        }
        let chol = sym.cholesky().ok_or(LieError::DegenerateMetric(min_eig))?;
        let lower = chol.l();
        let r = lower
            .clone()
            .try_inverse()
            .ok_or(LieError::DegenerateMetric(min_eig))?;
        // new e'_a = Σ_b r[a][b] e_b, old e_k = Σ_m lower[k][m] e'_m
        let mut c = vec![0.0; dim * dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                for i in 0..dim {
                    let rai = r[(a, i)];
                    if rai == 0.0 {
                        continue;
                    }
                    for j in 0..dim {
                        let rbj = r[(b, j)];
                        if rbj == 0.0 {
                            continue;
                        }
                        for k in 0..dim {
                            let cijk = self.c[(i * dim + j) * dim + k];
                            if cijk == 0.0 {
                                continue;
                            }
                            for m in 0..dim {
                                c[(a * dim + b) * dim + m] += rai * rbj * cijk * lower[(k, m)];
                            }
                        }
                    }
                }
            }
        }
        let generators = self.generators.as_ref().map(|gens| {
            (0..dim)
                .map(|a| {
                    let mut t = DMatrix::zeros(gens[0].nrows(), gens[0].ncols());
                    for b in 0..dim {
                        if r[(a, b)] != 0.0 {
                            t += &gens[b] * Complex64::new(r[(a, b)], 0.0);
                        }
                    }
                    t
                })
                .collect::<Vec<_>>()
        });
        let mut out = LieAlgebraSpec {
            label: self.label.clone(),
            dim,
            c,
            metric: DMatrix::zeros(dim, dim),
            gram_inv: generators.as_ref().map(|gens| {
                DMatrix::from_fn(dim, dim, |a, b| trace_form(&gens[a], &gens[b]))
                    .try_inverse()
                    .expect("generator Gram matrix stays invertible under a basis change")
            }),
            generators,
            coupling: self.coupling,
        };
        out.metric = out.killing_metric_from_constants();
        Ok(out)
    }

    /// Copy with the bracket scaled by `coupling`. The Killing metric and
    /// [`Self::structure_constants`] are left untouched.
    pub fn with_coupling(&self, coupling: f64) -> Self {
        let mut out = self.clone();
        out.coupling = coupling;
        out
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Unscaled structure constant `c[i][j][k]`.
    #[inline]
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    /// Flattened unscaled structure constants.
    pub fn structure_constants(&self) -> &[f64] {
        &self.c
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn generators(&self) -> Option<&[DMatrix<Complex64>]> {
        self.generators.as_deref()
    }

    /// Size of the defining representation, if one is attached.
    pub fn rep_dim(&self) -> Option<usize> {
        self.generators.as_ref().map(|g| g[0].nrows())
    }

    /// `out += coupling · [x, y]`.
    #[inline]
    pub fn bracket_add(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..d {
                let xy = xi * y[j] * self.coupling;
                if xy == 0.0 {
                    continue;
                }
                let base = (i * d + j) * d;
                for k in 0..d {
                    out[k] += xy * self.c[base + k];
                }
            }
        }
    }

    /// `coupling · [x, y]`.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.bracket_add(x, y, &mut out);
        out
    }

    /// `out[j] += coupling · Σ_{i,k} c[i][j][k] x_i v_k`, the transpose of
    /// `y ↦ [x, y]`. In an orthonormal basis this equals `−[x, v]`.
    #[inline]
    pub fn bracket_transpose_add(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let xi = x[i] * self.coupling;
            if xi == 0.0 {
                continue;
            }
            for j in 0..d {
                let base = (i * d + j) * d;
                let mut acc = 0.0;
                for k in 0..d {
                    acc += self.c[base + k] * v[k];
                }
                out[j] += xi * acc;
            }
        }
    }

    /// Matrix of `ad X` acting on coefficient vectors: `(ad X)[k][j] = Σ_i X_i c[i][j][k]`.
    pub fn ad_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |k, j| (0..d).map(|i| x[i] * self.structure_constant(i, j, k)).sum())
    }

    /// `X ⋆ Y = −Tr(ad X · ad Y) = Xᵀ · metric · Y`.
    pub fn killing_product(&self, x: &[f64], y: &[f64]) -> Result<f64, LieError> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(LieError::LengthMismatch {
                expected: self.dim,
                found: if x.len() != self.dim { x.len() } else { y.len() },
            });
        }
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += x[i] * self.metric[(i, j)] * y[j];
            }
        }
        Ok(s)
    }

    /// `M[i][l] = Σ_{j,k} c[i][j][k] c[l][j][k]`.
    pub fn casimir_contract(&self) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |i, l| {
            let mut s = 0.0;
            for j in 0..d {
                for k in 0..d {
                    s += self.structure_constant(i, j, k) * self.structure_constant(l, j, k);
                }
            }
            s
        })
    }

    fn killing_metric_from_constants(&self) -> DMatrix<f64> {
        let d = self.dim;
        // −Tr(ad e_a ad e_b) = −Σ_{j,k} c[a][j][k] c[b][k][j]
        DMatrix::from_fn(d, d, |a, b| {
            let mut s = 0.0;
            for j in 0..d {
                for k in 0..d {
                    s += self.structure_constant(a, j, k) * self.structure_constant(b, k, j);
                }
            }
            -s
        })
    }

    /// Largest `|c[i][j][k] + c[j][i][k]|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut r = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    r = r.max((self.structure_constant(i, j, k) + self.structure_constant(j, i, k)).abs());
                }
            }
        }
        r
    }

    /// Largest deviation from antisymmetry under every transposition of
    /// `(i, j, k)`; meaningful in an orthonormal basis.
    pub fn total_antisymmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut r = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let v = self.structure_constant(i, j, k);
                    r = r
                        .max((v + self.structure_constant(j, i, k)).abs())
                        .max((v + self.structure_constant(i, k, j)).abs())
                        .max((v + self.structure_constant(k, j, i)).abs());
                }
            }
        }
        r
    }

    /// Largest Jacobi-identity residual over all `(i, j, k, l)`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let c = |i, j, k| self.structure_constant(i, j, k);
        let mut r = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = 0.0;
                        for m in 0..d {
                            s += c(i, j, m) * c(m, k, l) + c(j, k, m) * c(m, i, l) + c(k, i, m) * c(m, j, l);
                        }
                        r = r.max(s.abs());
                    }
                }
            }
        }
        r
    }

    /// Largest `|metric − identity|` entry.
    pub fn metric_identity_residual(&self) -> f64 {
        let d = self.dim;
        let mut r = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                r = r.max((self.metric[(i, j)] - target).abs());
            }
        }
        r
    }

    /// Smallest eigenvalue of the symmetrized Killing metric.
    pub fn metric_min_eigenvalue(&self) -> f64 {
        let sym = (&self.metric + self.metric.transpose()) * 0.5;
        sym.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Defining-representation matrix `Σ_i x_i T_i`.
    pub fn to_matrix(&self, x: &[f64]) -> Result<DMatrix<Complex64>, LieError> {
        let gens = self.generators.as_ref().ok_or(LieError::NoRepresentation)?;
        let mut m = DMatrix::zeros(gens[0].nrows(), gens[0].ncols());
        for (xi, t) in x.iter().zip(gens) {
            if *xi != 0.0 {
                m += t * Complex64::new(*xi, 0.0);
            }
        }
        Ok(m)
    }

    /// Coefficients of the orthogonal (trace-form) projection of `m` onto the
    /// real span of the generators.
    pub fn from_matrix(&self, m: &DMatrix<Complex64>) -> Result<Vec<f64>, LieError> {
        let gens = self.generators.as_ref().ok_or(LieError::NoRepresentation)?;
        let gram_inv = self.gram_inv.as_ref().ok_or(LieError::NoRepresentation)?;
        Ok(project_coefficients(gens, gram_inv, m))
    }
}

fn trace_form(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    // Re Tr(a† b)
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn project_coefficients(
    gens: &[DMatrix<Complex64>],
    gram_inv: &DMatrix<f64>,
    m: &DMatrix<Complex64>,
) -> Vec<f64> {
    let d = gens.len();
    let rhs: Vec<f64> = gens.iter().map(|t| trace_form(t, m)).collect();
    (0..d)
        .map(|a| (0..d).map(|b| gram_inv[(a, b)] * rhs[b]).sum())
        .collect()
}

/// Anti-Hermitian basis `−i λ_a / 2` of `su(N)` built from generalized
/// Gell-Mann matrices, ordered as `λ_{S,jk}, λ_{A,jk}` for `j < k` followed by
/// the diagonal `λ_{D,k−1}` for each `k = 2..N`.
pub fn su_generators(n: usize) -> Vec<DMatrix<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let half_i = Complex64::new(0.0, -0.5);
    let mut out = Vec::with_capacity(n * n - 1);
    for k in 1..n {
        for j in 0..k {
            let mut s = DMatrix::from_element(n, n, zero);
            s[(j, k)] = Complex64::new(1.0, 0.0);
            s[(k, j)] = Complex64::new(1.0, 0.0);
            out.push(s * half_i);
            let mut a = DMatrix::from_element(n, n, zero);
            a[(j, k)] = Complex64::new(0.0, -1.0);
            a[(k, j)] = Complex64::new(0.0, 1.0);
            out.push(a * half_i);
        }
        let l = k as f64;
        let norm = (2.0 / (l * (l + 1.0))).sqrt();
        let mut dmat = DMatrix::from_element(n, n, zero);
        for j in 0..k {
            dmat[(j, j)] = Complex64::new(norm, 0.0);
        }
        dmat[(k, k)] = Complex64::new(-l * norm, 0.0);
        out.push(dmat * half_i);
    }
    out
}

/// Elementary antisymmetric basis `E_pq − E_qp`, `p < q`, of `so(N)`.
pub fn so_generators(n: usize) -> Vec<DMatrix<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for p in 0..n {
        for q in (p + 1)..n {
            let mut m = DMatrix::from_element(n, n, zero);
            m[(p, q)] = Complex64::new(1.0, 0.0);
            m[(q, p)] = Complex64::new(-1.0, 0.0);
            out.push(m);
        }
    }
    out
}

/// Builds `su(N)` (`N ≥ 2`) or `so(N)` (`N ≥ 3`) in a Killing-orthonormal basis.
pub fn build_algebra(group_id: &str, n: usize) -> Result<LieAlgebraSpec, LieError> {
    let family: GroupFamily = group_id.parse()?;
    let (gens, label) = match family {
        GroupFamily::Su => {
            if n < 2 {
                return Err(LieError::BadRank { family: "su", n, min: 2 });
            }
            (su_generators(n), format!("su{n}"))
        }
        GroupFamily::So => {
            if n < 3 {
                return Err(LieError::BadRank { family: "so", n, min: 3 });
            }
            (so_generators(n), format!("so{n}"))
        }
    };
    LieAlgebraSpec::from_generators(label, gens)?.orthonormalized()
}

/// Un-normalized `su(N)` in the `−iλ/2` basis, before orthonormalization.
pub fn build_algebra_raw(group_id: &str, n: usize) -> Result<LieAlgebraSpec, LieError> {
    let family: GroupFamily = group_id.parse()?;
    let gens = match family {
        GroupFamily::Su if n >= 2 => su_generators(n),
        GroupFamily::So if n >= 3 => so_generators(n),
        GroupFamily::Su => return Err(LieError::BadRank { family: "su", n, min: 2 }),
        GroupFamily::So => return Err(LieError::BadRank { family: "so", n, min: 3 }),
    };
    let label = match family {
        GroupFamily::Su => format!("su{n}"),
        GroupFamily::So => format!("so{n}"),
    };
    LieAlgebraSpec::from_generators(label, gens)
}

/// Parses identifiers such as `"su2"`, `"su3"`, `"so5"` and builds the algebra.
pub fn algebra_from_id(id: &str) -> Result<LieAlgebraSpec, LieError> {
    let split = id
        .find(|ch: char| ch.is_ascii_digit())
        .ok_or_else(|| LieError::UnsupportedGroup(id.to_string()))?;
    let (family, rank) = id.split_at(split);
    let n: usize = rank
        .parse()
        .map_err(|_| LieError::UnsupportedGroup(id.to_string()))?;
    build_algebra(family, n)
}

/// Summary of the structural checks on an algebra.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LieCheck {
    pub label: String,
    pub dim: usize,
    pub jacobi_residual: f64,
    pub total_antisymmetry_residual: f64,
    pub metric_identity_residual: f64,
    pub casimir_identity_residual: f64,
    pub metric_min_eigenvalue: f64,
}

impl LieCheck {
    pub fn passed(&self) -> bool {
        self.jacobi_residual <= LIE_TOL
            && self.total_antisymmetry_residual <= LIE_TOL
            && self.metric_identity_residual <= LIE_TOL
            && self.casimir_identity_residual <= LIE_TOL
            && self.metric_min_eigenvalue > 0.0
    }
}

pub fn check_algebra(g: &LieAlgebraSpec) -> LieCheck {
    let cas = g.casimir_contract();
    let d = g.dim();
    let mut cas_res = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let t = if i == j { 1.0 } else { 0.0 };
            cas_res = cas_res.max((cas[(i, j)] - t).abs());
        }
    }
    LieCheck {
        label: g.label().to_string(),
        dim: d,
        jacobi_residual: g.jacobi_residual(),
        total_antisymmetry_residual: g.total_antisymmetry_residual(),
        metric_identity_residual: g.metric_identity_residual(),
        casimir_identity_residual: cas_res,
        metric_min_eigenvalue: g.metric_min_eigenvalue(),
    }
}
