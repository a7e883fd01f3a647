use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use ymgap_core::propagator::StepMethod;

/// Run configuration. Every field has a default; unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `su2`, `su3`, `soN`, ...
    pub gauge_group: String,
    pub grid: GridConfig,
    pub modes: ModesConfig,
    pub fock: FockConfig,
    pub solver: SolverSettings,
    pub coupling: f64,
    pub evolve: EvolveConfig,
    pub helmholtz: HelmholtzConfig,
    pub spectrum: SpectrumConfig,
    pub propagate: PropagateConfig,
    pub gap_scan: GapScanConfig,
    /// Required by every randomized subcommand, unless `--seed` is given.
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gauge_group: "su2".into(),
            grid: GridConfig::default(),
            modes: ModesConfig::default(),
            fock: FockConfig::default(),
            solver: SolverSettings::default(),
            coupling: 1.0,
            evolve: EvolveConfig::default(),
            helmholtz: HelmholtzConfig::default(),
            spectrum: SpectrumConfig::default(),
            propagate: PropagateConfig::default(),
            gap_scan: GapScanConfig::default(),
            seed: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub h: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: 8, h: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    #[serde(rename = "M")]
    pub count: usize,
    pub k_max: usize,
}

impl Default for ModesConfig {
    fn default() -> Self {
        ModesConfig { count: 3, k_max: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FockConfig {
    pub n_max: usize,
    pub ordering_s: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig { n_max: 6, ordering_s: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: f64,
    /// Defaults to ten times the number of unknowns.
    pub max_iter: Option<usize>,
    pub deflate_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol: 1e-8, max_iter: None, deflate_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub dt: f64,
    pub steps: usize,
    /// Scale of the random initial potential and electric field.
    pub amplitude: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { dt: 0.1, steps: 20, amplitude: 0.3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HelmholtzConfig {
    pub samples: usize,
    pub amplitude: f64,
}

impl Default for HelmholtzConfig {
    fn default() -> Self {
        HelmholtzConfig { samples: 3, amplitude: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Number of mini-max levels.
    pub minimax: usize,
    /// Random states for the lower-bound check.
    pub trials: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { minimax: 4, trials: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    Taylor,
    GaussHermite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagateConfig {
    pub t: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    pub quadrature: Quadrature,
    /// Taylor order cap, or Gauss-Hermite nodes per real dimension.
    pub order: usize,
    pub tol: f64,
    /// Initial and final mode amplitudes as `[re, im]` pairs; one per mode.
    pub z0: Vec<[f64; 2]>,
    pub zt: Vec<[f64; 2]>,
}

impl Default for PropagateConfig {
    fn default() -> Self {
        PropagateConfig {
            t: 1.0,
            steps: 64,
            quadrature: Quadrature::Taylor,
            order: 64,
            tol: 1e-15,
            z0: vec![[0.6, 0.2]],
            zt: vec![[0.5, -0.3]],
        }
    }
}

impl PropagateConfig {
    pub fn method(&self) -> StepMethod {
        match self.quadrature {
            Quadrature::Taylor => StepMethod::Taylor { max_order: self.order, tol: self.tol },
            Quadrature::GaussHermite => StepMethod::GaussHermite { order: self.order, tol: self.tol.max(1e-12) },
        }
    }
}

/// Scan lists; an empty list falls back to the single configured value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapScanConfig {
    #[serde(rename = "M")]
    pub modes: Vec<usize>,
    pub n_max: Vec<usize>,
    pub couplings: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            anyhow::anyhow!("config field `{field}`: {}", e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("grid.h", self.grid.h),
            ("solver.tol", self.solver.tol),
            ("evolve.dt", self.evolve.dt),
            ("propagate.tol", self.propagate.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bail!("config field `{name}`: must be positive and finite, got {v}");
            }
        }
        if self.grid.n < 2 {
            bail!("config field `grid.n`: need at least 2 sites per axis, got {}", self.grid.n);
        }
        if self.modes.count == 0 {
            bail!("config field `modes.M`: need at least one mode");
        }
        if self.fock.n_max == 0 {
            bail!("config field `fock.n_max`: must be positive");
        }
        if !(self.fock.ordering_s >= 0.0) {
            bail!("config field `fock.ordering_s`: must be nonnegative, got {}", self.fock.ordering_s);
        }
        if !self.coupling.is_finite() {
            bail!("config field `coupling`: must be finite");
        }
        if self.propagate.steps == 0 {
            bail!("config field `propagate.N`: must be positive");
        }
        if self.propagate.z0.len() != self.propagate.zt.len() || self.propagate.z0.is_empty() {
            bail!("config field `propagate.zt`: needs one amplitude per entry of `propagate.z0`");
        }
        if let Some(bad) = self.gap_scan.couplings.iter().find(|c| !c.is_finite()) {
            bail!("config field `gap_scan.couplings`: non-finite entry {bad}");
        }
        Ok(())
    }

    pub fn modes_list(&self) -> Vec<usize> {
        or_single(&self.gap_scan.modes, self.modes.count)
    }

    pub fn n_max_list(&self) -> Vec<usize> {
        or_single(&self.gap_scan.n_max, self.fock.n_max)
    }

    pub fn coupling_list(&self) -> Vec<f64> {
        or_single(&self.gap_scan.couplings, self.coupling)
    }
}

fn or_single<T: Clone>(list: &[T], single: T) -> Vec<T> {
    if list.is_empty() {
        vec![single]
    } else {
        list.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        let dir = tempfile::tempdir()?;
        let p = dir.path().join("c.json");
        std::fs::write(&p, text)?;
        RunConfig::load(&p)
    }

    #[test]
    fn empty_object_gives_defaults() {
        let c = parse("{}").unwrap();
        assert_eq!(c.gauge_group, "su2");
        assert_eq!(c.fock.n_max, 6);
        assert_eq!(c.modes.count, 3);
        assert!(c.seed.is_none());
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse(r#"{"fock": {"n_max": -3}}"#).unwrap_err().to_string();
        assert!(e.contains("fock.n_max"), "{e}");
        let e = parse(r#"{"grid": {"n": 8, "spacing": 1}}"#).unwrap_err().to_string();
        assert!(e.contains("grid"), "{e}");
        let e = parse(r#"{"grid": {"h": -1.0}}"#).unwrap_err().to_string();
        assert!(e.contains("grid.h"), "{e}");
    }

    #[test]
    fn scan_lists_fall_back() {
        let c = parse(r#"{"coupling": 0.25, "gap_scan": {"n_max": [4, 6]}}"#).unwrap();
        assert_eq!(c.coupling_list(), vec![0.25]);
        assert_eq!(c.n_max_list(), vec![4, 6]);
    }
}
