use mlab_core::shooting::SolverOptions;
use mlab_core::{Precision, StructureParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::Failure;

/// How the appendix checks choose `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoPolicy {
    /// Fixed values of `rho`.
    Absolute { values: Vec<f64> },
    /// `rho = K eps^(3 mbar - 1) 10^-d` for each decade `d` in `decades`.
    Regime { k: f64, decades: Vec<f64> },
}

impl RhoPolicy {
    pub fn rhos(&self, params: &StructureParams) -> Vec<f64> {
        match self {
            Self::Absolute { values } => values.clone(),
            Self::Regime { k, decades } => {
                let scale = k * params.epsilon().powf(3.0 * params.mbar() - 1.0);
                decades.iter().map(|d| scale * 10f64.powf(-d)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    /// `[n_theta, n_lambda, n_T]`; any zero disables shooting.
    pub seed_grid: [usize; 3],
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            seed_grid: [6, 4, 2],
            max_iter: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m: u32,
    pub epsilon_list: Vec<f64>,
    pub rho_policy: RhoPolicy,
    #[serde(default)]
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub plot: bool,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub precision: Precision,
}

impl ExperimentConfig {
    pub fn fixture(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            m: 5,
            epsilon_list: vec![0.2, 0.1],
            rho_policy: RhoPolicy::Regime {
                k: 1.0,
                decades: vec![3.0, 4.0, 5.0, 6.0],
            },
            solver: SolverConfig::default(),
            output_dir: output_dir.into(),
            plot: false,
            rng_seed: 7,
            precision: Precision::Standard,
        }
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("reading {}: {e}", path.display())))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.m < 5 || self.m % 2 == 0 {
            return Err(Failure::config(format!("m is odd and at least 5 (got {})", self.m)));
        }
        if self.epsilon_list.is_empty() {
            return Err(Failure::config("epsilon_list is empty"));
        }
        if self.epsilon_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Failure::config("epsilon values must be positive and finite"));
        }
        if self.epsilon_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Failure::config("epsilon_list must be strictly descending"));
        }
        let bad_rho = match &self.rho_policy {
            RhoPolicy::Absolute { values } => values.iter().any(|r| !(*r > 0.0 && r.is_finite())),
            RhoPolicy::Regime { k, decades } => !(*k > 0.0) || decades.iter().any(|d| !d.is_finite()),
        };
        if bad_rho {
            return Err(Failure::config("rho values must be positive and finite"));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(Failure::config(format!("solver tol {} outside (0, 1)", self.solver.tol)));
        }
        if self.solver.max_iter == 0 {
            return Err(Failure::config("solver max_iter must be positive"));
        }
        Ok(())
    }

    pub fn params(&self, eps: f64) -> Result<StructureParams, Failure> {
        StructureParams::new(self.m, eps)
            .map(|p| p.with_precision(self.precision))
            .map_err(|e| Failure::config(e.to_string()))
    }

    pub fn solver_options(&self, params: &StructureParams) -> SolverOptions {
        let mut o = SolverOptions::new(params);
        o.tol = self.solver.tol;
        o.integration_tol = o.integration_tol.min(self.solver.tol / 1000.0);
        o.max_iter = self.solver.max_iter;
        o
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses `"24x12x3"` (or `"24,12,3"`).
pub fn parse_seed_grid(s: &str) -> Result<[usize; 3], Failure> {
    let parts: Vec<&str> = s.split(['x', 'X', ',']).map(str::trim).collect();
    let bad = || Failure::config(format!("seed grid {s:?} is not of the form NxMxK"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| bad())?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_m_is_rejected() {
        let mut c = ExperimentConfig::fixture("out");
        c.m = 4;
        let e = c.validate().unwrap_err();
        assert!(e.message.contains("m is odd"), "{}", e.message);
    }

    #[test]
    fn ascending_eps_is_rejected() {
        let mut c = ExperimentConfig::fixture("out");
        c.epsilon_list = vec![0.1, 0.2];
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip_keeps_the_hash() {
        let c = ExperimentConfig::fixture("out");
        let text = toml::to_string(&c).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let mut d = c.clone();
        d.rng_seed += 1;
        assert_ne!(d.hash(), c.hash());
    }

    #[test]
    fn seed_grid_forms() {
        assert_eq!(parse_seed_grid("24x12x3").unwrap(), [24, 12, 3]);
        assert_eq!(parse_seed_grid("1,2,3").unwrap(), [1, 2, 3]);
        assert!(parse_seed_grid("4x4").is_err());
    }

    #[test]
    fn regime_rhos_scale_with_eps() {
        let p = StructureParams::new(5, 0.1).unwrap();
        let r = RhoPolicy::Regime {
            k: 2.0,
            decades: vec![0.0, 1.0],
        }
        .rhos(&p);
        let scale = 2.0 * 0.1f64.powf(6.5);
        assert!((r[0] / scale - 1.0).abs() < 1e-15);
        assert!((r[1] / scale - 0.1).abs() < 1e-15);
    }
}
