//! Flat TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use furry_core::dirac::Tolerances;
use furry_core::furry::{FurryConfig, DEFAULT_DIM_CAP};

/// Largest coupling accepted in `gamma_list`.
pub const GAMMA_LIST_MAX: f64 = 0.6;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kappa: i32,
    pub n: usize,
    pub map_scale: f64,
    pub gamma_list: Vec<f64>,
    pub series_order: usize,
    pub m_nodes: usize,
    pub margin: f64,
    pub n_particles: usize,
    pub z_charge: f64,
    pub n_plus: usize,
    pub antisymmetrize: bool,
    pub tol_gap: f64,
    pub tol_diag: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kappa: -1,
            n: 200,
            map_scale: 1.0,
            gamma_list: vec![0.1, 0.2, 0.3],
            series_order: 12,
            m_nodes: 64,
            margin: 0.5,
            n_particles: 2,
            z_charge: 2.0,
            n_plus: 20,
            antisymmetrize: false,
            tol_gap: 1e-6,
            tol_diag: 1e-4,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.kappa == 0 {
            return fail("kappa must be nonzero".into());
        }
        if self.n < 8 {
            return fail(format!("n = {} must be at least 8", self.n));
        }
        if !(self.map_scale > 0.0 && self.map_scale.is_finite()) {
            return fail(format!("map_scale = {} must be positive", self.map_scale));
        }
        if let Some(g) = self
            .gamma_list
            .iter()
            .find(|g| !(g.is_finite() && (0.0..GAMMA_LIST_MAX).contains(*g)))
        {
            return fail(format!("gamma {g} outside [0, {GAMMA_LIST_MAX})"));
        }
        if self.series_order < 1 {
            return fail("series_order must be at least 1".into());
        }
        if self.m_nodes < 16 || !self.m_nodes.is_multiple_of(2) {
            return fail(format!(
                "m_nodes = {} must be even and at least 16",
                self.m_nodes
            ));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return fail(format!("margin = {} must be positive", self.margin));
        }
        if self.n_particles < 1 {
            return fail("n_particles must be at least 1".into());
        }
        if !(self.z_charge > 0.0 && self.z_charge.is_finite()) {
            return fail(format!("z_charge = {} must be positive", self.z_charge));
        }
        // the upper limit depends on the discrete spectrum and is checked where it is used
        if self.n_plus < 1 {
            return fail("n_plus must be at least 1".into());
        }
        for (name, tol) in [("tol_gap", self.tol_gap), ("tol_diag", self.tol_diag)] {
            if !(tol > 0.0 && tol.is_finite()) {
                return fail(format!("{name} = {tol} must be positive"));
            }
        }
        Ok(())
    }

    pub fn furry(&self) -> FurryConfig {
        FurryConfig {
            n_particles: self.n_particles,
            z_charge: self.z_charge,
            n_plus: self.n_plus,
            antisymmetrize: self.antisymmetrize,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            tol_gap: self.tol_gap,
            tol_diag: self.tol_diag,
        }
    }

    /// SHA-256 of the canonical JSON form of every setting except the output
    /// location, so relocated runs share a hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("tol_gapp = 1e-6\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
    }

    #[test]
    fn out_of_range_gamma_is_rejected() {
        let err = RunConfig::from_toml_str("gamma_list = [0.1, 0.7]\n").unwrap_err();
        assert!(err.to_string().contains("0.7"), "{err}");
    }

    #[test]
    fn wrong_types_are_rejected() {
        assert!(RunConfig::from_toml_str("n = \"many\"\n").is_err());
        assert!(RunConfig::from_toml_str("antisymmetrize = 1\n").is_err());
    }

    #[test]
    fn hash_ignores_output_location_only() {
        let a = RunConfig::default();
        let b = RunConfig {
            output_dir: PathBuf::from("elsewhere"),
            ..RunConfig::default()
        };
        let c = RunConfig {
            seed: 9,
            ..RunConfig::default()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
