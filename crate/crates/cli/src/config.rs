//! Run configuration: an optional TOML file of `key = value` pairs, with
//! command-line flags taking precedence.

use std::path::{Path, PathBuf};

use ranger_core::homerange::Method;
use ranger_core::variogram::Family;
use ranger_core::Window;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Home-range probability levels.
    pub levels: Vec<f64>,
    /// Monte Carlo simulations per envelope test.
    pub simulations: usize,
    pub seed: u64,
    pub r_max: Option<f64>,
    pub n_r: usize,
    /// Density grid cells per axis.
    pub kde_grid: usize,
    /// Quadrature cells per axis for intensity fits.
    pub quad_resolution: usize,
    pub families: Vec<String>,
    pub methods: Vec<String>,
    pub anisotropic: bool,
    pub max_lag_fraction: f64,
    pub min_pairs: u64,
    /// Calendar months of core-range co-occupancy a pair needs.
    pub min_shared_months: usize,
    pub theoretical_reference: bool,
    /// Observation window `[x_min, x_max, y_min, y_max]` in meters; the
    /// padded bounding box of each pair's relocations when absent.
    pub window: Option<[f64; 4]>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: None,
            levels: vec![0.95, 0.50],
            simulations: 2500,
            seed: 0,
            r_max: None,
            n_r: 101,
            kde_grid: 256,
            quad_resolution: 64,
            families: vec!["IID".into(), "OU".into(), "OUF".into()],
            methods: vec!["MCP".into(), "KDE".into(), "AKDE".into()],
            anisotropic: false,
            max_lag_fraction: 0.5,
            min_pairs: 30,
            min_shared_months: 5,
            theoretical_reference: false,
            window: None,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return bad(format!("levels must lie in (0, 1), got {:?}", self.levels));
        }
        if self.simulations == 0 {
            return bad("simulations must be at least 1".into());
        }
        if self.n_r < 2 || self.kde_grid == 0 || self.quad_resolution == 0 {
            return bad("n_r must be at least 2 and grid sizes positive".into());
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("r_max must be positive, got {r}"));
            }
        }
        if !(self.max_lag_fraction > 0.0 && self.max_lag_fraction <= 1.0) {
            return bad(format!("max_lag_fraction must lie in (0, 1], got {}", self.max_lag_fraction));
        }
        if let Some(w) = self.window {
            Window::new(w[0], w[1], w[2], w[3]).map_err(|e| CliError::Usage(format!("window: {e}")))?;
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        self.family_list()?;
        self.method_list()?;
        Ok(())
    }

    pub fn family_list(&self) -> Result<Vec<Family>, CliError> {
        if self.families.is_empty() {
            return Err(CliError::Usage("no model families given".into()));
        }
        self.families.iter().map(|f| f.parse().map_err(CliError::Usage)).collect()
    }

    pub fn method_list(&self) -> Result<Vec<Method>, CliError> {
        self.methods
            .iter()
            .map(|m| match m.to_ascii_uppercase().as_str() {
                "MCP" => Ok(Method::Mcp),
                "KDE" => Ok(Method::Kde),
                "AKDE" => Ok(Method::Akde),
                other => Err(CliError::Usage(format!("unknown home-range method `{other}`"))),
            })
            .collect()
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        self.input.as_deref().ok_or_else(|| CliError::Usage("no input given (--input or `input` in the config)".into()))
    }

    pub fn out(&self) -> Result<&Path, CliError> {
        self.out.as_deref().ok_or_else(|| CliError::Usage("no output given (--out or `out` in the config)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_defaults() {
        let c: RunConfig = toml::from_str("simulations = 99\nlevels = [0.9]\nseed = 7\n").unwrap();
        assert_eq!((c.simulations, c.levels.clone(), c.seed), (99, vec![0.9], 7));
        assert_eq!(c.n_r, 101);
        assert!(c.validate().is_ok());
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn validation_errors_are_usage() {
        let c = RunConfig { levels: vec![1.0], ..Default::default() };
        assert_eq!(c.validate().unwrap_err().exit_code(), 1);
        let c = RunConfig { families: vec!["XYZ".into()], ..Default::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { simulations: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
