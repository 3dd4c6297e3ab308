use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::U_RANGE_FRACTION;
use crate::error::{Error, Result};
use crate::solver::min_n_trunc;
use crate::theory::{default_m_grid, M_RANGE};

/// Largest β accepted by the sweeps.
pub const BETA_CAP: f64 = 0.999;

/// One sweep, as read from a TOML file. Every field has a default, so an
/// empty file is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub betas: Vec<f64>,
    pub n_trunc: usize,
    pub x_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub a_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub m_grid: Vec<f64>,
    /// Highest coefficient index compared by `compare`.
    pub compare_range: usize,
    pub outputs: PathBuf,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            betas: vec![0.0],
            n_trunc: 400,
            x_max: 300.0,
            tol: 1e-10,
            max_iter: 500,
            a_grid: vec![25.0, 50.0, 100.0],
            x_grid: vec![50.0, 100.0, 150.0, 200.0, 250.0, 270.0],
            m_grid: default_m_grid(),
            compare_range: 150,
            outputs: PathBuf::from("out"),
            workers: 1,
        }
    }
}

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn check_grid(field: &str, grid: &[f64], lo_exclusive: f64, hi: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(bad(field, "grid is empty"));
    }
    if let Some(v) = grid.iter().find(|v| !(**v > lo_exclusive && **v <= hi)) {
        return Err(bad(field, format!("value {v} outside ({lo_exclusive}, {hi}]")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| bad("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(bad("betas", "no β values given"));
        }
        if let Some(b) = self.betas.iter().find(|b| !(0.0..=BETA_CAP).contains(*b)) {
            return Err(bad("betas", format!("β = {b} outside [0, {BETA_CAP}]")));
        }
        if !(self.x_max > 1.0 && self.x_max.is_finite()) {
            return Err(bad("x_max", format!("must be a finite value above 1, got {}", self.x_max)));
        }
        let need = min_n_trunc(self.x_max);
        if self.n_trunc < need {
            return Err(bad("n_trunc", format!("{} is below {need}, the minimum for x_max = {}", self.n_trunc, self.x_max)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(bad("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(bad("max_iter", "must be at least 1"));
        }
        check_grid("a_grid", &self.a_grid, 0.0, f64::MAX)?;
        check_grid("x_grid", &self.x_grid, 0.0, U_RANGE_FRACTION * self.x_max)?;
        if self.m_grid.is_empty() {
            return Err(bad("m_grid", "grid is empty"));
        }
        if let Some(m) = self.m_grid.iter().find(|m| !(M_RANGE.0..=M_RANGE.1).contains(*m)) {
            return Err(bad("m_grid", format!("m = {m} outside [{}, {}]", M_RANGE.0, M_RANGE.1)));
        }
        if self.m_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(bad("m_grid", "must be strictly increasing"));
        }
        if self.compare_range < 2 {
            return Err(bad("compare_range", "must be at least 2"));
        }
        if self.workers == 0 {
            return Err(bad("workers", "must be at least 1"));
        }
        Ok(())
    }

    /// Requires every `a` to sit inside the trusted diagnostic range.
    pub fn validate_trusted_a_grid(&self) -> Result<()> {
        let limit = crate::solver::model::TRUSTED_DIAG_FRACTION * self.x_max;
        check_grid("a_grid", &self.a_grid, 0.0, limit)
    }

    /// SHA-256 of the fields that determine the numbers. The output
    /// directory and worker count are left out.
    pub fn hash(&self) -> String {
        let mut key = self.clone();
        key.outputs = PathBuf::new();
        key.workers = 1;
        let text = toml::to_string(&key).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
