//! Config file schema. Every table is optional and every field has a
//! default, so an empty file (or no file) runs the default sweep.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::output::Failure;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub tol_scale: Option<f64>,
    pub kdv_phase: KdvPhase,
    pub kdv_compare: KdvCompare,
    pub rmt_phase: RmtPhase,
    pub op_table: OpTable,
    pub toda_run: TodaRun,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::validation(format!("config: {e}")))
    }
}

/// Initial data `u0(λx)` for the KdV commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    /// `"sech2"` or `"table"`.
    pub kind: String,
    /// Two-column `x, u0` file, read when `kind = "table"`.
    pub file: Option<PathBuf>,
    pub lambda: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self { kind: "sech2".into(), file: None, lambda: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KdvPhase {
    pub data: DataSpec,
    pub t_grid: Vec<f64>,
}

impl Default for KdvPhase {
    fn default() -> Self {
        Self { data: DataSpec::default(), t_grid: vec![0.22, 0.23, 0.24, 0.25, 0.26, 0.27, 0.28, 0.29] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KdvCompare {
    pub data: DataSpec,
    /// `"hopf"` (needs `t < t_c`) or `"leading_edge"` (needs `t > t_c`).
    pub window: String,
    pub t: f64,
    pub eps: Vec<f64>,
    /// Half-width of the Hopf window around `x = 0`.
    pub hopf_halfwidth: f64,
    /// Leading-edge window is `|x - x⁻| ≤ edge_width ε^{2/3}`.
    pub edge_width: f64,
    pub half_period: f64,
    pub log2_points: u32,
    pub samples: usize,
}

impl Default for KdvCompare {
    fn default() -> Self {
        Self {
            data: DataSpec::default(),
            window: "hopf".into(),
            t: 0.1,
            eps: vec![0.2, 0.1, 0.05],
            hopf_halfwidth: 6.0,
            edge_width: 5.0,
            half_period: 20.0,
            log2_points: 12,
            samples: 801,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmtPhase {
    pub x_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
}

impl Default for RmtPhase {
    fn default() -> Self {
        Self { x_grid: vec![0.0, 0.5, 1.0], t_grid: vec![0.0, 0.5, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpTable {
    /// Quartic field `V_{x,t}`; `x = t = 0` is the Gaussian `s²/2`.
    pub x: f64,
    pub t: f64,
    /// `N` in the weight `e^{-N V}`.
    pub n_scale: usize,
    pub n_max: usize,
    /// `"none"`, `"regular"`, `"interior"` or `"edge"`.
    pub asymptotics: String,
    pub digits: usize,
}

impl Default for OpTable {
    fn default() -> Self {
        Self { x: 0.0, t: 0.0, n_scale: 20, n_max: 20, asymptotics: "regular".into(), digits: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TodaRun {
    /// `"gaussian"` or `"table"` (columns `n, gamma, beta`).
    pub initial: String,
    pub file: Option<PathBuf>,
    pub eps: f64,
    /// Lattice size `M` for Gaussian data.
    pub m: usize,
    /// Hierarchy index `k` of the flow.
    pub k: usize,
    pub dt: f64,
    pub steps: usize,
}

impl Default for TodaRun {
    fn default() -> Self {
        Self { initial: "gaussian".into(), file: None, eps: 0.05, m: 40, k: 1, dt: 1e-3, steps: 100 }
    }
}
