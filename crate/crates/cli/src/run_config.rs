use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use gchsh_core::bounds::{SweepConfig, DEFAULT_KAPPA};
use gchsh_core::config::Tolerances;
use gchsh_core::optimizer::AngleSearchConfig;
use gchsh_core::selector::DEFAULT_SCAN_POINTS;
use serde::{Deserialize, Serialize};

pub const TABLE_ENV: &str = "GCHSH_TABLE";
pub const DEFAULT_TABLE: &str = "gchsh_table.json";

/// Settings read from a TOML file; every field is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub restarts: usize,
    pub local_tol: f64,
    pub max_iters: usize,
    pub kappa: f64,
    pub tolerances: Tolerances,
    pub table_path: Option<PathBuf>,
    pub theta_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let search = AngleSearchConfig::default();
        Self {
            seed: search.seed,
            restarts: search.restarts,
            local_tol: search.local_tol,
            max_iters: search.max_iters,
            kappa: DEFAULT_KAPPA,
            tolerances: Tolerances::default(),
            table_path: None,
            theta_points: DEFAULT_SCAN_POINTS,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.restarts == 0 || self.max_iters == 0 || self.theta_points == 0 {
            return Err("restarts, max_iters and theta_points must be positive".into());
        }
        if !(self.kappa > 0.0) || !(self.local_tol > 0.0) {
            return Err("kappa and local_tol must be positive".into());
        }
        Ok(())
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig {
            kappa: self.kappa,
            search: AngleSearchConfig {
                restarts: self.restarts,
                local_tol: self.local_tol,
                max_iters: self.max_iters,
                seed: self.seed,
            },
            tolerances: self.tolerances,
            ..SweepConfig::default()
        }
    }

    /// Command-line flag, then environment, then config file, then the default.
    pub fn resolve_table(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(TABLE_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.table_path
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_TABLE))
    }
}

/// Accepts decimal radians or multiples of π such as `pi/4`, `3pi/16`, `3*pi/16`, `pi`.
pub fn parse_theta(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    let bad = || format!("cannot parse angle '{s}'");
    let Some(pos) = t.find("pi").or_else(|| t.find('π')) else {
        return t.parse::<f64>().map_err(|_| bad());
    };
    let marker = if t[pos..].starts_with("pi") {
        2
    } else {
        'π'.len_utf8()
    };
    let head = t[..pos].trim_end_matches('*');
    let tail = &t[pos + marker..];
    let num = match head {
        "" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let den = match tail {
        "" => 1.0,
        d => d
            .strip_prefix('/')
            .ok_or_else(bad)?
            .parse::<f64>()
            .map_err(|_| bad())?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    let v = num * PI / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}
