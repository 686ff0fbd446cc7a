//! Structural parameters of the economy and the flat `key = value` config format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SmeqError};

/// Every structural parameter of the economy. Rates are quarterly.
///
/// `default()` returns the benchmark calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Discount factor.
    pub beta: f64,
    /// Matching elasticity of the CES-like matching technology.
    pub iota: f64,
    /// Vacancy posting cost, prejudiced sector (goods units).
    pub kappa_p: f64,
    /// Vacancy posting cost, non-prejudiced sector (goods units).
    pub kappa_np: f64,
    /// Job destruction probability, prejudiced matches.
    pub lambda_p: f64,
    /// Job destruction probability, non-prejudiced matches.
    pub lambda_np: f64,
    /// Worker bargaining weight, black workers.
    pub xi_bl: f64,
    /// Worker bargaining weight, white workers.
    pub xi_wh: f64,
    /// Extreme-wealth-shock probability, black workers.
    pub eps_bl: f64,
    /// Extreme-wealth-shock probability, white workers.
    pub eps_wh: f64,
    /// Capital share of match output.
    pub alpha_k: f64,
    /// Capital depreciation rate.
    pub delta: f64,
    /// Persistence of log idiosyncratic productivity.
    pub rho_s: f64,
    /// Innovation s.d. of log idiosyncratic productivity.
    pub sigma_s: f64,
    /// UI replacement rate.
    pub h: f64,
    /// Maximum UI payout (goods units).
    pub chi: f64,
    /// Probability of keeping UI eligibility while unemployed.
    pub p_e: f64,
    /// Population share of black workers.
    pub share_black: f64,
    /// Persistence of log aggregate TFP.
    pub rho_z: f64,
    /// Innovation s.d. of log aggregate TFP.
    pub sigma_z: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            beta: 0.9943,
            iota: 1.3012,
            kappa_p: 4.2622,
            kappa_np: 2.7350,
            lambda_p: 0.0268,
            lambda_np: 0.0644,
            xi_bl: 0.1397,
            xi_wh: 0.2110,
            eps_bl: 0.0179,
            eps_wh: 0.0086,
            alpha_k: 0.2890,
            delta: 0.0150,
            rho_s: 0.9411,
            sigma_s: 0.1680,
            h: 0.4000,
            chi: 0.8433,
            p_e: 0.5385,
            share_black: 0.191,
            rho_z: 0.95,
            sigma_z: 0.015,
        }
    }
}

macro_rules! param_fields {
    ($action:ident, $self:expr $(, $extra:expr)?) => {
        $action!($self $(, $extra)?;
            beta, iota, kappa_p, kappa_np, lambda_p, lambda_np,
            xi_bl, xi_wh, eps_bl, eps_wh, alpha_k, delta,
            rho_s, sigma_s, h, chi, p_e, share_black, rho_z, sigma_z
        )
    };
}

impl ModelParams {
    /// Checks the admissibility of the whole vector.
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&v) {
                return Err(SmeqError::invalid_param(name, format!("{v} not in [0,1]")));
            }
            Ok(())
        };
        unit("lambda_p", self.lambda_p)?;
        unit("lambda_np", self.lambda_np)?;
        unit("xi_bl", self.xi_bl)?;
        unit("xi_wh", self.xi_wh)?;
        unit("eps_bl", self.eps_bl)?;
        unit("eps_wh", self.eps_wh)?;
        unit("h", self.h)?;
        unit("p_e", self.p_e)?;
        unit("delta", self.delta)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(SmeqError::invalid_param("beta", "must lie in (0,1)"));
        }
        if self.iota <= 0.0 {
            return Err(SmeqError::invalid_param("iota", "must be positive"));
        }
        if self.kappa_p <= 0.0 || self.kappa_np <= 0.0 {
            return Err(SmeqError::invalid_param("kappa", "posting costs must be positive"));
        }
        if !(self.alpha_k > 0.0 && self.alpha_k < 1.0) {
            return Err(SmeqError::invalid_param("alpha_k", "must lie in (0,1)"));
        }
        if !(self.share_black > 0.0 && self.share_black < 1.0) {
            return Err(SmeqError::invalid_param("share_black", "must lie in (0,1)"));
        }
        if self.rho_s.abs() >= 1.0 {
            return Err(SmeqError::invalid_param("rho_s", "|rho| must be < 1"));
        }
        if self.sigma_s <= 0.0 {
            return Err(SmeqError::invalid_param("sigma_s", "must be positive"));
        }
        if self.rho_z.abs() >= 1.0 {
            return Err(SmeqError::invalid_param("rho_z", "|rho| must be < 1"));
        }
        if self.chi < 0.0 {
            return Err(SmeqError::invalid_param("chi", "must be non-negative"));
        }
        Ok(())
    }

    /// Field value by config key.
    pub fn get(&self, key: &str) -> Option<f64> {
        macro_rules! getter {
            ($s:expr; $($f:ident),+) => {
                match key { $(stringify!($f) => Some($s.$f),)+ _ => None }
            };
        }
        param_fields!(getter, self)
    }

    /// Sets a field by config key; rejects unknown keys.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        macro_rules! setter {
            ($s:expr, $v:expr; $($f:ident),+) => {
                match key {
                    $(stringify!($f) => { $s.$f = $v; Ok(()) },)+
                    _ => Err(SmeqError::invalid_param(key, "unknown parameter")),
                }
            };
        }
        param_fields!(setter, self, value)
    }

    /// All (key, value) pairs in declaration order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        macro_rules! list {
            ($s:expr; $($f:ident),+) => { vec![$((stringify!($f), $s.$f)),+] };
        }
        param_fields!(list, self)
    }
}

/// Productivity level normalization applied after exponentiating the log grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelNorm {
    /// Rescale levels so the stationary mean of `s` is exactly one.
    MeanOne,
    /// Leave levels at `exp(log grid)` (stationary mean of `log s` is zero).
    LogMeanZero,
}

/// Grid sizes, tolerances and solver knobs. Everything the solver needs
/// beyond the structural parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub n_a: usize,
    pub n_s: usize,
    pub a_max: f64,
    /// Exponent of the polynomial asset spacing (higher = denser near zero).
    pub grid_curvature: f64,
    pub level_norm: LevelNorm,
    /// Sup-norm tolerance on values and wages.
    pub tol_value: f64,
    /// L1 tolerance on the stationary distribution.
    pub tol_dist: f64,
    /// Relative tolerance on each market clearing residual.
    pub tol_clear: f64,
    /// Policy-evaluation applications per improvement sweep.
    pub howard_steps: usize,
    pub max_value_iter: usize,
    pub max_dist_iter: usize,
    pub max_clear_iter: usize,
    /// Damping on tightness/dividend/tax updates in the clearing loop.
    pub price_damping: f64,
    /// Consumption floor that keeps log utility finite at infeasible corners.
    pub c_floor: f64,
    /// Transition-path horizon.
    pub horizon: usize,
    /// Damping on price sequences in the transition fixed point.
    pub path_damping: f64,
    pub max_path_iter: usize,
    /// Relative tolerance on transition-path price sequences.
    pub tol_path: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            n_a: 200,
            n_s: 5,
            a_max: 300.0,
            grid_curvature: 2.0,
            level_norm: LevelNorm::LogMeanZero,
            tol_value: 1e-9,
            tol_dist: 1e-11,
            tol_clear: 1e-6,
            howard_steps: 120,
            max_value_iter: 600,
            max_dist_iter: 20_000,
            max_clear_iter: 400,
            price_damping: 0.5,
            c_floor: 1e-8,
            horizon: 300,
            path_damping: 0.3,
            max_path_iter: 400,
            tol_path: 1e-6,
        }
    }
}

impl Numerics {
    pub fn get(&self, key: &str) -> Option<f64> {
        match key {
            "n_a" => Some(self.n_a as f64),
            "n_s" => Some(self.n_s as f64),
            "a_max" => Some(self.a_max),
            "grid_curvature" => Some(self.grid_curvature),
            "tol_value" => Some(self.tol_value),
            "tol_dist" => Some(self.tol_dist),
            "tol_clear" => Some(self.tol_clear),
            "howard_steps" => Some(self.howard_steps as f64),
            "max_value_iter" => Some(self.max_value_iter as f64),
            "max_dist_iter" => Some(self.max_dist_iter as f64),
            "max_clear_iter" => Some(self.max_clear_iter as f64),
            "price_damping" => Some(self.price_damping),
            "c_floor" => Some(self.c_floor),
            "horizon" => Some(self.horizon as f64),
            "path_damping" => Some(self.path_damping),
            "max_path_iter" => Some(self.max_path_iter as f64),
            "tol_path" => Some(self.tol_path),
            _ => None,
        }
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let as_usize = |v: f64| -> Result<usize> {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(SmeqError::invalid_param(key, "expected a non-negative integer"));
            }
            Ok(v as usize)
        };
        match key {
            "n_a" => self.n_a = as_usize(value)?,
            "n_s" => self.n_s = as_usize(value)?,
            "a_max" => self.a_max = value,
            "grid_curvature" => self.grid_curvature = value,
            "tol_value" => self.tol_value = value,
            "tol_dist" => self.tol_dist = value,
            "tol_clear" => self.tol_clear = value,
            "howard_steps" => self.howard_steps = as_usize(value)?,
            "max_value_iter" => self.max_value_iter = as_usize(value)?,
            "max_dist_iter" => self.max_dist_iter = as_usize(value)?,
            "max_clear_iter" => self.max_clear_iter = as_usize(value)?,
            "price_damping" => self.price_damping = value,
            "c_floor" => self.c_floor = value,
            "horizon" => self.horizon = as_usize(value)?,
            "path_damping" => self.path_damping = value,
            "max_path_iter" => self.max_path_iter = as_usize(value)?,
            "tol_path" => self.tol_path = value,
            _ => return Err(SmeqError::invalid_param(key, "unknown numerics key")),
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        [
            "n_a", "n_s", "a_max", "grid_curvature", "tol_value", "tol_dist", "tol_clear",
            "howard_steps", "max_value_iter", "max_dist_iter", "max_clear_iter",
            "price_damping", "c_floor", "horizon", "path_damping", "max_path_iter", "tol_path",
        ]
        .iter()
        .map(|k| (*k, self.get(k).unwrap()))
        .collect()
    }
}

/// Parsed flat config: structural parameters plus numerics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub params: ModelParams,
    pub numerics: Numerics,
}

impl Config {
    /// Parses the flat `key = value` format. Lines starting with `#` and blank
    /// lines are ignored. `level_norm` takes `log_mean_zero` or `mean_one`.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line.split_once('=').ok_or(SmeqError::Config {
                line: lineno,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(prev) = seen.insert(key.to_string(), lineno) {
                return Err(SmeqError::Config {
                    line: lineno,
                    reason: format!("duplicate key `{key}` (first set on line {prev})"),
                });
            }
            if key == "level_norm" {
                cfg.numerics.level_norm = match value {
                    "log_mean_zero" => LevelNorm::LogMeanZero,
                    "mean_one" => LevelNorm::MeanOne,
                    other => {
                        return Err(SmeqError::Config {
                            line: lineno,
                            reason: format!("level_norm must be log_mean_zero or mean_one, got `{other}`"),
                        })
                    }
                };
                continue;
            }
            let num: f64 = value.parse().map_err(|_| SmeqError::Config {
                line: lineno,
                reason: format!("`{value}` is not a number"),
            })?;
            if cfg.params.set(key, num).is_ok() {
                continue;
            }
            cfg.numerics.set(key, num).map_err(|_| SmeqError::Config {
                line: lineno,
                reason: format!("unknown key `{key}`"),
            })?;
        }
        cfg.params.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::parse(&text)
    }

    /// Renders the resolved config back to the flat format.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("# structural parameters\n");
        for (k, v) in self.params.entries() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out.push_str("\n# numerics\n");
        for (k, v) in self.numerics.entries() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        let norm = match self.numerics.level_norm {
            LevelNorm::LogMeanZero => "log_mean_zero",
            LevelNorm::MeanOne => "mean_one",
        };
        writeln!(out, "level_norm = {norm}").unwrap();
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_defaults_are_valid() {
        ModelParams::default().validate().unwrap();
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = Config::default();
        cfg.params.beta = 0.99;
        cfg.numerics.n_a = 60;
        cfg.numerics.level_norm = LevelNorm::MeanOne;
        let parsed = Config::parse(&cfg.render()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn parse_rejects_unknown_key() {
        let err = Config::parse("not_a_key = 1.0").unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn parse_rejects_duplicates_and_junk() {
        assert!(Config::parse("beta = 0.9\nbeta = 0.8").is_err());
        assert!(Config::parse("beta 0.9").is_err());
        assert!(Config::parse("beta = fast").is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = Config::parse("# hello\n\nbeta = 0.98 # inline\n").unwrap();
        assert_eq!(cfg.params.beta, 0.98);
    }

    #[test]
    fn invalid_vector_rejected() {
        let mut p = ModelParams::default();
        p.xi_bl = 1.3;
        assert!(p.validate().is_err());
        let mut p = ModelParams::default();
        p.rho_s = 1.0;
        assert!(p.validate().is_err());
    }
}
