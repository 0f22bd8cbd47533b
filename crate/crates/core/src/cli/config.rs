//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` are comments. Lists are comma-separated. dB and dBm
//! quantities carry the unit in the key name.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::model::{ClusteringScheme, ModelError, SchemeKind, SystemParams};
use crate::optimize::DEFAULT_EPS;
use crate::sim::{CampaignSpec, GainMode, Region, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// Device intensities to run [devices/km²].
    pub mu: Vec<f64>,
    pub lambda: f64,
    pub n_z: u32,
    pub k: u32,
    pub eta: f64,
    pub sigma2_dbm: f64,
    pub rho_l_dbm: f64,
    pub rho_c_dbm: f64,
    pub theta_ra_db: f64,
    pub theta_c_db: f64,
    pub schemes: Vec<SchemeKind>,
    /// Operating CH probability for threshold sweeps.
    pub delta: f64,
    pub delta_grid: Vec<f64>,
    pub theta_grid_db: Vec<f64>,
    /// D2D thresholds checked by `validate`.
    pub theta_c_grid_db: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub pmf_deltas: Vec<f64>,
    pub pmf_max_n: usize,
    /// Run the simulator alongside the closed forms.
    pub simulate: bool,
    pub seed: u64,
    pub gain_mode: GainMode,
    /// Realizations run before CI-driven extension.
    pub realizations: u64,
    pub ci_target: f64,
    pub max_realizations: u64,
    pub region_side_km: f64,
    pub observation_radius_km: f64,
    pub eps: f64,
    pub tol_p_ra_rbc: f64,
    pub tol_p_ra_cgbc: f64,
    pub tol_p_c: f64,
    /// Offset added to `θ_RA` on the analytic side only (harness self-test).
    pub perturb_theta_ra_db: f64,
    pub out: Option<PathBuf>,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|i| lo + step * i as f64)
        .map(|v| (v * 1e9).round() / 1e9)
        .collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = SystemParams::reference(160.0);
        Self {
            mu: vec![160.0, 640.0],
            lambda: p.lambda,
            n_z: p.n_z,
            k: p.k,
            eta: p.eta,
            sigma2_dbm: p.sigma2_dbm,
            rho_l_dbm: p.rho_l_dbm,
            rho_c_dbm: p.rho_c_dbm,
            theta_ra_db: p.theta_ra_db,
            theta_c_db: p.theta_c_db,
            schemes: vec![SchemeKind::Rbc, SchemeKind::Cgbc],
            delta: 0.35,
            delta_grid: grid(0.1, 1.0, 0.1),
            theta_grid_db: grid(-20.0, 10.0, 2.0),
            theta_c_grid_db: grid(-15.0, 0.0, 3.0),
            alpha_grid: grid(10.0, 500.0, 10.0),
            pmf_deltas: vec![0.1, 0.15],
            pmf_max_n: 40,
            simulate: true,
            seed: 1,
            gain_mode: GainMode::AnalysisMatched,
            realizations: 16,
            ci_target: 0.01,
            max_realizations: 20_000,
            region_side_km: 10.0,
            observation_radius_km: 1.0,
            eps: DEFAULT_EPS,
            tol_p_ra_rbc: 0.03,
            tol_p_ra_cgbc: 0.05,
            tol_p_c: 0.03,
            perturb_theta_ra_db: 0.0,
            out: None,
        }
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|e| e.to_string()))
        .collect()
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Parameters at device intensity `mu`.
    pub fn params(&self, mu: f64) -> SystemParams {
        SystemParams {
            mu,
            lambda: self.lambda,
            n_z: self.n_z,
            k: self.k,
            eta: self.eta,
            sigma2_dbm: self.sigma2_dbm,
            rho_l_dbm: self.rho_l_dbm,
            rho_c_dbm: self.rho_c_dbm,
            theta_ra_db: self.theta_ra_db,
            theta_c_db: self.theta_c_db,
        }
    }

    pub fn region(&self) -> Result<Region, SimError> {
        Region::new(self.region_side_km, self.observation_radius_km)
    }

    /// Campaign settings for one (parameters, scheme) point.
    pub fn campaign(
        &self,
        params: SystemParams,
        scheme: ClusteringScheme,
    ) -> Result<CampaignSpec, SimError> {
        Ok(CampaignSpec::new(params, scheme)
            .with_seed(self.seed)
            .with_gain_mode(self.gain_mode)
            .with_region(self.region()?)
            .with_realizations(self.realizations)
            .with_ci_target(Some(self.ci_target))
            .with_max_realizations(self.max_realizations))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.mu.is_empty() {
            return bad("mu list is empty");
        }
        for &mu in &self.mu {
            self.params(mu)
                .validate()
                .map_err(|e: ModelError| ConfigError::Invalid(e.to_string()))?;
        }
        for &d in self
            .delta_grid
            .iter()
            .chain(&self.pmf_deltas)
            .chain([&self.delta])
        {
            if !(d > 0.0 && d <= 1.0) {
                return bad("every delta must lie in (0, 1]");
            }
        }
        if self.alpha_grid.iter().any(|&a| !(a > 0.0)) {
            return bad("alpha grid values must be positive");
        }
        if self.schemes.is_empty() {
            return bad("at least one scheme is required");
        }
        if self.realizations == 0 || !(self.ci_target > 0.0) || !(self.eps > 0.0) {
            return bad("realizations, ci_target and eps must be positive");
        }
        self.region()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.trim().parse::<T>().map_err(|e| e.to_string())
        }
        match key {
            "mu" => self.mu = parse_list(value)?,
            "lambda" => self.lambda = num(value)?,
            "n_z" => self.n_z = num(value)?,
            "k" => self.k = num(value)?,
            "eta" => self.eta = num(value)?,
            "sigma2_dbm" => self.sigma2_dbm = num(value)?,
            "rho_l_dbm" => self.rho_l_dbm = num(value)?,
            "rho_c_dbm" => self.rho_c_dbm = num(value)?,
            "theta_ra_db" => self.theta_ra_db = num(value)?,
            "theta_c_db" => self.theta_c_db = num(value)?,
            "schemes" => self.schemes = parse_list(value)?,
            "delta" => self.delta = num(value)?,
            "delta_grid" => self.delta_grid = parse_list(value)?,
            "theta_grid_db" => self.theta_grid_db = parse_list(value)?,
            "theta_c_grid_db" => self.theta_c_grid_db = parse_list(value)?,
            "alpha_grid" => self.alpha_grid = parse_list(value)?,
            "pmf_deltas" => self.pmf_deltas = parse_list(value)?,
            "pmf_max_n" => self.pmf_max_n = num(value)?,
            "simulate" => self.simulate = num(value)?,
            "seed" => self.seed = num(value)?,
            "gain_mode" => self.gain_mode = num(value)?,
            "realizations" => self.realizations = num(value)?,
            "ci_target" => self.ci_target = num(value)?,
            "max_realizations" => self.max_realizations = num(value)?,
            "region_side_km" => self.region_side_km = num(value)?,
            "observation_radius_km" => self.observation_radius_km = num(value)?,
            "eps" => self.eps = num(value)?,
            "tol_p_ra_rbc" => self.tol_p_ra_rbc = num(value)?,
            "tol_p_ra_cgbc" => self.tol_p_ra_cgbc = num(value)?,
            "tol_p_c" => self.tol_p_c = num(value)?,
            "perturb_theta_ra_db" => self.perturb_theta_ra_db = num(value)?,
            "out" => {
                let v = value.trim();
                self.out = (!v.is_empty()).then(|| PathBuf::from(v));
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses a configuration; keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: line_no })?;
            let key = key.trim();
            cfg.set(key, value).map_err(|reason| {
                if reason.starts_with("unknown key") {
                    ConfigError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    }
                } else {
                    ConfigError::BadValue {
                        line: line_no,
                        key: key.to_string(),
                        reason,
                    }
                }
            })?;
        }
        Ok(cfg)
    }

    /// Writes every key; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mu", join(&self.mu));
        kv("lambda", self.lambda.to_string());
        kv("n_z", self.n_z.to_string());
        kv("k", self.k.to_string());
        kv("eta", self.eta.to_string());
        kv("sigma2_dbm", self.sigma2_dbm.to_string());
        kv("rho_l_dbm", self.rho_l_dbm.to_string());
        kv("rho_c_dbm", self.rho_c_dbm.to_string());
        kv("theta_ra_db", self.theta_ra_db.to_string());
        kv("theta_c_db", self.theta_c_db.to_string());
        kv("schemes", join(&self.schemes));
        kv("delta", self.delta.to_string());
        kv("delta_grid", join(&self.delta_grid));
        kv("theta_grid_db", join(&self.theta_grid_db));
        kv("theta_c_grid_db", join(&self.theta_c_grid_db));
        kv("alpha_grid", join(&self.alpha_grid));
        kv("pmf_deltas", join(&self.pmf_deltas));
        kv("pmf_max_n", self.pmf_max_n.to_string());
        kv("simulate", self.simulate.to_string());
        kv("seed", self.seed.to_string());
        kv("gain_mode", self.gain_mode.to_string());
        kv("realizations", self.realizations.to_string());
        kv("ci_target", self.ci_target.to_string());
        kv("max_realizations", self.max_realizations.to_string());
        kv("region_side_km", self.region_side_km.to_string());
        kv(
            "observation_radius_km",
            self.observation_radius_km.to_string(),
        );
        kv("eps", self.eps.to_string());
        kv("tol_p_ra_rbc", self.tol_p_ra_rbc.to_string());
        kv("tol_p_ra_cgbc", self.tol_p_ra_cgbc.to_string());
        kv("tol_p_c", self.tol_p_c.to_string());
        kv("perturb_theta_ra_db", self.perturb_theta_ra_db.to_string());
        kv(
            "out",
            self.out
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_reference_parameters() {
        let c = ExperimentConfig::default();
        assert_eq!(c.mu, vec![160.0, 640.0]);
        assert_eq!(c.params(640.0), SystemParams::reference(640.0));
        assert_eq!(c.delta_grid.len(), 10);
        assert_eq!(c.delta_grid[2], 0.3);
        assert_eq!(c.theta_c_grid_db, vec![-15.0, -12.0, -9.0, -6.0, -3.0, 0.0]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig {
            seed: 99,
            delta: 0.123_456_789_012_345_67,
            gain_mode: GainMode::Physical,
            schemes: vec![SchemeKind::Cgbc],
            out: Some(PathBuf::from("/tmp/x.csv")),
            ..ExperimentConfig::default()
        };
        assert_eq!(ExperimentConfig::parse(&c.emit()).unwrap(), c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&d.emit()).unwrap(), d);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = ExperimentConfig::parse("# comment\n\nseed = 7\ntheta_ra_db = -5\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.theta_ra_db, -5.0);
        assert_eq!(c.lambda, 10.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            ExperimentConfig::parse("seed = 1\nnonsense").unwrap_err(),
            ConfigError::Syntax { line: 2 }
        );
        assert!(matches!(
            ExperimentConfig::parse("colour = red"),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("k = three"),
            Err(ConfigError::BadValue { line: 1, .. })
        ));
        let c = ExperimentConfig::parse("delta = 1.5").unwrap();
        assert!(c.validate().is_err());
    }
}
