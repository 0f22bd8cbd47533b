//! Domain types shared by the analytics, the simulator and the optimizer.
//!
//! Distances are in km, intensities per km², powers in mW. Values supplied in
//! dB/dBm are converted once, through the accessors on [`SystemParams`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shape constant of the gamma approximation to the PPP Voronoi cell area.
pub const VORONOI_SHAPE: f64 = 3.575;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("invalid {name} = {value}: {reason}")]
    Invalid {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

fn check_finite(x: f64) -> Result<f64, ModelError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ModelError::NonFinite(x))
    }
}

/// `10^(x/10)`.
pub fn db_to_linear(x: f64) -> Result<f64, ModelError> {
    Ok(10f64.powf(check_finite(x)? / 10.0))
}

/// dBm to mW.
pub fn dbm_to_mw(x: f64) -> Result<f64, ModelError> {
    db_to_linear(x)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Physical and network parameters of the two-tier (cellular + D2D) network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Device intensity [devices/km²].
    pub mu: f64,
    /// BS intensity [BS/km²].
    pub lambda: f64,
    /// Number of ZC preamble codes.
    pub n_z: u32,
    /// Number of D2D channels.
    pub k: u32,
    /// Path-loss exponent.
    pub eta: f64,
    pub sigma2_dbm: f64,
    pub rho_l_dbm: f64,
    pub rho_c_dbm: f64,
    pub theta_ra_db: f64,
    pub theta_c_db: f64,
}

impl SystemParams {
    /// Reference parameter set at the given device intensity.
    pub fn reference(mu: f64) -> Self {
        Self {
            mu,
            lambda: 10.0,
            n_z: 64,
            k: 3,
            eta: 4.0,
            sigma2_dbm: -90.0,
            rho_l_dbm: -100.0,
            rho_c_dbm: -80.0,
            theta_ra_db: -7.0,
            theta_c_db: -7.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |name, value: f64| {
            check_finite(value)?;
            if value > 0.0 {
                Ok(())
            } else {
                Err(ModelError::Invalid {
                    name,
                    value,
                    reason: "must be positive",
                })
            }
        };
        positive("mu", self.mu)?;
        positive("lambda", self.lambda)?;
        check_finite(self.eta)?;
        if self.eta <= 2.0 {
            return Err(ModelError::Invalid {
                name: "eta",
                value: self.eta,
                reason: "path-loss exponent must exceed 2",
            });
        }
        if self.n_z == 0 {
            return Err(ModelError::Invalid {
                name: "n_z",
                value: 0.0,
                reason: "at least one code",
            });
        }
        if self.k == 0 {
            return Err(ModelError::Invalid {
                name: "k",
                value: 0.0,
                reason: "at least one channel",
            });
        }
        for x in [
            self.sigma2_dbm,
            self.rho_l_dbm,
            self.rho_c_dbm,
            self.theta_ra_db,
            self.theta_c_db,
        ] {
            check_finite(x)?;
        }
        Ok(())
    }

    /// Devices per BS.
    pub fn alpha(&self) -> f64 {
        self.mu / self.lambda
    }

    pub fn sigma2_mw(&self) -> f64 {
        10f64.powf(self.sigma2_dbm / 10.0)
    }

    pub fn rho_l_mw(&self) -> f64 {
        10f64.powf(self.rho_l_dbm / 10.0)
    }

    pub fn rho_c_mw(&self) -> f64 {
        10f64.powf(self.rho_c_dbm / 10.0)
    }

    pub fn theta_ra(&self) -> f64 {
        10f64.powf(self.theta_ra_db / 10.0)
    }

    pub fn theta_c(&self) -> f64 {
        10f64.powf(self.theta_c_db / 10.0)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    /// Sets `mu` so that `mu / lambda == alpha`.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.mu = alpha * self.lambda;
        self
    }

    pub fn with_theta_ra_db(mut self, theta_db: f64) -> Self {
        self.theta_ra_db = theta_db;
        self
    }

    pub fn with_theta_c_db(mut self, theta_db: f64) -> Self {
        self.theta_c_db = theta_db;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// Random-based clustering: Bernoulli CH election.
    Rbc,
    /// Channel-gain-based clustering: CH iff the fading gain exceeds `-ln(delta)`.
    Cgbc,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Rbc => "rbc",
            SchemeKind::Cgbc => "cgbc",
        })
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rbc" => Ok(SchemeKind::Rbc),
            "cgbc" => Ok(SchemeKind::Cgbc),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

/// A clustering scheme together with its CH selection probability.
///
/// For CGBC the gain threshold is always derived from `delta`, so the pair can
/// never drift out of sync.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringScheme {
    kind: SchemeKind,
    delta: f64,
}

impl ClusteringScheme {
    pub fn new(kind: SchemeKind, delta: f64) -> Result<Self, ModelError> {
        check_finite(delta)?;
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(ModelError::Invalid {
                name: "delta",
                value: delta,
                reason: "CH probability must lie in (0, 1]",
            });
        }
        Ok(Self { kind, delta })
    }

    pub fn rbc(delta: f64) -> Result<Self, ModelError> {
        Self::new(SchemeKind::Rbc, delta)
    }

    pub fn cgbc(delta: f64) -> Result<Self, ModelError> {
        Self::new(SchemeKind::Cgbc, delta)
    }

    /// CGBC scheme from a linear gain threshold `tau >= 0`.
    pub fn cgbc_from_tau(tau: f64) -> Result<Self, ModelError> {
        check_finite(tau)?;
        if tau < 0.0 {
            return Err(ModelError::Invalid {
                name: "tau",
                value: tau,
                reason: "gain threshold must be nonnegative",
            });
        }
        Self::cgbc((-tau).exp())
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Election gain threshold; `None` for RBC.
    pub fn tau(&self) -> Option<f64> {
        match self.kind {
            SchemeKind::Rbc => None,
            SchemeKind::Cgbc => Some(-self.delta.ln()),
        }
    }

    /// Threshold the conditioned gains are shifted by (zero for RBC).
    pub fn gain_shift(&self) -> f64 {
        self.tau().unwrap_or(0.0)
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self, ModelError> {
        Self::new(self.kind, delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Devices per BS.
    pub alpha: f64,
    /// Mean number of CHs per BS sharing one ZC code.
    pub alpha_tilde: f64,
    /// Mean number of CMs per CH.
    pub delta_tilde: f64,
    pub c: f64,
}

pub fn derive(params: &SystemParams, scheme: &ClusteringScheme) -> DerivedParams {
    let delta = scheme.delta();
    DerivedParams {
        alpha: params.alpha(),
        alpha_tilde: delta * params.mu / (params.lambda * f64::from(params.n_z)),
        delta_tilde: (1.0 - delta) / delta,
        c: VORONOI_SHAPE,
    }
}
