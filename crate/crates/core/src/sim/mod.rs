//! Monte-Carlo simulation of the clustered uplink on a finite window.
//!
//! BSs and devices are sampled as independent PPPs on a square window; all
//! of them transmit and interfere, but statistics are only collected inside
//! a central observation disk to keep edge effects out.

mod campaign;
mod geometry;
mod network;
mod snapshot;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

pub use campaign::{
    empirical_cluster_pmf, estimate_report, run_realization, Campaign, CampaignSpec,
    EmpiricalEstimate, PerformanceReport, RealizationOutcome, Z95,
};
pub use geometry::{sample_ppp, GridIndex, Point, Region};
pub use network::{associate, elect_chs, NetworkRealization};
pub use snapshot::{d2d_samples, d2d_snapshot, ra_samples, ra_snapshot, LinkSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid region: {0}")]
    InvalidRegion(&'static str),
    #[error("no base station in the window")]
    NoBaseStation,
    #[error("no cluster head in the window")]
    NoClusterHead,
    #[error("no usable realization after {attempts} attempts")]
    Degenerate { attempts: u32 },
    #[error("{0}")]
    InvalidConfig(String),
}

/// How fading gains toward a victim BS are drawn in the RA snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainMode {
    /// Election gains are gains toward the serving BS; gains toward any other
    /// BS are fresh `Exp(1)`.
    Physical,
    /// Every RA link gain is `τ + Exp(1)`, as in the analysis.
    #[default]
    AnalysisMatched,
}

impl fmt::Display for GainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GainMode::Physical => "physical",
            GainMode::AnalysisMatched => "analysis-matched",
        })
    }
}

impl FromStr for GainMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "physical" => Ok(GainMode::Physical),
            "analysis-matched" | "analysis_matched" => Ok(GainMode::AnalysisMatched),
            other => Err(format!("unknown gain mode `{other}`")),
        }
    }
}

/// Independent random streams within one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Topology = 0,
    Election = 1,
    Access = 2,
    RaFading = 3,
    D2dFading = 4,
}

/// Counter-based stream for (realization, attempt, purpose) under a master
/// seed, so any realization can be regenerated on its own.
pub fn stream_rng(seed: u64, index: u64, attempt: u32, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index << 16) | (u64::from(attempt & 0xfff) << 4) | purpose as u64);
    rng
}
