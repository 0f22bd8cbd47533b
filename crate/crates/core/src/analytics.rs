//! Closed-form performance of clustered random access: cluster-size PMF,
//! RA success probability under both clustering schemes, D2D success
//! probability, mean access delay and protocol efficiency.
//!
//! All load factors use the per-code CH load `δα/n_Z`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::{derive, ClusteringScheme, ModelError, SchemeKind, SystemParams, VORONOI_SHAPE};
use crate::special::{
    hyp2f1_interference, intercell_exponent, interference_kernel_eta4, AggregateInterference,
    CountPmf, GilPelaez, GilPelaezError, GilPelaezOptions, SpecialError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Inversion(#[from] GilPelaezError),
    #[error("efficiency is undefined at delta = 1 (no cluster members)")]
    ConventionalEfficiency,
}

pub type Result<T> = std::result::Result<T, AnalyticsError>;

/// `P{N = n}` for the number of CMs of a typical CH.
pub fn cluster_pmf(delta: f64, n: usize) -> f64 {
    CountPmf::point(cluster_mean(delta), n)
}

/// `E[N] = (1 - δ)/δ`.
pub fn cluster_mean(delta: f64) -> f64 {
    (1.0 - delta) / delta
}

/// Truncated cluster-size PMF table (cumulative mass `>= 1 - 1e-10`).
pub fn cluster_pmf_table(delta: f64) -> Vec<f64> {
    CountPmf::new(cluster_mean(delta)).probs().to_vec()
}

fn rbc_scheme(delta: f64) -> Result<ClusteringScheme> {
    Ok(ClusteringScheme::rbc(delta)?)
}

/// Shared RBC form with the inter-cell kernel supplied by the caller.
fn p_ra_rbc_with(params: &SystemParams, delta: f64, kernel: f64) -> Result<f64> {
    params.validate()?;
    let m = derive(params, &rbc_scheme(delta)?).alpha_tilde;
    let theta = params.theta_ra();
    let c = VORONOI_SHAPE;
    let noise = params.sigma2_mw() * theta / params.rho_l_mw();
    let intra = (1.0 + m * theta / ((1.0 + theta) * c)).powf(-c);
    Ok((-noise - m * kernel).exp() * intra)
}

/// RA success probability under random CH election.
///
/// Uses the arctan kernel at `η = 4` and the hypergeometric form otherwise.
pub fn p_ra_rbc(params: &SystemParams, delta: f64) -> Result<f64> {
    if params.eta == 4.0 {
        p_ra_rbc_with(params, delta, interference_kernel_eta4(params.theta_ra()))
    } else {
        p_ra_rbc_general(params, delta)
    }
}

/// RA success probability under random CH election, hypergeometric form for any `η > 2`.
pub fn p_ra_rbc_general(params: &SystemParams, delta: f64) -> Result<f64> {
    let theta = params.theta_ra();
    let kernel = 2.0 * theta / (params.eta - 2.0) * hyp2f1_interference(params.eta, theta)?;
    p_ra_rbc_with(params, delta, kernel)
}

/// Pieces of the CGBC success probability, kept apart for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CgbcBreakdown {
    /// `e^τ · L_I(θ/ρ_L) · e^{-σ²θ/ρ_L}`: success probability when the
    /// conditioned signal has to beat the threshold.
    pub conditional: f64,
    /// `τρ_L/θ - σ²` [mW]: interference level below which success is certain.
    pub certain_below: f64,
    /// `F_I(certain_below)`, zero when `certain_below <= 0`.
    pub cdf_at_threshold: f64,
    /// Error bound reported by the inversion.
    pub cdf_error: f64,
    pub p_ra: f64,
}

/// Inversion settings used by the CGBC success probability.
pub fn cgbc_inversion_options() -> GilPelaezOptions {
    GilPelaezOptions {
        report_tol: 1e-3,
        ..GilPelaezOptions::default()
    }
}

/// RA success probability under channel-gain-based CH election, with its parts.
pub fn p_ra_cgbc_breakdown(params: &SystemParams, delta: f64) -> Result<CgbcBreakdown> {
    params.validate()?;
    let scheme = ClusteringScheme::cgbc(delta)?;
    let tau = scheme.gain_shift();
    let m = derive(params, &scheme).alpha_tilde;
    let theta = params.theta_ra();
    let rho_l = params.rho_l_mw();
    let sigma2 = params.sigma2_mw();
    let c = VORONOI_SHAPE;

    let inter = m * intercell_exponent(params.eta, theta, tau)?;
    let intra = (1.0 + m * ((1.0 + theta) - (-tau * theta).exp()) / ((1.0 + theta) * c)).powf(-c);
    let conditional = (-sigma2 * theta / rho_l + tau - inter).exp() * intra;

    let certain_below = tau * rho_l / theta - sigma2;
    let (cdf_at_threshold, cdf_error) = if certain_below > 0.0 {
        let lt = AggregateInterference::new(params, &scheme)?;
        let opts = cgbc_inversion_options();
        let table = GilPelaez::tabulate(&lt, certain_below, &opts)?;
        let (f, err) = table.cdf_with_error(certain_below)?;
        if err > opts.report_tol {
            return Err(GilPelaezError::NonConvergence {
                estimate: f,
                error_bound: err,
            }
            .into());
        }
        (f, err)
    } else {
        (0.0, 0.0)
    };
    // The product form approximates a probability and can overshoot 1.
    let p_ra = (conditional * (1.0 - cdf_at_threshold) + cdf_at_threshold).clamp(0.0, 1.0);
    Ok(CgbcBreakdown {
        conditional,
        certain_below,
        cdf_at_threshold,
        cdf_error,
        p_ra,
    })
}

/// RA success probability under channel-gain-based CH election.
pub fn p_ra_cgbc(params: &SystemParams, delta: f64) -> Result<f64> {
    Ok(p_ra_cgbc_breakdown(params, delta)?.p_ra)
}

/// RA success probability for either scheme.
pub fn p_ra(params: &SystemParams, scheme: &ClusteringScheme) -> Result<f64> {
    match scheme.kind() {
        SchemeKind::Rbc => p_ra_rbc(params, scheme.delta()),
        SchemeKind::Cgbc => p_ra_cgbc(params, scheme.delta()),
    }
}

/// CDF of the aggregate interference at a BS under CGBC, `x` in mW.
pub fn cdf_interference(params: &SystemParams, delta: f64, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Ok(0.0);
    }
    params.validate()?;
    let lt = AggregateInterference::new(params, &ClusteringScheme::cgbc(delta)?)?;
    Ok(GilPelaez::tabulate(&lt, x, &GilPelaezOptions::default())?.cdf(x)?)
}

/// Tabulated interference CDF, for evaluating many levels at once.
pub fn interference_cdf_table(params: &SystemParams, delta: f64, x_max: f64) -> Result<GilPelaez> {
    params.validate()?;
    let lt = AggregateInterference::new(params, &ClusteringScheme::cgbc(delta)?)?;
    Ok(GilPelaez::tabulate(
        &lt,
        x_max,
        &GilPelaezOptions::default(),
    )?)
}

/// Laplace transform of the aggregate interference under CGBC at `s` [1/mW].
pub fn interference_laplace(params: &SystemParams, delta: f64, s: Complex64) -> Result<Complex64> {
    let lt = AggregateInterference::new(params, &ClusteringScheme::cgbc(delta)?)?;
    Ok(lt.try_laplace(s)?)
}

fn p_c_with(params: &SystemParams, kernel: f64) -> Result<f64> {
    params.validate()?;
    let theta = params.theta_c();
    let noise = params.sigma2_mw() * theta / params.rho_c_mw();
    Ok((-noise - kernel / f64::from(params.k)).exp())
}

/// D2D success probability of a CM-to-CH request. Independent of `δ` and `μ`.
pub fn p_c_d2d(params: &SystemParams) -> Result<f64> {
    if params.eta == 4.0 {
        p_c_with(params, interference_kernel_eta4(params.theta_c()))
    } else {
        p_c_d2d_general(params)
    }
}

/// D2D success probability, hypergeometric form for any `η > 2`.
pub fn p_c_d2d_general(params: &SystemParams) -> Result<f64> {
    let theta = params.theta_c();
    let kernel = 2.0 * theta / (params.eta - 2.0) * hyp2f1_interference(params.eta, theta)?;
    p_c_with(params, kernel)
}

/// `D = 1/P_RA + E[N]/P_C` slots. A zero probability gives `+∞`.
pub fn delay_from(p_ra: f64, p_c: f64, delta: f64) -> f64 {
    let mean = cluster_mean(delta);
    let cellular = if p_ra > 0.0 {
        1.0 / p_ra
    } else {
        f64::INFINITY
    };
    let d2d = if mean == 0.0 {
        0.0
    } else if p_c > 0.0 {
        mean / p_c
    } else {
        f64::INFINITY
    };
    cellular + d2d
}

/// Mean number of slots for a device's request to reach the BS.
pub fn delay(params: &SystemParams, scheme: &ClusteringScheme) -> Result<f64> {
    let p_ra = p_ra(params, scheme)?;
    let p_c = p_c_d2d(params)?;
    Ok(delay_from(p_ra, p_c, scheme.delta()))
}

/// `(D* - D(1)) / (D(1)·E[N]) · 100`, percent. Negative when clustering helps.
pub fn efficiency_from(d_star: f64, d_conventional: f64, mean_cluster: f64) -> f64 {
    (d_star - d_conventional) / (d_conventional * mean_cluster) * 100.0
}

/// Protocol efficiency of operating `scheme` instead of conventional access.
pub fn efficiency(params: &SystemParams, scheme: &ClusteringScheme) -> Result<f64> {
    if scheme.delta() >= 1.0 {
        return Err(AnalyticsError::ConventionalEfficiency);
    }
    let d_star = delay(params, scheme)?;
    let d_one = delay(params, &scheme.with_delta(1.0)?)?;
    Ok(efficiency_from(d_star, d_one, cluster_mean(scheme.delta())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub p_ra: f64,
    pub p_c: f64,
    pub mean_cluster: f64,
    pub delay: f64,
    pub scheme: ClusteringScheme,
}

pub fn analyze(params: &SystemParams, scheme: &ClusteringScheme) -> Result<AnalyticReport> {
    let p_ra = p_ra(params, scheme)?;
    let p_c = p_c_d2d(params)?;
    Ok(AnalyticReport {
        p_ra,
        p_c,
        mean_cluster: cluster_mean(scheme.delta()),
        delay: delay_from(p_ra, p_c, scheme.delta()),
        scheme: *scheme,
    })
}
