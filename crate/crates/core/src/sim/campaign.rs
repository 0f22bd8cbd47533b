use rayon::prelude::*;
use serde::Serialize;

use super::geometry::Region;
use super::network::NetworkRealization;
use super::snapshot::{d2d_samples, ra_samples, LinkSample};
use super::{stream_rng, GainMode, SimError, StreamPurpose};
use crate::model::{ClusteringScheme, SystemParams};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalEstimate {
    pub mean: f64,
    /// 95% normal-approximation half-width.
    pub ci_halfwidth: f64,
    pub n_samples: u64,
}

impl EmpiricalEstimate {
    /// Ratio estimate `Σ y_r / Σ n_r` over realizations `r`, with a
    /// between-realization (cluster-robust) variance. Falls back to the
    /// i.i.d. binomial-style variance when there is a single realization.
    pub fn ratio<I: IntoIterator<Item = (f64, u64)>>(groups: I) -> Self {
        let groups: Vec<(f64, u64)> = groups.into_iter().collect();
        let total: u64 = groups.iter().map(|g| g.1).sum();
        if total == 0 {
            return Self {
                mean: f64::NAN,
                ci_halfwidth: f64::INFINITY,
                n_samples: 0,
            };
        }
        let sum: f64 = groups.iter().map(|g| g.0).sum();
        let n = total as f64;
        let mean = sum / n;
        let used = groups.iter().filter(|g| g.1 > 0).count();
        let var = if used >= 2 {
            let r = groups.len() as f64;
            let ss: f64 = groups
                .iter()
                .map(|&(y, c)| (y - mean * c as f64).powi(2))
                .sum();
            r / (r - 1.0) * ss / (n * n)
        } else {
            (mean * (1.0 - mean)).abs() / n
        };
        Self {
            mean,
            ci_halfwidth: Z95 * var.sqrt(),
            n_samples: total,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.ci_halfwidth
    }
}

/// Everything recorded from one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutcome {
    pub index: u64,
    pub attempts: u32,
    pub device_count: usize,
    pub ch_count: usize,
    /// RA samples of the observed CHs.
    pub ra: Vec<LinkSample>,
    /// D2D samples of the observed nonempty clusters.
    pub d2d: Vec<LinkSample>,
    /// CM counts of the observed CHs.
    pub cluster_sizes: Vec<u32>,
}

/// Samples realization `index` and records its observed statistics.
pub fn run_realization(
    params: &SystemParams,
    scheme: &ClusteringScheme,
    mode: GainMode,
    region: &Region,
    seed: u64,
    index: u64,
) -> Result<RealizationOutcome, SimError> {
    let (net, attempts) = NetworkRealization::generate(params, scheme, region, seed, index)?;
    let last = attempts - 1;
    let ra = ra_samples(
        &net,
        params,
        mode,
        &mut stream_rng(seed, index, last, StreamPurpose::RaFading),
    );
    let d2d = d2d_samples(
        &net,
        params,
        &mut stream_rng(seed, index, last, StreamPurpose::D2dFading),
    );
    let cluster_sizes = net.observed_chs().map(|c| net.cluster_sizes[c]).collect();
    Ok(RealizationOutcome {
        index,
        attempts,
        device_count: net.device_positions.len(),
        ch_count: net.ch_count(),
        ra,
        d2d,
        cluster_sizes,
    })
}

/// Settings of a simulation campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CampaignSpec {
    pub params: SystemParams,
    pub scheme: ClusteringScheme,
    pub gain_mode: GainMode,
    pub region: Region,
    pub seed: u64,
    /// Realizations run up front.
    pub realizations: u64,
    /// When set, keeps adding realizations until every reported probability
    /// has a CI half-width at most this large.
    pub ci_target: Option<f64>,
    pub max_realizations: u64,
}

impl CampaignSpec {
    pub fn new(params: SystemParams, scheme: ClusteringScheme) -> Self {
        Self {
            params,
            scheme,
            gain_mode: GainMode::default(),
            region: Region::default(),
            seed: 1,
            realizations: 16,
            ci_target: Some(0.01),
            max_realizations: 20_000,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_gain_mode(mut self, mode: GainMode) -> Self {
        self.gain_mode = mode;
        self
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }

    pub fn with_realizations(mut self, n: u64) -> Self {
        self.realizations = n;
        self
    }

    pub fn with_ci_target(mut self, target: Option<f64>) -> Self {
        self.ci_target = target;
        self
    }

    pub fn with_max_realizations(mut self, n: u64) -> Self {
        self.max_realizations = n;
        self
    }
}

/// Outcomes of a campaign, kept in realization order.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub spec: CampaignSpec,
    pub outcomes: Vec<RealizationOutcome>,
}

impl Campaign {
    /// Runs the campaign. Realizations are independent and may run in
    /// parallel; results are merged in index order, so output does not
    /// depend on scheduling.
    pub fn run(spec: CampaignSpec) -> Result<Self, SimError> {
        if spec.realizations == 0 {
            return Err(SimError::InvalidConfig(
                "at least one realization is required".into(),
            ));
        }
        let mut campaign = Self {
            spec,
            outcomes: Vec::new(),
        };
        campaign.extend_to(spec.realizations.min(spec.max_realizations.max(1)))?;
        if let Some(target) = spec.ci_target {
            while campaign.worst_ci() > target
                && (campaign.outcomes.len() as u64) < spec.max_realizations
            {
                let n = campaign.outcomes.len() as u64;
                let worst = campaign.worst_ci();
                // Half-width scales like n^{-1/2}.
                let needed = (n as f64 * (worst / target).powi(2) * 1.1).ceil() as u64;
                let next = needed.max(n + n / 4 + 1).min(spec.max_realizations);
                campaign.extend_to(next)?;
            }
        }
        Ok(campaign)
    }

    /// Adds realizations until there are `n` of them.
    pub fn extend_to(&mut self, n: u64) -> Result<(), SimError> {
        let start = self.outcomes.len() as u64;
        if n <= start {
            return Ok(());
        }
        let s = self.spec;
        let new: Result<Vec<_>, _> = (start..n)
            .into_par_iter()
            .map(|i| run_realization(&s.params, &s.scheme, s.gain_mode, &s.region, s.seed, i))
            .collect();
        self.outcomes.extend(new?);
        Ok(())
    }

    fn worst_ci(&self) -> f64 {
        let ra = self.p_ra().ci_halfwidth;
        let c = self.p_c();
        if c.n_samples == 0 {
            ra
        } else {
            ra.max(c.ci_halfwidth)
        }
    }

    pub fn realizations(&self) -> usize {
        self.outcomes.len()
    }

    /// Realizations that had to be redrawn because they were degenerate.
    pub fn resampled(&self) -> u64 {
        self.outcomes
            .iter()
            .map(|o| u64::from(o.attempts - 1))
            .sum()
    }

    /// RA success probability at linear threshold `theta`.
    pub fn p_ra_at(&self, theta: f64) -> EmpiricalEstimate {
        let noise = self.spec.params.sigma2_mw();
        EmpiricalEstimate::ratio(self.outcomes.iter().map(|o| {
            let hits = o.ra.iter().filter(|s| s.success(theta, noise)).count();
            (hits as f64, o.ra.len() as u64)
        }))
    }

    pub fn p_ra(&self) -> EmpiricalEstimate {
        self.p_ra_at(self.spec.params.theta_ra())
    }

    /// D2D success probability at linear threshold `theta`.
    pub fn p_c_at(&self, theta: f64) -> EmpiricalEstimate {
        let noise = self.spec.params.sigma2_mw();
        EmpiricalEstimate::ratio(self.outcomes.iter().map(|o| {
            let hits = o.d2d.iter().filter(|s| s.success(theta, noise)).count();
            (hits as f64, o.d2d.len() as u64)
        }))
    }

    pub fn p_c(&self) -> EmpiricalEstimate {
        self.p_c_at(self.spec.params.theta_c())
    }

    /// Mean number of CMs per observed CH.
    pub fn mean_cluster(&self) -> EmpiricalEstimate {
        EmpiricalEstimate::ratio(self.outcomes.iter().map(|o| {
            let total: u64 = o.cluster_sizes.iter().map(|&s| u64::from(s)).sum();
            (total as f64, o.cluster_sizes.len() as u64)
        }))
    }

    /// Fraction of devices elected CH, pooled over the whole window.
    pub fn ch_fraction(&self) -> EmpiricalEstimate {
        EmpiricalEstimate::ratio(
            self.outcomes
                .iter()
                .map(|o| (o.ch_count as f64, o.device_count as u64)),
        )
    }

    /// Empirical cluster-size PMF with per-bin CIs, up to the largest size seen.
    pub fn cluster_pmf(&self) -> Vec<EmpiricalEstimate> {
        let max = self
            .outcomes
            .iter()
            .flat_map(|o| o.cluster_sizes.iter().copied())
            .max()
            .unwrap_or(0) as usize;
        let mut counts = vec![vec![0u64; max + 1]; self.outcomes.len()];
        for (row, o) in counts.iter_mut().zip(&self.outcomes) {
            for &s in &o.cluster_sizes {
                row[s as usize] += 1;
            }
        }
        (0..=max)
            .map(|n| {
                EmpiricalEstimate::ratio(
                    counts
                        .iter()
                        .zip(&self.outcomes)
                        .map(|(row, o)| (row[n] as f64, o.cluster_sizes.len() as u64)),
                )
            })
            .collect()
    }

    /// Aggregate RA interference samples at the observed CHs' BSs [mW].
    pub fn interference_samples(&self) -> Vec<f64> {
        self.outcomes
            .iter()
            .flat_map(|o| o.ra.iter().map(|s| s.interference))
            .collect()
    }

    pub fn report(&self) -> PerformanceReport {
        let p_ra = self.p_ra();
        let p_c = self.p_c();
        let mean_cluster = self.mean_cluster();
        let delay = delay_estimate(&p_ra, &p_c, &mean_cluster);
        let degenerate = p_ra.n_samples == 0
            || p_ra.mean == 0.0
            || (mean_cluster.mean > 0.0 && (p_c.n_samples == 0 || p_c.mean == 0.0));
        PerformanceReport {
            scheme: self.spec.scheme,
            gain_mode: self.spec.gain_mode,
            p_ra,
            p_c,
            mean_cluster,
            delay,
            realizations: self.outcomes.len() as u64,
            resampled: self.resampled(),
            degenerate,
        }
    }
}

/// `D̂ = 1/P̂_RA + Ê[N]/P̂_C` with a first-order (delta-method) CI that
/// treats the three estimates as independent.
fn delay_estimate(
    p_ra: &EmpiricalEstimate,
    p_c: &EmpiricalEstimate,
    mean_cluster: &EmpiricalEstimate,
) -> EmpiricalEstimate {
    let sd = |e: &EmpiricalEstimate| e.ci_halfwidth / Z95;
    let cellular = 1.0 / p_ra.mean;
    let (d2d, var_d2d) = if mean_cluster.mean == 0.0 {
        (0.0, 0.0)
    } else {
        let d = mean_cluster.mean / p_c.mean;
        let v = (sd(mean_cluster) / p_c.mean).powi(2)
            + (mean_cluster.mean * sd(p_c) / (p_c.mean * p_c.mean)).powi(2);
        (d, v)
    };
    let var = (sd(p_ra) / (p_ra.mean * p_ra.mean)).powi(2) + var_d2d;
    let mean = cellular + d2d;
    EmpiricalEstimate {
        mean: if mean.is_nan() { f64::INFINITY } else { mean },
        ci_halfwidth: Z95 * var.sqrt(),
        n_samples: p_ra.n_samples,
    }
}

/// Simulated counterpart of the analytic report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerformanceReport {
    pub scheme: ClusteringScheme,
    pub gain_mode: GainMode,
    pub p_ra: EmpiricalEstimate,
    pub p_c: EmpiricalEstimate,
    pub mean_cluster: EmpiricalEstimate,
    pub delay: EmpiricalEstimate,
    pub realizations: u64,
    pub resampled: u64,
    /// No RA success (or no D2D success while clusters exist) was observed.
    pub degenerate: bool,
}

/// Runs exactly `n_realizations` realizations and summarizes them.
pub fn estimate_report(
    params: &SystemParams,
    scheme: &ClusteringScheme,
    n_realizations: u64,
    seed: u64,
    gain_mode: GainMode,
) -> Result<PerformanceReport, SimError> {
    let spec = CampaignSpec::new(*params, *scheme)
        .with_seed(seed)
        .with_gain_mode(gain_mode)
        .with_realizations(n_realizations)
        .with_ci_target(None);
    Ok(Campaign::run(spec)?.report())
}

/// Pooled cluster-size histogram of the observed CHs of the given networks.
pub fn empirical_cluster_pmf(realizations: &[NetworkRealization]) -> Vec<f64> {
    let mut counts: Vec<u64> = Vec::new();
    let mut total = 0u64;
    for net in realizations {
        for c in net.observed_chs() {
            let s = net.cluster_sizes[c] as usize;
            if counts.len() <= s {
                counts.resize(s + 1, 0);
            }
            counts[s] += 1;
            total += 1;
        }
    }
    counts
        .iter()
        .map(|&c| c as f64 / total.max(1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_estimate_basics() {
        let e = EmpiricalEstimate::ratio([(3.0, 10), (5.0, 10)]);
        assert_eq!(e.mean, 0.4);
        assert_eq!(e.n_samples, 20);
        assert!(e.ci_halfwidth > 0.0);
        let single = EmpiricalEstimate::ratio([(50.0, 100)]);
        assert!((single.ci_halfwidth - Z95 * (0.25f64 / 100.0).sqrt()).abs() < 1e-12);
        assert_eq!(EmpiricalEstimate::ratio([]).n_samples, 0);
    }

    fn small_spec(delta: f64) -> CampaignSpec {
        CampaignSpec::new(
            SystemParams::reference(160.0),
            ClusteringScheme::rbc(delta).unwrap(),
        )
        .with_region(Region::new(5.0, 1.0).unwrap())
        .with_realizations(4)
        .with_ci_target(None)
    }

    #[test]
    fn deterministic_under_seed() {
        let a = Campaign::run(small_spec(0.4).with_seed(42)).unwrap();
        let b = Campaign::run(small_spec(0.4).with_seed(42)).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        let c = Campaign::run(small_spec(0.4).with_seed(43)).unwrap();
        assert_ne!(a.outcomes, c.outcomes);
    }

    #[test]
    fn extension_reuses_prefix() {
        let mut a = Campaign::run(small_spec(0.4)).unwrap();
        let b = Campaign::run(small_spec(0.4).with_realizations(6)).unwrap();
        a.extend_to(6).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn conventional_delay_is_reciprocal() {
        let r = Campaign::run(small_spec(1.0)).unwrap().report();
        assert_eq!(r.mean_cluster.mean, 0.0);
        assert_eq!(r.p_c.n_samples, 0);
        assert!((r.delay.mean - 1.0 / r.p_ra.mean).abs() < 1e-12);
    }

    #[test]
    fn point_mass_pmf_at_delta_one() {
        let c = Campaign::run(small_spec(1.0)).unwrap();
        let pmf = c.cluster_pmf();
        assert_eq!(pmf.len(), 1);
        assert_eq!(pmf[0].mean, 1.0);
    }

    #[test]
    fn auto_extension_reaches_target() {
        let spec = small_spec(0.5)
            .with_ci_target(Some(0.05))
            .with_realizations(2);
        let c = Campaign::run(spec).unwrap();
        assert!(c.p_ra().ci_halfwidth <= 0.05);
        assert!(c.p_c().ci_halfwidth <= 0.05);
    }

    #[test]
    fn histogram_sums_to_one() {
        let params = SystemParams::reference(160.0);
        let scheme = ClusteringScheme::rbc(0.2).unwrap();
        let region = Region::new(5.0, 1.0).unwrap();
        let nets: Vec<_> = (0..3)
            .map(|i| {
                NetworkRealization::generate(&params, &scheme, &region, 8, i)
                    .unwrap()
                    .0
            })
            .collect();
        let pmf = empirical_cluster_pmf(&nets);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
