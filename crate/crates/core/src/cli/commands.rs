//! Experiment commands. Each sweep produces a [`Table`] written as CSV whose
//! header names the unit of every column; `validate` produces a JSON report.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig};
use crate::analytics::{self, AnalyticsError};
use crate::model::{
    db_to_linear, linear_to_db, ClusteringScheme, ModelError, SchemeKind, SystemParams,
};
use crate::optimize::{self, OptimizeError};
use crate::sim::{Campaign, EmpiricalEstimate, SimError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// A CSV table held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn f(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

fn run_campaign(
    cfg: &ExperimentConfig,
    params: SystemParams,
    scheme: ClusteringScheme,
) -> Result<Campaign> {
    Ok(Campaign::run(cfg.campaign(params, scheme)?)?)
}

fn sim_pair(e: Option<EmpiricalEstimate>) -> [String; 2] {
    match e {
        Some(e) => [f(e.mean), f(e.ci_halfwidth)],
        None => [String::new(), String::new()],
    }
}

/// Analytic vs empirical cluster-size PMF.
pub fn pmf(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let mut t = Table::new(&[
        "mu[devices/km2]",
        "delta[-]",
        "n[CMs]",
        "pmf_analytic[-]",
        "pmf_empirical[-]",
        "ci_halfwidth[-]",
    ]);
    for &mu in &cfg.mu {
        for &delta in &cfg.pmf_deltas {
            let scheme = ClusteringScheme::new(cfg.schemes[0], delta)?;
            let empirical = if cfg.simulate {
                run_campaign(cfg, cfg.params(mu), scheme)?.cluster_pmf()
            } else {
                Vec::new()
            };
            for n in 0..=cfg.pmf_max_n {
                let e = empirical.get(n).copied().or_else(|| {
                    // Beyond the largest observed size the estimate is exactly zero.
                    empirical.first().map(|e0| EmpiricalEstimate {
                        mean: 0.0,
                        ci_halfwidth: 0.0,
                        n_samples: e0.n_samples,
                    })
                });
                let [m, ci] = sim_pair(e);
                t.push(vec![
                    f(mu),
                    f(delta),
                    n.to_string(),
                    f(analytics::cluster_pmf(delta, n)),
                    m,
                    ci,
                ]);
            }
        }
    }
    Ok(t)
}

/// RA and D2D success probability against the SINR threshold at the
/// configured `delta`.
pub fn success_vs_threshold(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let mut t = Table::new(&[
        "mu[devices/km2]",
        "alpha[devices/BS]",
        "scheme",
        "delta[-]",
        "theta_db[dB]",
        "p_ra_analytic[-]",
        "p_ra_sim[-]",
        "p_ra_ci[-]",
        "p_c_analytic[-]",
        "p_c_sim[-]",
        "p_c_ci[-]",
    ]);
    for &mu in &cfg.mu {
        let params = cfg.params(mu);
        for &kind in &cfg.schemes {
            let scheme = ClusteringScheme::new(kind, cfg.delta)?;
            let campaign = cfg
                .simulate
                .then(|| run_campaign(cfg, params, scheme))
                .transpose()?;
            for &theta_db in &cfg.theta_grid_db {
                let p = params.with_theta_ra_db(theta_db).with_theta_c_db(theta_db);
                let theta = db_to_linear(theta_db)?;
                let [ra, ra_ci] = sim_pair(campaign.as_ref().map(|c| c.p_ra_at(theta)));
                let [pc, pc_ci] = sim_pair(campaign.as_ref().map(|c| c.p_c_at(theta)));
                t.push(vec![
                    f(mu),
                    f(params.alpha()),
                    kind.to_string(),
                    f(cfg.delta),
                    f(theta_db),
                    f(analytics::p_ra(&p, &scheme)?),
                    ra,
                    ra_ci,
                    f(analytics::p_c_d2d(&p)?),
                    pc,
                    pc_ci,
                ]);
            }
        }
    }
    Ok(t)
}

/// Access delay against the CH probability.
pub fn delay_vs_delta(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let mut t = Table::new(&[
        "mu[devices/km2]",
        "alpha[devices/BS]",
        "scheme",
        "delta[-]",
        "tau_db[dB]",
        "p_ra_analytic[-]",
        "p_c_analytic[-]",
        "delay_analytic[slots]",
        "delay_conventional[slots]",
        "p_ra_sim[-]",
        "p_ra_ci[-]",
        "delay_sim[slots]",
        "delay_ci[slots]",
    ]);
    for &mu in &cfg.mu {
        let params = cfg.params(mu);
        for &kind in &cfg.schemes {
            let conventional = analytics::delay(&params, &ClusteringScheme::new(kind, 1.0)?)?;
            for &delta in &cfg.delta_grid {
                let scheme = ClusteringScheme::new(kind, delta)?;
                let a = analytics::analyze(&params, &scheme)?;
                let report = cfg
                    .simulate
                    .then(|| run_campaign(cfg, params, scheme).map(|c| c.report()))
                    .transpose()?;
                let [ra, ra_ci] = sim_pair(report.map(|r| r.p_ra));
                let [d, d_ci] = sim_pair(report.map(|r| r.delay));
                t.push(vec![
                    f(mu),
                    f(params.alpha()),
                    kind.to_string(),
                    f(delta),
                    opt(scheme.tau().filter(|&x| x > 0.0).map(linear_to_db)),
                    f(a.p_ra),
                    f(a.p_c),
                    f(a.delay),
                    f(conventional),
                    ra,
                    ra_ci,
                    d,
                    d_ci,
                ]);
            }
        }
    }
    Ok(t)
}

/// Optimal CH probability per scheme over the load grid.
pub fn optimize_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let mut t = Table::new(&[
        "alpha[devices/BS]",
        "mu[devices/km2]",
        "scheme",
        "delta_star[-]",
        "tau_star_db[dB]",
        "d_star[slots]",
        "d_conventional[slots]",
        "reduction[%]",
        "iterations[-]",
        "grid_fallback",
        "selected",
    ]);
    let base = cfg.params(cfg.mu[0]);
    for &alpha in &cfg.alpha_grid {
        let params = base.with_alpha(alpha);
        let results = cfg
            .schemes
            .iter()
            .map(|&k| optimize::optimize_delta(&params, k, cfg.eps))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let best = results
            .iter()
            .map(|r| r.d_star)
            .fold(f64::INFINITY, f64::min);
        for r in &results {
            t.push(vec![
                f(alpha),
                f(params.mu),
                r.scheme.to_string(),
                f(r.delta_star),
                opt(r.tau_star_db.filter(|v| v.is_finite())),
                f(r.d_star),
                f(r.d_conventional),
                f(r.reduction_pct),
                r.iterations.to_string(),
                r.grid_fallback.to_string(),
                (r.d_star == best).to_string(),
            ]);
        }
    }
    Ok(t)
}

/// Protocol efficiency at each scheme's optimum over the load grid.
pub fn efficiency_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let mut t = Table::new(&[
        "alpha[devices/BS]",
        "zeta_rbc[%]",
        "zeta_cgbc[%]",
        "delta_star_rbc[-]",
        "delta_star_cgbc[-]",
    ]);
    let base = cfg.params(cfg.mu[0]);
    for &alpha in &cfg.alpha_grid {
        let params = base.with_alpha(alpha);
        let rbc = optimize::optimize_delta(&params, SchemeKind::Rbc, cfg.eps)?;
        let cgbc = optimize::optimize_delta(&params, SchemeKind::Cgbc, cfg.eps)?;
        t.push(vec![
            f(alpha),
            opt(rbc.efficiency()),
            opt(cgbc.efficiency()),
            f(rbc.delta_star),
            f(cgbc.delta_star),
        ]);
    }
    Ok(t)
}

/// One analytic-vs-simulation comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub mu: f64,
    pub scheme: SchemeKind,
    pub delta: f64,
    pub theta_db: f64,
    pub analytic: f64,
    pub simulated: f64,
    pub ci_halfwidth: f64,
    pub diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub params: ExperimentConfig,
    pub results: Vec<Check>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.results.iter().filter(|c| !c.pass)
    }
}

#[allow(clippy::too_many_arguments)]
fn check(
    name: &str,
    mu: f64,
    scheme: SchemeKind,
    delta: f64,
    theta_db: f64,
    analytic: f64,
    sim: EmpiricalEstimate,
    tolerance: f64,
) -> Check {
    let diff = sim.mean - analytic;
    Check {
        name: name.to_string(),
        mu,
        scheme,
        delta,
        theta_db,
        analytic,
        simulated: sim.mean,
        ci_halfwidth: sim.ci_halfwidth,
        diff,
        // NaN (no samples) fails.
        pass: diff.abs() <= tolerance,
        tolerance,
    }
}

/// Compares closed forms with simulation: `P_RA` for every scheme and
/// `δ` in the grid, `P_C` over the D2D threshold grid at the operating `δ`.
///
/// `perturb_theta_ra_db` shifts the RA threshold on the analytic side only,
/// which must make the harness fail.
pub fn validate(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let mut results = Vec::new();
    for &mu in &cfg.mu {
        let params = cfg.params(mu);
        let shifted = params.with_theta_ra_db(params.theta_ra_db + cfg.perturb_theta_ra_db);
        for &kind in &cfg.schemes {
            let tol = match kind {
                SchemeKind::Rbc => cfg.tol_p_ra_rbc,
                SchemeKind::Cgbc => cfg.tol_p_ra_cgbc,
            };
            for &delta in &cfg.delta_grid {
                let scheme = ClusteringScheme::new(kind, delta)?;
                let sim = run_campaign(cfg, params, scheme)?.p_ra();
                let analytic = analytics::p_ra(&shifted, &scheme)?;
                results.push(check(
                    "p_ra",
                    mu,
                    kind,
                    delta,
                    params.theta_ra_db,
                    analytic,
                    sim,
                    tol,
                ));
            }
        }
        let scheme = ClusteringScheme::new(cfg.schemes[0], cfg.delta)?;
        // The highest threshold has the widest CI, so size the run for it.
        let hardest = cfg
            .theta_c_grid_db
            .iter()
            .copied()
            .fold(params.theta_c_db, f64::max);
        let campaign = run_campaign(cfg, params.with_theta_c_db(hardest), scheme)?;
        for &theta_db in &cfg.theta_c_grid_db {
            let analytic = analytics::p_c_d2d(&params.with_theta_c_db(theta_db))?;
            let sim = campaign.p_c_at(db_to_linear(theta_db)?);
            results.push(check(
                "p_c",
                mu,
                scheme.kind(),
                cfg.delta,
                theta_db,
                analytic,
                sim,
                cfg.tol_p_c,
            ));
        }
    }
    let pass = results.iter().all(|c| c.pass);
    Ok(ValidationReport {
        params: cfg.clone(),
        results,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ExperimentConfig {
        ExperimentConfig {
            mu: vec![160.0],
            realizations: 4,
            max_realizations: 4,
            ci_target: 1.0,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn pmf_table_shape() {
        let cfg = ExperimentConfig {
            pmf_deltas: vec![0.2],
            pmf_max_n: 30,
            ..quick()
        };
        let t = pmf(&cfg).unwrap();
        assert_eq!(t.rows.len(), 31);
        let a = t.column("pmf_analytic[-]").unwrap();
        let e = t.column("pmf_empirical[-]").unwrap();
        let sum_a: f64 = t.rows.iter().map(|r| r[a].parse::<f64>().unwrap()).sum();
        let sum_e: f64 = t.rows.iter().map(|r| r[e].parse::<f64>().unwrap()).sum();
        assert!(sum_a > 0.99 && sum_a <= 1.0 + 1e-12);
        assert!(sum_e > 0.99 && sum_e <= 1.0 + 1e-12);
    }

    #[test]
    fn analytic_only_tables_leave_sim_columns_empty() {
        let cfg = ExperimentConfig {
            simulate: false,
            delta_grid: vec![0.5, 1.0],
            ..quick()
        };
        let t = delay_vs_delta(&cfg).unwrap();
        assert_eq!(t.rows.len(), 4);
        let d = t.column("delay_sim[slots]").unwrap();
        assert!(t.rows.iter().all(|r| r[d].is_empty()));
        // At δ = 1 both schemes reduce to conventional access.
        let conv = t.column("delay_conventional[slots]").unwrap();
        let da = t.column("delay_analytic[slots]").unwrap();
        for r in t.rows.iter().filter(|r| r[3] == "1") {
            assert_eq!(r[da], r[conv]);
        }
    }

    #[test]
    fn csv_header_carries_units() {
        let cfg = ExperimentConfig {
            simulate: false,
            theta_grid_db: vec![-10.0, 0.0],
            ..quick()
        };
        let t = success_vs_threshold(&cfg).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.contains("theta_db[dB]"));
        assert_eq!(text.lines().count(), 1 + 4);
    }

    #[test]
    fn efficiency_sweep_rows() {
        let cfg = ExperimentConfig {
            alpha_grid: vec![16.0, 64.0],
            eps: 1e-3,
            ..quick()
        };
        let t = efficiency_sweep(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        let z = t.column("zeta_cgbc[%]").unwrap();
        let v: f64 = t.rows[1][z].parse().unwrap();
        assert!(v < 0.0, "{v}");
    }
}
