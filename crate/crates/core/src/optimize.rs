//! Golden-section search for the CH selection probability that minimizes
//! the mean access delay, and selection between the two clustering schemes.

use serde::Serialize;
use thiserror::Error;

use crate::analytics::{self, AnalyticsError};
use crate::model::{linear_to_db, ClusteringScheme, ModelError, SchemeKind, SystemParams};

/// Golden ratio `K = (1 + √5)/2`; the bracket shrinks by `1/K` per iteration.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// Lower end of the δ search interval; the delay diverges as δ → 0.
pub const DELTA_MIN: f64 = 1e-3;
pub const DEFAULT_EPS: f64 = 1e-6;
const VERIFY_GRID: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("invalid search interval [{lo}, {hi}] with eps {eps}")]
    InvalidInterval { lo: f64, hi: f64, eps: f64 },
    #[error("objective returned NaN at x = {x}")]
    NonFinite { x: f64 },
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoldenSection {
    pub x_star: f64,
    pub f_star: f64,
    pub iterations: u32,
    /// Final bracket `[lo, hi]`.
    pub bracket: (f64, f64),
}

/// Smallest `n` with `interval / K^n <= eps`.
pub fn iteration_bound(interval: f64, eps: f64) -> u32 {
    assert!(
        interval > 0.0 && eps > 0.0,
        "interval and eps must be positive"
    );
    let ratio = interval / eps;
    if ratio <= 1.0 {
        return 0;
    }
    let n = (ratio.ln() / GOLDEN.ln()).ceil();
    // Guard against ln round-off putting n one below the true ceiling.
    let n = if interval * GOLDEN.powf(-n) > eps {
        n + 1.0
    } else {
        n
    };
    n as u32
}

/// Golden-section minimization of `f` on `[lo, hi]`, running exactly
/// [`iteration_bound`]`(hi - lo, eps)` iterations. `+∞` is a valid objective
/// value; NaN is an error.
pub fn try_golden_section_minimize<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    eps: f64,
) -> Result<GoldenSection, OptimizeError>
where
    F: FnMut(f64) -> Result<f64, OptimizeError>,
{
    if !(lo < hi) || !(eps > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(OptimizeError::InvalidInterval { lo, hi, eps });
    }
    let mut eval = |x: f64| -> Result<f64, OptimizeError> {
        let v = f(x)?;
        if v.is_nan() {
            Err(OptimizeError::NonFinite { x })
        } else {
            Ok(v)
        }
    };
    let n = iteration_bound(hi - lo, eps);
    let inv = 1.0 / GOLDEN;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - (b - a) * inv;
    let mut d = a + (b - a) * inv;
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for i in 0..n {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            if i + 1 < n {
                c = b - (b - a) * inv;
                fc = eval(c)?;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            if i + 1 < n {
                d = a + (b - a) * inv;
                fd = eval(d)?;
            }
        }
    }
    // One interior point always survives inside the final bracket.
    let (x_star, f_star) = if fc <= fd { (c, fc) } else { (d, fd) };
    let (x_star, f_star) = if x_star >= a && x_star <= b {
        (x_star, f_star)
    } else if c >= a && c <= b {
        (c, fc)
    } else {
        (d, fd)
    };
    Ok(GoldenSection {
        x_star,
        f_star,
        iterations: n,
        bracket: (a, b),
    })
}

/// Infallible-objective variant of [`try_golden_section_minimize`].
pub fn golden_section_minimize<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    eps: f64,
) -> Result<GoldenSection, OptimizeError> {
    try_golden_section_minimize(|x| Ok(f(x)), lo, hi, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub scheme: SchemeKind,
    pub delta_star: f64,
    /// `-ln δ*` for CGBC.
    pub tau_star: Option<f64>,
    pub tau_star_db: Option<f64>,
    pub d_star: f64,
    /// Delay of conventional access (δ = 1).
    pub d_conventional: f64,
    /// `(D(1) - D*)/D(1) · 100`.
    pub reduction_pct: f64,
    pub iterations: u32,
    /// Whether the verification grid beat the golden-section point.
    pub grid_fallback: bool,
}

impl OptimizationResult {
    /// Protocol efficiency at the optimum, percent; `None` when δ* = 1.
    pub fn efficiency(&self) -> Option<f64> {
        let mean = analytics::cluster_mean(self.delta_star);
        (mean > 0.0).then(|| analytics::efficiency_from(self.d_star, self.d_conventional, mean))
    }
}

/// Minimizes the analytic delay over `δ ∈ [1e-3, 1]` for one scheme.
pub fn optimize_delta(
    params: &SystemParams,
    kind: SchemeKind,
    eps: f64,
) -> Result<OptimizationResult, OptimizeError> {
    let p_c = analytics::p_c_d2d(params)?;
    optimize_with_bound(
        kind,
        eps,
        |delta| {
            Ok(analytics::delay(
                params,
                &ClusteringScheme::new(kind, delta)?,
            )?)
        },
        // P_RA <= 1, so the D2D term alone bounds the delay from below.
        |delta| analytics::delay_from(1.0, p_c, delta),
    )
}

/// [`optimize_delta`] over an arbitrary delay function of δ.
pub fn optimize_with<F>(
    kind: SchemeKind,
    eps: f64,
    delay: F,
) -> Result<OptimizationResult, OptimizeError>
where
    F: FnMut(f64) -> Result<f64, OptimizeError>,
{
    optimize_with_bound(kind, eps, delay, |_| f64::NEG_INFINITY)
}

/// [`optimize_with`] where grid points whose `lower_bound` already rules them
/// out are skipped without evaluating `delay`.
pub fn optimize_with_bound<F, B>(
    kind: SchemeKind,
    eps: f64,
    mut delay: F,
    mut lower_bound: B,
) -> Result<OptimizationResult, OptimizeError>
where
    F: FnMut(f64) -> Result<f64, OptimizeError>,
    B: FnMut(f64) -> f64,
{
    let golden = try_golden_section_minimize(&mut delay, DELTA_MIN, 1.0, eps)?;
    let mut best = (golden.x_star, golden.f_star);
    let mut grid_fallback = false;
    let d_conventional = delay(1.0)?;
    let step = (1.0 - DELTA_MIN) / (VERIFY_GRID - 1) as f64;
    for i in 0..VERIFY_GRID {
        let x = if i + 1 == VERIFY_GRID {
            1.0
        } else {
            DELTA_MIN + step * i as f64
        };
        if lower_bound(x) >= best.1 - eps {
            continue;
        }
        let v = if i + 1 == VERIFY_GRID {
            d_conventional
        } else {
            delay(x)?
        };
        if v.is_nan() {
            return Err(OptimizeError::NonFinite { x });
        }
        if v < best.1 - eps {
            best = (x, v);
            grid_fallback = true;
        }
    }
    // Conventional access wins ties, so a search that creeps up to δ = 1
    // reports exactly 1.
    if d_conventional <= best.1 {
        best = (1.0, d_conventional);
    }
    let (delta_star, d_star) = best;
    let tau_star = (kind == SchemeKind::Cgbc).then(|| -delta_star.ln());
    Ok(OptimizationResult {
        scheme: kind,
        delta_star,
        tau_star,
        tau_star_db: tau_star.map(linear_to_db),
        d_star,
        d_conventional,
        reduction_pct: (d_conventional - d_star) / d_conventional * 100.0,
        iterations: golden.iterations,
        grid_fallback,
    })
}

/// Both scheme optima and the lower-delay choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeSelection {
    pub rbc: OptimizationResult,
    pub cgbc: OptimizationResult,
    pub selected: OptimizationResult,
}

pub fn select_scheme_detailed(
    params: &SystemParams,
    eps: f64,
) -> Result<SchemeSelection, OptimizeError> {
    let rbc = optimize_delta(params, SchemeKind::Rbc, eps)?;
    let cgbc = optimize_delta(params, SchemeKind::Cgbc, eps)?;
    let selected = if cgbc.d_star <= rbc.d_star { cgbc } else { rbc };
    Ok(SchemeSelection {
        rbc,
        cgbc,
        selected,
    })
}

/// Optimizes both schemes and returns the one with the lower delay.
pub fn select_scheme(params: &SystemParams, eps: f64) -> Result<OptimizationResult, OptimizeError> {
    Ok(select_scheme_detailed(params, eps)?.selected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iteration_bounds() {
        assert_eq!(iteration_bound(1.0, 1e-6), 29);
        assert_eq!(iteration_bound(1.0, 0.01), 10);
        assert_eq!(iteration_bound(0.5, 0.5), 0);
        assert_eq!(iteration_bound(1.0, 2.0), 0);
    }

    #[test]
    fn quadratic_minimum() {
        let r = golden_section_minimize(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-6).unwrap();
        assert_eq!(r.iterations, 29);
        assert!((r.x_star - 0.3).abs() <= 1e-6);
        assert!(r.bracket.1 - r.bracket.0 <= 1e-6);
    }

    #[test]
    fn bracket_shrinks_by_golden_ratio() {
        let mut evals = 0;
        let r = golden_section_minimize(
            |x| {
                evals += 1;
                (x - 0.7).abs()
            },
            0.0,
            1.0,
            0.01,
        )
        .unwrap();
        assert_eq!(r.iterations, 10);
        assert_eq!(evals, 11);
        let expected = GOLDEN.powi(-10);
        assert!(((r.bracket.1 - r.bracket.0) - expected).abs() < 1e-9);
    }

    #[test]
    fn constant_objective() {
        let r = golden_section_minimize(|_| 2.5, -1.0, 1.0, 1e-4).unwrap();
        assert_eq!(r.f_star, 2.5);
        assert!((-1.0..=1.0).contains(&r.x_star));
    }

    #[test]
    fn infinite_values_allowed_nan_rejected() {
        let r =
            golden_section_minimize(|x| if x < 0.2 { f64::INFINITY } else { x }, 0.0, 1.0, 1e-6)
                .unwrap();
        assert!((r.x_star - 0.2).abs() < 1e-5);
        let r = golden_section_minimize(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, 1e-6);
        assert!(matches!(r, Err(OptimizeError::NonFinite { .. })));
        assert!(golden_section_minimize(|x| x, 1.0, 0.0, 1e-6).is_err());
    }

    #[test]
    fn grid_fallback_catches_second_basin() {
        // Local minimum near 0.9 lures the search; global one is at 0.05.
        let f = |d: f64| {
            let a = 1.0 - (-((d - 0.9) / 0.05).powi(2)).exp();
            let b = 2.0 - 2.5 * (-((d - 0.05) / 0.02).powi(2)).exp();
            Ok(a.min(b))
        };
        let r = optimize_with(SchemeKind::Rbc, 1e-6, f).unwrap();
        assert!(r.delta_star < 0.1);
        assert!(r.grid_fallback);
    }

    #[test]
    fn rbc_optimum_alpha_64() {
        let r = optimize_delta(
            &SystemParams::reference(640.0),
            SchemeKind::Rbc,
            DEFAULT_EPS,
        )
        .unwrap();
        assert!((r.delta_star - 0.586).abs() < 0.01, "{r:?}");
        assert!((r.reduction_pct - 6.07).abs() < 0.1, "{r:?}");
        assert!(r.d_star <= r.d_conventional);
        assert_eq!(r.tau_star, None);
    }

    #[test]
    fn selection_is_minimum() {
        let s = select_scheme_detailed(&SystemParams::reference(640.0), DEFAULT_EPS).unwrap();
        assert_eq!(s.selected.scheme, SchemeKind::Cgbc);
        assert_eq!(s.selected.d_star, s.rbc.d_star.min(s.cgbc.d_star));
        let tau = s.cgbc.tau_star.unwrap();
        assert!((tau - (-s.cgbc.delta_star.ln())).abs() < 1e-15);
        assert!((s.cgbc.tau_star_db.unwrap() - 10.0 * tau.log10()).abs() < 1e-12);
    }

    #[test]
    fn pruning_never_changes_the_optimum() {
        let f = |d: f64| 1.0 / d + 4.0 * (1.0 - d) / (0.9 * d) - 3.0 * d;
        let plain = optimize_with(SchemeKind::Rbc, 1e-6, |d| Ok(f(d))).unwrap();
        let mut calls = 0;
        let pruned = optimize_with_bound(
            SchemeKind::Rbc,
            1e-6,
            |d| {
                calls += 1;
                Ok(f(d))
            },
            |d| f(d) - 0.5,
        )
        .unwrap();
        assert_eq!(plain, pruned);
        assert!(calls < 30 + 100);
    }
}
