use crate::model::VORONOI_SHAPE;

use super::SpecialError;

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecialError::InvalidArgument {
            name: "x",
            value: x,
        });
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Gamma-Poisson count distribution of points falling in a PPP Voronoi cell:
///
/// `P{N = n} = Γ(n+c) / (Γ(n+1) Γ(c)) · (m/(m+c))^n · (c/(m+c))^c`
///
/// with mean `m` and shape `c = 3.575`. The table is truncated once the
/// cumulative mass exceeds `1 - mass_tol`.
#[derive(Debug, Clone)]
pub struct CountPmf {
    mean: f64,
    probs: Vec<f64>,
}

impl CountPmf {
    pub const DEFAULT_MASS_TOL: f64 = 1e-10;

    pub fn new(mean: f64) -> Self {
        Self::with_mass_tol(mean, Self::DEFAULT_MASS_TOL)
    }

    pub fn with_mass_tol(mean: f64, mass_tol: f64) -> Self {
        assert!(
            mean >= 0.0 && mean.is_finite(),
            "mean must be finite and nonnegative"
        );
        let c = VORONOI_SHAPE;
        let mut probs = Vec::new();
        if mean == 0.0 {
            probs.push(1.0);
            return Self { mean, probs };
        }
        // Recurrence P(n+1) = P(n) · (n + c)/(n + 1) · m/(m + c).
        let ratio = mean / (mean + c);
        let mut p = Self::point(mean, 0);
        let mut cumulative = 0.0;
        let mut n = 0usize;
        loop {
            probs.push(p);
            cumulative += p;
            if cumulative >= 1.0 - mass_tol || n > 1_000_000 {
                break;
            }
            p *= (n as f64 + c) / (n as f64 + 1.0) * ratio;
            n += 1;
            // Refresh from the closed form periodically to bound drift.
            if n.is_multiple_of(256) {
                p = Self::point(mean, n);
            }
        }
        Self { mean, probs }
    }

    /// Closed-form evaluation through `ln Γ`.
    pub fn point(mean: f64, n: usize) -> f64 {
        let c = VORONOI_SHAPE;
        if mean == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let nf = n as f64;
        let log_coeff = statrs::function::gamma::ln_gamma(nf + c)
            - statrs::function::gamma::ln_gamma(nf + 1.0)
            - statrs::function::gamma::ln_gamma(c);
        let log_p = log_coeff + nf * (mean / (mean + c)).ln() + c * (c / (mean + c)).ln();
        log_p.exp()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs
            .get(n)
            .copied()
            .unwrap_or_else(|| Self::point(self.mean, n))
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability generating function `Σ P{N=n} z^n` over the truncated
    /// table, evaluated with Horner's scheme.
    pub fn pgf<T>(&self, z: T) -> T
    where
        T: Copy + std::ops::Mul<Output = T> + std::ops::Add<f64, Output = T> + From<f64>,
    {
        let mut acc = T::from(0.0);
        for &p in self.probs.iter().rev() {
            acc = acc * z + p;
        }
        acc
    }
}
