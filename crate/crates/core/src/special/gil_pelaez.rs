//! CDF recovery from a Laplace transform through the Gil-Pelaez inversion
//!
//! `F(x) = 1/2 - (1/π) ∫_0^∞ Im{ e^{-jtx} φ(t) } / t dt`, `φ(t) = L(-jt)`.
//!
//! The integral runs in the scaled variable `t·scale` over composite 16-point
//! Gauss-Legendre panels narrow enough to resolve `e^{-jtx}` plus the
//! transform's own oscillation. Integration stops once `|φ|` has fallen below
//! the tail tolerance over a whole panel. If `t_max` is reached first, the
//! remaining oscillating tail is handled by averaging the partial integrals
//! over the last half of the range.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use super::quad::gl16;

/// `E[exp(-s I)]` of a nonnegative random variable `I`.
pub trait LaplaceTransform {
    fn laplace(&self, s: Complex64) -> Complex64;

    /// Typical magnitude of `I`; the inversion works in units of it.
    fn scale(&self) -> f64 {
        1.0
    }

    /// Angular frequency (in scaled units) at which `L(-jt)` oscillates.
    fn oscillation_hint(&self) -> f64 {
        0.0
    }
}

impl<T: LaplaceTransform + ?Sized> LaplaceTransform for &T {
    fn laplace(&self, s: Complex64) -> Complex64 {
        (**self).laplace(s)
    }
    fn scale(&self) -> f64 {
        (**self).scale()
    }
    fn oscillation_hint(&self) -> f64 {
        (**self).oscillation_hint()
    }
}

/// Wraps a closure as a [`LaplaceTransform`].
pub struct ClosureTransform<F> {
    f: F,
    scale: f64,
    hint: f64,
}

impl<F: Fn(Complex64) -> Complex64> ClosureTransform<F> {
    pub fn new(f: F) -> Self {
        Self {
            f,
            scale: 1.0,
            hint: 0.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_oscillation_hint(mut self, hint: f64) -> Self {
        self.hint = hint;
        self
    }
}

impl<F: Fn(Complex64) -> Complex64> LaplaceTransform for ClosureTransform<F> {
    fn laplace(&self, s: Complex64) -> Complex64 {
        (self.f)(s)
    }
    fn scale(&self) -> f64 {
        self.scale
    }
    fn oscillation_hint(&self) -> f64 {
        self.hint
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GilPelaezError {
    #[error(
        "Gil-Pelaez integral did not converge: estimate {estimate}, error bound {error_bound}"
    )]
    NonConvergence { estimate: f64, error_bound: f64 },
    #[error("x = {x} is outside the tabulated range (max {x_max})")]
    OutOfRange { x: f64, x_max: f64 },
    #[error("non-finite transform value at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct GilPelaezOptions {
    /// Lower integration limit, in scaled units.
    pub start: f64,
    /// Upper limit of the tabulation, in scaled units.
    pub t_max: f64,
    /// Stop once `|φ|` stays below this over a panel.
    pub tail_tol: f64,
    /// Widest panel allowed, in scaled units.
    pub max_panel: f64,
    /// Results whose error bound exceeds this are reported as non-converged.
    pub report_tol: f64,
    /// Tabulation stops early, as if `t_max` were reached, past this many panels.
    pub max_panels: usize,
}

impl Default for GilPelaezOptions {
    fn default() -> Self {
        Self {
            start: 1e-8,
            t_max: 2e4,
            tail_tol: 1e-10,
            max_panel: 0.5,
            report_tol: 1e-4,
            max_panels: 1 << 18,
        }
    }
}

/// `L(-jt)` tabulated on the quadrature nodes, reusable for many `x`.
#[derive(Debug, Clone)]
pub struct GilPelaez {
    scale: f64,
    x_max: f64,
    nodes: Vec<f64>,
    /// `w_i · φ(t_i) / t_i`
    values: Vec<Complex64>,
    panel_len: usize,
    converged: bool,
    report_tol: f64,
}

impl GilPelaez {
    /// Tabulates for evaluation at any `x` in `[0, x_max]` (physical units).
    pub fn tabulate<L: LaplaceTransform>(
        lt: &L,
        x_max: f64,
        opts: &GilPelaezOptions,
    ) -> Result<Self, GilPelaezError> {
        let scale = lt.scale();
        let xs = (x_max / scale).abs();
        let width = opts
            .max_panel
            .min(6.0 / (xs + lt.oscillation_hint().abs() + 1.0));
        let (gx, gw) = gl16();
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        let mut lo = opts.start;
        let mut converged = false;
        let mut panels = 0usize;
        while lo < opts.t_max && panels < opts.max_panels {
            panels += 1;
            let hi = (lo + width).min(opts.t_max);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let mut panel_max = 0.0f64;
            for (x, w) in gx.iter().zip(gw.iter()) {
                let t = mid + half * x;
                let phi = lt.laplace(Complex64::new(0.0, -t / scale));
                if !(phi.re.is_finite() && phi.im.is_finite()) {
                    return Err(GilPelaezError::NonFinite { t: t / scale });
                }
                panel_max = panel_max.max(phi.norm());
                nodes.push(t);
                values.push(phi * (w * half / t));
            }
            lo = hi;
            if panel_max < opts.tail_tol {
                converged = true;
                break;
            }
        }
        Ok(Self {
            scale,
            x_max: xs * scale,
            nodes,
            values,
            panel_len: gx.len(),
            converged,
            report_tol: opts.report_tol,
        })
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Upper end of the tabulated range, in scaled units.
    pub fn t_end(&self) -> f64 {
        self.nodes.last().copied().unwrap_or(0.0)
    }

    /// `F(x)` with an error bound. `x < 0` gives 0 since the variable is
    /// nonnegative.
    pub fn cdf_with_error(&self, x: f64) -> Result<(f64, f64), GilPelaezError> {
        if x < 0.0 {
            return Ok((0.0, 0.0));
        }
        if x > self.x_max * (1.0 + 1e-12) {
            return Err(GilPelaezError::OutOfRange {
                x,
                x_max: self.x_max,
            });
        }
        let xs = x / self.scale;
        let panels = self.nodes.len() / self.panel_len;
        let mut partial = Vec::with_capacity(panels);
        let mut sum = 0.0;
        for (t_chunk, v_chunk) in self
            .nodes
            .chunks(self.panel_len)
            .zip(self.values.chunks(self.panel_len))
        {
            for (&t, v) in t_chunk.iter().zip(v_chunk) {
                let (s, c) = (t * xs).sin_cos();
                // Im{ (c - j s) · v }
                sum += c * v.im - s * v.re;
            }
            partial.push(sum);
        }
        let (integral, error) = if self.converged || partial.len() < 4 {
            (sum, 0.0)
        } else {
            let tail = &partial[partial.len() / 2..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            let (lo, hi) = tail
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
            (mean, 0.5 * (hi - lo))
        };
        let f = (0.5 - integral / PI).clamp(0.0, 1.0);
        Ok((f, error / PI))
    }

    pub fn cdf(&self, x: f64) -> Result<f64, GilPelaezError> {
        let (f, err) = self.cdf_with_error(x)?;
        if err > self.report_tol {
            return Err(GilPelaezError::NonConvergence {
                estimate: f,
                error_bound: err,
            });
        }
        Ok(f)
    }
}

/// `P{I <= x}` from the Laplace transform of `I`.
pub fn gil_pelaez_cdf<L: LaplaceTransform>(
    lt: &L,
    x: f64,
    opts: &GilPelaezOptions,
) -> Result<f64, GilPelaezError> {
    if x < 0.0 {
        return Ok(0.0);
    }
    GilPelaez::tabulate(lt, x, opts)?.cdf(x)
}
