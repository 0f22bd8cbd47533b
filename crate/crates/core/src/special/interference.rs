//! Laplace transform of the aggregate RA interference seen by a BS.
//!
//! Inter-cell part: interfering CHs form a PPP thinned per ZC code, each
//! received with mean power below `ρ_L` and a gain shifted by `τ`. In units
//! where `z = s·ρ_L` its log-transform is `-2·m·K(z)` with
//!
//! `K(z) = ∫_1^∞ (1 - e^{-τ z w^{-η}} / (1 + z w^{-η})) w dw`
//!
//! and `m` the mean number of same-code CHs per BS. Intra-cell part: `N`
//! neighbours drawn from the Voronoi count distribution, each received at
//! exactly `ρ_L·(τ + Exp(1))`.

use num_complex::Complex64;

use super::gamma::CountPmf;
use super::gil_pelaez::LaplaceTransform;
use super::quad::{improper_quad, integrate, integrate_to_infinity, QuadOptions};
use super::SpecialError;
use crate::model::{derive, ClusteringScheme, SystemParams};

/// `expm1(y) / y`, accurate near zero.
fn expm1_ratio(y: Complex64) -> Complex64 {
    if y.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..40 {
            term = term * y / k as f64;
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (y.exp() - 1.0) / y
    }
}

fn expm1_ratio_real(y: f64) -> f64 {
    if y == 0.0 {
        1.0
    } else {
        y.exp_m1() / y
    }
}

/// `2 θ^{2/η} ∫_{θ^{-1/η}}^∞ (1 - e^{-τ y^{-η}} / (1 + y^{-η})) y dy`, the
/// exponent kernel of the inter-cell interference under CGBC.
pub fn intercell_exponent(eta: f64, theta: f64, tau: f64) -> Result<f64, SpecialError> {
    if !(eta > 2.0) || !eta.is_finite() {
        return Err(SpecialError::DivergentExponent(eta));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(SpecialError::InvalidArgument {
            name: "theta",
            value: theta,
        });
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(SpecialError::InvalidArgument {
            name: "tau",
            value: tau,
        });
    }
    let lower = theta.powf(-1.0 / eta);
    let integral = improper_quad(
        |y| {
            let x = y.powf(-eta);
            // 1 - e^{-τx}/(1+x) = x (1 + τ·expm1(-τx)/(-τx)) / (1+x)
            x * (1.0 + tau * expm1_ratio_real(-tau * x)) / (1.0 + x) * y
        },
        lower,
        1e-13,
    )?;
    Ok(2.0 * theta.powf(2.0 / eta) * integral)
}

/// The inter-cell kernel `K(z)` for complex `z` with `Re z >= 0`.
///
/// Small `|z|` is integrated directly after `v = w^{-η}`, `v = s^{1/(1-a)}`
/// (`a = 2/η`), which leaves a smooth integrand on `[0, 1]`. Large `|z|`
/// rotates the `v` contour onto the ray `arg v = -arg z`, where the
/// oscillating exponential becomes a decaying one:
///
/// `K(z) = (C z^a - 1/a + e^{jφ} e^{-τz} J(z)) / η`,
/// `J(z) = ∫_0^∞ e^{-τ|z|u} (1+z+|z|u)^{-1} (1+e^{jφ}u)^{-a-1} du`, `φ = -arg z`,
///
/// with `C = ∫_0^∞ (1 - e^{-τr}/(1+r)) r^{-a-1} dr` computed once.
#[derive(Debug, Clone)]
pub struct InterCellKernel {
    eta: f64,
    tau: f64,
    a: f64,
    p: f64,
    full_plane: f64,
    opts: QuadOptions,
}

impl InterCellKernel {
    const DIRECT_RADIUS: f64 = 4.0;
    const DIRECT_PHASE: f64 = 20.0;
    const ASYMPTOTIC_RATE: f64 = 40.0;

    pub fn new(eta: f64, tau: f64) -> Result<Self, SpecialError> {
        if !(eta > 2.0) || !eta.is_finite() {
            return Err(SpecialError::DivergentExponent(eta));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(SpecialError::InvalidArgument {
                name: "tau",
                value: tau,
            });
        }
        let a = 2.0 / eta;
        let p = 1.0 / (1.0 - a);
        let opts = QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_subdivisions: 4000,
        };
        // C = ∫_0^1 + ∫_1^∞, each mapped to a smooth integrand on [0, 1].
        let near: f64 = integrate(
            |s: f64| {
                let r = s.powf(p);
                p * (1.0 + tau * expm1_ratio_real(-tau * r)) / (1.0 + r)
            },
            0.0,
            1.0,
            &opts,
        )?;
        let far: f64 = integrate(
            |s: f64| {
                if s <= 0.0 {
                    return 1.0 / a;
                }
                let r = s.powf(-1.0 / a);
                (1.0 - (-tau * r).exp() / (1.0 + r)) / a
            },
            0.0,
            1.0,
            &opts,
        )?;
        Ok(Self {
            eta,
            tau,
            a,
            p,
            full_plane: near + far,
            opts,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `C(τ, a)`; equals `π / sin(π a)` at `τ = 0`.
    pub fn full_plane_constant(&self) -> f64 {
        self.full_plane
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, SpecialError> {
        let r = z.norm();
        if r == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if r <= Self::DIRECT_RADIUS && self.tau * r <= Self::DIRECT_PHASE {
            self.eval_direct(z)
        } else {
            self.eval_rotated(z)
        }
    }

    pub(crate) fn eval_direct(&self, z: Complex64) -> Result<Complex64, SpecialError> {
        let (tau, p) = (self.tau, self.p);
        let integral: Complex64 = integrate(
            |s: f64| {
                let v = s.powf(p);
                let x = z * v;
                z * (1.0 + tau * expm1_ratio(-tau * x)) / (1.0 + x)
            },
            0.0,
            1.0,
            &self.opts,
        )?;
        Ok(integral * (p / self.eta))
    }

    pub(crate) fn eval_rotated(&self, z: Complex64) -> Result<Complex64, SpecialError> {
        let a = self.a;
        let modulus = z.norm();
        let phi = -z.arg();
        let dir = Complex64::from_polar(1.0, phi);
        let rate = self.tau * modulus;
        let j = if rate >= Self::ASYMPTOTIC_RATE {
            self.correction_asymptotic(z, modulus, dir, rate)
        } else {
            self.correction_quadrature(z, modulus, dir, rate)?
        };
        let value = self.full_plane * z.powf(a) - 1.0 / a + dir * (-self.tau * z).exp() * j;
        Ok(value / self.eta)
    }

    fn correction_quadrature(
        &self,
        z: Complex64,
        modulus: f64,
        dir: Complex64,
        rate: f64,
    ) -> Result<Complex64, SpecialError> {
        let a = self.a;
        let stretch = rate.max(1.0);
        integrate_to_infinity(
            |r: f64| {
                let u = r / stretch;
                let damp = (-rate * u).exp();
                if damp == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                damp / (1.0 + z + modulus * u) * (1.0 + dir * u).powf(-a - 1.0) / stretch
            },
            0.0,
            &self.opts,
        )
    }

    /// Watson-lemma expansion of `J` for a large damping rate `λ = τ|z|`:
    /// `J ≈ Σ_k k! [u^k] g(u) / λ^{k+1}` with `g(u) = (1+z+|z|u)^{-1}(1+e^{jφ}u)^{-a-1}`.
    fn correction_asymptotic(
        &self,
        z: Complex64,
        modulus: f64,
        dir: Complex64,
        rate: f64,
    ) -> Complex64 {
        const TERMS: usize = 30;
        let a = self.a;
        let one_plus_z = 1.0 + z;
        let first_ratio = -modulus / one_plus_z;
        let mut first = [Complex64::new(0.0, 0.0); TERMS];
        let mut second = [Complex64::new(0.0, 0.0); TERMS];
        first[0] = 1.0 / one_plus_z;
        second[0] = Complex64::new(1.0, 0.0);
        for i in 1..TERMS {
            first[i] = first[i - 1] * first_ratio;
            second[i] = second[i - 1] * dir * ((-a - 1.0 - (i - 1) as f64) / i as f64);
        }
        let mut sum = Complex64::new(0.0, 0.0);
        let mut factor = 1.0 / rate;
        let mut previous = f64::INFINITY;
        for k in 0..TERMS {
            if k > 0 {
                factor *= k as f64 / rate;
            }
            let coeff: Complex64 = (0..=k).map(|i| first[i] * second[k - i]).sum();
            let term = coeff * factor;
            let size = term.norm();
            if k > 2 && size > previous {
                break;
            }
            sum += term;
            if size <= 1e-17 * sum.norm() {
                break;
            }
            previous = size;
        }
        sum
    }
}

/// Laplace transform of the aggregate RA interference at a BS, built from
/// the inter-cell kernel and the truncated neighbour-count series.
#[derive(Debug, Clone)]
pub struct AggregateInterference {
    kernel: InterCellKernel,
    load: f64,
    rho_l: f64,
    neighbours: CountPmf,
}

impl AggregateInterference {
    pub fn new(params: &SystemParams, scheme: &ClusteringScheme) -> Result<Self, SpecialError> {
        let load = derive(params, scheme).alpha_tilde;
        let kernel = InterCellKernel::new(params.eta, scheme.gain_shift())?;
        Ok(Self {
            kernel,
            load,
            rho_l: params.rho_l_mw(),
            neighbours: CountPmf::new(load),
        })
    }

    /// Mean number of same-code CHs per BS.
    pub fn load(&self) -> f64 {
        self.load
    }

    pub fn kernel(&self) -> &InterCellKernel {
        &self.kernel
    }

    /// Inter-cell factor `exp(-2 m K(sρ_L))`.
    pub fn inter_cell(&self, s: Complex64) -> Result<Complex64, SpecialError> {
        let z = s * self.rho_l;
        Ok((-2.0 * self.load * self.kernel.eval(z)?).exp())
    }

    /// Intra-cell factor `P{N=0} + Σ_{n≥1} P{N=n} (e^{-τz}/(1+z))^n`.
    ///
    /// The probability mass beyond the truncation point is lumped into the
    /// first omitted term so that the factor is exactly 1 at `s = 0`.
    pub fn intra_cell(&self, s: Complex64) -> Complex64 {
        let z = s * self.rho_l;
        let w = (-self.kernel.tau() * z).exp() / (1.0 + z);
        let probs = self.neighbours.probs();
        let residual = (1.0 - self.neighbours.mass()).max(0.0);
        self.neighbours.pgf(w) + residual * w.powu(probs.len() as u32)
    }

    pub fn try_laplace(&self, s: Complex64) -> Result<Complex64, SpecialError> {
        Ok(self.inter_cell(s)? * self.intra_cell(s))
    }
}

impl LaplaceTransform for AggregateInterference {
    fn laplace(&self, s: Complex64) -> Complex64 {
        self.try_laplace(s)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    fn scale(&self) -> f64 {
        self.rho_l
    }

    fn oscillation_hint(&self) -> f64 {
        self.kernel.tau() + 1.0
    }
}

/// One-off evaluation of the aggregate interference transform at `s` [1/mW].
pub fn lt_aggregate_interference(
    s: Complex64,
    params: &SystemParams,
    scheme: &ClusteringScheme,
) -> Result<Complex64, SpecialError> {
    AggregateInterference::new(params, scheme)?.try_laplace(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::hyp2f1::hyp2f1_interference;

    const THETA_M7DB: f64 = 0.199_526_231_496_887_96;

    #[test]
    fn tau_zero_collapses_to_hypergeometric_form() {
        let v = intercell_exponent(4.0, THETA_M7DB, 0.0).unwrap();
        let r = THETA_M7DB.sqrt();
        assert!((v - r * r.atan()).abs() < 1e-11);
        let v = intercell_exponent(3.0, 2.0, 0.0).unwrap();
        let expected = 2.0 * 2.0 / 1.0 * hyp2f1_interference(3.0, 2.0).unwrap();
        assert!((v - expected).abs() < 1e-10);
    }

    #[test]
    fn cgbc_kernel_value() {
        // mpmath quad, 40 digits: η=4, θ=-7 dB, τ=-ln 0.35
        let tau = -(0.35f64).ln();
        let v = intercell_exponent(4.0, THETA_M7DB, tau).unwrap();
        assert!((v - 0.378_359_472_947_103_8).abs() < 1e-10, "{v}");
    }

    #[test]
    fn monotone_in_tau() {
        let mut last = 0.0;
        for tau in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
            let v = intercell_exponent(4.0, 0.5, tau).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn rejects_divergent_exponent() {
        assert!(matches!(
            intercell_exponent(2.0, 1.0, 0.0),
            Err(SpecialError::DivergentExponent(_))
        ));
        assert!(InterCellKernel::new(1.5, 0.0).is_err());
    }

    #[test]
    fn full_plane_constant_at_zero_shift() {
        for eta in [2.5, 3.0, 4.0, 5.0] {
            let k = InterCellKernel::new(eta, 0.0).unwrap();
            let a = 2.0 / eta;
            let expected = std::f64::consts::PI / (std::f64::consts::PI * a).sin();
            assert!((k.full_plane_constant() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn kernel_matches_real_exponent() {
        for (eta, tau) in [(4.0, 0.0), (4.0, 1.05), (3.0, 0.3), (2.5, 2.0)] {
            let k = InterCellKernel::new(eta, tau).unwrap();
            for theta in [0.01, 0.2, 1.0, 3.0, 30.0] {
                let direct = intercell_exponent(eta, theta, tau).unwrap();
                let via_kernel = 2.0 * k.eval(Complex64::new(theta, 0.0)).unwrap();
                assert!(via_kernel.im.abs() < 1e-12);
                assert!(
                    (via_kernel.re - direct).abs() < 1e-9,
                    "eta={eta} tau={tau} theta={theta}"
                );
            }
        }
    }

    #[test]
    fn kernel_complex_reference_values() {
        // mpmath quad on the defining integral, τ = -ln 0.35, η = 4.
        let k = InterCellKernel::new(4.0, -(0.35f64).ln()).unwrap();
        let cases = [
            (
                Complex64::new(0.0, -2.0),
                Complex64::new(0.721_280_250_690_160_7, -1.267_708_742_014_335),
            ),
            (
                Complex64::new(0.0, -50.0),
                Complex64::new(5.693_306_925_135_374, -6.193_333_354_971_124),
            ),
            (
                Complex64::new(1.5, -0.5),
                Complex64::new(1.041_104_712_580_036, -0.244_683_853_289_069),
            ),
        ];
        for (z, expected) in cases {
            let v = k.eval(z).unwrap();
            assert!((v - expected).norm() < 1e-10, "z={z}: {v} vs {expected}");
        }
    }

    #[test]
    fn direct_and_rotated_routes_agree() {
        for tau in [0.0, 0.4, 1.5] {
            let k = InterCellKernel::new(4.0, tau).unwrap();
            for z in [
                Complex64::new(0.0, -3.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, -2.0),
                Complex64::new(3.5, 0.0),
                Complex64::new(0.5, 1.0),
            ] {
                let d = k.eval_direct(z).unwrap();
                let r = k.eval_rotated(z).unwrap();
                assert!((d - r).norm() < 1e-10, "tau={tau} z={z}: {d} vs {r}");
            }
        }
    }

    #[test]
    fn asymptotic_correction_matches_quadrature() {
        let k = InterCellKernel::new(4.0, 1.2).unwrap();
        for t in [40.0, 80.0, 400.0] {
            let z = Complex64::new(0.0, -t);
            let dir = Complex64::from_polar(1.0, -z.arg());
            let rate = 1.2 * t;
            let asym = k.correction_asymptotic(z, t, dir, rate);
            let quad = k.correction_quadrature(z, t, dir, rate).unwrap();
            assert!(
                (asym - quad).norm() < 1e-12 * quad.norm().max(1e-6),
                "t={t}"
            );
        }
    }

    #[test]
    fn aggregate_at_zero_is_one() {
        let params = SystemParams::reference(640.0);
        for delta in [0.1, 0.35, 1.0] {
            let scheme = ClusteringScheme::cgbc(delta).unwrap();
            let v = lt_aggregate_interference(Complex64::new(0.0, 0.0), &params, &scheme).unwrap();
            assert!((v - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn aggregate_bounded_on_imaginary_axis() {
        let params = SystemParams::reference(160.0);
        let lt =
            AggregateInterference::new(&params, &ClusteringScheme::cgbc(0.35).unwrap()).unwrap();
        let rho = params.rho_l_mw();
        for t in [1e-3, 0.1, 1.0, 10.0, 1e3, 1e5] {
            let v = lt.try_laplace(Complex64::new(0.0, -t / rho)).unwrap();
            assert!(v.norm() <= 1.0 + 1e-12, "t={t}");
        }
    }

    #[test]
    fn tau_zero_closed_form() {
        // δ = 1 under CGBC has τ = 0: RBC inter-cell LT times the geometric-sum
        // intra-cell factor (1 + m/c · z/(1+z))^(-c).
        let params = SystemParams::reference(640.0);
        let lt =
            AggregateInterference::new(&params, &ClusteringScheme::cgbc(1.0).unwrap()).unwrap();
        let m = lt.load();
        let rho = params.rho_l_mw();
        for z in [0.05, 0.2, 1.0, 3.0] {
            let v = lt.try_laplace(Complex64::new(z / rho, 0.0)).unwrap();
            let inter = (-m * 2.0 * z / 2.0 * hyp2f1_interference(4.0, z).unwrap()).exp();
            let intra = (1.0 + m / crate::model::VORONOI_SHAPE * z / (1.0 + z))
                .powf(-crate::model::VORONOI_SHAPE);
            assert!((v.re - inter * intra).abs() < 1e-9, "z={z}");
            assert!(v.im.abs() < 1e-12);
        }
    }
}
