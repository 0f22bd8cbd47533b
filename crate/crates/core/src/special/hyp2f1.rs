use super::quad::{integrate, QuadOptions};
use super::SpecialError;

const MAX_TERMS: usize = 10_000_000;

fn check(eta: f64, theta: f64) -> Result<(), SpecialError> {
    if !(eta > 2.0) || !eta.is_finite() {
        return Err(SpecialError::DivergentExponent(eta));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(SpecialError::InvalidArgument {
            name: "theta",
            value: theta,
        });
    }
    Ok(())
}

/// `₂F₁(1, 1-2/η; 2-2/η; -θ)`.
///
/// The negative argument is mapped through the Pfaff transformation
/// `₂F₁(1, b; b+1; -θ) = ₂F₁(1, 1; b+1; θ/(1+θ)) / (1+θ)`, whose series has
/// positive terms and a geometric tail bounded by `x/(1-x)`.
pub fn hyp2f1_interference(eta: f64, theta: f64) -> Result<f64, SpecialError> {
    check(eta, theta)?;
    if theta == 0.0 {
        return Ok(1.0);
    }
    let b = 1.0 - 2.0 / eta;
    let x = theta / (1.0 + theta);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (nf + 1.0) / (nf + 1.0 + b) * x;
        sum += term;
        if term * x / (1.0 - x) <= 1e-17 * sum {
            return Ok(sum / (1.0 + theta));
        }
    }
    Err(SpecialError::SeriesNonConvergence { terms: MAX_TERMS })
}

/// Independent route: `b ∫_0^1 t^(b-1) / (1 + θ t) dt` with `b = 1 - 2/η`,
/// integrated after the substitution `t = s^(1/b)`.
pub fn hyp2f1_integral(eta: f64, theta: f64) -> Result<f64, SpecialError> {
    check(eta, theta)?;
    let inv_b = 1.0 / (1.0 - 2.0 / eta);
    integrate(
        |s: f64| 1.0 / (1.0 + theta * s.powf(inv_b)),
        0.0,
        1.0,
        &QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_subdivisions: 2000,
        },
    )
}

/// `(2θ/(η-2)) ₂F₁(1, 1-2/η; 2-2/η; -θ)` at `η = 4`, i.e. `√θ · arctan(√θ)`.
pub fn interference_kernel_eta4(theta: f64) -> f64 {
    let r = theta.sqrt();
    r * r.atan()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_argument() {
        for eta in [2.5, 3.0, 4.0, 6.0] {
            assert_eq!(hyp2f1_interference(eta, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn arctan_identity() {
        let v = hyp2f1_interference(4.0, 1.0).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        for theta in [1e-3, 0.2, 1.0, 7.5, 100.0] {
            let lhs = theta * hyp2f1_interference(4.0, theta).unwrap();
            assert!((lhs - interference_kernel_eta4(theta)).abs() < 1e-10 * lhs.max(1.0));
        }
    }

    #[test]
    fn eta_3_5_theta_2() {
        // mpmath hyp2f1(1, 3/7, 10/7, -2) at 40 digits
        let expected = 0.703_860_159_092_335_4;
        assert!((hyp2f1_interference(3.5, 2.0).unwrap() - expected).abs() < 1e-13);
        assert!((hyp2f1_integral(3.5, 2.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn series_agrees_with_integral() {
        for eta in [2.5, 3.0, 3.5, 4.0, 4.5] {
            for theta in [1e-3, 1e-2, 0.3, 2.0, 15.0, 100.0] {
                let s = hyp2f1_interference(eta, theta).unwrap();
                let i = hyp2f1_integral(eta, theta).unwrap();
                assert!((s - i).abs() < 1e-11, "eta={eta} theta={theta}: {s} vs {i}");
            }
        }
    }

    #[test]
    fn rejects_divergent_exponent() {
        assert!(matches!(
            hyp2f1_interference(2.0, 1.0),
            Err(SpecialError::DivergentExponent(_))
        ));
        assert!(hyp2f1_interference(4.0, -1.0).is_err());
    }
}
