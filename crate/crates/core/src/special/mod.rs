//! Numerical kernels behind the closed-form performance expressions.

mod gamma;
mod gil_pelaez;
mod hyp2f1;
mod interference;
pub mod quad;

use thiserror::Error;

pub use gamma::{log_gamma, CountPmf};
pub use gil_pelaez::{
    gil_pelaez_cdf, ClosureTransform, GilPelaez, GilPelaezError, GilPelaezOptions, LaplaceTransform,
};
pub use hyp2f1::{hyp2f1_integral, hyp2f1_interference, interference_kernel_eta4};
pub use interference::{
    intercell_exponent, lt_aggregate_interference, AggregateInterference, InterCellKernel,
};
pub use quad::{improper_quad, QuadOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("path-loss exponent {0} must exceed 2 (interference integral diverges)")]
    DivergentExponent(f64),
    #[error("invalid argument {name} = {value}")]
    InvalidArgument { name: &'static str, value: f64 },
    #[error("quadrature did not converge: estimate {estimate}, error {error}")]
    QuadNonConvergence { estimate: f64, error: f64 },
    #[error("non-finite integrand near {at}")]
    NonFiniteIntegrand { at: f64 },
    #[error("series did not converge after {terms} terms")]
    SeriesNonConvergence { terms: usize },
}
