//! MML87 codelengths, estimators and rank selection for probabilistic PCA.
//!
//! The factor orientations enter the codelength through two Jacobian terms of
//! the Givens-angle parameterization: one in the prior and the square of the
//! same term in the Fisher determinant. With the half-log Fisher term and the
//! negative log prior they cancel exactly, so the codelength depends on the
//! data only through the eigenvalues and no angles are ever computed.

mod codelength;
mod esp;
mod estimate;
mod polynomial;
pub(crate) mod roots;

use nalgebra::DMatrix;
use serde::Serialize;

pub use codelength::{
    concentrated_codelength, full_codelength, log_fisher_det, log_multivariate_gamma, log_prior,
    negative_log_likelihood, parameter_count, quantization_nats,
};
pub use esp::esp;
pub use estimate::{isotropic_fit, ml_estimate, mml_estimate, select_rank_mml};
pub use polynomial::{find_real_roots, mml_polynomial, stationary_polynomial, MmlPolynomial};
pub use roots::real_roots;

/// Which estimator produced a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Ml,
    Mml,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Ml => "ml",
            Estimator::Mml => "mml",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ml" | "mle" => Ok(Estimator::Ml),
            "mml" | "mml87" => Ok(Estimator::Mml),
            other => Err(crate::Error::InvalidConfig(format!(
                "unknown estimator '{other}'"
            ))),
        }
    }
}

/// Terms of the MML87 codelength, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodelengthBreakdown {
    pub neg_log_likelihood: f64,
    pub neg_log_prior: f64,
    pub half_log_fisher: f64,
    /// `(P/2) log kappa_P + P/2`.
    pub quantization: f64,
    pub total: f64,
    /// Number of free parameters, `D + J + 1`.
    pub parameters: usize,
    /// Number of orientation angles, `JK - J(J+1)/2`.
    pub angles: usize,
}

/// A fitted rank-`J` probabilistic PCA model.
///
/// The implied covariance is `sum_j alpha_j^2 u_j u_j' + sigma2 I` where the
/// `u_j` are the columns of `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub rank: usize,
    pub alphas: Vec<f64>,
    pub sigma2: f64,
    pub basis: DMatrix<f64>,
    pub codelength: Option<CodelengthBreakdown>,
    pub estimator: Estimator,
}

impl PcaFit {
    /// Eigenvalues of the model covariance along the basis directions.
    pub fn retained_variances(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| a * a + self.sigma2).collect()
    }

    /// Dense model covariance. Intended for tests and small `K`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let k = self.basis.nrows();
        let mut sigma = DMatrix::identity(k, k) * self.sigma2;
        for (j, a) in self.alphas.iter().enumerate() {
            let u = self.basis.column(j);
            sigma += (u * u.transpose()) * (a * a);
        }
        sigma
    }
}
