use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mml::PcaFit;

/// `(S1, S2) = (log sigma_hat, (log sigma_hat)^2)`. The true residual variance
/// is 1 in every experiment, so no centring is applied.
pub fn metric_s1s2(sigma2_hat: f64) -> Result<(f64, f64)> {
    if !(sigma2_hat > 0.0 && sigma2_hat.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "residual variance estimate {sigma2_hat} must be positive"
        )));
    }
    let s1 = 0.5 * sigma2_hat.ln();
    Ok((s1, s1 * s1))
}

/// Covariance of the form `sigma2 I + W W'` with `W` of shape `K x r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCovariance {
    pub sigma2: f64,
    pub loadings: DMatrix<f64>,
}

impl ModelCovariance {
    pub fn new(sigma2: f64, loadings: DMatrix<f64>) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma2 = {sigma2} must be positive"
            )));
        }
        if loadings.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("loadings must be finite".into()));
        }
        Ok(Self { sigma2, loadings })
    }

    pub fn isotropic(k: usize, sigma2: f64) -> Result<Self> {
        Self::new(sigma2, DMatrix::zeros(k, 0))
    }

    /// `basis * diag(alphas)` as loadings.
    pub fn from_fit(fit: &PcaFit) -> Result<Self> {
        let mut w = fit.basis.clone();
        for (j, a) in fit.alphas.iter().enumerate() {
            w.column_mut(j).scale_mut(*a);
        }
        Self::new(fit.sigma2, w)
    }

    pub fn dim(&self) -> usize {
        self.loadings.nrows()
    }

    /// `sigma2 I_r + W'W`, Cholesky-factored.
    fn capacitance(&self) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let r = self.loadings.ncols();
        let m = self.loadings.tr_mul(&self.loadings) + DMatrix::identity(r, r) * self.sigma2;
        m.cholesky()
            .ok_or_else(|| Error::InvalidParameter("covariance is not positive definite".into()))
    }

    /// `K log sigma2 + log|I + W'W / sigma2|`.
    pub fn log_det(&self) -> Result<f64> {
        let chol = self.capacitance()?;
        let r = self.loadings.ncols() as f64;
        let log_det_m: f64 = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        Ok((self.dim() as f64 - r) * self.sigma2.ln() + log_det_m)
    }

    /// Dense matrix, for tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::identity(k, k) * self.sigma2 + &self.loadings * self.loadings.transpose()
    }
}

/// `KL(N(0, sigma0) || N(0, sigma1)) = (tr(sigma1^-1 sigma0) + log|sigma1|/|sigma0| - K) / 2`.
///
/// Uses the low-rank-plus-isotropic structure throughout; only `r x r`
/// systems are factored.
pub fn kl_gaussian(sigma0: &ModelCovariance, sigma1: &ModelCovariance) -> Result<f64> {
    let k = sigma0.dim();
    if sigma1.dim() != k {
        return Err(Error::InvalidParameter(format!(
            "dimension mismatch: {k} vs {}",
            sigma1.dim()
        )));
    }
    let (w0, w1) = (&sigma0.loadings, &sigma1.loadings);
    let chol1 = sigma1.capacitance()?;

    // tr(sigma1^-1 sigma0) = (tr sigma0 - tr(M1^-1 W1' sigma0 W1)) / s1
    let trace0 = k as f64 * sigma0.sigma2 + w0.norm_squared();
    let cross = w1.tr_mul(w0);
    let projected = w1.tr_mul(w1) * sigma0.sigma2 + &cross * cross.transpose();
    let trace_term = (trace0 - chol1.solve(&projected).trace()) / sigma1.sigma2;

    let value = 0.5 * (trace_term + sigma1.log_det()? - sigma0.log_det()? - k as f64);
    Ok(value)
}
