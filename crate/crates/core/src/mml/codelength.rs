use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use super::{CodelengthBreakdown, PcaFit};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn check_scale(alphas: &[f64], sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma2 = {sigma2} must be positive"
        )));
    }
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "factor length {a} must be positive"
        )));
    }
    Ok(())
}

/// `sum_{j<k} log(alpha_j^2 - alpha_k^2)`; requires strictly descending lengths.
fn log_length_gaps(alphas: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (j, &aj) in alphas.iter().enumerate() {
        for &ak in &alphas[j + 1..] {
            let gap = aj * aj - ak * ak;
            if !(gap > 0.0) {
                return Err(Error::DegenerateSpectrum(format!(
                    "factor lengths {aj} and {ak} are not strictly descending"
                )));
            }
            total += gap.ln();
        }
    }
    Ok(total)
}

/// `(P, D)`: total free parameters and orientation angles for rank `j` in dimension `k`.
pub fn parameter_count(k: usize, j: usize) -> (usize, usize) {
    let angles = j * k - j * (j + 1) / 2;
    (angles + j + 1, angles)
}

/// Gaussian negative log-likelihood of the data for the model
/// `sum_j alpha_j^2 u_j u_j' + sigma2 I` with `u_j` the top-`j` eigenvectors.
///
/// In that basis the covariance is diagonal, so the log-determinant and the
/// trace term reduce to sums over eigenvalues.
pub fn negative_log_likelihood(
    spec: &Spectrum,
    alphas: &[f64],
    sigma2: f64,
    j: usize,
) -> Result<f64> {
    if alphas.len() != j {
        return Err(Error::InvalidParameter(format!(
            "{} lengths for rank {j}",
            alphas.len()
        )));
    }
    if j > spec.k() {
        return Err(Error::InvalidRank(format!(
            "rank {j} exceeds dimension {}",
            spec.k()
        )));
    }
    check_scale(alphas, sigma2)?;
    let n = spec.n() as f64;
    let k = spec.k() as f64;
    let delta = spec.eigenvalues();

    let mut log_det = (k - j as f64) * sigma2.ln();
    let mut trace = 0.0;
    for (a, d) in alphas.iter().zip(delta) {
        let v = a * a + sigma2;
        log_det += v.ln();
        trace += d / v;
    }
    trace += delta[j..].iter().sum::<f64>() / sigma2;

    Ok(0.5 * n * k * (2.0 * PI).ln() + 0.5 * n * log_det + 0.5 * n * trace)
}

/// `log Gamma_J(y) = (J(J-1)/4) log pi + sum_{j=1..J} log Gamma(y + (1-j)/2)`.
pub fn log_multivariate_gamma(j: usize, y: f64) -> Result<f64> {
    let jf = j as f64;
    let mut total = jf * (jf - 1.0) / 4.0 * PI.ln();
    for i in 1..=j {
        let arg = y + (1.0 - i as f64) / 2.0;
        if !(arg > 0.0) {
            return Err(Error::DomainError(format!(
                "Gamma argument {arg} is not positive in Gamma_{j}({y})"
            )));
        }
        total += ln_gamma(arg);
    }
    Ok(total)
}

fn log_multivariate_beta(j: usize, a: f64, b: f64) -> Result<f64> {
    Ok(
        log_multivariate_gamma(j, a)? + log_multivariate_gamma(j, b)?
            - log_multivariate_gamma(j, a + b)?,
    )
}

/// Log prior density of `(alpha, sigma)` excluding the Givens Jacobian.
///
/// Sums the heavy-tailed factor-length prior derived from a matrix-variate
/// Cauchy on the scaled loadings, the `log J!` labelling term, and
/// `log(1/sigma)` for the residual scale (its normalizing constant is omitted).
pub fn log_prior(alphas: &[f64], sigma2: f64, k: usize, j: usize) -> Result<f64> {
    if alphas.len() != j {
        return Err(Error::InvalidParameter(format!(
            "{} lengths for rank {j}",
            alphas.len()
        )));
    }
    check_scale(alphas, sigma2)?;
    let log_sigma_prior = -0.5 * sigma2.ln();
    if j == 0 {
        return Ok(log_sigma_prior);
    }
    if j >= k {
        return Err(Error::InvalidRank(format!(
            "rank {j} must be below dimension {k}"
        )));
    }
    let (kf, jf) = (k as f64, j as f64);

    let log_norm = jf * 2f64.ln() + 0.5 * jf * jf * PI.ln() + 0.5 * jf * jf * sigma2.ln()
        - log_multivariate_gamma(j, jf / 2.0)?
        - log_multivariate_beta(j, kf / 2.0, jf / 2.0)?;
    let kernel: f64 = alphas
        .iter()
        .map(|a| (kf - jf) * a.ln() - 0.5 * (kf + jf) * (sigma2 + a * a).ln())
        .sum();
    let log_labels = ln_gamma(jf + 1.0);

    Ok(log_norm + kernel + log_length_gaps(alphas)? + log_labels + log_sigma_prior)
}

/// Log determinant of the expected Fisher information, without the squared
/// Givens Jacobian.
pub fn log_fisher_det(alphas: &[f64], sigma2: f64, n: usize, k: usize, j: usize) -> Result<f64> {
    if alphas.len() != j {
        return Err(Error::InvalidParameter(format!(
            "{} lengths for rank {j}",
            alphas.len()
        )));
    }
    if j >= k {
        return Err(Error::InvalidRank(format!(
            "rank {j} must be below dimension {k}"
        )));
    }
    check_scale(alphas, sigma2)?;
    let (p, _) = parameter_count(k, j);
    let (nf, kf, jf) = (n as f64, k as f64, j as f64);
    let resid = kf - jf;

    let mut total =
        p as f64 * nf.ln() + (jf + 1.0) * 2f64.ln() + resid.ln() - (jf * resid + 1.0) * sigma2.ln();
    for a in alphas {
        total += (4.0 * resid + 2.0) * a.ln() - (kf + 1.0) * (a * a + sigma2).ln();
    }
    Ok(total + 2.0 * log_length_gaps(alphas)?)
}

/// `(P/2) log kappa_P + P/2`.
///
/// Exact lattice constants for `P <= 3`; for larger `P` the asymptotic form
/// `-(P/2) log 2pi + (1/2) log(P pi) - gamma`.
pub fn quantization_nats(p: usize) -> f64 {
    let pf = p as f64;
    let kappa = match p {
        1 => 1.0 / 12.0,
        2 => 5.0 / (36.0 * 3f64.sqrt()),
        3 => 19.0 / (192.0 * 2f64.cbrt()),
        _ => return -0.5 * pf * (2.0 * PI).ln() + 0.5 * (pf * PI).ln() - EULER_GAMMA,
    };
    0.5 * pf * kappa.ln() + 0.5 * pf
}

/// MML87 codelength of the data under `fit`, with `fit.basis` taken to be the
/// leading eigenvectors of `spec`.
///
/// At rank 0 this is the codelength of the isotropic Gaussian with one
/// parameter; the `log sigma` terms of the prior and Fisher information cancel.
pub fn full_codelength(spec: &Spectrum, fit: &PcaFit) -> Result<CodelengthBreakdown> {
    let j = fit.rank;
    let k = spec.k();
    if j >= k {
        return Err(Error::InvalidRank(format!(
            "rank {j} must be below dimension {k}"
        )));
    }
    let nll = negative_log_likelihood(spec, &fit.alphas, fit.sigma2, j)?;
    let neg_log_prior = -log_prior(&fit.alphas, fit.sigma2, k, j)?;
    let half_log_fisher = 0.5 * log_fisher_det(&fit.alphas, fit.sigma2, spec.n(), k, j)?;
    let (parameters, angles) = parameter_count(k, j);
    let quantization = quantization_nats(parameters);
    Ok(CodelengthBreakdown {
        neg_log_likelihood: nll,
        neg_log_prior,
        half_log_fisher,
        quantization,
        total: nll + neg_log_prior + half_log_fisher + quantization,
        parameters,
        angles,
    })
}

/// Codelength as a function of `tau = sigma^2` after substituting the optimal
/// orientations and `alpha_j^2 = delta_j - tau`, up to a `tau`-free constant.
///
/// Valid on `0 < tau < delta_J`. The value tends to `-inf` as `tau` approaches
/// `delta_J`, so only interior stationary points are meaningful estimates.
pub fn concentrated_codelength(tau: f64, spec: &Spectrum, j: usize) -> Result<f64> {
    let k = spec.k();
    if j == 0 || j >= k {
        return Err(Error::InvalidRank(format!("rank {j} must lie in 1..{k}")));
    }
    let delta = spec.eigenvalues();
    let upper = delta[j - 1];
    if !(tau > 0.0 && tau < upper) {
        return Err(Error::DomainError(format!(
            "tau = {tau} outside (0, {upper})"
        )));
    }
    let (nf, kf, jf) = (spec.n() as f64, k as f64, j as f64);
    let retained = &delta[..j];
    let excess: f64 = retained.iter().map(|d| d - tau).sum();
    let log_excess: f64 = retained.iter().map(|d| (d - tau).ln()).sum();

    Ok(
        0.5 * (nf * (kf - jf) - kf * jf) * tau.ln() + nf / (2.0 * tau) * spec.trace()
            - nf / (2.0 * tau) * excess
            + 0.5 * (kf - jf + 1.0) * log_excess,
    )
}
