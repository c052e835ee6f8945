//! BIC and Laplace-evidence rank selection.
//!
//! Both criteria are reported as "smaller is better" nats so that they line up
//! with MML codelengths in a [`SelectionReport`].

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::mml::{
    ml_estimate, mml_estimate, negative_log_likelihood, parameter_count, select_rank_mml,
    Estimator, PcaFit,
};
use crate::selection::{Criterion, SelectionReport};
use crate::spectrum::{candidate_ranks, Spectrum};

const TIE_TOL: f64 = 1e-9;

/// `l(theta_ML) + (P/2) log N`.
///
/// `P = JK - J(J+1)/2 + J + 1` is the same orientation-aware parameter count
/// used by the MML codelength, not the naive `KJ + 1`.
pub fn bic_score(spec: &Spectrum, j: usize) -> Result<f64> {
    let fit = ml_estimate(spec, j)?;
    let nll = negative_log_likelihood(spec, &fit.alphas, fit.sigma2, j)?;
    let (p, _) = parameter_count(spec.k(), j);
    Ok(nll + 0.5 * p as f64 * (spec.n() as f64).ln())
}

/// Negated Laplace approximation to the log evidence for rank `j`.
///
/// Implements the closed form of Minka, "Automatic choice of dimensionality
/// for PCA" (NIPS 2000; eqs. 30-31 of MIT Media Lab TR 514):
///
/// ```text
/// p(D|k) ~ p(U) (prod_{j<=k} l_j)^{-N/2} v^{-N(d-k)/2} (2pi)^{(m+k)/2} |A_Z|^{-1/2} N^{-k/2}
/// p(U)   = 2^{-k} prod_{i=1..k} Gamma((d-i+1)/2) pi^{-(d-i+1)/2}
/// |A_Z|  = prod_{i=1..k} prod_{j=i+1..d} N (1/l^_j - 1/l^_i)(l_i - l_j)
/// ```
///
/// with `v` the mean of the discarded eigenvalues, `m = dk - k(k+1)/2` and
/// `l^_j = l_j` for `j <= k`, `v` otherwise.
///
/// Two terms Minka drops as common to every `k` are restored: the likelihood
/// constant `(Nd/2)(log 2pi + 1)` and a `(1/2) log N` Laplace term for `v`.
/// With them the rank-0 value equals the isotropic BIC score.
pub fn laplace_evidence(spec: &Spectrum, j: usize) -> Result<f64> {
    let fit = ml_estimate(spec, j)?;
    let delta = spec.eigenvalues();
    let v = fit.sigma2;
    let (n, d) = (spec.n() as f64, spec.k());
    let (df, jf) = (d as f64, j as f64);

    let tol = TIE_TOL * delta[0];
    let mut guarded: Vec<f64> = delta[..j].to_vec();
    guarded.push(v);
    if let Some(w) = guarded.windows(2).find(|w| w[0] - w[1] < tol) {
        return Err(Error::DegenerateSpectrum(format!(
            "eigenvalues {} and {} are tied",
            w[0], w[1]
        )));
    }

    let log_pu: f64 = -jf * 2f64.ln()
        + (1..=j)
            .map(|i| {
                let h = (df - i as f64 + 1.0) / 2.0;
                ln_gamma(h) - h * PI.ln()
            })
            .sum::<f64>();

    let hat = |idx: usize| if idx < j { delta[idx] } else { v };
    let mut log_az = 0.0;
    for i in 0..j {
        for l in (i + 1)..d {
            let term = (1.0 / hat(l) - 1.0 / hat(i)) * (delta[i] - delta[l]);
            if !(term > 0.0) {
                return Err(Error::DegenerateSpectrum(format!(
                    "Hessian term for eigenvalue pair ({}, {}) is not positive",
                    i + 1,
                    l + 1
                )));
            }
            log_az += n.ln() + term.ln();
        }
    }

    let m = df * jf - jf * (jf + 1.0) / 2.0;
    let log_evidence = log_pu
        - 0.5 * n * delta[..j].iter().map(|x| x.ln()).sum::<f64>()
        - 0.5 * n * (df - jf) * v.ln()
        + 0.5 * (m + jf) * (2.0 * PI).ln()
        - 0.5 * log_az
        - 0.5 * jf * n.ln();

    Ok(0.5 * n * df * ((2.0 * PI).ln() + 1.0) - log_evidence + 0.5 * n.ln())
}

/// Scores all candidate ranks `0..=min(K-1, max_rank(K))` under `criterion`.
///
/// The Laplace criterion scores rank 0 with the isotropic BIC form.
pub fn select_rank(spec: &Spectrum, criterion: Criterion) -> SelectionReport {
    match criterion {
        Criterion::Mml => select_rank_mml(spec),
        Criterion::Bic => SelectionReport::from_candidates(
            criterion,
            candidate_ranks(spec.k()).map(|j| (j, bic_score(spec, j))),
        ),
        Criterion::Laplace => SelectionReport::from_candidates(
            criterion,
            candidate_ranks(spec.k()).map(|j| {
                let score = if j == 0 {
                    bic_score(spec, 0)
                } else {
                    laplace_evidence(spec, j)
                };
                (j, score)
            }),
        ),
    }
}

/// The fitted model a criterion reports at rank `j`: MML estimates for the
/// MML criterion, ML estimates otherwise.
pub fn fit_for_criterion(spec: &Spectrum, criterion: Criterion, j: usize) -> Result<PcaFit> {
    match criterion {
        Criterion::Mml => mml_estimate(spec, j),
        Criterion::Bic | Criterion::Laplace => ml_estimate(spec, j),
    }
}

pub(crate) fn estimator_for(criterion: Criterion) -> Estimator {
    match criterion {
        Criterion::Mml => Estimator::Mml,
        _ => Estimator::Ml,
    }
}
