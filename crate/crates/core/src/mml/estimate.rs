use super::codelength::{concentrated_codelength, full_codelength};
use super::polynomial::{check_distinct, check_rank, mml_polynomial};
use super::{Estimator, PcaFit};
use crate::error::{Error, Result};
use crate::selection::{Criterion, SelectionReport};
use crate::spectrum::{candidate_ranks, Spectrum};

/// Rank-0 model `N(0, sigma2 I)` with `sigma2` the mean eigenvalue.
///
/// This is both the ML and the MML estimate; with `Estimator::Mml` the
/// codelength is filled in.
pub fn isotropic_fit(spec: &Spectrum, estimator: Estimator) -> Result<PcaFit> {
    let sigma2 = spec.tail_mean(0);
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateSpectrum("all eigenvalues are zero".into()));
    }
    let mut fit = PcaFit {
        rank: 0,
        alphas: Vec::new(),
        sigma2,
        basis: spec.top_basis(0),
        codelength: None,
        estimator,
    };
    if estimator == Estimator::Mml {
        fit.codelength = Some(full_codelength(spec, &fit)?);
    }
    Ok(fit)
}

/// Maximum-likelihood fit at rank `j`: `sigma2` is the mean of the discarded
/// eigenvalues and `alpha_j = sqrt(delta_j - sigma2)`.
pub fn ml_estimate(spec: &Spectrum, j: usize) -> Result<PcaFit> {
    check_rank(spec, j)?;
    if j == 0 {
        return isotropic_fit(spec, Estimator::Ml);
    }
    let delta = spec.eigenvalues();
    let sigma2 = spec.tail_mean(j);
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidRank(format!(
            "residual variance is zero at rank {j}"
        )));
    }
    if !(delta[j - 1] > sigma2) {
        return Err(Error::InvalidRank(format!(
            "rank-{j} ML model does not exist: delta_{j} = {} <= sigma2 = {sigma2}",
            delta[j - 1]
        )));
    }
    Ok(PcaFit {
        rank: j,
        alphas: delta[..j].iter().map(|d| (d - sigma2).sqrt()).collect(),
        sigma2,
        basis: spec.top_basis(j),
        codelength: None,
        estimator: Estimator::Ml,
    })
}

/// MML87 fit at rank `j`.
///
/// The residual variance is the admissible stationary point of the
/// concentrated codelength with the smallest value; the end of the interval
/// at `delta_J` is never a candidate. Rank 0 returns [`isotropic_fit`].
pub fn mml_estimate(spec: &Spectrum, j: usize) -> Result<PcaFit> {
    check_rank(spec, j)?;
    if j == 0 {
        return isotropic_fit(spec, Estimator::Mml);
    }
    check_distinct(spec, j)?;
    let poly = mml_polynomial(spec, j)?;

    let mut best: Option<(f64, f64)> = None;
    for &tau in &poly.admissible_roots {
        let value = concentrated_codelength(tau, spec, j)?;
        if best.is_none_or(|(_, v)| value < v) {
            best = Some((tau, value));
        }
    }
    let (sigma2, _) = best.ok_or(Error::NoValidRoot { rank: j })?;

    let mut fit = PcaFit {
        rank: j,
        alphas: spec.eigenvalues()[..j]
            .iter()
            .map(|d| (d - sigma2).sqrt())
            .collect(),
        sigma2,
        basis: spec.top_basis(j),
        codelength: None,
        estimator: Estimator::Mml,
    };
    fit.codelength = Some(full_codelength(spec, &fit)?);
    Ok(fit)
}

/// Scores every candidate rank by its MML87 codelength.
///
/// Ranks with no admissible root or a degenerate spectrum are skipped; rank 0
/// is always scored, so a fallback to the isotropic model is automatic.
pub fn select_rank_mml(spec: &Spectrum) -> SelectionReport {
    SelectionReport::from_candidates(
        Criterion::Mml,
        candidate_ranks(spec.k()).map(|j| {
            let total = mml_estimate(spec, j).and_then(|fit| {
                fit.codelength
                    .map(|c| c.total)
                    .ok_or_else(|| Error::NumericalFailure("missing codelength".into()))
            });
            (j, total)
        }),
    )
}
