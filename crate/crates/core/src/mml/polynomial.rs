use serde::Serialize;

use super::esp::esp;
use super::roots::real_roots;
use crate::error::{Error, Result};
use crate::spectrum::{candidate_ranks, Spectrum};

/// Relative gap below which neighbouring eigenvalues count as tied.
pub(crate) const DISTINCT_TOL: f64 = 1e-9;

/// Polynomial whose roots in `(0, delta_J)` are the stationary points of the
/// concentrated codelength.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmlPolynomial {
    pub rank: usize,
    /// `a_0, ..., a_{J+1}` in ascending powers of `tau`.
    pub coefficients: Vec<f64>,
    /// `delta_J`; admissible roots lie strictly below it.
    pub domain_upper: f64,
    pub admissible_roots: Vec<f64>,
}

/// Coefficients `a_0..a_{J+1}` for retained eigenvalues `delta_1..delta_J`
/// and ML residual variance `tau_ml`.
///
/// This is the derivative of the concentrated codelength multiplied by
/// `2 tau^2 prod_j (delta_j - tau) / (N (K - J))`.
pub fn stationary_polynomial(n: usize, k: usize, retained: &[f64], tau_ml: f64) -> Vec<f64> {
    let j = retained.len();
    let e = esp(retained);
    let denom = (n * (k - j)) as f64;
    let (jf, kf) = (j as f64, k as f64);
    let sign = |p: usize| if p % 2 == 0 { 1.0 } else { -1.0 };

    let mut coeffs = Vec::with_capacity(j + 2);
    coeffs.push(-tau_ml * e[j]);
    for i in 1..=j {
        let fi = i as f64;
        let weight = 1.0 - (fi - 1.0) * (jf - 1.0) / denom - kf * (jf - fi + 1.0) / denom;
        coeffs.push(sign(i + 1) * (tau_ml * e[j - i] + weight * e[j - i + 1]));
    }
    coeffs.push(sign(j) * (1.0 - jf * (jf - 1.0) / denom));
    coeffs
}

pub(crate) fn check_rank(spec: &Spectrum, j: usize) -> Result<()> {
    let k = spec.k();
    let max = *candidate_ranks(k).end();
    if j > max {
        return Err(Error::InvalidRank(format!(
            "rank exceeds identifiable maximum: rank {j} > {max} for K = {k}"
        )));
    }
    Ok(())
}

/// Rejects spectra where any two of `delta_1..delta_{J+1}` are closer than
/// `1e-9 * delta_1`.
pub(crate) fn check_distinct(spec: &Spectrum, j: usize) -> Result<()> {
    let delta = spec.eigenvalues();
    let tol = DISTINCT_TOL * delta[0];
    if let Some(i) = (0..j).find(|&i| delta[i] - delta[i + 1] < tol) {
        return Err(Error::DegenerateSpectrum(format!(
            "eigenvalues {} and {} ({} and {}) are tied",
            i + 1,
            i + 2,
            delta[i],
            delta[i + 1]
        )));
    }
    if !(delta[j] > 0.0) {
        return Err(Error::DegenerateSpectrum(format!(
            "eigenvalue {} is zero",
            j + 1
        )));
    }
    Ok(())
}

/// Builds the stationary-point polynomial for rank `j` and its admissible roots.
pub fn mml_polynomial(spec: &Spectrum, j: usize) -> Result<MmlPolynomial> {
    if j == 0 {
        return Err(Error::InvalidRank(
            "the stationary polynomial needs rank >= 1".into(),
        ));
    }
    check_rank(spec, j)?;
    check_distinct(spec, j)?;
    let retained = &spec.eigenvalues()[..j];
    let tau_ml = spec.tail_mean(j);
    let mut poly = MmlPolynomial {
        rank: j,
        coefficients: stationary_polynomial(spec.n(), spec.k(), retained, tau_ml),
        domain_upper: retained[j - 1],
        admissible_roots: Vec::new(),
    };
    poly.admissible_roots = find_real_roots(&poly)?;
    Ok(poly)
}

/// Real roots of `poly` in `(0, domain_upper)`, ascending.
pub fn find_real_roots(poly: &MmlPolynomial) -> Result<Vec<f64>> {
    let upper = poly.domain_upper;
    let roots = real_roots(&poly.coefficients, upper)?;
    Ok(roots
        .into_iter()
        .filter(|&t| t > 0.0 && t < upper)
        .collect())
}
