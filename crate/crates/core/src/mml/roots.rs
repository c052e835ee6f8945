//! Real roots of low-degree polynomials.
//!
//! Coefficients are stored in ascending powers. Degrees up to three use closed
//! forms; higher degrees use the eigenvalues of the companion matrix. Every
//! root is then polished by Newton's method on the original polynomial.

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};

/// Leading coefficient threshold, relative to the largest coefficient.
const LEADING_TOL: f64 = 1e-14;
/// Companion eigenvalues with a relative imaginary part below this are real.
const IMAG_TOL: f64 = 1e-7;
const NEWTON_STEPS: usize = 8;

/// Horner evaluation of `p(x)` and `p'(x)`.
pub fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    eval_with_derivative(coeffs, x).0
}

/// All real roots, sorted ascending, with duplicates merged.
///
/// `scale` is a typical root magnitude. Roots are computed for the rescaled
/// polynomial in `u = x / scale` so that results are equivariant under a
/// common scaling of the roots.
pub fn real_roots(coeffs: &[f64], scale: f64) -> Result<Vec<f64>> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::IllConditionedPolynomial(
            "non-finite coefficient".into(),
        ));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "root scale {scale} must be positive"
        )));
    }
    if coeffs.len() < 2 {
        return Err(Error::IllConditionedPolynomial(
            "polynomial has degree zero".into(),
        ));
    }
    let mut scaled: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| c * scale.powi(i as i32))
        .collect();
    let max = scaled.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if max == 0.0 {
        return Err(Error::IllConditionedPolynomial(
            "all coefficients are zero".into(),
        ));
    }
    scaled.iter_mut().for_each(|c| *c /= max);
    let lead = *scaled.last().unwrap();
    if lead.abs() < LEADING_TOL {
        return Err(Error::IllConditionedPolynomial(format!(
            "leading coefficient {lead:e} is negligible relative to the others"
        )));
    }

    let raw = match scaled.len() - 1 {
        1 => vec![-scaled[0] / scaled[1]],
        2 => quadratic(&scaled),
        3 => cubic(&scaled),
        _ => companion(&scaled)?,
    };

    let mut roots: Vec<f64> = raw.into_iter().map(|u| polish(&scaled, u)).collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
    Ok(roots.into_iter().map(|u| u * scale).collect())
}

fn quadratic(c: &[f64]) -> Vec<f64> {
    let (a0, a1, a2) = (c[0], c[1], c[2]);
    let disc = a1 * a1 - 4.0 * a2 * a0;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![q / a2, a0 / q]
}

fn cubic(c: &[f64]) -> Vec<f64> {
    // x^3 + b x^2 + cc x + d, then depress with x = t - b/3
    let b = c[2] / c[3];
    let cc = c[1] / c[3];
    let d = c[0] / c[3];
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        let t = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
        vec![t - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    }
}

fn companion(c: &[f64]) -> Result<Vec<f64>> {
    let n = c.len() - 1;
    let lead = c[n];
    let mut m = DMatrix::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    let schur = Schur::try_new(m, f64::EPSILON, 10_000).ok_or_else(|| {
        Error::NumericalFailure("companion matrix eigenvalues did not converge".into())
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= IMAG_TOL * z.re.abs().max(1.0))
        .map(|z| z.re)
        .collect())
}

fn polish(coeffs: &[f64], mut x: f64) -> f64 {
    let mut best = eval(coeffs, x).abs();
    for _ in 0..NEWTON_STEPS {
        let (p, dp) = eval_with_derivative(coeffs, x);
        if p == 0.0 || dp == 0.0 {
            break;
        }
        let next = x - p / dp;
        let val = eval(coeffs, next).abs();
        if !(val < best) {
            break;
        }
        best = val;
        x = next;
    }
    x
}
