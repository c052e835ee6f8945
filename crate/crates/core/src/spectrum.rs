//! Data ingestion and spectral preprocessing.
//!
//! The sample covariance uses the `1/N` normalization, not `1/(N-1)`. Every
//! downstream estimate (ML and MML residual variances, codelengths, criteria)
//! is defined with respect to this maximum-likelihood scaling.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance below which negative eigenvalues are treated as round-off.
const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-12;

/// An `N x K` data matrix: rows are observations, columns are dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    /// Wraps a matrix after checking that it is finite with `N >= 2` and `K >= 2`.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (n, k) = values.shape();
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if k < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 dimensions, got {k}"
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % n, pos / n);
            return Err(Error::InvalidData(format!(
                "non-finite entry at row {row}, column {col}"
            )));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(Error::InvalidData(format!(
                "row {i} has {} fields, expected {k}",
                row.len()
            )));
        }
        Self::new(DMatrix::from_fn(n, k, |i, j| rows[i][j]))
    }

    /// Parses comma-separated numeric rows.
    ///
    /// The first line is treated as a header when any of its fields fails to
    /// parse as a number. Numbers use `.` as the decimal point regardless of locale.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::InvalidData(format!("csv: {e}")))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if line == 0 => continue,
                Err(_) => {
                    return Err(Error::InvalidData(format!(
                        "non-numeric field on line {}",
                        line + 1
                    )));
                }
            }
        }
        Self::from_rows(&rows)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| {
            Error::InvalidData(format!("cannot open {}: {e}", path.as_ref().display()))
        })?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }
}

/// Descending eigenvalues and aligned eigenvectors of a sample covariance,
/// together with the sample size that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    trace: f64,
}

impl Spectrum {
    /// Builds a spectrum directly from eigenvalues, with the identity as
    /// eigenvector basis. Useful when only the eigenvalues matter.
    pub fn from_eigenvalues(n: usize, eigenvalues: Vec<f64>) -> Result<Self> {
        let k = eigenvalues.len();
        Self::from_parts(n, eigenvalues, DMatrix::identity(k, k))
    }

    /// Builds a spectrum from eigenvalues and a matching orthonormal basis.
    pub fn from_parts(n: usize, eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let k = eigenvalues.len();
        if n == 0 {
            return Err(Error::InvalidData("sample size must be positive".into()));
        }
        if k < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 dimensions, got {k}"
            )));
        }
        if eigenvectors.shape() != (k, k) {
            return Err(Error::InvalidData(format!(
                "eigenvector matrix is {:?}, expected {k}x{k}",
                eigenvectors.shape()
            )));
        }
        if eigenvalues.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidData(
                "eigenvalues must be finite and non-negative".into(),
            ));
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidData(
                "eigenvalues must be sorted descending".into(),
            ));
        }
        let trace = eigenvalues.iter().sum();
        Ok(Self {
            n,
            eigenvalues,
            eigenvectors,
            trace,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Sum of the eigenvalues.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// First `rank` eigenvector columns.
    pub fn top_basis(&self, rank: usize) -> DMatrix<f64> {
        self.eigenvectors.columns(0, rank).into_owned()
    }

    /// Mean of the `K - rank` smallest eigenvalues.
    pub fn tail_mean(&self, rank: usize) -> f64 {
        let tail = &self.eigenvalues[rank..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    /// Same spectrum with a different sample size.
    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }
}

/// Subtracts the column means.
pub fn center_columns(data: &DataMatrix) -> Result<DataMatrix> {
    let mut values = data.values().clone();
    let n = values.nrows() as f64;
    for mut col in values.column_iter_mut() {
        let mean = col.iter().sum::<f64>() / n;
        col.add_scalar_mut(-mean);
    }
    DataMatrix::new(values)
}

/// `(1/N) X'X`, exactly symmetric.
pub fn sample_covariance(data: &DataMatrix) -> DMatrix<f64> {
    let x = data.values();
    let n = x.nrows() as f64;
    let mut cov = x.tr_mul(x) / n;
    let k = cov.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let avg = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = avg;
            cov[(j, i)] = avg;
        }
    }
    cov
}

/// Eigendecomposition with eigenvalues sorted descending.
///
/// Each eigenvector is signed so that its largest-magnitude component is
/// positive (first such component on exact ties).
pub fn eigen_descending(cov: &DMatrix<f64>, n: usize) -> Result<Spectrum> {
    let (rows, cols) = cov.shape();
    if rows != cols {
        return Err(Error::InvalidData(format!(
            "covariance is {rows}x{cols}, not square"
        )));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData(
            "covariance has non-finite entries".into(),
        ));
    }
    let scale = cov.amax().max(1.0);
    for i in 0..rows {
        for j in (i + 1)..rows {
            if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::InvalidData(format!(
                    "covariance not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let eig = SymmetricEigen::try_new(cov.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let largest = eig.eigenvalues.amax();
    let mut eigenvalues = Vec::with_capacity(rows);
    let mut eigenvectors = DMatrix::zeros(rows, rows);
    for (dst, &src) in order.iter().enumerate() {
        let mut value = eig.eigenvalues[src];
        if value < 0.0 {
            if value >= -NEGATIVE_EIGENVALUE_TOL * largest {
                value = 0.0;
            } else {
                return Err(Error::NumericalFailure(format!(
                    "covariance has a negative eigenvalue {value:e}"
                )));
            }
        }
        eigenvalues.push(value);

        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col.iter().copied().fold(
            0.0_f64,
            |best, v| {
                if v.abs() > best.abs() {
                    v
                } else {
                    best
                }
            },
        );
        if pivot < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }

    Spectrum::from_parts(n, eigenvalues, eigenvectors)
}

/// Centre, form the covariance, and eigendecompose.
pub fn spectrum_of(data: &DataMatrix) -> Result<Spectrum> {
    let centered = center_columns(data)?;
    let cov = sample_covariance(&centered);
    eigen_descending(&cov, data.n())
}

/// Largest identifiable number of latent factors for dimension `k`:
/// `floor(k + (1 - sqrt(8k + 1)) / 2)`, evaluated in integer arithmetic.
pub fn max_rank(k: usize) -> usize {
    let m = 8 * k + 1;
    let mut r = (m as f64).sqrt() as usize;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    // k + (1 - s)/2 with s = sqrt(m) and r = floor(s)
    let twice = 2 * k + 1;
    if r * r == m {
        (twice - r) / 2
    } else {
        // s lies strictly between r and r + 1
        (twice - r - 1) / 2
    }
}

/// Candidate ranks considered by every selection criterion: `0..=min(K-1, max_rank(K))`.
pub fn candidate_ranks(k: usize) -> std::ops::RangeInclusive<usize> {
    0..=max_rank(k).min(k.saturating_sub(1))
}
