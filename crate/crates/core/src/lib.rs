//! Rank selection and residual-variance estimation for probabilistic PCA by
//! minimum message length (MML87).
//!
//! The pipeline is
//!
//! 1. [`spectrum`]: centre the data, form the `1/N` sample covariance and
//!    eigendecompose it. Everything downstream depends on the data only through
//!    the resulting [`Spectrum`].
//! 2. [`mml`]: two-part codelengths, the stationary-point polynomial for the
//!    residual variance, ML and MML estimators and MML rank selection.
//! 3. [`comparators`]: BIC and the Laplace evidence approximation, driven through
//!    the same [`SelectionReport`] interface.
//! 4. [`simlab`]: seeded synthetic experiments measuring estimation accuracy and
//!    selection rates.
//!
//! All codelengths are in nats. The `1/sigma` prior on the noise scale is
//! improper, so absolute codelengths are defined up to a constant shared by every
//! candidate rank.

pub mod comparators;
pub mod error;
pub mod mml;
pub mod selection;
pub mod simlab;
pub mod spectrum;

pub use comparators::{bic_score, fit_for_criterion, laplace_evidence, select_rank};
pub use error::{Error, Result};
pub use mml::{
    concentrated_codelength, esp, find_real_roots, full_codelength, ml_estimate, mml_estimate,
    mml_polynomial, select_rank_mml, CodelengthBreakdown, Estimator, MmlPolynomial, PcaFit,
};
pub use selection::{Criterion, SelectionReport};
pub use spectrum::{
    candidate_ranks, center_columns, eigen_descending, max_rank, sample_covariance, spectrum_of,
    DataMatrix, Spectrum,
};
