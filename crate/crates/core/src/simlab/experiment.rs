use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::config::SimConfig;
use super::generate::generate_replicate;
use super::metrics::{kl_gaussian, metric_s1s2, ModelCovariance};
use crate::comparators::{estimator_for, fit_for_criterion, select_rank};
use crate::error::{Error, Result};
use crate::mml::{isotropic_fit, ml_estimate, mml_estimate, Estimator, PcaFit};
use crate::selection::Criterion;
use crate::spectrum::{spectrum_of, Spectrum};

/// Mean and Monte-Carlo standard error of a replicated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// `sd / sqrt(n)` with the `n - 1` sample deviation; zero when `n = 1`.
    pub se: f64,
}

impl Stat {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { mean, se: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub s1: Stat,
    pub s2: Stat,
    pub kl: Stat,
    /// Replications where the fit at the true rank failed and the isotropic
    /// model was used instead.
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionSummary {
    pub rate_below: f64,
    pub rate_equal: f64,
    pub rate_above: f64,
    /// Replications per selected rank.
    pub selected: BTreeMap<usize, usize>,
    /// KL divergence from the true model to the selected, fitted model.
    pub kl: Stat,
}

/// Aggregated outcome of an experiment over all replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub replications: usize,
    pub estimators: BTreeMap<&'static str, EstimatorSummary>,
    pub criteria: BTreeMap<&'static str, CriterionSummary>,
    pub warnings: Vec<String>,
}

impl SimResult {
    pub fn estimator(&self, e: Estimator) -> Option<&EstimatorSummary> {
        self.estimators.get(e.as_str())
    }

    pub fn criterion(&self, c: Criterion) -> Option<&CriterionSummary> {
        self.criteria.get(c.as_str())
    }
}

fn run_indexed<T, F>(config: &SimConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let work = || -> Result<Vec<T>> {
        (0..config.replications as u64)
            .into_par_iter()
            .map(&f)
            .collect()
    };
    match config.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn fit_or_fallback(spec: &Spectrum, estimator: Estimator, j: usize) -> Result<(PcaFit, bool)> {
    let attempt = match estimator {
        Estimator::Ml => ml_estimate(spec, j),
        Estimator::Mml => mml_estimate(spec, j),
    };
    match attempt {
        Ok(fit) => Ok((fit, false)),
        Err(Error::NoValidRoot { .. } | Error::DegenerateSpectrum(_) | Error::InvalidRank(_)) => {
            Ok((isotropic_fit(spec, estimator)?, true))
        }
        Err(e) => Err(e),
    }
}

struct EstimationDraw {
    // per estimator: (s1, s2, kl, fell_back)
    values: Vec<(f64, f64, f64, bool)>,
}

/// Fits each configured estimator at the true rank in every replication and
/// records S1, S2 and the KL divergence from the true model.
pub fn run_estimation_experiment(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    if config.estimators.is_empty() {
        return Err(Error::InvalidConfig("no estimators selected".into()));
    }
    let draws = run_indexed(config, |idx| {
        let rep = generate_replicate(config, idx)?;
        let spec = spectrum_of(&rep.data)?;
        let truth = rep.true_covariance(config.sigma2_true)?;
        let values = config
            .estimators
            .iter()
            .map(|&e| {
                let (fit, fell_back) = fit_or_fallback(&spec, e, config.j_true)?;
                let (s1, s2) = metric_s1s2(fit.sigma2)?;
                let kl = kl_gaussian(&truth, &ModelCovariance::from_fit(&fit)?)?;
                Ok((s1, s2, kl, fell_back))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EstimationDraw { values })
    })?;

    let mut estimators = BTreeMap::new();
    for (slot, e) in config.estimators.iter().enumerate() {
        let column = |f: fn(&(f64, f64, f64, bool)) -> f64| -> Vec<f64> {
            draws.iter().map(|d| f(&d.values[slot])).collect()
        };
        estimators.insert(
            e.as_str(),
            EstimatorSummary {
                s1: Stat::from_samples(&column(|v| v.0)),
                s2: Stat::from_samples(&column(|v| v.1)),
                kl: Stat::from_samples(&column(|v| v.2)),
                fallbacks: draws.iter().filter(|d| d.values[slot].3).count(),
            },
        );
    }
    Ok(finish(config, estimators, BTreeMap::new()))
}

/// Selects a rank under each configured criterion in every replication and
/// tallies under-, correct and over-selection, plus the KL divergence of the
/// selected fitted model.
pub fn run_selection_experiment(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    if config.criteria.is_empty() {
        return Err(Error::InvalidConfig("no criteria selected".into()));
    }
    let draws = run_indexed(config, |idx| {
        let rep = generate_replicate(config, idx)?;
        let spec = spectrum_of(&rep.data)?;
        let truth = rep.true_covariance(config.sigma2_true)?;
        config
            .criteria
            .iter()
            .map(|&c| {
                let rank = select_rank(&spec, c).selected_rank;
                let fit = match fit_for_criterion(&spec, c, rank) {
                    Ok(fit) => fit,
                    Err(_) => isotropic_fit(&spec, estimator_for(c))?,
                };
                let kl = kl_gaussian(&truth, &ModelCovariance::from_fit(&fit)?)?;
                Ok((rank, kl))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let total = draws.len() as f64;
    let mut criteria = BTreeMap::new();
    for (slot, c) in config.criteria.iter().enumerate() {
        let mut selected = BTreeMap::new();
        let (mut below, mut equal, mut above) = (0usize, 0usize, 0usize);
        for d in &draws {
            let rank = d[slot].0;
            *selected.entry(rank).or_insert(0) += 1;
            match rank.cmp(&config.j_true) {
                std::cmp::Ordering::Less => below += 1,
                std::cmp::Ordering::Equal => equal += 1,
                std::cmp::Ordering::Greater => above += 1,
            }
        }
        let kls: Vec<f64> = draws.iter().map(|d| d[slot].1).collect();
        criteria.insert(
            c.as_str(),
            CriterionSummary {
                rate_below: below as f64 / total,
                rate_equal: equal as f64 / total,
                rate_above: above as f64 / total,
                selected,
                kl: Stat::from_samples(&kls),
            },
        );
    }
    Ok(finish(config, BTreeMap::new(), criteria))
}

fn finish(
    config: &SimConfig,
    estimators: BTreeMap<&'static str, EstimatorSummary>,
    criteria: BTreeMap<&'static str, CriterionSummary>,
) -> SimResult {
    let mut warnings = Vec::new();
    if config.replications == 1 {
        warnings.push("single replication: standard errors are reported as zero".into());
    }
    for (name, s) in &estimators {
        if s.fallbacks > 0 {
            warnings.push(format!(
                "{name}: {} replication(s) used the rank-0 fallback",
                s.fallbacks
            ));
        }
    }
    SimResult {
        config: config.clone(),
        replications: config.replications,
        estimators,
        criteria,
        warnings,
    }
}
