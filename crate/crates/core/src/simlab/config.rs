use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mml::Estimator;
use crate::selection::Criterion;
use crate::spectrum::max_rank;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// One cell of a simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n: usize,
    pub k: usize,
    pub j_true: usize,
    pub sigma2_true: f64,
    pub alpha_true: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
    pub estimators: Vec<Estimator>,
    pub criteria: Vec<Criterion>,
    /// Worker threads; `None` uses the global rayon pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl SimConfig {
    /// Unit residual variance, unit factor lengths, both estimators and all
    /// criteria, default seed.
    pub fn new(n: usize, k: usize, j_true: usize, replications: usize) -> Self {
        Self {
            n,
            k,
            j_true,
            sigma2_true: 1.0,
            alpha_true: vec![1.0; j_true],
            replications,
            master_seed: DEFAULT_SEED,
            estimators: vec![Estimator::Ml, Estimator::Mml],
            criteria: Criterion::ALL.to_vec(),
            threads: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn with_criteria(mut self, criteria: Vec<Criterion>) -> Self {
        self.criteria = criteria;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 2 {
            problems.push(format!("n = {} must be at least 2", self.n));
        }
        if self.k < 2 {
            problems.push(format!("k = {} must be at least 2", self.k));
        } else if self.j_true > max_rank(self.k) {
            problems.push(format!(
                "j = {} exceeds the identifiable maximum {} for k = {}",
                self.j_true,
                max_rank(self.k),
                self.k
            ));
        }
        if self.replications == 0 {
            problems.push("replications must be at least 1".into());
        }
        if self.alpha_true.len() != self.j_true {
            problems.push(format!(
                "alpha has {} entries but j = {}",
                self.alpha_true.len(),
                self.j_true
            ));
        }
        if self.alpha_true.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            problems.push("alpha entries must be positive".into());
        }
        if !(self.sigma2_true.is_finite() && self.sigma2_true > 0.0) {
            problems.push(format!("sigma2 = {} must be positive", self.sigma2_true));
        }
        if self.threads == Some(0) {
            problems.push("threads must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

const TOP_KEYS: &[&str] = &[
    "seed",
    "replications",
    "sigma2",
    "estimators",
    "criteria",
    "experiment",
];
const EXPERIMENT_KEYS: &[&str] = &[
    "n",
    "k",
    "j",
    "sigma2",
    "alpha",
    "replications",
    "seed",
    "estimators",
    "criteria",
];

#[derive(Debug, Default, Deserialize)]
struct Defaults {
    seed: Option<u64>,
    replications: Option<usize>,
    sigma2: Option<f64>,
    estimators: Option<Vec<String>>,
    criteria: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct Row {
    n: usize,
    k: usize,
    j: usize,
    sigma2: Option<f64>,
    alpha: Option<Vec<f64>>,
    replications: Option<usize>,
    seed: Option<u64>,
    estimators: Option<Vec<String>>,
    criteria: Option<Vec<String>>,
}

/// Parses a TOML experiment grid.
///
/// Top-level keys provide defaults for every `[[experiment]]` table. Unknown
/// keys are rejected and listed in the error.
pub fn parse_config(text: &str) -> Result<Vec<SimConfig>> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::InvalidConfig(format!("toml: {e}")))?;

    let mut unknown: Vec<String> = table
        .keys()
        .filter(|k| !TOP_KEYS.contains(&k.as_str()))
        .cloned()
        .collect();
    let rows = match table.get("experiment") {
        Some(toml::Value::Array(rows)) => rows.clone(),
        Some(_) => {
            return Err(Error::InvalidConfig(
                "'experiment' must be an array of tables".into(),
            ))
        }
        None => return Err(Error::InvalidConfig("no [[experiment]] entries".into())),
    };
    for (i, row) in rows.iter().enumerate() {
        let Some(t) = row.as_table() else {
            return Err(Error::InvalidConfig(format!(
                "experiment {i} is not a table"
            )));
        };
        unknown.extend(
            t.keys()
                .filter(|k| !EXPERIMENT_KEYS.contains(&k.as_str()))
                .map(|k| format!("experiment[{i}].{k}")),
        );
    }
    if !unknown.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "unknown keys: {}",
            unknown.join(", ")
        )));
    }

    let mut defaults_table = table.clone();
    defaults_table.remove("experiment");
    let defaults: Defaults = defaults_table
        .try_into()
        .map_err(|e| Error::InvalidConfig(format!("defaults: {e}")))?;

    let mut configs = Vec::with_capacity(rows.len());
    for (i, value) in rows.into_iter().enumerate() {
        let row: Row = value
            .try_into()
            .map_err(|e| Error::InvalidConfig(format!("experiment[{i}]: {e}")))?;
        let replications = row.replications.or(defaults.replications).ok_or_else(|| {
            Error::InvalidConfig(format!("experiment[{i}]: missing replications"))
        })?;
        let mut cfg = SimConfig::new(row.n, row.k, row.j, replications);
        cfg.master_seed = row.seed.or(defaults.seed).unwrap_or(DEFAULT_SEED);
        cfg.sigma2_true = row.sigma2.or(defaults.sigma2).unwrap_or(1.0);
        if let Some(alpha) = row.alpha {
            cfg.alpha_true = alpha;
        }
        if let Some(names) = row.estimators.or_else(|| defaults.estimators.clone()) {
            cfg.estimators = names.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(names) = row.criteria.or_else(|| defaults.criteria.clone()) {
            cfg.criteria = names.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        cfg.validate()
            .map_err(|e| Error::InvalidConfig(format!("experiment[{i}]: {e}")))?;
        configs.push(cfg);
    }
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults_and_overrides() {
        let text = r#"
            seed = 7
            replications = 100
            criteria = ["mml", "bic"]

            [[experiment]]
            n = 50
            k = 10
            j = 2

            [[experiment]]
            n = 25
            k = 5
            j = 1
            alpha = [2.0]
            seed = 9
            estimators = ["mml"]
        "#;
        let cfgs = parse_config(text).unwrap();
        assert_eq!(cfgs.len(), 2);
        assert_eq!(cfgs[0].master_seed, 7);
        assert_eq!(cfgs[0].alpha_true, vec![1.0, 1.0]);
        assert_eq!(cfgs[0].criteria, vec![Criterion::Mml, Criterion::Bic]);
        assert_eq!(cfgs[1].master_seed, 9);
        assert_eq!(cfgs[1].alpha_true, vec![2.0]);
        assert_eq!(cfgs[1].estimators, vec![Estimator::Mml]);
    }

    #[test]
    fn lists_unknown_keys() {
        let text = "replications = 3\nbogus = 1\n[[experiment]]\nn = 5\nk = 4\nj = 1\nwidth = 2\n";
        let err = parse_config(text).unwrap_err().to_string();
        assert!(
            err.contains("bogus") && err.contains("experiment[0].width"),
            "{err}"
        );
    }

    #[test]
    fn rejects_unidentifiable_rank() {
        let text = "replications = 3\n[[experiment]]\nn = 5\nk = 4\nj = 2\n";
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn missing_replications() {
        let text = "[[experiment]]\nn = 5\nk = 4\nj = 1\n";
        assert!(parse_config(text)
            .unwrap_err()
            .to_string()
            .contains("replications"));
    }
}
