use std::fmt::Write as _;
use std::io::Write;

use super::experiment::SimResult;
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidData(format!("csv: {e}"))
}

/// One row per (configuration, estimator).
pub fn write_estimation_csv<W: Write>(results: &[SimResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "N",
        "K",
        "J",
        "estimator",
        "S1",
        "S2",
        "KL",
        "se_S1",
        "se_S2",
        "se_KL",
        "fallbacks",
        "replications",
        "seed",
    ])
    .map_err(csv_err)?;
    for r in results {
        for (name, s) in &r.estimators {
            w.write_record([
                r.config.n.to_string(),
                r.config.k.to_string(),
                r.config.j_true.to_string(),
                name.to_string(),
                s.s1.mean.to_string(),
                s.s2.mean.to_string(),
                s.kl.mean.to_string(),
                s.s1.se.to_string(),
                s.s2.se.to_string(),
                s.kl.se.to_string(),
                s.fallbacks.to_string(),
                r.replications.to_string(),
                r.config.master_seed.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()
        .map_err(|e| Error::InvalidData(format!("write: {e}")))
}

/// One row per (configuration, criterion). Selection rates are percentages.
pub fn write_selection_csv<W: Write>(results: &[SimResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "N",
        "K",
        "J",
        "criterion",
        "KL",
        "se_KL",
        "pct_below",
        "pct_equal",
        "pct_above",
        "replications",
        "seed",
    ])
    .map_err(csv_err)?;
    for r in results {
        for (name, s) in &r.criteria {
            w.write_record([
                r.config.n.to_string(),
                r.config.k.to_string(),
                r.config.j_true.to_string(),
                name.to_string(),
                s.kl.mean.to_string(),
                s.kl.se.to_string(),
                (100.0 * s.rate_below).to_string(),
                (100.0 * s.rate_equal).to_string(),
                (100.0 * s.rate_above).to_string(),
                r.replications.to_string(),
                r.config.master_seed.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()
        .map_err(|e| Error::InvalidData(format!("write: {e}")))
}

/// Human-readable table. Under-selection is shown as `-` when the true rank
/// is 1 and no replication chose rank 0.
pub fn text_summary(r: &SimResult) -> String {
    let c = &r.config;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "N={} K={} J={} sigma2={} replications={} seed={}",
        c.n, c.k, c.j_true, c.sigma2_true, r.replications, c.master_seed
    );
    if !r.estimators.is_empty() {
        let _ = writeln!(s, "{:<10}{:>18}{:>18}{:>18}", "estimator", "S1", "S2", "KL");
        for (name, e) in &r.estimators {
            let _ = writeln!(
                s,
                "{:<10}{:>18}{:>18}{:>18}",
                name,
                format!("{:.3} ({:.3})", e.s1.mean, e.s1.se),
                format!("{:.3} ({:.3})", e.s2.mean, e.s2.se),
                format!("{:.3} ({:.3})", e.kl.mean, e.kl.se),
            );
        }
    }
    if !r.criteria.is_empty() {
        let _ = writeln!(
            s,
            "{:<10}{:>18}{:>10}{:>10}{:>10}",
            "criterion", "KL", "below", "equal", "above"
        );
        for (name, x) in &r.criteria {
            let below = if c.j_true == 1 && x.rate_below == 0.0 {
                "-".to_string()
            } else {
                format!("{:.2}%", 100.0 * x.rate_below)
            };
            let _ = writeln!(
                s,
                "{:<10}{:>18}{:>10}{:>10}{:>10}",
                name,
                format!("{:.3} ({:.3})", x.kl.mean, x.kl.se),
                below,
                format!("{:.2}%", 100.0 * x.rate_equal),
                format!("{:.2}%", 100.0 * x.rate_above),
            );
        }
    }
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}
