//! Per-beta trade-off table at each horizon.

use std::path::{Path, PathBuf};

use sepcoco_core::evaluation::Metric;

use crate::config::{ConfigError, ExperimentConfig};
use crate::suite::{expected_exponent, run_suite, write_suite, SuiteOutcome};
use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub beta: f64,
    pub horizon: usize,
    pub seeds: usize,
    pub mean_regret: f64,
    pub mean_ccv: f64,
    pub mean_so_calls: f64,
    pub regret_exponent: f64,
    pub calls_exponent: f64,
    /// Fitted slopes across the config's horizons, when a fit was possible.
    pub regret_slope: Option<f64>,
    pub calls_slope: Option<f64>,
}

pub fn check_betas(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    if cfg.betas.len() < 2 {
        return Err(ConfigError {
            line: 0,
            key: "betas".into(),
            message: "the trade-off table needs at least two beta values".into(),
        });
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn tradeoff_rows(cfg: &ExperimentConfig, outcome: &SuiteOutcome) -> Vec<TradeoffRow> {
    let mut rows = Vec::new();
    for &beta in &cfg.betas {
        let regret = outcome.samples(beta, Metric::Regret);
        let ccv = outcome.samples(beta, Metric::Ccv);
        let calls = outcome.samples(beta, Metric::SoCalls);
        for ((t, r), ((_, c), (_, s))) in regret.iter().zip(ccv.iter().zip(&calls)) {
            rows.push(TradeoffRow {
                beta,
                horizon: *t,
                seeds: r.len(),
                mean_regret: mean(r),
                mean_ccv: mean(c),
                mean_so_calls: mean(s),
                regret_exponent: expected_exponent(cfg.mode, Metric::Regret, beta),
                calls_exponent: expected_exponent(cfg.mode, Metric::SoCalls, beta),
                regret_slope: outcome.fit(beta, Metric::Regret).map(|f| f.slope),
                calls_slope: outcome.fit(beta, Metric::SoCalls).map(|f| f.slope),
            });
        }
    }
    rows
}

pub fn write_tradeoff(rows: &[TradeoffRow], path: &Path) -> Result<(), BenchError> {
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "beta",
        "T",
        "seeds",
        "mean_regret",
        "mean_ccv",
        "mean_so_calls",
        "regret_exponent_theory",
        "calls_exponent_theory",
        "regret_slope_measured",
        "calls_slope_measured",
    ])?;
    for r in rows {
        w.write_record([
            r.beta.to_string(),
            r.horizon.to_string(),
            r.seeds.to_string(),
            r.mean_regret.to_string(),
            r.mean_ccv.to_string(),
            r.mean_so_calls.to_string(),
            r.regret_exponent.to_string(),
            r.calls_exponent.to_string(),
            opt(r.regret_slope),
            opt(r.calls_slope),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the suite and writes the runs, summary and trade-off files.
pub fn run_tradeoff(
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Result<(SuiteOutcome, Vec<TradeoffRow>, PathBuf), BenchError> {
    check_betas(cfg)?;
    let outcome = run_suite(cfg);
    write_suite(cfg, &outcome, dir)?;
    let rows = tradeoff_rows(cfg, &outcome);
    let path = dir.join(format!("{}_tradeoff.csv", cfg.name));
    write_tradeoff(&rows, &path)?;
    Ok((outcome, rows, path))
}
