//! Runs the (horizon, beta, seed) grid of a config and writes CSV.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sepcoco_core::adversary::{generate, RoundOracle, Scenario, ScenarioSpec};
use sepcoco_core::bagel::{run_coco, BagelParams, LyapunovPhi, Mode, Tuning};
use sepcoco_core::base_ogd::{run_oco, OcoParams, StepRule};
use sepcoco_core::evaluation::{
    evaluate, fit_scaling, projection_baseline_run, ExactGeometry, Metric, RunParams, RunReport,
    ScalingFit,
};
use sepcoco_core::geometry::{ConvexBody, Geometry};
use sepcoco_core::rng::SplitMix64;
use sepcoco_core::Vector;

use crate::config::{format_config, Algorithm, AnchorChoice, ExperimentConfig, StartChoice};
use crate::BenchError;

/// Stream index used to draw the anchor direction.
const ANCHOR_STREAM: u64 = 3;

/// Env var that overrides the config's output directory.
pub const OUTPUT_ENV: &str = "SEPCOCO_OUT";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub horizon: usize,
    pub beta: f64,
    pub seed: u64,
}

/// Everything a finished cell produced.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub cell: Cell,
    pub rounds: Vec<RoundOracle>,
    pub anchor: Vector,
    pub start: Vector,
    pub report: RunReport,
    pub m1: f64,
    pub runtime_ms: f64,
}

impl CellRun {
    pub fn row(&self) -> Row {
        let oco = self.report.params.oco();
        let (requested_k, gamma, v_weight, phi_param) = match self.report.params {
            RunParams::Bagel(p) => (p.requested_block_len, p.gamma, p.v_weight, phi_param(p.phi)),
            RunParams::Oco(p) => (p.block_len, f64::NAN, f64::NAN, f64::NAN),
        };
        Row {
            horizon: self.cell.horizon,
            block_len: oco.block_len,
            requested_block_len: requested_k,
            delta: oco.delta,
            beta: self.cell.beta,
            seed: self.cell.seed,
            regret: self.report.regret,
            ccv: self.report.ccv,
            so_calls: self.report.total_so_calls,
            hindsight_value: self.report.hindsight_value,
            feasible_value: self.report.feasible_value,
            runtime_ms: self.runtime_ms,
            m1: self.m1,
            gamma,
            v_weight,
            phi_param,
            status: "ok".into(),
        }
    }
}

fn phi_param(phi: LyapunovPhi) -> f64 {
    match phi {
        LyapunovPhi::Exponential { lambda } => lambda,
        LyapunovPhi::Square => f64::NAN,
    }
}

/// One data row. `NaN` fields are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub horizon: usize,
    pub block_len: usize,
    pub requested_block_len: usize,
    pub delta: f64,
    pub beta: f64,
    pub seed: u64,
    pub regret: f64,
    pub ccv: f64,
    pub so_calls: u64,
    pub hindsight_value: f64,
    pub feasible_value: Option<f64>,
    pub runtime_ms: f64,
    pub m1: f64,
    pub gamma: f64,
    pub v_weight: f64,
    /// λ of the exponential potential; empty for the square potential.
    pub phi_param: f64,
    pub status: String,
}

impl Row {
    fn error(cell: Cell, message: &str) -> Self {
        Row {
            horizon: cell.horizon,
            block_len: 0,
            requested_block_len: 0,
            delta: f64::NAN,
            beta: cell.beta,
            seed: cell.seed,
            regret: f64::NAN,
            ccv: f64::NAN,
            so_calls: 0,
            hindsight_value: f64::NAN,
            feasible_value: None,
            runtime_ms: f64::NAN,
            m1: f64::NAN,
            gamma: f64::NAN,
            v_weight: f64::NAN,
            phi_param: f64::NAN,
            status: format!("error: {}", message.replace(['\n', '\r'], " ")),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub const ROW_HEADER: [&str; 23] = [
    "T",
    "K",
    "requested_K",
    "delta",
    "beta",
    "seed",
    "regret",
    "ccv",
    "so_calls",
    "hindsight_value",
    "feasible_value",
    "runtime_ms",
    "algorithm",
    "mode",
    "geometry",
    "m1",
    "gamma",
    "v_weight",
    "phi_param",
    "c_delta",
    "c_k",
    "epsilon",
    "status",
];

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

/// Summary row: one fit per (beta, metric).
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub beta: f64,
    pub metric: Metric,
    pub fit: Option<ScalingFit>,
    pub expected_exponent: f64,
    pub note: String,
}

pub fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::Regret => "regret",
        Metric::Ccv => "ccv",
        Metric::SoCalls => "so_calls",
    }
}

/// Rate exponent the analysis predicts for a metric.
pub fn expected_exponent(mode: Mode, metric: Metric, beta: f64) -> f64 {
    match (mode, metric) {
        (Mode::Convex, Metric::Regret | Metric::Ccv) => 1.0 - beta,
        (Mode::StronglyConvex, Metric::Regret) => 1.0 - beta,
        (Mode::StronglyConvex, Metric::Ccv) => 1.0 - beta / 2.0,
        (_, Metric::SoCalls) => 2.0 * beta,
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    /// Sorted by (beta, T, seed).
    pub rows: Vec<Row>,
    pub fits: Vec<FitRow>,
}

impl SuiteOutcome {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    /// Per-seed values of a metric grouped by horizon, for one beta.
    pub fn samples(&self, beta: f64, metric: Metric) -> Vec<(usize, Vec<f64>)> {
        let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.is_ok() && r.beta == beta) {
            let v = match metric {
                Metric::Regret => r.regret,
                Metric::Ccv => r.ccv,
                Metric::SoCalls => r.so_calls as f64,
            };
            match out.iter_mut().find(|(t, _)| *t == r.horizon) {
                Some((_, vals)) => vals.push(v),
                None => out.push((r.horizon, vec![v])),
            }
        }
        out
    }

    pub fn fit(&self, beta: f64, metric: Metric) -> Option<ScalingFit> {
        self.fits
            .iter()
            .find(|f| f.beta == beta && f.metric == metric)
            .and_then(|f| f.fit)
    }
}

pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &beta in &cfg.betas {
        for &horizon in &cfg.horizons {
            for &seed in &cfg.seeds {
                out.push(Cell {
                    horizon,
                    beta,
                    seed,
                });
            }
        }
    }
    out
}

/// Feasible anchor for a cell.
pub fn anchor_for(
    cfg: &ExperimentConfig,
    body: &Geometry,
    seed: u64,
) -> Result<Vector, BenchError> {
    Ok(match cfg.anchor {
        AnchorChoice::Center => body.anchor().clone(),
        AnchorChoice::Extreme => {
            let dir = SplitMix64::stream(seed, ANCHOR_STREAM).unit_vector(body.dim());
            body.linear_minimizer(&dir)?
        }
    })
}

pub fn scenario_for(
    cfg: &ExperimentConfig,
    body: &Geometry,
    cell: Cell,
) -> Result<(Scenario, Vector), BenchError> {
    let anchor = anchor_for(cfg, body, cell.seed)?;
    let spec = ScenarioSpec {
        costs: cfg.costs.clone(),
        constraints: cfg.constraints.clone(),
        seed: cell.seed,
        horizon: cell.horizon,
        feasible_anchor: anchor.clone(),
    };
    Ok((generate(&spec, body)?, anchor))
}

fn tuning(cfg: &ExperimentConfig) -> Tuning {
    Tuning {
        c_delta: cfg.c_delta,
        c_k: cfg.c_k,
        epsilon: cfg.epsilon,
    }
}

/// Preset parameters of the surrogate learner for a cell.
pub fn bagel_params(
    cfg: &ExperimentConfig,
    body: &Geometry,
    cell: Cell,
    m1: f64,
) -> Result<BagelParams, BenchError> {
    Ok(match cfg.mode {
        Mode::Convex => {
            BagelParams::convex(cell.horizon, cell.beta, m1, body.diameter(), tuning(cfg))?
        }
        Mode::StronglyConvex => {
            BagelParams::strongly_convex(cell.horizon, cell.beta, m1, cfg.theta, tuning(cfg))?
        }
    })
}

/// Parameters for running the base learner directly on the costs: same δ
/// and K as the preset, step rule on the raw costs.
pub fn oco_params(
    cfg: &ExperimentConfig,
    body: &Geometry,
    cell: Cell,
    m1: f64,
) -> Result<OcoParams, BenchError> {
    let preset = bagel_params(cfg, body, cell, m1)?;
    let rule = match cfg.mode {
        Mode::Convex => StepRule::Convex {
            epsilon: cfg.epsilon,
            diameter: body.diameter(),
        },
        Mode::StronglyConvex => StepRule::StronglyConvex { theta: cfg.theta },
    };
    Ok(OcoParams {
        rule,
        ..preset.oco_params()
    })
}

pub fn run_cell(cfg: &ExperimentConfig, cell: Cell) -> Result<CellRun, BenchError> {
    let body = cfg.geometry.build()?;
    let started = Instant::now();
    let (scenario, anchor) = scenario_for(cfg, &body, cell)?;
    let m1 = cfg.m1_override.unwrap_or(scenario.declared_m1);
    let start = match (cfg.start, &scenario.suggested_start) {
        (StartChoice::Auto, Some(s)) => s.clone(),
        _ => body.anchor().clone(),
    };
    let rounds = scenario.rounds;
    let report = match cfg.algorithm {
        Algorithm::Bagel => {
            let params = bagel_params(cfg, &body, cell, m1)?;
            let log = run_coco(&body, params, start.clone(), &rounds)?;
            evaluate(&body, &rounds, log, RunParams::Bagel(params), Some(&anchor))?
        }
        Algorithm::ProjectionBaseline => {
            let params = bagel_params(cfg, &body, cell, m1)?;
            let log = projection_baseline_run(&body, params, start.clone(), &rounds)?;
            evaluate(&body, &rounds, log, RunParams::Bagel(params), Some(&anchor))?
        }
        Algorithm::BaseOgd => {
            let params = oco_params(cfg, &body, cell, m1)?;
            let log = run_oco(&body, params, start.clone(), &rounds)?;
            evaluate(&body, &rounds, log, RunParams::Oco(params), None)?
        }
    };
    Ok(CellRun {
        cell,
        rounds,
        anchor,
        start,
        report,
        m1,
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs every cell in parallel. Failed cells become error rows.
pub fn run_suite(cfg: &ExperimentConfig) -> SuiteOutcome {
    let mut rows: Vec<Row> = cells(cfg)
        .into_par_iter()
        .map(|cell| match run_cell(cfg, cell) {
            Ok(run) => run.row(),
            Err(e) => Row::error(cell, &e.to_string()),
        })
        .collect();
    rows.sort_by(|a, b| {
        a.beta
            .total_cmp(&b.beta)
            .then(a.horizon.cmp(&b.horizon))
            .then(a.seed.cmp(&b.seed))
    });
    let mut outcome = SuiteOutcome {
        rows,
        fits: Vec::new(),
    };
    let mut fits = Vec::new();
    for &beta in &cfg.betas {
        for metric in [Metric::Regret, Metric::Ccv, Metric::SoCalls] {
            let (fit, note) = match fit_scaling(&outcome.samples(beta, metric), metric) {
                Ok(f) => (Some(f), String::new()),
                Err(e) => (None, e.to_string()),
            };
            fits.push(FitRow {
                beta,
                metric,
                fit,
                expected_exponent: expected_exponent(cfg.mode, metric, beta),
                note,
            });
        }
    }
    outcome.fits = fits;
    outcome
}

/// Output directory: the env override if set, else the config value.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(&cfg.output),
    }
}

fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Bagel => "bagel",
        Algorithm::BaseOgd => "base_ogd",
        Algorithm::ProjectionBaseline => "projection_baseline",
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Convex => "convex",
        Mode::StronglyConvex => "strongly_convex",
    }
}

fn geometry_echo(cfg: &ExperimentConfig) -> String {
    let text = format_config(cfg);
    text.lines()
        .find_map(|l| l.strip_prefix("geometry="))
        .unwrap_or_default()
        .to_string()
}

pub fn write_rows(cfg: &ExperimentConfig, rows: &[Row], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ROW_HEADER)?;
    let geometry = geometry_echo(cfg);
    for r in rows {
        w.write_record([
            r.horizon.to_string(),
            r.block_len.to_string(),
            r.requested_block_len.to_string(),
            num(r.delta),
            num(r.beta),
            r.seed.to_string(),
            num(r.regret),
            num(r.ccv),
            r.so_calls.to_string(),
            num(r.hindsight_value),
            r.feasible_value.map_or(String::new(), num),
            num(r.runtime_ms),
            algorithm_name(cfg.algorithm).into(),
            mode_name(cfg.mode).into(),
            geometry.clone(),
            num(r.m1),
            num(r.gamma),
            num(r.v_weight),
            num(r.phi_param),
            num(cfg.c_delta),
            num(cfg.c_k),
            num(cfg.epsilon),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fits(fits: &[FitRow], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "beta",
        "metric",
        "slope",
        "intercept",
        "r_squared",
        "shifted",
        "expected_exponent",
        "note",
    ])?;
    for f in fits {
        let (slope, intercept, r2, shifted) = match f.fit {
            Some(fit) => (
                num(fit.slope),
                num(fit.intercept),
                num(fit.r_squared),
                fit.shifted.to_string(),
            ),
            None => Default::default(),
        };
        w.write_record([
            num(f.beta),
            metric_name(f.metric).into(),
            slope,
            intercept,
            r2,
            shifted,
            num(f.expected_exponent),
            f.note.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Files written by [`write_suite`].
#[derive(Debug, Clone)]
pub struct SuiteFiles {
    pub runs: PathBuf,
    pub summary: PathBuf,
}

pub fn write_suite(
    cfg: &ExperimentConfig,
    outcome: &SuiteOutcome,
    dir: &Path,
) -> Result<SuiteFiles, BenchError> {
    fs::create_dir_all(dir)
        .map_err(|e| BenchError::Io(io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
    let files = SuiteFiles {
        runs: dir.join(format!("{}_runs.csv", cfg.name)),
        summary: dir.join(format!("{}_summary.csv", cfg.name)),
    };
    write_rows(cfg, &outcome.rows, &files.runs)?;
    write_fits(&outcome.fits, &files.summary)?;
    Ok(files)
}
