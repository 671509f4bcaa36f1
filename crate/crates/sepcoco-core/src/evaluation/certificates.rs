//! Realized checks of the analytic guarantees on a finished run.

use crate::adversary::{RoundOracle, ANCHOR_TOL};
use crate::bagel::{surrogate_gradient, BagelParams};
use crate::base_ogd::OcoParams;
use crate::evaluation::exact::{distance_to_shrunk, ExactGeometry};
use crate::geometry::shrunk_member;
use crate::record::RunLog;
use crate::{Error, Result, Vector};

pub const REGRET_SLACK: f64 = 1e-6;
pub const SURROGATE_SLACK: f64 = 1e-6;
pub const GRADIENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretCertificate {
    /// `sum_t <grad_t, x_t - comparator_shrunk>`.
    pub linearized_regret: f64,
    /// `3/2 D K sqrt(sum_m ||mean grad_m||^2)`.
    pub bound: f64,
}

impl RegretCertificate {
    pub fn holds(&self) -> bool {
        self.linearized_regret <= self.bound + REGRET_SLACK
    }
}

/// Checks the linearized regret of a blocked run against `comparator`
/// shrunk toward the anchor.
pub fn regret_certificate<B: ExactGeometry + ?Sized>(
    body: &B,
    params: &OcoParams,
    log: &RunLog,
    comparator: &Vector,
) -> Result<RegretCertificate> {
    let target = shrunk_member(body, params.delta, comparator)?;
    let k = params.block_len as f64;
    let linearized_regret = log
        .blocks
        .iter()
        .map(|b| k * b.mean_gradient.dot(&b.action.sub(&target)))
        .sum();
    let bound = 1.5 * body.diameter() * k * libm::sqrt(log.squared_gradient_sum());
    Ok(RegretCertificate {
        linearized_regret,
        bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateCertificate {
    /// Regret of the surrogate costs.
    pub surrogate_regret: f64,
    /// Regret of the scaled costs `gamma f_t`.
    pub scaled_cost_regret: f64,
    pub v_weight: f64,
    pub phi_final: f64,
}

impl SurrogateCertificate {
    /// `R(surrogate) - V R(scaled cost) - Phi(Q_T)`.
    pub fn gap(&self) -> f64 {
        self.surrogate_regret - self.v_weight * self.scaled_cost_regret - self.phi_final
    }

    pub fn holds(&self) -> bool {
        self.gap() >= -SURROGATE_SLACK
    }
}

/// Decomposition check at a feasible comparator `x_star`.
pub fn surrogate_certificate(
    params: &BagelParams,
    rounds: &[RoundOracle],
    log: &RunLog,
    x_star: &Vector,
) -> Result<SurrogateCertificate> {
    if rounds.len() != log.rounds.len() {
        return Err(Error::InvalidConfig(
            "log and rounds differ in length".into(),
        ));
    }
    let violation = rounds
        .iter()
        .map(|r| r.eval_g(x_star))
        .fold(f64::NEG_INFINITY, f64::max);
    if violation > ANCHOR_TOL {
        return Err(Error::InfeasibleCertificate { violation });
    }
    let gamma = params.gamma;
    let v = params.v_weight;
    let mut surrogate_regret = 0.0;
    let mut scaled_cost_regret = 0.0;
    for (r, rec) in rounds.iter().zip(&log.rounds) {
        let weight = params.phi.derivative(rec.q)?;
        let f_played = r.eval_f(&rec.action);
        let f_star = r.eval_f(x_star);
        let g_played = gamma * r.eval_g(&rec.action).max(0.0);
        let g_star = gamma * r.eval_g(x_star).max(0.0);
        surrogate_regret +=
            (v * gamma * f_played + weight * g_played) - (v * gamma * f_star + weight * g_star);
        scaled_cost_regret += gamma * f_played - gamma * f_star;
    }
    Ok(SurrogateCertificate {
        surrogate_regret,
        scaled_cost_regret,
        v_weight: v,
        phi_final: params.phi.value(log.final_q())?,
    })
}

/// Largest `||grad_t|| - gamma M1 (V + Phi'(Q_t))` over the run.
pub fn gradient_bound_excess(
    params: &BagelParams,
    rounds: &[RoundOracle],
    log: &RunLog,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for (r, rec) in rounds.iter().zip(&log.rounds) {
        let x = &rec.action;
        let g = r.eval_g(x);
        let grad = surrogate_gradient(params, rec.q, &r.grad_f(x), g, &r.grad_g(x))?;
        let bound = params.gamma * params.m1 * (params.v_weight + params.phi.derivative(rec.q)?);
        worst = worst.max(grad.norm() - bound);
    }
    Ok(worst)
}

/// Per-run oracle budget `sum_m (dist(y0_m, K_delta)^2 / (delta r)^2 + 1)`,
/// where `y0_m` is block `m`'s tentative point. Measuring from `y0` rather
/// than the clipped point only loosens each term.
pub fn so_call_budget<B: ExactGeometry + ?Sized>(
    body: &B,
    params: &OcoParams,
    log: &RunLog,
) -> Result<f64> {
    let step = params.delta * body.inner_radius();
    let mut budget = 0.0;
    for b in &log.blocks {
        let mut y0 = b.action.clone();
        if b.mean_gradient.norm_sq() > 0.0 {
            y0.axpy(-b.eta, &b.mean_gradient);
        }
        let d = distance_to_shrunk(body, params.delta, &y0)?;
        budget += d * d / (step * step) + 1.0;
    }
    Ok(budget)
}
