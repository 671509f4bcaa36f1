//! Offline analysis of finished runs.
//!
//! Regret is measured against the minimizer of the total cost over `K`.
//! The surrogate certificate needs a comparator that satisfies every
//! constraint, so reports may also carry the minimizer over the feasible
//! subset; the two are kept separate.

mod baseline;
mod certificates;
mod exact;
mod fit;
mod hindsight;

pub use baseline::{projection_baseline_oco, projection_baseline_run, ExactProjector};
pub use certificates::{
    gradient_bound_excess, regret_certificate, so_call_budget, surrogate_certificate,
    RegretCertificate, SurrogateCertificate, GRADIENT_SLACK, REGRET_SLACK, SURROGATE_SLACK,
};
pub use exact::{distance_to_shrunk, project_shrunk, project_simplex, ExactGeometry};
pub use fit::{fit_log_log, fit_scaling, Metric, ScalingFit};
pub use hindsight::{feasible_hindsight_optimum, hindsight_optimum, total_cost, AggregateCost};

use crate::adversary::RoundOracle;
use crate::bagel::BagelParams;
use crate::base_ogd::OcoParams;
use crate::record::RunLog;
use crate::{Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunParams {
    Oco(OcoParams),
    Bagel(BagelParams),
}

impl RunParams {
    pub fn oco(&self) -> OcoParams {
        match self {
            RunParams::Oco(p) => *p,
            RunParams::Bagel(p) => p.oco_params(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub log: RunLog,
    pub regret: f64,
    pub ccv: f64,
    pub total_so_calls: u64,
    pub hindsight_point: Vector,
    pub hindsight_value: f64,
    /// Minimizer over the feasible subset, when requested.
    pub feasible_point: Option<Vector>,
    pub feasible_value: Option<f64>,
    pub params: RunParams,
}

impl RunReport {
    /// Regret recomputed by evaluating every cost at the logged actions.
    pub fn recomputed_regret(&self, rounds: &[RoundOracle]) -> f64 {
        let played: f64 = rounds
            .iter()
            .zip(&self.log.rounds)
            .map(|(r, rec)| r.eval_f(&rec.action))
            .sum();
        played - total_cost(rounds, &self.hindsight_point)
    }

    /// CCV recomputed by evaluating every constraint at the logged actions.
    pub fn recomputed_ccv(&self, rounds: &[RoundOracle]) -> f64 {
        rounds
            .iter()
            .zip(&self.log.rounds)
            .map(|(r, rec)| r.eval_g(&rec.action).max(0.0))
            .sum()
    }
}

/// Builds a report from a finished log. Pass `anchor` to also compute the
/// feasible hindsight optimum.
pub fn evaluate<B: ExactGeometry + ?Sized>(
    body: &B,
    rounds: &[RoundOracle],
    log: RunLog,
    params: RunParams,
    anchor: Option<&Vector>,
) -> Result<RunReport> {
    let (hindsight_point, hindsight_value) = hindsight_optimum(body, rounds)?;
    let played: f64 = log.rounds.iter().map(|r| r.f_value).sum();
    let (feasible_point, feasible_value) = match anchor {
        Some(a) => {
            let (x, v) = feasible_hindsight_optimum(body, rounds, a)?;
            (Some(x), Some(v))
        }
        None => (None, None),
    };
    Ok(RunReport {
        regret: played - hindsight_value,
        ccv: log.ccv(),
        total_so_calls: log.total_so_calls,
        hindsight_point,
        hindsight_value,
        feasible_point,
        feasible_value,
        params,
        log,
    })
}
