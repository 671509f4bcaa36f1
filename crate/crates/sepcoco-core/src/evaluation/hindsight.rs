use alloc::vec::Vec;

use crate::adversary::{RoundOracle, ANCHOR_TOL};
use crate::evaluation::exact::{dykstra, ExactGeometry};
use crate::geometry::Halfspace;
use crate::{Error, Result, Vector};

/// `sum_t f_t(x)`.
pub fn total_cost(rounds: &[RoundOracle], x: &Vector) -> f64 {
    rounds.iter().map(|r| r.eval_f(x)).sum()
}

/// `sum_t f_t` written as `alpha / 2 ||x||^2 + <b, x> + const`; exact for
/// linear and isotropic quadratic costs.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCost {
    pub alpha: f64,
    pub linear: Vector,
}

impl AggregateCost {
    pub fn from_rounds(rounds: &[RoundOracle], dim: usize) -> Self {
        use crate::adversary::CostFn;
        let mut alpha = 0.0;
        let mut linear = Vector::zeros(dim);
        for r in rounds {
            match &r.cost {
                CostFn::Linear { u } => linear.axpy(1.0, u),
                CostFn::Quadratic { theta, target } => {
                    alpha += theta;
                    linear.axpy(-theta, target);
                }
            }
        }
        AggregateCost { alpha, linear }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        let mut g = self.linear.clone();
        g.axpy(self.alpha, x);
        g
    }
}

fn check_rounds(rounds: &[RoundOracle]) -> Result<()> {
    if rounds.is_empty() {
        Err(Error::InvalidConfig(
            "hindsight optimum needs at least one round".into(),
        ))
    } else {
        Ok(())
    }
}

/// Minimizer of `sum_t f_t` over the body and its value.
pub fn hindsight_optimum<B: ExactGeometry + ?Sized>(
    body: &B,
    rounds: &[RoundOracle],
) -> Result<(Vector, f64)> {
    check_rounds(rounds)?;
    let agg = AggregateCost::from_rounds(rounds, body.dim());
    let x = if agg.alpha > 0.0 {
        body.project(&agg.linear.scaled(-1.0 / agg.alpha))?
    } else if agg.linear.norm() == 0.0 {
        body.anchor().clone()
    } else {
        body.linear_minimizer(&agg.linear)?
    };
    let value = total_cost(rounds, &x);
    Ok((x, value))
}

const LINEAR_PGD_ITERS: usize = 400;
const FEASIBLE_DYKSTRA_SWEEPS: usize = 20_000;

/// Minimizer of `sum_t f_t` over `{x in K : g_t(x) <= 0 for all t}`.
///
/// Projected gradient on the aggregated cost, with projections onto the
/// intersection computed by Dykstra's method; the result is then pulled
/// toward `anchor` just far enough to satisfy every halfspace, and every
/// round's constraint is checked at the returned point. The anchor itself
/// is returned when it is at least as good.
pub fn feasible_hindsight_optimum<B: ExactGeometry + ?Sized>(
    body: &B,
    rounds: &[RoundOracle],
    anchor: &Vector,
) -> Result<(Vector, f64)> {
    check_rounds(rounds)?;
    anchor.ensure_dim(body.dim())?;
    let mut halfspaces: Vec<&Halfspace> = Vec::new();
    for r in rounds {
        for h in r.constraint.halfspaces() {
            if !halfspaces.contains(&h) {
                halfspaces.push(h);
            }
        }
    }
    let agg = AggregateCost::from_rounds(rounds, body.dim());
    let proj_body = |y: &Vector| body.project(y).expect("dimension already validated");
    let proj = |y: &Vector| dykstra(y, Some(&proj_body), &halfspaces, FEASIBLE_DYKSTRA_SWEEPS);

    let candidate = if agg.alpha > 0.0 {
        proj(&agg.linear.scaled(-1.0 / agg.alpha))
    } else if agg.linear.norm() == 0.0 {
        anchor.clone()
    } else {
        let step = body.diameter() / agg.linear.norm();
        let mut x = proj(anchor);
        for _ in 0..LINEAR_PGD_ITERS {
            let mut y = x.clone();
            y.axpy(-step, &agg.linear);
            let next = proj(&y);
            let moved = next.distance(&x);
            x = next;
            if moved <= 1e-12 * (1.0 + body.diameter()) {
                break;
            }
        }
        x
    };
    let candidate = restore_feasibility(&body.project(&candidate)?, anchor, &halfspaces);

    let worst = |x: &Vector| {
        rounds
            .iter()
            .map(|r| r.eval_g(x))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let anchor_value = total_cost(rounds, anchor);
    let best = if worst(&candidate) <= ANCHOR_TOL && body.contains(&candidate)? {
        let value = total_cost(rounds, &candidate);
        if value <= anchor_value {
            (candidate, value)
        } else {
            (anchor.clone(), anchor_value)
        }
    } else {
        (anchor.clone(), anchor_value)
    };
    let violation = worst(&best.0);
    if violation > ANCHOR_TOL || !body.contains(&best.0)? {
        return Err(Error::InfeasibleCertificate { violation });
    }
    Ok(best)
}

/// Moves `x` toward `anchor` by the smallest fraction that satisfies every
/// halfspace (ratio test).
fn restore_feasibility(x: &Vector, anchor: &Vector, halfspaces: &[&Halfspace]) -> Vector {
    let mut s: f64 = 0.0;
    for h in halfspaces {
        let at_x = h.excess(x);
        if at_x > 0.0 {
            let at_anchor = h.excess(anchor);
            s = if at_anchor < at_x {
                s.max(at_x / (at_x - at_anchor))
            } else {
                1.0
            };
        }
    }
    if s == 0.0 {
        return x.clone();
    }
    for _ in 0..8 {
        let y = x.lerp(anchor, s.min(1.0));
        if halfspaces.iter().all(|h| h.excess(&y) <= 0.0) || s >= 1.0 {
            return y;
        }
        s += 1e-12 + s * 1e-12;
    }
    anchor.clone()
}
