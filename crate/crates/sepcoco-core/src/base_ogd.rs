//! Blocked online gradient descent with infeasible-projection updates.
//!
//! Rounds are grouped into blocks of `K`. One action is played per block;
//! at the end of block `m` the learner averages the `K` gradients it was fed
//! into `g_m`, picks a step size and moves to `P(x_m - eta_m g_m)`, where `P`
//! is a [`BlockProjector`] ([`IpsoProjector`] unless a comparator injects an
//! exact projection).
//!
//! Step sizes:
//! - convex: `eta_m = D / sqrt(eps + sum_{tau <= m} ||g_tau||^2)`;
//! - strongly convex: `eta_m = 1 / (m theta)`.

use alloc::format;
use alloc::vec::Vec;

use crate::adversary::RoundOracle;
use crate::geometry::ConvexBody;
use crate::ipso::{infeasible_project, IpsoConfig};
use crate::record::{BlockSummary, RoundRecord, RunLog};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Convex { epsilon: f64, diameter: f64 },
    StronglyConvex { theta: f64 },
}

impl StepRule {
    /// Convex rule with the default floor `epsilon = 1`.
    pub fn convex(diameter: f64) -> Self {
        StepRule::Convex {
            epsilon: 1.0,
            diameter,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            StepRule::Convex { epsilon, diameter } => {
                if !(epsilon >= 0.0 && epsilon.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "epsilon {epsilon} must be >= 0"
                    )));
                }
                if !(diameter > 0.0 && diameter.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "diameter {diameter} must be > 0"
                    )));
                }
            }
            StepRule::StronglyConvex { theta } => {
                if !(theta > 0.0 && theta.is_finite()) {
                    return Err(Error::InvalidConfig(format!("theta {theta} must be > 0")));
                }
            }
        }
        Ok(())
    }

    /// Step size for block `m` given the cumulative squared mean-gradient
    /// norm through block `m`.
    pub fn step_size(&self, m: usize, cumulative_sq_grad: f64) -> f64 {
        match *self {
            StepRule::Convex { epsilon, diameter } => {
                let den = libm::sqrt(epsilon + cumulative_sq_grad);
                if den == 0.0 {
                    f64::INFINITY
                } else {
                    diameter / den
                }
            }
            StepRule::StronglyConvex { theta } => 1.0 / (m as f64 * theta),
        }
    }
}

/// Maps a tentative point back to (or toward) the body, reporting how many
/// oracle or projection calls it spent.
pub trait BlockProjector {
    fn project(&self, y: &Vector) -> Result<(Vector, u64)>;
}

pub struct IpsoProjector<'a, B: ?Sized> {
    body: &'a B,
    cfg: IpsoConfig,
}

impl<'a, B: ConvexBody + ?Sized> IpsoProjector<'a, B> {
    pub fn new(body: &'a B, cfg: IpsoConfig) -> Self {
        IpsoProjector { body, cfg }
    }
}

impl<B: ConvexBody + ?Sized> BlockProjector for IpsoProjector<'_, B> {
    fn project(&self, y: &Vector) -> Result<(Vector, u64)> {
        let out = infeasible_project(self.body, &self.cfg, y)?;
        Ok((out.point, out.so_calls))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcoParams {
    pub horizon: usize,
    pub block_len: usize,
    pub delta: f64,
    pub rule: StepRule,
}

impl OcoParams {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.block_len == 0 {
            return Err(Error::InvalidConfig(
                "horizon and block length must be positive".into(),
            ));
        }
        if !self.horizon.is_multiple_of(self.block_len) {
            return Err(Error::InvalidConfig(format!(
                "block length {} does not divide horizon {}",
                self.block_len, self.horizon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta {} outside (0, 1)",
                self.delta
            )));
        }
        self.rule.validate()
    }

    pub fn blocks(&self) -> usize {
        self.horizon / self.block_len
    }
}

/// Learner state across blocks.
pub struct BlockLearner<P> {
    params: OcoParams,
    projector: P,
    block: usize,
    action: Vector,
    grad_sum: Vector,
    rounds_in_block: usize,
    cumulative_sq_grad: f64,
    total_so_calls: u64,
    eta: f64,
}

impl<'a, B: ConvexBody + ?Sized> BlockLearner<IpsoProjector<'a, B>> {
    pub fn new(body: &'a B, params: OcoParams, x1: Vector) -> Result<Self> {
        params.validate()?;
        let cfg = IpsoConfig::for_body(body, params.delta)?;
        Self::with_projector(body, params, x1, IpsoProjector::new(body, cfg))
    }
}

impl<P: BlockProjector> BlockLearner<P> {
    /// Learner with a caller-supplied projector. `x1` is checked against the
    /// body's separation oracle.
    pub fn with_projector<B: ConvexBody + ?Sized>(
        body: &B,
        params: OcoParams,
        x1: Vector,
        projector: P,
    ) -> Result<Self> {
        params.validate()?;
        x1.ensure_dim(body.dim())?;
        if !body.contains(&x1)? {
            return Err(Error::InvalidConfig(
                "initial action lies outside the body".into(),
            ));
        }
        let dim = x1.dim();
        Ok(BlockLearner {
            params,
            projector,
            block: 1,
            action: x1,
            grad_sum: Vector::zeros(dim),
            rounds_in_block: 0,
            cumulative_sq_grad: 0.0,
            total_so_calls: 0,
            eta: 0.0,
        })
    }

    pub fn action(&self) -> &Vector {
        &self.action
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn rounds_in_block(&self) -> usize {
        self.rounds_in_block
    }

    pub fn grad_sum(&self) -> &Vector {
        &self.grad_sum
    }

    pub fn cumulative_sq_grad(&self) -> f64 {
        self.cumulative_sq_grad
    }

    pub fn total_so_calls(&self) -> u64 {
        self.total_so_calls
    }

    /// Step size that produced the current action (zero before the first update).
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn params(&self) -> &OcoParams {
        &self.params
    }

    pub fn block_full(&self) -> bool {
        self.rounds_in_block == self.params.block_len
    }

    pub fn feed_gradient(&mut self, grad: &Vector) -> Result<()> {
        grad.ensure_dim(self.action.dim())?;
        grad.ensure_finite()?;
        if self.block_full() {
            return Err(Error::BlockOverflow {
                block_len: self.params.block_len,
            });
        }
        self.grad_sum.axpy(1.0, grad);
        self.rounds_in_block += 1;
        Ok(())
    }

    /// Closes the current block and moves to the next action.
    pub fn end_block(&mut self) -> Result<BlockSummary> {
        if !self.block_full() {
            return Err(Error::BlockIncomplete {
                fed: self.rounds_in_block,
                block_len: self.params.block_len,
            });
        }
        let mean = self.grad_sum.scaled(1.0 / self.params.block_len as f64);
        self.cumulative_sq_grad += mean.norm_sq();
        let eta = self
            .params
            .rule
            .step_size(self.block, self.cumulative_sq_grad);
        let mut tentative = self.action.clone();
        if mean.norm_sq() > 0.0 {
            tentative.axpy(-eta, &mean);
        }
        let (next, calls) = self.projector.project(&tentative)?;
        let summary = BlockSummary {
            block: self.block,
            action: core::mem::replace(&mut self.action, next),
            mean_gradient: mean,
            eta,
            so_calls: calls,
        };
        self.total_so_calls += calls;
        self.eta = eta;
        self.block += 1;
        self.grad_sum = Vector::zeros(self.action.dim());
        self.rounds_in_block = 0;
        Ok(summary)
    }
}

/// Runs the learner on the cost gradients of `rounds` (constraints ignored).
pub fn run_oco<B: ConvexBody + ?Sized>(
    body: &B,
    params: OcoParams,
    x1: Vector,
    rounds: &[RoundOracle],
) -> Result<RunLog> {
    let learner = BlockLearner::new(body, params, x1)?;
    drive(learner, rounds, |_, r, x| Ok(r.grad_f(x)))
}

/// Runs the learner on gradients supplied by `grad(t, round, x)`.
pub fn run_oco_with<P, F>(
    learner: BlockLearner<P>,
    rounds: &[RoundOracle],
    grad: F,
) -> Result<RunLog>
where
    P: BlockProjector,
    F: FnMut(usize, &RoundOracle, &Vector) -> Result<Vector>,
{
    drive(learner, rounds, grad)
}

fn drive<P, F>(mut learner: BlockLearner<P>, rounds: &[RoundOracle], mut grad: F) -> Result<RunLog>
where
    P: BlockProjector,
    F: FnMut(usize, &RoundOracle, &Vector) -> Result<Vector>,
{
    if rounds.len() != learner.params.horizon {
        return Err(Error::InvalidConfig(format!(
            "adversary supplies {} rounds for horizon {}",
            rounds.len(),
            learner.params.horizon
        )));
    }
    let mut log = RunLog {
        rounds: Vec::with_capacity(rounds.len()),
        blocks: Vec::with_capacity(learner.params.blocks()),
        total_so_calls: 0,
    };
    for (i, round) in rounds.iter().enumerate() {
        let x = learner.action().clone();
        let g = grad(i + 1, round, &x)?;
        learner.feed_gradient(&g)?;
        let block = learner.block();
        let eta = learner.eta();
        if learner.block_full() {
            log.blocks.push(learner.end_block()?);
        }
        log.rounds.push(RoundRecord {
            t: i + 1,
            block,
            f_value: round.eval_f(&x),
            g_plus: 0.0,
            q: 0.0,
            so_calls_cum: learner.total_so_calls(),
            eta,
            action: x,
        });
    }
    log.total_so_calls = learner.total_so_calls();
    Ok(log)
}
