//! Comparator that swaps infeasible projection for exact Euclidean
//! projection; everything else matches the projection-free learners.

use crate::adversary::RoundOracle;
use crate::bagel::{run_with, BagelParams, BagelRunner};
use crate::base_ogd::{run_oco_with, BlockLearner, BlockProjector, OcoParams};
use crate::evaluation::exact::ExactGeometry;
use crate::record::RunLog;
use crate::{Result, Vector};

/// One projection call per block update.
pub struct ExactProjector<'a, B: ?Sized> {
    body: &'a B,
}

impl<'a, B: ExactGeometry + ?Sized> ExactProjector<'a, B> {
    pub fn new(body: &'a B) -> Self {
        ExactProjector { body }
    }
}

impl<B: ExactGeometry + ?Sized> BlockProjector for ExactProjector<'_, B> {
    fn project(&self, y: &Vector) -> Result<(Vector, u64)> {
        Ok((self.body.project(y)?, 1))
    }
}

/// Surrogate learner with exact projection.
pub fn projection_baseline_run<B: ExactGeometry + ?Sized>(
    body: &B,
    params: BagelParams,
    x1: Vector,
    rounds: &[RoundOracle],
) -> Result<RunLog> {
    let learner =
        BlockLearner::with_projector(body, params.oco_params(), x1, ExactProjector::new(body))?;
    run_with(BagelRunner::from_learner(params, learner), rounds)
}

/// Blocked gradient descent on the costs with exact projection.
pub fn projection_baseline_oco<B: ExactGeometry + ?Sized>(
    body: &B,
    params: OcoParams,
    x1: Vector,
    rounds: &[RoundOracle],
) -> Result<RunLog> {
    let learner = BlockLearner::with_projector(body, params, x1, ExactProjector::new(body))?;
    run_oco_with(learner, rounds, |_, r, x| Ok(r.grad_f(x)))
}
