//! Per-round and per-block logs produced by the learners.

use alloc::vec::Vec;

use crate::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    /// 1-based block index.
    pub block: usize,
    pub action: Vector,
    pub f_value: f64,
    /// `max(g_t(x_t), 0)`.
    pub g_plus: f64,
    /// Scaled violation accumulator after this round.
    pub q: f64,
    /// Oracle (or projection) calls so far, including a block update that
    /// closed in this round.
    pub so_calls_cum: u64,
    /// Step size that produced the current action; zero for the first block.
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSummary {
    pub block: usize,
    /// Action played throughout the block.
    pub action: Vector,
    pub mean_gradient: Vector,
    pub eta: f64,
    pub so_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub rounds: Vec<RoundRecord>,
    pub blocks: Vec<BlockSummary>,
    pub total_so_calls: u64,
}

impl RunLog {
    pub fn ccv(&self) -> f64 {
        self.rounds.iter().map(|r| r.g_plus).sum()
    }

    pub fn final_q(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.q)
    }

    /// `sum_m ||mean gradient of block m||^2`.
    pub fn squared_gradient_sum(&self) -> f64 {
        self.blocks.iter().map(|b| b.mean_gradient.norm_sq()).sum()
    }
}
