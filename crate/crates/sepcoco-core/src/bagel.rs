//! Lyapunov-surrogate learner for online optimization with adversarial
//! constraints.
//!
//! Each round the learner plays the inner block learner's action `x`,
//! observes `f_t(x)` and `g_t(x)`, adds `gamma * max(g_t(x), 0)` to the
//! violation accumulator `Q`, and feeds the inner learner the gradient of
//! the surrogate
//!
//! ```text
//! V * gamma * f_t  +  Phi'(Q) * gamma * max(g_t, 0)
//! ```
//!
//! with `Phi'` evaluated at the updated `Q`. At `g_t(x) = 0` the subgradient
//! of the positive part is taken to be zero.
//!
//! Two presets fix the constants from the horizon `T` and trade-off
//! exponent `beta`:
//!
//! | preset          | gamma      | V                               | Phi          | delta                    | K (before divisor repair) |
//! |-----------------|------------|---------------------------------|--------------|--------------------------|---------------------------|
//! | convex          | 1/(M1·D)   | 1                               | e^{λq} − 1   | c_δ·T^{−β}               | max(1, round(c_K·T^{1−2β})) |
//! | strongly convex | 1          | 8·M1²·K·ln(T·e/K)/θ             | q²           | c_δ·T^{−β}·ln T          | max(1, round(c_K·T^{1−β}))  |
//!
//! with `λ = 1/(2δT + 3√(2TK))`. `K` is then lowered to the largest divisor
//! of `T` not exceeding it. In strongly convex mode the surrogate is
//! `V·γ·θ`-strongly convex, and the inner learner uses that modulus.

use alloc::format;
use alloc::vec::Vec;

use crate::adversary::RoundOracle;
use crate::base_ogd::{BlockLearner, BlockProjector, IpsoProjector, OcoParams, StepRule};
use crate::geometry::ConvexBody;
use crate::record::{RoundRecord, RunLog};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LyapunovPhi {
    /// `Phi(q) = exp(lambda q) - 1`
    Exponential { lambda: f64 },
    /// `Phi(q) = q^2`
    Square,
}

impl LyapunovPhi {
    pub fn value(&self, q: f64) -> Result<f64> {
        let v = match *self {
            LyapunovPhi::Exponential { lambda } => libm::expm1(lambda * q),
            LyapunovPhi::Square => q * q,
        };
        finite(v, q)
    }

    pub fn derivative(&self, q: f64) -> Result<f64> {
        let v = match *self {
            LyapunovPhi::Exponential { lambda } => lambda * libm::exp(lambda * q),
            LyapunovPhi::Square => 2.0 * q,
        };
        finite(v, q)
    }
}

fn finite(v: f64, q: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericOverflow(format!(
            "potential overflows at Q = {q:e}"
        )))
    }
}

/// `1 / (2 delta T + 3 sqrt(2 T K))`.
pub fn lambda_for(horizon: usize, block_len: usize, delta: f64) -> f64 {
    let t = horizon as f64;
    let k = block_len as f64;
    1.0 / (2.0 * delta * t + 3.0 * libm::sqrt(2.0 * t * k))
}

/// Largest divisor of `n` that is at most `k` (and at least 1).
pub fn largest_divisor_at_most(n: usize, k: usize) -> usize {
    let mut k = k.clamp(1, n.max(1));
    while !n.is_multiple_of(k) {
        k -= 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Convex,
    StronglyConvex,
}

/// Free constants of the presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    pub c_delta: f64,
    pub c_k: f64,
    /// Floor constant of the convex step rule.
    pub epsilon: f64,
}

impl Default for Tuning {
    fn default() -> Self {
        Tuning {
            c_delta: 1.0,
            c_k: 1.0,
            epsilon: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BagelParams {
    pub mode: Mode,
    pub horizon: usize,
    pub beta: f64,
    pub gamma: f64,
    pub v_weight: f64,
    pub phi: LyapunovPhi,
    pub delta: f64,
    pub block_len: usize,
    /// Block length before the divisor repair.
    pub requested_block_len: usize,
    /// Rule handed to the inner learner.
    pub step_rule: StepRule,
    pub m1: f64,
    /// Strong-convexity modulus of the costs (zero in convex mode).
    pub theta: f64,
}

impl BagelParams {
    pub fn convex(
        horizon: usize,
        beta: f64,
        m1: f64,
        diameter: f64,
        tuning: Tuning,
    ) -> Result<Self> {
        check_common(horizon, m1, tuning)?;
        if !(beta > 0.0 && beta <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "convex mode needs beta in (0, 1/2], got {beta}"
            )));
        }
        if !(diameter > 0.0 && diameter.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "diameter {diameter} must be positive"
            )));
        }
        let t = horizon as f64;
        let delta = tuning.c_delta * libm::pow(t, -beta);
        check_preset_delta(delta)?;
        let requested = round_block(tuning.c_k * libm::pow(t, 1.0 - 2.0 * beta));
        let block_len = largest_divisor_at_most(horizon, requested);
        Ok(BagelParams {
            mode: Mode::Convex,
            horizon,
            beta,
            gamma: 1.0 / (m1 * diameter),
            v_weight: 1.0,
            phi: LyapunovPhi::Exponential {
                lambda: lambda_for(horizon, block_len, delta),
            },
            delta,
            block_len,
            requested_block_len: requested,
            step_rule: StepRule::Convex {
                epsilon: tuning.epsilon,
                diameter,
            },
            m1,
            theta: 0.0,
        })
    }

    pub fn strongly_convex(
        horizon: usize,
        beta: f64,
        m1: f64,
        theta: f64,
        tuning: Tuning,
    ) -> Result<Self> {
        check_common(horizon, m1, tuning)?;
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "strongly convex mode needs beta in (0, 1], got {beta}"
            )));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "theta {theta} must be positive"
            )));
        }
        let t = horizon as f64;
        let delta = tuning.c_delta * libm::pow(t, -beta) * libm::log(t);
        check_preset_delta(delta)?;
        let requested = round_block(tuning.c_k * libm::pow(t, 1.0 - beta));
        let block_len = largest_divisor_at_most(horizon, requested);
        let k = block_len as f64;
        let gamma = 1.0;
        let v_weight = 8.0 * m1 * m1 * k * libm::log(t * core::f64::consts::E / k) / theta;
        Ok(BagelParams {
            mode: Mode::StronglyConvex,
            horizon,
            beta,
            gamma,
            v_weight,
            phi: LyapunovPhi::Square,
            delta,
            block_len,
            requested_block_len: requested,
            step_rule: StepRule::StronglyConvex {
                theta: v_weight * gamma * theta,
            },
            m1,
            theta,
        })
    }

    pub fn oco_params(&self) -> OcoParams {
        OcoParams {
            horizon: self.horizon,
            block_len: self.block_len,
            delta: self.delta,
            rule: self.step_rule,
        }
    }
}

fn check_common(horizon: usize, m1: f64, tuning: Tuning) -> Result<()> {
    if horizon < 2 {
        return Err(Error::InvalidConfig(format!(
            "horizon {horizon} must be >= 2"
        )));
    }
    if !(m1 > 0.0 && m1.is_finite()) {
        return Err(Error::InvalidConfig(format!("M1 {m1} must be positive")));
    }
    if !(tuning.c_delta > 0.0 && tuning.c_k > 0.0 && tuning.epsilon >= 0.0) {
        return Err(Error::InvalidConfig(
            "c_delta, c_k must be > 0 and epsilon >= 0".into(),
        ));
    }
    Ok(())
}

fn check_preset_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "preset yields delta {delta} outside (0, 1)"
        )))
    }
}

fn round_block(x: f64) -> usize {
    let r = libm::round(x);
    if r < 1.0 {
        1
    } else {
        r as usize
    }
}

/// `V gamma grad_f + Phi'(q) gamma grad_g`, the second term only when
/// `g_value > 0`.
pub fn surrogate_gradient(
    params: &BagelParams,
    q: f64,
    grad_f: &Vector,
    g_value: f64,
    grad_g: &Vector,
) -> Result<Vector> {
    let mut out = grad_f.scaled(params.v_weight * params.gamma);
    if g_value > 0.0 {
        let weight = params.phi.derivative(q)?;
        out.axpy(weight * params.gamma, grad_g);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ViolationState {
    /// Scaled accumulator, `gamma * raw_ccv`.
    pub q: f64,
    pub raw_ccv: f64,
}

impl ViolationState {
    pub fn observe(&mut self, gamma: f64, g_value: f64) -> f64 {
        let plus = g_value.max(0.0);
        self.q += gamma * plus;
        self.raw_ccv += plus;
        plus
    }
}

pub struct BagelRunner<P> {
    params: BagelParams,
    learner: BlockLearner<P>,
    violation: ViolationState,
    log: RunLog,
}

impl<'a, B: ConvexBody + ?Sized> BagelRunner<IpsoProjector<'a, B>> {
    pub fn new(body: &'a B, params: BagelParams, x1: Vector) -> Result<Self> {
        let learner = BlockLearner::new(body, params.oco_params(), x1)?;
        Ok(Self::from_learner(params, learner))
    }
}

impl<P: BlockProjector> BagelRunner<P> {
    pub fn from_learner(params: BagelParams, learner: BlockLearner<P>) -> Self {
        BagelRunner {
            log: RunLog {
                rounds: Vec::with_capacity(params.horizon),
                blocks: Vec::with_capacity(params.horizon / params.block_len.max(1)),
                total_so_calls: 0,
            },
            params,
            learner,
            violation: ViolationState::default(),
        }
    }

    pub fn params(&self) -> &BagelParams {
        &self.params
    }

    pub fn violation(&self) -> ViolationState {
        self.violation
    }

    pub fn action(&self) -> &Vector {
        self.learner.action()
    }

    pub fn step_round(&mut self, round: &RoundOracle) -> Result<&RoundRecord> {
        let t = self.log.rounds.len() + 1;
        if t > self.params.horizon {
            return Err(Error::InvalidConfig(format!(
                "round {t} beyond horizon {}",
                self.params.horizon
            )));
        }
        let x = self.learner.action().clone();
        let f_value = round.eval_f(&x);
        let g_value = round.eval_g(&x);
        let g_plus = self.violation.observe(self.params.gamma, g_value);
        let grad_g = if g_value > 0.0 {
            round.grad_g(&x)
        } else {
            Vector::zeros(x.dim())
        };
        let grad = surrogate_gradient(
            &self.params,
            self.violation.q,
            &round.grad_f(&x),
            g_value,
            &grad_g,
        )?;
        self.learner.feed_gradient(&grad)?;
        let block = self.learner.block();
        let eta = self.learner.eta();
        if self.learner.block_full() {
            self.log.blocks.push(self.learner.end_block()?);
        }
        self.log.total_so_calls = self.learner.total_so_calls();
        self.log.rounds.push(RoundRecord {
            t,
            block,
            action: x,
            f_value,
            g_plus,
            q: self.violation.q,
            so_calls_cum: self.learner.total_so_calls(),
            eta,
        });
        Ok(self.log.rounds.last().expect("just pushed"))
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }
}

/// Runs the surrogate learner over all rounds.
pub fn run_coco<B: ConvexBody + ?Sized>(
    body: &B,
    params: BagelParams,
    x1: Vector,
    rounds: &[RoundOracle],
) -> Result<RunLog> {
    run_with(BagelRunner::new(body, params, x1)?, rounds)
}

pub fn run_with<P: BlockProjector>(
    mut runner: BagelRunner<P>,
    rounds: &[RoundOracle],
) -> Result<RunLog> {
    if rounds.len() != runner.params.horizon {
        return Err(Error::InvalidConfig(format!(
            "adversary supplies {} rounds for horizon {}",
            rounds.len(),
            runner.params.horizon
        )));
    }
    for r in rounds {
        runner.step_round(r)?;
    }
    Ok(runner.into_log())
}
