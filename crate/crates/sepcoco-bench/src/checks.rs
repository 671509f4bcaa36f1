//! Randomized invariant checks shared by `selftest` and the acceptance tests.

use std::fmt;

use sepcoco_core::adversary::{generate, ConstraintFamily, CostFamily, ScenarioSpec};
use sepcoco_core::bagel::{run_coco, BagelParams, Tuning};
use sepcoco_core::base_ogd::{run_oco, run_oco_with, BlockLearner, OcoParams, StepRule};
use sepcoco_core::evaluation::{
    distance_to_shrunk, feasible_hindsight_optimum, gradient_bound_excess, hindsight_optimum,
    regret_certificate, so_call_budget, surrogate_certificate, ExactGeometry, GRADIENT_SLACK,
};
use sepcoco_core::geometry::{ConvexBody, Geometry};
use sepcoco_core::ipso::{infeasible_project_traced, IpsoConfig};
use sepcoco_core::rng::SplitMix64;
use sepcoco_core::Vector;

use crate::config::GeometrySpec;
use crate::BenchError;

pub const NONEXPANSIVE_TOL: f64 = 1e-9;
pub const NONEXPANSIVE_SAMPLES: usize = 200;
pub const STEP_LENGTH_TOL: f64 = 1e-12;
pub const CALL_BOUND_SLACK: f64 = 1e-9;
pub const ORABONA_TOL: f64 = 1e-9;
pub const TRAJECTORY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Worst observed margin; negative means violated.
    pub worst_margin: f64,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        CheckReport {
            name,
            trials: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            detail: String::new(),
        }
    }

    fn record(&mut self, margin: f64, what: impl FnOnce() -> String) {
        self.trials += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        if margin < 0.0 || margin.is_nan() {
            self.failures += 1;
            if self.detail.is_empty() {
                self.detail = what();
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {}: {} trials, {} failures, worst margin {:e}",
            self.name, self.trials, self.failures, self.worst_margin
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Random ball, box, simplex or polytope, cycling through the kinds by `i`.
pub fn random_geometry(rng: &mut SplitMix64, i: usize) -> Result<Geometry, BenchError> {
    let spec = match i % 4 {
        0 => {
            let dim = 1 + rng.below(5);
            let center = rng.gaussian_vector(dim);
            return Ok(Geometry::ball(center, rng.uniform(0.5, 2.0))?);
        }
        1 => {
            let dim = 1 + rng.below(5);
            let lower = rng.gaussian_vector(dim);
            let upper: Vec<f64> = lower
                .as_slice()
                .iter()
                .map(|l| l + rng.uniform(0.3, 2.0))
                .collect();
            return Ok(Geometry::boxed(lower, Vector::new(upper)?)?);
        }
        2 => GeometrySpec::Simplex {
            dim: 2 + rng.below(4),
        },
        _ => GeometrySpec::Polytope {
            dim: 2 + rng.below(2),
            cuts: 1 + rng.below(4),
            seed: rng.next_u64(),
        },
    };
    Ok(spec.build()?)
}

/// A point of `K`: the anchor pulled toward the projection of a Gaussian.
pub fn random_member(body: &Geometry, rng: &mut SplitMix64) -> Result<Vector, BenchError> {
    let c = body.anchor();
    let mut y = rng.gaussian_vector(body.dim()).scaled(body.diameter());
    y.axpy(1.0, c);
    let p = body.project(&y)?;
    Ok(c.lerp(&p, rng.next_f64()))
}

/// Membership, non-expansiveness toward `K_delta`, exact step length and
/// the call bound, over `trials` random instances.
pub fn ipso_contract(trials: usize, seed: u64) -> Result<Vec<CheckReport>, BenchError> {
    let mut membership = CheckReport::new("ipso membership");
    let mut nonexpansive = CheckReport::new("ipso non-expansiveness");
    let mut steps = CheckReport::new("ipso step length");
    let mut calls = CheckReport::new("ipso call bound");
    let mut rng = SplitMix64::new(seed);
    for i in 0..trials {
        let body = random_geometry(&mut rng, i)?;
        let delta = rng.uniform(0.05, 0.5);
        let cfg = IpsoConfig::for_body(&body, delta)?;
        let spread = [0.3, 1.0, 3.0][rng.below(3)];
        let mut y0 = rng
            .gaussian_vector(body.dim())
            .scaled(spread * body.diameter());
        y0.axpy(1.0, body.anchor());
        let mut trace = Vec::new();
        let out = infeasible_project_traced(&body, &cfg, &y0, &mut trace)?;

        let inside = body.contains(&out.point)?;
        membership.record(if inside { 0.0 } else { -1.0 }, || {
            format!("trial {i}: output outside {}", body.name())
        });

        for _ in 0..NONEXPANSIVE_SAMPLES {
            let x = random_member(&body, &mut rng)?;
            let z = x.lerp(body.anchor(), delta);
            let margin = y0.distance(&z) + NONEXPANSIVE_TOL - out.point.distance(&z);
            nonexpansive.record(margin, || {
                format!("trial {i}: moved away from a shrunk point")
            });
        }

        let step = delta * body.inner_radius();
        for w in trace.windows(2) {
            let margin = STEP_LENGTH_TOL - (w[1].distance(&w[0]) - step).abs();
            steps.record(margin, || {
                format!("trial {i}: step {} vs {step}", w[1].distance(&w[0]))
            });
        }

        let dist = distance_to_shrunk(&body, delta, &trace[0])?;
        let bound = dist * dist / (step * step) + 1.0;
        let margin = bound * (1.0 + CALL_BOUND_SLACK) - out.so_calls as f64;
        calls.record(margin, || {
            format!("trial {i}: {} calls, bound {bound}", out.so_calls)
        });
    }
    Ok(vec![membership, nonexpansive, steps, calls])
}

fn divisors_up_to(n: usize, cap: usize) -> Vec<usize> {
    (1..=cap.min(n)).filter(|k| n.is_multiple_of(*k)).collect()
}

/// Base learner on random scenarios: the realized linearized regret against
/// the hindsight optimum and against the worst linear comparator stays
/// within the block regret bound, and SO calls stay within budget.
pub fn regret_certificates(scenarios: usize, seed: u64) -> Result<Vec<CheckReport>, BenchError> {
    let mut regret = CheckReport::new("regret certificate");
    let mut budget = CheckReport::new("so-call budget");
    let mut rng = SplitMix64::new(seed);
    for i in 0..scenarios {
        let body = random_geometry(&mut rng, i)?;
        let horizon = [64, 128, 256, 512][rng.below(4)];
        let ks = divisors_up_to(horizon, 16);
        let block_len = ks[rng.below(ks.len())];
        let costs = match rng.below(3) {
            0 => CostFamily::DriftingLinear {
                period: rng.uniform(20.0, 200.0),
            },
            1 => CostFamily::NoisyLinear {
                bias: rng.uniform(0.0, 1.0),
                noise: rng.uniform(0.1, 2.0),
            },
            _ => CostFamily::RotatingQuadratic {
                theta: rng.uniform(0.2, 2.0),
                period: rng.uniform(20.0, 200.0),
                orbit: rng.uniform(0.2, 1.0),
            },
        };
        let spec = ScenarioSpec {
            costs,
            constraints: ConstraintFamily::Inactive,
            seed: rng.next_u64(),
            horizon,
            feasible_anchor: body.anchor().clone(),
        };
        let scenario = generate(&spec, &body)?;
        let epsilon = if rng.below(2) == 0 { 0.0 } else { 1.0 };
        let params = OcoParams {
            horizon,
            block_len,
            delta: rng.uniform(0.05, 0.5),
            rule: StepRule::Convex {
                epsilon,
                diameter: body.diameter(),
            },
        };
        let log = run_oco(&body, params, body.anchor().clone(), &scenario.rounds)?;

        let (opt, _) = hindsight_optimum(&body, &scenario.rounds)?;
        let mut fed = Vector::zeros(body.dim());
        for b in &log.blocks {
            fed.axpy(1.0, &b.mean_gradient);
        }
        let worst = if fed.norm() > 0.0 {
            body.linear_minimizer(&fed)?
        } else {
            body.anchor().clone()
        };
        for comparator in [&opt, &worst] {
            let cert = regret_certificate(&body, &params, &log, comparator)?;
            let margin =
                cert.bound + sepcoco_core::evaluation::REGRET_SLACK - cert.linearized_regret;
            regret.record(margin, || {
                format!(
                    "scenario {i}: regret {} > bound {}",
                    cert.linearized_regret, cert.bound
                )
            });
        }
        let allowed = so_call_budget(&body, &params, &log)?;
        budget.record(
            allowed * (1.0 + CALL_BOUND_SLACK) - log.total_so_calls as f64,
            || {
                format!(
                    "scenario {i}: {} calls, budget {allowed}",
                    log.total_so_calls
                )
            },
        );
    }
    Ok(vec![regret, budget])
}

/// `sum_t a_t f(a0 + sum_{i<=t} a_i)` and `int_{a0}^{a0 + sum a} f`.
pub fn orabona_sides(a0: f64, seq: &[f64], inverse: bool) -> (f64, f64) {
    let mut partial = a0;
    let mut lhs = 0.0;
    for &a in seq {
        partial += a;
        let f = if inverse {
            1.0 / partial
        } else {
            1.0 / partial.sqrt()
        };
        lhs += a * f;
    }
    let rhs = if inverse {
        (partial / a0).ln()
    } else {
        2.0 * (partial.sqrt() - a0.sqrt())
    };
    (lhs, rhs)
}

/// The summation lemma on random non-negative sequences, for `1/sqrt(x)`
/// and `1/x`.
pub fn orabona(sequences: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("summation lemma");
    let mut rng = SplitMix64::new(seed);
    for i in 0..sequences {
        let len = 1 + rng.below(64);
        let scale = 10f64.powf(rng.uniform(-3.0, 3.0));
        let seq: Vec<f64> = (0..len)
            .map(|_| {
                if rng.below(5) == 0 {
                    0.0
                } else {
                    scale * rng.next_f64()
                }
            })
            .collect();
        let a0 = 10f64.powf(rng.uniform(-4.0, 1.0));
        for inverse in [false, true] {
            let (lhs, rhs) = orabona_sides(a0, &seq, inverse);
            report.record(rhs + ORABONA_TOL - lhs, || {
                format!("sequence {i}: {lhs} > {rhs}")
            });
        }
    }
    report
}

/// Surrogate decomposition and gradient bound on random constrained runs.
pub fn surrogate_certificates(runs: usize, seed: u64) -> Result<Vec<CheckReport>, BenchError> {
    let mut surrogate = CheckReport::new("surrogate certificate");
    let mut gradient = CheckReport::new("surrogate gradient bound");
    let mut rng = SplitMix64::new(seed);
    for i in 0..runs {
        let body = random_geometry(&mut rng, i)?;
        let horizon = [256, 512, 1024][rng.below(3)];
        let dir = rng.unit_vector(body.dim());
        let anchor = body.linear_minimizer(&dir)?;
        let spec = ScenarioSpec {
            costs: CostFamily::NoisyLinear {
                bias: rng.uniform(0.0, 1.0),
                noise: rng.uniform(0.2, 1.5),
            },
            constraints: ConstraintFamily::SwitchingHalfspaces {
                pool: 1 + rng.below(5),
                spread: rng.uniform(0.0, 0.5),
                per_round: 1,
            },
            seed: rng.next_u64(),
            horizon,
            feasible_anchor: anchor.clone(),
        };
        let scenario = generate(&spec, &body)?;
        let beta = [0.25, 0.5][rng.below(2)];
        let params = BagelParams::convex(
            horizon,
            beta,
            scenario.declared_m1,
            body.diameter(),
            Tuning::default(),
        )?;
        let log = run_coco(&body, params, body.anchor().clone(), &scenario.rounds)?;
        let (x_star, _) = feasible_hindsight_optimum(&body, &scenario.rounds, &anchor)?;
        let cert = surrogate_certificate(&params, &scenario.rounds, &log, &x_star)?;
        surrogate.record(
            cert.gap() + sepcoco_core::evaluation::SURROGATE_SLACK,
            || format!("run {i}: gap {}", cert.gap()),
        );
        let excess = gradient_bound_excess(&params, &scenario.rounds, &log)?;
        gradient.record(GRADIENT_SLACK - excess, || {
            format!("run {i}: gradient exceeds bound by {excess}")
        });
    }
    Ok(vec![surrogate, gradient])
}

/// With constraints that never bind, the surrogate learner's actions equal
/// the base learner's on `V gamma f_t`.
pub fn zero_violation(runs: usize, seed: u64) -> Result<CheckReport, BenchError> {
    let mut report = CheckReport::new("zero-violation reduction");
    let mut rng = SplitMix64::new(seed);
    for i in 0..runs {
        let body = random_geometry(&mut rng, i)?;
        let horizon = [256, 1024][rng.below(2)];
        let spec = ScenarioSpec {
            costs: CostFamily::NoisyLinear {
                bias: 0.5,
                noise: 1.0,
            },
            constraints: ConstraintFamily::Inactive,
            seed: rng.next_u64(),
            horizon,
            feasible_anchor: body.anchor().clone(),
        };
        let scenario = generate(&spec, &body)?;
        let params = BagelParams::convex(
            horizon,
            0.5,
            scenario.declared_m1,
            body.diameter(),
            Tuning::default(),
        )?;
        let x1 = body.anchor().clone();
        let coco = run_coco(&body, params, x1.clone(), &scenario.rounds)?;
        let scale = params.v_weight * params.gamma;
        let learner = BlockLearner::new(&body, params.oco_params(), x1)?;
        let oco = run_oco_with(learner, &scenario.rounds, |_, r, x| {
            Ok(r.grad_f(x).scaled(scale))
        })?;
        let diff = coco
            .rounds
            .iter()
            .zip(&oco.rounds)
            .map(|(a, b)| a.action.max_abs_diff(&b.action))
            .fold(0.0, f64::max);
        let zero_q = coco.final_q() == 0.0;
        report.record(if zero_q { TRAJECTORY_TOL - diff } else { -1.0 }, || {
            format!(
                "run {i}: max coordinate gap {diff}, final Q {}",
                coco.final_q()
            )
        });
    }
    Ok(report)
}

/// Every selftest check with its default sizes.
pub fn selftest(seed: u64) -> Result<Vec<CheckReport>, BenchError> {
    let mut out = ipso_contract(1000, seed)?;
    out.extend(regret_certificates(50, seed.wrapping_add(1))?);
    out.push(orabona(10_000, seed.wrapping_add(2)));
    out.extend(surrogate_certificates(20, seed.wrapping_add(3))?);
    out.push(zero_violation(10, seed.wrapping_add(4))?);
    Ok(out)
}
