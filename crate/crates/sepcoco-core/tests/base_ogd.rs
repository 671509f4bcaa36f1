mod common;

use common::*;
use proptest::prelude::*;
use sepcoco_core::adversary::{
    generate, ConstraintFamily, CostFamily, CostFn, RoundOracle, ScenarioSpec,
};
use sepcoco_core::base_ogd::{run_oco, BlockLearner, OcoParams, StepRule};
use sepcoco_core::evaluation::{
    fit_scaling, hindsight_optimum, regret_certificate, so_call_budget, Metric,
};
use sepcoco_core::geometry::{ConvexBody, Geometry};
use sepcoco_core::rng::SplitMix64;
use sepcoco_core::{Error, Vector};

fn convex(diameter: f64) -> StepRule {
    StepRule::convex(diameter)
}

fn params(horizon: usize, block_len: usize, delta: f64, rule: StepRule) -> OcoParams {
    OcoParams {
        horizon,
        block_len,
        delta,
        rule,
    }
}

fn scenario(
    body: &Geometry,
    costs: CostFamily,
    horizon: usize,
    seed: u64,
) -> sepcoco_core::adversary::Scenario {
    let spec = ScenarioSpec {
        costs,
        constraints: ConstraintFamily::Inactive,
        seed,
        horizon,
        feasible_anchor: body.anchor().clone(),
    };
    generate(&spec, body).unwrap()
}

fn noisy() -> CostFamily {
    CostFamily::NoisyLinear {
        bias: 0.5,
        noise: 1.0,
    }
}

fn regret(body: &Geometry, rounds: &[RoundOracle], actions: impl Iterator<Item = f64>) -> f64 {
    let (_, best) = hindsight_optimum(body, rounds).unwrap();
    actions.sum::<f64>() - best
}

#[test]
fn new_learner_examples() {
    let body = Geometry::unit_ball(2).unwrap();
    let c = body.anchor().clone();
    let l = BlockLearner::new(&body, params(8, 2, 0.1, convex(2.0)), c.clone()).unwrap();
    assert_eq!((l.block(), l.action(), l.params().blocks()), (1, &c, 4));
    let l = BlockLearner::new(&body, params(5, 1, 0.1, convex(2.0)), c.clone()).unwrap();
    assert_eq!(l.params().blocks(), 5);
    assert!(matches!(
        BlockLearner::new(&body, params(10, 3, 0.1, convex(2.0)), c.clone()),
        Err(Error::InvalidConfig(_))
    ));
    for delta in [0.0, 1.0, -0.2] {
        assert!(matches!(
            BlockLearner::new(&body, params(8, 2, delta, convex(2.0)), c.clone()),
            Err(Error::InvalidConfig(_))
        ));
    }
    assert!(BlockLearner::new(&body, params(0, 1, 0.1, convex(2.0)), c.clone()).is_err());
    assert!(BlockLearner::new(&body, params(8, 0, 0.1, convex(2.0)), c).is_err());
}

#[test]
fn feed_gradient_examples() {
    let body = Geometry::unit_ball(2).unwrap();
    let mut l = BlockLearner::new(&body, params(8, 2, 0.1, convex(2.0)), Vector::zeros(2)).unwrap();
    l.feed_gradient(&v(&[1.0, 0.0])).unwrap();
    l.feed_gradient(&v(&[0.0, 1.0])).unwrap();
    assert_eq!(l.grad_sum(), &v(&[1.0, 1.0]));
    assert_eq!(l.action(), &Vector::zeros(2));
    assert_eq!(
        l.feed_gradient(&v(&[1.0, 1.0])),
        Err(Error::BlockOverflow { block_len: 2 })
    );
    let s = l.end_block().unwrap();
    assert_eq!(s.mean_gradient, v(&[0.5, 0.5]));
}

#[test]
fn zero_gradients_leave_action_fixed() {
    let body = Geometry::cube(3, -1.0, 1.0).unwrap();
    let x1 = v(&[0.9, -0.95, 0.3]);
    let mut l = BlockLearner::new(
        &body,
        params(9, 3, 0.2, convex(body.diameter())),
        x1.clone(),
    )
    .unwrap();
    for _ in 0..3 {
        for _ in 0..3 {
            l.feed_gradient(&Vector::zeros(3)).unwrap();
        }
        let s = l.end_block().unwrap();
        assert_eq!(s.so_calls, 1);
        assert_eq!(l.action(), &x1);
    }
}

#[test]
fn step_size_examples() {
    let rule = StepRule::Convex {
        epsilon: 1.0,
        diameter: 2.0,
    };
    assert_eq!(rule.step_size(1, 3.0), 1.0);
    assert_eq!(
        StepRule::StronglyConvex { theta: 0.5 }.step_size(4, 0.0),
        0.5
    );

    // First block with ||mean||^2 = 3 through the learner.
    let body = Geometry::unit_ball(2).unwrap();
    let mut l = BlockLearner::new(&body, params(2, 1, 0.1, rule), Vector::zeros(2)).unwrap();
    l.feed_gradient(&v(&[3f64.sqrt(), 0.0])).unwrap();
    assert!((l.end_block().unwrap().eta - 1.0).abs() < 1e-15);
}

#[test]
fn interior_update_example() {
    // eta = 2 / sqrt(1 + g^2) with g = 1/sqrt(15) gives eta * g = 0.5.
    let body = Geometry::unit_ball(2).unwrap();
    let g = 1.0 / 15f64.sqrt();
    let mut l = BlockLearner::new(&body, params(2, 1, 0.1, convex(2.0)), Vector::zeros(2)).unwrap();
    l.feed_gradient(&v(&[g, 0.0])).unwrap();
    let s = l.end_block().unwrap();
    assert!((s.eta * g - 0.5).abs() < 1e-15);
    assert!(l.action().max_abs_diff(&v(&[-0.5, 0.0])) < 1e-15);
    assert_eq!(s.so_calls, 1);
}

#[test]
fn horizon_must_match_rounds() {
    let body = Geometry::unit_ball(2).unwrap();
    let sc = scenario(&body, noisy(), 10, 1);
    assert!(run_oco(
        &body,
        params(8, 2, 0.1, convex(2.0)),
        Vector::zeros(2),
        &sc.rounds
    )
    .is_err());
}

#[test]
fn constant_loss_converges_to_boundary() {
    let body = Geometry::unit_ball(2).unwrap();
    let g = v(&[0.6, -0.8]);
    let mut per_round = Vec::new();
    for horizon in [64usize, 256, 1024, 4096] {
        let rounds: Vec<RoundOracle> = (0..horizon)
            .map(|_| RoundOracle {
                cost: CostFn::Linear { u: g.clone() },
                constraint: sepcoco_core::adversary::ConstraintFn::Halfspace(
                    sepcoco_core::geometry::Halfspace {
                        normal: v(&[1.0, 0.0]),
                        offset: 5.0,
                    },
                ),
                declared_m1: 1.0,
                declared_theta: 0.0,
            })
            .collect();
        let delta = 1.0 / (horizon as f64).sqrt();
        let log = run_oco(
            &body,
            params(horizon, 1, delta, convex(2.0)),
            Vector::zeros(2),
            &rounds,
        )
        .unwrap();
        // Hindsight optimum of <g, x> over the unit ball is -g / ||g||, value -T.
        let (x_star, best) = hindsight_optimum(&body, &rounds).unwrap();
        assert!(x_star.max_abs_diff(&g.scaled(-1.0)) < 1e-12);
        assert!((best + horizon as f64).abs() < 1e-9);
        let r = regret(&body, &rounds, log.rounds.iter().map(|r| r.f_value));
        per_round.push(r / horizon as f64);
        let last = &log.rounds.last().unwrap().action;
        // IP-SO stops within one step (delta r) of the boundary.
        assert!(
            last.dot(&g.scaled(-1.0)) >= 1.0 - 2.0 * delta,
            "T={horizon}: {last:?}"
        );
    }
    assert!(per_round.windows(2).all(|w| w[1] < w[0]), "{per_round:?}");
}

#[test]
fn regret_slope_for_unblocked_learner() {
    let body = Geometry::unit_ball(2).unwrap();
    let mut samples = Vec::new();
    for horizon in [1024usize, 4096, 16384] {
        let delta = 1.0 / (horizon as f64).sqrt();
        let regrets = (1..=5)
            .map(|seed| {
                let sc = scenario(&body, noisy(), horizon, seed);
                let log = run_oco(
                    &body,
                    params(horizon, 1, delta, convex(2.0)),
                    Vector::zeros(2),
                    &sc.rounds,
                )
                .unwrap();
                regret(&body, &sc.rounds, log.rounds.iter().map(|r| r.f_value))
            })
            .collect();
        samples.push((horizon, regrets));
    }
    let fit = fit_scaling(&samples, Metric::Regret).unwrap();
    assert!(fit.slope <= 0.6, "slope {}", fit.slope);
}

#[test]
fn zero_floor_costs_more_calls() {
    let body = Geometry::unit_ball(2).unwrap();
    let mut ratios = Vec::new();
    for horizon in [1024usize, 4096] {
        let delta = 1.0 / (horizon as f64).sqrt();
        let mut calls = [0u64; 2];
        for seed in 1..=3 {
            let sc = scenario(
                &body,
                CostFamily::VanishingWarmup {
                    scale: 10.0,
                    peak: 1e-3,
                },
                horizon,
                seed,
            );
            let start = sc.suggested_start.clone().unwrap();
            for (i, epsilon) in [0.0, 1.0].into_iter().enumerate() {
                let rule = StepRule::Convex {
                    epsilon,
                    diameter: 2.0,
                };
                let log = run_oco(
                    &body,
                    params(horizon, 1, delta, rule),
                    start.clone(),
                    &sc.rounds,
                )
                .unwrap();
                calls[i] += log.total_so_calls;
            }
        }
        ratios.push(calls[0] as f64 / calls[1] as f64);
    }
    assert!(ratios[0] > 1.0 && ratios[1] > ratios[0], "{ratios:?}");
}

#[test]
fn certificates_on_random_runs() {
    let mut rng = SplitMix64::new(31);
    for i in 0..24 {
        let body = random_geometry(&mut rng, i, 4);
        let horizon = 256;
        let block_len = [1, 2, 4, 8][rng.below(4)];
        let delta = rng.uniform(0.02, 0.5);
        let costs = if i % 3 == 0 {
            CostFamily::DriftingLinear {
                period: rng.uniform(20.0, 400.0),
            }
        } else {
            CostFamily::NoisyLinear {
                bias: rng.uniform(0.0, 1.0),
                noise: rng.uniform(0.1, 1.0),
            }
        };
        let sc = scenario(&body, costs, horizon, rng.next_u64());
        let p = params(horizon, block_len, delta, convex(body.diameter()));
        let log = run_oco(&body, p, body.anchor().clone(), &sc.rounds).unwrap();

        for r in &log.rounds {
            assert!(body.contains(&r.action).unwrap());
        }
        assert!(log.blocks.windows(2).all(|w| w[1].eta <= w[0].eta));

        let (x_star, _) = hindsight_optimum(&body, &sc.rounds).unwrap();
        let cert = regret_certificate(&body, &p, &log, &x_star).unwrap();
        assert!(cert.holds(), "run {i}: {cert:?}");
        let budget = so_call_budget(&body, &p, &log).unwrap();
        assert!(
            log.total_so_calls as f64 <= budget + 1e-9,
            "run {i}: {} > {budget}",
            log.total_so_calls
        );
    }
}

#[test]
fn strongly_convex_steps_follow_block_index() {
    let body = Geometry::unit_ball(2).unwrap();
    let theta = 0.7;
    let sc = scenario(
        &body,
        CostFamily::RotatingQuadratic {
            theta,
            period: 50.0,
            orbit: 0.8,
        },
        120,
        9,
    );
    let p = params(120, 4, 0.1, StepRule::StronglyConvex { theta });
    let log = run_oco(&body, p, Vector::zeros(2), &sc.rounds).unwrap();
    for b in &log.blocks {
        assert!((b.eta - 1.0 / (b.block as f64 * theta)).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn step_sizes_match_closed_form_and_summation_bound(
        seed in any::<u64>(),
        epsilon in 0.01f64..2.0,
        blocks in 1usize..40,
        block_len in 1usize..4,
    ) {
        let mut rng = SplitMix64::new(seed);
        let body = random_geometry(&mut rng, seed as usize, 3);
        let diameter = body.diameter();
        let rule = StepRule::Convex { epsilon, diameter };
        let p = params(blocks * block_len, block_len, 0.3, rule);
        let mut l = BlockLearner::new(&body, p, body.anchor().clone()).unwrap();
        let mut partial = epsilon;
        let mut weighted = 0.0;
        let mut prev_eta = f64::INFINITY;
        for _ in 0..blocks {
            let mut sum = Vector::zeros(body.dim());
            for _ in 0..block_len {
                let g = rng.gaussian_vector(body.dim()).scaled(rng.uniform(0.0, 3.0));
                sum.axpy(1.0, &g);
                l.feed_gradient(&g).unwrap();
            }
            let a = sum.scaled(1.0 / block_len as f64).norm_sq();
            partial += a;
            let s = l.end_block().unwrap();
            let expected = diameter / partial.sqrt();
            prop_assert!((s.eta - expected).abs() <= 1e-12 * expected);
            prop_assert!(s.eta <= prev_eta);
            prev_eta = s.eta;
            weighted += a * s.eta / diameter;
            prop_assert!(body.contains(l.action()).unwrap());
        }
        prop_assert!((l.cumulative_sq_grad() - (partial - epsilon)).abs() <= 1e-9 * partial);
        prop_assert!(weighted <= 2.0 * (partial.sqrt() - epsilon.sqrt()) + 1e-9);
    }
}
