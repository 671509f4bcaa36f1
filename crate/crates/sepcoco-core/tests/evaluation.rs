mod common;

use common::*;
use sepcoco_core::adversary::{
    generate, ConstraintFamily, ConstraintFn, CostFamily, CostFn, RoundOracle, ScenarioSpec,
};
use sepcoco_core::bagel::{run_coco, BagelParams, Tuning};
use sepcoco_core::base_ogd::{BlockProjector, OcoParams, StepRule};
use sepcoco_core::evaluation::{
    evaluate, feasible_hindsight_optimum, fit_log_log, fit_scaling, hindsight_optimum,
    projection_baseline_oco, projection_baseline_run, total_cost, ExactGeometry, ExactProjector,
    Metric, RunParams,
};
use sepcoco_core::geometry::{ConvexBody, Geometry, Halfspace};
use sepcoco_core::rng::SplitMix64;
use sepcoco_core::{Error, Vector};

fn round(cost: CostFn, constraint: ConstraintFn) -> RoundOracle {
    RoundOracle {
        cost,
        constraint,
        declared_m1: 1.0,
        declared_theta: 0.0,
    }
}

fn never() -> ConstraintFn {
    ConstraintFn::Halfspace(Halfspace {
        normal: v(&[1.0, 0.0]),
        offset: 100.0,
    })
}

/// Minimizes `objective` over the points of `[lo, hi]^2` accepted by
/// `admissible`: a 101 x 101 grid, then 30 rounds of zooming in by half.
fn grid_search(
    lo: [f64; 2],
    hi: [f64; 2],
    admissible: impl Fn(&Vector) -> bool,
    objective: impl Fn(&Vector) -> f64,
) -> f64 {
    let n = 100;
    let mut center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let mut half = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])];
    let mut best = f64::INFINITY;
    for _ in 0..30 {
        let mut arg = center;
        for i in 0..=n {
            for j in 0..=n {
                let x = [
                    center[0] - half[0] + 2.0 * half[0] * i as f64 / n as f64,
                    center[1] - half[1] + 2.0 * half[1] * j as f64 / n as f64,
                ];
                let p = v(&x);
                let in_window = (0..2).all(|k| x[k] >= lo[k] && x[k] <= hi[k]);
                if in_window && admissible(&p) {
                    let val = objective(&p);
                    if val < best {
                        best = val;
                        arg = x;
                    }
                }
            }
        }
        center = arg;
        half = [half[0] * 0.5, half[1] * 0.5];
    }
    best
}

#[test]
fn hindsight_examples() {
    let body = Geometry::cube(2, 0.0, 1.0).unwrap();
    let z = v(&[0.3, 0.8]);
    let rounds: Vec<_> = (0..10)
        .map(|_| {
            round(
                CostFn::Quadratic {
                    theta: 2.0,
                    target: z.clone(),
                },
                never(),
            )
        })
        .collect();
    let (x, value) = hindsight_optimum(&body, &rounds).unwrap();
    assert!(x.max_abs_diff(&z) < 1e-15);
    assert!(value.abs() < 1e-15);

    // Ball of diameter D = 3 around c: optimum c - (D/2) g / ||g||.
    let c = v(&[1.0, -1.0]);
    let body = ball(&[1.0, -1.0], 1.5);
    let g = v(&[2.0, 1.0]);
    let rounds: Vec<_> = (0..5)
        .map(|_| round(CostFn::Linear { u: g.clone() }, never()))
        .collect();
    let (x, _) = hindsight_optimum(&body, &rounds).unwrap();
    let mut expected = c.clone();
    expected.axpy(-1.5 / g.norm(), &g);
    assert!(x.max_abs_diff(&expected) < 1e-12);

    assert!(hindsight_optimum(&body, &[]).is_err());
}

#[test]
fn hindsight_matches_grid_on_mixed_quadratics() {
    let mut rng = SplitMix64::new(41);
    for _ in 0..5 {
        let lo = [rng.uniform(-1.0, 0.0), rng.uniform(-1.0, 0.0)];
        let hi = [lo[0] + rng.uniform(0.5, 2.0), lo[1] + rng.uniform(0.5, 2.0)];
        let body = Geometry::boxed(v(&lo), v(&hi)).unwrap();
        let rounds: Vec<_> = (0..20)
            .map(|i| {
                let cost = if i % 3 == 0 {
                    CostFn::Linear {
                        u: rng.gaussian_vector(2),
                    }
                } else {
                    CostFn::Quadratic {
                        theta: rng.uniform(0.1, 2.0),
                        target: rng.gaussian_vector(2).scaled(2.0),
                    }
                };
                round(cost, never())
            })
            .collect();
        let (_, value) = hindsight_optimum(&body, &rounds).unwrap();
        let grid = grid_search(lo, hi, |_| true, |x| total_cost(&rounds, x));
        assert!((value - grid).abs() <= 1e-5, "{value} vs grid {grid}");
        assert!(value <= grid + 1e-9);
    }
}

#[test]
fn feasible_optimum_on_a_permanent_halfspace() {
    // Unit ball, cost <(1, 0.3), x>, constraint x_1 >= -0.5.
    let body = Geometry::unit_ball(2).unwrap();
    let u = v(&[1.0, 0.3]);
    let cut = ConstraintFn::Halfspace(Halfspace {
        normal: v(&[-1.0, 0.0]),
        offset: 0.5,
    });
    let rounds: Vec<_> = (0..8)
        .map(|_| round(CostFn::Linear { u: u.clone() }, cut.clone()))
        .collect();
    let anchor = Vector::zeros(2);
    let (x, value) = feasible_hindsight_optimum(&body, &rounds, &anchor).unwrap();
    assert!((x[0] + 0.5).abs() < 1e-6, "{x:?}");
    assert!(rounds.iter().all(|r| r.eval_g(&x) <= 1e-12));
    let grid = grid_search(
        [-1.0, -1.0],
        [1.0, 1.0],
        |p| inside_by_definition(&body, p, 0.0) && rounds[0].eval_g(p) <= 0.0,
        |p| total_cost(&rounds, p),
    );
    assert!((value - grid).abs() <= 1e-5, "{value} vs grid {grid}");
    let closed_form = 8.0 * (-0.5 - 0.3 * 0.75f64.sqrt());
    assert!((value - closed_form).abs() <= 1e-5);

    let (_, free) = hindsight_optimum(&body, &rounds).unwrap();
    assert!(value >= free);
}

#[test]
fn feasible_optimum_special_cases() {
    let body = Geometry::unit_ball(2).unwrap();
    // Constraints far from the unconstrained optimum.
    let rounds: Vec<_> = (0..6)
        .map(|_| {
            round(
                CostFn::Quadratic {
                    theta: 1.0,
                    target: v(&[0.2, -0.1]),
                },
                ConstraintFn::Halfspace(Halfspace {
                    normal: v(&[1.0, 0.0]),
                    offset: 0.8,
                }),
            )
        })
        .collect();
    let (a, va) = feasible_hindsight_optimum(&body, &rounds, &Vector::zeros(2)).unwrap();
    let (b, vb) = hindsight_optimum(&body, &rounds).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-9 && (va - vb).abs() < 1e-9);

    // Costs minimized at the anchor.
    let anchor = v(&[0.3, 0.4]);
    let rounds: Vec<_> = (0..6)
        .map(|_| {
            round(
                CostFn::Quadratic {
                    theta: 1.0,
                    target: anchor.clone(),
                },
                ConstraintFn::Halfspace(Halfspace {
                    normal: v(&[0.6, 0.8]),
                    offset: 0.5,
                }),
            )
        })
        .collect();
    let (x, value) = feasible_hindsight_optimum(&body, &rounds, &anchor).unwrap();
    assert!(x.max_abs_diff(&anchor) < 1e-12 && value.abs() < 1e-20);

    // The constraint x_1 <= -2 misses the ball entirely.
    let bad = v(&[0.9, 0.0]);
    let rounds = vec![round(
        CostFn::Linear { u: v(&[1.0, 0.0]) },
        ConstraintFn::Halfspace(Halfspace {
            normal: v(&[1.0, 0.0]),
            offset: -2.0,
        }),
    )];
    assert!(matches!(
        feasible_hindsight_optimum(&body, &rounds, &bad),
        Err(Error::InfeasibleCertificate { .. })
    ));
}

#[test]
fn hindsight_dominates_random_points() {
    let mut rng = SplitMix64::new(42);
    for i in 0..16 {
        let body = random_geometry(&mut rng, i, 4);
        let anchor = body.linear_minimizer(&rng.unit_vector(body.dim())).unwrap();
        let costs = if i % 2 == 0 {
            CostFamily::NoisyLinear {
                bias: 0.5,
                noise: 1.0,
            }
        } else {
            CostFamily::RotatingQuadratic {
                theta: 1.0,
                period: 40.0,
                orbit: 0.7,
            }
        };
        let spec = ScenarioSpec {
            costs,
            constraints: ConstraintFamily::SwitchingHalfspaces {
                pool: 3,
                spread: 0.3,
                per_round: 1,
            },
            seed: rng.next_u64(),
            horizon: 100,
            feasible_anchor: anchor.clone(),
        };
        let sc = generate(&spec, &body).unwrap();
        let (_, best) = hindsight_optimum(&body, &sc.rounds).unwrap();
        for _ in 0..100 {
            let x = uniform_member(&body, &mut rng);
            assert!(best <= total_cost(&sc.rounds, &x) + 1e-9, "{}", body.name());
        }
        let (xf, feasible) = feasible_hindsight_optimum(&body, &sc.rounds, &anchor).unwrap();
        assert!(feasible >= best - 1e-9);
        assert!(feasible <= total_cost(&sc.rounds, &anchor) + 1e-12);
        assert!(sc.rounds.iter().all(|r| r.eval_g(&xf) <= 1e-12));
    }
}

#[test]
fn reports_are_self_consistent() {
    let mut rng = SplitMix64::new(43);
    for i in 0..12 {
        let body = random_geometry(&mut rng, i, 3);
        let anchor = body.linear_minimizer(&rng.unit_vector(body.dim())).unwrap();
        let horizon = 512;
        let spec = ScenarioSpec {
            costs: CostFamily::DriftingLinear { period: 150.0 },
            constraints: ConstraintFamily::SwitchingHalfspaces {
                pool: 4,
                spread: 0.2,
                per_round: 1,
            },
            seed: rng.next_u64(),
            horizon,
            feasible_anchor: anchor.clone(),
        };
        let sc = generate(&spec, &body).unwrap();
        let p = BagelParams::convex(
            horizon,
            0.5,
            sc.declared_m1,
            body.diameter(),
            Tuning::default(),
        )
        .unwrap();
        let log = run_coco(&body, p, body.anchor().clone(), &sc.rounds).unwrap();
        let report = evaluate(&body, &sc.rounds, log, RunParams::Bagel(p), Some(&anchor)).unwrap();
        assert!(
            (report.recomputed_regret(&sc.rounds) - report.regret).abs()
                <= 1e-9 * (1.0 + report.regret.abs())
        );
        assert!(
            (report.recomputed_ccv(&sc.rounds) - report.ccv).abs() <= 1e-9 * (1.0 + report.ccv)
        );
        assert!(report.ccv >= 0.0);
        assert_eq!(
            report.total_so_calls,
            report.log.rounds.last().unwrap().so_calls_cum
        );
        assert!(report
            .log
            .rounds
            .windows(2)
            .all(|w| w[1].so_calls_cum >= w[0].so_calls_cum));
        assert!(report.feasible_value.unwrap() >= report.hindsight_value - 1e-9);
        assert_eq!(report.params.oco(), p.oco_params());
    }
}

#[test]
fn baseline_projection_is_radial_clamp_on_ball() {
    let body = ball(&[1.0, 1.0], 2.0);
    let proj = ExactProjector::new(&body);
    let (p, calls) = proj.project(&v(&[7.0, 9.0])).unwrap();
    assert!(p.max_abs_diff(&v(&[1.0 + 1.2, 1.0 + 1.6])) < 1e-15);
    assert_eq!(calls, 1);
    let (inside, _) = proj.project(&v(&[1.5, 0.5])).unwrap();
    assert_eq!(inside, v(&[1.5, 0.5]));

    let horizon = 64;
    let spec = ScenarioSpec {
        costs: CostFamily::NoisyLinear {
            bias: 1.0,
            noise: 0.5,
        },
        constraints: ConstraintFamily::Inactive,
        seed: 5,
        horizon,
        feasible_anchor: body.anchor().clone(),
    };
    let sc = generate(&spec, &body).unwrap();
    let params = OcoParams {
        horizon,
        block_len: 1,
        delta: 0.1,
        rule: StepRule::convex(body.diameter()),
    };
    let log = projection_baseline_oco(&body, params, body.anchor().clone(), &sc.rounds).unwrap();
    assert_eq!(log.total_so_calls, horizon as u64);
    let c = body.anchor();
    for pair in log.blocks.windows(2) {
        let mut y = pair[0].action.clone();
        y.axpy(-pair[0].eta, &pair[0].mean_gradient);
        let offset = y.sub(c);
        let clamp = if offset.norm() <= 2.0 {
            y.clone()
        } else {
            c.add(&offset.scaled(2.0 / offset.norm()))
        };
        assert!(pair[1].action.max_abs_diff(&clamp) < 1e-12);
    }
}

#[test]
fn baseline_and_projection_free_regret_are_comparable() {
    let body = Geometry::unit_ball(2).unwrap();
    let horizon = 4096;
    for seed in 1..=3 {
        let spec = ScenarioSpec {
            costs: CostFamily::NoisyLinear {
                bias: 0.5,
                noise: 1.0,
            },
            constraints: ConstraintFamily::Inactive,
            seed,
            horizon,
            feasible_anchor: body.anchor().clone(),
        };
        let sc = generate(&spec, &body).unwrap();
        let p = BagelParams::convex(
            horizon,
            0.5,
            sc.declared_m1,
            body.diameter(),
            Tuning::default(),
        )
        .unwrap();
        let ours = run_coco(&body, p, body.anchor().clone(), &sc.rounds).unwrap();
        let base = projection_baseline_run(&body, p, body.anchor().clone(), &sc.rounds).unwrap();
        let ours = evaluate(&body, &sc.rounds, ours, RunParams::Bagel(p), None).unwrap();
        let base = evaluate(&body, &sc.rounds, base, RunParams::Bagel(p), None).unwrap();
        assert_eq!((ours.ccv, base.ccv), (0.0, 0.0));
        assert!(ours.regret > 0.0 && base.regret > 0.0);
        let ratio = ours.regret / base.regret;
        assert!((0.5..=2.0).contains(&ratio), "seed {seed}: ratio {ratio}");
    }
}

#[test]
fn fit_examples() {
    let horizons = [256usize, 1024, 4096, 16384];
    let exact = |f: fn(f64) -> f64| -> Vec<(usize, Vec<f64>)> {
        horizons
            .iter()
            .map(|&t| (t, vec![f(t as f64); 5]))
            .collect()
    };
    let linear = fit_scaling(&exact(|t| t), Metric::Regret).unwrap();
    assert!((linear.slope - 1.0).abs() < 1e-9);
    assert!((linear.r_squared - 1.0).abs() < 1e-12);
    let root = fit_scaling(&exact(|t| 3.0 * t.sqrt()), Metric::SoCalls).unwrap();
    assert!((root.slope - 0.5).abs() < 1e-9);
    assert!((root.intercept - 3f64.ln()).abs() < 1e-9);

    let zeros = exact(|_| 0.0);
    assert!(matches!(
        fit_scaling(&zeros, Metric::Regret),
        Err(Error::DegenerateFit(_))
    ));
    let shifted = fit_scaling(&zeros, Metric::Ccv).unwrap();
    assert!(shifted.shifted && shifted.slope.abs() < 1e-12);

    let two: Vec<_> = exact(|t| t).into_iter().take(2).collect();
    assert!(matches!(
        fit_scaling(&two, Metric::Regret),
        Err(Error::DegenerateFit(_))
    ));
    let few_seeds: Vec<_> = horizons.iter().map(|&t| (t, vec![1.0; 4])).collect();
    assert!(matches!(
        fit_scaling(&few_seeds, Metric::Regret),
        Err(Error::DegenerateFit(_))
    ));
    assert!(fit_log_log(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
}
