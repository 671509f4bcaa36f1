//! Seeded, oblivious sequences of cost and constraint functions.
//!
//! A scenario combines a cost family with a constraint family. Every
//! constraint is built so that the scenario's feasible anchor satisfies it,
//! and every round declares its gradient bound `M1` and strong-convexity
//! modulus `theta`.

use alloc::format;
use alloc::vec::Vec;

use crate::geometry::{ConvexBody, Halfspace};
use crate::rng::SplitMix64;
use crate::{Error, Result, Vector};

/// Tolerance for `g_t(anchor) <= 0`.
pub const ANCHOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum CostFn {
    /// `<u, x>`
    Linear { u: Vector },
    /// `theta / 2 * ||x - target||^2`
    Quadratic { theta: f64, target: Vector },
}

impl CostFn {
    pub fn eval(&self, x: &Vector) -> f64 {
        match self {
            CostFn::Linear { u } => u.dot(x),
            CostFn::Quadratic { theta, target } => 0.5 * theta * x.sub(target).norm_sq(),
        }
    }

    pub fn grad(&self, x: &Vector) -> Vector {
        match self {
            CostFn::Linear { u } => u.clone(),
            CostFn::Quadratic { theta, target } => x.sub(target).scaled(*theta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintFn {
    Halfspace(Halfspace),
    /// Pointwise maximum; the gradient comes from the lowest-index maximizer.
    Max(Vec<ConstraintFn>),
}

impl ConstraintFn {
    pub fn eval(&self, x: &Vector) -> f64 {
        match self {
            ConstraintFn::Halfspace(h) => h.excess(x),
            ConstraintFn::Max(parts) => parts
                .iter()
                .map(|p| p.eval(x))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn grad(&self, x: &Vector) -> Vector {
        match self {
            ConstraintFn::Halfspace(h) => h.normal.clone(),
            ConstraintFn::Max(parts) => {
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (i, p) in parts.iter().enumerate() {
                    let val = p.eval(x);
                    if val > best_val {
                        best = i;
                        best_val = val;
                    }
                }
                parts[best].grad(x)
            }
        }
    }

    /// All halfspaces whose intersection is `{x : g(x) <= 0}`.
    pub fn halfspaces(&self) -> Vec<&Halfspace> {
        let mut out = Vec::new();
        self.collect_halfspaces(&mut out);
        out
    }

    fn collect_halfspaces<'a>(&'a self, out: &mut Vec<&'a Halfspace>) {
        match self {
            ConstraintFn::Halfspace(h) => out.push(h),
            ConstraintFn::Max(parts) => parts.iter().for_each(|p| p.collect_halfspaces(out)),
        }
    }
}

/// Collapses several constraints into their pointwise maximum. A single
/// constraint is returned unchanged.
pub fn aggregate_constraints(mut list: Vec<ConstraintFn>) -> Result<ConstraintFn> {
    match list.len() {
        0 => Err(Error::InvalidScenario("no constraints to aggregate".into())),
        1 => Ok(list.pop().expect("length checked")),
        _ => Ok(ConstraintFn::Max(list)),
    }
}

/// One round of the adversary: a cost and an aggregated constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOracle {
    pub cost: CostFn,
    pub constraint: ConstraintFn,
    pub declared_m1: f64,
    pub declared_theta: f64,
}

impl RoundOracle {
    pub fn eval_f(&self, x: &Vector) -> f64 {
        self.cost.eval(x)
    }

    pub fn grad_f(&self, x: &Vector) -> Vector {
        self.cost.grad(x)
    }

    pub fn eval_g(&self, x: &Vector) -> f64 {
        self.constraint.eval(x)
    }

    pub fn grad_g(&self, x: &Vector) -> Vector {
        self.constraint.grad(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostFamily {
    /// Unit linear costs rotating in a random plane with the given period.
    DriftingLinear { period: f64 },
    /// `u_t = bias * w + noise * xi_t`, `w` the unit direction from the
    /// anchor toward the body's center (random if they coincide), `xi_t`
    /// uniform on the unit sphere.
    NoisyLinear { bias: f64, noise: f64 },
    /// `theta / 2 * ||x - z_t||^2` with `z_t` circling the center at radius
    /// `orbit * r`; the period is `period` times a seeded factor in [0.5, 1.5).
    RotatingQuadratic { theta: f64, period: f64, orbit: f64 },
    /// First half: `<s_t u0, x>` with `s_t = peak * scale * exp(sqrt(t) - sqrt(T/2))`;
    /// second half: `scale * xi_t`. Starting at `c - r u0` makes early
    /// steps with a zero floor constant expensive in oracle calls.
    VanishingWarmup { scale: f64, peak: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintFamily {
    /// Halfspaces that never bind on the body: `g_t <= -1` everywhere on `K`.
    Inactive,
    /// Each round draws `per_round` halfspaces from a fixed pool of `pool`
    /// unit normals and aggregates them by max. Every halfspace passes
    /// through the anchor. Normals are `w + spread * xi` normalized, `w` the
    /// inward direction at the anchor; if the anchor is the center, normals
    /// are uniform.
    SwitchingHalfspaces {
        pool: usize,
        spread: f64,
        per_round: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub costs: CostFamily,
    pub constraints: ConstraintFamily,
    pub seed: u64,
    pub horizon: usize,
    pub feasible_anchor: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub rounds: Vec<RoundOracle>,
    /// Starting action the cost family was designed around, if any.
    pub suggested_start: Option<Vector>,
    pub declared_m1: f64,
    pub declared_theta: f64,
}

const COST_STREAM: u64 = 1;
const CONSTRAINT_STREAM: u64 = 2;

pub fn generate<B: ConvexBody + ?Sized>(spec: &ScenarioSpec, body: &B) -> Result<Scenario> {
    let dim = body.dim();
    let anchor = &spec.feasible_anchor;
    anchor.ensure_dim(dim)?;
    anchor.ensure_finite()?;
    if spec.horizon == 0 {
        return Err(Error::InvalidScenario("horizon must be positive".into()));
    }
    if !body.contains(anchor)? {
        return Err(Error::InvalidScenario(
            "feasible anchor lies outside the body".into(),
        ));
    }
    let c = body.anchor();
    let inward = {
        let w = c.sub(anchor);
        let n = w.norm();
        if n > 1e-9 * (1.0 + body.diameter()) {
            Some(w.scaled(1.0 / n))
        } else {
            None
        }
    };

    let mut rng = SplitMix64::stream(spec.seed, COST_STREAM);
    let (costs, cost_m1, theta, start) =
        build_costs(&spec.costs, spec.horizon, body, inward.as_ref(), &mut rng)?;
    let mut rng = SplitMix64::stream(spec.seed, CONSTRAINT_STREAM);
    let constraints = build_constraints(
        &spec.constraints,
        spec.horizon,
        body,
        anchor,
        inward.as_ref(),
        &mut rng,
    )?;

    let m1 = cost_m1.max(1.0);
    let mut rounds = Vec::with_capacity(spec.horizon);
    for (t, (cost, constraint)) in costs.into_iter().zip(constraints).enumerate() {
        let at_anchor = constraint.eval(anchor);
        if at_anchor > ANCHOR_TOL {
            return Err(Error::InvalidScenario(format!(
                "round {} constraint is {at_anchor:e} at the anchor",
                t + 1
            )));
        }
        rounds.push(RoundOracle {
            cost,
            constraint,
            declared_m1: m1,
            declared_theta: theta,
        });
    }
    Ok(Scenario {
        rounds,
        suggested_start: start,
        declared_m1: m1,
        declared_theta: theta,
    })
}

/// Unit vector in the body's direction space, from a seeded draw.
fn random_direction<B: ConvexBody + ?Sized>(body: &B, rng: &mut SplitMix64) -> Vector {
    loop {
        if let Ok(d) = body.project_direction(&rng.unit_vector(body.dim())) {
            let n = d.norm();
            if n > 1e-6 {
                return d.scaled(1.0 / n);
            }
        }
    }
}

/// Orthonormal pair in the direction space (second entry absent when it is
/// one-dimensional).
fn random_plane<B: ConvexBody + ?Sized>(
    body: &B,
    rng: &mut SplitMix64,
) -> (Vector, Option<Vector>) {
    let e1 = random_direction(body, rng);
    if body.dim() < 2 {
        return (e1, None);
    }
    for _ in 0..64 {
        let mut e2 = random_direction(body, rng);
        e2.axpy(-e2.dot(&e1), &e1);
        let n = e2.norm();
        if n > 1e-3 {
            return (e1, Some(e2.scaled(1.0 / n)));
        }
    }
    (e1, None)
}

type CostBuild = (Vec<CostFn>, f64, f64, Option<Vector>);

fn build_costs<B: ConvexBody + ?Sized>(
    family: &CostFamily,
    horizon: usize,
    body: &B,
    inward: Option<&Vector>,
    rng: &mut SplitMix64,
) -> Result<CostBuild> {
    let dim = body.dim();
    let positive = |name: &str, x: f64| {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!(
                "{name} must be positive, got {x}"
            )))
        }
    };
    match *family {
        CostFamily::DriftingLinear { period } => {
            positive("period", period)?;
            let (e1, e2) = random_plane(body, rng);
            let phase = rng.uniform(0.0, 2.0 * core::f64::consts::PI);
            let omega = 2.0 * core::f64::consts::PI / period;
            let costs = (0..horizon)
                .map(|t| {
                    let a = omega * t as f64 + phase;
                    let mut u = e1.scaled(libm::cos(a));
                    if let Some(e2) = &e2 {
                        u.axpy(libm::sin(a), e2);
                    }
                    CostFn::Linear { u }
                })
                .collect();
            Ok((costs, 1.0, 0.0, None))
        }
        CostFamily::NoisyLinear { bias, noise } => {
            if !(bias >= 0.0 && noise >= 0.0 && bias + noise > 0.0) {
                return Err(Error::InvalidScenario(
                    "bias and noise must be >= 0, not both zero".into(),
                ));
            }
            let w = match inward {
                Some(w) => w.clone(),
                None => rng.unit_vector(dim),
            };
            let costs = (0..horizon)
                .map(|_| {
                    let mut u = w.scaled(bias);
                    u.axpy(noise, &rng.unit_vector(dim));
                    CostFn::Linear { u }
                })
                .collect();
            Ok((costs, bias + noise, 0.0, None))
        }
        CostFamily::RotatingQuadratic {
            theta,
            period,
            orbit,
        } => {
            positive("theta", theta)?;
            positive("period", period)?;
            if !(0.0..=1.0).contains(&orbit) {
                return Err(Error::InvalidScenario(format!(
                    "orbit {orbit} outside [0, 1]"
                )));
            }
            let (e1, e2) = random_plane(body, rng);
            let phase = rng.uniform(0.0, 2.0 * core::f64::consts::PI);
            let omega = 2.0 * core::f64::consts::PI / (period * rng.uniform(0.5, 1.5));
            let radius = orbit * body.inner_radius();
            let c = body.anchor();
            let costs = (0..horizon)
                .map(|t| {
                    let a = omega * t as f64 + phase;
                    let mut target = c.clone();
                    target.axpy(radius * libm::cos(a), &e1);
                    if let Some(e2) = &e2 {
                        target.axpy(radius * libm::sin(a), e2);
                    }
                    CostFn::Quadratic { theta, target }
                })
                .collect();
            Ok((costs, theta * body.diameter(), theta, None))
        }
        CostFamily::VanishingWarmup { scale, peak } => {
            positive("scale", scale)?;
            positive("peak", peak)?;
            let u0 = random_direction(body, rng);
            let warm = horizon / 2;
            let top = libm::sqrt(warm as f64);
            let costs = (1..=horizon)
                .map(|t| {
                    let u = if t <= warm {
                        u0.scaled(peak * scale * libm::exp(libm::sqrt(t as f64) - top))
                    } else {
                        rng.unit_vector(dim).scaled(scale)
                    };
                    CostFn::Linear { u }
                })
                .collect();
            let mut start = body.anchor().clone();
            start.axpy(-body.inner_radius(), &u0);
            let start = shrink_into(body, start)?;
            Ok((costs, scale.max(peak * scale), 0.0, Some(start)))
        }
    }
}

/// Moves a boundary point toward the anchor until the oracle accepts it.
fn shrink_into<B: ConvexBody + ?Sized>(body: &B, mut x: Vector) -> Result<Vector> {
    for _ in 0..60 {
        if body.contains(&x)? {
            return Ok(x);
        }
        x = x.lerp(body.anchor(), 1e-9);
    }
    Ok(body.anchor().clone())
}

fn build_constraints<B: ConvexBody + ?Sized>(
    family: &ConstraintFamily,
    horizon: usize,
    body: &B,
    anchor: &Vector,
    inward: Option<&Vector>,
    rng: &mut SplitMix64,
) -> Result<Vec<ConstraintFn>> {
    let dim = body.dim();
    match *family {
        ConstraintFamily::Inactive => {
            let a = rng.unit_vector(dim);
            let offset = a.dot(body.anchor()) + body.diameter() + 1.0;
            let g = ConstraintFn::Halfspace(Halfspace { normal: a, offset });
            Ok((0..horizon).map(|_| g.clone()).collect())
        }
        ConstraintFamily::SwitchingHalfspaces {
            pool,
            spread,
            per_round,
        } => {
            if pool == 0 || per_round == 0 || per_round > pool {
                return Err(Error::InvalidScenario(format!(
                    "need 1 <= per_round ({per_round}) <= pool ({pool})"
                )));
            }
            if !(spread >= 0.0 && spread.is_finite()) {
                return Err(Error::InvalidScenario(format!(
                    "spread {spread} must be >= 0"
                )));
            }
            let normals: Vec<Vector> = (0..pool)
                .map(|_| {
                    let xi = rng.unit_vector(dim);
                    let raw = match inward {
                        Some(w) => {
                            let mut a = w.clone();
                            a.axpy(spread, &xi);
                            a
                        }
                        None => xi,
                    };
                    let n = raw.norm();
                    if n > 1e-12 {
                        raw.scaled(1.0 / n)
                    } else {
                        rng.unit_vector(dim)
                    }
                })
                .collect();
            let halfspaces: Vec<Halfspace> = normals
                .into_iter()
                .map(|a| Halfspace {
                    offset: a.dot(anchor),
                    normal: a,
                })
                .collect();
            (0..horizon)
                .map(|_| {
                    let mut picks: Vec<usize> = Vec::with_capacity(per_round);
                    while picks.len() < per_round {
                        let i = rng.below(pool);
                        if !picks.contains(&i) {
                            picks.push(i);
                        }
                    }
                    aggregate_constraints(
                        picks
                            .into_iter()
                            .map(|i| ConstraintFn::Halfspace(halfspaces[i].clone()))
                            .collect(),
                    )
                })
                .collect()
        }
    }
}
