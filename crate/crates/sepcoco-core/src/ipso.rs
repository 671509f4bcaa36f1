//! Infeasible projection through a separation oracle.
//!
//! Given `y0`, the routine first maps it onto the affine hull and clips it
//! into the ball of radius `D` around the anchor. It then repeatedly asks the
//! oracle about the current point and, while the answer is a separator `g`,
//! moves by exactly `delta * r` against the direction of `g` projected onto
//! the hull's direction space.
//!
//! The returned point lies in `K` and is no farther than `y0` from every
//! point of the shrunk body `(1 - delta) K + delta c`. Starting from the
//! clipped point `y2`, the number of corrective steps is at most
//! `dist(y2, K_delta)^2 / (delta r)^2`.

use alloc::vec::Vec;

use crate::geometry::{check_delta, ConvexBody, Separation};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpsoConfig {
    delta: f64,
    max_calls: u64,
}

impl IpsoConfig {
    pub fn new(delta: f64, max_calls: u64) -> Result<Self> {
        check_delta(delta)?;
        if max_calls == 0 {
            return Err(Error::InvalidConfig(
                "IP-SO call cap must be positive".into(),
            ));
        }
        Ok(IpsoConfig { delta, max_calls })
    }

    /// Default cap `10 * (D^2 / (delta r)^2 + 1)`; one call when `delta = 0`.
    pub fn for_body<B: ConvexBody + ?Sized>(body: &B, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let cap = if delta == 0.0 {
            1
        } else {
            let bound = worst_case_steps(body, delta);
            let cap = 10.0 * (bound + 1.0);
            if cap >= u64::MAX as f64 {
                u64::MAX
            } else {
                libm::ceil(cap) as u64
            }
        };
        Self::new(delta, cap)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn max_calls(&self) -> u64 {
        self.max_calls
    }

    /// Whether the cap covers the worst-case step count for `body`.
    pub fn covers<B: ConvexBody + ?Sized>(&self, body: &B) -> bool {
        self.delta > 0.0
            && (self.max_calls as f64) >= libm::ceil(worst_case_steps(body, self.delta)) + 1.0
    }
}

fn worst_case_steps<B: ConvexBody + ?Sized>(body: &B, delta: f64) -> f64 {
    let d = body.diameter();
    let step = delta * body.inner_radius();
    d * d / (step * step)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpsoOutcome {
    pub point: Vector,
    /// The point after the affine projection and diameter clip.
    pub clipped: Vector,
    pub so_calls: u64,
    pub steps_taken: u64,
}

pub fn infeasible_project<B: ConvexBody + ?Sized>(
    body: &B,
    cfg: &IpsoConfig,
    y0: &Vector,
) -> Result<IpsoOutcome> {
    run(body, cfg, y0, None)
}

/// Like [`infeasible_project`], also pushing every visited iterate
/// (starting with the clipped point) onto `trace`.
pub fn infeasible_project_traced<B: ConvexBody + ?Sized>(
    body: &B,
    cfg: &IpsoConfig,
    y0: &Vector,
    trace: &mut Vec<Vector>,
) -> Result<IpsoOutcome> {
    run(body, cfg, y0, Some(trace))
}

fn run<B: ConvexBody + ?Sized>(
    body: &B,
    cfg: &IpsoConfig,
    y0: &Vector,
    mut trace: Option<&mut Vec<Vector>>,
) -> Result<IpsoOutcome> {
    y0.ensure_dim(body.dim())?;
    y0.ensure_finite()?;
    let clipped = clip_to_diameter(body, &body.project_affine(y0));
    let step = cfg.delta * body.inner_radius();
    let mut y = clipped.clone();
    let mut calls: u64 = 0;
    loop {
        if let Some(t) = trace.as_deref_mut() {
            t.push(y.clone());
        }
        if calls == cfg.max_calls {
            return Err(Error::IterationCapExceeded { cap: cfg.max_calls });
        }
        calls += 1;
        match body.separate(&y)? {
            Separation::Inside => {
                return Ok(IpsoOutcome {
                    point: y,
                    clipped,
                    so_calls: calls,
                    steps_taken: calls - 1,
                })
            }
            Separation::Outside(g) => {
                let dir = match body.project_direction(&g) {
                    Ok(d) => d,
                    Err(Error::DegenerateDirection { .. }) => {
                        return Err(Error::IterationCapExceeded { cap: cfg.max_calls })
                    }
                    Err(e) => return Err(e),
                };
                y.axpy(-step / dir.norm(), &dir);
            }
        }
    }
}

fn clip_to_diameter<B: ConvexBody + ?Sized>(body: &B, y1: &Vector) -> Vector {
    let c = body.anchor();
    let dist = y1.distance(c);
    let d = body.diameter();
    if dist <= d {
        y1.clone()
    } else {
        let mut y2 = c.clone();
        y2.axpy(d / dist, &y1.sub(c));
        y2
    }
}
