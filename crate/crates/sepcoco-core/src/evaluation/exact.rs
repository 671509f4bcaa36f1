//! Exact Euclidean projections and linear minimizers for the test bodies.
//!
//! These are for evaluation only; learners never reach them.

use alloc::vec::Vec;

use crate::geometry::{check_delta, ConvexBody, Geometry, GeometryKind, Halfspace};
use crate::{Result, Vector};

pub trait ExactGeometry: ConvexBody {
    /// Euclidean projection onto the body.
    fn project(&self, y: &Vector) -> Result<Vector>;

    /// A minimizer of `<u, x>` over the body.
    fn linear_minimizer(&self, u: &Vector) -> Result<Vector>;
}

impl ExactGeometry for Geometry {
    fn project(&self, y: &Vector) -> Result<Vector> {
        y.ensure_dim(self.dim())?;
        y.ensure_finite()?;
        Ok(match self.kind() {
            GeometryKind::Ball { center, radius } => {
                let v = y.sub(center);
                let n = v.norm();
                if n <= *radius {
                    y.clone()
                } else {
                    let mut p = center.clone();
                    p.axpy(radius / n, &v);
                    p
                }
            }
            GeometryKind::Box { lower, upper } => {
                let coords: Vec<f64> = (0..y.dim())
                    .map(|i| y[i].clamp(lower[i], upper[i]))
                    .collect();
                Vector::new(coords)?
            }
            GeometryKind::Simplex { .. } => project_simplex(y),
            GeometryKind::Polytope { halfspaces, .. } => {
                let refs: Vec<&Halfspace> = halfspaces.iter().collect();
                dykstra(y, None::<&fn(&Vector) -> Vector>, &refs, DYKSTRA_SWEEPS)
            }
        })
    }

    fn linear_minimizer(&self, u: &Vector) -> Result<Vector> {
        u.ensure_dim(self.dim())?;
        u.ensure_finite()?;
        Ok(match self.kind() {
            GeometryKind::Ball { center, radius } => {
                let n = u.norm();
                if n == 0.0 {
                    center.clone()
                } else {
                    let mut p = center.clone();
                    p.axpy(-radius / n, u);
                    p
                }
            }
            GeometryKind::Box { lower, upper } => {
                let coords: Vec<f64> = (0..u.dim())
                    .map(|i| {
                        if u[i] > 0.0 {
                            lower[i]
                        } else if u[i] < 0.0 {
                            upper[i]
                        } else {
                            0.5 * (lower[i] + upper[i])
                        }
                    })
                    .collect();
                Vector::new(coords)?
            }
            GeometryKind::Simplex { dim } => Vector::basis(*dim, argmin(u.as_slice()), 1.0),
            GeometryKind::Polytope { vertices, .. } => {
                let values: Vec<f64> = vertices.iter().map(|v| u.dot(v)).collect();
                vertices[argmin(&values)].clone()
            }
        })
    }
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

/// Sort-based projection onto the probability simplex.
pub fn project_simplex(y: &Vector) -> Vector {
    let mut u: Vec<f64> = y.as_slice().to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let candidate = (cum - 1.0) / (j + 1) as f64;
        if uj - candidate > 0.0 {
            shift = candidate;
        }
    }
    let coords: Vec<f64> = y.as_slice().iter().map(|&x| (x - shift).max(0.0)).collect();
    Vector::new(coords).expect("finite input gives finite projection")
}

pub(crate) const DYKSTRA_SWEEPS: usize = 200_000;

fn project_halfspace(h: &Halfspace, y: &Vector) -> Vector {
    let excess = h.excess(y);
    if excess <= 0.0 {
        y.clone()
    } else {
        let mut p = y.clone();
        p.axpy(-excess / h.normal.norm_sq(), &h.normal);
        p
    }
}

/// Dykstra's alternating projection onto the intersection of an optional
/// convex set (given by its projector) and a list of halfspaces.
pub(crate) fn dykstra<F>(
    y: &Vector,
    set: Option<&F>,
    halfspaces: &[&Halfspace],
    max_sweeps: usize,
) -> Vector
where
    F: Fn(&Vector) -> Vector,
{
    let inside = |x: &Vector| halfspaces.iter().all(|h| h.excess(x) <= 0.0);
    if set.is_none() && inside(y) {
        return y.clone();
    }
    let parts = halfspaces.len() + usize::from(set.is_some());
    let mut increments: Vec<Vector> = (0..parts).map(|_| Vector::zeros(y.dim())).collect();
    let mut x = y.clone();
    for _ in 0..max_sweeps {
        let before = x.clone();
        for (k, inc) in increments.iter_mut().enumerate() {
            let z = x.add(inc);
            x = match (set, k) {
                (Some(p), 0) => p(&z),
                (Some(_), _) => project_halfspace(halfspaces[k - 1], &z),
                (None, _) => project_halfspace(halfspaces[k], &z),
            };
            *inc = z.sub(&x);
        }
        if x.distance(&before) <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

/// Distance from `y` to `(1 - delta) K + delta c`.
pub fn distance_to_shrunk<B: ExactGeometry + ?Sized>(
    body: &B,
    delta: f64,
    y: &Vector,
) -> Result<f64> {
    check_delta(delta)?;
    Ok(y.distance(&project_shrunk(body, delta, y)?))
}

/// Projection onto `(1 - delta) K + delta c`.
pub fn project_shrunk<B: ExactGeometry + ?Sized>(
    body: &B,
    delta: f64,
    y: &Vector,
) -> Result<Vector> {
    check_delta(delta)?;
    let c = body.anchor();
    let mut scaled = y.clone();
    scaled.axpy(-delta, c);
    let inner = body.project(&scaled.scaled(1.0 / (1.0 - delta)))?;
    let mut out = inner.scaled(1.0 - delta);
    out.axpy(delta, c);
    Ok(out)
}
