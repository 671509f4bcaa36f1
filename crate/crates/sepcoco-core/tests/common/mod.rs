#![allow(dead_code)]

use sepcoco_core::geometry::{ConvexBody, Geometry, GeometryKind, Halfspace};
use sepcoco_core::rng::SplitMix64;
use sepcoco_core::Vector;

pub fn v(xs: &[f64]) -> Vector {
    Vector::from_slice(xs).unwrap()
}

pub fn ball(center: &[f64], radius: f64) -> Geometry {
    Geometry::ball(v(center), radius).unwrap()
}

/// The cube `[-1, 1]^d` cut by `cuts` random halfspaces at offset 0.75.
pub fn cut_cube(dim: usize, cuts: usize, rng: &mut SplitMix64) -> Geometry {
    let mut hs = Vec::new();
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            hs.push(Halfspace {
                normal: Vector::basis(dim, i, sign),
                offset: 1.0,
            });
        }
    }
    for _ in 0..cuts {
        hs.push(Halfspace {
            normal: rng.unit_vector(dim),
            offset: 0.75,
        });
    }
    Geometry::polytope(hs).unwrap()
}

/// Ball, box, simplex or polytope by `kind % 4`, with dimension at most `max_dim`.
pub fn random_geometry(rng: &mut SplitMix64, kind: usize, max_dim: usize) -> Geometry {
    let max_dim = max_dim.max(2);
    match kind % 4 {
        0 => {
            let dim = 1 + rng.below(max_dim);
            Geometry::ball(rng.gaussian_vector(dim), rng.uniform(0.5, 2.0)).unwrap()
        }
        1 => {
            let dim = 1 + rng.below(max_dim);
            let lower = rng.gaussian_vector(dim);
            let upper: Vec<f64> = lower
                .as_slice()
                .iter()
                .map(|l| l + rng.uniform(0.3, 2.0))
                .collect();
            Geometry::boxed(lower, Vector::new(upper).unwrap()).unwrap()
        }
        2 => Geometry::simplex(2 + rng.below(max_dim - 1)).unwrap(),
        _ => {
            let dim = 2 + rng.below(max_dim.min(3) - 1);
            let cuts = 1 + rng.below(4);
            cut_cube(dim, cuts, rng)
        }
    }
}

/// Membership from the defining inequalities, independent of the oracle.
pub fn inside_by_definition(body: &Geometry, x: &Vector, tol: f64) -> bool {
    match body.kind() {
        GeometryKind::Ball { center, radius } => x.distance(center) <= radius + tol,
        GeometryKind::Box { lower, upper } => {
            (0..x.dim()).all(|i| x[i] >= lower[i] - tol && x[i] <= upper[i] + tol)
        }
        GeometryKind::Simplex { .. } => {
            x.as_slice().iter().all(|&c| c >= -tol)
                && (x.as_slice().iter().sum::<f64>() - 1.0).abs() <= tol
        }
        GeometryKind::Polytope { halfspaces, .. } => {
            halfspaces.iter().all(|h| h.normal.dot(x) - h.offset <= tol)
        }
    }
}

/// Axis-aligned bounding box of the body.
pub fn bounding_box(body: &Geometry) -> (Vector, Vector) {
    match body.kind() {
        GeometryKind::Ball { center, radius } => {
            let r = Vector::filled(center.dim(), *radius);
            (center.sub(&r), center.add(&r))
        }
        GeometryKind::Box { lower, upper } => (lower.clone(), upper.clone()),
        GeometryKind::Simplex { dim } => (Vector::zeros(*dim), Vector::filled(*dim, 1.0)),
        GeometryKind::Polytope { vertices, .. } => {
            let d = vertices[0].dim();
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for p in vertices {
                for i in 0..d {
                    lo[i] = lo[i].min(p[i]);
                    hi[i] = hi[i].max(p[i]);
                }
            }
            (Vector::new(lo).unwrap(), Vector::new(hi).unwrap())
        }
    }
}

/// Uniform sample from the body (rejection from the bounding box; the
/// simplex uses normalized exponential spacings).
pub fn uniform_member(body: &Geometry, rng: &mut SplitMix64) -> Vector {
    if let GeometryKind::Simplex { dim } = body.kind() {
        let e: Vec<f64> = (0..*dim).map(|_| -(1.0 - rng.next_f64()).ln()).collect();
        let s: f64 = e.iter().sum();
        return Vector::new(e.iter().map(|x| x / s).collect()).unwrap();
    }
    let (lo, hi) = bounding_box(body);
    loop {
        let x: Vec<f64> = (0..lo.dim()).map(|i| rng.uniform(lo[i], hi[i])).collect();
        let x = Vector::new(x).unwrap();
        if inside_by_definition(body, &x, 0.0) {
            return x;
        }
    }
}

/// Unit direction inside the affine hull's direction space.
pub fn hull_direction(body: &Geometry, rng: &mut SplitMix64) -> Vector {
    loop {
        let mut u = rng.gaussian_vector(body.dim());
        if let GeometryKind::Simplex { dim } = body.kind() {
            let mean = u.sum() / *dim as f64;
            u = u.sub(&Vector::filled(*dim, mean));
        }
        let n = u.norm();
        if n > 1e-3 {
            return u.scaled(1.0 / n);
        }
    }
}

/// Distance from `from` to the boundary along `dir`, by bisection on the
/// defining inequalities.
pub fn ray_exit(body: &Geometry, from: &Vector, dir: &Vector) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    let at = |s: f64| {
        let mut p = from.clone();
        p.axpy(s, dir);
        p
    };
    while inside_by_definition(body, &at(hi), 1e-12) {
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if inside_by_definition(body, &at(mid), 1e-12) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// A point outside the body (and on its affine hull for the simplex).
pub fn exterior_point(body: &Geometry, rng: &mut SplitMix64) -> Vector {
    loop {
        let u = hull_direction(body, rng);
        let c = body.anchor();
        let exit = ray_exit(body, c, &u);
        let mut y = c.clone();
        y.axpy(exit * rng.uniform(1.01, 3.0) + 1e-6, &u);
        if !inside_by_definition(body, &y, 1e-9) {
            return y;
        }
    }
}
