//! Oracle-access model for convex action sets.
//!
//! Algorithms see a body only through [`ConvexBody`]: a separation oracle,
//! projections onto the affine hull and its direction space, an interior
//! anchor `c`, an inner radius `r` around it, and the diameter `D`.
//!
//! [`Geometry`] provides four concrete bodies with closed-form constants:
//!
//! | kind      | anchor `c`        | inner radius `r`        | diameter `D`   |
//! |-----------|-------------------|-------------------------|----------------|
//! | ball      | center            | radius                  | 2·radius       |
//! | box       | midpoint          | min half-width          | ‖upper−lower‖  |
//! | simplex   | (1/d, …, 1/d)     | 1/√(d(d−1))             | √2             |
//! | polytope  | mean of vertices  | min distance to a facet | max vertex gap |
//!
//! The simplex is the probability simplex, a lower-dimensional body whose
//! affine hull is `{x : Σx = 1}`.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result, Vector};

/// Relative slack used by every membership test.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Norm below which a projected direction is treated as zero.
pub const DEGENERATE_DIRECTION_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    Inside,
    /// Unnormalized `g` with `<y - x, g> > 0` for every `x` in the body.
    Outside(Vector),
}

impl Separation {
    pub fn is_inside(&self) -> bool {
        matches!(self, Separation::Inside)
    }
}

pub trait ConvexBody: Send + Sync {
    fn dim(&self) -> usize;

    fn separate(&self, y: &Vector) -> Result<Separation>;

    /// Euclidean projection onto the affine hull.
    fn project_affine(&self, y: &Vector) -> Vector;

    /// Projection onto the direction space of the affine hull.
    fn project_direction(&self, g: &Vector) -> Result<Vector>;

    fn anchor(&self) -> &Vector;

    fn inner_radius(&self) -> f64;

    fn diameter(&self) -> f64;

    fn contains(&self, y: &Vector) -> Result<bool> {
        Ok(self.separate(y)?.is_inside())
    }
}

/// `(1 - delta) * x + delta * c`, a point of the shrunk body.
pub fn shrunk_member<B: ConvexBody + ?Sized>(body: &B, delta: f64, x: &Vector) -> Result<Vector> {
    check_delta(delta)?;
    x.ensure_dim(body.dim())?;
    if delta == 0.0 {
        return Ok(x.clone());
    }
    Ok(x.lerp(body.anchor(), delta))
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if (0.0..1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::InvalidDelta(delta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vector,
    pub offset: f64,
}

impl Halfspace {
    /// Signed violation `<a, y> - b`.
    pub fn excess(&self, y: &Vector) -> f64 {
        self.normal.dot(y) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryKind {
    Ball {
        center: Vector,
        radius: f64,
    },
    Box {
        lower: Vector,
        upper: Vector,
    },
    Simplex {
        dim: usize,
    },
    Polytope {
        halfspaces: Vec<Halfspace>,
        vertices: Vec<Vector>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    kind: GeometryKind,
    anchor: Vector,
    inner_radius: f64,
    diameter: f64,
}

impl Geometry {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        center.ensure_finite()?;
        if center.dim() == 0 {
            return Err(Error::InvalidGeometry("ball needs dimension >= 1".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidGeometry(format!("ball radius {radius}")));
        }
        Ok(Geometry {
            anchor: center.clone(),
            inner_radius: radius,
            diameter: 2.0 * radius,
            kind: GeometryKind::Ball { center, radius },
        })
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::ball(Vector::zeros(dim), 1.0)
    }

    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::boxed(Vector::filled(dim, lower), Vector::filled(dim, upper))
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        lower.ensure_finite()?;
        upper.ensure_finite()?;
        upper.ensure_dim(lower.dim())?;
        if lower.dim() == 0 {
            return Err(Error::InvalidGeometry("box needs dimension >= 1".into()));
        }
        let mut half_min = f64::INFINITY;
        for i in 0..lower.dim() {
            let w = upper[i] - lower[i];
            if w <= 0.0 {
                return Err(Error::InvalidGeometry(format!(
                    "box side {i} has nonpositive width {w}"
                )));
            }
            half_min = half_min.min(0.5 * w);
        }
        Ok(Geometry {
            anchor: lower.lerp(&upper, 0.5),
            inner_radius: half_min,
            diameter: upper.distance(&lower),
            kind: GeometryKind::Box { lower, upper },
        })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidGeometry(
                "simplex needs dimension >= 2".into(),
            ));
        }
        let d = dim as f64;
        Ok(Geometry {
            anchor: Vector::filled(dim, 1.0 / d),
            inner_radius: 1.0 / libm::sqrt(d * (d - 1.0)),
            diameter: libm::sqrt(2.0),
            kind: GeometryKind::Simplex { dim },
        })
    }

    /// Bounded, full-dimensional polytope `{x : <a_i, x> <= b_i}`.
    ///
    /// Constants are exact: vertices are enumerated over all `d`-subsets of
    /// constraints, so keep the constraint count modest.
    pub fn polytope(halfspaces: Vec<Halfspace>) -> Result<Self> {
        let dim = match halfspaces.first() {
            Some(h) => h.normal.dim(),
            None => return Err(Error::InvalidGeometry("polytope needs constraints".into())),
        };
        if dim == 0 {
            return Err(Error::InvalidGeometry(
                "polytope needs dimension >= 1".into(),
            ));
        }
        for h in &halfspaces {
            h.normal.ensure_dim(dim)?;
            h.normal.ensure_finite()?;
            if !h.offset.is_finite() || h.normal.norm() == 0.0 {
                return Err(Error::InvalidGeometry("degenerate halfspace".into()));
            }
        }
        let vertices = enumerate_vertices(&halfspaces, dim)?;
        if vertices.len() < dim + 1 {
            return Err(Error::InvalidGeometry(format!(
                "polytope has {} vertices; unbounded or not full-dimensional",
                vertices.len()
            )));
        }
        let mut anchor = Vector::zeros(dim);
        for v in &vertices {
            anchor.axpy(1.0 / vertices.len() as f64, v);
        }
        let inner_radius = halfspaces
            .iter()
            .map(|h| -h.excess(&anchor) / h.normal.norm())
            .fold(f64::INFINITY, f64::min);
        if inner_radius <= 0.0 {
            return Err(Error::InvalidGeometry("polytope has empty interior".into()));
        }
        let mut diameter: f64 = 0.0;
        for (i, a) in vertices.iter().enumerate() {
            for b in &vertices[i + 1..] {
                diameter = diameter.max(a.distance(b));
            }
        }
        Ok(Geometry {
            kind: GeometryKind::Polytope {
                halfspaces,
                vertices,
            },
            anchor,
            inner_radius,
            diameter,
        })
    }

    pub fn kind(&self) -> &GeometryKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GeometryKind::Ball { .. } => "ball",
            GeometryKind::Box { .. } => "box",
            GeometryKind::Simplex { .. } => "simplex",
            GeometryKind::Polytope { .. } => "polytope",
        }
    }
}

fn slack(scale: f64) -> f64 {
    MEMBERSHIP_TOL * (1.0 + libm::fabs(scale))
}

impl ConvexBody for Geometry {
    fn dim(&self) -> usize {
        self.anchor.dim()
    }

    fn separate(&self, y: &Vector) -> Result<Separation> {
        y.ensure_dim(self.dim())?;
        y.ensure_finite()?;
        match &self.kind {
            GeometryKind::Ball { center, radius } => {
                let v = y.sub(center);
                if v.norm() <= radius + slack(*radius) {
                    Ok(Separation::Inside)
                } else {
                    Ok(Separation::Outside(v))
                }
            }
            GeometryKind::Box { lower, upper } => {
                let mut worst = 0.0;
                let mut pick = None;
                for i in 0..y.dim() {
                    let above = y[i] - upper[i];
                    let below = lower[i] - y[i];
                    let (excess, sign, bound) = if above >= below {
                        (above, 1.0, upper[i])
                    } else {
                        (below, -1.0, lower[i])
                    };
                    if excess > slack(bound) && excess > worst {
                        worst = excess;
                        pick = Some((i, sign));
                    }
                }
                Ok(match pick {
                    None => Separation::Inside,
                    Some((i, sign)) => Separation::Outside(Vector::basis(y.dim(), i, sign)),
                })
            }
            GeometryKind::Simplex { dim } => {
                let off = y.sum() - 1.0;
                if libm::fabs(off) > slack(1.0) {
                    let sign = if off > 0.0 { 1.0 } else { -1.0 };
                    return Ok(Separation::Outside(Vector::filled(*dim, sign)));
                }
                let (i, min) = y.as_slice().iter().copied().enumerate().fold(
                    (0, f64::INFINITY),
                    |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
                );
                if min < -slack(0.0) {
                    Ok(Separation::Outside(Vector::basis(*dim, i, -1.0)))
                } else {
                    Ok(Separation::Inside)
                }
            }
            GeometryKind::Polytope { halfspaces, .. } => {
                let mut worst = 0.0;
                let mut pick = None;
                for (i, h) in halfspaces.iter().enumerate() {
                    let n = h.normal.norm();
                    let excess = h.excess(y) / n;
                    if excess > slack(h.offset / n) && excess > worst {
                        worst = excess;
                        pick = Some(i);
                    }
                }
                Ok(match pick {
                    None => Separation::Inside,
                    Some(i) => Separation::Outside(halfspaces[i].normal.clone()),
                })
            }
        }
    }

    fn project_affine(&self, y: &Vector) -> Vector {
        match &self.kind {
            GeometryKind::Simplex { dim } => {
                let shift = (y.sum() - 1.0) / *dim as f64;
                if shift == 0.0 {
                    y.clone()
                } else {
                    y.sub(&Vector::filled(*dim, shift))
                }
            }
            _ => y.clone(),
        }
    }

    fn project_direction(&self, g: &Vector) -> Result<Vector> {
        g.ensure_dim(self.dim())?;
        let p = match &self.kind {
            GeometryKind::Simplex { dim } => {
                let mean = g.sum() / *dim as f64;
                g.sub(&Vector::filled(*dim, mean))
            }
            _ => g.clone(),
        };
        let norm = p.norm();
        if norm < DEGENERATE_DIRECTION_NORM {
            Err(Error::DegenerateDirection { norm })
        } else {
            Ok(p)
        }
    }

    fn anchor(&self) -> &Vector {
        &self.anchor
    }

    fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    fn diameter(&self) -> f64 {
        self.diameter
    }
}

const MAX_VERTEX_SUBSETS: u64 = 2_000_000;

fn enumerate_vertices(halfspaces: &[Halfspace], dim: usize) -> Result<Vec<Vector>> {
    let m = halfspaces.len();
    if m < dim + 1 {
        return Ok(Vec::new());
    }
    if binomial(m as u64, dim as u64) > MAX_VERTEX_SUBSETS {
        return Err(Error::InvalidGeometry(format!(
            "{m} constraints in dimension {dim} is too many for vertex enumeration"
        )));
    }
    let scale = halfspaces
        .iter()
        .map(|h| libm::fabs(h.offset) / h.normal.norm())
        .fold(1.0, f64::max);
    let mut vertices: Vec<Vector> = Vec::new();
    let mut subset: Vec<usize> = (0..dim).collect();
    loop {
        if let Some(v) = solve_subset(halfspaces, &subset, dim) {
            let feasible = halfspaces
                .iter()
                .all(|h| h.excess(&v) / h.normal.norm() <= 1e-9 * scale);
            if feasible && !vertices.iter().any(|w| w.distance(&v) <= 1e-9 * scale) {
                vertices.push(v);
            }
        }
        if !next_subset(&mut subset, m) {
            break;
        }
    }
    Ok(vertices)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn next_subset(subset: &mut [usize], m: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < m - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves the square system `<a_i, x> = b_i` for `i` in `subset` by Gaussian
/// elimination with partial pivoting; `None` when nearly singular.
fn solve_subset(halfspaces: &[Halfspace], subset: &[usize], dim: usize) -> Option<Vector> {
    let mut a: Vec<f64> = Vec::with_capacity(dim * (dim + 1));
    for &i in subset {
        let h = &halfspaces[i];
        let n = h.normal.norm();
        a.extend(h.normal.as_slice().iter().map(|x| x / n));
        a.push(h.offset / n);
    }
    let w = dim + 1;
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&p, &q| libm::fabs(a[p * w + col]).total_cmp(&libm::fabs(a[q * w + col])))?;
        if libm::fabs(a[pivot * w + col]) < 1e-10 {
            return None;
        }
        if pivot != col {
            for j in 0..w {
                a.swap(pivot * w + j, col * w + j);
            }
        }
        for row in 0..dim {
            if row != col {
                let f = a[row * w + col] / a[col * w + col];
                if f != 0.0 {
                    for j in col..w {
                        a[row * w + j] -= f * a[col * w + j];
                    }
                }
            }
        }
    }
    let x: Vec<f64> = (0..dim).map(|i| a[i * w + dim] / a[i * w + i]).collect();
    Vector::new(x).ok()
}
