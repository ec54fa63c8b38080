//! Convex planar bodies as star-shaped radial graphs.
//!
//! Every body is a radial function on a uniform angular grid about a base
//! point. Convexity is a checkable predicate, not a representation
//! invariant: trial bodies produced by free-boundary updates may be
//! transiently non-convex before projection onto the convex hull.

use crate::error::{Error, Result};
use crate::math::Vec2;

/// Cross-product convexity threshold, scaled by the squared mean edge
/// length (discretization noise scales with edge length squared).
pub const CONVEX_TOL: f64 = 1e-6;

/// Minimal angular resolution; a power of two so refinement studies
/// halve and double cleanly.
pub const MIN_ANGLES: usize = 64;

#[derive(Debug, Clone)]
pub struct StarBody {
    center: Vec2,
    rho: Vec<f64>,
}

/// Closed half-plane `normal . (x - point) <= 0`, with the unit normal
/// oriented away from the body it supports.
#[derive(Debug, Clone, Copy)]
pub struct HalfPlane {
    pub point: Vec2,
    pub normal: Vec2,
}

impl HalfPlane {
    /// Positive on the cut (outer) side, negative on the kept side.
    pub fn signed(&self, x: Vec2) -> f64 {
        self.normal.dot(x - self.point)
    }

    /// The parallel half-plane moved inward (toward the kept side) by `d`.
    pub fn translated_inward(&self, d: f64) -> HalfPlane {
        HalfPlane { point: self.point - d * self.normal, normal: self.normal }
    }
}

/// Built-in inner-body shapes.
#[derive(Debug, Clone)]
pub enum ShapeSpec {
    Disk { r: f64 },
    Ellipse { a: f64, b: f64, phi: f64 },
    RoundedPolygon { vertices: Vec<Vec2>, corner_radius: f64 },
}

impl ShapeSpec {
    /// The shape rotated by `phi` about the origin.
    pub fn rotated(&self, phi: f64) -> ShapeSpec {
        match self {
            ShapeSpec::Disk { r } => ShapeSpec::Disk { r: *r },
            ShapeSpec::Ellipse { a, b, phi: p0 } => {
                ShapeSpec::Ellipse { a: *a, b: *b, phi: p0 + phi }
            }
            ShapeSpec::RoundedPolygon { vertices, corner_radius } => ShapeSpec::RoundedPolygon {
                vertices: vertices.iter().map(|v| v.rotated(phi)).collect(),
                corner_radius: *corner_radius,
            },
        }
    }
}

/// Sample a shape as a radial graph about its centroid.
pub fn make_body(shape: &ShapeSpec, m: usize) -> Result<StarBody> {
    if m < MIN_ANGLES || !m.is_power_of_two() {
        return Err(Error::InvalidBody(format!(
            "angular resolution {m} must be a power of two >= {MIN_ANGLES}"
        )));
    }
    let body = match shape {
        ShapeSpec::Disk { r } => {
            if !(*r > 0.0) {
                return Err(Error::InvalidShape(format!("disk radius must be positive, got {r}")));
            }
            StarBody::from_rho(Vec2::ZERO, vec![*r; m])?
        }
        ShapeSpec::Ellipse { a, b, phi } => {
            if !(*a > 0.0 && *b > 0.0) {
                return Err(Error::InvalidShape(format!(
                    "ellipse semi-axes must be positive, got a={a}, b={b}"
                )));
            }
            let rho = (0..m)
                .map(|j| {
                    let psi = 2.0 * std::f64::consts::PI * j as f64 / m as f64 - phi;
                    a * b / ((b * psi.cos()).powi(2) + (a * psi.sin()).powi(2)).sqrt()
                })
                .collect();
            StarBody::from_rho(Vec2::ZERO, rho)?
        }
        ShapeSpec::RoundedPolygon { vertices, corner_radius } => {
            rounded_polygon(vertices, *corner_radius, m)?
        }
    };
    if !body.is_convex(CONVEX_TOL) {
        return Err(Error::NotConvex { worst: body.convexity_margin() });
    }
    Ok(body)
}

fn rounded_polygon(vertices: &[Vec2], corner_radius: f64, m: usize) -> Result<StarBody> {
    if vertices.len() < 3 {
        return Err(Error::InvalidShape("polygon needs at least 3 vertices".into()));
    }
    if !(corner_radius > 0.0) {
        return Err(Error::InvalidShape(
            "corner_radius must be positive: a sharp corner violates the interior ball condition"
                .into(),
        ));
    }
    let mut verts: Vec<Vec2> = vertices.to_vec();
    if polygon_area(&verts) < 0.0 {
        verts.reverse();
    }
    let n = verts.len();
    for k in 0..n {
        let e0 = verts[k] - verts[(k + n - 1) % n];
        let e1 = verts[(k + 1) % n] - verts[k];
        if e0.cross(e1) <= 1e-12 * e0.norm() * e1.norm() {
            return Err(Error::InvalidShape("vertex list is not strictly convex".into()));
        }
    }

    // Edges moved inward by the corner radius; their intersections are the
    // vertices of the inner polygon whose Minkowski sum with the radius-rc
    // disk is the rounded body.
    let outward: Vec<Vec2> = (0..n)
        .map(|k| {
            let e = verts[(k + 1) % n] - verts[k];
            Vec2::new(e.y, -e.x).normalized()
        })
        .collect();
    let mut inner: Vec<Vec2> = Vec::with_capacity(n);
    for k in 0..n {
        let kp = (k + n - 1) % n;
        // Intersection of the two inward-shifted edge lines at vertex k.
        let (n0, n1) = (outward[kp], outward[k]);
        let (o0, o1) = (
            n0.dot(verts[k]) - corner_radius,
            n1.dot(verts[k]) - corner_radius,
        );
        let det = n0.x * n1.y - n0.y * n1.x;
        if det.abs() < 1e-14 {
            return Err(Error::InvalidShape("degenerate corner in polygon".into()));
        }
        inner.push(Vec2::new((o0 * n1.y - o1 * n0.y) / det, (n0.x * o1 - n1.x * o0) / det));
    }
    if polygon_area(&inner) <= 0.0 || !polygon_is_convex(&inner) {
        return Err(Error::InvalidShape(
            "corner_radius too large: inward offset empties the polygon".into(),
        ));
    }

    let center = polygon_centroid(&verts);
    if !point_in_convex_polygon(center, &inner) {
        return Err(Error::InvalidShape("centroid leaves the offset polygon".into()));
    }

    let hi0 = verts.iter().map(|v| (*v - center).norm()).fold(0.0f64, f64::max) + corner_radius;
    let rho = (0..m)
        .map(|j| {
            let d = Vec2::unit(2.0 * std::f64::consts::PI * j as f64 / m as f64);
            // Largest t with dist(center + t d, inner polygon) <= rc.
            let inside = |t: f64| dist_to_convex_polygon(center + t * d, &inner) <= corner_radius;
            let (mut lo, mut hi) = (0.0, hi0);
            debug_assert!(inside(lo) && !inside(hi));
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    StarBody::from_rho(center, rho)
}

impl StarBody {
    pub fn from_rho(center: Vec2, rho: Vec<f64>) -> Result<Self> {
        if rho.len() < MIN_ANGLES {
            return Err(Error::InvalidBody(format!(
                "angular resolution {} below minimum {MIN_ANGLES}",
                rho.len()
            )));
        }
        if let Some(j) = rho.iter().position(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidBody(format!("non-positive radius at index {j}")));
        }
        Ok(StarBody { center, rho })
    }

    pub fn disk(center: Vec2, r: f64, m: usize) -> Result<Self> {
        Self::from_rho(center, vec![r; m])
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn m(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.m() as f64
    }

    /// Boundary sample at angle index `j`.
    pub fn point(&self, j: usize) -> Vec2 {
        self.center + self.rho[j] * Vec2::unit(self.theta(j))
    }

    pub fn boundary_points(&self) -> Vec<Vec2> {
        (0..self.m()).map(|j| self.point(j)).collect()
    }

    /// Largest sampled distance from the base point to the boundary.
    pub fn circumradius(&self) -> f64 {
        self.rho.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_radius(&self) -> f64 {
        self.rho.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Dilation about the base point.
    pub fn scaled(&self, s: f64) -> StarBody {
        StarBody { center: self.center, rho: self.rho.iter().map(|r| r * s).collect() }
    }

    /// Exact rotation by `k` grid steps (2 pi k / M): an index shift.
    pub fn rotated_grid(&self, k: i64) -> StarBody {
        let m = self.m() as i64;
        let rho = (0..m)
            .map(|j| self.rho[((j - k).rem_euclid(m)) as usize])
            .collect();
        StarBody { center: self.center, rho }
    }

    /// Mean boundary edge length of the sampled polygon.
    pub fn mean_edge_length(&self) -> f64 {
        let pts = self.boundary_points();
        let m = pts.len();
        (0..m).map(|j| (pts[(j + 1) % m] - pts[j]).norm()).sum::<f64>() / m as f64
    }

    /// Most negative cross product of consecutive boundary edges,
    /// normalized by the squared mean edge length.
    pub fn convexity_margin(&self) -> f64 {
        let pts = self.boundary_points();
        let m = pts.len();
        let l2 = self.mean_edge_length().powi(2);
        let mut worst = f64::INFINITY;
        for j in 0..m {
            let e0 = pts[(j + 1) % m] - pts[j];
            let e1 = pts[(j + 2) % m] - pts[(j + 1) % m];
            worst = worst.min(e0.cross(e1) / l2);
        }
        worst
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.convexity_margin() >= -tol
    }

    /// Radial projection onto the convex hull of the boundary samples,
    /// about the same base point. Idempotent and extensive.
    pub fn convexify(&self) -> StarBody {
        let hull = convex_hull(&self.boundary_points());
        let rho = (0..self.m())
            .map(|j| {
                let d = Vec2::unit(self.theta(j));
                ray_polygon_distance(self.center, d, &hull).unwrap_or(self.rho[j])
            })
            .collect();
        StarBody { center: self.center, rho }
    }

    /// Resample the boundary as a radial graph about a new base point.
    /// Intended for convex bodies whose interior contains `new_center`.
    pub fn resampled(&self, new_center: Vec2, m: usize) -> Result<StarBody> {
        let pts = self.boundary_points();
        let mut rho = Vec::with_capacity(m);
        for j in 0..m {
            let d = Vec2::unit(2.0 * std::f64::consts::PI * j as f64 / m as f64);
            match ray_polygon_distance(new_center, d, &pts) {
                Some(t) if t > 0.0 => rho.push(t),
                _ => {
                    return Err(Error::InvalidBody(
                        "resample center is not interior to the body".into(),
                    ))
                }
            }
        }
        StarBody::from_rho(new_center, rho)
    }

    /// Supporting half-plane at boundary sample `j`, normal pointing away
    /// from the body.
    pub fn supporting_halfplane(&self, j: usize) -> Result<HalfPlane> {
        if !self.is_convex(CONVEX_TOL) {
            return Err(Error::NotConvex { worst: self.convexity_margin() });
        }
        let m = self.m();
        let x = self.point(j);
        let chord = self.point((j + 1) % m) - self.point((j + m - 1) % m);
        let normal = Vec2::new(chord.y, -chord.x).normalized();
        Ok(HalfPlane { point: x, normal })
    }

    /// Signed clearance of a point: positive inside, negative outside,
    /// magnitude the distance to the boundary polyline.
    pub fn clearance(&self, x: Vec2) -> f64 {
        let pts = self.boundary_points();
        let d = dist_to_polyline(x, &pts);
        if point_in_polygon(x, &pts) {
            d
        } else {
            -d
        }
    }

    /// Area of the sampled boundary polygon.
    pub fn polygon_area(&self) -> f64 {
        polygon_area(&self.boundary_points())
    }
}

/// `true` iff every boundary sample of `inner` lies inside `outer` with
/// clearance at least `margin` (which may be negative).
pub fn contains(outer: &StarBody, inner: &StarBody, margin: f64) -> bool {
    inner.boundary_points().iter().all(|&x| outer.clearance(x) >= margin)
}

/// Index on the boundary of `omega` matched to the boundary sample `j` of
/// `k` through the supporting-normal construction: the sample of `omega`
/// maximizing `a . (z - x)` over `a . (z - x) > 0`.
pub fn matched_index(k: &StarBody, omega: &StarBody, j: usize) -> Result<usize> {
    if !contains(omega, k, 0.0) {
        return Err(Error::NotContained);
    }
    let plane = k.supporting_halfplane(j)?;
    let x = plane.point;
    let a = plane.normal;
    let mut best = None;
    let mut best_val = 0.0;
    for (idx, z) in omega.boundary_points().into_iter().enumerate() {
        let v = a.dot(z - x);
        if v > best_val {
            best_val = v;
            best = Some(idx);
        }
    }
    best.ok_or(Error::NotContained)
}

/// Matched boundary point itself; see [`matched_index`].
pub fn matched_point(k: &StarBody, omega: &StarBody, j: usize) -> Result<Vec2> {
    Ok(omega.point(matched_index(k, omega, j)?))
}

/// Pointwise-minimum intersection of two bodies about a common base point.
/// Re-centers the second body if needed; convexifies away sampling noise.
pub fn intersect(b1: &StarBody, b2: &StarBody) -> Result<StarBody> {
    let scale = b1.circumradius().max(b2.circumradius());
    let b2 = if (b1.center() - b2.center()).norm() > 1e-12 * scale || b1.m() != b2.m() {
        b2.resampled(b1.center(), b1.m())?
    } else {
        b2.clone()
    };
    let rho: Vec<f64> = b1.rho.iter().zip(&b2.rho).map(|(a, b)| a.min(*b)).collect();
    if rho.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::EmptyInterior);
    }
    let body = StarBody { center: b1.center, rho };
    if body.is_convex(CONVEX_TOL) {
        Ok(body)
    } else {
        Ok(body.convexify())
    }
}

/// Cut a body by a half-plane, keeping the side containing the center.
pub fn trim_halfplane(body: &StarBody, plane: &HalfPlane) -> Result<StarBody> {
    if plane.signed(body.center()) >= 0.0 {
        return Err(Error::CenterCut);
    }
    let offset = plane.normal.dot(plane.point - body.center());
    debug_assert!(offset > 0.0);
    let rho = (0..body.m())
        .map(|j| {
            let d = Vec2::unit(body.theta(j));
            let denom = plane.normal.dot(d);
            if denom > 1e-14 {
                body.rho[j].min(offset / denom)
            } else {
                body.rho[j]
            }
        })
        .collect::<Vec<_>>();
    if rho.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::EmptyInterior);
    }
    Ok(StarBody { center: body.center, rho })
}

/// Largest radius delta such that every boundary sample is touched by a
/// ball of radius delta contained in the body. Computed per sample by
/// bisection along inward directions near the normal, against the sampled
/// boundary; the small direction fan absorbs the O(h) normal tilt at
/// curvature jumps.
pub fn interior_ball_radius(body: &StarBody) -> Result<f64> {
    if !body.is_convex(CONVEX_TOL) {
        return Err(Error::NotConvex { worst: body.convexity_margin() });
    }
    let pts = body.boundary_points();
    let scale = body.circumradius();
    let slack = 1e-11 * scale;
    let h_t = 2.0 * std::f64::consts::PI / body.m() as f64;
    // Maximal radius of a sample-free tangent ball at x along `inward`.
    let ball_radius = |x: Vec2, inward: Vec2| -> f64 {
        let ok = |r: f64| -> bool {
            let z = x + r * inward;
            pts.iter().all(|&p| (p - z).norm_sq() >= (r - slack) * (r - slack))
        };
        let (mut lo, mut hi) = (0.0, 2.0 * scale);
        if ok(hi) {
            return hi;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let mut delta = f64::INFINITY;
    for j in 0..body.m() {
        let plane = body.supporting_halfplane(j)?;
        let x = pts[j];
        // Coarse fan around the inward normal, then a refined fan around
        // the best coarse direction.
        let mut best = (0.0f64, 0.0f64);
        for k in -6i32..=6 {
            let phi = k as f64 * h_t;
            let r = ball_radius(x, (-plane.normal).rotated(phi));
            if r > best.0 {
                best = (r, phi);
            }
        }
        for k in -7i32..=7 {
            let phi = best.1 + k as f64 * h_t / 8.0;
            let r = ball_radius(x, (-plane.normal).rotated(phi));
            if r > best.0 {
                best = (r, phi);
            }
        }
        delta = delta.min(best.0);
    }
    Ok(delta)
}

/// Symmetric Hausdorff distance between the two boundary polylines.
pub fn hausdorff_distance(b1: &StarBody, b2: &StarBody) -> f64 {
    let p1 = b1.boundary_points();
    let p2 = b2.boundary_points();
    let d12 = p1.iter().map(|&x| dist_to_polyline(x, &p2)).fold(0.0f64, f64::max);
    let d21 = p2.iter().map(|&x| dist_to_polyline(x, &p1)).fold(0.0f64, f64::max);
    d12.max(d21)
}

// ---------------------------------------------------------------------------
// polygon primitives

pub(crate) fn polygon_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|k| pts[k].cross(pts[(k + 1) % n])).sum::<f64>()
}

pub(crate) fn polygon_centroid(pts: &[Vec2]) -> Vec2 {
    let n = pts.len();
    let a = polygon_area(pts);
    let mut cx = 0.0;
    let mut cy = 0.0;
    for k in 0..n {
        let (p, q) = (pts[k], pts[(k + 1) % n]);
        let w = p.cross(q);
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Vec2::new(cx / (6.0 * a), cy / (6.0 * a))
}

fn polygon_is_convex(pts: &[Vec2]) -> bool {
    let n = pts.len();
    (0..n).all(|k| {
        let e0 = pts[(k + 1) % n] - pts[k];
        let e1 = pts[(k + 2) % n] - pts[(k + 1) % n];
        e0.cross(e1) > 0.0
    })
}

fn point_in_convex_polygon(x: Vec2, pts: &[Vec2]) -> bool {
    let n = pts.len();
    (0..n).all(|k| (pts[(k + 1) % n] - pts[k]).cross(x - pts[k]) >= 0.0)
}

/// Crossing-number test; robust for mildly non-convex polygons.
fn point_in_polygon(x: Vec2, pts: &[Vec2]) -> bool {
    let n = pts.len();
    let mut inside = false;
    for k in 0..n {
        let (p, q) = (pts[k], pts[(k + 1) % n]);
        if (p.y > x.y) != (q.y > x.y) {
            let t = (x.y - p.y) / (q.y - p.y);
            if p.x + t * (q.x - p.x) > x.x {
                inside = !inside;
            }
        }
    }
    inside
}

fn dist_point_segment(x: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let t = ((x - a).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
    (x - (a + t * e)).norm()
}

fn dist_to_polyline(x: Vec2, pts: &[Vec2]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|k| dist_point_segment(x, pts[k], pts[(k + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean distance from a point to a convex polygon (zero inside).
fn dist_to_convex_polygon(x: Vec2, pts: &[Vec2]) -> f64 {
    if point_in_convex_polygon(x, pts) {
        0.0
    } else {
        dist_to_polyline(x, pts)
    }
}

/// Andrew's monotone chain; returns the hull in counter-clockwise order.
pub(crate) fn convex_hull(pts: &[Vec2]) -> Vec<Vec2> {
    let mut p: Vec<Vec2> = pts.to_vec();
    p.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    p.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if p.len() < 3 {
        return p;
    }
    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut lower: Vec<Vec2> = Vec::with_capacity(p.len());
    for &pt in &p {
        while lower.len() >= 2
            && turn(lower[lower.len() - 2], lower[lower.len() - 1], pt) <= 0.0
        {
            lower.pop();
        }
        lower.push(pt);
    }
    let mut upper: Vec<Vec2> = Vec::with_capacity(p.len());
    for &pt in p.iter().rev() {
        while upper.len() >= 2
            && turn(upper[upper.len() - 2], upper[upper.len() - 1], pt) <= 0.0
        {
            upper.pop();
        }
        upper.push(pt);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance along the ray `origin + t dir` to the boundary of a polygon
/// with `origin` in its interior. Returns the outermost crossing.
fn ray_polygon_distance(origin: Vec2, dir: Vec2, pts: &[Vec2]) -> Option<f64> {
    let n = pts.len();
    let mut best: Option<f64> = None;
    for k in 0..n {
        let a = pts[k];
        let e = pts[(k + 1) % n] - a;
        let det = dir.x * (-e.y) - dir.y * (-e.x);
        if det.abs() < 1e-300 {
            continue;
        }
        let rhs = a - origin;
        let t = (rhs.x * (-e.y) - rhs.y * (-e.x)) / det;
        let s = (dir.x * rhs.y - dir.y * rhs.x) / det;
        if t > 0.0 && (-1e-9..=1.0 + 1e-9).contains(&s) {
            best = Some(best.map_or(t, |b: f64| b.max(t)));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn disk(r: f64, m: usize) -> StarBody {
        make_body(&ShapeSpec::Disk { r }, m).unwrap()
    }

    fn ellipse(a: f64, b: f64, phi: f64, m: usize) -> StarBody {
        make_body(&ShapeSpec::Ellipse { a, b, phi }, m).unwrap()
    }

    fn rounded_square(rc: f64, m: usize) -> StarBody {
        let verts = vec![
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
        ];
        make_body(&ShapeSpec::RoundedPolygon { vertices: verts, corner_radius: rc }, m).unwrap()
    }

    /// Rasterized membership oracle on a fine grid.
    fn raster_area(body: &StarBody, half_extent: f64, cells: usize) -> f64 {
        let h = 2.0 * half_extent / cells as f64;
        let mut count = 0usize;
        for iy in 0..cells {
            for ix in 0..cells {
                let x = Vec2::new(
                    -half_extent + (ix as f64 + 0.5) * h,
                    -half_extent + (iy as f64 + 0.5) * h,
                ) + body.center();
                if body.clearance(x) > 0.0 {
                    count += 1;
                }
            }
        }
        count as f64 * h * h
    }

    #[test]
    fn disk_is_constant_rho() {
        let d = disk(1.0, 64);
        assert!(d.rho().iter().all(|&r| r == 1.0));
        assert!(d.is_convex(CONVEX_TOL));
    }

    #[test]
    fn ellipse_polar_form() {
        let e = ellipse(2.0, 1.0, 0.0, 256);
        assert_relative_eq!(e.rho()[0], 2.0, max_relative = 1e-14);
        assert_relative_eq!(e.rho()[64], 1.0, max_relative = 1e-14);
        assert!(e.is_convex(CONVEX_TOL));
        assert!(ellipse(3.0, 1.0, 0.7, 256).is_convex(CONVEX_TOL));
    }

    #[test]
    fn rounded_polygon_needs_positive_radius() {
        let verts = vec![
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
        ];
        let err = make_body(
            &ShapeSpec::RoundedPolygon { vertices: verts.clone(), corner_radius: 0.0 },
            64,
        )
        .unwrap_err();
        assert!(err.to_string().contains("interior ball"));

        let nonconvex = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(0.5, 0.5),
            Vec2::new(0.0, 2.0),
        ];
        assert!(make_body(
            &ShapeSpec::RoundedPolygon { vertices: nonconvex, corner_radius: 0.1 },
            64
        )
        .is_err());
    }

    #[test]
    fn rounded_square_geometry() {
        let b = rounded_square(0.2, 256);
        assert!(b.is_convex(CONVEX_TOL));
        // Width 2 along the axes, sqrt(2)*(1-0.2)+0.2... along diagonals:
        // axis radius is 1, diagonal radius is 0.8*sqrt(2)+0.2.
        assert_relative_eq!(b.rho()[0], 1.0, max_relative = 1e-9);
        assert_relative_eq!(b.rho()[32], 0.8 * 2f64.sqrt() + 0.2, max_relative = 1e-9);
        // Interior ball condition is bound by the corner arcs.
        let r = interior_ball_radius(&b).unwrap();
        assert!((r - 0.2).abs() < 0.01, "corner arc radius, got {r}");
        // Brute-force membership confirms the corner arc: points just
        // outside the arc are excluded, points inside are included.
        let arc_center = Vec2::new(0.8, 0.8);
        assert!(b.clearance(arc_center + 0.19 * Vec2::unit(0.7854)) > 0.0);
        assert!(b.clearance(arc_center + 0.21 * Vec2::unit(0.7854)) < 0.0);
    }

    #[test]
    fn dent_is_not_convex() {
        let mut rho = vec![1.0; 256];
        rho[0] = 0.5;
        let b = StarBody::from_rho(Vec2::ZERO, rho).unwrap();
        assert!(!b.is_convex(CONVEX_TOL));
    }

    #[test]
    fn convexify_restores_dent() {
        let mut rho = vec![1.0; 256];
        rho[0] = 0.5;
        let b = StarBody::from_rho(Vec2::ZERO, rho).unwrap();
        let c = b.convexify();
        assert!(c.is_convex(CONVEX_TOL));
        assert!(c.rho()[0] >= 0.99, "chord interpolation fills the dent: {}", c.rho()[0]);
        assert!(contains(&c, &b, -1e-12));
    }

    #[test]
    fn convexify_fixed_on_convex_input() {
        let e = ellipse(2.0, 1.0, 0.3, 256);
        let c = e.convexify();
        for j in 0..e.m() {
            assert_relative_eq!(c.rho()[j], e.rho()[j], max_relative = 1e-10);
        }
    }

    #[test]
    fn convexify_spike_is_hull() {
        // Two-point spike body: hull is the polygon through extreme points.
        let mut rho = vec![0.5; 128];
        rho[0] = 2.0;
        rho[64] = 2.0;
        let b = StarBody::from_rho(Vec2::ZERO, rho).unwrap();
        let c = b.convexify();
        assert!(c.is_convex(CONVEX_TOL));
        // Brute-force hull of the sample points must contain c's samples
        // and vice versa.
        let hull = convex_hull(&b.boundary_points());
        for p in c.boundary_points() {
            assert!(dist_to_polyline(p, &hull) < 1e-9);
        }
    }

    #[test]
    fn supporting_halfplane_disk_and_ellipse() {
        let d = disk(1.0, 256);
        for j in [0, 17, 100] {
            let hp = d.supporting_halfplane(j).unwrap();
            let x = d.point(j);
            assert_relative_eq!(hp.normal.dot(x.normalized()), 1.0, max_relative = 1e-6);
        }
        let e = ellipse(2.0, 1.0, 0.0, 256);
        let hp = e.supporting_halfplane(0).unwrap();
        assert_relative_eq!(hp.normal.x, 1.0, max_relative = 1e-9);
        assert!(hp.normal.y.abs() < 1e-9);
        assert_relative_eq!(hp.point.x, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn supporting_halfplane_supports_all_samples() {
        for body in [disk(1.5, 128), ellipse(2.0, 1.0, 0.4, 128), rounded_square(0.3, 128)] {
            let tol = CONVEX_TOL * body.mean_edge_length().powi(2);
            for j in 0..body.m() {
                let hp = body.supporting_halfplane(j).unwrap();
                for p in body.boundary_points() {
                    assert!(hp.signed(p) <= tol, "j={j}");
                }
            }
        }
    }

    #[test]
    fn rounded_square_flat_side_normal() {
        let b = rounded_square(0.2, 256);
        // theta = 0 hits the middle of the right flat side.
        let hp = b.supporting_halfplane(0).unwrap();
        assert_relative_eq!(hp.normal.x, 1.0, max_relative = 1e-9);
        // Max of n.x over the boundary is attained along that side.
        let mx = b
            .boundary_points()
            .iter()
            .map(|p| hp.normal.dot(*p))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(mx, hp.normal.dot(hp.point), epsilon = 1e-10);
    }

    #[test]
    fn matched_point_concentric_disks() {
        let k = disk(1.0, 256);
        let o = disk(2.0, 256);
        for j in [0, 31, 200] {
            let y = matched_point(&k, &o, j).unwrap();
            let x = k.point(j);
            assert_relative_eq!((y - 2.0 * x).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn matched_point_offset_disk() {
        let k = disk(1.0, 256);
        let o = StarBody::disk(Vec2::new(0.5, 0.0), 3.0, 256)
            .unwrap()
            .resampled(Vec2::ZERO, 256)
            .unwrap();
        let y = matched_point(&k, &o, 0).unwrap();
        assert_relative_eq!(y.x, 3.5, max_relative = 1e-4);
        assert!(y.y.abs() < 0.05);
    }

    #[test]
    fn matched_point_ellipse_in_disk() {
        let k = ellipse(2.0, 1.0, 0.0, 256);
        let o = disk(4.0, 256);
        let y = matched_point(&k, &o, 64).unwrap();
        assert_relative_eq!(y.y, 4.0, max_relative = 1e-6);
        assert!(y.x.abs() < 0.1);
    }

    #[test]
    fn matched_point_requires_containment() {
        let k = disk(2.0, 128);
        let o = disk(1.0, 128);
        assert!(matched_point(&k, &o, 0).is_err());
    }

    #[test]
    fn intersect_disks_and_symmetry() {
        let a = disk(1.0, 128);
        let b = disk(2.0, 128);
        let i = intersect(&a, &b).unwrap();
        assert!(i.rho().iter().all(|&r| (r - 1.0).abs() < 1e-12));

        let e1 = ellipse(2.0, 1.0, 0.0, 256);
        let e2 = ellipse(1.0, 2.0, 0.0, 256);
        let i = intersect(&e1, &e2).unwrap();
        assert_relative_eq!(i.rho()[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(i.rho()[32], i.rho()[96], max_relative = 1e-10);
    }

    #[test]
    fn intersect_matches_rasterized_oracle() {
        let e1 = ellipse(2.0, 1.0, 0.5, 256);
        let e2 = ellipse(1.8, 1.1, -0.4, 256);
        let i = intersect(&e1, &e2).unwrap();
        let cell = 4.0 / 400.0;
        for iy in 0..400 {
            for ix in 0..400 {
                let x = Vec2::new(-2.0 + (ix as f64 + 0.5) * cell, -2.0 + (iy as f64 + 0.5) * cell);
                let in_both = e1.clearance(x) > cell && e2.clearance(x) > cell;
                if in_both {
                    assert!(
                        i.clearance(x) > -cell,
                        "point {x:?} in both inputs missing from intersection"
                    );
                }
                if i.clearance(x) > cell {
                    assert!(e1.clearance(x) > -cell && e2.clearance(x) > -cell);
                }
            }
        }
    }

    #[test]
    fn trim_disk_by_vertical_plane() {
        let d = disk(2.0, 256);
        let plane = HalfPlane { point: Vec2::new(1.0, 0.0), normal: Vec2::new(1.0, 0.0) };
        let t = trim_halfplane(&d, &plane).unwrap();
        for j in 0..t.m() {
            let th = t.theta(j);
            let expect = if th.cos() > 0.5 { 1.0 / th.cos() } else { 2.0 };
            assert_relative_eq!(t.rho()[j], expect.min(2.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn trim_outside_is_noop() {
        let d = disk(1.0, 128);
        let plane = HalfPlane { point: Vec2::new(5.0, 0.0), normal: Vec2::new(1.0, 0.0) };
        let t = trim_halfplane(&d, &plane).unwrap();
        assert_eq!(t.rho(), d.rho());
    }

    #[test]
    fn trim_center_cut_rejected() {
        let d = disk(1.0, 128);
        let plane = HalfPlane { point: Vec2::new(-0.5, 0.0), normal: Vec2::new(1.0, 0.0) };
        assert!(matches!(trim_halfplane(&d, &plane), Err(Error::CenterCut)));
    }

    #[test]
    fn trim_area_matches_segment_formula() {
        let d = disk(1.0, 512);
        let plane = HalfPlane { point: Vec2::new(0.0, 0.5), normal: Vec2::new(0.0, 1.0) };
        let t = trim_halfplane(&d, &plane).unwrap();
        let exact = std::f64::consts::PI - (0.5f64.acos() - 0.5 * 0.75f64.sqrt());
        assert_relative_eq!(t.polygon_area(), exact, max_relative = 0.01);
        assert_relative_eq!(raster_area(&t, 1.1, 500), exact, max_relative = 0.01);
    }

    #[test]
    fn trims_never_grow_and_commute() {
        let d = ellipse(2.0, 1.5, 0.2, 128);
        let p1 = HalfPlane { point: Vec2::new(1.2, 0.0), normal: Vec2::new(1.0, 0.0) };
        let p2 = HalfPlane {
            point: Vec2::new(0.0, 0.9),
            normal: Vec2::new(0.2, 1.0).normalized(),
        };
        let a = trim_halfplane(&trim_halfplane(&d, &p1).unwrap(), &p2).unwrap();
        let b = trim_halfplane(&trim_halfplane(&d, &p2).unwrap(), &p1).unwrap();
        for j in 0..a.m() {
            assert!(a.rho()[j] <= d.rho()[j] + 1e-14);
            assert_relative_eq!(a.rho()[j], b.rho()[j], max_relative = 1e-12);
        }
    }

    #[test]
    fn interior_ball_of_disk_is_exact() {
        for m in [64, 256] {
            let r = interior_ball_radius(&disk(1.0, m)).unwrap();
            assert_relative_eq!(r, 1.0, max_relative = 1e-9);
        }
        let r = interior_ball_radius(&disk(3.5, 128)).unwrap();
        assert_relative_eq!(r, 3.5, max_relative = 1e-9);
    }

    #[test]
    fn interior_ball_of_ellipse_is_curvature_radius() {
        // Osculating radius at the flat end: b^2/a = 0.5.
        let r = interior_ball_radius(&ellipse(2.0, 1.0, 0.0, 256)).unwrap();
        assert!((r - 0.5).abs() < 0.02, "got {r}");
    }

    #[test]
    fn interior_ball_scales_linearly() {
        let b = ellipse(2.0, 1.0, 0.4, 128);
        let r1 = interior_ball_radius(&b).unwrap();
        let r3 = interior_ball_radius(&b.scaled(3.0)).unwrap();
        assert_relative_eq!(r3, 3.0 * r1, max_relative = 1e-9);
    }

    #[test]
    fn hausdorff_examples() {
        let a = disk(1.0, 256);
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
        let b = disk(1.5, 256);
        assert_relative_eq!(hausdorff_distance(&a, &b), 0.5, max_relative = 1e-4);
        let c = StarBody::disk(Vec2::new(0.3, 0.0), 1.0, 256).unwrap();
        assert_relative_eq!(hausdorff_distance(&a, &c), 0.3, max_relative = 1e-3);
    }

    #[test]
    fn contains_with_margins() {
        assert!(contains(&disk(2.0, 128), &disk(1.0, 128), 0.5));
        assert!(!contains(&disk(2.0, 128), &disk(1.9, 128), 0.2));
        assert!(contains(&ellipse(2.0, 1.0, 0.0, 128), &disk(0.9, 128), 0.0));
    }

    #[test]
    fn resample_recenters() {
        let d = disk(2.0, 128);
        let r = d.resampled(Vec2::new(0.5, 0.0), 128).unwrap();
        // Boundary unchanged as a point set up to chord sagitta: every
        // resampled point lies on the original boundary polygon.
        for p in r.boundary_points() {
            assert_relative_eq!(p.norm(), 2.0, max_relative = 1e-3);
        }
        assert!(d.resampled(Vec2::new(5.0, 0.0), 128).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn convexify_idempotent_extensive(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rho: Vec<f64> = (0..128).map(|_| rng.gen_range(0.5..2.0)).collect();
            let b = StarBody::from_rho(Vec2::ZERO, rho).unwrap();
            let c1 = b.convexify();
            let c2 = c1.convexify();
            prop_assert!(c1.is_convex(CONVEX_TOL));
            for j in 0..b.m() {
                prop_assert!((c1.rho()[j] - c2.rho()[j]).abs() < 1e-9);
                prop_assert!(c1.rho()[j] >= b.rho()[j] - 1e-9);
            }
        }

        #[test]
        fn intersect_commutes_and_shrinks(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = make_body(&ShapeSpec::Ellipse {
                a: rng.gen_range(1.0..2.0),
                b: rng.gen_range(1.0..2.0),
                phi: rng.gen_range(0.0..3.0),
            }, 128).unwrap();
            let b = make_body(&ShapeSpec::Ellipse {
                a: rng.gen_range(1.0..2.0),
                b: rng.gen_range(1.0..2.0),
                phi: rng.gen_range(0.0..3.0),
            }, 128).unwrap();
            let i1 = intersect(&a, &b).unwrap();
            let i2 = intersect(&b, &a).unwrap();
            for j in 0..i1.m() {
                prop_assert!((i1.rho()[j] - i2.rho()[j]).abs() < 1e-10);
            }
            prop_assert!(contains(&a, &i1, -1e-9));
            let ii = intersect(&i1, &i1).unwrap();
            for j in 0..i1.m() {
                prop_assert!((ii.rho()[j] - i1.rho()[j]).abs() < 1e-10);
            }
        }

        #[test]
        fn hausdorff_is_a_metric(s1 in 0.5f64..2.0, s2 in 0.5f64..2.0, s3 in 0.5f64..2.0) {
            let b1 = make_body(&ShapeSpec::Ellipse { a: s1, b: 1.0, phi: 0.1 }, 64).unwrap();
            let b2 = make_body(&ShapeSpec::Ellipse { a: 1.0, b: s2, phi: 0.9 }, 64).unwrap();
            let b3 = make_body(&ShapeSpec::Disk { r: s3 }, 64).unwrap();
            let d12 = hausdorff_distance(&b1, &b2);
            let d21 = hausdorff_distance(&b2, &b1);
            prop_assert!((d12 - d21).abs() <= 1e-12);
            let d13 = hausdorff_distance(&b1, &b3);
            let d32 = hausdorff_distance(&b3, &b2);
            prop_assert!(d12 <= d13 + d32 + 1e-12);
        }
    }
}
