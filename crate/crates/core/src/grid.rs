//! Curvilinear grid on a convex ring Omega \ K.
//!
//! The ring is the image of the fixed rectangle (s, theta) in
//! [0,1] x [0, 2pi) under
//!
//!   x(s, theta) = center + r(s, theta) (cos theta, sin theta),
//!   r(s, theta) = rho_K(theta) + s (rho_Omega(theta) - rho_K(theta)),
//!
//! with s uniform over N+1 radial layers and theta uniform over the M
//! shared angles of the two bodies. Metric quantities of the map are
//! cached per node and per cell midpoint.

use crate::error::{Error, Result};
use crate::geometry::{contains, StarBody};
use crate::math::{Mat2, Vec2};

/// Minimal admissible ring gap, relative to the circumradius of Omega.
pub const GAP_MIN_REL: f64 = 1e-3;

/// Jacobian data of the rectangle-to-ring map at one point.
#[derive(Debug, Clone, Copy)]
pub struct MapJacobian {
    /// Columns are x_s and x_theta.
    pub x_s: Vec2,
    pub x_t: Vec2,
    pub det: f64,
}

impl MapJacobian {
    /// Physical gradient from logical derivatives: grad_x u = J^{-T} (u_s, u_t).
    pub fn to_physical(&self, u_s: f64, u_t: f64) -> Vec2 {
        Vec2::new(
            (self.x_t.y * u_s - self.x_s.y * u_t) / self.det,
            (-self.x_t.x * u_s + self.x_s.x * u_t) / self.det,
        )
    }

    /// Pullback of a symmetric coefficient matrix B into logical
    /// coordinates: G = det * J^{-1} B J^{-T}.
    pub fn pullback(&self, b: Mat2) -> Mat2 {
        let inv = Mat2::new(self.x_t.y, -self.x_t.x, -self.x_s.y, self.x_s.x)
            .scale(1.0 / self.det);
        inv.mul_mat(b).mul_mat(inv.transpose()).scale(self.det)
    }
}

#[derive(Debug, Clone)]
pub struct AnnularGrid {
    pub inner: StarBody,
    pub outer: StarBody,
    /// Radial layer count; layers are i = 0 (on the inner boundary)
    /// through i = N (on the outer boundary).
    pub n_layers: usize,
    /// Derivative of rho_K with respect to theta at the sample angles.
    drho_inner: Vec<f64>,
    drho_outer: Vec<f64>,
}

impl AnnularGrid {
    pub fn m(&self) -> usize {
        self.inner.m()
    }

    pub fn n(&self) -> usize {
        self.n_layers
    }

    pub fn h_s(&self) -> f64 {
        1.0 / self.n_layers as f64
    }

    pub fn h_t(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.m() as f64
    }

    pub fn node_count(&self) -> usize {
        (self.n_layers + 1) * self.m()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.m() + j
    }

    /// Ring width rho_Omega - rho_K at angle index j.
    pub fn gap(&self, j: usize) -> f64 {
        self.outer.rho()[j] - self.inner.rho()[j]
    }

    pub fn min_gap(&self) -> f64 {
        (0..self.m()).map(|j| self.gap(j)).fold(f64::INFINITY, f64::min)
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.inner.theta(j)
    }

    pub fn s(&self, i: usize) -> f64 {
        i as f64 / self.n_layers as f64
    }

    /// Radius r(s_i, theta_j).
    pub fn radius(&self, i: usize, j: usize) -> f64 {
        self.inner.rho()[j] + self.s(i) * self.gap(j)
    }

    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        self.inner.center() + self.radius(i, j) * Vec2::unit(self.theta(j))
    }

    /// Map Jacobian at the node (i, j).
    pub fn jacobian(&self, i: usize, j: usize) -> MapJacobian {
        let s = self.s(i);
        let th = self.theta(j);
        let r = self.radius(i, j);
        let w = self.gap(j);
        let dr_dt = self.drho_inner[j] + s * (self.drho_outer[j] - self.drho_inner[j]);
        jac_from(r, w, dr_dt, th)
    }

    /// Map Jacobian at the midpoint of cell (i+1/2, j+1/2). Midpoint
    /// values of rho and its theta-derivative come from the two adjacent
    /// samples, keeping second-order accuracy.
    pub fn jacobian_cell(&self, i: usize, j: usize) -> MapJacobian {
        let m = self.m();
        let jp = (j + 1) % m;
        let s = (i as f64 + 0.5) * self.h_s();
        let rho_in = 0.5 * (self.inner.rho()[j] + self.inner.rho()[jp]);
        let rho_out = 0.5 * (self.outer.rho()[j] + self.outer.rho()[jp]);
        let drho_in = (self.inner.rho()[jp] - self.inner.rho()[j]) / self.h_t();
        let drho_out = (self.outer.rho()[jp] - self.outer.rho()[j]) / self.h_t();
        let w = rho_out - rho_in;
        let r = rho_in + s * w;
        let dr_dt = drho_in + s * (drho_out - drho_in);
        jac_from(r, w, dr_dt, self.theta(j) + 0.5 * self.h_t())
    }

    /// Physical coordinates of the cell midpoint.
    pub fn cell_midpoint(&self, i: usize, j: usize) -> Vec2 {
        let m = self.m();
        let jp = (j + 1) % m;
        let s = (i as f64 + 0.5) * self.h_s();
        let rho_in = 0.5 * (self.inner.rho()[j] + self.inner.rho()[jp]);
        let rho_out = 0.5 * (self.outer.rho()[j] + self.outer.rho()[jp]);
        let r = rho_in + s * (rho_out - rho_in);
        self.inner.center() + r * Vec2::unit(self.theta(j) + 0.5 * self.h_t())
    }
}

fn jac_from(r: f64, w: f64, dr_dt: f64, theta: f64) -> MapJacobian {
    let d = Vec2::unit(theta);
    let dp = d.perp();
    let x_s = w * d;
    let x_t = dr_dt * d + r * dp;
    MapJacobian { x_s, x_t, det: w * r }
}

/// Build the grid, validating the no-pinch condition and the positivity
/// of the map Jacobian at every node.
pub fn build_grid(inner: &StarBody, outer: &StarBody, n_layers: usize) -> Result<AnnularGrid> {
    if n_layers < 8 {
        return Err(Error::InvalidBody(format!("need at least 8 radial layers, got {n_layers}")));
    }
    if inner.m() != outer.m() {
        return Err(Error::InvalidBody("bodies must share the angular grid".into()));
    }
    let scale = outer.circumradius();
    if (inner.center() - outer.center()).norm() > 1e-12 * scale {
        return Err(Error::InvalidBody("bodies must share the base point".into()));
    }
    let gap_min = GAP_MIN_REL * scale;
    let gap = (0..inner.m())
        .map(|j| outer.rho()[j] - inner.rho()[j])
        .fold(f64::INFINITY, f64::min);
    if gap < gap_min {
        return Err(Error::Pinched { gap, gap_min });
    }
    if !contains(outer, inner, 0.5 * gap_min) {
        return Err(Error::NotContained);
    }

    let grid = AnnularGrid {
        inner: inner.clone(),
        outer: outer.clone(),
        n_layers,
        drho_inner: dtheta(inner.rho(), inner.m()),
        drho_outer: dtheta(outer.rho(), outer.m()),
    };
    for i in 0..=n_layers {
        for j in 0..grid.m() {
            if grid.jacobian(i, j).det <= 0.0 {
                return Err(Error::BadMap { i, j });
            }
        }
    }
    Ok(grid)
}

/// Second-order periodic central difference of a sampled function of theta.
fn dtheta(rho: &[f64], m: usize) -> Vec<f64> {
    let h = 2.0 * std::f64::consts::PI / m as f64;
    (0..m)
        .map(|j| (rho[(j + 1) % m] - rho[(j + m - 1) % m]) / (2.0 * h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_body, ShapeSpec};
    use approx::assert_relative_eq;

    #[test]
    fn polar_grid_on_concentric_disks() {
        let k = make_body(&ShapeSpec::Disk { r: 1.0 }, 64).unwrap();
        let o = make_body(&ShapeSpec::Disk { r: 2.0 }, 64).unwrap();
        let g = build_grid(&k, &o, 64).unwrap();
        for i in [0, 13, 64] {
            let p = g.node(i, 0);
            assert_relative_eq!(p.x, 1.0 + i as f64 / 64.0, max_relative = 1e-14);
            assert!(p.y.abs() < 1e-14);
        }
        // Polar metric: |x_s| = width, |x_t| = r, det = w r.
        let jac = g.jacobian(32, 7);
        assert_relative_eq!(jac.x_s.norm(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(jac.x_t.norm(), 1.5, max_relative = 1e-12);
        assert_relative_eq!(jac.det, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn ellipse_ring_jacobian_positive() {
        let k = make_body(&ShapeSpec::Disk { r: 1.0 }, 128).unwrap();
        let o = make_body(&ShapeSpec::Ellipse { a: 3.0, b: 2.0, phi: 0.0 }, 128).unwrap();
        let g = build_grid(&k, &o, 48).unwrap();
        for i in 0..=48 {
            for j in 0..128 {
                assert!(g.jacobian(i, j).det > 0.0);
            }
        }
    }

    #[test]
    fn pinch_is_rejected() {
        let k = make_body(&ShapeSpec::Disk { r: 1.0 }, 64).unwrap();
        let mut rho = vec![2.0; 64];
        rho[5] = 1.0004; // touches within gap_min
        let o = StarBody::from_rho(Vec2::ZERO, rho).unwrap();
        assert!(matches!(build_grid(&k, &o, 32), Err(Error::Pinched { .. })));
    }

    #[test]
    fn physical_gradient_roundtrip() {
        // A linear function of x has exact logical derivatives through the
        // chain rule; to_physical must invert them.
        let k = make_body(&ShapeSpec::Ellipse { a: 1.0, b: 0.8, phi: 0.3 }, 128).unwrap();
        let o = make_body(&ShapeSpec::Disk { r: 3.0 }, 128).unwrap();
        let g = build_grid(&k, &o, 32).unwrap();
        let grad = Vec2::new(0.7, -1.3);
        let jac = g.jacobian(10, 40);
        let u_s = grad.dot(jac.x_s);
        let u_t = grad.dot(jac.x_t);
        let back = jac.to_physical(u_s, u_t);
        assert_relative_eq!(back.x, grad.x, max_relative = 1e-12);
        assert_relative_eq!(back.y, grad.y, max_relative = 1e-12);
    }

    #[test]
    fn pullback_is_symmetric_and_consistent() {
        let k = make_body(&ShapeSpec::Disk { r: 1.0 }, 64).unwrap();
        let o = make_body(&ShapeSpec::Ellipse { a: 2.5, b: 2.0, phi: 1.0 }, 64).unwrap();
        let g = build_grid(&k, &o, 32).unwrap();
        let jac = g.jacobian_cell(5, 11);
        let b = Mat2::new(2.0, 0.5, 0.5, 1.0);
        let gg = jac.pullback(b);
        assert_relative_eq!(gg.b, gg.c, max_relative = 1e-10);
        // Energy identity: (J^T grad_logical = physical) makes
        // gradᵀ B grad det = logicalᵀ G logical.
        let grad = Vec2::new(0.4, 1.1);
        let logical = Vec2::new(grad.dot(jac.x_s), grad.dot(jac.x_t));
        assert_relative_eq!(
            gg.quad(logical),
            b.quad(grad) * jac.det,
            max_relative = 1e-10
        );
    }
}
