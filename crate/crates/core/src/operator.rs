//! A-harmonic operator families, their Jacobians, and structure checks.
//!
//! An operator here is a vector field `A : R^2 \ {0} -> R^2` that is
//! `p-1` homogeneous and whose Jacobian is elliptic comparable to
//! `|eta|^{p-2}`. Two families are built in: the p-Laplace map
//! `A(eta) = |eta|^{p-2} eta` and an anisotropic quadratic-form variant
//! `A(eta) = (eta . Q eta)^{(p-2)/2} Q eta`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{Mat2, Vec2};
use crate::report::CheckReport;

/// Supported p range; outside it the regularized Picard iteration degrades.
pub const P_MIN: f64 = 1.2;
pub const P_MAX: f64 = 8.0;

/// Condition bound for the quadratic-form matrix Q.
pub const Q_COND_CAP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorFamily {
    PLaplace,
    QuadraticForm,
}

/// An operator in the class M_p(alpha).
#[derive(Debug, Clone, Copy)]
pub struct OperatorSpec {
    pub family: OperatorFamily,
    pub p: f64,
    /// Symmetric positive definite matrix; identity for the p-Laplace family.
    pub q: Mat2,
    /// Claimed ellipticity constant.
    pub alpha: f64,
    /// Claimed Jacobian-continuity constant.
    pub lambda_cap: f64,
}

impl OperatorSpec {
    pub fn p_laplace(p: f64) -> Result<Self> {
        let alpha = sharp_alpha_p_laplace(p);
        OperatorSpec::new(OperatorFamily::PLaplace, p, Mat2::IDENTITY, alpha, 1e3)
    }

    pub fn quadratic_form(p: f64, q: Mat2) -> Result<Self> {
        let (lo, hi) = q.sym_eigenvalues();
        let cond = hi / lo;
        let alpha = sharp_alpha_p_laplace(p) * cond.powf(1.0 + (p - 2.0).abs() / 2.0);
        OperatorSpec::new(OperatorFamily::QuadraticForm, p, q, alpha, 1e3)
    }

    pub fn new(family: OperatorFamily, p: f64, q: Mat2, alpha: f64, lambda_cap: f64) -> Result<Self> {
        if !(P_MIN..=P_MAX).contains(&p) {
            return Err(Error::InvalidOperator(format!(
                "p = {p} out of supported range [{P_MIN}, {P_MAX}]"
            )));
        }
        if (q.b - q.c).abs() > 1e-12 * q.max_abs().max(1.0) {
            return Err(Error::InvalidOperator("Q must be symmetric".into()));
        }
        let (lo, hi) = q.sym_eigenvalues();
        if lo <= 0.0 {
            return Err(Error::InvalidOperator("Q must be positive definite".into()));
        }
        if hi / lo > Q_COND_CAP {
            return Err(Error::InvalidOperator(format!(
                "Q condition number {:.3e} exceeds cap {Q_COND_CAP}",
                hi / lo
            )));
        }
        if alpha < 1.0 {
            return Err(Error::InvalidOperator("alpha must be >= 1".into()));
        }
        if lambda_cap < 1.0 {
            return Err(Error::InvalidOperator("lambda must be >= 1".into()));
        }
        Ok(OperatorSpec { family, p, q, alpha, lambda_cap })
    }

    /// True when A is a linear map (p = 2), in which case the Picard
    /// iteration converges in a single solve.
    pub fn is_linear(&self) -> bool {
        (self.p - 2.0).abs() < 1e-14
    }

    /// Conjugate the operator by a rotation: the operator of the field
    /// `eta -> Rᵀ A(R eta)`, which governs solutions composed with the
    /// rotation. The p-Laplace family is rotation invariant.
    pub fn rotated(&self, phi: f64) -> OperatorSpec {
        match self.family {
            OperatorFamily::PLaplace => *self,
            OperatorFamily::QuadraticForm => {
                let r = Mat2::rotation(phi);
                let q = r.transpose().mul_mat(self.q).mul_mat(r);
                // Symmetrize away rounding noise.
                let q = Mat2::new(q.a, 0.5 * (q.b + q.c), 0.5 * (q.b + q.c), q.d);
                OperatorSpec { q, ..*self }
            }
        }
    }
}

/// The sharp ellipticity constant of the p-Laplace map: its Jacobian has
/// eigenvalues `|eta|^{p-2}` and `(p-1)|eta|^{p-2}`.
pub fn sharp_alpha_p_laplace(p: f64) -> f64 {
    (p - 1.0).max(1.0 / (p - 1.0))
}

/// Evaluate `A(eta)`. Total on valid operators; `A(0) = 0`.
pub fn eval_a(op: &OperatorSpec, eta: Vec2) -> Vec2 {
    match op.family {
        OperatorFamily::PLaplace => {
            let n = eta.norm();
            if n == 0.0 {
                return Vec2::ZERO;
            }
            n.powf(op.p - 2.0) * eta
        }
        OperatorFamily::QuadraticForm => {
            let qeta = op.q.mul_vec(eta);
            let quad = eta.dot(qeta);
            if quad == 0.0 {
                return Vec2::ZERO;
            }
            quad.powf((op.p - 2.0) / 2.0) * qeta
        }
    }
}

/// Exact analytic Jacobian `dA_i/deta_j`. Undefined at the origin unless p = 2.
pub fn eval_jacobian(op: &OperatorSpec, eta: Vec2) -> Result<Mat2> {
    if eta.norm() == 0.0 && !op.is_linear() {
        return Err(Error::JacobianAtZero);
    }
    Ok(jacobian_inner(op, eta, 0.0))
}

/// Jacobian with `|eta|` replaced by `sqrt(|eta|^2 + delta^2)` in every
/// occurrence; uniformly elliptic for delta > 0 and converging to
/// `eval_jacobian` as delta -> 0 away from the origin.
pub fn regularized_jacobian(op: &OperatorSpec, eta: Vec2, delta: f64) -> Mat2 {
    jacobian_inner(op, eta, delta)
}

fn jacobian_inner(op: &OperatorSpec, eta: Vec2, delta: f64) -> Mat2 {
    let p = op.p;
    match op.family {
        OperatorFamily::PLaplace => {
            // J = m^{p-2} I + (p-2) m^{p-4} eta etaᵀ, m² = |eta|² + δ².
            let m2 = eta.norm_sq() + delta * delta;
            if m2 == 0.0 {
                // Only reachable with delta = 0, eta = 0, p = 2.
                return Mat2::IDENTITY;
            }
            let iso = m2.powf((p - 2.0) / 2.0);
            let rank1 = (p - 2.0) * m2.powf((p - 4.0) / 2.0);
            Mat2::IDENTITY.scale(iso).add_mat(Mat2::outer(eta, eta).scale(rank1))
        }
        OperatorFamily::QuadraticForm => {
            // J = q^{(p-2)/2} Q + (p-2) q^{(p-4)/2} (Q eta)(Q eta)ᵀ,
            // q = eta . Q eta + δ².
            let qeta = op.q.mul_vec(eta);
            let quad = eta.dot(qeta) + delta * delta;
            if quad == 0.0 {
                return op.q;
            }
            let iso = quad.powf((p - 2.0) / 2.0);
            let rank1 = (p - 2.0) * quad.powf((p - 4.0) / 2.0);
            op.q.scale(iso).add_mat(Mat2::outer(qeta, qeta).scale(rank1))
        }
    }
}

/// Outcome of the sampled structure check for one operator.
#[derive(Debug, Clone, Serialize)]
pub struct MpReport {
    /// Per-condition reports: ellipticity, homogeneity, monotonicity,
    /// jacobian continuity.
    pub conditions: Vec<CheckReport>,
    /// Worst observed `xiᵀ J(eta) xi / |eta|_Q^{p-2}` over the sample set.
    pub ellipticity_hi: f64,
    pub ellipticity_lo: f64,
    /// Empirical two-sided constant for the monotonicity display.
    pub monotonicity_constant: f64,
    /// Empirical worst-case ratio for the Jacobian-continuity display.
    pub lambda_empirical: f64,
}

impl MpReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

/// Sampled verification of the structural conditions with a claimed
/// ellipticity constant `alpha`. Deterministic: eta runs over log-spaced
/// circles of radii 2^k, k = -4..=4, with `sample_count` angles total.
pub fn check_mp(op: &OperatorSpec, alpha: f64, sample_count: usize) -> MpReport {
    let sample_count = sample_count.max(100);
    let radii: Vec<f64> = (-4..=4).map(|k| 2f64.powi(k)).collect();
    let per_circle = sample_count.div_ceil(radii.len()).max(12);
    let mut etas: Vec<Vec2> = Vec::with_capacity(radii.len() * per_circle);
    for &r in &radii {
        for a in 0..per_circle {
            // Irrational offset avoids axis-aligned-only sampling.
            let th = 2.0 * std::f64::consts::PI * (a as f64 + 0.217) / per_circle as f64;
            etas.push(r * Vec2::unit(th));
        }
    }

    // (i) two-sided ellipticity of the Jacobian quadratic form. The weight
    // |eta|^{p-2} uses the Euclidean norm, as in the class definition.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let n_xi = 16;
    for &eta in &etas {
        let jac = eval_jacobian(op, eta).expect("eta != 0");
        let w = eta.norm().powf(op.p - 2.0);
        let hat = eta.normalized();
        let mut xis: Vec<Vec2> = (0..n_xi)
            .map(|a| Vec2::unit(2.0 * std::f64::consts::PI * a as f64 / n_xi as f64))
            .collect();
        // Include the radial and tangential directions where the p-Laplace
        // extremes are attained exactly.
        xis.push(hat);
        xis.push(hat.perp());
        for xi in xis {
            let r = jac.quad(xi) / w;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    // Tiny slack for rounding in powf.
    let ell_pass = hi <= alpha * (1.0 + 1e-12) && lo >= (1.0 / alpha) * (1.0 - 1e-12);
    let ell_margin = (alpha - hi).min(lo - 1.0 / alpha);

    // (ii) homogeneity A(s eta) = s^{p-1} A(eta).
    let mut hom_worst = 0.0f64;
    for &eta in &etas {
        for s in [2.0, 0.5, 3.0] {
            let lhs = eval_a(op, s * eta);
            let rhs = s.powf(op.p - 1.0) * eval_a(op, eta);
            let rel = (lhs - rhs).norm() / rhs.norm();
            hom_worst = hom_worst.max(rel);
        }
    }
    let hom_pass = hom_worst <= 1e-12;

    // (iii) monotonicity <A(eta)-A(eta'), eta-eta'> > 0, with the empirical
    // two-sided constant of the (|eta|+|eta'|)^{p-2}|eta-eta'|^2 display.
    let mut mono_min = f64::INFINITY;
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi = 0.0f64;
    let stride = (etas.len() / 64).max(1);
    let probes: Vec<Vec2> = etas.iter().copied().step_by(stride).collect();
    for (i, &e1) in probes.iter().enumerate() {
        for &e2 in probes.iter().skip(i + 1) {
            let d = e1 - e2;
            if d.norm() < 1e-14 {
                continue;
            }
            let ip = (eval_a(op, e1) - eval_a(op, e2)).dot(d);
            mono_min = mono_min.min(ip);
            let denom = (e1.norm() + e2.norm()).powf(op.p - 2.0) * d.norm_sq();
            let ratio = ip / denom;
            ratio_lo = ratio_lo.min(ratio);
            ratio_hi = ratio_hi.max(ratio);
        }
    }
    let mono_pass = mono_min > 0.0;
    let mono_c = ratio_hi.max(1.0 / ratio_lo.max(1e-300));

    // (iv) Jacobian continuity with the claimed constant, on comparable
    // pairs satisfying |eta| <= 2 |eta'|.
    let mut lambda_emp = 0.0f64;
    for (i, &e1) in probes.iter().enumerate() {
        for &e2 in probes.iter().skip(i + 1) {
            for (eta, etap) in [(e1, e2), (e2, e1)] {
                if eta.norm() > 2.0 * etap.norm() || etap.norm() > 2.0 * eta.norm() {
                    continue;
                }
                let d = (eta - etap).norm();
                if d < 1e-14 {
                    continue;
                }
                let diff = jacobian_inner(op, eta, 0.0).sub_mat(jacobian_inner(op, etap, 0.0));
                let bound = d * eta.norm().powf(op.p - 3.0);
                lambda_emp = lambda_emp.max(diff.max_abs() / bound);
            }
        }
    }
    let jac_pass = lambda_emp <= op.lambda_cap;

    let conditions = vec![
        CheckReport::new("mp_ellipticity", ell_pass, ell_margin)
            .with_location(format!("ratio range [{lo:.6e}, {hi:.6e}]"))
            .with_meta("alpha", alpha),
        CheckReport::new("mp_homogeneity", hom_pass, 1e-12 - hom_worst)
            .with_meta("tolerance", 1e-12),
        CheckReport::new("mp_monotonicity", mono_pass, mono_min)
            .with_meta("derived_constant", mono_c),
        CheckReport::new("mp_jacobian_continuity", jac_pass, op.lambda_cap - lambda_emp)
            .with_meta("lambda_claimed", op.lambda_cap)
            .with_meta("lambda_empirical", lambda_emp),
    ];

    MpReport {
        conditions,
        ellipticity_hi: hi,
        ellipticity_lo: lo,
        monotonicity_constant: mono_c,
        lambda_empirical: lambda_emp,
    }
}
