//! Closed-form radial capacitary potentials and Bernoulli radii for
//! concentric balls in n dimensions. Ground truth for the 2D solver and
//! the decay-rate checks; kept n-dimensional because the radial formulas
//! cost nothing extra.

use crate::error::{Error, Result};

/// Concentric-ball ring a < r < R in dimension n with exponent p.
#[derive(Debug, Clone, Copy)]
pub struct RadialCase {
    pub p: f64,
    pub n: u32,
    pub a: f64,
    pub big_r: f64,
}

impl RadialCase {
    pub fn new(p: f64, n: u32, a: f64, big_r: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidOperator(format!("radial oracle requires p > 1, got {p}")));
        }
        if !(n >= 2) {
            return Err(Error::InvalidOperator("dimension must be >= 2".into()));
        }
        if !(big_r > a && a > 0.0) {
            return Err(Error::InvalidShape(format!("need R > a > 0, got a={a}, R={big_r}")));
        }
        Ok(RadialCase { p, n, a, big_r })
    }

    /// Radial profile exponent beta = (p-n)/(p-1); the potential is
    /// r^beta up to an affine map (log r when p = n).
    pub fn beta(&self) -> f64 {
        (self.p - self.n as f64) / (self.p - 1.0)
    }

    fn is_log_case(&self) -> bool {
        (self.p - self.n as f64).abs() < 1e-12
    }

    fn check_range(&self, r: f64) -> Result<()> {
        let slack = 1e-12 * self.big_r;
        if r < self.a - slack || r > self.big_r + slack {
            return Err(Error::RadiusOutOfRange { r, a: self.a, big_r: self.big_r });
        }
        Ok(())
    }

    /// The p-harmonic potential with u(a) = 1, u(R) = 0.
    pub fn potential(&self, r: f64) -> Result<f64> {
        self.check_range(r)?;
        if self.is_log_case() {
            Ok((self.big_r / r).ln() / (self.big_r / self.a).ln())
        } else {
            let b = self.beta();
            Ok((r.powf(b) - self.big_r.powf(b)) / (self.a.powf(b) - self.big_r.powf(b)))
        }
    }

    /// |u'(r)|; proportional to r^{(1-n)/(p-1)}.
    pub fn gradient(&self, r: f64) -> Result<f64> {
        self.check_range(r)?;
        if self.is_log_case() {
            Ok(1.0 / (r * (self.big_r / self.a).ln()))
        } else {
            let b = self.beta();
            Ok(b.abs() * r.powf(b - 1.0) / (self.a.powf(b) - self.big_r.powf(b)).abs())
        }
    }

    /// Gradient magnitude on the outer sphere r = R.
    pub fn outer_gradient(&self) -> f64 {
        self.gradient(self.big_r).expect("R is in range")
    }

    /// Gradient magnitude on the inner sphere r = a.
    pub fn inner_gradient(&self) -> f64 {
        self.gradient(self.a).expect("a is in range")
    }
}

/// Outer radius R* of the radial exterior Bernoulli solution: the unique
/// R with |u'(R)| = c. Bisection on the strictly decreasing map
/// R -> outer gradient, bracketed on [a(1+1e-9), a 2^40].
pub fn bernoulli_radius(p: f64, n: u32, a: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidShape(format!("c must be positive, got {c}")));
    }
    let g = |r: f64| -> Result<f64> {
        Ok(RadialCase::new(p, n, a, r)?.outer_gradient())
    };
    let mut lo = a * (1.0 + 1e-9);
    let mut hi = a * 2f64.powi(40);
    if !(g(lo)? > c && g(hi)? < c) {
        return Err(Error::BracketFailure);
    }
    // ~90 halvings take the 2^40-wide relative bracket below 1e-12.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > c {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_case_midpoint() {
        let c = RadialCase::new(2.0, 2, 1.0, 2.0).unwrap();
        assert_relative_eq!(c.potential(2f64.sqrt()).unwrap(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(c.potential(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(c.potential(2.0).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn p3_n2_profile() {
        // beta = (p-n)/(p-1) = 1/2: u(r) = (sqrt(r) - 2)/(1 - 2) = 2 - sqrt(r).
        let c = RadialCase::new(3.0, 2, 1.0, 4.0).unwrap();
        assert_relative_eq!(c.beta(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(c.potential(4.0).unwrap(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(c.potential(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(c.potential(2.25).unwrap(), 0.5, max_relative = 1e-13);
    }

    #[test]
    fn gradients_match_closed_forms() {
        let c2 = RadialCase::new(2.0, 2, 1.0, 2.0).unwrap();
        assert_relative_eq!(c2.gradient(2.0).unwrap(), 1.0 / (2.0 * 2f64.ln()), max_relative = 1e-13);
        assert_relative_eq!(c2.gradient(1.0).unwrap(), 1.0 / 2f64.ln(), max_relative = 1e-13);
        // |u'(2)| / |u'(1)| = (2/1)^{(1-n)/(p-1)} = 1/2.
        let ratio = c2.gradient(2.0).unwrap() / c2.gradient(1.0).unwrap();
        assert_relative_eq!(ratio, 0.5, max_relative = 1e-13);

        // p=3: u = 2 - sqrt(r), u' = -1/(2 sqrt(r)), so |u'(4)| = 1/4 and the
        // flux r |u'| u' is constant, as the radial equation requires.
        let c3 = RadialCase::new(3.0, 2, 1.0, 4.0).unwrap();
        assert_relative_eq!(c3.gradient(4.0).unwrap(), 0.25, max_relative = 1e-13);
        assert_relative_eq!(c3.gradient(1.0).unwrap(), 0.5, max_relative = 1e-13);
    }

    #[test]
    fn gradient_is_numerical_derivative() {
        for (p, n) in [(1.5, 2), (2.0, 2), (3.0, 3), (4.0, 5)] {
            let c = RadialCase::new(p, n, 0.7, 3.1).unwrap();
            let h = 1e-6;
            for r in [1.0, 1.7, 2.9] {
                let fd = (c.potential(r + h).unwrap() - c.potential(r - h).unwrap()) / (2.0 * h);
                assert_relative_eq!(c.gradient(r).unwrap(), fd.abs(), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let c = RadialCase::new(2.0, 2, 1.0, 2.0).unwrap();
        assert!(c.potential(0.5).is_err());
        assert!(c.gradient(2.5).is_err());
    }

    #[test]
    fn radial_ode_residual_second_order() {
        // Substituting the profile into a three-point discretization of
        // (r^{n-1} |u'|^{p-2} u')' = 0 must leave an O(h^2) residual.
        for (p, n) in [(2.0, 2), (3.0, 2), (2.5, 3)] {
            let c = RadialCase::new(p, n, 1.0, 2.0).unwrap();
            let resid = |h: f64| -> f64 {
                let mut worst = 0.0f64;
                let mut r = 1.0 + h;
                while r < 2.0 - 1.5 * h {
                    let flux = |rm: f64| {
                        let du = (c.potential(rm + 0.5 * h).unwrap()
                            - c.potential(rm - 0.5 * h).unwrap())
                            / h;
                        rm.powi(n as i32 - 1) * du.abs().powf(p - 2.0) * du
                    };
                    worst = worst.max(((flux(r + 0.5 * h) - flux(r - 0.5 * h)) / h).abs());
                    r += h;
                }
                worst
            };
            let r1 = resid(1e-2);
            let r2 = resid(5e-3);
            assert!(r1 / r2 > 3.0, "p={p} n={n}: {r1:.3e} vs {r2:.3e} not O(h^2)");
        }
    }

    #[test]
    fn bernoulli_radius_p2_c1() {
        let r = bernoulli_radius(2.0, 2, 1.0, 1.0).unwrap();
        assert_relative_eq!(r, 1.763222834, max_relative = 1e-8);
        // Residual of the defining equation.
        let g = RadialCase::new(2.0, 2, 1.0, r).unwrap().outer_gradient();
        assert!((g - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn bernoulli_radius_hits_two() {
        let c = 1.0 / (2.0 * 2f64.ln());
        let r = bernoulli_radius(2.0, 2, 1.0, c).unwrap();
        assert_relative_eq!(r, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn bernoulli_radius_large_c_pinches() {
        let r = bernoulli_radius(2.0, 2, 1.0, 1e6).unwrap();
        assert!(r < 1.0 + 1e-5);
    }

    #[test]
    fn bernoulli_radius_monotone_in_c_and_a() {
        let mut last = f64::INFINITY;
        for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let r = bernoulli_radius(3.0, 2, 1.0, c).unwrap();
            assert!(r < last, "R* must decrease in c");
            last = r;
        }
        let mut last = 0.0;
        for a in [0.5, 1.0, 2.0, 4.0] {
            let r = bernoulli_radius(3.0, 2, a, 1.0).unwrap();
            assert!(r > last, "R* must increase in a");
            last = r;
        }
    }

    #[test]
    fn scaling_law() {
        for (p, n) in [(2.0, 2), (3.0, 2), (2.5, 3)] {
            let base = bernoulli_radius(p, n, 1.0, 1.0).unwrap();
            for s in [0.5, 2.0, 7.0] {
                let scaled = bernoulli_radius(p, n, s, 1.0 / s).unwrap();
                assert_relative_eq!(scaled, s * base, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn decay_exponent_loglog_slope() {
        for (p, n) in [(2.0, 2), (3.0, 2), (4.0, 2), (2.0, 3), (3.0, 5)] {
            let c = RadialCase::new(p, n, 1.0, 4.0).unwrap();
            let expected = (1.0 - n as f64) / (p - 1.0);
            let r1 = 1.5;
            let r2 = 3.0;
            let slope = (c.gradient(r2).unwrap() / c.gradient(r1).unwrap()).ln() / (r2 / r1).ln();
            assert_relative_eq!(slope, expected, epsilon = 1e-10);
        }
    }
}
