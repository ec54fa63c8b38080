//! Nine-point stencil operator on the logical ring rectangle and a
//! preconditioned conjugate gradient solver.
//!
//! Unknowns are the interior layers i = 1..N-1 over M periodic angles.
//! The stencil is stored as nine shifted diagonals indexed by the offset
//! (di, dj) in {-1,0,1}^2, which keeps the matrix-vector product free of
//! index arithmetic beyond a periodic wrap in j.

use crate::error::{Error, Result};

/// Offsets in row-major (di, dj) order.
pub const OFFSETS: [(i64, i64); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Symmetric nine-point operator over the interior nodes.
#[derive(Debug, Clone)]
pub struct Stencil9 {
    /// Interior layer count (N - 1).
    pub rows_i: usize,
    pub m: usize,
    /// coef[k][i * m + j] multiplies u[i + di, j + dj].
    pub coef: Vec<Vec<f64>>,
}

impl Stencil9 {
    pub fn zeros(rows_i: usize, m: usize) -> Self {
        Stencil9 { rows_i, m, coef: vec![vec![0.0; rows_i * m]; 9] }
    }

    pub fn len(&self) -> usize {
        self.rows_i * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// y = A x over interior unknowns; off-grid radial neighbours are
    /// treated as zero (their Dirichlet data lives in the right-hand side).
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.m;
        for i in 0..self.rows_i {
            for j in 0..m {
                let row = i * m + j;
                let mut acc = 0.0;
                for (k, &(di, dj)) in OFFSETS.iter().enumerate() {
                    let ii = i as i64 + di;
                    if ii < 0 || ii >= self.rows_i as i64 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(m as i64) as usize;
                    acc += self.coef[k][row] * x[ii as usize * m + jj];
                }
                y[row] = acc;
            }
        }
    }

    /// Maximal symmetry defect; the assembled operator must be symmetric.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.m;
        let mut worst = 0.0f64;
        for i in 0..self.rows_i {
            for j in 0..m {
                for (k, &(di, dj)) in OFFSETS.iter().enumerate() {
                    let ii = i as i64 + di;
                    if ii < 0 || ii >= self.rows_i as i64 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(m as i64) as usize;
                    let k_t = OFFSETS.iter().position(|&o| o == (-di, -dj)).unwrap();
                    let a = self.coef[k][i * m + j];
                    let b = self.coef[k_t][ii as usize * m + jj];
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

/// Preconditioners for the conjugate gradient iteration.
pub enum Preconditioner {
    /// Diagonal (Jacobi) scaling.
    Diagonal(Vec<f64>),
    /// Tridiagonal block per angular ray: the radial couplings (di = ±1,
    /// dj = 0) of each ray are inverted exactly. Symmetric positive
    /// definite as a principal submatrix of the operator.
    RadialLines {
        rows_i: usize,
        m: usize,
        /// Prefactored LDLᵀ data per ray, radial index fastest.
        diag: Vec<f64>,
        lower: Vec<f64>,
    },
}

impl Preconditioner {
    pub fn diagonal(a: &Stencil9) -> Self {
        let d = a.coef[4].iter().map(|&v| 1.0 / v).collect();
        Preconditioner::Diagonal(d)
    }

    pub fn radial_lines(a: &Stencil9) -> Self {
        let (ri, m) = (a.rows_i, a.m);
        let mut diag = vec![0.0; ri * m];
        let mut lower = vec![0.0; ri * m];
        let k_diag = 4;
        let k_down = OFFSETS.iter().position(|&o| o == (-1, 0)).unwrap();
        for j in 0..m {
            // LDL^T factorization of the ray's tridiagonal system.
            let mut d_prev = 0.0;
            let mut l_prev = 0.0;
            for i in 0..ri {
                let a_ii = a.coef[k_diag][i * m + j];
                let a_lo = a.coef[k_down][i * m + j]; // couples to i-1
                let l = if i == 0 { 0.0 } else { a_lo / d_prev };
                let d = a_ii - l * l * d_prev;
                lower[i * m + j] = l;
                diag[i * m + j] = d;
                d_prev = d;
                l_prev = l;
            }
            let _ = l_prev;
        }
        Preconditioner::RadialLines { rows_i: ri, m, diag, lower }
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Diagonal(d) => {
                for (zi, (ri, di)) in z.iter_mut().zip(r.iter().zip(d.iter())) {
                    *zi = ri * di;
                }
            }
            Preconditioner::RadialLines { rows_i, m, diag, lower } => {
                let (ri, m) = (*rows_i, *m);
                for j in 0..m {
                    // Forward solve L y = r.
                    z[j] = r[j];
                    for i in 1..ri {
                        z[i * m + j] = r[i * m + j] - lower[i * m + j] * z[(i - 1) * m + j];
                    }
                    // Diagonal and backward solve Lᵀ x = D^{-1} y.
                    let last = (ri - 1) * m + j;
                    z[last] /= diag[last];
                    for i in (0..ri - 1).rev() {
                        z[i * m + j] =
                            z[i * m + j] / diag[i * m + j] - lower[(i + 1) * m + j] * z[(i + 1) * m + j];
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned conjugate gradient: solves A x = b to a relative
/// residual `rtol`, starting from the provided x (warm starts welcome).
pub fn pcg(
    a: &Stencil9,
    b: &[f64],
    x: &mut [f64],
    prec: &Preconditioner,
    rtol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = a.len();
    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        x.fill(0.0);
        return Ok(CgOutcome { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    prec.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let target = rtol * norm_b;
    let mut res = dot(&r, &r).sqrt();
    let mut iterations = 0;
    while res > target && iterations < max_iter {
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return Err(Error::LinearBreakdown { iters: iterations, residual: res });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        prec.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        res = dot(&r, &r).sqrt();
        iterations += 1;
    }
    if res > target {
        return Err(Error::LinearBreakdown { iters: iterations, residual: res / norm_b });
    }
    Ok(CgOutcome { iterations, residual: res / norm_b })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Standard 5-point Laplacian on the logical rectangle, periodic in j.
    fn laplacian(rows_i: usize, m: usize) -> Stencil9 {
        let mut a = Stencil9::zeros(rows_i, m);
        for i in 0..rows_i {
            for j in 0..m {
                let r = i * m + j;
                a.coef[4][r] = 4.0;
                a.coef[1][r] = -1.0;
                a.coef[7][r] = -1.0;
                a.coef[3][r] = -1.0;
                a.coef[5][r] = -1.0;
            }
        }
        a
    }

    #[test]
    fn stencil_is_symmetric() {
        assert_eq!(laplacian(12, 16).symmetry_defect(), 0.0);
    }

    #[test]
    fn pcg_solves_poisson() {
        let (ri, m) = (24, 32);
        let a = laplacian(ri, m);
        // Manufactured solution, zero beyond the radial boundary rows.
        let x_true: Vec<f64> = (0..ri * m)
            .map(|k| ((k % 7) as f64 - 3.0) * 0.1 + ((k % 13) as f64) * 0.01)
            .collect();
        let mut b = vec![0.0; ri * m];
        a.apply(&x_true, &mut b);
        for prec in [Preconditioner::diagonal(&a), Preconditioner::radial_lines(&a)] {
            let mut x = vec![0.0; ri * m];
            let out = pcg(&a, &b, &mut x, &prec, 1e-12, 10_000).unwrap();
            let err = x
                .iter()
                .zip(&x_true)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(err < 1e-8, "err {err} after {} iterations", out.iterations);
        }
    }

    #[test]
    fn radial_line_preconditioner_beats_jacobi() {
        let (ri, m) = (48, 16);
        let a = laplacian(ri, m);
        let b = vec![1.0; ri * m];
        let mut x1 = vec![0.0; ri * m];
        let it_diag = pcg(&a, &b, &mut x1, &Preconditioner::diagonal(&a), 1e-10, 100_000)
            .unwrap()
            .iterations;
        let mut x2 = vec![0.0; ri * m];
        let it_line = pcg(&a, &b, &mut x2, &Preconditioner::radial_lines(&a), 1e-10, 100_000)
            .unwrap()
            .iterations;
        assert!(it_line < it_diag, "line {it_line} vs diag {it_diag}");
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-7);
        }
    }

    #[test]
    fn warm_start_reduces_work() {
        let (ri, m) = (32, 32);
        let a = laplacian(ri, m);
        let b: Vec<f64> = (0..ri * m).map(|k| (k as f64 * 0.37).sin()).collect();
        let prec = Preconditioner::radial_lines(&a);
        let mut x = vec![0.0; ri * m];
        let cold = pcg(&a, &b, &mut x, &prec, 1e-11, 100_000).unwrap().iterations;
        let mut x2 = x.clone();
        let warm = pcg(&a, &b, &mut x2, &prec, 1e-11, 100_000).unwrap().iterations;
        assert!(warm <= 1, "warm start from the solution: {warm} vs cold {cold}");
    }
}
