//! Jacobi-type Hermitian eigensolver and SVD, plus LU solves.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Eigen-decomposition of a Hermitian matrix: `a = vectors * diag(values) * vectors†`.
/// Eigenvalues are sorted in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Rotation `J = diag(1, conj(e)) * [[c, s], [-s, c]]` that zeroes the off-diagonal
/// entry `g` of the Hermitian 2x2 block `[[app, g], [conj(g), aqq]]`.
#[derive(Clone, Copy)]
struct Rotation {
    c: f64,
    s: f64,
    e: C64,
}

impl Rotation {
    fn new(app: f64, aqq: f64, g: C64) -> Self {
        let mag = g.norm();
        let e = g / mag;
        let tau = (aqq - app) / (2.0 * mag);
        let t = if tau >= 0.0 {
            1.0 / (tau + (1.0 + tau * tau).sqrt())
        } else {
            -1.0 / (-tau + (1.0 + tau * tau).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        Self { c, s: t * c, e }
    }

    /// Right-multiply columns `p` and `q` of `m` by `J`.
    fn apply_columns(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        let ec = self.e.conj();
        for i in 0..m.rows() {
            let x = m[(i, p)];
            let y = m[(i, q)];
            m[(i, p)] = x * self.c - y * ec * self.s;
            m[(i, q)] = x * self.s + y * ec * self.c;
        }
    }

    /// Left-multiply rows `p` and `q` of `m` by `J†`.
    fn apply_rows(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        for j in 0..m.cols() {
            let x = m[(p, j)];
            let y = m[(q, j)];
            m[(p, j)] = x * self.c - y * self.e * self.s;
            m[(q, j)] = x * self.s + y * self.e * self.c;
        }
    }
}

/// Cyclic Jacobi eigensolver for Hermitian input. The input is symmetrized first.
pub fn eigh(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::Dimension("eigh needs a square matrix".into()));
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = m[(p, q)];
                if g.norm() <= 1e-300 {
                    continue;
                }
                let rot = Rotation::new(m[(p, p)].re, m[(q, q)].re, g);
                rot.apply_columns(&mut m, p, q);
                rot.apply_rows(&mut m, p, q);
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                rot.apply_columns(&mut v, p, q);
            }
        }
    }
    if !converged {
        let off = (&m - &ComplexMatrix::diag(&(0..n).map(|i| m[(i, i)]).collect::<Vec<_>>())).norm_fro();
        return Err(Error::Numerical { message: "Jacobi eigensolver did not converge".into(), residual: off });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Singular value decomposition `a = u * diag(sigma) * v†` with descending singular values.
/// `u` is `m x k`, `v` is `n x n` with `k = min(m, n)` columns of `u` kept.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > rel_tol * smax && s > 0.0).count()
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let mut converged = n < 2;
    let negligible = (f64::EPSILON * a.norm_fro()).powi(2);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for i in 0..m {
                    let x = w[(i, p)];
                    let y = w[(i, q)];
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt()
                    || gamma.norm() <= 1e-300
                    || alpha.min(beta) <= negligible
                {
                    continue;
                }
                rotated = true;
                let rot = Rotation::new(alpha, beta, gamma);
                rot.apply_columns(&mut w, p, q);
                rot.apply_columns(&mut v, p, q);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical { message: "Jacobi SVD did not converge".into(), residual: f64::NAN });
    }
    let norms: Vec<f64> = (0..n).map(|j| (0..m).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let k = m.min(n);
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = ComplexMatrix::zeros(m, k);
    for (c, &j) in order.iter().take(k).enumerate() {
        if norms[j] > 0.0 {
            for i in 0..m {
                u[(i, c)] = w[(i, j)] / norms[j];
            }
        }
    }
    let v = ComplexMatrix::from_fn(n, n, |i, c| v[(i, order[c])]);
    Ok(Svd { u, sigma, v })
}

/// Orthonormal basis (as columns) of the right null space, using an absolute threshold.
pub fn null_space(a: &ComplexMatrix, abs_tol: f64) -> Result<ComplexMatrix> {
    let s = svd(a)?;
    let n = a.cols();
    let keep: Vec<usize> = (0..n).filter(|&j| s.sigma[j] <= abs_tol).collect();
    Ok(ComplexMatrix::from_fn(n, keep.len(), |i, c| s.v[(i, keep[c])]))
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
    min_pivot: f64,
}

impl Lu {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("LU needs a square matrix".into()));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| lu[(i, k)].norm().total_cmp(&lu[(j, k)].norm())).unwrap_or(k);
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let piv = lu[(k, k)];
            min_pivot = min_pivot.min(piv.norm());
            if piv.norm() == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != ZERO {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, min_pivot })
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(Error::Dimension("right-hand side row count mismatch".into()));
        }
        if self.min_pivot == 0.0 {
            return Err(Error::Numerical { message: "singular matrix in LU solve".into(), residual: 0.0 });
        }
        let mut x = ComplexMatrix::from_fn(n, b.cols(), |i, j| b[(self.perm[i], j)]);
        for c in 0..b.cols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    Lu::new(a)?.solve(b)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    solve(a, &ComplexMatrix::identity(a.rows()))
}

/// Apply `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_function(a: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let e = eigh(a)?;
    let n = a.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &lam) in e.values.iter().enumerate() {
        let fl = f(lam);
        if fl == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = e.vectors[(i, k)] * fl;
            for j in 0..n {
                out[(i, j)] += vi * e.vectors[(j, k)].conj();
            }
        }
    }
    Ok(out)
}

/// Largest singular value.
pub fn norm_op(a: &ComplexMatrix) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    // sqrt of the top eigenvalue of a†a
    let g = a.adjoint().matmul(a)?;
    let e = eigh(&g)?;
    Ok(e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::testutil::random_matrix;

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let a = random_matrix(6, 6, 3).hermitian_part();
        let e = eigh(&a).unwrap();
        let recon = &(&e.vectors * &ComplexMatrix::diag_real(&e.values)) * &e.vectors.adjoint();
        assert!(recon.approx_eq(&a, 1e-12));
        let gram = e.vectors.adjoint().matmul(&e.vectors).unwrap();
        assert!(gram.approx_eq(&ComplexMatrix::identity(6), 1e-12));
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn svd_reconstructs_and_finds_null_space() {
        let b = random_matrix(5, 2, 11);
        let c = random_matrix(2, 5, 12);
        let a = &b * &c;
        let s = svd(&a).unwrap();
        assert_eq!(s.rank(1e-12), 2);
        let k = s.sigma.len().min(5);
        let sig = ComplexMatrix::diag_real(&s.sigma[..k]);
        let recon = &(&s.u * &sig) * &s.v.adjoint();
        assert!(recon.approx_eq(&a, 1e-12));
        let ns = null_space(&a, 1e-10).unwrap();
        assert_eq!(ns.cols(), 3);
        assert!((&a * &ns).norm_max() < 1e-12);
    }

    #[test]
    fn lu_solves_linear_system() {
        let a = random_matrix(7, 7, 5);
        let x = random_matrix(7, 2, 6);
        let b = &a * &x;
        assert!(solve(&a, &b).unwrap().approx_eq(&x, 1e-10));
        let inv = inverse(&a).unwrap();
        assert!((&inv * &a).approx_eq(&ComplexMatrix::identity(7), 1e-10));
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let a = ComplexMatrix::diag_real(&[0.5, -3.0, 2.0]);
        assert!((norm_op(&a).unwrap() - 3.0).abs() < 1e-12);
    }
}
