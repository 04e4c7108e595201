//! Dense complex linear algebra.

mod decomp;
mod eigen;
mod matrix;
pub mod random;

pub use decomp::{eigh, hermitian_function, inverse, norm_op, null_space, solve, svd, HermitianEigen, Lu, Svd};
pub use eigen::{cluster_values, eig_general, hessenberg, is_semisimple, schur, Cluster, SpectralPairs};
pub use matrix::{ComplexMatrix, C64, I, ONE, ZERO};

use crate::error::{Error, Result};

/// Hilbert-Schmidt inner product `tr(a† b)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!("hs_inner shapes {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x.conj() * y).sum())
}

/// Kronecker product, row index `i_a * rows_b + i_b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    ComplexMatrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

fn check_bipartite(y: &ComplexMatrix, d1: usize, d2: usize) -> Result<()> {
    if y.shape() != (d1 * d2, d1 * d2) {
        return Err(Error::Dimension(format!(
            "operator of shape {:?} on a {d1}x{d2} bipartite space",
            y.shape()
        )));
    }
    Ok(())
}

/// `tr_2(y)` for `y` on `C^{d1} ⊗ C^{d2}`.
pub fn partial_trace_second(y: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    check_bipartite(y, d1, d2)?;
    Ok(ComplexMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|m| y[(i * d2 + m, j * d2 + m)]).sum()))
}

/// `tr_1(y)` for `y` on `C^{d1} ⊗ C^{d2}`.
pub fn partial_trace_first(y: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    check_bipartite(y, d1, d2)?;
    Ok(ComplexMatrix::from_fn(d2, d2, |m, n| (0..d1).map(|i| y[(i * d2 + m, i * d2 + n)]).sum()))
}

/// `tr_2(y (I ⊗ rho2))`, the Hilbert-Schmidt adjoint of `x ↦ x ⊗ rho2`.
pub fn partial_trace_weighted(y: &ComplexMatrix, d1: usize, d2: usize, rho2: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_bipartite(y, d1, d2)?;
    if rho2.shape() != (d2, d2) {
        return Err(Error::Dimension(format!("weight of shape {:?}, expected {d2}x{d2}", rho2.shape())));
    }
    let tol = 1e-10;
    if (rho2.trace() - ONE).norm() > tol || !psd_check(rho2, tol) {
        return Err(Error::Validation("weight is not a density matrix".into()));
    }
    Ok(partial_trace_weighted_unchecked(y, d1, d2, rho2))
}

pub(crate) fn partial_trace_weighted_unchecked(
    y: &ComplexMatrix,
    d1: usize,
    d2: usize,
    rho2: &ComplexMatrix,
) -> ComplexMatrix {
    // [tr_2(y (I⊗ρ))]_{ij} = Σ_{m,n} y[(i,m),(j,n)] ρ[n,m]
    ComplexMatrix::from_fn(d1, d1, |i, j| {
        let mut s = ZERO;
        for m in 0..d2 {
            for n in 0..d2 {
                s += y[(i * d2 + m, j * d2 + n)] * rho2[(n, m)];
            }
        }
        s
    })
}

/// Hermitian within `eps` (max-entry) and smallest eigenvalue `>= -eps·‖a‖_F`.
pub fn psd_check(a: &ComplexMatrix, eps: f64) -> bool {
    min_eigenvalue(a, eps).is_some_and(|m| m >= -eps * a.norm_fro().max(f64::MIN_POSITIVE))
}

/// Smallest eigenvalue of the Hermitian part, or `None` when `a` is not Hermitian within `eps`.
pub fn min_eigenvalue(a: &ComplexMatrix, eps: f64) -> Option<f64> {
    if !a.is_square() || !a.is_hermitian(eps.max(0.0) * a.norm_max().max(1.0)) {
        return None;
    }
    if a.rows() == 0 {
        return Some(0.0);
    }
    eigh(a).ok().map(|e| e.values[0])
}

/// Columns `vec(v_i)` of a `d² x k` matrix.
pub fn stack_vectorized(vectors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let Some(first) = vectors.first() else {
        return Ok(ComplexMatrix::zeros(0, 0));
    };
    let (r, c) = first.shape();
    let mut out = ComplexMatrix::zeros(r * c, vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        if v.shape() != (r, c) {
            return Err(Error::Dimension("mixed operator shapes".into()));
        }
        out.set_column(k, &v.vectorize());
    }
    Ok(out)
}

/// Hilbert-Schmidt orthonormal basis of `span(vectors)`, keeping singular directions above
/// `eps · σ_max`.
pub fn orthonormal_span(vectors: &[ComplexMatrix], eps: f64) -> Result<Vec<ComplexMatrix>> {
    let Some(first) = vectors.first() else {
        return Ok(Vec::new());
    };
    let (r, c) = first.shape();
    let a = stack_vectorized(vectors)?;
    // Work on the smaller Gram side when there are many more vectors than coordinates.
    let s = if a.cols() > a.rows() { svd(&a.adjoint())? } else { svd(&a)? };
    let basis_cols = if a.cols() > a.rows() { &s.v } else { &s.u };
    let rank = s.rank(eps);
    (0..rank).map(|k| ComplexMatrix::devectorize(&basis_cols.column(k), r, c)).collect()
}

/// Residual `‖x − Π x‖_F` of orthogonal projection onto an HS-orthonormal basis.
pub fn projection_residual(basis: &[ComplexMatrix], x: &ComplexMatrix) -> f64 {
    let mut rem = x.clone();
    for b in basis {
        let c = hs_inner(b, x).unwrap_or(ZERO);
        rem -= &b.scale(c);
    }
    rem.norm_fro()
}

/// Largest projection residual of either orthonormal basis onto the other (0 when spans
/// coincide); infinite when the dimensions differ.
pub fn span_distance(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let ab = a.iter().map(|x| projection_residual(b, x)).fold(0.0, f64::max);
    let ba = b.iter().map(|x| projection_residual(a, x)).fold(0.0, f64::max);
    ab.max(ba)
}

/// Coordinates of `x` in an HS-orthonormal basis.
pub fn coordinates(basis: &[ComplexMatrix], x: &ComplexMatrix) -> Vec<C64> {
    basis.iter().map(|b| hs_inner(b, x).unwrap_or(ZERO)).collect()
}

/// Orthogonal decomposition `H = H0 ⊕ H1`.
#[derive(Debug, Clone)]
pub struct HilbertSplit {
    pub dim_total: usize,
    pub q0: ComplexMatrix,
    pub q1: ComplexMatrix,
    /// Unitary whose first `h0` columns span `H0` and remaining columns span `H1`.
    pub basis_change: ComplexMatrix,
    h0: usize,
}

impl HilbertSplit {
    /// Everything recurrent: `H1 = 0`.
    pub fn trivial(d: usize) -> Self {
        let id = ComplexMatrix::identity(d);
        Self { dim_total: d, q0: id.clone(), q1: ComplexMatrix::zeros(d, d), basis_change: id, h0: d }
    }

    /// Split with `H0 = range(v0)` for orthonormal columns `v0`; `H1` is the orthogonal complement.
    pub fn from_isometry(v0: &ComplexMatrix) -> Result<Self> {
        let (d, h0) = v0.shape();
        if h0 > d {
            return Err(Error::Dimension("isometry has more columns than rows".into()));
        }
        let gram = v0.adjoint().matmul(v0)?;
        if !gram.approx_eq(&ComplexMatrix::identity(h0), 1e-8) {
            return Err(Error::Validation("H0 basis is not orthonormal".into()));
        }
        let v1 = if h0 == d {
            ComplexMatrix::zeros(d, 0)
        } else if h0 == 0 {
            ComplexMatrix::identity(d)
        } else {
            let s = svd(&v0.adjoint())?;
            ComplexMatrix::from_fn(d, d - h0, |i, c| s.v[(i, h0 + c)])
        };
        let basis_change = ComplexMatrix::hstack(&[v0, &v1])?;
        Ok(Self { dim_total: d, q0: v0 * &v0.adjoint(), q1: &v1 * &v1.adjoint(), basis_change, h0 })
    }

    pub fn h0_dim(&self) -> usize {
        self.h0
    }

    pub fn h1_dim(&self) -> usize {
        self.dim_total - self.h0
    }

    pub fn is_faithful(&self) -> bool {
        self.h0 == self.dim_total
    }

    /// `d x h0` isometry onto `H0`.
    pub fn v0(&self) -> ComplexMatrix {
        self.basis_change.columns(0..self.h0)
    }

    /// `d x h1` isometry onto `H1`.
    pub fn v1(&self) -> ComplexMatrix {
        self.basis_change.columns(self.h0..self.dim_total)
    }

    /// Largest violation of the projector identities.
    pub fn defect(&self) -> f64 {
        let id = ComplexMatrix::identity(self.dim_total);
        [
            (&(&self.q0 + &self.q1) - &id).norm_max(),
            (&self.q0 * &self.q1).norm_max(),
            (&(&self.q0 * &self.q0) - &self.q0).norm_max(),
            (&(&self.q1 * &self.q1) - &self.q1).norm_max(),
            (&self.q0 - &self.q0.adjoint()).norm_max(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::random::{gaussian, haar_unitary, seeded};
    use super::ComplexMatrix;

    pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        gaussian(&mut seeded(seed), rows, cols)
    }

    pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
        haar_unitary(&mut seeded(seed), n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli() -> [ComplexMatrix; 3] {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let y = ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap();
        let z = ComplexMatrix::diag_real(&[1.0, -1.0]);
        [x, y, z]
    }

    #[test]
    fn hs_inner_examples() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(hs_inner(&id, &id).unwrap(), C64::new(2.0, 0.0));
        let e01 = ComplexMatrix::unit(2, 2, 0, 1);
        assert_eq!(hs_inner(&e01, &e01).unwrap(), ONE);
        let [x, y, _] = pauli();
        assert_eq!(hs_inner(&x, &y).unwrap(), ZERO);
        assert!(hs_inner(&id, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn kron_examples() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(kron(&id, &id), ComplexMatrix::identity(4));
        assert_eq!(kron(&ComplexMatrix::diag_real(&[1.0, 2.0]), &id), ComplexMatrix::diag_real(&[1.0, 1.0, 2.0, 2.0]));
        let k = kron(&ComplexMatrix::unit(2, 2, 0, 0), &ComplexMatrix::unit(2, 2, 1, 1));
        assert_eq!(k, ComplexMatrix::unit(4, 4, 1, 1));
    }

    #[test]
    fn partial_trace_weighted_examples() {
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        let r = partial_trace_weighted(&ComplexMatrix::identity(4), 2, 2, &half).unwrap();
        assert!(r.approx_eq(&ComplexMatrix::identity(2), 1e-15));

        let x = testutil::random_matrix(3, 3, 1);
        let rho = random::density_matrix(&mut random::seeded(2), 2);
        let y = kron(&x, &rho);
        let rho2 = rho.matmul(&rho).unwrap().trace();
        assert!(partial_trace_weighted(&y, 3, 2, &rho).unwrap().approx_eq(&x.scale(rho2), 1e-13));

        let a = testutil::random_matrix(2, 2, 3);
        let b = testutil::random_matrix(2, 2, 4);
        let r = partial_trace_weighted(&kron(&a, &b), 2, 2, &half).unwrap();
        assert!(r.approx_eq(&a.scale(b.trace() * 0.5), 1e-13));

        assert!(matches!(
            partial_trace_weighted(&ComplexMatrix::identity(4), 2, 2, &ComplexMatrix::identity(2)),
            Err(Error::Validation(_))
        ));
        assert!(matches!(partial_trace_weighted(&ComplexMatrix::identity(4), 2, 3, &half), Err(Error::Dimension(_))));
    }

    #[test]
    fn partial_traces_of_product() {
        let a = testutil::random_matrix(2, 2, 5);
        let b = testutil::random_matrix(3, 3, 6);
        let y = kron(&a, &b);
        assert!(partial_trace_second(&y, 2, 3).unwrap().approx_eq(&a.scale(b.trace()), 1e-13));
        assert!(partial_trace_first(&y, 2, 3).unwrap().approx_eq(&b.scale(a.trace()), 1e-13));
    }

    #[test]
    fn psd_examples() {
        assert!(psd_check(&ComplexMatrix::identity(2), 1e-10));
        assert!(!psd_check(&ComplexMatrix::diag_real(&[1.0, -1.0]), 1e-10));
        assert!(!psd_check(&testutil::random_matrix(3, 3, 1), 1e-10));
    }

    #[test]
    fn orthonormal_span_examples() {
        let id = ComplexMatrix::identity(2);
        let s = orthonormal_span(&[id.clone(), id.scale_real(2.0)], 1e-10).unwrap();
        assert_eq!(s.len(), 1);
        let expected_phase = hs_inner(&s[0], &id).unwrap();
        assert!((expected_phase.norm() - 2f64.sqrt()).abs() < 1e-14);

        let s = orthonormal_span(&[ComplexMatrix::unit(2, 2, 0, 0), ComplexMatrix::unit(2, 2, 1, 1)], 1e-10).unwrap();
        assert_eq!(s.len(), 2);

        let [_, _, z] = pauli();
        let s = orthonormal_span(&[id.clone(), z.clone(), &id + &z], 1e-10).unwrap();
        assert_eq!(s.len(), 2);
        for (i, a) in s.iter().enumerate() {
            for (j, b) in s.iter().enumerate() {
                let g = hs_inner(a, b).unwrap();
                let want = if i == j { ONE } else { ZERO };
                assert!((g - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn split_from_isometry() {
        let u = testutil::random_unitary(4, 7);
        let split = HilbertSplit::from_isometry(&u.columns(0..1)).unwrap();
        assert_eq!((split.h0_dim(), split.h1_dim()), (1, 3));
        assert!(split.defect() < 1e-12);
        assert!(HilbertSplit::trivial(3).is_faithful());
    }
}
