//! General complex eigensolver: Householder reduction to Hessenberg form, shifted
//! complex QR to Schur form, then clustered biorthogonal eigenvector pairs.

use super::decomp::{inverse, null_space, svd};
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const ITERS_PER_EIGENVALUE: usize = 60;

/// Group of numerically coincident eigenvalues sharing a joint invariant subspace.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub center: C64,
    /// Indices into `SpectralPairs::values` and the columns of `right`/`left`.
    pub indices: Vec<usize>,
    /// True when the eigenspace is smaller than the algebraic multiplicity.
    pub defective: bool,
    /// Dimension of the eigenspace found at the defect threshold.
    pub geometric: usize,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }
}

/// Eigenvalues with biorthogonal right and left eigenvectors (`left† right = I`).
#[derive(Debug, Clone)]
pub struct SpectralPairs {
    pub values: Vec<C64>,
    pub right: ComplexMatrix,
    pub left: ComplexMatrix,
    pub clusters: Vec<Cluster>,
    /// Largest `‖m r − λ r‖ / ‖m‖_F` over all pairs.
    pub max_residual: f64,
}

impl SpectralPairs {
    /// Spectral projection `Σ r_i l_i†` over the cluster.
    pub fn projection(&self, cluster: &Cluster) -> ComplexMatrix {
        let n = self.right.rows();
        let mut p = ComplexMatrix::zeros(n, n);
        for &k in &cluster.indices {
            for i in 0..n {
                let r = self.right[(i, k)];
                if r == ZERO {
                    continue;
                }
                for j in 0..n {
                    p[(i, j)] += r * self.left[(j, k)].conj();
                }
            }
        }
        p
    }

    /// Index of the cluster whose center is nearest to `lambda`, with its distance.
    pub fn nearest_cluster(&self, lambda: C64) -> Option<(usize, f64)> {
        self.clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (i, (c.center - lambda).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// `Σ λ_i r_i l_i†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.right.rows();
        let lam = ComplexMatrix::diag(&self.values);
        if n == 0 {
            return lam;
        }
        &(&self.right * &lam) * &self.left.adjoint()
    }
}

/// Unitary `q` and upper Hessenberg `h` with `m = q h q†`.
pub fn hessenberg(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::Dimension("Hessenberg reduction needs a square matrix".into()));
    }
    let n = m.rows();
    let mut h = m.clone();
    let mut q = ComplexMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xn <= f64::MIN_POSITIVE {
            continue;
        }
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { ONE };
        let alpha = -phase * xn;
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn <= f64::MIN_POSITIVE {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vn;
        }
        // h <- (I - 2vv†) h
        for j in 0..n {
            let s: C64 = v.iter().enumerate().map(|(a, vi)| vi.conj() * h[(k + 1 + a, j)]).sum();
            for (a, vi) in v.iter().enumerate() {
                h[(k + 1 + a, j)] -= vi * s * 2.0;
            }
        }
        // h <- h (I - 2vv†), q <- q (I - 2vv†)
        for target in [&mut h, &mut q] {
            for i in 0..n {
                let s: C64 = v.iter().enumerate().map(|(a, vj)| target[(i, k + 1 + a)] * vj).sum();
                for (a, vj) in v.iter().enumerate() {
                    target[(i, k + 1 + a)] -= s * vj.conj() * 2.0;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    Ok((q, h))
}

/// Complex Schur decomposition `m = z t z†` with `t` upper triangular.
pub fn schur(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (mut z, mut t) = hessenberg(m)?;
    let n = t.rows();
    if n < 2 {
        return Ok((z, t));
    }
    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let cap = ITERS_PER_EIGENVALUE * n;
    loop {
        if hi == 0 {
            break;
        }
        // locate the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].norm();
            let diag = t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm();
            let reference = if diag > 0.0 { diag } else { scale };
            if sub <= f64::EPSILON * reference || sub <= 1e-300 {
                t[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > cap {
            let residual = (0..n - 1).map(|i| t[(i + 1, i)].norm()).fold(0.0, f64::max) / scale;
            return Err(Error::Numerical { message: "QR iteration did not converge".into(), residual });
        }
        let shift = if iter.is_multiple_of(11) {
            t[(hi, hi)] + C64::new(0.75 * t[(hi, hi - 1)].norm(), 0.5 * t[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        qr_step(&mut t, &mut z, lo, hi, shift);
    }
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    Ok((z, t))
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr * 0.25 - det).sqrt();
    let l1 = tr * 0.5 + disc;
    let l2 = tr * 0.5 - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicitly shifted QR sweep on the window `lo..=hi`, applied as a similarity
/// to the whole matrix so that the final form is a full Schur factor.
fn qr_step(t: &mut ComplexMatrix, z: &mut ComplexMatrix, lo: usize, hi: usize, shift: C64) {
    let n = t.rows();
    for k in lo..=hi {
        t[(k, k)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = t[(k, k)];
        let b = t[(k + 1, k)];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r > 0.0 { (a / r, b / r) } else { (ONE, ZERO) };
        for j in k..n {
            let x = t[(k, j)];
            let y = t[(k + 1, j)];
            t[(k, j)] = c.conj() * x + s.conj() * y;
            t[(k + 1, j)] = -s * x + c * y;
        }
        t[(k + 1, k)] = ZERO;
        rots.push((c, s));
    }
    for (off, &(c, s)) in rots.iter().enumerate() {
        let k = lo + off;
        let top = (k + 1).min(hi);
        for i in 0..=top {
            let x = t[(i, k)];
            let y = t[(i, k + 1)];
            t[(i, k)] = x * c + y * s;
            t[(i, k + 1)] = -x * s.conj() + y * c.conj();
        }
        for i in 0..n {
            let x = z[(i, k)];
            let y = z[(i, k + 1)];
            z[(i, k)] = x * c + y * s;
            z[(i, k + 1)] = -x * s.conj() + y * c.conj();
        }
    }
    for k in lo..=hi {
        t[(k, k)] += shift;
    }
}

/// Single-linkage grouping of eigenvalues within `radius`.
pub fn cluster_values(values: &[C64], radius: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        let mut x = i;
        while label[x] != r {
            let next = label[x];
            label[x] = r;
            x = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut label, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    groups
}

/// Eigen-decomposition of a general square matrix.
///
/// Eigenvalues closer than `cluster_radius` share a joint eigenspace. Output is ordered
/// by decreasing modulus, then by argument. Defective clusters are flagged, not rejected.
pub fn eig_general(m: &ComplexMatrix, cluster_radius: f64) -> Result<SpectralPairs> {
    if !m.is_square() {
        return Err(Error::Dimension("eigensolver needs a square matrix".into()));
    }
    let n = m.rows();
    if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical { message: "non-finite matrix entries".into(), residual: f64::NAN });
    }
    let (z, t) = schur(m)?;
    let schur_values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let mut groups = cluster_values(&schur_values, cluster_radius);
    let center = |g: &Vec<usize>| g.iter().map(|&i| schur_values[i]).sum::<C64>() / g.len() as f64;
    groups.sort_by(|a, b| {
        let (ca, cb) = (center(a), center(b));
        cb.norm()
            .total_cmp(&ca.norm())
            .then(ca.arg().total_cmp(&cb.arg()))
            .then(a[0].cmp(&b[0]))
    });

    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    let defect_tol = (100.0 * cluster_radius).max(1e-10) * scale.max(1.0);
    let mut values = Vec::with_capacity(n);
    let mut right = ComplexMatrix::zeros(n, n);
    let mut left = ComplexMatrix::zeros(n, n);
    let mut clusters = Vec::with_capacity(groups.len());
    let mut col = 0;
    for g in &groups {
        let mu = center(g);
        let size = g.len();
        let mut sorted: Vec<C64> = g.iter().map(|&i| schur_values[i]).collect();
        sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let (r, l, defective, geometric) = if size == 1 {
            let (r, l) = simple_pair(&z, &t, g[0]);
            (r, l, false, 1)
        } else {
            cluster_pairs(m, mu, size, defect_tol)?
        };
        for k in 0..size {
            right.set_column(col + k, &r.column(k));
            left.set_column(col + k, &l.column(k));
        }
        clusters.push(Cluster {
            center: mu,
            indices: (col..col + size).collect(),
            defective,
            geometric,
        });
        values.extend(sorted);
        col += size;
    }

    let mut max_residual: f64 = 0.0;
    for c in &clusters {
        for &k in &c.indices {
            let r = right.column(k);
            let mr = m.mul_vec(&r);
            let res = mr.iter().zip(&r).map(|(a, b)| (a - c.center * b).norm_sqr()).sum::<f64>().sqrt();
            max_residual = max_residual.max(res / scale);
        }
    }
    Ok(SpectralPairs { values, right, left, clusters, max_residual })
}

/// Right and left eigenvector for the isolated Schur eigenvalue at position `k`.
fn simple_pair(z: &ComplexMatrix, t: &ComplexMatrix, k: usize) -> (ComplexMatrix, ComplexMatrix) {
    let n = t.rows();
    let lam = t[(k, k)];
    let tnorm = t.norm_fro().max(f64::MIN_POSITIVE);
    let guard = |d: C64| if d.norm() < f64::EPSILON * tnorm { C64::new(f64::EPSILON * tnorm, 0.0) } else { d };
    let mut y = vec![ZERO; n];
    y[k] = ONE;
    for j in (0..k).rev() {
        let s: C64 = (j + 1..=k).map(|i| t[(j, i)] * y[i]).sum();
        y[j] = -s / guard(t[(j, j)] - lam);
    }
    let mut w = vec![ZERO; n];
    w[k] = ONE;
    for j in k + 1..n {
        let s: C64 = (k..j).map(|i| t[(i, j)].conj() * w[i]).sum();
        w[j] = -s / guard(t[(j, j)].conj() - lam.conj());
    }
    let mut r = z.mul_vec(&y);
    let rn = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in r.iter_mut() {
        *v /= rn;
    }
    let mut l = z.mul_vec(&w);
    let lr: C64 = l.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
    for v in l.iter_mut() {
        *v /= lr.conj();
    }
    (ComplexMatrix::column_vector(&r), ComplexMatrix::column_vector(&l))
}

/// Joint right/left eigenspaces of a cluster, biorthogonalized.
fn cluster_pairs(
    m: &ComplexMatrix,
    mu: C64,
    size: usize,
    defect_tol: f64,
) -> Result<(ComplexMatrix, ComplexMatrix, bool, usize)> {
    let n = m.rows();
    let shifted = m - &ComplexMatrix::identity(n).scale(mu);
    let rs = svd(&shifted)?;
    let ls = svd(&shifted.adjoint())?;
    let geometric = rs.sigma.iter().filter(|&&s| s <= defect_tol).count();
    let take = |s: &super::decomp::Svd| ComplexMatrix::from_fn(n, size, |i, c| s.v[(i, n - size + c)]);
    let r = take(&rs);
    let l0 = take(&ls);
    let overlap = l0.adjoint().matmul(&r)?;
    let mut defective = geometric < size;
    let l = match inverse(&overlap) {
        Ok(inv) if inv.norm_fro().is_finite() && inv.norm_fro() < 1.0 / defect_tol => l0.matmul(&inv.adjoint())?,
        _ => {
            defective = true;
            l0
        }
    };
    Ok((r, l, defective, geometric.min(size)))
}

/// `dim ker (m − λ)^2 == dim ker (m − λ)` at absolute threshold `eps·max(1, ‖m‖_F)`.
pub fn is_semisimple(m: &ComplexMatrix, lambda: C64, eps: f64) -> Result<bool> {
    let n = m.rows();
    let shifted = m - &ComplexMatrix::identity(n).scale(lambda);
    let sq = shifted.matmul(&shifted)?;
    let tol = eps * m.norm_fro().max(1.0);
    let k1 = null_space(&shifted, tol)?.cols();
    let k2 = null_space(&sq, tol)?.cols();
    Ok(k1 == k2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::testutil::random_matrix;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn schur_factorization_is_unitary_similarity() {
        let a = random_matrix(9, 9, 21);
        let (z, t) = schur(&a).unwrap();
        assert!((&(&z * &t) * &z.adjoint()).approx_eq(&a, 1e-12));
        assert!((z.adjoint() * z.clone()).approx_eq(&ComplexMatrix::identity(9), 1e-13));
    }

    #[test]
    fn diagonal_input() {
        let a = ComplexMatrix::diag_real(&[1.0, 0.5]);
        let e = eig_general(&a, 1e-7).unwrap();
        assert!((e.values[0] - ONE).norm() < 1e-14);
        assert!((e.values[1] - C64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((e.right[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((e.right[(1, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_eigenvalues() {
        let th: f64 = 0.7;
        let a = ComplexMatrix::from_real_rows(&[&[th.cos(), -th.sin()], &[th.sin(), th.cos()]]);
        let e = eig_general(&a, 1e-7).unwrap();
        let want = sorted(vec![C64::from_polar(1.0, th), C64::from_polar(1.0, -th)]);
        for (x, y) in sorted(e.values.clone()).iter().zip(&want) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn biorthogonal_and_reconstructs_random() {
        let a = random_matrix(12, 12, 4);
        let e = eig_general(&a, 1e-7).unwrap();
        let gram = e.left.adjoint().matmul(&e.right).unwrap();
        assert!(gram.approx_eq(&ComplexMatrix::identity(12), 1e-9));
        assert!(e.reconstruct().dist_fro(&a) <= 1e-9 * a.norm_fro());
        assert!(e.max_residual < 1e-12);
    }

    #[test]
    fn degenerate_cluster_is_joint() {
        let q = crate::matcore::testutil::random_unitary(5, 8);
        let d = ComplexMatrix::diag_real(&[1.0, 1.0, 1.0, 0.3, -0.2]);
        let a = &(&q * &d) * &q.adjoint();
        let e = eig_general(&a, 1e-7).unwrap();
        assert_eq!(e.clusters[0].multiplicity(), 3);
        assert!(!e.clusters[0].defective);
        let p = e.projection(&e.clusters[0]);
        assert!((&p * &p).approx_eq(&p, 1e-10));
        assert!((p.trace() - C64::new(3.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn jordan_block_is_defective() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let e = eig_general(&a, 1e-7).unwrap();
        assert_eq!(e.clusters.len(), 1);
        assert!(e.clusters[0].defective);
        assert!(!is_semisimple(&a, ONE, 1e-8).unwrap());
        assert!(is_semisimple(&ComplexMatrix::identity(2), ONE, 1e-8).unwrap());
    }
}
