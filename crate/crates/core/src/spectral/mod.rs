//! Spectrum of the superoperator, spectral and peripheral projections, Cesàro averages and
//! attractor / fixed-point bases.

use serde::Serialize;

use crate::channel::{apply_superop, Channel, Picture};
use crate::error::{Error, Result};
use crate::matcore::{eig_general, is_semisimple, orthonormal_span, psd_check, ComplexMatrix, SpectralPairs, C64, ONE};
use crate::tolerance::Tolerances;

/// Eigen-structure of a channel's superoperator.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<C64>,
    pub right_ops: Vec<ComplexMatrix>,
    pub left_ops: Vec<ComplexMatrix>,
    pub peripheral_mask: Vec<bool>,
    pub cluster_ids: Vec<usize>,
    pub pairs: SpectralPairs,
    pub dim: usize,
    pub tolerances: Tolerances,
}

/// One line of the spectrum report.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEntry {
    pub lambda: [f64; 2],
    pub modulus: f64,
    pub peripheral: bool,
    pub multiplicity: usize,
    pub defective: bool,
}

impl SpectralData {
    pub fn is_peripheral_value(&self, lambda: C64) -> bool {
        lambda.norm() >= 1.0 - self.tolerances.per
    }

    pub fn peripheral_clusters(&self) -> impl Iterator<Item = &crate::matcore::Cluster> {
        self.pairs.clusters.iter().filter(|c| self.is_peripheral_value(c.center))
    }

    pub fn peripheral_count(&self) -> usize {
        self.peripheral_mask.iter().filter(|&&p| p).count()
    }

    /// Peripheral eigenvalues with multiplicity, in the solver's order.
    pub fn peripheral_values(&self) -> Vec<C64> {
        self.peripheral_clusters().flat_map(|c| std::iter::repeat_n(c.center, c.multiplicity())).collect()
    }

    /// Largest non-peripheral modulus (0 when everything is peripheral).
    pub fn subleading_modulus(&self) -> f64 {
        self.pairs
            .clusters
            .iter()
            .filter(|c| !self.is_peripheral_value(c.center))
            .map(|c| c.center.norm())
            .fold(0.0, f64::max)
    }

    pub fn entries(&self) -> Vec<SpectrumEntry> {
        self.pairs
            .clusters
            .iter()
            .map(|c| SpectrumEntry {
                lambda: [c.center.re, c.center.im],
                modulus: c.center.norm(),
                peripheral: self.is_peripheral_value(c.center),
                multiplicity: c.multiplicity(),
                defective: c.defective,
            })
            .collect()
    }

    /// Spectral projection onto the cluster containing `lambda`.
    pub fn projection_at(&self, lambda: C64) -> Result<ProjectionMap> {
        let (idx, dist) = self
            .pairs
            .nearest_cluster(lambda)
            .ok_or_else(|| Error::NotAnEigenvalue { lambda: fmt_c(lambda), distance: f64::INFINITY })?;
        if dist > self.tolerances.cluster {
            return Err(Error::NotAnEigenvalue { lambda: fmt_c(lambda), distance: dist });
        }
        let cluster = &self.pairs.clusters[idx];
        if cluster.defective {
            return Err(Error::Defective {
                lambda: fmt_c(cluster.center),
                algebraic: cluster.multiplicity(),
                geometric: cluster.geometric,
            });
        }
        Ok(ProjectionMap {
            superop: self.pairs.projection(cluster),
            kind: ProjectionKind::SingleEigenvalue([cluster.center.re, cluster.center.im]),
            dim: self.dim,
        })
    }

    /// Sum of the peripheral spectral projections.
    pub fn peripheral_projection(&self) -> Result<ProjectionMap> {
        let n = self.dim * self.dim;
        let mut p = ComplexMatrix::zeros(n, n);
        for c in self.peripheral_clusters() {
            if c.defective {
                return Err(Error::Defective {
                    lambda: fmt_c(c.center),
                    algebraic: c.multiplicity(),
                    geometric: c.geometric,
                });
            }
            p += &self.pairs.projection(c);
        }
        Ok(ProjectionMap { superop: p, kind: ProjectionKind::Peripheral, dim: self.dim })
    }

    /// HS-orthonormal basis of the span of the peripheral right eigenoperators.
    pub fn attractor_basis(&self) -> Result<Vec<ComplexMatrix>> {
        let ops: Vec<ComplexMatrix> = self
            .peripheral_mask
            .iter()
            .zip(&self.right_ops)
            .filter(|(p, _)| **p)
            .map(|(_, r)| r.clone())
            .collect();
        let basis = orthonormal_span(&ops, 1e-10)?;
        if basis.len() != ops.len() {
            return Err(Error::InternalConsistency(format!(
                "peripheral eigenoperators span {} dimensions, expected {}",
                basis.len(),
                ops.len()
            )));
        }
        Ok(basis)
    }

    /// HS-orthonormal basis of the eigenvalue-1 eigenspace (empty if 1 is not an eigenvalue).
    pub fn fixed_point_basis(&self) -> Result<Vec<ComplexMatrix>> {
        let Some((idx, dist)) = self.pairs.nearest_cluster(ONE) else {
            return Ok(Vec::new());
        };
        if dist > self.tolerances.cluster {
            return Ok(Vec::new());
        }
        let ops: Vec<ComplexMatrix> = self.pairs.clusters[idx].indices.iter().map(|&k| self.right_ops[k].clone()).collect();
        orthonormal_span(&ops, 1e-10)
    }
}

fn fmt_c(z: C64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ProjectionKind {
    Peripheral,
    Fixed,
    SingleEigenvalue([f64; 2]),
}

/// An idempotent superoperator.
#[derive(Debug, Clone)]
pub struct ProjectionMap {
    pub superop: ComplexMatrix,
    pub kind: ProjectionKind,
    pub dim: usize,
}

impl ProjectionMap {
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        apply_superop(&self.superop, x, self.dim, self.dim)
    }

    pub fn idempotency_defect(&self) -> f64 {
        (&(&self.superop * &self.superop) - &self.superop).norm_fro()
    }

    pub fn unital_defect(&self) -> f64 {
        let id = ComplexMatrix::identity(self.dim);
        (&self.apply(&id) - &id).norm_max()
    }

    pub fn as_channel(&self, picture: Picture) -> Result<Channel> {
        Channel::from_superop(self.superop.clone(), picture)
    }

    /// Smallest eigenvalue of the Choi matrix of the projection.
    pub fn choi_min_eig(&self) -> f64 {
        let choi = crate::channel::reshuffle(&self.superop, self.dim);
        crate::matcore::min_eigenvalue(&choi.hermitian_part(), 1.0).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn is_cp(&self, eps: f64) -> bool {
        psd_check(&crate::channel::reshuffle(&self.superop, self.dim), eps)
    }
}

/// Eigen-decomposition of the superoperator with peripheral flags.
pub fn spectrum(c: &Channel, tol: &Tolerances) -> Result<SpectralData> {
    let d = c.dim();
    let pairs = eig_general(c.superop(), tol.cluster)?;
    let n = d * d;
    let mut cluster_ids = vec![0; n];
    let mut peripheral_mask = vec![false; n];
    for (cid, cl) in pairs.clusters.iter().enumerate() {
        let per = cl.center.norm() >= 1.0 - tol.per;
        for &k in &cl.indices {
            cluster_ids[k] = cid;
            peripheral_mask[k] = per;
        }
    }
    let right_ops = (0..n).map(|k| ComplexMatrix::devectorize(&pairs.right.column(k), d, d)).collect::<Result<_>>()?;
    let left_ops = (0..n).map(|k| ComplexMatrix::devectorize(&pairs.left.column(k), d, d)).collect::<Result<_>>()?;
    Ok(SpectralData {
        eigenvalues: pairs.values.clone(),
        right_ops,
        left_ops,
        peripheral_mask,
        cluster_ids,
        pairs,
        dim: d,
        tolerances: *tol,
    })
}

pub fn spectral_projection(c: &Channel, lambda: C64, tol: &Tolerances) -> Result<ProjectionMap> {
    spectrum(c, tol)?.projection_at(lambda)
}

pub fn peripheral_projection(c: &Channel, tol: &Tolerances) -> Result<ProjectionMap> {
    spectrum(c, tol)?.peripheral_projection()
}

pub fn attractor_basis(c: &Channel, tol: &Tolerances) -> Result<Vec<ComplexMatrix>> {
    spectrum(c, tol)?.attractor_basis()
}

pub fn fixed_point_basis(c: &Channel, tol: &Tolerances) -> Result<Vec<ComplexMatrix>> {
    spectrum(c, tol)?.fixed_point_basis()
}

/// `Σ_{n=1}^{N} S^n` and `S^N` by binary splitting: `O(log N)` products.
fn power_sum(s: &ComplexMatrix, n: u64) -> (ComplexMatrix, ComplexMatrix) {
    if n == 1 {
        return (s.clone(), s.clone());
    }
    if n.is_multiple_of(2) {
        let (f, p) = power_sum(s, n / 2);
        let sum = &f + &(&p * &f);
        (sum, &p * &p)
    } else {
        let (f, p) = power_sum(s, n - 1);
        let next = &p * s;
        (&f + &next, next)
    }
}

/// Cesàro mean `(1/N) Σ_{n=1}^{N} S^n`.
pub fn cesaro_fixed_projection(c: &Channel, n_max: u64) -> ProjectionMap {
    let n = n_max.max(1);
    let (sum, _) = power_sum(c.superop(), n);
    ProjectionMap { superop: sum.scale_real(1.0 / n as f64), kind: ProjectionKind::Fixed, dim: c.dim() }
}

/// `dim ker (S − λ)² = dim ker (S − λ)` at threshold `tol.eig`.
pub fn semisimplicity_check(c: &Channel, lambda: C64, tol: &Tolerances) -> Result<bool> {
    is_semisimple(c.superop(), lambda, tol.eig)
}

/// Decay of the non-peripheral sector after `n` steps.
#[derive(Debug, Clone, Serialize)]
pub struct DecayCheck {
    pub steps: u64,
    pub norm: f64,
    pub bound: f64,
    /// `‖R‖_F ‖L‖_F` of the non-peripheral eigenvectors.
    pub kappa: f64,
    pub within_bound: bool,
}

pub fn nonperipheral_decay(c: &Channel, spec: &SpectralData, pp: &ProjectionMap, steps: u64) -> DecayCheck {
    let n = c.superop().rows();
    let rest = &ComplexMatrix::identity(n) - &pp.superop;
    let norm = (&c.superop().pow(steps).expect("square") * &rest).norm_fro();
    let mut r2 = 0.0;
    let mut l2 = 0.0;
    for k in 0..n {
        if !spec.peripheral_mask[k] {
            r2 += spec.right_ops[k].norm_fro().powi(2);
            l2 += spec.left_ops[k].norm_fro().powi(2);
        }
    }
    let kappa = (r2 * l2).sqrt();
    let bound = (spec.subleading_modulus() + spec.tolerances.eig).powi(steps as i32) * kappa;
    DecayCheck { steps, norm, bound, kappa, within_bound: norm <= bound + spec.tolerances.eig }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::amplitude_damping_kraus;
    use crate::matcore::hs_inner;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn amp(p: Picture) -> Channel {
        Channel::from_kraus(&amplitude_damping_kraus(), p).unwrap()
    }

    fn phase_channel(theta: f64) -> Channel {
        let u = ComplexMatrix::diag(&[ONE, C64::from_polar(1.0, theta)]);
        Channel::unitary(&u, Picture::Heisenberg).unwrap()
    }

    fn sorted_values(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn identity_spectrum() {
        let s = spectrum(&Channel::identity(2, Picture::Heisenberg), &tol()).unwrap();
        assert_eq!(s.pairs.clusters.len(), 1);
        assert_eq!(s.peripheral_count(), 4);
        assert!(s.peripheral_projection().unwrap().superop.approx_eq(&ComplexMatrix::identity(4), 1e-12));
        assert_eq!(s.attractor_basis().unwrap().len(), 4);
    }

    #[test]
    fn amplitude_damping_spectrum() {
        for p in [Picture::Heisenberg, Picture::Schrodinger] {
            let s = spectrum(&amp(p), &tol()).unwrap();
            let want = [0.25, 0.5, 0.5, 1.0];
            for (v, w) in sorted_values(s.eigenvalues.clone()).iter().zip(want) {
                assert!((v - C64::new(w, 0.0)).norm() < 1e-12);
            }
            let per = s.peripheral_values();
            assert_eq!(per.len(), 1);
            assert!((per[0] - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_channel_spectrum() {
        let th = 2.0 * std::f64::consts::PI / 5.0;
        let s = spectrum(&phase_channel(th), &tol()).unwrap();
        assert_eq!(s.peripheral_count(), 4);
        let want = sorted_values(vec![ONE, ONE, C64::from_polar(1.0, th), C64::from_polar(1.0, -th)]);
        for (v, w) in sorted_values(s.eigenvalues.clone()).iter().zip(&want) {
            assert!((v - w).norm() < 1e-12);
        }
    }

    #[test]
    fn amplitude_damping_projections() {
        let h = amp(Picture::Heisenberg);
        let want_h = crate::channel::superop_of(2, |x| ComplexMatrix::identity(2).scale(x[(0, 0)]));
        let p1 = spectral_projection(&h, ONE, &tol()).unwrap();
        assert!(p1.superop.approx_eq(&want_h, 1e-12));
        assert!(peripheral_projection(&h, &tol()).unwrap().superop.approx_eq(&want_h, 1e-12));

        let s = amp(Picture::Schrodinger);
        let want_s = crate::channel::superop_of(2, |x| ComplexMatrix::unit(2, 2, 0, 0).scale(x[(0, 0)] + x[(1, 1)]));
        assert!(spectral_projection(&s, ONE, &tol()).unwrap().superop.approx_eq(&want_s, 1e-12));

        let basis = attractor_basis(&h, &tol()).unwrap();
        assert_eq!(basis.len(), 1);
        let overlap = hs_inner(&basis[0], &ComplexMatrix::identity(2)).unwrap().norm();
        assert!((overlap - 2f64.sqrt()).abs() < 1e-12);
        let basis_s = attractor_basis(&s, &tol()).unwrap();
        assert!((basis_s[0][(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_errors() {
        let h = amp(Picture::Heisenberg);
        assert!(matches!(spectral_projection(&h, C64::new(0.9, 0.0), &tol()), Err(Error::NotAnEigenvalue { .. })));
        let mut j = ComplexMatrix::identity(4);
        j[(0, 1)] = ONE;
        let jc = Channel::from_superop(j, Picture::Heisenberg).unwrap();
        assert!(matches!(peripheral_projection(&jc, &tol()), Err(Error::Defective { .. })));
        assert!(!semisimplicity_check(&jc, ONE, &tol()).unwrap());
        assert!(semisimplicity_check(&h, ONE, &tol()).unwrap());
        assert!(semisimplicity_check(&Channel::identity(2, Picture::Heisenberg), ONE, &tol()).unwrap());
    }

    #[test]
    fn cesaro_examples() {
        let id = Channel::identity(2, Picture::Heisenberg);
        assert!(cesaro_fixed_projection(&id, 37).superop.approx_eq(&ComplexMatrix::identity(4), 1e-13));

        let h = amp(Picture::Heisenberg);
        let want = crate::channel::superop_of(2, |x| ComplexMatrix::identity(2).scale(x[(0, 0)]));
        assert!(cesaro_fixed_projection(&h, 10_000).superop.dist_fro(&want) < 1e-3);

        let z = phase_channel(std::f64::consts::PI);
        let diag = crate::channel::superop_of(2, |x| ComplexMatrix::diag(&[x[(0, 0)], x[(1, 1)]]));
        assert!(cesaro_fixed_projection(&z, 100).superop.approx_eq(&diag, 1e-13));
    }

    #[test]
    fn power_sum_matches_naive() {
        let h = amp(Picture::Heisenberg);
        let s = h.superop();
        let mut naive = ComplexMatrix::zeros(4, 4);
        let mut p = ComplexMatrix::identity(4);
        for _ in 0..13 {
            p = &p * s;
            naive += &p;
        }
        assert!(power_sum(s, 13).0.approx_eq(&naive, 1e-13));
    }

    #[test]
    fn fixed_point_bases() {
        let h = amp(Picture::Heisenberg);
        assert_eq!(fixed_point_basis(&h, &tol()).unwrap().len(), 1);
        let s = fixed_point_basis(&amp(Picture::Schrodinger), &tol()).unwrap();
        assert!((s[0][(0, 0)].norm() - 1.0).abs() < 1e-12);
        let th = std::f64::consts::PI * 2f64.sqrt() / 3.0;
        let f = fixed_point_basis(&phase_channel(th), &tol()).unwrap();
        assert_eq!(f.len(), 2);
        for b in &f {
            assert!(b[(0, 1)].norm() < 1e-12 && b[(1, 0)].norm() < 1e-12);
        }
    }
}
