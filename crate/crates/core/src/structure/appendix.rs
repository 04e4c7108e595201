//! Block structure of individual peripheral eigenoperators:
//! `X = X00 ⊕ X11` with `φ00(X00) = λ X00` and `X11 = (λ − ψ11)⁻¹ φ11(X00)`.

use serde::Serialize;

use crate::channel::{apply_superop, BlockMaps};
use crate::error::Result;
use crate::matcore::{eig_general, ComplexMatrix, HilbertSplit, Lu};
use crate::spectral::SpectralData;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Serialize)]
pub struct AppendixEntry {
    pub lambda: [f64; 2],
    /// `(‖X01‖ + ‖X10‖) / ‖X‖`.
    pub offdiagonal: f64,
    /// `‖φ00(X00) − λ X00‖ / ‖X‖`.
    pub eigen_residual: f64,
    /// `min |λ − μ|` over `μ ∈ spect(ψ11)` (infinite when `H1 = 0`).
    pub resolvent_margin: f64,
    /// `‖X11 − (λ − ψ11)⁻¹ φ11(X00)‖ / ‖X‖`.
    pub formula_residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppendixReport {
    pub entries: Vec<AppendixEntry>,
    /// `‖ψ11(I1) − I1‖`; must be positive when `H1 ≠ 0`.
    pub psi11_unital_defect: f64,
    pub psi11_spectral_radius: f64,
    pub passed: bool,
}

/// Check every peripheral eigenpair against the block formulas. Never errors on a
/// failed check; the report carries the verdicts.
pub fn peripheral_eigvec_check(
    split: &HilbertSplit,
    bm: &BlockMaps,
    spec: &SpectralData,
    tol: &Tolerances,
) -> Result<AppendixReport> {
    let h1 = bm.h1;
    let (v0, v1) = (split.v0(), split.v1());
    let psi_values = if h1 > 0 { eig_general(&bm.psi11, tol.cluster)?.values } else { Vec::new() };
    let psi_radius = psi_values.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut entries = Vec::new();
    for (k, x) in spec.right_ops.iter().enumerate() {
        if !spec.peripheral_mask[k] {
            continue;
        }
        let lambda = spec.pairs.clusters[spec.cluster_ids[k]].center;
        let norm = x.norm_fro().max(1e-300);
        let x00 = &(&v0.adjoint() * x) * &v0;
        let (offdiagonal, resolvent_margin, formula_residual) = if h1 > 0 {
            let x01 = &(&v0.adjoint() * x) * &v1;
            let x10 = &(&v1.adjoint() * x) * &v0;
            let x11 = &(&v1.adjoint() * x) * &v1;
            let margin = psi_values.iter().map(|m| (lambda - m).norm()).fold(f64::INFINITY, f64::min);
            let shifted = &ComplexMatrix::identity(h1 * h1).scale(lambda) - &bm.psi11;
            let rhs = ComplexMatrix::column_vector(&apply_superop(&bm.phi11, &x00, h1, h1).vectorize());
            let predicted = Lu::new(&shifted)?.solve(&rhs)?;
            let predicted = ComplexMatrix::devectorize(predicted.as_slice(), h1, h1)?;
            ((x01.norm_fro() + x10.norm_fro()) / norm, margin, predicted.dist_fro(&x11) / norm)
        } else {
            (0.0, f64::INFINITY, 0.0)
        };
        let eigen_residual = (&bm.apply_phi00(&x00) - &x00.scale(lambda)).norm_fro() / norm;
        let passed = offdiagonal <= tol.alg
            && eigen_residual <= tol.alg
            && formula_residual <= tol.alg
            && resolvent_margin > tol.cluster;
        entries.push(AppendixEntry {
            lambda: [lambda.re, lambda.im],
            offdiagonal,
            eigen_residual,
            resolvent_margin,
            formula_residual,
            passed,
        });
    }
    let psi11_unital_defect = if h1 > 0 {
        let id = ComplexMatrix::identity(h1);
        (&bm.apply_psi11(&id) - &id).norm_fro()
    } else {
        0.0
    };
    let nonunital_ok = h1 == 0 || psi11_unital_defect > tol.alg;
    let passed = nonunital_ok && entries.iter().all(|e| e.passed);
    Ok(AppendixReport { entries, psi11_unital_defect, psi11_spectral_radius: psi_radius, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{amplitude_damping_kraus, block_maps, Channel, Picture};
    use crate::spectral::spectrum;

    #[test]
    fn amplitude_damping_resolvent_formula() {
        let c = Channel::from_kraus(&amplitude_damping_kraus(), Picture::Heisenberg).unwrap();
        let tol = Tolerances::default();
        let split = HilbertSplit::from_isometry(&ComplexMatrix::unit(2, 1, 0, 0)).unwrap();
        let bm = block_maps(&c, &split, &tol).unwrap();
        let spec = spectrum(&c, &tol).unwrap();
        let r = peripheral_eigvec_check(&split, &bm, &spec, &tol).unwrap();
        assert_eq!(r.entries.len(), 1);
        let e = &r.entries[0];
        assert!((e.lambda[0] - 1.0).abs() < 1e-12);
        assert!((e.resolvent_margin - 0.75).abs() < 1e-12);
        assert!(e.formula_residual < 1e-12);
        assert!((r.psi11_unital_defect - 0.75).abs() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn faithful_is_vacuous_on_h1() {
        let c = Channel::identity(2, Picture::Heisenberg);
        let tol = Tolerances::default();
        let split = HilbertSplit::trivial(2);
        let bm = block_maps(&c, &split, &tol).unwrap();
        let r = peripheral_eigvec_check(&split, &bm, &spectrum(&c, &tol).unwrap(), &tol).unwrap();
        assert_eq!(r.entries.len(), 4);
        assert!(r.passed);
        assert!(r.entries.iter().all(|e| e.resolvent_margin.is_infinite()));
    }
}
