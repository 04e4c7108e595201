//! Recurrent/transient splitting, the reduced map, the block decomposition of its attractor
//! algebra, the transient map `P₁₁` and the resulting attractor of a Heisenberg UCP map.

mod appendix;
mod attractor;
mod wolf;

pub use appendix::{peripheral_eigvec_check, AppendixEntry, AppendixReport};
pub use attractor::{
    asymptotic_action, closed_form_projection, faithful_closed_form_defect, p11_extract, pp_locality_defect,
    schrodinger_correspondence, AsymptoticAction, AttractorStructure, CorrespondenceReport,
};
pub use wolf::{
    algebra_closure_defect, conjugation_unitary, cycle_lengths, extract_dynamics, extract_rho, fix_phase,
    wolf_decompose, WolfBlock, WolfDecomposition,
};

use serde::Serialize;

use crate::channel::{block_maps, BlockMaps, Channel, Picture};
use crate::error::{Error, Result};
use crate::matcore::{eigh, ComplexMatrix, HilbertSplit};
use crate::spectral::{self, ProjectionMap, SpectralData};
use crate::tolerance::{Check, Tolerances};

pub(crate) fn require_heisenberg(c: &Channel) -> Result<()> {
    if c.picture() != Picture::Heisenberg {
        return Err(Error::Validation("structure analysis expects a Heisenberg-picture map".into()));
    }
    Ok(())
}

/// `H0 = supp P_P†(I)` from a Heisenberg peripheral projection.
pub fn support_of(pp: &ProjectionMap, tol: &Tolerances) -> Result<HilbertSplit> {
    let d = pp.dim;
    let fixed = crate::channel::apply_superop(&pp.superop.adjoint(), &ComplexMatrix::identity(d), d, d);
    let e = eigh(&fixed.hermitian_part())?;
    let top = e.values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::Faithfulness("peripheral image of the identity vanishes".into()));
    }
    let keep: Vec<usize> = (0..d).filter(|&i| e.values[i] > tol.supp * top).collect();
    if keep.len() == d {
        return Ok(HilbertSplit::trivial(d));
    }
    // largest eigenvalues first for a stable basis order
    let v0 = ComplexMatrix::from_fn(d, keep.len(), |i, c| e.vectors[(i, keep[keep.len() - 1 - c])]);
    HilbertSplit::from_isometry(&v0)
}

/// Recurrent subspace of a Heisenberg map.
pub fn recurrent_support(c: &Channel, tol: &Tolerances) -> Result<HilbertSplit> {
    require_heisenberg(c)?;
    support_of(&spectral::peripheral_projection(c, tol)?, tol)
}

/// Reduced map `φ00(x) = V0† Φ(V0 x V0†) V0` on `B(H0)`, after checking that the
/// Schrödinger dual leaves `B(H0) ⊕ 0` invariant.
pub fn reduce(c: &Channel, split: &HilbertSplit, tol: &Tolerances) -> Result<Channel> {
    require_heisenberg(c)?;
    if split.dim_total != c.dim() {
        return Err(Error::Dimension("split does not match channel dimension".into()));
    }
    if split.is_faithful() && split.basis_change.approx_eq(&ComplexMatrix::identity(c.dim()), 0.0) {
        return Ok(c.clone());
    }
    let (v0, h0) = (split.v0(), split.h0_dim());
    let dual = c.adjoint();
    let mut leak: f64 = 0.0;
    for j in 0..h0 {
        for i in 0..h0 {
            let y = &(&v0 * &ComplexMatrix::unit(h0, h0, i, j)) * &v0.adjoint();
            let z = dual.apply(&y)?;
            let inside = &(&split.q0 * &z) * &split.q0;
            leak = leak.max((&z - &inside).norm_max());
        }
    }
    let bound = tol.mat * c.superop().norm_fro().max(1.0);
    if leak > bound {
        return Err(Error::Structural(format!(
            "B(H0) is not invariant under the dual map (leak {leak:.3e}, bound {bound:.3e})"
        )));
    }
    let v0d = v0.adjoint();
    let s = crate::channel::superop_of(h0, |x| {
        let big = &(&v0 * x) * &v0d;
        &(&v0d * &c.apply(&big).expect("dimension")) * &v0
    });
    Channel::from_superop_with(s, Picture::Heisenberg, tol)
}

/// Everything the structure stage produces for one Heisenberg map.
#[derive(Debug, Clone)]
pub struct StructureAnalysis {
    pub split: HilbertSplit,
    pub block_maps: BlockMaps,
    pub reduced: Channel,
    pub reduced_spectrum: SpectralData,
    pub wolf: WolfDecomposition,
    pub attractor: AttractorStructure,
    pub action: AsymptoticAction,
    pub checks: Vec<Check>,
}

/// Serializable summary of a [`StructureAnalysis`].
#[derive(Debug, Clone, Serialize)]
pub struct StructureFragment {
    pub h0_dim: usize,
    pub h1_dim: usize,
    pub blocks: Vec<BlockFragment>,
    pub permutation: Vec<usize>,
    pub unitaries: Vec<ComplexMatrix>,
    pub p11: ComplexMatrix,
    pub attractor_dim: usize,
    pub action_eigenvalues: Vec<[f64; 2]>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockFragment {
    pub d1: usize,
    pub d2: usize,
    pub rho_k: ComplexMatrix,
}

impl StructureAnalysis {
    pub fn fragment(&self) -> StructureFragment {
        StructureFragment {
            h0_dim: self.split.h0_dim(),
            h1_dim: self.split.h1_dim(),
            blocks: self
                .wolf
                .blocks
                .iter()
                .map(|b| BlockFragment { d1: b.d1, d2: b.d2, rho_k: b.rho.clone() })
                .collect(),
            permutation: self.wolf.permutation.clone(),
            unitaries: self.wolf.unitaries.clone(),
            p11: self.attractor.p11.clone(),
            attractor_dim: self.attractor.attractor_basis.len(),
            action_eigenvalues: self.action.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            checks: self.checks.clone(),
        }
    }
}

/// Run the full structure stage given the spectrum and peripheral projection of `c`.
pub fn analyze_structure(
    c: &Channel,
    spec: &SpectralData,
    pp: &ProjectionMap,
    tol: &Tolerances,
    seed: u64,
) -> Result<StructureAnalysis> {
    require_heisenberg(c)?;
    let split = support_of(pp, tol)?;
    let bm = block_maps(c, &split, tol)?;
    let reduced = reduce(c, &split, tol)?;
    let rspec = spectral::spectrum(&reduced, tol)?;
    let mut w = wolf_decompose(&reduced, &rspec, split.clone(), tol, seed)?;
    extract_rho(&rspec, &mut w, tol)?;
    extract_dynamics(&reduced, &mut w, tol)?;
    let attractor = p11_extract(pp, &split, &w, tol)?;
    let action = asymptotic_action(c, &reduced, &attractor, &w, tol)?;

    let mut checks = w.checks.clone();
    checks.extend(attractor.checks.iter().cloned());
    checks.extend(action.checks.iter().cloned());
    let attr_dim = spec.attractor_basis()?.len();
    if attr_dim != w.algebra_dim() {
        return Err(Error::Structural(format!(
            "attractor has dimension {attr_dim} but the block algebra has dimension {}",
            w.algebra_dim()
        )));
    }
    let closed = closed_form_projection(&w, &attractor);
    let closed_defect = (&closed - &pp.superop).norm_fro();
    checks.push(Check::new("closed_form_projection", closed_defect, tol.alg));
    if closed_defect > tol.alg {
        return Err(Error::Structural(format!(
            "peripheral projection differs from its block formula by {closed_defect:.3e}"
        )));
    }
    Ok(StructureAnalysis { split, block_maps: bm, reduced, reduced_spectrum: rspec, wolf: w, attractor, action, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::amplitude_damping_kraus;
    use crate::matcore::{kron, C64, I, ONE};

    fn heis(kraus: &[ComplexMatrix]) -> Channel {
        Channel::from_kraus(kraus, Picture::Heisenberg).unwrap()
    }

    fn run(c: &Channel) -> StructureAnalysis {
        let tol = Tolerances::default();
        let spec = spectral::spectrum(c, &tol).unwrap();
        let pp = spec.peripheral_projection().unwrap();
        analyze_structure(c, &spec, &pp, &tol, 7).unwrap()
    }

    #[test]
    fn amplitude_damping_support_and_reduction() {
        let c = heis(&amplitude_damping_kraus());
        let tol = Tolerances::default();
        let split = recurrent_support(&c, &tol).unwrap();
        assert_eq!((split.h0_dim(), split.h1_dim()), (1, 1));
        assert!(split.q0.approx_eq(&ComplexMatrix::unit(2, 2, 0, 0), 1e-12));
        let r = reduce(&c, &split, &tol).unwrap();
        assert_eq!(r.dim(), 1);
        assert!((r.superop()[(0, 0)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn faithful_channels_have_trivial_split() {
        let tol = Tolerances::default();
        let id = Channel::identity(3, Picture::Heisenberg);
        assert!(recurrent_support(&id, &tol).unwrap().is_faithful());
        let u = crate::matcore::testutil::random_unitary(3, 5);
        let c = heis(&[u]);
        let split = recurrent_support(&c, &tol).unwrap();
        assert!(split.is_faithful());
        let r = reduce(&c, &split, &tol).unwrap();
        assert!(r.superop().approx_eq(c.superop(), 0.0));
    }

    #[test]
    fn amplitude_damping_structure() {
        let s = run(&heis(&amplitude_damping_kraus()));
        assert_eq!(s.wolf.blocks.len(), 1);
        assert_eq!((s.wolf.blocks[0].d1, s.wolf.blocks[0].d2), (1, 1));
        assert!((s.wolf.blocks[0].rho[(0, 0)] - ONE).norm() < 1e-12);
        // P11 is the scalar identity and the attractor is span{I}
        assert_eq!(s.attractor.p11.shape(), (1, 1));
        let a = &s.attractor.algebra_basis_00[0];
        let p11a = s.attractor.p11[(0, 0)];
        assert!((p11a - a[(0, 0)]).norm() < 1e-10);
        assert_eq!(s.attractor.attractor_basis.len(), 1);
        let x = &s.attractor.attractor_basis[0];
        assert!(x.approx_eq(&ComplexMatrix::identity(2).scale(x[(0, 0)]), 1e-10));
        assert_eq!(s.action.matrix.shape(), (1, 1));
        assert!((s.action.matrix[(0, 0)] - ONE).norm() < 1e-10);
    }

    #[test]
    fn identity_channel_is_one_full_block() {
        let s = run(&Channel::identity(2, Picture::Heisenberg));
        assert_eq!(s.wolf.blocks.len(), 1);
        assert_eq!((s.wolf.blocks[0].d1, s.wolf.blocks[0].d2), (2, 1));
        assert!(s.action.matrix.approx_eq(&ComplexMatrix::identity(4), 1e-9));
    }

    #[test]
    fn diagonal_conjugation_gives_two_scalar_blocks() {
        let z = ComplexMatrix::diag_real(&[1.0, -1.0]);
        // the unitary channel has all of B(C²) as attractor; dephasing keeps only the diagonal
        let e0 = ComplexMatrix::unit(2, 2, 0, 0);
        let e1 = ComplexMatrix::unit(2, 2, 1, 1);
        let s = run(&heis(&[&z * &e0, &z * &e1]));
        assert_eq!(s.wolf.blocks.len(), 2);
        assert!(s.wolf.blocks.iter().all(|b| b.d1 == 1 && b.d2 == 1));
        assert_eq!(s.wolf.permutation, vec![0, 1]);
        for b in &s.wolf.blocks {
            let p = &b.projector;
            assert!(p.approx_eq(&e0, 1e-9) || p.approx_eq(&e1, 1e-9));
        }
    }

    #[test]
    fn swap_of_two_blocks() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e0 = ComplexMatrix::unit(2, 2, 0, 0);
        let e1 = ComplexMatrix::unit(2, 2, 1, 1);
        let s = run(&heis(&[&x * &e0, &x * &e1]));
        assert_eq!(s.wolf.permutation, vec![1, 0]);
        let mut ev: Vec<f64> = s.action.eigenvalues.iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-9 && (ev[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn block_unitary_recovered_up_to_basis_and_phase() {
        let u = ComplexMatrix::diag(&[ONE, I]);
        let s = run(&heis(&[u]));
        assert_eq!(s.wolf.blocks.len(), 1);
        let rec = &s.wolf.unitaries[0];
        let pairs = crate::matcore::eig_general(rec, 1e-9).unwrap();
        let ratio = pairs.values[0] / pairs.values[1];
        assert!((ratio - I).norm() < 1e-9 || (ratio + I).norm() < 1e-9, "{ratio}");
        let mut action: Vec<C64> = s.action.eigenvalues.clone();
        action.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((action[0] + I).norm() < 1e-9 && (action[3] - I).norm() < 1e-9);
    }

    #[test]
    fn tensor_factor_with_multiplicity() {
        // Φ(X) = (I ⊗ tr(·ρ)) on B(C² ⊗ C²) composed with a unitary on the first factor
        let u = crate::matcore::testutil::random_unitary(2, 11);
        let rho = ComplexMatrix::diag_real(&[2.0 / 3.0, 1.0 / 3.0]);
        let c = Channel::from_map(4, Picture::Heisenberg, |x| {
            let reduced = crate::matcore::partial_trace_weighted_unchecked(x, 2, 2, &rho);
            kron(&(&(&u.adjoint() * &reduced) * &u), &ComplexMatrix::identity(2))
        })
        .unwrap();
        let s = run(&c);
        assert_eq!(s.wolf.blocks.len(), 1);
        let b = &s.wolf.blocks[0];
        assert_eq!((b.d1, b.d2), (2, 2));
        let mut ev = eigh(&b.rho).unwrap().values;
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0 / 3.0).abs() < 1e-8 && (ev[1] - 2.0 / 3.0).abs() < 1e-8);
    }
}
