//! Block maps of a Heisenberg channel relative to `H = H0 ⊕ H1`:
//! `φ_ij(x) = V_i† Φ(V0 x V0†) V_j` and `ψ_ij(y) = V_i† Φ(V1 y V1†) V_j`.

use super::{apply_superop, Channel};
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, HilbertSplit};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone)]
pub struct BlockMaps {
    pub h0: usize,
    pub h1: usize,
    pub phi00: ComplexMatrix,
    pub phi01: ComplexMatrix,
    pub phi10: ComplexMatrix,
    pub phi11: ComplexMatrix,
    pub psi00: ComplexMatrix,
    pub psi01: ComplexMatrix,
    pub psi10: ComplexMatrix,
    pub psi11: ComplexMatrix,
    /// Largest violation among the vanishing and unit identities.
    pub defect: f64,
}

impl BlockMaps {
    pub fn apply_phi00(&self, x: &ComplexMatrix) -> ComplexMatrix {
        apply_superop(&self.phi00, x, self.h0, self.h0)
    }

    pub fn apply_phi11(&self, x: &ComplexMatrix) -> ComplexMatrix {
        apply_superop(&self.phi11, x, self.h1, self.h1)
    }

    pub fn apply_psi11(&self, y: &ComplexMatrix) -> ComplexMatrix {
        apply_superop(&self.psi11, y, self.h1, self.h1)
    }
}

/// Superoperator of `x ↦ Vi† Φ(Vin x Vin†) Vj`, mapping `n x n` inputs to `ri x rj` outputs.
fn block_superop(c: &Channel, vin: &ComplexMatrix, vi: &ComplexMatrix, vj: &ComplexMatrix) -> ComplexMatrix {
    let n = vin.cols();
    let (ri, rj) = (vi.cols(), vj.cols());
    let mut s = ComplexMatrix::zeros(ri * rj, n * n);
    let vin_adj = vin.adjoint();
    let vi_adj = vi.adjoint();
    for j in 0..n {
        for i in 0..n {
            let x = &(vin * &ComplexMatrix::unit(n, n, i, j)) * &vin_adj;
            let img = c.apply(&x).expect("dimension");
            let blk = &(&vi_adj * &img) * vj;
            s.set_column(i + j * n, &blk.vectorize());
        }
    }
    s
}

/// Extract all block maps and check `ψ00 = ψ01 = ψ10 = 0`, `φ01(I0) = φ10(I0) = 0` and
/// `φ11(I0) + ψ11(I1) = I1`. Violations beyond `tol.mat · max(1, ‖S‖_F)` are structural errors.
pub fn block_maps(c: &Channel, split: &HilbertSplit, tol: &Tolerances) -> Result<BlockMaps> {
    if split.dim_total != c.dim() {
        return Err(Error::Dimension("split does not match channel dimension".into()));
    }
    let (v0, v1) = (split.v0(), split.v1());
    let (h0, h1) = (v0.cols(), v1.cols());
    let phi00 = block_superop(c, &v0, &v0, &v0);
    let phi01 = block_superop(c, &v0, &v0, &v1);
    let phi10 = block_superop(c, &v0, &v1, &v0);
    let phi11 = block_superop(c, &v0, &v1, &v1);
    let psi00 = block_superop(c, &v1, &v0, &v0);
    let psi01 = block_superop(c, &v1, &v0, &v1);
    let psi10 = block_superop(c, &v1, &v1, &v0);
    let psi11 = block_superop(c, &v1, &v1, &v1);

    let i0 = ComplexMatrix::identity(h0);
    let i1 = ComplexMatrix::identity(h1);
    let vanishing = [&psi00, &psi01, &psi10].iter().map(|m| m.norm_max()).fold(0.0, f64::max);
    let off_unit = apply_superop(&phi01, &i0, h0, h1).norm_max().max(apply_superop(&phi10, &i0, h1, h0).norm_max());
    let unit = (&(&apply_superop(&phi11, &i0, h1, h1) + &apply_superop(&psi11, &i1, h1, h1)) - &i1).norm_max();
    let defect = if h1 == 0 { 0.0 } else { vanishing.max(off_unit).max(unit) };
    let bound = tol.mat * c.superop().norm_fro().max(1.0);
    if defect > bound {
        return Err(Error::Structural(format!(
            "block identities violated by {defect:.3e} (bound {bound:.3e}); the split is wrong or the map is not Schwarz"
        )));
    }
    Ok(BlockMaps { h0, h1, phi00, phi01, phi10, phi11, psi00, psi01, psi10, psi11, defect })
}
