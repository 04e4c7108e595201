//! The transient map `P₁₁`, the attractor `{a ⊕ P₁₁(a)}` and the action of the map on it.

use serde::Serialize;

use super::wolf::{cycle_lengths, WolfDecomposition};
use crate::channel::{apply_superop, choi_rect, superop_of, Channel};
use crate::error::{Error, Result};
use crate::matcore::{
    eig_general, eigh, hermitian_function, min_eigenvalue, orthonormal_span, projection_residual, random,
    span_distance, ComplexMatrix, HilbertSplit, C64, ONE,
};
use crate::spectral::{self, ProjectionMap};
use crate::tolerance::{Check, Tolerances};

#[derive(Debug, Clone)]
pub struct AttractorStructure {
    pub h0: usize,
    pub h1: usize,
    pub split: HilbertSplit,
    /// HS-orthonormal basis of the algebra on `H0`.
    pub algebra_basis_00: Vec<ComplexMatrix>,
    /// `h1² x dim 𝔄`: column `i` is `vec P₁₁(a_i)`.
    pub p11: ComplexMatrix,
    /// `h1² x h0²`: `x ↦ V1† P_P(V0 x V0†) V1` on all of `B(H0)`.
    pub p11_extension: ComplexMatrix,
    /// `Λ(a_i) = V0 a_i V0† + V1 P₁₁(a_i) V1†`.
    pub attractor_basis: Vec<ComplexMatrix>,
    pub checks: Vec<Check>,
}

impl AttractorStructure {
    pub fn apply_p11(&self, x: &ComplexMatrix) -> ComplexMatrix {
        apply_superop(&self.p11_extension, x, self.h1, self.h1)
    }

    /// `Λ(x) = x ⊕ P₁₁(x)` in the original coordinates.
    pub fn lambda(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let (v0, v1) = (self.split.v0(), self.split.v1());
        let mut out = &(&v0 * x) * &v0.adjoint();
        if self.h1 > 0 {
            out += &(&(&v1 * &self.apply_p11(x)) * &v1.adjoint());
        }
        out
    }

    /// `X00 = V0† X V0`.
    pub fn compress0(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v0 = self.split.v0();
        &(&v0.adjoint() * x) * &v0
    }
}

/// Read `P₁₁` off the peripheral projection and check the block identities.
pub fn p11_extract(
    pp: &ProjectionMap,
    split: &HilbertSplit,
    w: &WolfDecomposition,
    tol: &Tolerances,
) -> Result<AttractorStructure> {
    let (h0, h1) = (split.h0_dim(), split.h1_dim());
    let (v0, v1) = (split.v0(), split.v1());
    let (v0d, v1d) = (v0.adjoint(), v1.adjoint());
    let lift = |x: &ComplexMatrix| &(&v0 * x) * &v0d;

    let mut ext = ComplexMatrix::zeros(h1 * h1, h0 * h0);
    let mut p00 = ComplexMatrix::zeros(h0 * h0, h0 * h0);
    for j in 0..h0 {
        for i in 0..h0 {
            let y = pp.apply(&lift(&ComplexMatrix::unit(h0, h0, i, j)));
            ext.set_column(i + j * h0, &(&(&v1d * &y) * &v1).vectorize());
            p00.set_column(i + j * h0, &(&(&v0d * &y) * &v0).vectorize());
        }
    }

    let mut checks = Vec::new();
    let basis = &w.algebra_basis;
    let mut off: f64 = 0.0;
    let mut fixed: f64 = 0.0;
    let mut p11 = ComplexMatrix::zeros(h1 * h1, basis.len());
    let mut attractor_basis = Vec::with_capacity(basis.len());
    for (k, a) in basis.iter().enumerate() {
        let y = pp.apply(&lift(a));
        if h1 > 0 {
            off = off.max((&(&v0d * &y) * &v1).norm_fro()).max((&(&v1d * &y) * &v0).norm_fro());
        }
        fixed = fixed.max((&(&v0d * &y) * &v0).dist_fro(a));
        let b11 = &(&v1d * &y) * &v1;
        p11.set_column(k, &b11.vectorize());
        let mut x = lift(a);
        if h1 > 0 {
            x += &(&(&v1 * &b11) * &v1d);
        }
        attractor_basis.push(x);
    }
    checks.push(Check::new("offdiagonal_blocks", off, tol.mat));
    if off > tol.mat {
        return Err(Error::Structural(format!(
            "peripheral projection has non-vanishing off-diagonal blocks ({off:.3e}); the map violates the Schwarz structure"
        )));
    }
    checks.push(Check::new("p00_fixes_algebra", fixed, tol.alg));
    if fixed > tol.alg {
        return Err(Error::Structural(format!("P00 does not fix the algebra ({fixed:.3e})")));
    }

    if h1 > 0 {
        let unital = (&apply_superop(&ext, &ComplexMatrix::identity(h0), h1, h1) - &ComplexMatrix::identity(h1)).norm_max();
        checks.push(Check::new("p11_unital", unital, tol.alg));
        let choi = choi_rect(&ext, h0, h1);
        let cmin = min_eigenvalue(&choi.hermitian_part(), 1.0).unwrap_or(f64::NEG_INFINITY);
        checks.push(Check::at_least("p11_choi_min_eig", cmin, -tol.alg));
        // P₁₁ ∘ P₀₀ = P₁₁ on B(H0)
        let idem = (&(&ext * &p00) - &ext).norm_fro();
        checks.push(Check::new("p11_idempotent_relation", idem, tol.alg));
        if unital > tol.alg || cmin < -tol.alg || idem > tol.alg {
            return Err(Error::Structural(format!(
                "P11 is not a UCP map compatible with P00 (unital {unital:.3e}, Choi {cmin:.3e}, idempotence {idem:.3e})"
            )));
        }
    }
    Ok(AttractorStructure {
        h0,
        h1,
        split: split.clone(),
        algebra_basis_00: basis.clone(),
        p11,
        p11_extension: ext,
        attractor_basis,
        checks,
    })
}

/// Peripheral projection rebuilt from the block data:
/// `X ↦ Λ(⊕ tr_{k,2}(P_k X00 P_k (I ⊗ ρ_k)) ⊗ I)`.
pub fn closed_form_projection(w: &WolfDecomposition, attr: &AttractorStructure) -> ComplexMatrix {
    let d = attr.split.dim_total;
    superop_of(d, |x| attr.lambda(&w.weighted_pinch(&attr.compress0(x))))
}

/// Distance between a faithful map's peripheral projection and the weighted-pinch formula,
/// built from the decomposition alone.
pub fn faithful_closed_form_defect(pp: &ProjectionMap, w: &WolfDecomposition) -> Result<f64> {
    if !w.split.is_faithful() {
        return Err(Error::Validation("closed form applies to faithful maps only".into()));
    }
    let v0 = w.split.v0();
    let formula = superop_of(pp.dim, |x| &(&v0 * &w.weighted_pinch(&(&(&v0.adjoint() * x) * &v0))) * &v0.adjoint());
    Ok((&formula - &pp.superop).norm_fro())
}

/// Largest change of `P_P(X)` when the `01`, `10` and `11` blocks of `X` are randomized.
pub fn pp_locality_defect(pp: &ProjectionMap, split: &HilbertSplit, trials: usize, seed: u64) -> f64 {
    let mut rng = random::seeded(seed);
    let d = pp.dim;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = random::gaussian(&mut rng, d, d);
        let y = random::gaussian(&mut rng, d, d);
        let x00 = &(&split.q0 * &x) * &split.q0;
        let other = &y - &(&(&split.q0 * &y) * &split.q0);
        let moved = &x00 + &other;
        worst = worst.max(pp.apply(&moved).dist_fro(&pp.apply(&x)) / x.norm_fro());
    }
    worst
}

/// Matrix of the map restricted to its attractor.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticAction {
    /// Coefficients in `orthonormal_basis`: `A_ij = <B_i, Φ(B_j)>`.
    pub matrix: ComplexMatrix,
    #[serde(skip)]
    pub orthonormal_basis: Vec<ComplexMatrix>,
    pub eigenvalues: Vec<C64>,
    pub period: usize,
    pub checks: Vec<Check>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Greedy nearest matching between two multisets; returns the worst matched distance.
fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, dist) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[k] = true;
        worst = worst.max(dist);
    }
    worst
}

/// `Φ` on the attractor, checked against `φ00 ⊕ P₁₁∘φ00`, its unimodular spectrum and the
/// cycle structure of the block permutation.
pub fn asymptotic_action(
    c: &Channel,
    reduced: &Channel,
    attr: &AttractorStructure,
    w: &WolfDecomposition,
    tol: &Tolerances,
) -> Result<AsymptoticAction> {
    let mut checks = Vec::new();
    let basis = orthonormal_span(&attr.attractor_basis, 1e-10)?;
    let n = basis.len();
    let mut a = ComplexMatrix::zeros(n, n);
    let mut leave: f64 = 0.0;
    for (j, b) in basis.iter().enumerate() {
        let img = c.apply(b)?;
        leave = leave.max(projection_residual(&basis, &img));
        for (i, bi) in basis.iter().enumerate() {
            a[(i, j)] = crate::matcore::hs_inner(bi, &img)?;
        }
    }
    checks.push(Check::new("attractor_invariance", leave, tol.alg));

    let mut lifted: f64 = 0.0;
    for x in &attr.algebra_basis_00 {
        let lhs = c.apply(&attr.lambda(x))?;
        let rhs = attr.lambda(&reduced.apply(x)?);
        lifted = lifted.max(lhs.dist_fro(&rhs));
    }
    checks.push(Check::new("action_is_lifted_reduced_map", lifted, tol.alg));
    if leave > tol.alg || lifted > tol.alg {
        return Err(Error::Structural(format!(
            "the map leaves its attractor or disagrees with the lifted reduced map ({leave:.3e}, {lifted:.3e})"
        )));
    }

    let eigenvalues = if n == 0 { Vec::new() } else { eig_general(&a, tol.cluster)?.values };
    let modulus = eigenvalues.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::new("unimodular_action", modulus, tol.alg));
    if modulus > tol.alg {
        return Err(Error::Structural(format!("action on the attractor is not unimodular ({modulus:.3e})")));
    }

    // Φ^L on block k is conjugation by V_k = U_{π^L(k)} ⋯ U_{π(k)}
    let period = cycle_lengths(&w.permutation).into_iter().fold(1, |l, c| l / gcd(l, c) * c);
    let mut expected = Vec::with_capacity(n);
    for k in 0..w.blocks.len() {
        let d1 = w.blocks[k].d1;
        let mut v = ComplexMatrix::identity(d1);
        let mut j = k;
        for _ in 0..period {
            j = w.permutation[j];
            v = &w.unitaries[j] * &v;
        }
        let mu = eig_general(&v, 1e-12)?.values;
        for x in &mu {
            for y in &mu {
                expected.push(x.conj() * y);
            }
        }
    }
    let powered = if n == 0 { Vec::new() } else { eig_general(&a.pow(period as u64)?, tol.cluster)?.values };
    let cyc = multiset_distance(&powered, &expected);
    checks.push(Check::new("cycle_spectrum", cyc, tol.alg.sqrt()));
    if !(cyc <= tol.alg.sqrt()) {
        return Err(Error::Structural(format!("spectrum of the action disagrees with the block cycles ({cyc:.3e})")));
    }
    Ok(AsymptoticAction { matrix: a, orthonormal_basis: basis, eigenvalues, period, checks })
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceReport {
    pub span_distance: f64,
    pub sigma_min_eig: f64,
    pub dual_attractor_dim: usize,
    pub passed: bool,
}

/// Compare `Attr(Φ)` with `Λ(σ0^{-1/2} Attr(Φ†) σ0^{-1/2})`, `σ0` the fixed state of the
/// Schrödinger dual restricted to `H0`, using a separate eigen-decomposition of the dual.
pub fn schrodinger_correspondence(
    c: &Channel,
    attr: &AttractorStructure,
    tol: &Tolerances,
) -> Result<CorrespondenceReport> {
    let d = c.dim();
    let dual = c.adjoint();
    let dspec = spectral::spectrum(&dual, tol)?;
    let fixed = dspec.projection_at(ONE)?;
    let sigma = fixed.apply(&ComplexMatrix::identity(d)).hermitian_part();
    let sigma = sigma.scale_real(1.0 / sigma.trace().re);
    let sigma0 = attr.compress0(&sigma);
    let e = eigh(&sigma0)?;
    let smin = e.values[0];
    if smin <= tol.faith * e.values.last().copied().unwrap_or(1.0) {
        return Err(Error::Faithfulness(format!("fixed state is singular on the recurrent space ({smin:.3e})")));
    }
    let inv_sqrt = hermitian_function(&sigma0, |x| 1.0 / x.sqrt())?;
    let dual_attr = dspec.attractor_basis()?;
    let mapped: Vec<ComplexMatrix> =
        dual_attr.iter().map(|y| attr.lambda(&(&(&inv_sqrt * &attr.compress0(y)) * &inv_sqrt))).collect();
    let mapped = orthonormal_span(&mapped, 1e-10)?;
    let own = orthonormal_span(&attr.attractor_basis, 1e-10)?;
    let dist = span_distance(&mapped, &own);
    Ok(CorrespondenceReport {
        span_distance: dist,
        sigma_min_eig: smin,
        dual_attractor_dim: dual_attr.len(),
        passed: dist <= tol.alg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{amplitude_damping_kraus, Picture};
    use crate::structure::analyze_structure;

    fn analyzed(c: &Channel) -> (crate::structure::StructureAnalysis, ProjectionMap) {
        let tol = Tolerances::default();
        let spec = spectral::spectrum(c, &tol).unwrap();
        let pp = spec.peripheral_projection().unwrap();
        (analyze_structure(c, &spec, &pp, &tol, 3).unwrap(), pp)
    }

    #[test]
    fn rect_choi_of_identity_is_rank_one() {
        let s = ComplexMatrix::identity(4);
        let choi = choi_rect(&s, 2, 2);
        let e = eigh(&choi).unwrap();
        assert!((e.values[3] - 2.0).abs() < 1e-12 && e.values[2].abs() < 1e-12);
    }

    #[test]
    fn amplitude_damping_correspondence() {
        let c = Channel::from_kraus(&amplitude_damping_kraus(), Picture::Heisenberg).unwrap();
        let (s, _) = analyzed(&c);
        let r = schrodinger_correspondence(&c, &s.attractor, &Tolerances::default()).unwrap();
        assert_eq!(r.dual_attractor_dim, 1);
        assert!(r.passed, "{}", r.span_distance);
        assert!((r.sigma_min_eig - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unitary_channel_correspondence_and_closed_form() {
        let u = crate::matcore::testutil::random_unitary(3, 21);
        let c = Channel::from_kraus(&[u], Picture::Heisenberg).unwrap();
        let (s, pp) = analyzed(&c);
        let r = schrodinger_correspondence(&c, &s.attractor, &Tolerances::default()).unwrap();
        assert!(r.passed);
        assert!(faithful_closed_form_defect(&pp, &s.wolf).unwrap() < 1e-8);
    }

    #[test]
    fn locality_of_projection() {
        let c = Channel::from_kraus(&amplitude_damping_kraus(), Picture::Heisenberg).unwrap();
        let (s, pp) = analyzed(&c);
        assert!(pp_locality_defect(&pp, &s.split, 10, 1) < 1e-12);
    }

    #[test]
    fn multiset_matching() {
        let a = [ONE, -ONE];
        let b = [-ONE, ONE];
        assert_eq!(multiset_distance(&a, &b), 0.0);
        assert!(multiset_distance(&a, &[ONE]).is_infinite());
    }
}
