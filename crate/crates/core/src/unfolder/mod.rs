//! Synthesis of UCP maps with a prescribed attractor and asymptotic action:
//! `Φ_E = Λ ∘ Φ00 ∘ Φ_pinch`, plus random generators for test corpora.

mod corpus;
mod roundtrip;

pub use corpus::{corpus, gap_at_one, random_ucp, CORPUS_MIN_GAP, random_unfold_spec, CorpusChannel, CorpusKind};
pub use roundtrip::{compare_roundtrip, GroundTruth, RoundTripItem, RoundTripReport, Synthesis};

use serde::{Deserialize, Serialize};

use crate::channel::{choi_rect, superop_of, Channel, Picture};
use crate::error::{Error, Result};
use crate::matcore::{
    eigh, kron, orthonormal_span, partial_trace_weighted_unchecked, span_distance, ComplexMatrix,
};
use crate::spectral;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub d1: usize,
    pub d2: usize,
}

/// Declared asymptotics. The algebra `𝔄 = ⊕ B(C^{d1}) ⊗ I_{d2}` sits on the first
/// `Σ d1·d2` coordinates; `H1` is the remaining `h1_dim` coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnfoldSpec {
    pub blocks: Vec<BlockShape>,
    pub h1_dim: usize,
    /// Block `k` of `Φ(X)` is built from block `perm[k]` of `X`.
    pub perm: Vec<usize>,
    pub unitaries: Vec<ComplexMatrix>,
    /// `h1² x dim 𝔄` in the canonical algebra basis (blocks in order, `e_ij ⊗ I` at `i + j·d1`).
    pub transient_map: ComplexMatrix,
    #[serde(default)]
    pub rho: Option<Vec<ComplexMatrix>>,
    #[serde(default)]
    pub seed: u64,
}

impl UnfoldSpec {
    pub fn h0_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.d1 * b.d2).sum()
    }

    pub fn dim(&self) -> usize {
        self.h0_dim() + self.h1_dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.d1 * b.d1).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.d1 * b.d2;
                o
            })
            .collect()
    }

    fn coord_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.d1 * b.d1;
                o
            })
            .collect()
    }

    /// Everything recurrent, one full block, trivial dynamics: the identity map on `B(C^d)`.
    pub fn trivial(d: usize) -> Self {
        Self {
            blocks: vec![BlockShape { d1: d, d2: 1 }],
            h1_dim: 0,
            perm: vec![0],
            unitaries: vec![ComplexMatrix::identity(d)],
            transient_map: ComplexMatrix::zeros(0, d * d),
            rho: None,
            seed: 0,
        }
    }

    /// Two scalar blocks exchanged at every step.
    pub fn swap() -> Self {
        Self {
            blocks: vec![BlockShape { d1: 1, d2: 1 }; 2],
            h1_dim: 0,
            perm: vec![1, 0],
            unitaries: vec![ComplexMatrix::identity(1); 2],
            transient_map: ComplexMatrix::zeros(0, 2),
            rho: None,
            seed: 0,
        }
    }

    /// One recurrent scalar block and one transient level that inherits it: `X ↦ x00 I`.
    pub fn amplitude_damping_asymptotics() -> Self {
        Self {
            blocks: vec![BlockShape { d1: 1, d2: 1 }],
            h1_dim: 1,
            perm: vec![0],
            unitaries: vec![ComplexMatrix::identity(1)],
            transient_map: ComplexMatrix::identity(1),
            rho: None,
            seed: 0,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// `⊕ x_k ⊗ I_{d2}` on `H0` from block components.
    pub fn embed(&self, xs: &[ComplexMatrix]) -> ComplexMatrix {
        let h0 = self.h0_dim();
        let mut out = ComplexMatrix::zeros(h0, h0);
        for ((b, x), o) in self.blocks.iter().zip(xs).zip(self.offsets()) {
            out.set_submatrix(o, o, &kron(x, &ComplexMatrix::identity(b.d2)));
        }
        out
    }

    /// Block components of algebra coordinates.
    pub fn components(&self, coords: &[crate::matcore::C64]) -> Vec<ComplexMatrix> {
        self.blocks
            .iter()
            .zip(self.coord_offsets())
            .map(|(b, o)| ComplexMatrix::devectorize(&coords[o..o + b.d1 * b.d1], b.d1, b.d1).expect("block size"))
            .collect()
    }

    pub fn coordinates(&self, xs: &[ComplexMatrix]) -> Vec<crate::matcore::C64> {
        xs.iter().flat_map(|x| x.vectorize()).collect()
    }

    /// Canonical algebra basis embedded in `B(H0)`.
    pub fn canonical_basis(&self) -> Vec<ComplexMatrix> {
        let n = self.algebra_dim();
        (0..n)
            .map(|k| {
                let mut coords = vec![crate::matcore::ZERO; n];
                coords[k] = crate::matcore::ONE;
                self.embed(&self.components(&coords))
            })
            .collect()
    }

    fn weight(&self, k: usize) -> ComplexMatrix {
        let d2 = self.blocks[k].d2;
        match &self.rho {
            Some(r) => r[k].clone(),
            None => ComplexMatrix::identity(d2).scale_real(1.0 / d2 as f64),
        }
    }

    /// Pinching coordinates `x_k = tr_{k,2}(P_k Z P_k (I ⊗ ρ_k))` of an operator on `H0`.
    pub fn pinch_components(&self, z: &ComplexMatrix) -> Vec<ComplexMatrix> {
        self.blocks
            .iter()
            .zip(self.offsets())
            .enumerate()
            .map(|(k, (b, o))| {
                let r = b.d1 * b.d2;
                partial_trace_weighted_unchecked(&z.submatrix(o..o + r, o..o + r), b.d1, b.d2, &self.weight(k))
            })
            .collect()
    }

    /// `⊕ x_k ↦ ⊕ U_{π(k)}† x_{π(k)} U_{π(k)}`.
    pub fn automorphism(&self, xs: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
        (0..self.blocks.len())
            .map(|k| {
                let p = self.perm[k];
                let u = &self.unitaries[p];
                &(&u.adjoint() * &xs[p]) * u
            })
            .collect()
    }

    /// `P(x)` on `H1` for block components `x`.
    pub fn apply_transient(&self, xs: &[ComplexMatrix]) -> ComplexMatrix {
        let h1 = self.h1_dim;
        let v = self.transient_map.mul_vec(&self.coordinates(xs));
        ComplexMatrix::devectorize(&v, h1, h1).expect("transient shape")
    }

    /// `Λ(x) = x ⊕ P(x)` on `H = H0 ⊕ H1`.
    pub fn lambda(&self, xs: &[ComplexMatrix]) -> ComplexMatrix {
        let (h0, d) = (self.h0_dim(), self.dim());
        let mut out = ComplexMatrix::zeros(d, d);
        out.set_submatrix(0, 0, &self.embed(xs));
        if self.h1_dim > 0 {
            out.set_submatrix(h0, h0, &self.apply_transient(xs));
        }
        out
    }

    /// Superoperator (`h1² x h0²`) of the transient map precomposed with the pinching.
    pub fn transient_extension(&self) -> ComplexMatrix {
        let (h0, h1) = (self.h0_dim(), self.h1_dim);
        let mut s = ComplexMatrix::zeros(h1 * h1, h0 * h0);
        for j in 0..h0 {
            for i in 0..h0 {
                let y = self.apply_transient(&self.pinch_components(&ComplexMatrix::unit(h0, h0, i, j)));
                s.set_column(i + j * h0, &y.vectorize());
            }
        }
        s
    }

    /// List every violated invariant.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let mut errs = Vec::new();
        let m = self.blocks.len();
        if m == 0 {
            errs.push("at least one block is required".to_string());
        }
        if self.blocks.iter().any(|b| b.d1 == 0 || b.d2 == 0) {
            errs.push("block dimensions must be positive".into());
        }
        let mut seen = vec![false; m];
        if self.perm.len() != m {
            errs.push(format!("perm has {} entries for {m} blocks", self.perm.len()));
        } else {
            for (k, &p) in self.perm.iter().enumerate() {
                if p >= m || seen[p] {
                    errs.push("perm is not a bijection".into());
                    break;
                }
                seen[p] = true;
                if self.blocks[p].d1 != self.blocks[k].d1 {
                    errs.push(format!("perm links block {k} (d1 = {}) to block {p} (d1 = {})", self.blocks[k].d1, self.blocks[p].d1));
                }
            }
        }
        if self.unitaries.len() != m {
            errs.push(format!("{} unitaries for {m} blocks", self.unitaries.len()));
        } else {
            for (k, (u, b)) in self.unitaries.iter().zip(&self.blocks).enumerate() {
                if u.shape() != (b.d1, b.d1) {
                    errs.push(format!("unitary {k} has shape {:?}, expected {}x{}", u.shape(), b.d1, b.d1));
                } else if !(&u.adjoint() * u).approx_eq(&ComplexMatrix::identity(b.d1), tol.mat.max(1e-12) * 100.0) {
                    errs.push(format!("unitary {k} is not unitary"));
                }
            }
        }
        if let Some(rho) = &self.rho {
            if rho.len() != m {
                errs.push(format!("{} rho entries for {m} blocks", rho.len()));
            } else {
                for (k, (r, b)) in rho.iter().zip(&self.blocks).enumerate() {
                    if r.shape() != (b.d2, b.d2) {
                        errs.push(format!("rho {k} has shape {:?}, expected {}x{}", r.shape(), b.d2, b.d2));
                        continue;
                    }
                    let herm = r.is_hermitian(1e-10);
                    let tr = (r.trace() - crate::matcore::ONE).norm();
                    let min = eigh(&r.hermitian_part()).map(|e| e.values[0]).unwrap_or(f64::NEG_INFINITY);
                    if !herm || tr > 1e-10 || min <= tol.faith {
                        errs.push(format!("rho {k} is not a faithful density matrix"));
                    }
                }
            }
        }
        let (h1, n) = (self.h1_dim, self.algebra_dim());
        let shape_ok = if h1 == 0 { self.transient_map.rows() == 0 } else { self.transient_map.shape() == (h1 * h1, n) };
        if !shape_ok {
            errs.push(format!("transient_map has shape {:?}, expected {}x{n}", self.transient_map.shape(), h1 * h1));
        }
        if errs.is_empty() && h1 > 0 {
            let ones: Vec<ComplexMatrix> = self.blocks.iter().map(|b| ComplexMatrix::identity(b.d1)).collect();
            let unit = self.apply_transient(&ones).dist_fro(&ComplexMatrix::identity(h1));
            if unit > tol.alg {
                errs.push(format!("transient_map is not unital ({unit:.3e})"));
            }
            let choi = choi_rect(&self.transient_extension(), self.h0_dim(), h1);
            let min = eigh(&choi.hermitian_part()).map(|e| e.values[0]).unwrap_or(f64::NEG_INFINITY);
            if min < -tol.alg {
                errs.push(format!("transient_map is not completely positive (Choi min eigenvalue {min:.3e})"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs.join("; ")))
        }
    }
}

/// `Z ↦ ⊕ tr_{k,2}(P_k Z P_k (I ⊗ ρ_k)) ⊗ I_{k,2}` on `B(H0)`; `ρ_k = I/m_k` unless declared.
/// The synthesized map applies it after compressing `B(H)` to `B(H0)`.
pub fn pinch_map(spec: &UnfoldSpec) -> Result<Channel> {
    Channel::from_map(spec.h0_dim(), Picture::Heisenberg, |z| spec.embed(&spec.pinch_components(z)))
}

/// The block automorphism as a matrix on canonical algebra coordinates.
#[derive(Debug, Clone)]
pub struct BlockAutomorphism {
    pub matrix: ComplexMatrix,
    pub multiplicativity_defect: f64,
}

pub fn block_automorphism(spec: &UnfoldSpec, tol: &Tolerances) -> Result<BlockAutomorphism> {
    spec.validate(tol)?;
    let n = spec.algebra_dim();
    let mut matrix = ComplexMatrix::zeros(n, n);
    let unit = |k: usize| {
        let mut c = vec![crate::matcore::ZERO; n];
        c[k] = crate::matcore::ONE;
        spec.components(&c)
    };
    for k in 0..n {
        matrix.set_column(k, &spec.coordinates(&spec.automorphism(&unit(k))));
    }
    let mut defect: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let (xa, xb) = (unit(a), unit(b));
            let prod: Vec<ComplexMatrix> = xa.iter().zip(&xb).map(|(p, q)| p * q).collect();
            let lhs = spec.automorphism(&prod);
            let (ya, yb) = (spec.automorphism(&xa), spec.automorphism(&xb));
            for ((l, p), q) in lhs.iter().zip(&ya).zip(&yb) {
                defect = defect.max(l.dist_fro(&(p * q)));
            }
        }
    }
    if defect > tol.alg {
        return Err(Error::Synthesis(format!("block automorphism is not multiplicative ({defect:.3e})")));
    }
    Ok(BlockAutomorphism { matrix, multiplicativity_defect: defect })
}

/// `Λ` as a `d² x dim 𝔄` matrix on canonical coordinates.
pub fn lambda_embed(spec: &UnfoldSpec) -> ComplexMatrix {
    let n = spec.algebra_dim();
    let d = spec.dim();
    let mut m = ComplexMatrix::zeros(d * d, n);
    for k in 0..n {
        let mut c = vec![crate::matcore::ZERO; n];
        c[k] = crate::matcore::ONE;
        m.set_column(k, &spec.lambda(&spec.components(&c)).vectorize());
    }
    m
}

/// `Φ_E(X) = Λ(α(E(X00)))` without the downstream verification.
pub fn unfold_unchecked(spec: &UnfoldSpec, tol: &Tolerances) -> Result<Channel> {
    spec.validate(tol)?;
    let (h0, d) = (spec.h0_dim(), spec.dim());
    let s = superop_of(d, |x| {
        let x00 = x.submatrix(0..h0, 0..h0);
        spec.lambda(&spec.automorphism(&spec.pinch_components(&x00)))
    });
    Channel::from_superop_with(s, Picture::Heisenberg, tol)
}

/// Synthesize and confirm that the attractor is `{Λ(x)}` and that the map acts on it as
/// `Λ ∘ α`.
pub fn unfold(spec: &UnfoldSpec, tol: &Tolerances) -> Result<Channel> {
    let c = unfold_unchecked(spec, tol)?;
    if !(c.flags().unital && c.flags().cp) {
        return Err(Error::Synthesis("synthesized map is not UCP".into()));
    }
    let declared: Vec<ComplexMatrix> = (0..spec.algebra_dim())
        .map(|k| {
            let mut co = vec![crate::matcore::ZERO; spec.algebra_dim()];
            co[k] = crate::matcore::ONE;
            spec.lambda(&spec.components(&co))
        })
        .collect();
    let found = spectral::attractor_basis(&c, tol)?;
    let dist = span_distance(&orthonormal_span(&declared, 1e-10)?, &orthonormal_span(&found, 1e-10)?);
    if dist > tol.alg {
        return Err(Error::Synthesis(format!(
            "attractor of the synthesized map differs from the declared one (span distance {dist:.3e}, dims {} vs {})",
            found.len(),
            declared.len()
        )));
    }
    let mut restriction: f64 = 0.0;
    let n = spec.algebra_dim();
    for k in 0..n {
        let mut co = vec![crate::matcore::ZERO; n];
        co[k] = crate::matcore::ONE;
        let xs = spec.components(&co);
        restriction = restriction.max(c.apply(&spec.lambda(&xs))?.dist_fro(&spec.lambda(&spec.automorphism(&xs))));
    }
    if restriction > tol.alg {
        return Err(Error::Synthesis(format!("map does not act as Λ∘α on its attractor ({restriction:.3e})")));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::amplitude_damping_kraus;
    use crate::matcore::{C64, I, ONE};

    #[test]
    fn trivial_spec_is_identity() {
        let tol = Tolerances::default();
        let c = unfold(&UnfoldSpec::trivial(3), &tol).unwrap();
        assert!(c.superop().approx_eq(&ComplexMatrix::identity(9), 1e-14));
        let p = pinch_map(&UnfoldSpec::trivial(2)).unwrap();
        assert!(p.superop().approx_eq(&ComplexMatrix::identity(4), 1e-14));
    }

    #[test]
    fn pinch_of_multiplicity_block_is_trace() {
        let mut spec = UnfoldSpec::trivial(1);
        spec.blocks = vec![BlockShape { d1: 1, d2: 2 }];
        let p = pinch_map(&spec).unwrap();
        let z = crate::matcore::testutil::random_matrix(2, 2, 1);
        let want = ComplexMatrix::identity(2).scale(z.trace() / 2.0);
        assert!(p.apply(&z).unwrap().approx_eq(&want, 1e-14));
        assert!(p.flags().unital && p.flags().cp);
    }

    #[test]
    fn pinch_kills_corners() {
        let spec = UnfoldSpec {
            blocks: vec![BlockShape { d1: 2, d2: 1 }, BlockShape { d1: 1, d2: 1 }],
            h1_dim: 0,
            perm: vec![0, 1],
            unitaries: vec![ComplexMatrix::identity(2), ComplexMatrix::identity(1)],
            transient_map: ComplexMatrix::zeros(0, 5),
            rho: None,
            seed: 0,
        };
        let p = pinch_map(&spec).unwrap();
        let z = crate::matcore::testutil::random_matrix(3, 3, 2);
        let out = p.apply(&z).unwrap();
        assert!(out[(0, 2)].norm() == 0.0 && out[(2, 1)].norm() == 0.0);
        assert!((out[(0, 1)] - z[(0, 1)]).norm() < 1e-15);
        let twice = p.apply(&out).unwrap();
        assert!(twice.approx_eq(&out, 1e-15));
    }

    #[test]
    fn swap_automorphism_has_order_two() {
        let tol = Tolerances::default();
        let a = block_automorphism(&UnfoldSpec::swap(), &tol).unwrap();
        assert!((&a.matrix * &a.matrix).approx_eq(&ComplexMatrix::identity(2), 1e-15));
        let c = unfold(&UnfoldSpec::swap(), &tol).unwrap();
        let spec = spectral::spectrum(&c, &tol).unwrap();
        let mut per: Vec<f64> = spec.peripheral_values().iter().map(|z| z.re).collect();
        per.sort_by(f64::total_cmp);
        assert_eq!(per.len(), 2);
        assert!((per[0] + 1.0).abs() < 1e-12 && (per[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_unitary_automorphism_spectrum() {
        let mut spec = UnfoldSpec::trivial(2);
        spec.unitaries = vec![ComplexMatrix::diag(&[ONE, I])];
        let a = block_automorphism(&spec, &Tolerances::default()).unwrap();
        let mut ev = crate::matcore::eig_general(&a.matrix, 1e-9).unwrap().values;
        ev.sort_by(|x, y| x.im.total_cmp(&y.im).then(x.re.total_cmp(&y.re)));
        let want = [C64::new(0.0, -1.0), ONE, ONE, I];
        for (x, y) in ev.iter().zip(want) {
            assert!((x - y).norm() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn lambda_of_identity_transient_map() {
        let spec = UnfoldSpec::amplitude_damping_asymptotics();
        let l = lambda_embed(&spec);
        assert_eq!(l.shape(), (4, 1));
        let img = ComplexMatrix::devectorize(&l.column(0), 2, 2).unwrap();
        assert!(img.approx_eq(&ComplexMatrix::identity(2), 0.0));
    }

    #[test]
    fn amplitude_damping_asymptotics_match() {
        let tol = Tolerances::default();
        let c = unfold(&UnfoldSpec::amplitude_damping_asymptotics(), &tol).unwrap();
        let pp = spectral::peripheral_projection(&c, &tol).unwrap();
        let amp = Channel::from_kraus(&amplitude_damping_kraus(), Picture::Heisenberg).unwrap();
        let pa = spectral::peripheral_projection(&amp, &tol).unwrap();
        assert!(pp.superop.approx_eq(&pa.superop, 1e-10));
    }

    #[test]
    fn invalid_specs_list_their_problems() {
        let tol = Tolerances::default();
        let mut spec = UnfoldSpec::swap();
        spec.perm = vec![0, 0];
        spec.unitaries = vec![ComplexMatrix::identity(2)];
        let err = spec.validate(&tol).unwrap_err().to_string();
        assert!(err.contains("bijection") && err.contains("unitaries"), "{err}");
        let mut spec = UnfoldSpec::amplitude_damping_asymptotics();
        spec.transient_map = ComplexMatrix::identity(1).scale_real(2.0);
        assert!(spec.validate(&tol).unwrap_err().to_string().contains("unital"));
        let mut spec = UnfoldSpec::trivial(1);
        spec.blocks = vec![BlockShape { d1: 1, d2: 2 }];
        spec.rho = Some(vec![ComplexMatrix::diag_real(&[1.0, 0.0])]);
        assert!(spec.validate(&tol).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = UnfoldSpec::amplitude_damping_asymptotics();
        let text = serde_json::to_string(&spec).unwrap();
        let back = UnfoldSpec::from_json_str(&text).unwrap();
        assert_eq!(back.blocks, spec.blocks);
        assert!(back.transient_map.approx_eq(&spec.transient_map, 0.0));
        let empty = serde_json::to_string(&UnfoldSpec::swap()).unwrap();
        let back = UnfoldSpec::from_json_str(&empty).unwrap();
        back.validate(&Tolerances::default()).unwrap();
    }
}
