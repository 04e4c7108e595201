//! Quantum channels as superoperators on column-stacked operators.
//!
//! A Kraus list `{K}` is always read as the Schrödinger map `ρ ↦ Σ K ρ K†`. A channel in
//! the Heisenberg picture built from such a list acts as `X ↦ Σ K† X K`.

mod blocks;
mod io;
mod schwarz;

pub use blocks::{block_maps, BlockMaps};
pub use io::{ChannelFile, Repr};
pub use schwarz::{schwarz_falsify, schwarz_margin, FalsificationReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{eigh, kron, psd_check, ComplexMatrix};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    Schrodinger,
    Heisenberg,
}

impl Picture {
    pub fn dual(self) -> Self {
        match self {
            Picture::Schrodinger => Picture::Heisenberg,
            Picture::Heisenberg => Picture::Schrodinger,
        }
    }
}

/// Property flags and the tolerances they were tested at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub unital: bool,
    pub trace_preserving: bool,
    pub cp: bool,
    /// `None` until a Schwarz falsification run has been recorded.
    pub schwarz_unfalsified: Option<bool>,
    pub unital_defect: f64,
    pub trace_defect: f64,
    pub choi_min_eig: f64,
    pub eps_mat: f64,
    pub eps_eig: f64,
}

#[derive(Debug, Clone)]
pub struct Channel {
    dim: usize,
    superop: ComplexMatrix,
    kraus: Option<Vec<ComplexMatrix>>,
    choi: ComplexMatrix,
    picture: Picture,
    flags: Flags,
}

/// `ρ ↦ K ρ K†` as a superoperator: `conj(K) ⊗ K`.
fn schrodinger_term(k: &ComplexMatrix) -> ComplexMatrix {
    kron(&k.conj(), k)
}

/// `X ↦ K† X K` as a superoperator: `Kᵀ ⊗ K†`.
fn heisenberg_term(k: &ComplexMatrix) -> ComplexMatrix {
    kron(&k.transpose(), &k.adjoint())
}

/// Reshuffle between superoperator and Choi matrix (an involution):
/// `choi[i·d + k, j·d + l] = S[k + l·d, i + j·d]`.
pub fn reshuffle(m: &ComplexMatrix, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, k) = (r / d, r % d);
        let (j, l) = (c / d, c % d);
        m[(k + l * d, i + j * d)]
    })
}

/// Superoperator of an arbitrary linear map on `d x d` operators, from its action on matrix units.
pub fn superop_of(d: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let img = f(&ComplexMatrix::unit(d, d, i, j));
            s.set_column(i + j * d, &img.vectorize());
        }
    }
    s
}

/// `devec(S · vec(x))` reshaped to `out_rows x out_cols`.
pub fn apply_superop(s: &ComplexMatrix, x: &ComplexMatrix, out_rows: usize, out_cols: usize) -> ComplexMatrix {
    ComplexMatrix::devectorize(&s.mul_vec(&x.vectorize()), out_rows, out_cols)
        .expect("superoperator output shape")
}

/// Choi matrix `Σ E_ij ⊗ T(E_ij)` of a map `B(C^n) → B(C^m)` given by its superoperator.
pub fn choi_rect(s: &ComplexMatrix, n: usize, m: usize) -> ComplexMatrix {
    let mut choi = ComplexMatrix::zeros(n * m, n * m);
    for j in 0..n {
        for i in 0..n {
            let col = s.column(i + j * n);
            for l in 0..m {
                for k in 0..m {
                    choi[(i * m + k, j * m + l)] = col[k + l * m];
                }
            }
        }
    }
    choi
}

impl Channel {
    pub fn from_kraus(ops: &[ComplexMatrix], picture: Picture) -> Result<Self> {
        Self::from_kraus_with(ops, picture, &Tolerances::default())
    }

    pub fn from_kraus_with(ops: &[ComplexMatrix], picture: Picture, tol: &Tolerances) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::Validation("empty Kraus list".into()))?;
        let d = first.rows();
        if ops.iter().any(|k| k.shape() != (d, d)) {
            return Err(Error::Dimension("Kraus operators must all be square of one size".into()));
        }
        check_finite(ops.iter())?;
        let mut s = ComplexMatrix::zeros(d * d, d * d);
        for k in ops {
            let term = match picture {
                Picture::Schrodinger => schrodinger_term(k),
                Picture::Heisenberg => heisenberg_term(k),
            };
            s += &term;
        }
        let mut c = Self::build(d, s, picture, tol);
        c.kraus = Some(ops.to_vec());
        Ok(c)
    }

    pub fn from_superop(s: ComplexMatrix, picture: Picture) -> Result<Self> {
        Self::from_superop_with(s, picture, &Tolerances::default())
    }

    pub fn from_superop_with(s: ComplexMatrix, picture: Picture, tol: &Tolerances) -> Result<Self> {
        let d = superop_dim(&s)?;
        check_finite(std::iter::once(&s))?;
        Ok(Self::build(d, s, picture, tol))
    }

    pub fn from_choi(choi: &ComplexMatrix, picture: Picture) -> Result<Self> {
        Self::from_choi_with(choi, picture, &Tolerances::default())
    }

    pub fn from_choi_with(choi: &ComplexMatrix, picture: Picture, tol: &Tolerances) -> Result<Self> {
        let d = superop_dim(choi)?;
        check_finite(std::iter::once(choi))?;
        Ok(Self::build(d, reshuffle(choi, d), picture, tol))
    }

    /// Channel from the action of a linear map on operators.
    pub fn from_map(d: usize, picture: Picture, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        Self::from_superop(superop_of(d, f), picture)
    }

    pub fn identity(d: usize, picture: Picture) -> Self {
        Self::from_kraus(&[ComplexMatrix::identity(d)], picture).expect("identity channel")
    }

    /// Schrödinger conjugation `ρ ↦ U ρ U†`; in the Heisenberg picture `X ↦ U† X U`.
    pub fn unitary(u: &ComplexMatrix, picture: Picture) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u), picture)
    }

    fn build(dim: usize, superop: ComplexMatrix, picture: Picture, tol: &Tolerances) -> Self {
        let choi = reshuffle(&superop, dim);
        let flags = compute_flags(dim, &superop, &choi, tol);
        Self { dim, superop, kraus: None, choi, picture, flags }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn superop(&self) -> &ComplexMatrix {
        &self.superop
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn flags(&self) -> &Flags {
        &self.flags
    }

    /// Kraus list as given at construction, if any.
    pub fn stored_kraus(&self) -> Option<&[ComplexMatrix]> {
        self.kraus.as_deref()
    }

    /// Schrödinger-convention Kraus operators, recovered from the Choi matrix when none were
    /// stored. Eigenpairs below `eps · tr(choi)` are dropped.
    pub fn kraus(&self, eps: f64) -> Result<Vec<ComplexMatrix>> {
        if let Some(k) = &self.kraus {
            return Ok(k.clone());
        }
        let d = self.dim;
        let e = eigh(&self.choi)?;
        let cut = eps * self.choi.trace().re.abs();
        let mut ops = Vec::new();
        for (idx, &mu) in e.values.iter().enumerate().rev() {
            if mu <= cut {
                continue;
            }
            let s = mu.sqrt();
            let a = ComplexMatrix::from_fn(d, d, |k, i| e.vectors[(i * d + k, idx)] * s);
            ops.push(match self.picture {
                Picture::Schrodinger => a,
                Picture::Heisenberg => a.adjoint(),
            });
        }
        if ops.is_empty() {
            return Err(Error::Validation("map has no Kraus representation above threshold".into()));
        }
        Ok(ops)
    }

    /// Recompute the flags at the given tolerances.
    pub fn with_tolerances(mut self, tol: &Tolerances) -> Self {
        let schwarz = self.flags.schwarz_unfalsified;
        self.flags = compute_flags(self.dim, &self.superop, &self.choi, tol);
        self.flags.schwarz_unfalsified = schwarz;
        self
    }

    pub fn record_schwarz(&mut self, report: &FalsificationReport) {
        self.flags.schwarz_unfalsified = Some(report.passed);
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.dim, self.dim) {
            return Err(Error::Dimension(format!("operator {:?} on a {}-dimensional channel", x.shape(), self.dim)));
        }
        Ok(apply_superop(&self.superop, x, self.dim, self.dim))
    }

    /// Hilbert-Schmidt adjoint; the picture label flips.
    pub fn adjoint(&self) -> Self {
        let tol = self.tolerances();
        let mut c = Self::build(self.dim, self.superop.adjoint(), self.picture.dual(), &tol);
        c.kraus = self.kraus.clone();
        c
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Channel) -> Result<Self> {
        if self.dim != other.dim || self.picture != other.picture {
            return Err(Error::Dimension("compose needs equal dimension and picture".into()));
        }
        Ok(Self::build(self.dim, self.superop.matmul(&other.superop)?, self.picture, &self.tolerances()))
    }

    pub fn power(&self, n: u64) -> Result<Self> {
        Ok(Self::build(self.dim, self.superop.pow(n)?, self.picture, &self.tolerances()))
    }

    /// Conjugate the channel by a unitary basis change: `X ↦ W† Φ(W X W†) W`.
    pub fn rotated(&self, w: &ComplexMatrix) -> Result<Self> {
        let d = self.dim;
        if w.shape() != (d, d) {
            return Err(Error::Dimension("basis change has the wrong size".into()));
        }
        let wd = w.adjoint();
        let s = superop_of(d, |x| {
            let inner = w * &(x * &wd);
            &wd * &(&apply_superop(&self.superop, &inner, d, d) * w)
        });
        Ok(Self::build(d, s, self.picture, &self.tolerances()))
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { mat: self.flags.eps_mat, eig: self.flags.eps_eig, ..Tolerances::default() }
    }

    /// Unital and CP in the Heisenberg picture.
    pub fn is_ucp(&self) -> bool {
        self.picture == Picture::Heisenberg && self.flags.unital && self.flags.cp
    }
}

fn superop_dim(s: &ComplexMatrix) -> Result<usize> {
    if !s.is_square() {
        return Err(Error::Dimension("superoperator must be square".into()));
    }
    let n = s.rows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || d == 0 {
        return Err(Error::Dimension(format!("{n} is not a positive square dimension")));
    }
    Ok(d)
}

fn check_finite<'a>(mut ms: impl Iterator<Item = &'a ComplexMatrix>) -> Result<()> {
    if ms.any(|m| m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(Error::Validation("non-finite matrix entry".into()));
    }
    Ok(())
}

fn compute_flags(d: usize, s: &ComplexMatrix, choi: &ComplexMatrix, tol: &Tolerances) -> Flags {
    let id = ComplexMatrix::identity(d).vectorize();
    let image = s.mul_vec(&id);
    let unital_defect = image.iter().zip(&id).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let image_adj = s.adjoint().mul_vec(&id);
    let trace_defect = image_adj.iter().zip(&id).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let choi_min_eig = if choi.is_hermitian(tol.mat * choi.norm_max().max(1.0)) {
        eigh(choi).map(|e| e.values[0]).unwrap_or(f64::NEG_INFINITY)
    } else {
        f64::NEG_INFINITY
    };
    Flags {
        unital: unital_defect <= tol.mat,
        trace_preserving: trace_defect <= tol.mat,
        cp: psd_check(choi, tol.eig),
        schwarz_unfalsified: None,
        unital_defect,
        trace_defect,
        choi_min_eig,
        eps_mat: tol.mat,
        eps_eig: tol.eig,
    }
}

/// Qubit amplitude damping with decay probability 3/4, Schrödinger Kraus pair.
pub fn amplitude_damping_kraus() -> Vec<ComplexMatrix> {
    vec![
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.5]]),
        ComplexMatrix::from_real_rows(&[&[0.0, 3f64.sqrt() / 2.0], &[0.0, 0.0]]),
    ]
}

/// The 2x2 transpose map (positive, unital, not completely positive).
pub fn transpose_map(d: usize, picture: Picture) -> Channel {
    Channel::from_map(d, picture, |x| x.transpose()).expect("transpose map")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{hs_inner, random, C64};

    fn amp(p: Picture) -> Channel {
        Channel::from_kraus(&amplitude_damping_kraus(), p).unwrap()
    }

    fn m(rows: &[&[f64]]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows)
    }

    #[test]
    fn identity_flags() {
        let c = Channel::identity(2, Picture::Schrodinger);
        let f = c.flags();
        assert!(f.unital && f.trace_preserving && f.cp);
        assert_eq!(c.superop(), &ComplexMatrix::identity(4));
    }

    #[test]
    fn amplitude_damping_actions() {
        let s = amp(Picture::Schrodinger);
        let x = ComplexMatrix::from_fn(2, 2, |i, j| C64::new((1 + i * 2 + j) as f64, (i as f64) - (j as f64)));
        let want = ComplexMatrix::from_rows(&[
            vec![x[(0, 0)] + x[(1, 1)] * 0.75, x[(0, 1)] * 0.5],
            vec![x[(1, 0)] * 0.5, x[(1, 1)] * 0.25],
        ])
        .unwrap();
        assert!(s.apply(&x).unwrap().approx_eq(&want, 1e-15));
        assert!(s.apply(&ComplexMatrix::unit(2, 2, 1, 1)).unwrap().approx_eq(&m(&[&[0.75, 0.0], &[0.0, 0.25]]), 1e-15));

        let h = s.adjoint();
        assert_eq!(h.picture(), Picture::Heisenberg);
        let want_h = ComplexMatrix::from_rows(&[
            vec![x[(0, 0)], x[(0, 1)] * 0.5],
            vec![x[(1, 0)] * 0.5, x[(0, 0)] * 0.75 + x[(1, 1)] * 0.25],
        ])
        .unwrap();
        assert!(h.apply(&x).unwrap().approx_eq(&want_h, 1e-15));
        assert!(h.apply(&ComplexMatrix::unit(2, 2, 0, 0)).unwrap().approx_eq(&m(&[&[1.0, 0.0], &[0.0, 0.75]]), 1e-15));
        assert!(h.superop().approx_eq(amp(Picture::Heisenberg).superop(), 1e-15));
    }

    #[test]
    fn amplitude_damping_flags() {
        let h = amp(Picture::Heisenberg).flags().to_owned();
        assert!(h.unital && h.cp && !h.trace_preserving);
        let s = amp(Picture::Schrodinger);
        assert!(s.flags().trace_preserving && s.flags().cp && !s.flags().unital);
        let img = s.apply(&ComplexMatrix::identity(2)).unwrap();
        assert!(img.approx_eq(&m(&[&[1.75, 0.0], &[0.0, 0.25]]), 1e-15));
    }

    #[test]
    fn transpose_is_not_cp() {
        let t = transpose_map(2, Picture::Heisenberg);
        assert!(!t.flags().cp);
        assert!((t.flags().choi_min_eig + 1.0).abs() < 1e-12);
        assert!(t.flags().unital);
    }

    #[test]
    fn adjoint_is_involution_and_dual() {
        let mut rng = random::seeded(5);
        let k: Vec<_> = (0..3).map(|_| random::gaussian(&mut rng, 3, 3)).collect();
        let c = Channel::from_kraus(&k, Picture::Schrodinger).unwrap();
        assert!(c.adjoint().adjoint().superop().approx_eq(c.superop(), 0.0));
        let a = random::gaussian(&mut rng, 3, 3);
        let b = random::gaussian(&mut rng, 3, 3);
        let lhs = hs_inner(&c.adjoint().apply(&a).unwrap(), &b).unwrap();
        let rhs = hs_inner(&a, &c.apply(&b).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn unitary_adjoint_is_inverse_conjugation() {
        let u = random::haar_unitary(&mut random::seeded(2), 3);
        let c = Channel::unitary(&u, Picture::Schrodinger).unwrap();
        let inv = Channel::unitary(&u.adjoint(), Picture::Heisenberg).unwrap();
        // adjoint of ρ ↦ UρU† is X ↦ U†XU, which is the Schrödinger action of U†
        assert!(c.adjoint().superop().approx_eq(&Channel::unitary(&u.adjoint(), Picture::Schrodinger).unwrap().superop().clone(), 1e-14));
        assert!(c.adjoint().superop().approx_eq(&Channel::unitary(&u, Picture::Heisenberg).unwrap().superop().clone(), 1e-14));
        assert!(inv.flags().unital && inv.flags().cp && inv.flags().trace_preserving);
    }

    #[test]
    fn compose_and_power() {
        let h = amp(Picture::Heisenberg);
        let id = Channel::identity(2, Picture::Heisenberg);
        assert!(id.power(7).unwrap().superop().approx_eq(&ComplexMatrix::identity(4), 0.0));
        let e01 = ComplexMatrix::unit(2, 2, 0, 1);
        assert!(h.power(2).unwrap().apply(&e01).unwrap().approx_eq(&e01.scale_real(0.25), 1e-15));
        assert!(h.compose(&id).unwrap().superop().approx_eq(h.superop(), 1e-15));
        assert!(h.compose(&amp(Picture::Schrodinger)).is_err());
    }

    #[test]
    fn kraus_round_trip_through_choi() {
        let mut rng = random::seeded(11);
        let k: Vec<_> = (0..2).map(|_| random::gaussian(&mut rng, 3, 3)).collect();
        for p in [Picture::Schrodinger, Picture::Heisenberg] {
            let c = Channel::from_kraus(&k, p).unwrap();
            let recovered = Channel::from_choi(c.choi(), p).unwrap().kraus(1e-12).unwrap();
            assert_eq!(recovered.len(), 2);
            let again = Channel::from_kraus(&recovered, p).unwrap();
            assert!(again.superop().approx_eq(c.superop(), 1e-12));
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(Channel::from_kraus(&[], Picture::Schrodinger), Err(Error::Validation(_))));
        let bad = [ComplexMatrix::identity(2), ComplexMatrix::identity(3)];
        assert!(matches!(Channel::from_kraus(&bad, Picture::Schrodinger), Err(Error::Dimension(_))));
        assert!(Channel::from_superop(ComplexMatrix::identity(3), Picture::Schrodinger).is_err());
    }
}
