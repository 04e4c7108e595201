//! Seeded random channels and unfolding specs.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{BlockShape, UnfoldSpec};
use crate::channel::{Channel, Picture};
use crate::error::Result;
use crate::matcore::random::{self, SeededRng};
use crate::matcore::{eig_general, kron, ComplexMatrix};
use crate::tolerance::Tolerances;

/// Heisenberg UCP map `X ↦ Σ K_a† X K_a` with Kraus operators cut from a Haar isometry
/// `C^d → C^d ⊗ C^r`.
pub fn random_ucp(d: usize, kraus_rank: usize, seed: u64) -> Result<Channel> {
    let r = kraus_rank.max(1);
    let mut rng = random::seeded(seed);
    let v = random::haar_isometry(&mut rng, d * r, d);
    let kraus: Vec<ComplexMatrix> = (0..r).map(|a| v.submatrix(a * d..(a + 1) * d, 0..d)).collect();
    Channel::from_kraus(&kraus, Picture::Heisenberg)
}

fn random_state(rng: &mut SeededRng, n: usize) -> ComplexMatrix {
    // mixing with the maximally mixed state keeps the weights well conditioned
    let r = random::density_matrix(rng, n);
    let mixed = &r.scale_real(0.5) + &ComplexMatrix::identity(n).scale_real(0.5 / n as f64);
    mixed.hermitian_part()
}

/// Random spec with `Σ d1·d2 + h1 ≤ d_max`: block shapes, a permutation within `d1` classes,
/// Haar unitaries, optional non-uniform weights and a transient map `V†(· ⊗ I)V`.
pub fn random_unfold_spec(d_max: usize, seed: u64) -> UnfoldSpec {
    let d_max = d_max.max(2);
    let mut rng = random::seeded(seed);
    let total = rng.random_range(2..=d_max);
    let h1 = if rng.random_bool(0.6) { rng.random_range(0..total) } else { 0 };
    let h0 = total - h1;

    let mut blocks = Vec::new();
    let mut rem = h0;
    while rem > 0 {
        let d1 = rng.random_range(1..=rem.min(3));
        let d2 = rng.random_range(1..=(rem / d1).min(2));
        blocks.push(BlockShape { d1, d2 });
        rem -= d1 * d2;
    }
    let m = blocks.len();

    let mut perm: Vec<usize> = (0..m).collect();
    for d1 in 1..=3 {
        let idx: Vec<usize> = (0..m).filter(|&k| blocks[k].d1 == d1).collect();
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng);
        for (a, b) in idx.iter().zip(shuffled) {
            perm[*a] = b;
        }
    }
    let unitaries: Vec<ComplexMatrix> = blocks.iter().map(|b| random::haar_unitary(&mut rng, b.d1)).collect();
    let rho = if rng.random_bool(0.5) {
        Some(blocks.iter().map(|b| random_state(&mut rng, b.d2)).collect())
    } else {
        None
    };

    let mut spec = UnfoldSpec {
        blocks,
        h1_dim: h1,
        perm,
        unitaries,
        transient_map: ComplexMatrix::zeros(0, 0),
        rho,
        seed,
    };
    let n = spec.algebra_dim();
    spec.transient_map = if h1 == 0 {
        ComplexMatrix::zeros(0, n)
    } else {
        let r_min = h1.div_ceil(h0);
        let r = rng.random_range(r_min..=r_min.max(3));
        let v = random::haar_isometry(&mut rng, h0 * r, h1);
        let mut t = ComplexMatrix::zeros(h1 * h1, n);
        for k in 0..n {
            let mut co = vec![crate::matcore::ZERO; n];
            co[k] = crate::matcore::ONE;
            let x = kron(&spec.embed(&spec.components(&co)), &ComplexMatrix::identity(r));
            t.set_column(k, &(&(&v.adjoint() * &x) * &v).vectorize());
        }
        t
    };
    spec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    RandomUcp,
    Unfolded,
    LazyUnfolded,
}

#[derive(Debug, Clone)]
pub struct CorpusChannel {
    pub kind: CorpusKind,
    pub seed: u64,
    pub channel: Channel,
    /// Declared asymptotics for unfolded members.
    pub truth: Option<super::GroundTruth>,
}

/// Corpus members keep every eigenvalue other than 1 at least this far from 1, so that
/// time averages converge at a usable rate.
pub const CORPUS_MIN_GAP: f64 = 0.25;

/// `min |1 − λ|` over eigenvalues not clustered at 1.
pub fn gap_at_one(c: &Channel, tol: &Tolerances) -> Result<f64> {
    let values = eig_general(c.superop(), tol.cluster)?.values;
    Ok(values
        .iter()
        .map(|z| (z - crate::matcore::ONE).norm())
        .filter(|g| *g > tol.cluster)
        .fold(f64::INFINITY, f64::min))
}

fn member(i: usize, s: u64, d_max: usize, rng: &mut SeededRng, tol: &Tolerances) -> Result<CorpusChannel> {
    Ok(match i % 3 {
        0 => {
            let d = rng.random_range(2..=d_max.max(2));
            // unitary channels only in low dimension, where peripheral phases stay apart
            let rank = if d <= 3 { rng.random_range(1..=3) } else { rng.random_range(2..=4) };
            CorpusChannel { kind: CorpusKind::RandomUcp, seed: s, channel: random_ucp(d, rank, s)?, truth: None }
        }
        1 => {
            let syn = super::Synthesis::rotated(random_unfold_spec(d_max, s), tol)?;
            CorpusChannel { kind: CorpusKind::Unfolded, seed: s, channel: syn.channel, truth: Some(syn.truth) }
        }
        _ => {
            let syn = super::Synthesis::rotated(random_unfold_spec(d_max, s), tol)?;
            let t: f64 = rng.random_range(0.2..0.8);
            let d = syn.channel.dim();
            let id = ComplexMatrix::identity(d * d);
            let s_lazy = &id.scale_real(t) + &syn.channel.superop().scale_real(1.0 - t);
            let channel = Channel::from_superop_with(s_lazy, Picture::Heisenberg, tol)?;
            CorpusChannel { kind: CorpusKind::LazyUnfolded, seed: s, channel, truth: None }
        }
    })
}

/// Mixed corpus of `count` channels with `d ≤ d_max`: generic random UCP maps, unfolded
/// random specs seen in a Haar-random basis, and lazy versions `t·id + (1−t)Φ_E` of the latter.
/// Candidates closer to 1 than [`CORPUS_MIN_GAP`] are redrawn.
pub fn corpus(count: usize, d_max: usize, seed: u64) -> Result<Vec<CorpusChannel>> {
    let tol = Tolerances::default();
    let mut out = Vec::with_capacity(count);
    let mut rng = random::seeded(seed);
    for i in 0..count {
        let base = seed.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64);
        let mut attempt = 0u64;
        loop {
            let s = base.wrapping_add(attempt << 32);
            let m = member(i, s, d_max, &mut rng, &tol)?;
            attempt += 1;
            if gap_at_one(&m.channel, &tol)? >= CORPUS_MIN_GAP || attempt >= 64 {
                out.push(m);
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::recurrent_support;

    #[test]
    fn rank_one_is_unitary_and_faithful() {
        let c = random_ucp(2, 1, 3).unwrap();
        let k = c.stored_kraus().unwrap();
        assert!((&k[0].adjoint() * &k[0]).approx_eq(&ComplexMatrix::identity(2), 1e-12));
        assert!(recurrent_support(&c, &Tolerances::default()).unwrap().is_faithful());
    }

    #[test]
    fn generic_rank_four_is_faithful_with_unique_fixed_point() {
        let tol = Tolerances::default();
        for s in 0..5 {
            let c = random_ucp(3, 4, s).unwrap();
            assert!(c.is_ucp());
            assert!(recurrent_support(&c, &tol).unwrap().is_faithful());
            assert_eq!(crate::spectral::fixed_point_basis(&c, &tol).unwrap().len(), 1);
        }
    }

    #[test]
    fn seeded_reproduction() {
        let a = random_ucp(2, 2, 42).unwrap();
        let b = random_ucp(2, 2, 42).unwrap();
        assert_eq!(a.superop().as_slice(), b.superop().as_slice());
        let s1 = serde_json::to_string(&random_unfold_spec(8, 9)).unwrap();
        let s2 = serde_json::to_string(&random_unfold_spec(8, 9)).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn small_specs_enumerate_trivial_structures() {
        for s in 0..200 {
            let spec = random_unfold_spec(2, s);
            assert!(spec.dim() <= 2);
            let shapes: Vec<(usize, usize)> = spec.blocks.iter().map(|b| (b.d1, b.d2)).collect();
            let ok = matches!(
                (shapes.as_slice(), spec.h1_dim),
                ([(1, 1)], 0 | 1) | ([(2, 1)], 0) | ([(1, 2)], 0) | ([(1, 1), (1, 1)], 0)
            );
            assert!(ok, "{shapes:?} h1 = {}", spec.h1_dim);
        }
    }

    #[test]
    fn random_specs_are_valid() {
        let tol = Tolerances::default();
        for s in 0..1000 {
            let spec = random_unfold_spec(8, s);
            assert!(spec.dim() <= 8);
            spec.validate(&tol).unwrap_or_else(|e| panic!("seed {s}: {e}"));
        }
    }
}
