//! Decomposition of the attractor algebra of a faithful UCP map into
//! `⊕_k B(H_{k,1}) ⊗ I_{k,2}`, with the stationary weights `ρ_k`, the block permutation and
//! the block unitaries.

use rand::Rng;
use serde::Serialize;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::matcore::random::{self, SeededRng};
use crate::matcore::{
    eigh, kron, orthonormal_span, partial_trace_first, partial_trace_second, partial_trace_weighted_unchecked,
    projection_residual, stack_vectorized, ComplexMatrix, HilbertSplit, C64, ONE,
};
use crate::spectral::SpectralData;
use crate::tolerance::{Check, Tolerances};

const MAX_ATTEMPTS: usize = 32;

/// One block `H_{k,1} ⊗ H_{k,2}` of the recurrent space.
#[derive(Debug, Clone, Serialize)]
pub struct WolfBlock {
    pub d1: usize,
    pub d2: usize,
    /// `h0 x (d1·d2)` isometry; column `i·d2 + m` is `|i> ⊗ |m>`.
    #[serde(skip)]
    pub iso: ComplexMatrix,
    /// Density matrix on `H_{k,2}` (identity over `d2` until extracted).
    pub rho: ComplexMatrix,
    #[serde(skip)]
    pub projector: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct WolfDecomposition {
    pub split: HilbertSplit,
    pub blocks: Vec<WolfBlock>,
    /// `permutation[k] = π(k)`; block `k` of `Φ(X)` is built from block `π(k)` of `X`.
    pub permutation: Vec<usize>,
    pub unitaries: Vec<ComplexMatrix>,
    /// HS-orthonormal basis of the attractor algebra of the reduced map, in `B(H0)`.
    pub algebra_basis: Vec<ComplexMatrix>,
    /// Stationary state of the reduced Schrödinger map.
    pub sigma0: Option<ComplexMatrix>,
    pub checks: Vec<Check>,
}

impl WolfDecomposition {
    pub fn h0(&self) -> usize {
        self.split.h0_dim()
    }

    pub fn algebra_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.d1 * b.d1).sum()
    }

    /// `⊕_k x_k ⊗ I_{k,2}` in `B(H0)`.
    pub fn embed(&self, xs: &[ComplexMatrix]) -> ComplexMatrix {
        let h0 = self.h0();
        let mut out = ComplexMatrix::zeros(h0, h0);
        for (b, x) in self.blocks.iter().zip(xs) {
            let local = kron(x, &ComplexMatrix::identity(b.d2));
            out += &(&(&b.iso * &local) * &b.iso.adjoint());
        }
        out
    }

    /// Block components `x_k = tr_2(iso_k† a iso_k) / d2_k`.
    pub fn components(&self, a: &ComplexMatrix) -> Vec<ComplexMatrix> {
        self.blocks
            .iter()
            .map(|b| {
                let local = &(&b.iso.adjoint() * a) * &b.iso;
                partial_trace_second(&local, b.d1, b.d2).expect("block shape").scale_real(1.0 / b.d2 as f64)
            })
            .collect()
    }

    /// Canonical algebra basis: blocks in order, units `e_ij ⊗ I` indexed by `i + j·d1`.
    pub fn canonical_basis(&self) -> Vec<ComplexMatrix> {
        let mut out = Vec::with_capacity(self.algebra_dim());
        for (k, b) in self.blocks.iter().enumerate() {
            for j in 0..b.d1 {
                for i in 0..b.d1 {
                    let xs: Vec<ComplexMatrix> = self
                        .blocks
                        .iter()
                        .enumerate()
                        .map(|(l, c)| {
                            if l == k {
                                ComplexMatrix::unit(c.d1, c.d1, i, j)
                            } else {
                                ComplexMatrix::zeros(c.d1, c.d1)
                            }
                        })
                        .collect();
                    out.push(self.embed(&xs));
                }
            }
        }
        out
    }

    /// Apply `⊕ x_k ↦ ⊕ U_{π(k)}† x_{π(k)} U_{π(k)}` to block components.
    pub fn automorphism(&self, xs: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
        (0..self.blocks.len())
            .map(|k| {
                let p = self.permutation[k];
                let u = &self.unitaries[p];
                &(&u.adjoint() * &xs[p]) * u
            })
            .collect()
    }

    /// Faithful-case peripheral projection
    /// `X ↦ ⊕ tr_{k,2}(P_k X P_k (I ⊗ ρ_k)) ⊗ I_{k,2}`, as an operator on `B(H0)`.
    pub fn weighted_pinch(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let xs: Vec<ComplexMatrix> = self
            .blocks
            .iter()
            .map(|b| {
                let local = &(&b.iso.adjoint() * x) * &b.iso;
                partial_trace_weighted_unchecked(&local, b.d1, b.d2, &b.rho)
            })
            .collect();
        self.embed(&xs)
    }

    /// Cycle lengths of the permutation, one per cycle, in order of first appearance.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        cycle_lengths(&self.permutation)
    }
}

pub fn cycle_lengths(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for s in 0..perm.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut k = s;
        while !seen[k] {
            seen[k] = true;
            k = perm[k];
            len += 1;
        }
        out.push(len);
    }
    out
}

fn random_real_combination(rng: &mut SeededRng, ops: &[ComplexMatrix]) -> ComplexMatrix {
    let (r, c) = ops[0].shape();
    let mut out = ComplexMatrix::zeros(r, c);
    for op in ops {
        let w: f64 = rng.random_range(-1.0..1.0);
        out += &op.scale_real(w);
    }
    out
}

fn hermitian_generators(ops: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(2 * ops.len());
    for z in ops {
        out.push(z.hermitian_part());
        out.push((z - &z.adjoint()).scale(C64::new(0.0, -0.5)));
    }
    out
}

/// Consecutive eigenvalue groups of a Hermitian matrix, splitting at gaps above `radius`.
fn eigen_groups(h: &ComplexMatrix, radius: f64) -> Result<(Vec<Vec<usize>>, ComplexMatrix, f64)> {
    let e = eigh(h)?;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut min_gap = f64::INFINITY;
    for (i, &v) in e.values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if v - e.values[*g.last().unwrap()] <= radius => g.push(i),
            _ => {
                if i > 0 {
                    min_gap = min_gap.min(v - e.values[i - 1]);
                }
                groups.push(vec![i]);
            }
        }
    }
    Ok((groups, e.vectors, min_gap))
}

fn columns_of(m: &ComplexMatrix, idx: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), idx.len(), |i, c| m[(i, idx[c])])
}

/// Verify closure of a basis under adjoint and product. Returns the worst residual.
pub fn algebra_closure_defect(basis: &[ComplexMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in basis {
        worst = worst.max(projection_residual(basis, &a.adjoint()));
        for b in basis {
            worst = worst.max(projection_residual(basis, &(a * b)));
        }
    }
    worst
}

/// Center of the algebra spanned by an HS-orthonormal basis, as matrices.
fn center(basis: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let n = basis.len();
    // Gram matrix of the stacked commutator system: G_kl = Σ_j <[a_k,a_j],[a_l,a_j]>
    let comms: Vec<ComplexMatrix> =
        basis.iter().flat_map(|aj| basis.iter().map(move |ak| &(ak * aj) - &(aj * ak))).collect();
    let mut g = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let block = stack_vectorized(&comms[j * n..(j + 1) * n])?;
        g += &(&block.adjoint() * &block);
    }
    let e = eigh(&g)?;
    let top = e.values.last().copied().unwrap_or(0.0).max(1.0);
    let keep: Vec<usize> = (0..n).filter(|&k| e.values[k] <= 1e-12 * top).collect();
    if keep.is_empty() {
        return Err(Error::Decomposition("the algebra has a trivial center, not even the unit".into()));
    }
    Ok(keep
        .iter()
        .map(|&k| {
            let mut z = ComplexMatrix::zeros(basis[0].rows(), basis[0].cols());
            for (i, a) in basis.iter().enumerate() {
                z += &a.scale(e.vectors[(i, k)]);
            }
            z
        })
        .collect())
}

/// Decompose the attractor algebra of a faithful Heisenberg map (given by its spectrum).
///
/// The `split` is carried along for later stages; the decomposition itself lives in the
/// coordinates of the reduced map.
pub fn wolf_decompose(
    reduced: &Channel,
    spec: &SpectralData,
    split: HilbertSplit,
    tol: &Tolerances,
    seed: u64,
) -> Result<WolfDecomposition> {
    let h0 = reduced.dim();
    if split.h0_dim() != h0 {
        return Err(Error::Dimension("split does not match the reduced channel".into()));
    }
    let mut rng = random::seeded(seed);
    let basis = spec.attractor_basis()?;
    let mut checks = Vec::new();

    let closure = algebra_closure_defect(&basis);
    checks.push(Check::new("algebra_closure", closure, tol.alg));
    if closure > tol.alg {
        return Err(Error::NotAnAlgebra(format!(
            "attractor of the reduced map is not closed under product/adjoint (residual {closure:.3e})"
        )));
    }

    let center_basis = center(&basis)?;
    let m = center_basis.len();
    let generators = hermitian_generators(&center_basis);

    // minimal central projections from one generic Hermitian central element
    let mut found = None;
    for _ in 0..MAX_ATTEMPTS {
        let h = random_real_combination(&mut rng, &generators);
        let spread = h.norm_fro().max(1e-300);
        let (groups, vectors, gap) = eigen_groups(&h, 1e-6 * spread)?;
        if groups.len() == m && (m == 1 || gap > tol.cluster.max(1e-4 * spread)) {
            found = Some((groups, vectors));
            break;
        }
    }
    let (groups, vectors) = found.ok_or_else(|| {
        Error::Decomposition(format!("could not separate {m} central blocks with random central elements"))
    })?;

    let mut blocks = Vec::with_capacity(m);
    for g in &groups {
        let ek = columns_of(&vectors, g);
        let r = ek.cols();
        let compressed: Vec<ComplexMatrix> = basis.iter().map(|a| &(&ek.adjoint() * a) * &ek).collect();
        let local_basis = orthonormal_span(&compressed, 1e-8)?;
        let n_k = local_basis.len();
        let d1 = (n_k as f64).sqrt().round() as usize;
        if d1 == 0 || d1 * d1 != n_k || !r.is_multiple_of(d1) {
            return Err(Error::Decomposition(format!(
                "block of rank {r} carries an algebra of dimension {n_k}, which is not d1² with d1 | {r}"
            )));
        }
        let d2 = r / d1;
        let iso_local = factorize_block(&mut rng, &local_basis, d1, d2, tol)?;
        let iso = &ek * &iso_local;
        let projector = &iso * &iso.adjoint();
        blocks.push(WolfBlock { d1, d2, iso, rho: ComplexMatrix::identity(d2).scale_real(1.0 / d2 as f64), projector });
    }

    let mut w = WolfDecomposition {
        split,
        blocks,
        permutation: (0..m).collect(),
        unitaries: Vec::new(),
        algebra_basis: basis,
        sigma0: None,
        checks,
    };
    w.unitaries = w.blocks.iter().map(|b| ComplexMatrix::identity(b.d1)).collect();

    // every algebra element is ⊕ x_k ⊗ I in adapted coordinates
    let mut defect: f64 = 0.0;
    for a in &w.algebra_basis {
        let rebuilt = w.embed(&w.components(a));
        defect = defect.max(rebuilt.dist_fro(a));
    }
    w.checks.push(Check::new("tensor_form", defect, tol.alg));
    if defect > tol.alg {
        return Err(Error::Decomposition(format!("algebra elements deviate from block tensor form by {defect:.3e}")));
    }
    let dim_ok = w.algebra_dim() == w.algebra_basis.len();
    if !dim_ok {
        return Err(Error::Decomposition(format!(
            "Σ d1² = {} but the algebra has dimension {}",
            w.algebra_dim(),
            w.algebra_basis.len()
        )));
    }
    Ok(w)
}

/// Within one central block (`r = d1·d2` dimensional, algebra `M_{d1} ⊗ I_{d2}` in some
/// basis), build the isometry `C^{d1} ⊗ C^{d2} → C^r` adapting it to tensor form.
fn factorize_block(
    rng: &mut SeededRng,
    local_basis: &[ComplexMatrix],
    d1: usize,
    d2: usize,
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    let r = d1 * d2;
    if d1 == 1 {
        return Ok(ComplexMatrix::identity(r));
    }
    let herm = hermitian_generators(local_basis);
    for _ in 0..MAX_ATTEMPTS {
        let h = random_real_combination(rng, &herm);
        let spread = h.norm_fro().max(1e-300);
        let (groups, vectors, gap) = eigen_groups(&h, 1e-6 * spread)?;
        if groups.len() != d1 || groups.iter().any(|g| g.len() != d2) || gap < 1e-4 * spread {
            continue;
        }
        let es: Vec<ComplexMatrix> = groups.iter().map(|g| columns_of(&vectors, g)).collect();
        // a generic element links each eigenspace to the first
        let mut b = ComplexMatrix::zeros(r, r);
        for op in local_basis {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            b += &op.scale(C64::new(re, im));
        }
        let bn = b.norm_fro();
        let mut iso = ComplexMatrix::zeros(r, r);
        let mut ok = true;
        for (i, ei) in es.iter().enumerate() {
            let f = &(&ei.adjoint() * &b) * &es[0];
            let c = (f.adjoint().matmul(&f)?.trace().re / d2 as f64).sqrt();
            if c < 1e-3 * bn / (r as f64) {
                ok = false;
                break;
            }
            let wi = f.scale_real(1.0 / c);
            let unit_defect = (&(&wi.adjoint() * &wi) - &ComplexMatrix::identity(d2)).norm_max();
            if unit_defect > tol.alg.sqrt() {
                ok = false;
                break;
            }
            let cols = ei * &wi;
            for mcol in 0..d2 {
                iso.set_column(i * d2 + mcol, &cols.column(mcol));
            }
        }
        if ok {
            return Ok(iso);
        }
    }
    Err(Error::Decomposition(format!("could not build matrix units for a {d1}x{d1} factor with multiplicity {d2}")))
}

/// Stationary weights `ρ_k` from the stationary state of the reduced Schrödinger map.
pub fn extract_rho(spec: &SpectralData, w: &mut WolfDecomposition, tol: &Tolerances) -> Result<()> {
    let h0 = w.h0();
    let p = spec.projection_at(ONE)?;
    let sigma_raw = crate::channel::apply_superop(&p.superop.adjoint(), &ComplexMatrix::identity(h0), h0, h0);
    let sigma = sigma_raw.hermitian_part().scale_real(1.0 / h0 as f64);
    let e = eigh(&sigma)?;
    let (smin, smax) = (e.values[0], *e.values.last().unwrap());
    w.checks.push(Check::at_least("reduced_state_min_eig", smin / smax.max(1e-300), tol.faith));
    if smin <= tol.faith * smax {
        return Err(Error::Faithfulness(format!(
            "stationary state of the reduced map is singular (min eigenvalue {smin:.3e})"
        )));
    }
    let mut recon: f64 = 0.0;
    for b in w.blocks.iter_mut() {
        let y = &(&b.iso.adjoint() * &sigma) * &b.iso;
        let t = y.trace().re;
        let rho = partial_trace_first(&y, b.d1, b.d2)?.scale_real(1.0 / t).hermitian_part();
        let x = partial_trace_second(&y, b.d1, b.d2)?;
        recon = recon.max(kron(&x, &rho).dist_fro(&y) / y.norm_fro().max(1e-300));
        let rmin = eigh(&rho)?.values[0];
        if rmin <= tol.faith {
            return Err(Error::Faithfulness(format!("block weight is singular (min eigenvalue {rmin:.3e})")));
        }
        b.rho = rho;
    }
    w.checks.push(Check::new("rho_reconstruction", recon, tol.alg));
    if recon > tol.alg {
        return Err(Error::Decomposition(format!("stationary state is not of product form in a block ({recon:.3e})")));
    }
    w.sigma0 = Some(sigma);
    Ok(())
}

/// Permutation and block unitaries of the asymptotic action of a faithful Heisenberg map.
pub fn extract_dynamics(reduced: &Channel, w: &mut WolfDecomposition, tol: &Tolerances) -> Result<()> {
    let m = w.blocks.len();
    let mut perm = vec![usize::MAX; m];
    let mut smear: f64 = 0.0;
    for j in 0..m {
        let img = reduced.apply(&w.blocks[j].projector)?;
        let comps: Vec<ComplexMatrix> = w.blocks.iter().map(|b| &(&b.iso.adjoint() * &img) * &b.iso).collect();
        let (k, _) = comps
            .iter()
            .enumerate()
            .map(|(k, c)| (k, c.trace().re / c.rows() as f64))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::PermutationExtraction("no blocks".into()))?;
        let target = &w.blocks[k].projector;
        let err = img.dist_fro(target);
        smear = smear.max(err);
        if err > tol.alg {
            return Err(Error::PermutationExtraction(format!(
                "image of block identity {j} spreads over several blocks (distance {err:.3e} from block {k})"
            )));
        }
        if perm[k] != usize::MAX {
            return Err(Error::PermutationExtraction(format!("two block identities map onto block {k}")));
        }
        perm[k] = j;
    }
    w.checks.push(Check::new("permutation_probe", smear, tol.alg));
    for k in 0..m {
        if w.blocks[k].d1 != w.blocks[perm[k]].d1 {
            return Err(Error::PermutationExtraction(format!(
                "blocks {k} and {} are linked but have different d1",
                perm[k]
            )));
        }
    }
    w.permutation = perm.clone();

    let mut unitaries = vec![ComplexMatrix::zeros(0, 0); m];
    for (mb, &k) in perm.iter().enumerate() {
        // block mb of Φ(X) is U_k† x_k U_k ⊗ I
        let (src, dst) = (&w.blocks[k], &w.blocks[mb]);
        let d = src.d1;
        let t = |x: &ComplexMatrix| -> Result<ComplexMatrix> {
            let full = &(&src.iso * &kron(x, &ComplexMatrix::identity(src.d2))) * &src.iso.adjoint();
            let img = reduced.apply(&full)?;
            let local = &(&dst.iso.adjoint() * &img) * &dst.iso;
            Ok(partial_trace_second(&local, dst.d1, dst.d2)?.scale_real(1.0 / dst.d2 as f64))
        };
        unitaries[k] = conjugation_unitary(d, t)?;
    }
    w.unitaries = unitaries;

    // verify the action on a random algebra element
    let mut rng = random::seeded(0x5eed);
    let xs: Vec<ComplexMatrix> = w.blocks.iter().map(|b| random::gaussian(&mut rng, b.d1, b.d1)).collect();
    let x = w.embed(&xs);
    let got = reduced.apply(&x)?;
    let want = w.embed(&w.automorphism(&xs));
    let err = got.dist_fro(&want) / x.norm_fro();
    w.checks.push(Check::new("asymptotic_automorphism", err, tol.alg));
    if err > tol.alg {
        return Err(Error::Structural(format!("recovered block dynamics do not reproduce the map ({err:.3e})")));
    }
    Ok(())
}

/// Recover `U` (up to phase) from the map `T(x) = U† x U` on `d x d` matrices. The phase is
/// fixed by making the largest-magnitude entry real positive.
pub fn conjugation_unitary(d: usize, t: impl Fn(&ComplexMatrix) -> Result<ComplexMatrix>) -> Result<ComplexMatrix> {
    // T(E_a0) = u_a u_0† with u_a = U† e_a
    let t00 = t(&ComplexMatrix::unit(d, d, 0, 0))?.hermitian_part();
    let e = eigh(&t00)?;
    let v0 = e.vectors.column(d - 1);
    let mut udag = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        let ta = t(&ComplexMatrix::unit(d, d, a, 0))?;
        udag.set_column(a, &ta.mul_vec(&v0));
    }
    let mut u = udag.adjoint();
    let (mut best, mut phase) = (0.0, ONE);
    for z in u.as_slice() {
        if z.norm() > best + 1e-12 {
            best = z.norm();
            phase = z.conj() / z.norm();
        }
    }
    u = u.scale(phase);
    let defect = (&(&u.adjoint() * &u) - &ComplexMatrix::identity(d)).norm_max();
    if defect > 1e-6 {
        return Err(Error::Decomposition(format!("recovered block unitary is not unitary ({defect:.3e})")));
    }
    Ok(u)
}

/// Fix the global phase of a unitary: largest-magnitude entry real positive.
pub fn fix_phase(u: &ComplexMatrix) -> ComplexMatrix {
    let mut best = 0.0;
    let mut phase = ONE;
    for z in u.as_slice() {
        if z.norm() > best + 1e-12 {
            best = z.norm();
            phase = z.conj() / z.norm();
        }
    }
    if best == 0.0 {
        return u.clone();
    }
    u.scale(phase)
}
