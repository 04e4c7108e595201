//! Ground truth for synthesized channels and gauge-aware comparison with recovered structure.

use serde::{Deserialize, Serialize};

use super::{unfold, UnfoldSpec};
use crate::channel::Channel;
use crate::error::Result;
use crate::matcore::{
    eigh, kron, orthonormal_span, partial_trace_second, random, span_distance, ComplexMatrix, C64,
};
use crate::structure::{conjugation_unitary, cycle_lengths, StructureAnalysis};
use crate::tolerance::Tolerances;

/// Declared asymptotics of a synthesized channel, which is `X ↦ W† Φ_E(W X W†) W` for the
/// unitary `frame` `W`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub spec: UnfoldSpec,
    pub frame: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub channel: Channel,
    pub truth: GroundTruth,
}

impl Synthesis {
    /// `Φ_E` in the coordinates of the unfold spec.
    pub fn new(spec: UnfoldSpec, tol: &Tolerances) -> Result<Self> {
        let channel = unfold(&spec, tol)?;
        let frame = ComplexMatrix::identity(spec.dim());
        Ok(Self { channel, truth: GroundTruth { spec, frame } })
    }

    /// `Φ_E` seen in a Haar-random basis drawn from the unfold spec seed.
    pub fn rotated(spec: UnfoldSpec, tol: &Tolerances) -> Result<Self> {
        let base = unfold(&spec, tol)?;
        let mut rng = random::seeded(spec.seed ^ 0x5a5a_5a5a);
        let frame = random::haar_unitary(&mut rng, spec.dim());
        let channel = base.rotated(&frame)?;
        Ok(Self { channel, truth: GroundTruth { spec, frame } })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripItem {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    pub items: Vec<RoundTripItem>,
    pub passed: bool,
}

impl RoundTripReport {
    fn push(&mut self, name: &str, value: f64, tolerance: f64) {
        let passed = value <= tolerance && !value.is_nan();
        self.items.push(RoundTripItem { name: name.into(), value, tolerance, passed });
    }

    pub fn failures(&self) -> Vec<&RoundTripItem> {
        self.items.iter().filter(|i| !i.passed).collect()
    }
}

/// `‖A − e^{iθ} B‖_F` minimized over the phase.
pub fn phase_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap: C64 = b.as_slice().iter().zip(a.as_slice()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    a.dist_fro(&b.scale(phase))
}

struct Declared<'a> {
    spec: &'a UnfoldSpec,
    frame: &'a ComplexMatrix,
}

impl Declared<'_> {
    fn to_frame(&self, m: &ComplexMatrix) -> ComplexMatrix {
        &(&self.frame.adjoint() * m) * self.frame
    }

    fn out_of_frame(&self, m: &ComplexMatrix) -> ComplexMatrix {
        &(self.frame * m) * &self.frame.adjoint()
    }

    /// Block `j` element `x ⊗ I` as an operator on `H`, in the channel's coordinates.
    fn block(&self, j: usize, x: &ComplexMatrix) -> ComplexMatrix {
        let xs: Vec<ComplexMatrix> = self
            .spec
            .blocks
            .iter()
            .enumerate()
            .map(|(l, b)| if l == j { x.clone() } else { ComplexMatrix::zeros(b.d1, b.d1) })
            .collect();
        let d = self.spec.dim();
        let mut full = ComplexMatrix::zeros(d, d);
        full.set_submatrix(0, 0, &self.spec.embed(&xs));
        self.to_frame(&full)
    }

    /// `tr_2` of block `j` of an operator given in the channel's coordinates, normalized.
    fn component(&self, j: usize, m: &ComplexMatrix) -> ComplexMatrix {
        let z = self.out_of_frame(m);
        let b = self.spec.blocks[j];
        let o: usize = self.spec.blocks[..j].iter().map(|c| c.d1 * c.d2).sum();
        let r = b.d1 * b.d2;
        partial_trace_second(&z.submatrix(o..o + r, o..o + r), b.d1, b.d2)
            .expect("block shape")
            .scale_real(1.0 / b.d2 as f64)
    }
}

fn sorted_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v = eigh(&m.hermitian_part()).map(|e| e.values).unwrap_or_default();
    v.sort_by(f64::total_cmp);
    v
}

/// Compare recovered structure with the declared one, up to block relabeling, local bases
/// and phases. `attractor` is an attractor basis computed directly from the channel.
pub fn compare_roundtrip(
    truth: &GroundTruth,
    s: &StructureAnalysis,
    attractor: &[ComplexMatrix],
    tol_rt: f64,
    tol_attr: f64,
) -> RoundTripReport {
    let mut rep = RoundTripReport { items: Vec::new(), passed: false };
    let spec = &truth.spec;
    let dec = Declared { spec, frame: &truth.frame };
    let w = &s.wolf;

    let mut declared_shapes: Vec<(usize, usize)> = spec.blocks.iter().map(|b| (b.d1, b.d2)).collect();
    let mut recovered_shapes: Vec<(usize, usize)> = w.blocks.iter().map(|b| (b.d1, b.d2)).collect();
    declared_shapes.sort();
    recovered_shapes.sort();
    let shapes_ok = declared_shapes == recovered_shapes && s.split.h1_dim() == spec.h1_dim;
    rep.push("block_shapes", if shapes_ok { 0.0 } else { 1.0 }, 0.0);

    let mut dc = cycle_lengths(&spec.perm);
    let mut rc = cycle_lengths(&w.permutation);
    dc.sort();
    rc.sort();
    rep.push("cycle_type", if dc == rc { 0.0 } else { 1.0 }, 0.0);

    let v0 = s.split.v0();
    let recovered_block = |k: usize, x: &ComplexMatrix| {
        let b = &w.blocks[k];
        let local = &(&b.iso * &kron(x, &ComplexMatrix::identity(b.d2))) * &b.iso.adjoint();
        &(&v0 * &local) * &v0.adjoint()
    };

    // match blocks by projector overlap
    let m = w.blocks.len();
    let mut pairs = Vec::new();
    if shapes_ok {
        for k in 0..m {
            let pk = recovered_block(k, &ComplexMatrix::identity(w.blocks[k].d1));
            for (j, b) in spec.blocks.iter().enumerate() {
                if (b.d1, b.d2) != (w.blocks[k].d1, w.blocks[k].d2) {
                    continue;
                }
                let qj = dec.block(j, &ComplexMatrix::identity(b.d1));
                let ov = (&pk * &qj).trace().re / (b.d1 * b.d2) as f64;
                pairs.push((ov, k, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut sigma = vec![usize::MAX; m];
    let mut taken = vec![false; spec.blocks.len()];
    let mut worst_overlap: f64 = 0.0;
    for (ov, k, j) in pairs {
        if sigma[k] == usize::MAX && !taken[j] {
            sigma[k] = j;
            taken[j] = true;
            worst_overlap = worst_overlap.max(1.0 - ov);
        }
    }
    let matched = shapes_ok && sigma.iter().all(|&j| j != usize::MAX);
    rep.push("block_matching", if matched { worst_overlap } else { f64::INFINITY }, tol_rt);
    if !matched {
        rep.passed = false;
        return rep;
    }

    // local gauges: declared components of a recovered x ⊗ I are G x G†
    let mut gauges = Vec::with_capacity(m);
    let mut gauge_err: f64 = 0.0;
    for k in 0..m {
        let d1 = w.blocks[k].d1;
        let t = |x: &ComplexMatrix| Ok(dec.component(sigma[k], &recovered_block(k, x)));
        match conjugation_unitary(d1, t) {
            Ok(u) => {
                let g = u.adjoint();
                let probe = crate::matcore::random::gaussian(&mut random::seeded(k as u64), d1, d1);
                let err = dec.component(sigma[k], &recovered_block(k, &probe)).dist_fro(&(&(&g * &probe) * &g.adjoint()));
                gauge_err = gauge_err.max(err / probe.norm_fro());
                gauges.push(g);
            }
            Err(_) => {
                gauge_err = f64::INFINITY;
                gauges.push(ComplexMatrix::identity(d1));
            }
        }
    }
    rep.push("local_gauge", gauge_err, tol_rt);

    let relabel_ok = (0..m).all(|k| sigma[w.permutation[k]] == spec.perm[sigma[k]]);
    rep.push("permutation", if relabel_ok { 0.0 } else { 1.0 }, 0.0);

    let mut inv = vec![0; m];
    for (k, &p) in w.permutation.iter().enumerate() {
        inv[p] = k;
    }
    let mut u_err: f64 = 0.0;
    for mb in 0..m {
        let expected = &(&gauges[mb].adjoint() * &spec.unitaries[sigma[mb]]) * &gauges[inv[mb]];
        u_err = u_err.max(phase_distance(&w.unitaries[mb], &expected));
    }
    rep.push("unitaries", u_err, tol_rt);

    let mut rho_err: f64 = 0.0;
    for (k, b) in w.blocks.iter().enumerate() {
        let declared = spec.weight(sigma[k]);
        let (a, c) = (sorted_eigenvalues(&b.rho), sorted_eigenvalues(&declared));
        for (x, y) in a.iter().zip(&c) {
            rho_err = rho_err.max((x - y).abs());
        }
    }
    rep.push("rho", rho_err, tol_rt);

    let mut p11_err: f64 = 0.0;
    let n = spec.algebra_dim();
    let v1 = s.split.v1();
    let (h0, d) = (spec.h0_dim(), spec.dim());
    for k in 0..n {
        let mut co = vec![crate::matcore::ZERO; n];
        co[k] = crate::matcore::ONE;
        let xs = spec.components(&co);
        let mut full0 = ComplexMatrix::zeros(d, d);
        full0.set_submatrix(0, 0, &spec.embed(&xs));
        let e = dec.to_frame(&full0);
        let mut full1 = ComplexMatrix::zeros(d, d);
        if spec.h1_dim > 0 {
            full1.set_submatrix(h0, h0, &spec.apply_transient(&xs));
        }
        let want = dec.to_frame(&full1);
        let got = if s.split.h1_dim() > 0 {
            let x00 = &(&v0.adjoint() * &e) * &v0;
            &(&v1 * &s.attractor.apply_p11(&x00)) * &v1.adjoint()
        } else {
            ComplexMatrix::zeros(d, d)
        };
        p11_err = p11_err.max(got.dist_fro(&want));
    }
    rep.push("p11", p11_err, tol_rt);

    let declared_attr: Vec<ComplexMatrix> = (0..n)
        .map(|k| {
            let mut co = vec![crate::matcore::ZERO; n];
            co[k] = crate::matcore::ONE;
            dec.to_frame(&spec.lambda(&spec.components(&co)))
        })
        .collect();
    let dist = match (orthonormal_span(&declared_attr, 1e-10), orthonormal_span(attractor, 1e-10)) {
        (Ok(a), Ok(b)) => span_distance(&a, &b),
        _ => f64::INFINITY,
    };
    rep.push("attractor_span", dist, tol_attr);

    rep.passed = rep.items.iter().all(|i| i.passed);
    rep
}
