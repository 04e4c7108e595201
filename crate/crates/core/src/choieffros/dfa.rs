//! `K_{P_P}` and the decoherence-free algebra `N⋆ = Attr ⊕ K_{P_P} = 𝔄 ⊕ B(H1)`.

use serde::Serialize;

use super::star_unchecked;
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::matcore::{orthonormal_span, random, span_distance, ComplexMatrix, HilbertSplit};
use crate::spectral::ProjectionMap;
use crate::structure::{algebra_closure_defect, AttractorStructure};
use crate::tolerance::{Check, Tolerances};

#[derive(Debug, Clone)]
pub struct KernelIdeal {
    /// `V1 E_ij V1†`.
    pub basis: Vec<ComplexMatrix>,
    pub checks: Vec<Check>,
}

/// `{X : P_P(X†X) = P_P(XX†) = 0}` as `0 ⊕ B(H1)`, with the defining conditions and their
/// block trace forms checked on every basis element.
pub fn kernel_ideal(pp: &ProjectionMap, split: &HilbertSplit, tol: &Tolerances) -> Result<KernelIdeal> {
    let h1 = split.h1_dim();
    let (v0, v1) = (split.v0(), split.v1());
    let (v0d, v1d) = (v0.adjoint(), v1.adjoint());
    let mut basis = Vec::with_capacity(h1 * h1);
    let (mut defining, mut trace_form): (f64, f64) = (0.0, 0.0);
    for j in 0..h1 {
        for i in 0..h1 {
            let x = &(&v1 * &ComplexMatrix::unit(h1, h1, i, j)) * &v1d;
            let xd = x.adjoint();
            for y in [&xd * &x, &x * &xd] {
                defining = defining.max(pp.apply(&y).norm_fro());
                // P_P only sees the 00 block: tr P00(Y00) and tr P11(Y00) vanish
                let y00 = &(&v0d * &y) * &v0;
                let img = pp.apply(&(&(&v0 * &y00) * &v0d));
                let t00 = (&(&v0d * &img) * &v0).trace().norm();
                let t11 = (&(&v1d * &img) * &v1).trace().norm();
                trace_form = trace_form.max(t00).max(t11);
            }
            basis.push(x);
        }
    }
    let checks = vec![
        Check::new("kernel_defining_conditions", defining, tol.alg),
        Check::new("kernel_trace_forms", trace_form, tol.alg),
    ];
    if defining > tol.alg || trace_form > tol.alg {
        return Err(Error::DerivationViolation(format!(
            "a transient basis element is not annihilated by the peripheral projection ({defining:.3e}, {trace_form:.3e})"
        )));
    }
    Ok(KernelIdeal { basis, checks })
}

#[derive(Debug, Clone, Serialize)]
pub struct H01Form {
    #[serde(skip)]
    pub algebra_00: Vec<ComplexMatrix>,
    pub transient_full: bool,
}

#[derive(Debug, Clone)]
pub struct DfaDecomposition {
    pub attr_part: Vec<ComplexMatrix>,
    pub ideal_part: Vec<ComplexMatrix>,
    /// `{V0 a V0†} ∪ {V1 E_ij V1†}`.
    pub nstar_basis: Vec<ComplexMatrix>,
    pub h01_form: H01Form,
    pub equals_attractor: bool,
    pub checks: Vec<Check>,
}

impl DfaDecomposition {
    pub fn nstar_dim(&self) -> usize {
        self.nstar_basis.len()
    }
}

/// Assemble `N⋆` as `𝔄 ⊕ B(H1)` and compare with `Attr ⊕ K_{P_P}`.
pub fn dfa_nstar(attr: &AttractorStructure, ideal: &KernelIdeal, tol: &Tolerances) -> Result<DfaDecomposition> {
    let v0 = attr.split.v0();
    let mut checks = ideal.checks.clone();
    let mut nstar: Vec<ComplexMatrix> =
        attr.algebra_basis_00.iter().map(|a| &(&v0 * a) * &v0.adjoint()).collect();
    nstar.extend(ideal.basis.iter().cloned());
    let expected = attr.algebra_basis_00.len() + attr.h1 * attr.h1;
    if nstar.len() != expected {
        return Err(Error::DerivationViolation(format!("N⋆ has {} generators, expected {expected}", nstar.len())));
    }

    let attr_orth = orthonormal_span(&attr.attractor_basis, 1e-10)?;
    let mut sum: Vec<ComplexMatrix> = attr.attractor_basis.clone();
    sum.extend(ideal.basis.iter().cloned());
    let sum_orth = orthonormal_span(&sum, 1e-10)?;
    let additive = sum_orth.len() == attr_orth.len() + ideal.basis.len();
    checks.push(Check::new("direct_sum_rank_gap", (attr_orth.len() + ideal.basis.len() - sum_orth.len()) as f64, 0.0));
    let nstar_orth = orthonormal_span(&nstar, 1e-10)?;
    let dist = span_distance(&sum_orth, &nstar_orth);
    checks.push(Check::new("decompositions_agree", dist, tol.alg));
    if !additive || dist > tol.alg {
        return Err(Error::DerivationViolation(format!(
            "Attr ⊕ K and 𝔄 ⊕ B(H1) differ (direct sum {additive}, span distance {dist:.3e})"
        )));
    }
    let closure = algebra_closure_defect(&nstar_orth);
    checks.push(Check::new("nstar_closure", closure, tol.alg));
    if closure > tol.alg {
        return Err(Error::DerivationViolation(format!("N⋆ is not closed under product/adjoint ({closure:.3e})")));
    }
    let equals_attractor = span_distance(&nstar_orth, &attr_orth) <= tol.alg;
    let faithful = attr.h1 == 0;
    if equals_attractor != faithful {
        return Err(Error::DerivationViolation(format!(
            "N⋆ = Attr is {equals_attractor} but the map is {}faithful",
            if faithful { "" } else { "not " }
        )));
    }
    Ok(DfaDecomposition {
        attr_part: attr.attractor_basis.clone(),
        ideal_part: ideal.basis.clone(),
        nstar_basis: nstar,
        h01_form: H01Form { algebra_00: attr.algebra_basis_00.clone(), transient_full: ideal.basis.len() == attr.h1 * attr.h1 },
        equals_attractor,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DefinitionReport {
    pub n_max: usize,
    pub trials: usize,
    /// Worst `‖Φⁿ(Y⋆X) − Φⁿ(Y)⋆Φⁿ(X)‖ / (n ‖X‖ ‖Y‖)` over both orders.
    pub worst_member_defect: f64,
    pub tolerance: f64,
    /// Random operators outside `N⋆` that violated the conditions for some `n`.
    pub probe_violations: usize,
    pub probes: usize,
    pub passed: bool,
}

fn two_sided_defect(powers: &[ComplexMatrix], pp: &ProjectionMap, x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    let d = pp.dim;
    let apply = |s: &ComplexMatrix, m: &ComplexMatrix| crate::channel::apply_superop(s, m, d, d);
    let yx = star_unchecked(pp, y, x);
    let xy = star_unchecked(pp, x, y);
    let scale = x.norm_fro() * y.norm_fro();
    let mut worst: f64 = 0.0;
    for (k, s) in powers.iter().enumerate() {
        let (fx, fy) = (apply(s, x), apply(s, y));
        let a = apply(s, &yx).dist_fro(&star_unchecked(pp, &fy, &fx));
        let b = apply(s, &xy).dist_fro(&star_unchecked(pp, &fx, &fy));
        worst = worst.max(a.max(b) / (scale * (k + 1) as f64));
    }
    worst
}

/// Sample the defining conditions `Φⁿ(Y⋆X) = Φⁿ(Y)⋆Φⁿ(X)` (both orders) for members of `N⋆`,
/// and probe random non-members.
pub fn dfa_definition_check(
    c: &Channel,
    pp: &ProjectionMap,
    dfa: &DfaDecomposition,
    n_max: usize,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<DefinitionReport> {
    let d = c.dim();
    let mut powers = Vec::with_capacity(n_max);
    let mut s = c.superop().clone();
    for _ in 0..n_max {
        powers.push(s.clone());
        s = c.superop() * &s;
    }
    let mut rng = random::seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let y = random::gaussian(&mut rng, d, d);
        let w = random::gaussian(&mut rng, dfa.nstar_basis.len().max(1), 1);
        let mut x = ComplexMatrix::zeros(d, d);
        for (b, coef) in dfa.nstar_basis.iter().zip(w.as_slice()) {
            x += &b.scale(*coef);
        }
        if x.norm_fro() == 0.0 {
            continue;
        }
        worst = worst.max(two_sided_defect(&powers, pp, &x, &y));
    }
    let mut violations = 0;
    let probes = trials.min(16);
    let nstar_orth = orthonormal_span(&dfa.nstar_basis, 1e-10)?;
    for _ in 0..probes {
        let x = random::gaussian(&mut rng, d, d);
        if crate::matcore::projection_residual(&nstar_orth, &x) < 1e-6 {
            continue;
        }
        let y = random::gaussian(&mut rng, d, d);
        if two_sided_defect(&powers, pp, &x, &y) > tol.alg {
            violations += 1;
        }
    }
    let passed = worst <= tol.alg;
    if !passed {
        return Err(Error::DerivationViolation(format!(
            "a member of N⋆ violates the multiplicativity conditions ({worst:.3e})"
        )));
    }
    Ok(DefinitionReport {
        n_max,
        trials,
        worst_member_defect: worst,
        tolerance: tol.alg,
        probe_violations: violations,
        probes,
        passed,
    })
}
