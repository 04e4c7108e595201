//! The Choi-Effros product `X ⋆ Y = P_P(XY)` on the attractor, its C*-axioms, peripheral
//! automorphy and the decoherence-free algebra `N⋆`.

mod dfa;

pub use dfa::{
    dfa_definition_check, dfa_nstar, kernel_ideal, DefinitionReport, DfaDecomposition, H01Form, KernelIdeal,
};

use rand::Rng;
use serde::Serialize;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::matcore::{
    coordinates, norm_op, orthonormal_span, projection_residual,
    random::{self, SeededRng},
    ComplexMatrix, C64,
};
use crate::spectral::ProjectionMap;
use crate::structure::AttractorStructure;
use crate::tolerance::Tolerances;

fn attractor_membership(pp: &ProjectionMap, x: &ComplexMatrix) -> f64 {
    pp.apply(x).dist_fro(x) / x.norm_fro().max(1.0)
}

/// `P_P(xy)` for `x, y` in the attractor (`P_P(x) = x` within `tol.alg`).
pub fn star_product(pp: &ProjectionMap, x: &ComplexMatrix, y: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    for (name, op) in [("left", x), ("right", y)] {
        let r = attractor_membership(pp, op);
        if r > tol.alg {
            return Err(Error::Domain(format!("{name} factor is not in the attractor (residual {r:.3e})")));
        }
    }
    Ok(pp.apply(&(x * y)))
}

/// `P_P(xy)` with no membership check.
pub fn star_unchecked(pp: &ProjectionMap, x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    pp.apply(&(x * y))
}

/// The attractor with its Choi-Effros structure constants.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    /// HS-orthonormal attractor basis.
    pub basis: Vec<ComplexMatrix>,
    /// `n x n²`: column `i + j·n` holds the coordinates of `B_i ⋆ B_j`.
    pub product_table: ComplexMatrix,
    pub p_p: ProjectionMap,
    pub closure_defect: f64,
    pub unit_defect: f64,
    pub involution_defect: f64,
}

impl StarAlgebra {
    pub fn new(pp: &ProjectionMap, attractor: &[ComplexMatrix], tol: &Tolerances) -> Result<Self> {
        let basis = orthonormal_span(attractor, 1e-10)?;
        let n = basis.len();
        let d = pp.dim;
        let mut table = ComplexMatrix::zeros(n, n * n);
        let mut closure: f64 = 0.0;
        let mut involution: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let p = star_unchecked(pp, &basis[i], &basis[j]);
                closure = closure.max(projection_residual(&basis, &p));
                table.set_column(i + j * n, &coordinates(&basis, &p));
                let q = star_unchecked(pp, &basis[j].adjoint(), &basis[i].adjoint());
                involution = involution.max(p.adjoint().dist_fro(&q));
            }
        }
        let id = ComplexMatrix::identity(d);
        let mut unit: f64 = attractor_membership(pp, &id);
        for b in &basis {
            unit = unit.max(star_unchecked(pp, &id, b).dist_fro(b)).max(star_unchecked(pp, b, &id).dist_fro(b));
        }
        if closure > tol.alg {
            return Err(Error::InternalConsistency(format!("attractor is not closed under the star product ({closure:.3e})")));
        }
        Ok(Self {
            basis,
            product_table: table,
            p_p: pp.clone(),
            closure_defect: closure,
            unit_defect: unit,
            involution_defect: involution,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Product of two coordinate vectors via the structure constants.
    pub fn multiply_coords(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                let w = x[i] * y[j];
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.product_table[(k, i + j * n)];
                }
            }
        }
        out
    }

    pub fn element(&self, coords: &[C64]) -> ComplexMatrix {
        let (r, c) = self.basis.first().map(|b| b.shape()).unwrap_or((0, 0));
        let mut out = ComplexMatrix::zeros(r, c);
        for (b, w) in self.basis.iter().zip(coords) {
            out += &b.scale(*w);
        }
        out
    }

    fn random_element(&self, rng: &mut SeededRng) -> ComplexMatrix {
        let coords: Vec<C64> =
            (0..self.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        self.element(&coords)
    }

    pub fn star(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
        star_unchecked(&self.p_p, x, y)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CstarReport {
    pub samples: usize,
    pub associativity: f64,
    pub unit: f64,
    pub involution: f64,
    /// `max |‖X†⋆X‖ − ‖X‖²| / ‖X‖²`.
    pub cstar_identity: f64,
    /// `max ‖Φ(X⋆Y) − Φ(X)⋆Φ(Y)‖ / (‖X‖‖Y‖)`, when a map is supplied.
    pub automorphism: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Sample the C*-axioms (and optionally `Φ` being a ⋆-automorphism) on random elements.
pub fn verify_cstar(
    alg: &StarAlgebra,
    phi: Option<&Channel>,
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<CstarReport> {
    let mut rng = random::seeded(seed);
    let (mut assoc, mut unit, mut invol, mut cstar, mut auto): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let d = alg.p_p.dim;
    let id = ComplexMatrix::identity(d);
    let n = if alg.dim() == 0 { 0 } else { trials };
    for _ in 0..n {
        let x = alg.random_element(&mut rng);
        let y = alg.random_element(&mut rng);
        let z = alg.random_element(&mut rng);
        let scale = x.norm_fro() * y.norm_fro() * z.norm_fro();
        let left = alg.star(&alg.star(&x, &y), &z);
        let right = alg.star(&x, &alg.star(&y, &z));
        assoc = assoc.max(left.dist_fro(&right) / scale);
        unit = unit.max(alg.star(&id, &x).dist_fro(&x).max(alg.star(&x, &id).dist_fro(&x)) / x.norm_fro());
        let xy = alg.star(&x, &y);
        invol = invol.max(xy.adjoint().dist_fro(&alg.star(&y.adjoint(), &x.adjoint())) / (x.norm_fro() * y.norm_fro()));
        let nx = norm_op(&x)?;
        let nxx = norm_op(&alg.star(&x.adjoint(), &x))?;
        cstar = cstar.max((nxx - nx * nx).abs() / (nx * nx));
        if let Some(phi) = phi {
            let lhs = phi.apply(&xy)?;
            let rhs = alg.star(&phi.apply(&x)?, &phi.apply(&y)?);
            auto = auto.max(lhs.dist_fro(&rhs) / (x.norm_fro() * y.norm_fro()));
        }
    }
    let automorphism = phi.map(|_| auto);
    let passed = [assoc, unit, invol, cstar, auto].iter().all(|v| *v <= tol.alg);
    Ok(CstarReport {
        samples: n,
        associativity: assoc,
        unit,
        involution: invol,
        cstar_identity: cstar,
        automorphism,
        tolerance: tol.alg,
        passed,
    })
}

/// `max ‖Λ(a)⋆Λ(b) − Λ(ab)‖` over random `a, b` in the algebra.
pub fn lambda_isomorphism_defect(pp: &ProjectionMap, attr: &AttractorStructure, trials: usize, seed: u64) -> f64 {
    let mut rng = random::seeded(seed);
    let basis = &attr.algebra_basis_00;
    if basis.is_empty() {
        return 0.0;
    }
    let pick = |rng: &mut SeededRng| {
        let mut out = ComplexMatrix::zeros(attr.h0, attr.h0);
        for b in basis {
            out += &b.scale(C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
        out
    };
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = pick(&mut rng);
        let b = pick(&mut rng);
        let lhs = star_unchecked(pp, &attr.lambda(&a), &attr.lambda(&b));
        let rhs = attr.lambda(&(&a * &b));
        worst = worst.max(lhs.dist_fro(&rhs) / (a.norm_fro() * b.norm_fro()));
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct AutomorphyReport {
    pub peripherally_automorphic: bool,
    /// `max ‖B_i⋆B_j − B_i B_j‖` over orthonormal attractor basis pairs.
    pub star_vs_product: f64,
    /// `max ‖P₁₁(ab) − P₁₁(a)P₁₁(b)‖` over algebra basis pairs.
    pub p11_multiplicativity: f64,
    /// Worst algebra basis pair `(a, b)` for the multiplicativity test.
    pub witness: Option<(ComplexMatrix, ComplexMatrix)>,
}

/// Whether `⋆` coincides with the ordinary product on the attractor, decided twice: directly
/// and through multiplicativity of `P₁₁`.
pub fn peripherally_automorphic(
    pp: &ProjectionMap,
    attr: &AttractorStructure,
    tol: &Tolerances,
) -> Result<AutomorphyReport> {
    let basis = orthonormal_span(&attr.attractor_basis, 1e-10)?;
    let mut direct: f64 = 0.0;
    for a in &basis {
        for b in &basis {
            direct = direct.max(star_unchecked(pp, a, b).dist_fro(&(a * b)));
        }
    }
    let mut via_p11: f64 = 0.0;
    let mut witness = None;
    if attr.h1 > 0 {
        for a in &attr.algebra_basis_00 {
            for b in &attr.algebra_basis_00 {
                let lhs = attr.apply_p11(&(a * b));
                let rhs = &attr.apply_p11(a) * &attr.apply_p11(b);
                let dist = lhs.dist_fro(&rhs);
                if dist > via_p11 {
                    via_p11 = dist;
                    witness = Some((a.clone(), b.clone()));
                }
            }
        }
    }
    let t1 = direct <= tol.alg;
    let t2 = via_p11 <= tol.alg;
    if t1 != t2 {
        return Err(Error::InternalConsistency(format!(
            "peripheral automorphy tests disagree (star vs product {direct:.3e}, P11 multiplicativity {via_p11:.3e})"
        )));
    }
    Ok(AutomorphyReport {
        peripherally_automorphic: t1,
        star_vs_product: direct,
        p11_multiplicativity: via_p11,
        witness: if t1 { None } else { witness },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{amplitude_damping_kraus, Picture};
    use crate::matcore::ONE;
    use crate::spectral::spectrum;
    use crate::structure::analyze_structure;

    fn setup(c: &Channel) -> (ProjectionMap, crate::structure::StructureAnalysis) {
        let tol = Tolerances::default();
        let spec = spectrum(c, &tol).unwrap();
        let pp = spec.peripheral_projection().unwrap();
        let s = analyze_structure(c, &spec, &pp, &tol, 1).unwrap();
        (pp, s)
    }

    #[test]
    fn identity_star_is_matrix_product() {
        let c = Channel::identity(2, Picture::Heisenberg);
        let (pp, _) = setup(&c);
        let tol = Tolerances::default();
        let x = crate::matcore::testutil::random_matrix(2, 2, 1);
        let y = crate::matcore::testutil::random_matrix(2, 2, 2);
        assert!(star_product(&pp, &x, &y, &tol).unwrap().approx_eq(&(&x * &y), 1e-12));
    }

    #[test]
    fn amplitude_damping_unit_and_domain() {
        let c = Channel::from_kraus(&amplitude_damping_kraus(), Picture::Heisenberg).unwrap();
        let (pp, s) = setup(&c);
        let tol = Tolerances::default();
        let id = ComplexMatrix::identity(2);
        assert!(star_product(&pp, &id, &id, &tol).unwrap().approx_eq(&id, 1e-12));
        let e01 = ComplexMatrix::unit(2, 2, 0, 1);
        assert!(matches!(star_product(&pp, &e01, &id, &tol), Err(Error::Domain(_))));
        let alg = StarAlgebra::new(&pp, &s.attractor.attractor_basis, &tol).unwrap();
        assert_eq!(alg.dim(), 1);
        let r = verify_cstar(&alg, Some(&c), 16, 2, &tol).unwrap();
        assert!(r.passed, "{r:?}");
        let a = peripherally_automorphic(&pp, &s.attractor, &tol).unwrap();
        assert!(a.peripherally_automorphic);
    }

    #[test]
    fn structure_constants_reproduce_products() {
        let u = crate::matcore::testutil::random_unitary(2, 4);
        let c = Channel::from_kraus(&[u], Picture::Heisenberg).unwrap();
        let (pp, _) = setup(&c);
        let tol = Tolerances::default();
        let basis: Vec<ComplexMatrix> = (0..4).map(|k| ComplexMatrix::unit(2, 2, k % 2, k / 2)).collect();
        let alg = StarAlgebra::new(&pp, &basis, &tol).unwrap();
        let x = [ONE, C64::new(0.5, 1.0), ONE, C64::new(-1.0, 0.0)];
        let y = [C64::new(0.0, 2.0), ONE, C64::new(0.3, 0.0), ONE];
        let prod = alg.element(&alg.multiply_coords(&x, &y));
        assert!(prod.approx_eq(&(&alg.element(&x) * &alg.element(&y)), 1e-10));
        assert!(alg.unit_defect < 1e-10 && alg.involution_defect < 1e-10);
    }

    #[test]
    fn non_multiplicative_transient_map() {
        // H0 = C², H1 = C¹; Φ(X) = X00 ⊕ tr(X00 ρ) pinched to the diagonal algebra
        let rho = [0.7, 0.3];
        let c = Channel::from_map(3, Picture::Heisenberg, |x| {
            let mut y = ComplexMatrix::zeros(3, 3);
            y[(0, 0)] = x[(0, 0)];
            y[(1, 1)] = x[(1, 1)];
            y[(2, 2)] = x[(0, 0)] * rho[0] + x[(1, 1)] * rho[1];
            y
        })
        .unwrap();
        let (pp, s) = setup(&c);
        let tol = Tolerances::default();
        let a = peripherally_automorphic(&pp, &s.attractor, &tol).unwrap();
        assert!(!a.peripherally_automorphic);
        assert!(a.witness.is_some());
        let alg = StarAlgebra::new(&pp, &s.attractor.attractor_basis, &tol).unwrap();
        let r = verify_cstar(&alg, Some(&c), 32, 5, &tol).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(lambda_isomorphism_defect(&pp, &s.attractor, 8, 1) < 1e-9);
    }
}
