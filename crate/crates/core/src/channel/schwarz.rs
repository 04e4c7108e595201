//! Sampling-based falsification of the operator Schwarz inequality
//! `Φ(X†X) ≥ Φ(X)†Φ(X)`.

use serde::Serialize;

use super::Channel;
use crate::matcore::{eigh, random, ComplexMatrix};

#[derive(Debug, Clone, Serialize)]
pub struct FalsificationReport {
    pub passed: bool,
    /// Smallest observed `λ_min(Φ(X†X) − Φ(X)†Φ(X)) / ‖X‖_F²`.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub witness: Option<ComplexMatrix>,
}

/// Normalized Schwarz defect of one operator, with the eigenvector achieving it.
pub fn schwarz_margin(c: &Channel, x: &ComplexMatrix) -> (f64, Vec<crate::matcore::C64>) {
    let n2 = x.norm_fro().powi(2);
    if n2 == 0.0 {
        return (0.0, vec![crate::matcore::ZERO; c.dim()]);
    }
    let fx = c.apply(x).expect("operator dimension");
    let fxx = c.apply(&(&x.adjoint() * x)).expect("operator dimension");
    let defect = &fxx - &(&fx.adjoint() * &fx);
    match eigh(&defect) {
        Ok(e) => (e.values[0] / n2, e.vectors.column(0)),
        Err(_) => (f64::NEG_INFINITY, vec![crate::matcore::ZERO; c.dim()]),
    }
}

/// Gaussian trials, matrix units, eigenvector-directed rank-one probes and a local search
/// around the worst sample. Never errors; a violation below `-tol` fails the report.
pub fn schwarz_falsify(c: &Channel, trials: usize, seed: u64, tol: f64) -> FalsificationReport {
    let d = c.dim();
    let mut rng = random::seeded(seed);
    let mut samples = 0usize;
    let mut worst = f64::INFINITY;
    let mut witness: Option<ComplexMatrix> = None;
    let mut worst_vec = Vec::new();
    let mut consider = |x: ComplexMatrix, worst: &mut f64, witness: &mut Option<ComplexMatrix>, wv: &mut Vec<_>| {
        let (m, v) = schwarz_margin(c, &x);
        samples += 1;
        if m < *worst {
            *worst = m;
            *witness = Some(x);
            *wv = v;
        }
    };

    for i in 0..d {
        for j in 0..d {
            consider(ComplexMatrix::unit(d, d, i, j), &mut worst, &mut witness, &mut worst_vec);
        }
    }
    for _ in 0..trials {
        let x = random::gaussian(&mut rng, d, d);
        consider(x, &mut worst, &mut witness, &mut worst_vec);
    }

    // rank-one probes X = u v† steered by the worst defect eigenvector
    for _ in 0..trials.div_ceil(4) {
        if worst_vec.is_empty() {
            break;
        }
        let v = ComplexMatrix::column_vector(&worst_vec);
        let u = random::gaussian(&mut rng, d, 1);
        consider(&u * &v.adjoint(), &mut worst, &mut witness, &mut worst_vec);
        consider(&v * &u.adjoint(), &mut worst, &mut witness, &mut worst_vec);
    }

    // local search around the current witness
    if let Some(mut x) = witness.clone() {
        let mut step = 0.5;
        for _ in 0..trials {
            let scale = step * x.norm_fro() / (d as f64);
            let cand = &x + &random::gaussian(&mut rng, d, d).scale_real(scale);
            let before = worst;
            consider(cand.clone(), &mut worst, &mut witness, &mut worst_vec);
            if worst < before {
                x = cand;
            } else {
                step = (step * 0.9).max(1e-3);
            }
        }
    }

    FalsificationReport { passed: worst >= -tol, worst_margin: worst, tolerance: tol, samples, witness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{amplitude_damping_kraus, transpose_map, Picture};

    #[test]
    fn cp_unital_channels_pass() {
        let c = Channel::from_kraus(&amplitude_damping_kraus(), Picture::Heisenberg).unwrap();
        let r = schwarz_falsify(&c, 200, 1, 1e-8);
        assert!(r.passed, "margin {}", r.worst_margin);
        let mut rng = random::seeded(4);
        let v = random::haar_isometry(&mut rng, 9, 3);
        let kraus: Vec<_> = (0..3).map(|k| v.submatrix(3 * k..3 * k + 3, 0..3)).collect();
        let c = Channel::from_kraus(&kraus, Picture::Heisenberg).unwrap();
        assert!(c.flags().unital);
        assert!(schwarz_falsify(&c, 200, 2, 1e-8).passed);
    }

    #[test]
    fn identity_has_zero_defect() {
        let r = schwarz_falsify(&Channel::identity(3, Picture::Heisenberg), 50, 0, 1e-8);
        assert!(r.passed);
        assert!(r.worst_margin.abs() < 1e-12);
    }

    #[test]
    fn transpose_is_falsified() {
        let t = transpose_map(2, Picture::Heisenberg);
        let r = schwarz_falsify(&t, 200, 3, 1e-8);
        assert!(!r.passed);
        assert!(r.worst_margin <= -0.99);
        let (m, _) = schwarz_margin(&t, &ComplexMatrix::unit(2, 2, 0, 1));
        assert!((m + 1.0).abs() < 1e-12);
    }
}
