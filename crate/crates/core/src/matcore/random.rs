//! Seeded random matrices: Gaussian ensembles, Haar unitaries and isometries, states.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian with unit variance per entry.
pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

pub fn hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    gaussian(rng, n, n).hermitian_part()
}

/// Haar-distributed isometry with orthonormal columns (`rows >= cols`), via Gram-Schmidt
/// QR of a Gaussian matrix with the phases of `R` removed.
pub fn haar_isometry(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    loop {
        let mut g = gaussian(rng, rows, cols);
        let mut ok = true;
        for j in 0..cols {
            // two passes of modified Gram-Schmidt for stability
            for _ in 0..2 {
                for k in 0..j {
                    let proj: C64 = (0..rows).map(|i| g[(i, k)].conj() * g[(i, j)]).sum();
                    for i in 0..rows {
                        let gk = g[(i, k)];
                        g[(i, j)] -= gk * proj;
                    }
                }
            }
            let nrm = (0..rows).map(|i| g[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            if nrm < 1e-8 {
                ok = false;
                break;
            }
            for i in 0..rows {
                g[(i, j)] /= nrm;
            }
        }
        // Gram-Schmidt yields R with positive real diagonal, so Q is already Haar.
        if ok {
            return g;
        }
    }
}

pub fn haar_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    haar_isometry(rng, n, n)
}

/// Random full-rank density matrix `G G† / tr`.
pub fn density_matrix(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = gaussian(rng, n, n);
    let s = &g * &g.adjoint();
    let tr = s.trace().re;
    s.scale_real(1.0 / tr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitary_is_unitary_and_seeded() {
        let u = haar_unitary(&mut seeded(3), 6);
        assert!((&u.adjoint() * &u).approx_eq(&ComplexMatrix::identity(6), 1e-13));
        assert_eq!(u, haar_unitary(&mut seeded(3), 6));
    }

    #[test]
    fn isometry_columns_orthonormal() {
        let v = haar_isometry(&mut seeded(9), 7, 3);
        assert!((&v.adjoint() * &v).approx_eq(&ComplexMatrix::identity(3), 1e-13));
    }

    #[test]
    fn density_matrix_unit_trace() {
        let r = density_matrix(&mut seeded(1), 4);
        assert!((r.trace().re - 1.0).abs() < 1e-14);
        assert!(r.is_hermitian(1e-14));
    }
}
