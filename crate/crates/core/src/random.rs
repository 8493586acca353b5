//! Seeded sampling of states, unitaries and isometries.
//!
//! Every sampler takes an explicit RNG. [`seeded`] derives independent
//! ChaCha streams from `(seed, stream)` so parallel restarts never share state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::{det, ComplexMatrix, C64, ZERO};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian, `E|z|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(rng)).collect()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Gram-Schmidt on the columns of `m`. Applied to a Gaussian matrix this
/// yields a Haar-distributed isometry.
pub fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = (0..m.cols()).map(|c| m.column(c)).collect();
    for j in 0..cols.len() {
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for i in 0..j {
                let proj: C64 = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let (left, right) = cols.split_at_mut(j);
                for (x, y) in right[0].iter_mut().zip(&left[i]) {
                    *x -= proj * y;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut cols[j] {
            *x /= norm;
        }
    }
    ComplexMatrix::from_fn(m.rows(), m.cols(), |r, c| cols[c][r])
}

/// Haar-random `rows x cols` isometry (`rows >= cols`).
pub fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    orthonormalize_columns(&gaussian_matrix(rng, rows, cols))
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    haar_isometry(rng, n, n)
}

/// Random element of SL(d, C): a Gaussian matrix rescaled to unit determinant.
pub fn random_sl<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    loop {
        let m = gaussian_matrix(rng, d, d);
        let dt = det(&m).expect("square");
        if dt.norm() > 1e-6 {
            return m.scale(dt.powf(-1.0 / d as f64));
        }
    }
}

/// Random special unitary (unit determinant).
pub fn random_special_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let u = haar_unitary(rng, d);
    let dt = det(&u).expect("square");
    u.scale(dt.powf(-1.0 / d as f64))
}

/// Random density matrix of the given rank: `G G^dag / Tr` with `G` a Gaussian `n x rank` matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, rank);
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr)
}

pub fn zero_vector(n: usize) -> Vec<C64> {
    vec![ZERO; n]
}
