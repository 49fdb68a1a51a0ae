//! Seed-fixed random matrices for sweeps.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spd::SpdMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn orthogonal<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, d, d).qr().q()
}

/// `Q diag(l) Q^T` with eigenvalues log-uniform in `[lo, hi]`.
pub fn spd<R: Rng>(rng: &mut R, d: usize, lo: f64, hi: f64) -> SpdMatrix {
    let q = orthogonal(rng, d);
    let l: Vec<f64> = (0..d)
        .map(|_| (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp())
        .collect();
    let m = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(l)) * q.transpose();
    SpdMatrix::from_mat(m).expect("eigenvalues are positive")
}

/// Well-conditioned invertible matrix with singular values in `[lo, hi]`.
pub fn invertible<R: Rng>(rng: &mut R, d: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let a = orthogonal(rng, d);
    let b = orthogonal(rng, d);
    let s: Vec<f64> = (0..d).map(|_| lo + rng.gen::<f64>() * (hi - lo)).collect();
    a * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s)) * b
}

pub fn vector<R: Rng>(rng: &mut R, d: usize, scale: f64) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_fn(d, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}
