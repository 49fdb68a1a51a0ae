//! Dense symmetric matrices and the handful of spectral operations the rest of
//! the crate is built on.
//!
//! Everything goes through a symmetric eigendecomposition. Inverses, square
//! roots and the Riccati maps are all spectral functions of a symmetric
//! operand, so this keeps results exactly symmetric and behaves well close to
//! the PSD boundary.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dims, Error, Result};

pub const PSD_ATOL: f64 = 1e-10;
pub const SPD_RTOL: f64 = 1e-12;

/// Symmetric matrix, symmetrized on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

/// Positive semi-definite matrix. Tiny negative eigenvalues are clamped to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdMatrix(SymMatrix);

/// Positive definite matrix with `eig_min > 1e-12 * eig_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(PsdMatrix);

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// nalgebra's QR sweep can stop with off-diagonal mass around `1e-10 |A|`;
/// a few cyclic Jacobi sweeps on `Q^T A Q` bring it down to rounding.
fn polished_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let e = SymmetricEigen::new(m.clone());
    let mut q = e.eigenvectors;
    let mut b = symmetrize(&(q.transpose() * m * &q));
    let d = b.nrows();
    for _ in 0..16 {
        let mut rotated = false;
        for i in 0..d {
            for j in i + 1..d {
                let bij = b[(i, j)];
                if bij == 0.0 || bij.abs() <= f64::EPSILON * 1e-3 * (b[(i, i)].abs() + b[(j, j)].abs()) {
                    continue;
                }
                rotated = true;
                let theta = (b[(j, j)] - b[(i, i)]) / (2.0 * bij);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (bki, bkj) = (b[(k, i)], b[(k, j)]);
                    b[(k, i)] = c * bki - s * bkj;
                    b[(k, j)] = s * bki + c * bkj;
                }
                for k in 0..d {
                    let (bik, bjk) = (b[(i, k)], b[(j, k)]);
                    b[(i, k)] = c * bik - s * bjk;
                    b[(j, k)] = s * bik + c * bjk;
                }
                for k in 0..d {
                    let (qki, qkj) = (q[(k, i)], q[(k, j)]);
                    q[(k, i)] = c * qki - s * qkj;
                    q[(k, j)] = s * qki + c * qkj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    SymmetricEigen { eigenvalues: b.diagonal(), eigenvectors: q }
}

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite entry".into()));
        }
        Ok(Self(symmetrize(&m)))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(DMatrix::zeros(d, d))
    }

    pub fn scalar(x: f64) -> Self {
        Self(DMatrix::from_element(1, 1, x))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_mat(self) -> DMatrix<f64> {
        self.0
    }

    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        polished_eigen(&self.0)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn eig_min(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn eig_max(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[0].abs().max(ev[ev.len() - 1].abs())
    }

    /// Apply a scalar function to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let e = self.eigen();
        let q = &e.eigenvectors;
        let fl = e.eigenvalues.map(f);
        let m = q * DMatrix::from_diagonal(&fl) * q.transpose();
        SymMatrix(symmetrize(&m))
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_dims("add", self.dim(), other.dim())?;
        Ok(SymMatrix(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_dims("sub", self.dim(), other.dim())?;
        Ok(SymMatrix(&self.0 - &other.0))
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(&self.0 * s)
    }

    /// `a * self * a^T`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Result<SymMatrix> {
        check_dims("congruence", a.ncols(), self.dim())?;
        Ok(SymMatrix(symmetrize(&(a * &self.0 * a.transpose()))))
    }

    pub fn to_psd(&self) -> Result<PsdMatrix> {
        PsdMatrix::new(self.clone())
    }

    pub fn to_spd(&self) -> Result<SpdMatrix> {
        SpdMatrix::new(self.clone())
    }
}

impl PsdMatrix {
    pub fn new(s: SymMatrix) -> Result<Self> {
        let e = s.eigen();
        let scale = e.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let min = e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_ATOL * (1.0 + scale) {
            return Err(Error::Domain(format!("matrix is not PSD (eig_min = {min:e})")));
        }
        if min < 0.0 {
            return Ok(Self(s.map_spectrum(|x| x.max(0.0))));
        }
        Ok(Self(s))
    }

    pub fn from_mat(m: DMatrix<f64>) -> Result<Self> {
        Self::new(SymMatrix::new(m)?)
    }

    pub fn zeros(d: usize) -> Self {
        Self(SymMatrix::zeros(d))
    }

    pub fn identity(d: usize) -> Self {
        Self(SymMatrix::identity(d))
    }

    pub fn sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn as_mat(&self) -> &DMatrix<f64> {
        self.0.as_mat()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn norm2(&self) -> f64 {
        self.0.eig_max()
    }

    pub fn sqrt(&self) -> PsdMatrix {
        PsdMatrix(self.0.map_spectrum(|x| x.max(0.0).sqrt()))
    }
}

impl SpdMatrix {
    pub fn new(s: SymMatrix) -> Result<Self> {
        let ev = s.eigenvalues();
        let (min, max) = (ev[0], ev[ev.len() - 1]);
        if !(min > SPD_RTOL * max) || max <= 0.0 {
            return Err(Error::Domain(format!(
                "matrix is not SPD (eig_min = {min:e}, eig_max = {max:e})"
            )));
        }
        Ok(Self(PsdMatrix(s)))
    }

    pub fn from_mat(m: DMatrix<f64>) -> Result<Self> {
        Self::new(SymMatrix::new(m)?)
    }

    pub fn identity(d: usize) -> Self {
        Self(PsdMatrix::identity(d))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(SymMatrix::scalar(x))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::from_diagonal(diag))
    }

    pub fn sym(&self) -> &SymMatrix {
        self.0.sym()
    }

    pub fn psd(&self) -> &PsdMatrix {
        &self.0
    }

    pub fn as_mat(&self) -> &DMatrix<f64> {
        self.0.as_mat()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn norm2(&self) -> f64 {
        self.sym().eig_max()
    }

    pub fn eig_min(&self) -> f64 {
        self.sym().eig_min()
    }

    pub fn inverse(&self) -> SpdMatrix {
        SpdMatrix(PsdMatrix(self.sym().map_spectrum(|x| 1.0 / x)))
    }

    pub fn sqrt(&self) -> SpdMatrix {
        principal_sqrt(self)
    }

    pub fn inv_sqrt(&self) -> SpdMatrix {
        SpdMatrix(PsdMatrix(self.sym().map_spectrum(|x| 1.0 / x.sqrt())))
    }

    pub fn log_det(&self) -> f64 {
        self.sym().eigen().eigenvalues.iter().map(|x| x.ln()).sum()
    }

    /// Spectral function that is known to keep the result SPD.
    pub(crate) fn map_spd(&self, f: impl Fn(f64) -> f64) -> SpdMatrix {
        SpdMatrix(PsdMatrix(self.sym().map_spectrum(f)))
    }
}

pub fn principal_sqrt(a: &SpdMatrix) -> SpdMatrix {
    a.map_spd(f64::sqrt)
}

/// `u # v = v^{1/2} (v^{-1/2} u v^{-1/2})^{1/2} v^{1/2}`.
pub fn geometric_mean(u: &SpdMatrix, v: &SpdMatrix) -> Result<SpdMatrix> {
    check_dims("geometric_mean", u.dim(), v.dim())?;
    let vh = v.sqrt();
    let vih = v.inv_sqrt();
    let inner = u.sym().congruence(vih.as_mat())?.to_spd()?;
    inner.sqrt().sym().congruence(vh.as_mat())?.to_spd()
}

/// `a <= b` in the Loewner order, up to `tol` relative to the spectral scale.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
    match b.sub(a) {
        Ok(d) => {
            let ev = d.eigenvalues();
            let norm = ev[0].abs().max(ev[ev.len() - 1].abs());
            ev[0] >= -tol * (1.0 + norm)
        }
        Err(_) => false,
    }
}

/// Strict Loewner order `a < b`.
pub fn loewner_lt(a: &SymMatrix, b: &SymMatrix) -> bool {
    b.sub(a).map(|d| d.eig_min() > 0.0).unwrap_or(false)
}

/// Both sides of the Ando-Hemmen estimate
/// `|u^{1/2} - v^{1/2}| <= (l_min(u)^{1/2} + l_min(v)^{1/2})^{-1} |u - v|`.
pub fn ando_hemmen_sides(u: &SpdMatrix, v: &SpdMatrix) -> Result<(f64, f64)> {
    check_dims("ando_hemmen", u.dim(), v.dim())?;
    let lhs = u.sqrt().sym().sub(v.sqrt().sym())?.norm2();
    let rhs = u.sym().sub(v.sym())?.norm2() / (u.eig_min().sqrt() + v.eig_min().sqrt());
    Ok((lhs, rhs))
}

pub fn ando_hemmen_check(u: &SpdMatrix, v: &SpdMatrix) -> bool {
    match ando_hemmen_sides(u, v) {
        // equality is attained in the commuting case, so allow rounding
        Ok((lhs, rhs)) => lhs <= rhs * (1.0 + 1e-10) + 1e-14,
        Err(_) => false,
    }
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Invertible square matrix check via singular values, condition number < 1e12.
pub fn check_invertible(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{what} is not square")));
    }
    let sv = m.singular_values();
    let (min, max) = (sv.min(), sv.max());
    if !(min > 1e-12 * max) {
        return Err(Error::Domain(format!("{what} is singular or ill-conditioned")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd2(a: f64, b: f64, c: f64) -> SpdMatrix {
        SpdMatrix::from_mat(DMatrix::from_row_slice(2, 2, &[a, b, b, c])).unwrap()
    }

    #[test]
    fn eigen_reconstructs_near_degenerate_spectrum() {
        // eigenvalues ~ 0.29, 3.18, 3.21; plain QR leaves 4.5e-11 off-diagonal
        let a = crate::random::spd(&mut crate::random::rng(17850174454498296238), 3, 0.1, 5.0);
        let e = a.sym().eigen();
        let rec = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues) * e.eigenvectors.transpose();
        assert!((rec - a.as_mat()).norm() < 1e-14);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let r = principal_sqrt(&SpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap());
        assert!((r.as_mat() - DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]))).norm() < 1e-14);
    }

    #[test]
    fn geometric_mean_cases() {
        let g = geometric_mean(&SpdMatrix::scalar(4.0).unwrap(), &SpdMatrix::scalar(1.0).unwrap()).unwrap();
        assert!((g.as_mat()[(0, 0)] - 2.0).abs() < 1e-14);
        let u = spd2(2.0, 0.7, 1.0);
        let v = spd2(1.0, -0.3, 3.0);
        let a = geometric_mean(&u, &v).unwrap();
        let b = geometric_mean(&v, &u).unwrap();
        assert!((a.as_mat() - b.as_mat()).norm() < 1e-10);
        let uu = geometric_mean(&u, &u).unwrap();
        assert!((uu.as_mat() - u.as_mat()).norm() < 1e-12);
        // the Riccati-type identity (u # v) u^{-1} (u # v) = v
        let back = u.inverse().sym().congruence(a.as_mat()).unwrap();
        assert!((back.as_mat() - v.as_mat()).norm() < 1e-10);
    }

    #[test]
    fn loewner_examples() {
        let i = SymMatrix::identity(2);
        assert!(loewner_leq(&SymMatrix::zeros(2), &i, 1e-10));
        assert!(loewner_leq(&i, &i, 1e-10));
        assert!(!loewner_leq(
            &SymMatrix::from_diagonal(&[1.0, 3.0]),
            &SymMatrix::from_diagonal(&[2.0, 2.0]),
            1e-10
        ));
    }

    #[test]
    fn ando_hemmen_scalar_equality() {
        let (l, r) = ando_hemmen_sides(&SpdMatrix::scalar(4.0).unwrap(), &SpdMatrix::scalar(1.0).unwrap()).unwrap();
        assert!((l - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
        assert!(ando_hemmen_check(&SpdMatrix::scalar(4.0).unwrap(), &SpdMatrix::scalar(1.0).unwrap()));
        assert!(ando_hemmen_check(&SpdMatrix::identity(3), &SpdMatrix::identity(3)));
    }

    #[test]
    fn psd_clamps_noise_and_rejects_negative() {
        let p = PsdMatrix::from_mat(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-13])).unwrap();
        assert!(p.sym().eig_min() >= 0.0);
        assert!(PsdMatrix::from_mat(DMatrix::from_row_slice(1, 1, &[-1e-3])).is_err());
        assert!(SpdMatrix::from_mat(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14])).is_err());
    }

    #[test]
    fn symmetrized_on_construction() {
        let s = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).unwrap();
        assert_eq!(s.as_mat()[(0, 1)], s.as_mat()[(1, 0)]);
    }
}
