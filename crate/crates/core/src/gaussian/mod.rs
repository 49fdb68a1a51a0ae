//! Linear-Gaussian track: measures, kernels, affine maps, exact divergences.

mod bridge;
mod proximal;
mod sinkhorn;
mod trace;

pub use bridge::*;
pub use proximal::*;
pub use sinkhorn::*;
pub use trace::*;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dims, Error, Result};
use crate::spd::{check_invertible, PsdMatrix, SpdMatrix, SymMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMeasure {
    pub mean: DVector<f64>,
    pub cov: SpdMatrix,
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, cov: SpdMatrix) -> Result<Self> {
        check_dims("gaussian measure", mean.len(), cov.dim())?;
        Ok(Self { mean, cov })
    }

    pub fn scalar(mean: f64, var: f64) -> Result<Self> {
        Self::new(DVector::from_element(1, mean), SpdMatrix::scalar(var)?)
    }

    pub fn standard(d: usize) -> Self {
        Self { mean: DVector::zeros(d), cov: SpdMatrix::identity(d) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `y = alpha + beta x + N(0, tau)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearGaussianKernel {
    pub alpha: DVector<f64>,
    pub beta: DMatrix<f64>,
    pub tau: SpdMatrix,
}

impl LinearGaussianKernel {
    pub fn new(alpha: DVector<f64>, beta: DMatrix<f64>, tau: SpdMatrix) -> Result<Self> {
        check_invertible(&beta, "beta")?;
        check_dims("kernel alpha", alpha.len(), beta.nrows())?;
        check_dims("kernel tau", tau.dim(), beta.nrows())?;
        Ok(Self { alpha, beta, tau })
    }

    pub fn scalar(alpha: f64, beta: f64, tau: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(1, alpha),
            DMatrix::from_element(1, 1, beta),
            SpdMatrix::scalar(tau)?,
        )
    }

    /// `alpha = 0, beta = I, tau = t I`.
    pub fn isotropic(d: usize, t: f64) -> Result<Self> {
        Self::new(DVector::zeros(d), DMatrix::identity(d, d), SpdMatrix::new(SymMatrix::identity(d).scale(t))?)
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// `chi = tau^{-1} beta`.
    pub fn chi(&self) -> DMatrix<f64> {
        self.tau.inverse().as_mat() * &self.beta
    }

    /// Same kernel with `tau` replaced by `t tau`.
    pub fn with_tau_scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.alpha.clone(), self.beta.clone(), SpdMatrix::new(self.tau.sym().scale(t))?)
    }

    pub fn as_map(&self) -> AffineGaussianMap {
        AffineGaussianMap {
            intercept: self.alpha.clone(),
            slope: self.beta.clone(),
            noise_cov: self.tau.psd().clone(),
        }
    }
}

/// `x -> intercept + slope x + N(0, noise_cov)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineGaussianMap {
    pub intercept: DVector<f64>,
    pub slope: DMatrix<f64>,
    pub noise_cov: PsdMatrix,
}

impl AffineGaussianMap {
    pub fn push(&self, nu: &GaussianMeasure) -> Result<GaussianMeasure> {
        check_dims("push", self.slope.ncols(), nu.dim())?;
        let mean = &self.intercept + &self.slope * &nu.mean;
        let cov = nu.cov.sym().congruence(&self.slope)?.add(self.noise_cov.sym())?.to_spd()?;
        GaussianMeasure::new(mean, cov)
    }
}

/// Gaussian law on `(x, y)`, both blocks of dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointGaussian {
    pub mean: DVector<f64>,
    pub cov: SpdMatrix,
}

impl JointGaussian {
    pub fn new(mean: DVector<f64>, cov: SpdMatrix) -> Result<Self> {
        check_dims("joint", mean.len(), cov.dim())?;
        if mean.len() % 2 != 0 {
            return Err(Error::Shape("joint dimension must be even".into()));
        }
        Ok(Self { mean, cov })
    }

    pub fn block_dim(&self) -> usize {
        self.mean.len() / 2
    }

    fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let d = self.block_dim();
        self.cov.as_mat().view((i * d, j * d), (d, d)).into_owned()
    }

    fn mean_block(&self, i: usize) -> DVector<f64> {
        let d = self.block_dim();
        self.mean.rows(i * d, d).into_owned()
    }

    pub fn first_marginal(&self) -> Result<GaussianMeasure> {
        GaussianMeasure::new(self.mean_block(0), SpdMatrix::from_mat(self.block(0, 0))?)
    }

    pub fn second_marginal(&self) -> Result<GaussianMeasure> {
        GaussianMeasure::new(self.mean_block(1), SpdMatrix::from_mat(self.block(1, 1))?)
    }

    /// Law of `(y, x)`.
    pub fn swapped(&self) -> JointGaussian {
        let d = self.block_dim();
        let perm = DMatrix::from_fn(2 * d, 2 * d, |i, j| if (i + d) % (2 * d) == j { 1.0 } else { 0.0 });
        let mean = &perm * &self.mean;
        let cov = self.cov.sym().congruence(&perm).and_then(|s| s.to_spd()).expect("permutation keeps SPD");
        JointGaussian { mean, cov }
    }

    /// Law of `y` given `x`, by the Schur complement.
    pub fn conditional_second_given_first(&self) -> Result<AffineGaussianMap> {
        let a = SpdMatrix::from_mat(self.block(0, 0))?;
        let b = self.block(0, 1);
        let c = self.block(1, 1);
        let slope = b.transpose() * a.inverse().as_mat();
        let noise = PsdMatrix::from_mat(&c - &slope * &b)?;
        let intercept = self.mean_block(1) - &slope * self.mean_block(0);
        Ok(AffineGaussianMap { intercept, slope, noise_cov: noise })
    }

    /// Law of `x` given `y`.
    pub fn conditional_first_given_second(&self) -> Result<AffineGaussianMap> {
        self.swapped().conditional_second_given_first()
    }

    pub fn as_measure(&self) -> GaussianMeasure {
        GaussianMeasure { mean: self.mean.clone(), cov: self.cov.clone() }
    }
}

/// Anything with a mean and an SPD covariance.
pub trait GaussianLaw {
    fn mean(&self) -> &DVector<f64>;
    fn cov(&self) -> &SpdMatrix;
}

impl GaussianLaw for GaussianMeasure {
    fn mean(&self) -> &DVector<f64> {
        &self.mean
    }
    fn cov(&self) -> &SpdMatrix {
        &self.cov
    }
}

impl GaussianLaw for JointGaussian {
    fn mean(&self) -> &DVector<f64> {
        &self.mean
    }
    fn cov(&self) -> &SpdMatrix {
        &self.cov
    }
}

/// `x - log(1 + x)`, accurate near 0.
fn x_minus_log1p(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x2 * (0.5 - x / 3.0 + x2 / 4.0 - x2 * x / 5.0 + x2 * x2 / 6.0)
    } else {
        x - x.ln_1p()
    }
}

/// Relative entropy `H(p | q)`.
///
/// Evaluated through the spectrum of `q^{-1/2} (p - q) q^{-1/2}`, which keeps
/// tiny divergences accurate instead of drowning them in `tr - d` cancellation.
pub fn gaussian_kl<L: GaussianLaw>(p: &L, q: &L) -> Result<f64> {
    check_dims("gaussian_kl", p.mean().len(), q.mean().len())?;
    let qih = q.cov().inv_sqrt();
    let diff = p.cov().sym().sub(q.cov().sym())?.congruence(qih.as_mat())?;
    let cov_part: f64 = diff.eigen().eigenvalues.iter().map(|&x| x_minus_log1p(x)).sum();
    let dm = p.mean() - q.mean();
    let z = qih.as_mat() * dm;
    Ok(0.5 * (cov_part + z.norm_squared()))
}

/// Closed-form 2-Wasserstein distance between Gaussians.
///
/// The covariance part is `tr(X q^{-1} X)` with `X = (q^{1/2} p q^{1/2})^{1/2} - q`,
/// i.e. `E|T x - x|^2` for the optimal map `T`; unlike the trace formula this
/// does not lose half the digits when `p` is close to `q`.
pub fn gelbrich_w2(p: &GaussianMeasure, q: &GaussianMeasure) -> Result<f64> {
    check_dims("gelbrich_w2", p.dim(), q.dim())?;
    let qh = q.cov.sqrt();
    let cross = p.cov.sym().congruence(qh.as_mat())?.to_spd()?.sqrt();
    let x = cross.as_mat() - q.cov.as_mat();
    let bures = (&x * q.cov.inverse().as_mat() * &x).trace();
    Ok(((&p.mean - &q.mean).norm_squared() + bures.max(0.0)).sqrt())
}

/// `P(dx, dy) = mu(dx) M(x, dy)`.
pub fn joint_plan(mu: &GaussianMeasure, map: &AffineGaussianMap) -> Result<JointGaussian> {
    let d = mu.dim();
    check_dims("joint_plan", map.slope.ncols(), d)?;
    check_dims("joint_plan", map.slope.nrows(), d)?;
    let s = &map.slope;
    let sig = mu.cov.as_mat();
    let mut cov = DMatrix::zeros(2 * d, 2 * d);
    cov.view_mut((0, 0), (d, d)).copy_from(sig);
    cov.view_mut((0, d), (d, d)).copy_from(&(sig * s.transpose()));
    cov.view_mut((d, 0), (d, d)).copy_from(&(s * sig));
    cov.view_mut((d, d), (d, d)).copy_from(&(s * sig * s.transpose() + map.noise_cov.as_mat()));
    let mut mean = DVector::zeros(2 * d);
    mean.rows_mut(0, d).copy_from(&mu.mean);
    mean.rows_mut(d, d).copy_from(&(&map.intercept + s * &mu.mean));
    let cov = SpdMatrix::from_mat(cov)
        .map_err(|_| Error::Domain("degenerate joint covariance (singular noise and slope)".into()))?;
    JointGaussian::new(mean, cov)
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureSummary {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

pub(crate) fn mat_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl From<&GaussianMeasure> for MeasureSummary {
    fn from(g: &GaussianMeasure) -> Self {
        Self { mean: g.mean.iter().copied().collect(), cov: mat_rows(g.cov.as_mat()) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_examples() {
        let n01 = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        assert_eq!(gaussian_kl(&n01, &n01).unwrap(), 0.0);
        let n11 = GaussianMeasure::scalar(1.0, 1.0).unwrap();
        assert!((gaussian_kl(&n11, &n01).unwrap() - 0.5).abs() < 1e-15);
        let n02 = GaussianMeasure::scalar(0.0, 2.0).unwrap();
        assert!((gaussian_kl(&n02, &n01).unwrap() - 0.153_426_409_720_027_3).abs() < 1e-14);
    }

    #[test]
    fn kl_small_gaps_are_accurate() {
        let q = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        let p = GaussianMeasure::scalar(0.0, 1.0 + 1e-9).unwrap();
        let kl = gaussian_kl(&p, &q).unwrap();
        assert!((kl / 2.5e-19 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn w2_examples() {
        let a = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        let b = GaussianMeasure::scalar(0.0, 4.0).unwrap();
        assert!((gelbrich_w2(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        assert!((gelbrich_w2(&b, &a).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(gelbrich_w2(&a, &a).unwrap(), 0.0);
        let c = GaussianMeasure::scalar(3.0, 4.0).unwrap();
        assert!((gelbrich_w2(&b, &c).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn joint_plan_blocks() {
        let mu = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        let id = AffineGaussianMap {
            intercept: DVector::zeros(1),
            slope: DMatrix::identity(1, 1),
            noise_cov: PsdMatrix::identity(1),
        };
        let p = joint_plan(&mu, &id).unwrap();
        assert_eq!(p.cov.as_mat(), &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]));
        let zero = AffineGaussianMap { slope: DMatrix::zeros(1, 1), ..id.clone() };
        let q = joint_plan(&mu, &zero).unwrap();
        assert_eq!(q.cov.as_mat()[(0, 1)], 0.0);
        let degenerate = AffineGaussianMap { slope: DMatrix::zeros(1, 1), noise_cov: PsdMatrix::zeros(1), ..id };
        assert!(joint_plan(&mu, &degenerate).is_err());
    }

    #[test]
    fn conditioning_inverts_joint_plan() {
        let mu = GaussianMeasure::scalar(0.5, 2.0).unwrap();
        let k = LinearGaussianKernel::scalar(0.3, 1.5, 0.7).unwrap();
        let p = joint_plan(&mu, &k.as_map()).unwrap();
        let back = p.conditional_second_given_first().unwrap();
        assert!((back.slope[(0, 0)] - 1.5).abs() < 1e-14);
        assert!((back.intercept[0] - 0.3).abs() < 1e-14);
        assert!((back.noise_cov.as_mat()[(0, 0)] - 0.7).abs() < 1e-14);
    }
}
