use nalgebra::{DMatrix, DVector};

use crate::error::{check_dims, Result};
use crate::riccati::{fixed_point, RiccatiParam};
use crate::spd::{check_invertible, geometric_mean, PsdMatrix, SpdMatrix};

use super::{joint_plan, AffineGaussianMap, GaussianMeasure, JointGaussian, LinearGaussianKernel};

/// `(v^{-1/2} (chi u chi^T)^{-1} v^{-1/2}, u^{-1/2} (chi^T v chi)^{-1} u^{-1/2})`.
pub fn varpi_pair(
    mu: &GaussianMeasure,
    eta: &GaussianMeasure,
    k: &LinearGaussianKernel,
) -> Result<(SpdMatrix, SpdMatrix)> {
    check_dims("varpi_pair", mu.dim(), eta.dim())?;
    check_dims("varpi_pair", mu.dim(), k.dim())?;
    let chi = k.chi();
    let cuc = mu.cov.sym().congruence(&chi)?.to_spd()?;
    let cvc = eta.cov.sym().congruence(&chi.transpose())?.to_spd()?;
    let w0 = cuc.inverse().sym().congruence(eta.cov.inv_sqrt().as_mat())?.to_spd()?;
    let w1 = cvc.inverse().sym().congruence(mu.cov.inv_sqrt().as_mat())?.to_spd()?;
    Ok((w0, w1))
}

/// Forward transition `mu -> eta` and backward transition `eta -> mu` of the
/// Schrodinger bridge.
#[derive(Clone, Debug)]
pub struct GaussianBridge {
    pub forward: AffineGaussianMap,
    pub backward: AffineGaussianMap,
}

impl GaussianBridge {
    /// Conditional covariance of the forward transition.
    pub fn sigma(&self) -> &PsdMatrix {
        &self.forward.noise_cov
    }

    /// Conditional covariance of the backward transition.
    pub fn sigma_flat(&self) -> &PsdMatrix {
        &self.backward.noise_cov
    }

    pub fn plan(&self, mu: &GaussianMeasure) -> Result<JointGaussian> {
        joint_plan(mu, &self.forward)
    }
}

pub fn bridge_solve(
    mu: &GaussianMeasure,
    eta: &GaussianMeasure,
    k: &LinearGaussianKernel,
) -> Result<GaussianBridge> {
    let (w0, w1) = varpi_pair(mu, eta, k)?;
    let chi = k.chi();
    let r0 = fixed_point(&RiccatiParam::Finite(w0));
    let r1 = fixed_point(&RiccatiParam::Finite(w1));
    let sigma = r0.sym().congruence(eta.cov.sqrt().as_mat())?.to_spd()?;
    let sigma_flat = r1.sym().congruence(mu.cov.sqrt().as_mat())?.to_spd()?;
    let fs = sigma.as_mat() * &chi;
    let bs = sigma_flat.as_mat() * chi.transpose();
    let forward = AffineGaussianMap {
        intercept: &eta.mean - &fs * &mu.mean,
        slope: fs,
        noise_cov: sigma.psd().clone(),
    };
    let backward = AffineGaussianMap {
        intercept: &mu.mean - &bs * &eta.mean,
        slope: bs,
        noise_cov: sigma_flat.psd().clone(),
    };
    Ok(GaussianBridge { forward, backward })
}

/// Gradient of the entropic map `x -> E(Y | X = x)`, in the row convention
/// `grad = slope^T` (so `grad = chi^T sigma` for the forward bridge).
pub fn entropic_map_gradient(map: &AffineGaussianMap) -> DMatrix<f64> {
    map.slope.transpose()
}

/// `|c^T Sigma c - grad c|`; use `c = chi` for the forward map and
/// `c = chi^T` for the backward one.
pub fn barycentric_residual(map: &AffineGaussianMap, c: &DMatrix<f64>) -> Result<f64> {
    let lhs = map.noise_cov.sym().congruence(&c.transpose())?;
    let rhs = entropic_map_gradient(map) * c;
    Ok(crate::spd::spectral_norm(&(lhs.as_mat() - rhs)))
}

/// Zero-noise limit of the bridge along `tau = t tau0` as `t -> 0`:
/// slope `((chi0 u chi0^T)^{-1} # v) chi0` with `chi0 = tau0^{-1} beta`.
pub fn ot_limit_map(
    mu: &GaussianMeasure,
    eta: &GaussianMeasure,
    tau0: &SpdMatrix,
    beta: &DMatrix<f64>,
) -> Result<AffineGaussianMap> {
    check_invertible(beta, "beta")?;
    check_dims("ot_limit_map", mu.dim(), tau0.dim())?;
    let chi0 = tau0.inverse().as_mat() * beta;
    let a = mu.cov.sym().congruence(&chi0)?.to_spd()?.inverse();
    let g = geometric_mean(&a, &eta.cov)?;
    let slope = g.as_mat() * &chi0;
    Ok(AffineGaussianMap {
        intercept: &eta.mean - &slope * &mu.mean,
        slope,
        noise_cov: PsdMatrix::zeros(mu.dim()),
    })
}

/// `h = db^T tau^{-1} db / 2` and `j = db^T tau^{-2} db` with `db = beta (x1 - x2)`.
pub fn kernel_costs(k: &LinearGaussianKernel, x1: &DVector<f64>, x2: &DVector<f64>) -> Result<(f64, f64)> {
    check_dims("kernel_costs", x1.len(), k.dim())?;
    check_dims("kernel_costs", x2.len(), k.dim())?;
    let db = &k.beta * (x1 - x2);
    let z = k.tau.inverse().as_mat() * &db;
    Ok((0.5 * db.dot(&z), z.norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::gaussian_kl;

    const GOLD: f64 = 0.618_033_988_749_894_8;

    #[test]
    fn standard_normal_bridge() {
        let n = GaussianMeasure::standard(1);
        let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0).unwrap();
        let (w0, w1) = varpi_pair(&n, &n, &k).unwrap();
        assert!((w0.as_mat()[(0, 0)] - 1.0).abs() < 1e-15 && (w1.as_mat()[(0, 0)] - 1.0).abs() < 1e-15);
        let b = bridge_solve(&n, &n, &k).unwrap();
        assert!((b.sigma().as_mat()[(0, 0)] - GOLD).abs() < 1e-12);
        assert!((b.forward.slope[(0, 0)] - GOLD).abs() < 1e-12);
        let reference = joint_plan(&n, &k.as_map()).unwrap();
        let h = gaussian_kl(&b.plan(&n).unwrap(), &reference).unwrap();
        assert!(h > 0.0 && h.is_finite());
    }

    #[test]
    fn bridge_pushes_mu_to_eta() {
        let mu = GaussianMeasure::scalar(0.0, 4.0).unwrap();
        let eta = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0).unwrap();
        let b = bridge_solve(&mu, &eta, &k).unwrap();
        let s = b.sigma().as_mat()[(0, 0)];
        assert!((s * 4.0 * s + s - 1.0).abs() < 1e-10);
        let pushed = b.backward.push(&eta).unwrap();
        assert!((pushed.cov.as_mat()[(0, 0)] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn varpi_scales_with_t_squared() {
        let n = GaussianMeasure::standard(2);
        let k = LinearGaussianKernel::isotropic(2, 0.3).unwrap();
        let (w0, _) = varpi_pair(&n, &n, &k).unwrap();
        assert!((w0.as_mat() - DMatrix::identity(2, 2) * 0.09).norm() < 1e-14);
    }

    #[test]
    fn costs() {
        let k = LinearGaussianKernel::scalar(0.0, 1.0, 2.0).unwrap();
        let (h, j) = kernel_costs(&k, &DVector::from_element(1, 1.0), &DVector::zeros(1)).unwrap();
        assert!((h - 0.25).abs() < 1e-15 && (j - 0.25).abs() < 1e-15);
        assert_eq!(h, 1.0 * j);
    }

    #[test]
    fn ot_limit_scalar() {
        let mu = GaussianMeasure::scalar(0.0, 4.0).unwrap();
        let eta = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        let m = ot_limit_map(&mu, &eta, &SpdMatrix::identity(1), &DMatrix::identity(1, 1)).unwrap();
        assert!((m.slope[(0, 0)] - 0.5).abs() < 1e-14);
        let same = ot_limit_map(&mu, &mu, &SpdMatrix::identity(1), &DMatrix::identity(1, 1)).unwrap();
        assert!((same.slope[(0, 0)] - 1.0).abs() < 1e-14);
    }
}
