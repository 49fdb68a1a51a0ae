use crate::error::Result;

use super::{joint_plan, AffineGaussianMap, GaussianMeasure, LinearGaussianKernel};

/// Backward kernel `K_1(y, dx)`: law of `x` given `y` under `mu(dx) K_0(x, dy)`.
pub fn proximal_backward(mu: &GaussianMeasure, k: &LinearGaussianKernel) -> Result<AffineGaussianMap> {
    joint_plan(mu, &k.as_map())?.conditional_first_given_second()
}

/// One step of the proximal sampler `S_1 = K_0 K_1`, which leaves `mu` invariant.
pub fn proximal_step(nu: &GaussianMeasure, mu: &GaussianMeasure, k: &LinearGaussianKernel) -> Result<GaussianMeasure> {
    proximal_backward(mu, k)?.push(&k.as_map().push(nu)?)
}

/// `nu, nu S_1, ..., nu S_1^n`.
pub fn proximal_run(
    nu: &GaussianMeasure,
    mu: &GaussianMeasure,
    k: &LinearGaussianKernel,
    n: usize,
) -> Result<Vec<GaussianMeasure>> {
    let back = proximal_backward(mu, k)?;
    let fwd = k.as_map();
    let mut out = vec![nu.clone()];
    for _ in 0..n {
        let next = back.push(&fwd.push(out.last().unwrap())?)?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_and_contracting() {
        let mu = GaussianMeasure::scalar(0.0, 1.0).unwrap();
        let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0).unwrap();
        let same = proximal_step(&mu, &mu, &k).unwrap();
        assert!((same.cov.as_mat()[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(same.mean[0].abs() < 1e-15);
        let nu = GaussianMeasure::scalar(3.0, 1.0).unwrap();
        let out = proximal_step(&nu, &mu, &k).unwrap();
        assert!((out.mean[0] - 1.5).abs() < 1e-14);
    }
}
