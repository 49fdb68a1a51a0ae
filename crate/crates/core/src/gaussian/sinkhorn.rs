use nalgebra::DVector;

use crate::error::Result;
use crate::riccati::{ricc_map, RiccatiParam};
use crate::spd::SpdMatrix;

use super::{joint_plan, varpi_pair, AffineGaussianMap, GaussianMeasure, JointGaussian, LinearGaussianKernel};

/// Iterate `n` of Sinkhorn on the linear-Gaussian model.
///
/// Even `n`: `P_n = mu(dx) K_n(x, dy)` with `K_n(x) = N(m_n + tau_n chi (x - m), tau_n)`.
/// Odd `n`: `P_n = eta(dy) K_n(y, dx)` with `K_n(y) = N(m_n + tau_n chi^T (y - m_bar), tau_n)`.
/// `m_n`, `sigma_pi_n` are the mean and covariance of the free marginal `pi_n`.
#[derive(Clone, Debug)]
pub struct GaussianSinkhornState {
    pub n: usize,
    pub tau_n: SpdMatrix,
    pub m_n: DVector<f64>,
    pub sigma_pi_n: SpdMatrix,
}

impl GaussianSinkhornState {
    pub fn kernel(&self, mu: &GaussianMeasure, eta: &GaussianMeasure, k: &LinearGaussianKernel) -> AffineGaussianMap {
        let chi = k.chi();
        let (c, base) = if self.n % 2 == 0 { (chi, &mu.mean) } else { (chi.transpose(), &eta.mean) };
        let slope = self.tau_n.as_mat() * c;
        AffineGaussianMap {
            intercept: &self.m_n - &slope * base,
            slope,
            noise_cov: self.tau_n.psd().clone(),
        }
    }

    /// Joint law of `(x, y)`.
    pub fn plan(&self, mu: &GaussianMeasure, eta: &GaussianMeasure, k: &LinearGaussianKernel) -> Result<JointGaussian> {
        let kern = self.kernel(mu, eta, k);
        if self.n % 2 == 0 {
            joint_plan(mu, &kern)
        } else {
            Ok(joint_plan(eta, &kern)?.swapped())
        }
    }

    pub fn marginal(&self) -> GaussianMeasure {
        GaussianMeasure { mean: self.m_n.clone(), cov: self.sigma_pi_n.clone() }
    }
}

/// Sinkhorn states `0..=N` through the rescaled Riccati recursions
/// `tau_bar_{2n} = Ricc_{w0}(tau_bar_{2n-2})`, `tau_bar_{2n+1} = Ricc_{w1}(tau_bar_{2n-1})`.
///
/// Stops at `n_max`, or earlier once both parities move by less than `tol`
/// (pass `tol = 0` for a fixed-length run).
pub fn sinkhorn_run(
    mu: &GaussianMeasure,
    eta: &GaussianMeasure,
    k: &LinearGaussianKernel,
    n_max: usize,
    tol: f64,
) -> Result<Vec<GaussianSinkhornState>> {
    let (w0, w1) = varpi_pair(mu, eta, k)?;
    let (p0, p1) = (RiccatiParam::Finite(w0), RiccatiParam::Finite(w1));
    let chi = k.chi();
    let (uh, uih) = (mu.cov.sqrt(), mu.cov.inv_sqrt());
    let (vh, vih) = (eta.cov.sqrt(), eta.cov.inv_sqrt());
    let cuc = mu.cov.sym().congruence(&chi)?;
    let cvc = eta.cov.sym().congruence(&chi.transpose())?;

    let tau1 = mu.cov.inverse().sym().add(&k.tau.sym().congruence(&chi.transpose())?)?.to_spd()?.inverse();
    let mut bar = [
        k.tau.sym().congruence(vih.as_mat())?.to_spd()?,
        tau1.sym().congruence(uih.as_mat())?.to_spd()?,
    ];

    let mut states: Vec<GaussianSinkhornState> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let parity = n % 2;
        if n >= 2 {
            let p = if parity == 0 { &p0 } else { &p1 };
            bar[parity] = ricc_map(p, bar[parity].psd())?;
        }
        let (tau_n, m_n, sigma_pi_n) = if parity == 0 {
            let tau = bar[0].sym().congruence(vh.as_mat())?.to_spd()?;
            let m = if n == 0 {
                &k.alpha + &k.beta * &mu.mean
            } else {
                &eta.mean + tau.as_mat() * &chi * (&mu.mean - &states[n - 1].m_n)
            };
            let s = cuc.congruence(tau.as_mat())?.add(tau.sym())?.to_spd()?;
            (tau, m, s)
        } else {
            let tau = bar[1].sym().congruence(uh.as_mat())?.to_spd()?;
            let m = &mu.mean + tau.as_mat() * chi.transpose() * (&eta.mean - &states[n - 1].m_n);
            let s = cvc.congruence(tau.as_mat())?.add(tau.sym())?.to_spd()?;
            (tau, m, s)
        };
        states.push(GaussianSinkhornState { n, tau_n, m_n, sigma_pi_n });
        if tol > 0.0 && n >= 3 && moved(&states, n) < tol && moved(&states, n - 1) < tol {
            break;
        }
    }
    Ok(states)
}

fn moved(states: &[GaussianSinkhornState], n: usize) -> f64 {
    let (a, b) = (&states[n], &states[n - 2]);
    (a.tau_n.as_mat() - b.tau_n.as_mat()).norm() + (&a.m_n - &b.m_n).norm()
}

/// Sinkhorn plans by direct Gaussian conditioning on the `2d`-dimensional
/// joint: each half-step keeps one marginal and the conditional law of the
/// other coordinate. Independent of the Riccati route.
pub fn sinkhorn_plans_by_conditioning(
    mu: &GaussianMeasure,
    eta: &GaussianMeasure,
    k: &LinearGaussianKernel,
    n_max: usize,
) -> Result<Vec<JointGaussian>> {
    let mut plans = vec![joint_plan(mu, &k.as_map())?];
    for n in 0..n_max {
        let p = &plans[n];
        let next = if n % 2 == 0 {
            joint_plan(eta, &p.conditional_first_given_second()?)?.swapped()
        } else {
            joint_plan(mu, &p.conditional_second_given_first()?)?
        };
        plans.push(next);
    }
    Ok(plans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::bridge_solve;

    #[test]
    fn initial_state() {
        let mu = GaussianMeasure::scalar(2.0, 1.5).unwrap();
        let eta = GaussianMeasure::scalar(-1.0, 0.5).unwrap();
        let k = LinearGaussianKernel::scalar(0.4, 1.3, 0.8).unwrap();
        let st = sinkhorn_run(&mu, &eta, &k, 3, 0.0).unwrap();
        assert!((st[0].tau_n.as_mat()[(0, 0)] - 0.8).abs() < 1e-14);
        assert!((st[0].m_n[0] - (0.4 + 1.3 * 2.0)).abs() < 1e-14);
    }

    #[test]
    fn riccati_route_matches_conditioning() {
        let mu = GaussianMeasure::scalar(1.0, 2.0).unwrap();
        let eta = GaussianMeasure::scalar(-0.5, 0.7).unwrap();
        let k = LinearGaussianKernel::scalar(0.2, 0.9, 1.1).unwrap();
        let st = sinkhorn_run(&mu, &eta, &k, 12, 0.0).unwrap();
        let plans = sinkhorn_plans_by_conditioning(&mu, &eta, &k, 12).unwrap();
        for (s, p) in st.iter().zip(&plans) {
            let q = s.plan(&mu, &eta, &k).unwrap();
            assert!((q.cov.as_mat() - p.cov.as_mat()).norm() < 1e-12, "n={}", s.n);
            assert!((&q.mean - &p.mean).norm() < 1e-12, "n={}", s.n);
        }
    }

    #[test]
    fn means_converge_to_targets() {
        let mu = GaussianMeasure::scalar(1.0, 1.0).unwrap();
        let eta = GaussianMeasure::scalar(-1.0, 1.0).unwrap();
        let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0).unwrap();
        let st = sinkhorn_run(&mu, &eta, &k, 80, 0.0).unwrap();
        assert!((st[80].m_n[0] + 1.0).abs() < 1e-12);
        assert!((st[79].m_n[0] - 1.0).abs() < 1e-12);
        let b = bridge_solve(&mu, &eta, &k).unwrap();
        assert!((st[80].tau_n.as_mat() - b.sigma().as_mat()).norm() < 1e-12);
        assert!((st[79].tau_n.as_mat() - b.sigma_flat().as_mat()).norm() < 1e-12);
    }
}
