use serde::Serialize;

use crate::error::Result;

use super::{bridge_solve, gaussian_kl, gelbrich_w2, sinkhorn_run, GaussianBridge, GaussianMeasure, GaussianSinkhornState, LinearGaussianKernel};

/// Exact divergences along a Gaussian Sinkhorn run.
///
/// `kl_gap[n] = H(P | P_n)`; `marginal_kl[n]` is `H(eta | pi_n)` for even `n`
/// and `H(mu | pi_n)` for odd `n`, and `marginal_w2` the matching `W2`.
#[derive(Clone, Debug)]
pub struct GaussianTrace {
    pub bridge: GaussianBridge,
    pub states: Vec<GaussianSinkhornState>,
    pub kl_gap: Vec<f64>,
    pub marginal_kl: Vec<f64>,
    pub marginal_w2: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub kl_gap: f64,
    pub marginal_kl: f64,
    pub marginal_w2: f64,
}

pub fn gaussian_trace(mu: &GaussianMeasure, eta: &GaussianMeasure, k: &LinearGaussianKernel, n_max: usize) -> Result<GaussianTrace> {
    let bridge = bridge_solve(mu, eta, k)?;
    let target = bridge.plan(mu)?;
    let states = sinkhorn_run(mu, eta, k, n_max, 0.0)?;
    let (mut kl_gap, mut marginal_kl, mut marginal_w2) = (Vec::new(), Vec::new(), Vec::new());
    for st in &states {
        kl_gap.push(gaussian_kl(&target, &st.plan(mu, eta, k)?)?);
        let fixed = if st.n % 2 == 0 { eta } else { mu };
        let pi = st.marginal();
        marginal_kl.push(gaussian_kl(fixed, &pi)?);
        marginal_w2.push(gelbrich_w2(fixed, &pi)?);
    }
    Ok(GaussianTrace { bridge, states, kl_gap, marginal_kl, marginal_w2 })
}

impl GaussianTrace {
    pub fn rows(&self) -> Vec<TraceRow> {
        (0..self.kl_gap.len())
            .map(|n| TraceRow { n, kl_gap: self.kl_gap[n], marginal_kl: self.marginal_kl[n], marginal_w2: self.marginal_w2[n] })
            .collect()
    }
}
