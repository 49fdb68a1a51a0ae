use serde::Serialize;

use crate::error::{Error, Result};

use super::{marginals, plan_log_density, sinkhorn_step, sup_abs_diff, initial_state, DiscreteModel, SinkhornTrace};

/// Default slack for entropy orderings, absorbing rounding near zero.
pub const ENTROPY_SLACK: f64 = 1e-13;
/// Tolerance for the telescoping identities.
pub const TELESCOPE_TOL: f64 = 1e-9;
/// Both marginal residuals of the bridge oracle must be below this.
pub const ORACLE_TOL: f64 = 1e-13;

/// `e^l l - (e^l - 1) = sum_{k>=2} (k-1) l^k / k!`, nonnegative.
fn kl_term(l: f64) -> f64 {
    if l.abs() < 1e-2 {
        let mut term = l;
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 2..=9 {
            term *= l;
            fact *= k as f64;
            sum += (k - 1) as f64 * term / fact;
        }
        sum
    } else {
        l.exp() * l - l.exp_m1()
    }
}

/// `H(p | q) = sum_i w_i q_i phi(p_i / q_i)` with `phi(r) = r log r - r + 1`.
///
/// Equal to the usual relative entropy when both sides have unit mass, and
/// nonnegative term by term.
pub fn discrete_kl(log_w: &[f64], log_p: &[f64], log_q: &[f64]) -> f64 {
    log_w
        .iter()
        .zip(log_p.iter().zip(log_q))
        .map(|(lw, (lp, lq))| {
            if *lp == f64::NEG_INFINITY {
                (lw + lq).exp()
            } else {
                (lw + lq).exp() * kl_term(lp - lq)
            }
        })
        .sum()
}

/// Log-weights of the product grid.
pub fn product_log_weights(model: &DiscreteModel) -> Vec<f64> {
    let lw = &model.grid.log_weights;
    let n = lw.len();
    (0..n * n).map(|ij| lw[ij / n] + lw[ij % n]).collect()
}

/// Converged Schrodinger bridge on the grid.
#[derive(Clone, Debug)]
pub struct BridgeOracle {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub log_plan: Vec<f64>,
    pub first_residual: f64,
    pub second_residual: f64,
    pub half_steps: usize,
}

/// Iterate until both marginal residuals are below `1e-13`.
pub fn bridge_oracle(model: &DiscreteModel, max_half_steps: usize) -> Result<BridgeOracle> {
    let mut st = initial_state(model);
    let mut best = f64::INFINITY;
    loop {
        let (first, second) = marginals(model, &st.u, &st.v);
        let r1 = sup_abs_diff(&first, &model.mu.log_density);
        let r2 = sup_abs_diff(&second, &model.eta.log_density);
        best = best.min(r1.max(r2));
        if r1 < ORACLE_TOL && r2 < ORACLE_TOL {
            return Ok(BridgeOracle {
                log_plan: plan_log_density(model, &st.u, &st.v),
                u: st.u,
                v: st.v,
                first_residual: r1,
                second_residual: r2,
                half_steps: st.n,
            });
        }
        if st.n >= max_half_steps {
            return Err(Error::NonConvergence { iterations: st.n, residual: best });
        }
        st = sinkhorn_step(model, &st);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    pub h_pi2n_eta: f64,
    /// `NaN` for `n = 0`.
    pub h_mu_pi2n1: f64,
    pub h_eta_pi2n: f64,
    pub h_pi2n1_mu: f64,
    /// `H(P | P_{2n})` against the oracle bridge.
    pub h_bridge: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub rows: Vec<EntropyRow>,
    /// `H(P | P_m)` for every half-step `m` in the trace.
    pub bridge_gaps: Vec<f64>,
    pub max_telescope_error: f64,
    pub violations: Vec<String>,
}

impl EntropyReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn entropy_report(model: &DiscreteModel, trace: &SinkhornTrace, oracle: &BridgeOracle) -> EntropyReport {
    let lw = &model.grid.log_weights;
    let lw2 = product_log_weights(model);
    let mu = &model.mu.log_density;
    let eta = &model.eta.log_density;
    let pi = &trace.marginals;
    let bridge_gaps: Vec<f64> = trace
        .states
        .iter()
        .map(|s| discrete_kl(&lw2, &oracle.log_plan, &plan_log_density(model, &s.u, &s.v)))
        .collect();

    let last = trace.states.len() - 1;
    let rows: Vec<EntropyRow> = (0..=last / 2)
        .filter(|n| 2 * n + 1 <= last)
        .map(|n| EntropyRow {
            n,
            h_pi2n_eta: discrete_kl(lw, &pi[2 * n], eta),
            h_mu_pi2n1: if n == 0 { f64::NAN } else { discrete_kl(lw, mu, &pi[2 * n - 1]) },
            h_eta_pi2n: discrete_kl(lw, eta, &pi[2 * n]),
            h_pi2n1_mu: discrete_kl(lw, &pi[2 * n + 1], mu),
            h_bridge: bridge_gaps[2 * n],
        })
        .collect();

    let mut violations = Vec::new();
    let mut max_tel: f64 = 0.0;
    let slack = ENTROPY_SLACK;
    for r in &rows {
        let n = r.n;
        // H(P|P_{2n+1}) = H(P|P_{2n}) - H(eta|pi_{2n})
        let e = (bridge_gaps[2 * n + 1] - (bridge_gaps[2 * n] - r.h_eta_pi2n)).abs();
        max_tel = max_tel.max(e);
        if e > TELESCOPE_TOL {
            violations.push(format!("n={n}: odd telescoping identity off by {e:e}"));
        }
        if r.h_eta_pi2n > r.h_bridge + slack {
            violations.push(format!("n={n}: H(eta|pi_2n) exceeds H(P|P_2n)"));
        }
        if n >= 1 {
            let p = &rows[n - 1];
            // H(P|P_{2n}) = H(P|P_{2n-1}) - H(mu|pi_{2n-1})
            let e = (bridge_gaps[2 * n] - (bridge_gaps[2 * n - 1] - r.h_mu_pi2n1)).abs();
            max_tel = max_tel.max(e);
            if e > TELESCOPE_TOL {
                violations.push(format!("n={n}: even telescoping identity off by {e:e}"));
            }
            if !(r.h_pi2n_eta <= r.h_mu_pi2n1 + slack && r.h_mu_pi2n1 <= p.h_pi2n_eta + slack) {
                violations.push(format!("n={n}: chain H(pi_2n|eta) <= H(mu|pi_2n-1) <= H(pi_2n-2|eta) fails"));
            }
            if !(r.h_pi2n1_mu <= r.h_eta_pi2n + slack && r.h_eta_pi2n <= p.h_pi2n1_mu + slack) {
                violations.push(format!("n={n}: chain H(pi_2n+1|mu) <= H(eta|pi_2n) <= H(pi_2n-1|mu) fails"));
            }
        }
    }
    for (m, w) in bridge_gaps.windows(2).enumerate() {
        if w[1] > w[0] + slack {
            violations.push(format!("m={m}: bridge entropy increases ({:e} -> {:e})", w[0], w[1]));
        }
    }
    EntropyReport { rows, bridge_gaps, max_telescope_error: max_tel, violations }
}

/// Conditional moments of `y` given `x` under a 1-d plan: the
/// `mu`-average of `Var(y | x)` and the regression slope `Cov(x, y) / Var(x)`.
pub fn conditional_moments_1d(model: &DiscreteModel, log_plan: &[f64]) -> (f64, f64) {
    let n = model.len();
    let w = &model.grid.weights;
    let x: Vec<f64> = model.grid.points.iter().map(|p| p[0]).collect();
    let mut avg_var = 0.0;
    let (mut ex, mut ey, mut exx, mut exy) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| w[j] * log_plan[i * n + j].exp()).collect();
        let m0: f64 = row.iter().sum();
        let m1: f64 = row.iter().zip(&x).map(|(p, y)| p * y).sum::<f64>() / m0;
        let m2: f64 = row.iter().zip(&x).map(|(p, y)| p * (y - m1).powi(2)).sum::<f64>() / m0;
        let mass = w[i] * m0;
        avg_var += mass * m2;
        ex += mass * x[i];
        ey += mass * m1;
        exx += mass * x[i] * x[i];
        exy += mass * x[i] * m1;
    }
    (avg_var, (exy - ex * ey) / (exx - ex * ex))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{build_model, gaussian_cost, quadratic, run, Grid};

    #[test]
    fn kl_term_is_smooth_across_branches() {
        for &l in &[-0.02f64, -0.01 + 1e-12, 0.01 - 1e-12, 0.02, 1e-5] {
            let direct = l.exp() * l - l.exp_m1();
            assert!((kl_term(l) - direct).abs() <= 1e-15 * (1.0 + direct.abs()) + 1e-17, "l={l}");
        }
        assert!(kl_term(1e-9) > 0.0);
    }

    #[test]
    fn oracle_on_stationary_reference() {
        // mu K = eta exactly: build eta as the tabulated push-forward
        let g = Grid::uniform(1, 24, 5.0).unwrap();
        let m0 = build_model(quadratic(0.0, 1.0), quadratic(0.0, 1.0), gaussian_cost(0.0, 0.5, 1.0), g.clone()).unwrap();
        let pushed = marginals(&m0, &initial_state(&m0).u, &initial_state(&m0).v).1;
        let v: Vec<f64> = pushed.iter().map(|x| -x).collect();
        let w = m0.kernel.table.clone();
        let m = DiscreteModel::from_tables(g, &m0.mu.potential(), &v, w).unwrap();
        let o = bridge_oracle(&m, 10).unwrap();
        let p0 = plan_log_density(&m, &initial_state(&m).u, &initial_state(&m).v);
        assert!(sup_abs_diff(&o.log_plan, &p0) < 1e-12);
    }

    #[test]
    fn gaussian_desk_report_holds() {
        let g = Grid::uniform(1, 48, 7.0).unwrap();
        let m = build_model(quadratic(0.3, 1.0), quadratic(-0.2, 1.5), gaussian_cost(0.0, 1.0, 1.0), g).unwrap();
        let tr = run(&m, 200, 1e-10).unwrap();
        let o = bridge_oracle(&m, 2000).unwrap();
        let rep = entropy_report(&m, &tr, &o);
        assert!(rep.holds(), "{:?}", rep.violations);
    }
}
