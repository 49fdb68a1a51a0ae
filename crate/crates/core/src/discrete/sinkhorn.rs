use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::{log_sum_exp, DiscreteModel};

/// Potentials `(U_n, V_n)`; the plan is `p_n(x, y) = exp(-U_n(x) - W(x, y) - V_n(y))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSinkhornState {
    pub n: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// `U_0 = U + log K(1)`, `V_0 = 0`.
pub fn initial_state(model: &DiscreteModel) -> DiscreteSinkhornState {
    let zero = vec![0.0; model.len()];
    let u = update_u(model, &zero);
    DiscreteSinkhornState { n: 0, u, v: zero }
}

fn update_u(model: &DiscreteModel, v: &[f64]) -> Vec<f64> {
    let lw = &model.grid.log_weights;
    let base = model.mu.potential();
    (0..model.len())
        .into_par_iter()
        .map(|i| {
            let row = model.kernel.row(i);
            base[i] + log_sum_exp((0..row.len()).map(|j| lw[j] - row[j] - v[j]))
        })
        .collect()
}

fn update_v(model: &DiscreteModel, u: &[f64]) -> Vec<f64> {
    let lw = &model.grid.log_weights;
    let base = model.eta.potential();
    (0..model.len())
        .into_par_iter()
        .map(|j| {
            let col = model.kernel.col(j);
            base[j] + log_sum_exp((0..col.len()).map(|i| lw[i] - col[i] - u[i]))
        })
        .collect()
}

/// One half-step: even `n` updates `V` (fixing the second marginal), odd `n`
/// updates `U` (fixing the first).
pub fn sinkhorn_step(model: &DiscreteModel, state: &DiscreteSinkhornState) -> DiscreteSinkhornState {
    if state.n % 2 == 0 {
        DiscreteSinkhornState { n: state.n + 1, u: state.u.clone(), v: update_v(model, &state.u) }
    } else {
        DiscreteSinkhornState { n: state.n + 1, u: update_u(model, &state.v), v: state.v.clone() }
    }
}

/// Plan log-density on the product grid, row-major.
pub fn plan_log_density(model: &DiscreteModel, u: &[f64], v: &[f64]) -> Vec<f64> {
    let n = model.len();
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let w = model.kernel.row(i);
        for j in 0..n {
            row[j] = -u[i] - w[j] - v[j];
        }
    });
    out
}

/// Log-densities of the two marginals of the plan `(u, v)`.
pub fn marginals(model: &DiscreteModel, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let lw = &model.grid.log_weights;
    let n = model.len();
    let first = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = model.kernel.row(i);
            -u[i] + log_sum_exp((0..n).map(|j| lw[j] - row[j] - v[j]))
        })
        .collect();
    let second = (0..n)
        .into_par_iter()
        .map(|j| {
            let col = model.kernel.col(j);
            -v[j] + log_sum_exp((0..n).map(|i| lw[i] - col[i] - u[i]))
        })
        .collect();
    (first, second)
}

pub fn sup_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct SinkhornTrace {
    pub states: Vec<DiscreteSinkhornState>,
    /// `pi_n`: second marginal of `P_n` for even `n`, first marginal for odd `n`.
    pub marginals: Vec<Vec<f64>>,
    /// Sup-norm log-ratio of the free marginal to its target, per state.
    pub residuals: Vec<f64>,
    /// Sup-norm log-ratio of the constrained marginal to its target, per
    /// state; zero up to rounding.
    pub exactness: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

impl SinkhornTrace {
    pub fn last(&self) -> &DiscreteSinkhornState {
        self.states.last().expect("trace is never empty")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub converged: bool,
    pub sweeps: usize,
    pub final_residual: f64,
    pub max_exactness_error: f64,
}

impl SinkhornTrace {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            converged: self.converged,
            sweeps: self.sweeps,
            final_residual: self.residuals[self.residuals.len() - 2],
            max_exactness_error: self.exactness.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Full sweeps `P_{2k} -> P_{2k+1} -> P_{2k+2}` until the second marginal of
/// `P_{2k+2}` is within `tol` of `eta` (sup-norm of the log-ratio). One extra
/// half-step is appended so the trace always ends on an odd index.
pub fn run(model: &DiscreteModel, n_sweeps: usize, tol: f64) -> Result<SinkhornTrace> {
    if n_sweeps == 0 {
        return Err(Error::Config("n_sweeps must be at least 1".into()));
    }
    let mu_ld = &model.mu.log_density;
    let eta_ld = &model.eta.log_density;
    let mut trace = SinkhornTrace {
        states: Vec::new(),
        marginals: Vec::new(),
        residuals: Vec::new(),
        exactness: Vec::new(),
        converged: false,
        sweeps: 0,
    };
    let push = |trace: &mut SinkhornTrace, st: DiscreteSinkhornState| {
        let (first, second) = marginals(model, &st.u, &st.v);
        let (free, fixed) = if st.n % 2 == 0 {
            (second, sup_abs_diff(&first, mu_ld))
        } else {
            (first, sup_abs_diff(&second, eta_ld))
        };
        let target = if st.n % 2 == 0 { eta_ld } else { mu_ld };
        trace.residuals.push(sup_abs_diff(&free, target));
        trace.exactness.push(fixed);
        trace.marginals.push(free);
        trace.states.push(st);
    };
    push(&mut trace, initial_state(model));
    for sweep in 1..=n_sweeps {
        for _ in 0..2 {
            let next = sinkhorn_step(model, trace.last());
            push(&mut trace, next);
        }
        trace.sweeps = sweep;
        if *trace.residuals.last().unwrap() < tol {
            trace.converged = true;
            break;
        }
    }
    let next = sinkhorn_step(model, trace.last());
    push(&mut trace, next);
    Ok(trace)
}
