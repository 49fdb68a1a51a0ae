use super::DiscreteModel;

/// Classical Sinkhorn-Knopp scaling in linear domain.
///
/// With `K_ij = exp(-W_ij) w_j`, plan masses are `a_i K_ij b_j`; the row
/// update matches `w_i mu_i` and the column update matches `w_j eta_j`.
/// Returns the plan masses `w_i w_j p_n(i, j)` for `n = 0..=n_half_steps`.
pub fn matrix_scaling_plans(model: &DiscreteModel, n_half_steps: usize) -> Vec<Vec<f64>> {
    let n = model.len();
    let w = &model.grid.weights;
    let row_target: Vec<f64> = (0..n).map(|i| w[i] * model.mu.log_density[i].exp()).collect();
    let col_target: Vec<f64> = (0..n).map(|j| w[j] * model.eta.log_density[j].exp()).collect();
    let k: Vec<f64> = (0..n * n).map(|ij| (-model.kernel.table[ij]).exp() * w[ij % n]).collect();

    let mut a = row_target.clone();
    let mut b = vec![1.0; n];
    let plan = |a: &[f64], b: &[f64]| -> Vec<f64> { (0..n * n).map(|ij| a[ij / n] * k[ij] * b[ij % n]).collect() };
    let mut out = vec![plan(&a, &b)];
    for step in 0..n_half_steps {
        if step % 2 == 0 {
            for j in 0..n {
                let s: f64 = (0..n).map(|i| a[i] * k[i * n + j]).sum();
                b[j] = col_target[j] / s;
            }
        } else {
            for i in 0..n {
                let s: f64 = (0..n).map(|j| k[i * n + j] * b[j]).sum();
                a[i] = row_target[i] / s;
            }
        }
        out.push(plan(&a, &b));
    }
    out
}

/// Plan masses `w_i w_j p(i, j)` from a plan log-density.
pub fn plan_masses(model: &DiscreteModel, log_p: &[f64]) -> Vec<f64> {
    let n = model.len();
    let lw = &model.grid.log_weights;
    (0..n * n).map(|ij| (lw[ij / n] + lw[ij % n] + log_p[ij]).exp()).collect()
}
