// Iterate `Ricc_w` from `r0 = 0` and compare with the scalar closed form and
// the `c delta^n` envelope.
//
// cargo run --example riccati_flow -- 0.5

use sinkbridge::riccati::{decay_params, fixed_point, iterate, scalar_closed_form, RiccatiParam};
use sinkbridge::spd::PsdMatrix;

pub fn run(w: f64) -> sinkbridge::Result<()> {
    let p = RiccatiParam::scalar(w)?;
    let r = fixed_point(&p).as_mat()[(0, 0)];
    let dp = decay_params(&p).expect("finite");
    let flow = iterate(&p, &PsdMatrix::zeros(1), 30)?;
    println!("w = {w}: r = {r:.12}, delta = {:.6}, c_bound = {:.6}", dp.delta, dp.c_bound);
    println!("{:>3} {:>14} {:>14} {:>14}", "n", "|r_n - r|", "closed form", "envelope");
    let errs = flow.errors();
    for (n, e) in errs.iter().enumerate().step_by(3) {
        let cf = (scalar_closed_form(w, 0.0, n) - r).abs();
        println!("{n:>3} {e:>14.6e} {cf:>14.6e} {:>14.6e}", dp.c_bound * dp.delta.powi(n as i32) * errs[0]);
    }
    println!("smallest valid constant above 1e-14: {:.6}", flow.fitted_constant(1e-14).unwrap_or(0.0));
    Ok(())
}

#[allow(dead_code)]
fn main() -> sinkbridge::Result<()> {
    let w = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    run(w)
}
