// Two-block Gibbs chain targeting `mu`, with its `W2` and entropy envelopes.

use sinkbridge::bounds::{proximal_rates, CurvatureSpec};
use sinkbridge::gaussian::{gaussian_kl, gelbrich_w2, proximal_run, GaussianMeasure, LinearGaussianKernel};

pub fn run() -> sinkbridge::Result<()> {
    let mu = GaussianMeasure::scalar(0.0, 1.0)?;
    let nu = GaussianMeasure::scalar(3.0, 0.2)?;
    let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0)?;
    let (a, b) = proximal_rates(&k, &CurvatureSpec::gaussian(&mu, &mu))?;
    println!("a = {a}, b = {b}");
    let path = proximal_run(&nu, &mu, &k, 12)?;
    let (w0, h0) = (gelbrich_w2(&nu, &mu)?, gaussian_kl(&nu, &mu)?);
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "n", "W2", "b^n W2_0", "KL", "a b^2(n-1) KL_0");
    for (n, x) in path.iter().enumerate() {
        let kl_env = if n == 0 { f64::NAN } else { a * b.powi(2 * (n as i32 - 1)) * h0 };
        println!(
            "{n:>3} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            gelbrich_w2(x, &mu)?,
            b.powi(n as i32) * w0,
            gaussian_kl(x, &mu)?,
            kl_env
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sinkbridge::Result<()> {
    run()
}
