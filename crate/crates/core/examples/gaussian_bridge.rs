// Closed-form bridge vs Sinkhorn on a 2-d linear-Gaussian model.

use nalgebra::{dmatrix, dvector};
use sinkbridge::gaussian::{bridge_solve, gaussian_trace, GaussianMeasure, LinearGaussianKernel};
use sinkbridge::spd::SpdMatrix;

pub fn run() -> sinkbridge::Result<()> {
    let mu = GaussianMeasure::new(dvector![1.0, -0.5], SpdMatrix::from_mat(dmatrix![1.5, 0.3; 0.3, 0.8])?)?;
    let eta = GaussianMeasure::new(dvector![0.0, 2.0], SpdMatrix::from_mat(dmatrix![0.7, -0.2; -0.2, 1.1])?)?;
    let k = LinearGaussianKernel::new(dvector![0.1, 0.0], dmatrix![0.9, 0.2; 0.0, 1.1], SpdMatrix::identity(2))?;

    let b = bridge_solve(&mu, &eta, &k)?;
    println!("forward slope\n{}", b.forward.slope);
    println!("conditional covariance sigma\n{}", b.sigma().as_mat());

    let tr = gaussian_trace(&mu, &eta, &k, 30)?;
    println!("{:>3} {:>14} {:>14}", "n", "H(P | P_n)", "W2 marginal");
    for row in tr.rows().iter().step_by(3) {
        println!("{:>3} {:>14.6e} {:>14.6e}", row.n, row.kl_gap, row.marginal_w2);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sinkbridge::Result<()> {
    run()
}
