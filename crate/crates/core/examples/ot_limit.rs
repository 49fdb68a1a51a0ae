// Bridge slope as the noise `tau = t` vanishes, against `u^{-1} # v`.

use nalgebra::DMatrix;
use sinkbridge::gaussian::{bridge_solve, ot_limit_map, GaussianMeasure, LinearGaussianKernel};
use sinkbridge::spd::SpdMatrix;

pub fn run() -> sinkbridge::Result<()> {
    let mu = GaussianMeasure::scalar(0.0, 4.0)?;
    let eta = GaussianMeasure::scalar(0.0, 1.0)?;
    let limit = ot_limit_map(&mu, &eta, &SpdMatrix::identity(1), &DMatrix::identity(1, 1))?.slope[(0, 0)];
    println!("limit slope {limit}");
    for t in [10.0, 1.0, 0.1, 0.01, 0.001] {
        let b = bridge_solve(&mu, &eta, &LinearGaussianKernel::scalar(0.0, 1.0, t)?)?;
        let s = b.forward.slope[(0, 0)];
        println!("t = {t:<6} slope {s:.9}  gap {:.3e}", (s - limit).abs());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sinkbridge::Result<()> {
    run()
}
