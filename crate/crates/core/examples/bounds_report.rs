// Constants and envelopes for a curvature spec with `u_- = 0`.

use sinkbridge::bounds::{rate_table, varpi_family, xi_iota, CurvatureSpec, LowerCurvature};
use sinkbridge::gaussian::LinearGaussianKernel;
use sinkbridge::spd::{PsdMatrix, SpdMatrix};

pub fn run() -> sinkbridge::Result<()> {
    let k = LinearGaussianKernel::isotropic(2, 2.0)?;
    let spec = CurvatureSpec::new(
        SpdMatrix::from_diagonal(&[2.0, 1.0])?,
        SpdMatrix::from_diagonal(&[1.5, 1.5])?,
        LowerCurvature::Zero,
        LowerCurvature::Matrix(PsdMatrix::from_mat(nalgebra::DMatrix::from_diagonal_element(2, 2, 0.5))?),
    )?;
    let fam = varpi_family(&k, &spec)?;
    println!("w0_bar infinite: {}, w1 infinite: {}", fam.varpi0_bar.is_infinite(), fam.varpi1.is_infinite());
    let xi = xi_iota(&k, &spec, 6)?;
    println!("xi_odd {:?}\niota {}", xi.xi_odd, xi.iota);
    let rep = rate_table(&k, &spec, 6, 2)?;
    println!("eps {:.4} phi {:.4} strict order {}", rep.eps, rep.phi, rep.rate_order_strict);
    for (tag, e) in &rep.theorems {
        let f: Vec<String> = e.envelope.iter().map(|p| format!("{:.3e}", p.factor)).collect();
        println!("{tag:<24} {}", f.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sinkbridge::Result<()> {
    run()
}
