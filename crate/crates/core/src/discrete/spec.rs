//! JSON description of a grid model.
//!
//! ```json
//! {
//!   "grid": {"dim": 1, "n": 64, "radius": 8.0},
//!   "U": {"kind": "quadratic", "params": {"mean": [0.0], "cov": [[1.0]]}},
//!   "V": {"kind": "quartic-double-well", "params": {"scale": 0.25, "center": 1.5}},
//!   "W": {"kind": "linear-gaussian", "alpha": [0.0], "beta": [[1.0]], "tau": [[1.0]]}
//! }
//! ```
//!
//! `W` may also be `{"kind": "tabulated", "path": "w.csv"}` (an `N x N` CSV,
//! relative paths resolve against the config directory) or
//! `{"kind": "constant", "value": 0.0}`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

use super::{DiscreteModel, Grid};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum VectorSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl VectorSpec {
    pub fn to_vector(&self, d: usize) -> Result<DVector<f64>> {
        let v = match self {
            Self::Scalar(x) => vec![*x; d],
            Self::Vector(v) => v.clone(),
        };
        if v.len() != d {
            return Err(Error::Config(format!("expected a vector of length {d}, got {}", v.len())));
        }
        Ok(DVector::from_vec(v))
    }
}

/// A number means that multiple of the identity.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn to_matrix(&self, d: usize) -> Result<DMatrix<f64>> {
        match self {
            Self::Scalar(x) => Ok(DMatrix::identity(d, d) * *x),
            Self::Rows(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Config(format!("expected a {d}x{d} matrix")));
                }
                Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
            }
        }
    }

    pub fn to_spd(&self, d: usize) -> Result<SpdMatrix> {
        SpdMatrix::from_mat(self.to_matrix(d)?).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self::Rows((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub radius: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum PotentialSpec {
    /// `(x - m)^T cov^{-1} (x - m) / 2`
    Quadratic { mean: VectorSpec, cov: MatrixSpec },
    /// `scale (|x|^2 - center^2)^2`
    QuarticDoubleWell { scale: f64, center: f64 },
    /// `-log sum_k weights_k N(x; means_k, variances_k I)`
    GaussianMixture { weights: Vec<f64>, means: Vec<VectorSpec>, variances: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `y = alpha + beta x + N(0, tau)`
    LinearGaussian { alpha: VectorSpec, beta: MatrixSpec, tau: MatrixSpec },
    Tabulated { path: String },
    Constant { value: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiscreteModelSpec {
    pub grid: GridSpec,
    #[serde(rename = "U")]
    pub u: PotentialSpec,
    #[serde(rename = "V")]
    pub v: PotentialSpec,
    #[serde(rename = "W")]
    pub w: KernelSpec,
}

impl PotentialSpec {
    pub fn evaluator(&self, d: usize) -> Result<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>> {
        match self {
            Self::Quadratic { mean, cov } => {
                let m = mean.to_vector(d)?;
                let p = cov.to_spd(d)?.inverse().as_mat().clone();
                Ok(Box::new(move |x| {
                    let z = DVector::from_column_slice(x) - &m;
                    0.5 * z.dot(&(&p * &z))
                }))
            }
            Self::QuarticDoubleWell { scale, center } => {
                if !(*scale > 0.0) {
                    return Err(Error::Config("double-well scale must be positive".into()));
                }
                let (s, c2) = (*scale, center * center);
                Ok(Box::new(move |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    s * (r2 - c2).powi(2)
                }))
            }
            Self::GaussianMixture { weights, means, variances } => {
                if weights.is_empty() || weights.len() != means.len() || weights.len() != variances.len() {
                    return Err(Error::Config("mixture weights, means and variances must have equal length".into()));
                }
                if weights.iter().any(|w| !(*w > 0.0)) || variances.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::Config("mixture weights and variances must be positive".into()));
                }
                let comps: Vec<(f64, DVector<f64>, f64)> = weights
                    .iter()
                    .zip(means)
                    .zip(variances)
                    .map(|((w, m), s)| Ok((w.ln() - 0.5 * d as f64 * s.ln(), m.to_vector(d)?, *s)))
                    .collect::<Result<_>>()?;
                Ok(Box::new(move |x| {
                    let xv = DVector::from_column_slice(x);
                    let terms = comps.iter().map(|(lw, m, s)| lw - (&xv - m).norm_squared() / (2.0 * s));
                    -super::log_sum_exp(terms.clone().collect::<Vec<_>>().into_iter())
                }))
            }
        }
    }
}

fn read_table(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut out = Vec::with_capacity(n * n);
    for rec in rdr.records() {
        let rec = rec?;
        for field in rec.iter() {
            out.push(field.trim().parse::<f64>().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?);
        }
    }
    Ok(out)
}

impl DiscreteModelSpec {
    pub fn build(&self, base_dir: Option<&Path>) -> Result<DiscreteModel> {
        let d = self.grid.dim;
        let grid = Grid::uniform(d, self.grid.n, self.grid.radius)?;
        let u = self.u.evaluator(d)?;
        let v = self.v.evaluator(d)?;
        let n = grid.len();
        let ut: Vec<f64> = grid.points.iter().map(|x| u(x)).collect();
        let vt: Vec<f64> = grid.points.iter().map(|x| v(x)).collect();
        let wt = match &self.w {
            KernelSpec::LinearGaussian { alpha, beta, tau } => {
                let a = alpha.to_vector(d)?;
                let b = beta.to_matrix(d)?;
                let t = tau.to_spd(d)?;
                let ti = t.inverse().as_mat().clone();
                let norm = 0.5 * (t.log_det() + d as f64 * (2.0 * std::f64::consts::PI).ln());
                let mut out = Vec::with_capacity(n * n);
                for x in &grid.points {
                    let mean = &a + &b * DVector::from_column_slice(x);
                    for y in &grid.points {
                        let z = DVector::from_column_slice(y) - &mean;
                        out.push(0.5 * z.dot(&(&ti * &z)) + norm);
                    }
                }
                out
            }
            KernelSpec::Tabulated { path } => {
                let p = Path::new(path);
                let full = match base_dir {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.to_path_buf(),
                };
                read_table(&full, n)?
            }
            KernelSpec::Constant { value } => vec![*value; n * n],
        };
        DiscreteModel::from_tables(grid, &ut, &vt, wt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds() {
        let js = r#"{
            "grid": {"dim": 1, "n": 32, "radius": 6.0},
            "U": {"kind": "quadratic", "params": {"mean": 0.0, "cov": 1.0}},
            "V": {"kind": "gaussian-mixture", "params": {"weights": [0.5, 0.5], "means": [-1.5, 1.5], "variances": [0.5, 0.5]}},
            "W": {"kind": "linear-gaussian", "alpha": 0.0, "beta": 1.0, "tau": 1.0}
        }"#;
        let spec: DiscreteModelSpec = serde_json::from_str(js).unwrap();
        let m = spec.build(None).unwrap();
        assert_eq!(m.len(), 32);
        // with the Gaussian normalization the raw rows already carry unit mass
        let js2 = js.replace("\"U\"", "\"X\"");
        assert!(serde_json::from_str::<DiscreteModelSpec>(&js2).is_err());
    }

    #[test]
    fn double_well_has_two_wells() {
        let f = PotentialSpec::QuarticDoubleWell { scale: 1.0, center: 1.0 }.evaluator(1).unwrap();
        assert_eq!(f(&[1.0]), 0.0);
        assert_eq!(f(&[-1.0]), 0.0);
        assert_eq!(f(&[0.0]), 1.0);
    }
}
