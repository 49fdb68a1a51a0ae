//! Sinkhorn on a quadrature grid, in log domain.
//!
//! Densities are taken with respect to the grid measure `sum_i w_i delta_{x_i}`.
//! The potential table `W` is row-normalized on construction, so every kernel
//! row integrates to one and `P_0 = mu x K` has first marginal `mu`.

mod entropy;
mod scaling;
mod sinkhorn;
pub mod spec;

pub use entropy::*;
pub use scaling::*;
pub use sinkhorn::*;

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Smallest log-mass we accept before calling a row empty.
pub(crate) const LOG_MIN_MASS: f64 = -708.0;

pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
    /// Per-axis spacing for uniform grids, `NaN` otherwise.
    pub spacing: f64,
}

impl Grid {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::Shape(format!("{} points, {} weights", points.len(), weights.len())));
        }
        let dim = points[0].len();
        if !(1..=2).contains(&dim) || points.iter().any(|p| p.len() != dim) {
            return Err(Error::Shape("grid points must all have dimension 1 or 2".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("quadrature weights must be positive".into()));
        }
        let mut seen = HashSet::new();
        for p in &points {
            if !seen.insert(p.iter().map(|x| x.to_bits()).collect::<Vec<_>>()) {
                return Err(Error::Domain("grid points must be distinct".into()));
            }
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self { dim, points, weights, log_weights, spacing: f64::NAN })
    }

    /// Midpoint grid on `[-radius, radius]^dim` with `n` cells per axis.
    pub fn uniform(dim: usize, n: usize, radius: f64) -> Result<Self> {
        if n == 0 || !(radius > 0.0) {
            return Err(Error::Config("grid needs n >= 1 and radius > 0".into()));
        }
        let h = 2.0 * radius / n as f64;
        let axis: Vec<f64> = (0..n).map(|k| -radius + (k as f64 + 0.5) * h).collect();
        let points: Vec<Vec<f64>> = match dim {
            1 => axis.iter().map(|&x| vec![x]).collect(),
            2 => axis.iter().flat_map(|&x| axis.iter().map(move |&y| vec![x, y])).collect(),
            _ => return Err(Error::Shape(format!("grid dimension {dim} not in {{1, 2}}"))),
        };
        let w = h.powi(dim as i32);
        let mut g = Self::new(points.clone(), vec![w; points.len()])?;
        g.spacing = h;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Density on the grid, normalized so that `sum_i w_i exp(log_density_i) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    pub log_density: Vec<f64>,
}

impl DiscreteMeasure {
    /// Boltzmann-Gibbs measure `exp(-U) / Z`.
    pub fn from_potential(grid: &Grid, potential: &[f64]) -> Result<Self> {
        if potential.len() != grid.len() {
            return Err(Error::Shape(format!("potential has {} values for {} points", potential.len(), grid.len())));
        }
        if potential.iter().any(|u| !u.is_finite()) {
            return Err(Error::Domain("potential is not finite on the grid".into()));
        }
        let log_z = log_sum_exp(grid.log_weights.iter().zip(potential).map(|(lw, u)| lw - u));
        if log_z < LOG_MIN_MASS {
            return Err(Error::Domain("total mass underflows on this grid; use a wider grid".into()));
        }
        Ok(Self { log_density: potential.iter().map(|u| -u - log_z).collect() })
    }

    /// `U = -log density`.
    pub fn potential(&self) -> Vec<f64> {
        self.log_density.iter().map(|x| -x).collect()
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.weights.iter().zip(&self.log_density).map(|(w, l)| w * l.exp()).sum()
    }
}

/// Row-normalized potential table, `table[i * n + j] = W(x_i, y_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteKernelPotential {
    pub n: usize,
    pub table: Vec<f64>,
    pub transposed: Vec<f64>,
}

impl DiscreteKernelPotential {
    pub fn new(grid: &Grid, raw: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if raw.len() != n * n {
            return Err(Error::Shape(format!("W table has {} entries, expected {}x{}", raw.len(), n, n)));
        }
        if raw.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("W table has non-finite entries".into()));
        }
        let mut table = raw;
        for i in 0..n {
            let row = &mut table[i * n..(i + 1) * n];
            let lm = log_sum_exp(grid.log_weights.iter().zip(row.iter()).map(|(lw, w)| lw - w));
            if lm < LOG_MIN_MASS {
                return Err(Error::Domain(format!(
                    "kernel row {i} has no mass on the grid (log-mass {lm:.1}); use a wider grid"
                )));
            }
            row.iter_mut().for_each(|w| *w += lm);
        }
        let mut transposed = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                transposed[j * n + i] = table[i * n + j];
            }
        }
        Ok(Self { n, table, transposed })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.table[i * self.n..(i + 1) * self.n]
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.transposed[j * self.n..(j + 1) * self.n]
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteModel {
    pub grid: Grid,
    pub mu: DiscreteMeasure,
    pub eta: DiscreteMeasure,
    pub kernel: DiscreteKernelPotential,
}

impl DiscreteModel {
    pub fn from_tables(grid: Grid, u: &[f64], v: &[f64], w: Vec<f64>) -> Result<Self> {
        let mu = DiscreteMeasure::from_potential(&grid, u)?;
        let eta = DiscreteMeasure::from_potential(&grid, v)?;
        let kernel = DiscreteKernelPotential::new(&grid, w)?;
        Ok(Self { grid, mu, eta, kernel })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Tabulate `(U, V, W)` on the grid and normalize.
pub fn build_model(
    u_fn: impl Fn(&[f64]) -> f64,
    v_fn: impl Fn(&[f64]) -> f64,
    w_fn: impl Fn(&[f64], &[f64]) -> f64,
    grid: Grid,
) -> Result<DiscreteModel> {
    let u: Vec<f64> = grid.points.iter().map(|x| u_fn(x)).collect();
    let v: Vec<f64> = grid.points.iter().map(|y| v_fn(y)).collect();
    let w: Vec<f64> = grid
        .points
        .iter()
        .flat_map(|x| grid.points.iter().map(move |y| (x, y)))
        .map(|(x, y)| w_fn(x, y))
        .collect();
    DiscreteModel::from_tables(grid, &u, &v, w)
}

/// Quadratic potential `|x - m|^2 / (2 s)`.
pub fn quadratic(m: f64, s: f64) -> impl Fn(&[f64]) -> f64 {
    move |x| x.iter().map(|xi| (xi - m).powi(2)).sum::<f64>() / (2.0 * s)
}

/// `W(x, y) = |y - a - b x|^2 / (2 t)`, up to a constant.
pub fn gaussian_cost(a: f64, b: f64, t: f64) -> impl Fn(&[f64], &[f64]) -> f64 {
    move |x, y| x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum::<f64>() / (2.0 * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_desk_model_tail_mass() {
        let g = Grid::uniform(1, 64, 8.0).unwrap();
        let m = build_model(quadratic(0.0, 1.0), quadratic(0.0, 1.0), gaussian_cost(0.0, 1.0, 1.0), g).unwrap();
        assert!((m.mu.mass(&m.grid) - 1.0).abs() < 1e-12);
        // the standard normal tail beyond 8 is ~1.2e-15
        let edge = m.mu.log_density[0].exp() * m.grid.spacing;
        assert!(edge < 1e-12);
    }

    #[test]
    fn constant_w_rows_are_uniform() {
        let g = Grid::uniform(1, 10, 1.0).unwrap();
        let m = build_model(quadratic(0.0, 1.0), quadratic(0.0, 1.0), |_, _| 3.0, g).unwrap();
        for i in 0..10 {
            for &w in m.kernel.row(i) {
                assert!((w - m.kernel.row(0)[0]).abs() < 1e-15);
            }
            let mass: f64 = m.kernel.row(i).iter().map(|w| (-w).exp() * 0.2).sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_and_underflow_errors() {
        let g = Grid::uniform(1, 4, 1.0).unwrap();
        assert!(matches!(DiscreteModel::from_tables(g.clone(), &[0.0; 4], &[0.0; 3], vec![0.0; 16]), Err(Error::Shape(_))));
        assert!(matches!(DiscreteModel::from_tables(g.clone(), &[0.0; 4], &[0.0; 4], vec![0.0; 15]), Err(Error::Shape(_))));
        let narrow = build_model(quadratic(0.0, 1.0), quadratic(0.0, 1.0), gaussian_cost(40.0, 1.0, 1.0), g);
        assert!(matches!(narrow, Err(Error::Domain(_))));
    }

    #[test]
    fn two_d_grid() {
        let g = Grid::uniform(2, 3, 1.5).unwrap();
        assert_eq!(g.len(), 9);
        assert!((g.weights[0] - 1.0).abs() < 1e-15);
    }
}
