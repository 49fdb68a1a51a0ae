//! The Riccati map `Ricc(s) = (I + (w + s)^{-1})^{-1}`, its fixed point and
//! flows, and the `Psi` factorization.
//!
//! `Ricc` is a spectral function of `w + s`, namely `x / (1 + x)`, so one
//! eigendecomposition per application is enough.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_dims, Result};
use crate::spd::{check_invertible, loewner_lt, PsdMatrix, SpdMatrix, SymMatrix};

/// Riccati parameter. `Infinite` stands for `w^{-1} = 0`, where `Ricc = I`.
#[derive(Clone, Debug, PartialEq)]
pub enum RiccatiParam {
    Finite(SpdMatrix),
    Infinite { dim: usize },
}

impl RiccatiParam {
    pub fn scalar(w: f64) -> Result<Self> {
        Ok(Self::Finite(SpdMatrix::scalar(w)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Finite(w) => w.dim(),
            Self::Infinite { dim } => *dim,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite { .. })
    }

    pub fn finite(&self) -> Option<&SpdMatrix> {
        match self {
            Self::Finite(w) => Some(w),
            Self::Infinite { .. } => None,
        }
    }

    /// Build from `w^{-1}`; `None` encodes the zero inverse.
    pub fn from_inverse(inv: Option<SpdMatrix>, dim: usize) -> Self {
        match inv {
            Some(m) => Self::Finite(m.inverse()),
            None => Self::Infinite { dim },
        }
    }
}

pub fn ricc_map(p: &RiccatiParam, s: &PsdMatrix) -> Result<SpdMatrix> {
    check_dims("ricc_map", p.dim(), s.dim())?;
    match p {
        RiccatiParam::Infinite { dim } => Ok(SpdMatrix::identity(*dim)),
        RiccatiParam::Finite(w) => {
            let a = w.sym().add(s.sym())?.to_spd()?;
            Ok(a.map_spd(|x| x / (1.0 + x)))
        }
    }
}

/// `r = -w/2 + (w + w^2/4)^{1/2}`, written as `w / (w/2 + (w + w^2/4)^{1/2})`
/// to avoid cancellation for large eigenvalues.
pub fn fixed_point(p: &RiccatiParam) -> SpdMatrix {
    match p {
        RiccatiParam::Infinite { dim } => SpdMatrix::identity(*dim),
        RiccatiParam::Finite(w) => w.map_spd(|x| x / (0.5 * x + (x + 0.25 * x * x).sqrt())),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointReport {
    pub map_residual: f64,
    /// `|r + r w^{-1} r - I|`
    pub identity_residual: f64,
    /// `|r^{-1} - (I + u^{-1})|` with `u = w + r`
    pub inverse_residual: f64,
    pub lower_strict: bool,
    pub upper_strict: bool,
    pub chain_strict: bool,
}

impl FixedPointReport {
    pub fn passes(&self, map_tol: f64, identity_tol: f64) -> bool {
        self.map_residual < map_tol
            && self.identity_residual < identity_tol
            && self.inverse_residual < identity_tol
            && self.lower_strict
            && self.upper_strict
            && self.chain_strict
    }
}

/// Residuals of the fixed-point identities and the strict sandwich
/// `(I + w^{-1})^{-1} < r < I`, `I < r^{-1} = I + u^{-1} < I + w^{-1}`.
pub fn fixed_point_identities(p: &RiccatiParam) -> Result<Option<FixedPointReport>> {
    let w = match p.finite() {
        Some(w) => w,
        None => return Ok(None),
    };
    let d = w.dim();
    let id = SymMatrix::identity(d);
    let r = fixed_point(p);
    let map_residual = ricc_map(p, r.psd())?.sym().sub(r.sym())?.norm2();
    let winv = w.inverse();
    let ident = r.sym().add(&winv.sym().congruence(r.as_mat())?)?;
    let identity_residual = ident.sub(&id)?.norm2();
    let u = w.sym().add(r.sym())?.to_spd()?;
    let rinv = r.inverse();
    let i_plus_uinv = id.add(u.inverse().sym())?;
    let i_plus_winv = id.add(winv.sym())?;
    let inverse_residual = rinv.sym().sub(&i_plus_uinv)?.norm2();
    let lower = i_plus_winv.to_spd()?.inverse();
    Ok(Some(FixedPointReport {
        map_residual,
        identity_residual,
        inverse_residual,
        lower_strict: loewner_lt(lower.sym(), r.sym()),
        upper_strict: loewner_lt(r.sym(), &id),
        chain_strict: loewner_lt(&id, rinv.sym()) && loewner_lt(&i_plus_uinv, &i_plus_winv),
    }))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayParams {
    pub delta: f64,
    pub c_bound: f64,
}

/// `delta = (1 + l_min(u))^{-2}` with `u = w + r`, and the analytic constant
/// `c = delta^{-1} (|w||w^{-1}| / (1 + |w^{-1}|))^2 ((1 + |u|)(1 + |u^{-1}|))^2`.
pub fn decay_params(p: &RiccatiParam) -> Option<DecayParams> {
    let w = p.finite()?;
    let r = fixed_point(p);
    let u = w.sym().add(r.sym()).ok()?.to_spd().ok()?;
    let delta = (1.0 + u.eig_min()).powi(-2);
    let wn = w.norm2();
    let win = w.inverse().norm2();
    let un = u.norm2();
    let uin = u.inverse().norm2();
    let c_bound = (wn * win / (1.0 + win)).powi(2) * ((1.0 + un) * (1.0 + uin)).powi(2) / delta;
    Some(DecayParams { delta, c_bound })
}

#[derive(Clone, Debug)]
pub struct RiccatiFlow {
    pub param: RiccatiParam,
    pub r0: PsdMatrix,
    /// `trajectory[0] = r0`; every later element is SPD and below `I`.
    pub trajectory: Vec<PsdMatrix>,
}

impl RiccatiFlow {
    /// `|r_n - r|` along the trajectory.
    pub fn errors(&self) -> Vec<f64> {
        let r = fixed_point(&self.param);
        self.trajectory
            .iter()
            .map(|x| x.sym().sub(r.sym()).map(|d| d.norm2()).unwrap_or(f64::NAN))
            .collect()
    }

    /// Smallest `c` with `|r_n - r| <= c delta^n |r_0 - r|` over the trajectory,
    /// ignoring steps whose error is at or below `floor`.
    pub fn fitted_constant(&self, floor: f64) -> Option<f64> {
        let dp = decay_params(&self.param)?;
        let errs = self.errors();
        if errs[0] == 0.0 {
            return Some(0.0);
        }
        Some(
            errs.iter()
                .enumerate()
                .skip(1)
                .filter(|(_, e)| **e > floor)
                .map(|(n, e)| e / (dp.delta.powi(n as i32) * errs[0]))
                .fold(0.0, f64::max),
        )
    }

    pub fn last(&self) -> &PsdMatrix {
        self.trajectory.last().expect("trajectory is never empty")
    }
}

pub fn iterate(p: &RiccatiParam, r0: &PsdMatrix, n: usize) -> Result<RiccatiFlow> {
    check_dims("iterate", p.dim(), r0.dim())?;
    let mut traj = Vec::with_capacity(n + 1);
    traj.push(r0.clone());
    for _ in 0..n {
        let next = ricc_map(p, traj.last().unwrap())?.psd().clone();
        traj.push(next);
    }
    Ok(RiccatiFlow { param: p.clone(), r0: r0.clone(), trajectory: traj })
}

/// Scalar closed form
/// `r_n - r = (r0 - r)(w + 2r) d^n / ((r0 + w + r)(1 - d^n) + (w + 2r) d^n)`
/// with `d = (1 + w + r)^{-2}`.
pub fn scalar_closed_form(w: f64, r0: f64, n: usize) -> f64 {
    let r = w / (0.5 * w + (w + 0.25 * w * w).sqrt());
    let d = (1.0 + w + r).powi(-2);
    let dn = d.powi(n as i32);
    let a = w + 2.0 * r;
    r + (r0 - r) * a * dn / ((r0 + w + r) * (1.0 - dn) + a * dn)
}

/// `Psi_g(v) = (I + g v g^T)^{-1}`.
pub fn psi_map(gamma: &DMatrix<f64>, v: &PsdMatrix) -> Result<SpdMatrix> {
    check_invertible(gamma, "gamma")?;
    check_dims("psi_map", gamma.ncols(), v.dim())?;
    let inner = v.sym().congruence(gamma)?;
    let a = SymMatrix::identity(gamma.nrows()).add(&inner)?.to_spd()?;
    Ok(a.inverse())
}

/// `(g g^T)^{-1}` as a Riccati parameter.
pub fn psi_param(gamma: &DMatrix<f64>) -> Result<RiccatiParam> {
    check_invertible(gamma, "gamma")?;
    let ggt = SpdMatrix::from_mat(gamma * gamma.transpose())?;
    Ok(RiccatiParam::Finite(ggt.inverse()))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PsiResiduals {
    /// `|Psi_g(Psi_{g^T}(v)) - Ricc_{(g g^T)^{-1}}(v)|`
    pub composition: f64,
    /// `|Psi_{g^T}(r_{(g g^T)^{-1}}) - r_{(g^T g)^{-1}}|`
    pub transport: f64,
}

pub fn psi_residuals(gamma: &DMatrix<f64>, v: &PsdMatrix) -> Result<PsiResiduals> {
    let gt = gamma.transpose();
    let lhs = psi_map(gamma, psi_map(&gt, v)?.psd())?;
    let p = psi_param(gamma)?;
    let rhs = ricc_map(&p, v)?;
    let composition = lhs.sym().sub(rhs.sym())?.norm2();
    let moved = psi_map(&gt, fixed_point(&p).psd())?;
    let target = fixed_point(&psi_param(&gt)?);
    let transport = moved.sym().sub(target.sym())?.norm2();
    Ok(PsiResiduals { composition, transport })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLD: f64 = 0.618_033_988_749_894_8;

    fn s(x: f64) -> PsdMatrix {
        PsdMatrix::from_mat(DMatrix::from_element(1, 1, x)).unwrap()
    }

    #[test]
    fn ricc_examples() {
        let p = RiccatiParam::scalar(1.0).unwrap();
        assert!((ricc_map(&p, &s(0.0)).unwrap().as_mat()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((ricc_map(&p, &s(GOLD)).unwrap().as_mat()[(0, 0)] - GOLD).abs() < 1e-15);
        let inf = RiccatiParam::Infinite { dim: 2 };
        let out = ricc_map(&inf, &PsdMatrix::identity(2)).unwrap();
        assert_eq!(out.as_mat(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn fixed_point_examples() {
        let p = RiccatiParam::Finite(SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap());
        let r = fixed_point(&p);
        assert!((r.as_mat()[(0, 0)] - GOLD).abs() < 1e-14);
        assert!((r.as_mat()[(1, 1)] - (8f64.sqrt() - 2.0)).abs() < 1e-14);
        let dp = decay_params(&p).unwrap();
        assert!((dp.delta - 0.145_898_033_8).abs() < 1e-10);
    }

    #[test]
    fn delta_decreases_in_w() {
        let a = decay_params(&RiccatiParam::scalar(10.0).unwrap()).unwrap().delta;
        let b = decay_params(&RiccatiParam::scalar(100.0).unwrap()).unwrap().delta;
        assert!(b < a);
    }

    #[test]
    fn closed_form_matches_iteration() {
        for &(w, r0) in &[(1.0, 0.0), (2.0, 5.0), (0.1, 1.0), (10.0, 0.3)] {
            let p = RiccatiParam::scalar(w).unwrap();
            let flow = iterate(&p, &s(r0), 100).unwrap();
            for (n, x) in flow.trajectory.iter().enumerate() {
                assert!((x.as_mat()[(0, 0)] - scalar_closed_form(w, r0, n)).abs() < 1e-12, "w={w} n={n}");
            }
        }
        assert!((scalar_closed_form(1.0, 0.0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn psi_scalar() {
        let g = DMatrix::from_element(1, 1, 1.0);
        let res = psi_residuals(&g, &s(0.7)).unwrap();
        assert!(res.composition < 1e-14 && res.transport < 1e-14);
        assert!(psi_map(&DMatrix::zeros(1, 1), &s(0.7)).is_err());
    }
}
