//! Explicit constants and rate envelopes: `eps`, `phi`, the `w` family,
//! curvature flows, `xi`/`iota` sequences and proximal-sampler rates.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_dims, Error, Result};
use crate::gaussian::{GaussianBridge, GaussianMeasure, LinearGaussianKernel};
use crate::riccati::{decay_params, fixed_point, ricc_map, RiccatiParam};
use crate::spd::{loewner_leq, spectral_norm, PsdMatrix, SpdMatrix, SymMatrix};

/// Lower curvature matrix `u_-` (or `v_-`); `Zero` encodes `u_- = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum LowerCurvature {
    Zero,
    Matrix(PsdMatrix),
}

impl LowerCurvature {
    pub fn from_psd(m: PsdMatrix) -> Self {
        if m.as_mat().iter().all(|x| *x == 0.0) {
            Self::Zero
        } else {
            Self::Matrix(m)
        }
    }

    fn sqrt(&self, d: usize) -> PsdMatrix {
        match self {
            Self::Zero => PsdMatrix::zeros(d),
            Self::Matrix(m) => m.sqrt(),
        }
    }

    fn sym(&self, d: usize) -> SymMatrix {
        match self {
            Self::Zero => SymMatrix::zeros(d),
            Self::Matrix(m) => m.sym().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    fn spd(&self) -> Option<SpdMatrix> {
        match self {
            Self::Zero => None,
            Self::Matrix(m) => SpdMatrix::new(m.sym().clone()).ok(),
        }
    }
}

/// User-supplied constants for the convex-at-infinity case; carried, never computed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexAtInfinity {
    pub delta_u: Option<f64>,
    pub delta_v: Option<f64>,
    pub u_bar: Option<f64>,
    pub v_bar: Option<f64>,
}

/// `u_+^{-1} <= Hess U <= u_-^{-1}` and `v_+^{-1} <= Hess V <= v_-^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSpec {
    pub u_plus: SpdMatrix,
    pub v_plus: SpdMatrix,
    pub u_minus: LowerCurvature,
    pub v_minus: LowerCurvature,
    pub convex_at_infinity: Option<ConvexAtInfinity>,
}

impl CurvatureSpec {
    pub fn new(u_plus: SpdMatrix, v_plus: SpdMatrix, u_minus: LowerCurvature, v_minus: LowerCurvature) -> Result<Self> {
        let d = u_plus.dim();
        check_dims("curvature spec", d, v_plus.dim())?;
        for (lower, upper, name) in [(&u_minus, &u_plus, "u"), (&v_minus, &v_plus, "v")] {
            if let LowerCurvature::Matrix(m) = lower {
                check_dims("curvature spec", d, m.dim())?;
                if !loewner_leq(m.sym(), upper.sym(), 1e-10) {
                    return Err(Error::Domain(format!("{name}_- must not exceed {name}_+")));
                }
            }
        }
        Ok(Self { u_plus, v_plus, u_minus, v_minus, convex_at_infinity: None })
    }

    /// Gaussian marginals: `u_+ = u_- = u`, `v_+ = v_- = v`.
    pub fn gaussian(mu: &GaussianMeasure, eta: &GaussianMeasure) -> Self {
        Self {
            u_plus: mu.cov.clone(),
            v_plus: eta.cov.clone(),
            u_minus: LowerCurvature::Matrix(mu.cov.psd().clone()),
            v_minus: LowerCurvature::Matrix(eta.cov.psd().clone()),
            convex_at_infinity: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.u_plus.dim()
    }
}

/// `eps = kappa^2 rho_1 rho_2`.
pub fn eps_generic(kappa: f64, rho1: f64, rho2: f64) -> f64 {
    kappa * kappa * rho1 * rho2
}

/// `kappa = |tau^{-1} beta|`.
pub fn kappa(k: &LinearGaussianKernel) -> f64 {
    spectral_norm(&k.chi())
}

/// `eps = |tau^{-1} beta|^2 |u_+| |v_+|`.
pub fn eps_lg(k: &LinearGaussianKernel, spec: &CurvatureSpec) -> f64 {
    eps_generic(kappa(k), spec.u_plus.norm2(), spec.v_plus.norm2())
}

/// `phi(eps) = eps^{-1} / ((1/4 + eps^{-1})^{1/2} + 1/2)`, the positive root of
/// `(1 + phi)^2 = 1 + eps^{-1} + phi`.
pub fn phi(eps: f64) -> f64 {
    let ie = 1.0 / eps;
    ie / ((0.25 + ie).sqrt() + 0.5)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarpiFamily {
    pub varpi0: RiccatiParam,
    pub varpi1: RiccatiParam,
    pub varpi0_bar: RiccatiParam,
    pub varpi1_bar: RiccatiParam,
}

fn varpi_from(outer: &PsdMatrix, inner: SymMatrix, d: usize) -> Result<RiccatiParam> {
    let inv = inner.congruence(outer.as_mat())?;
    if inv.as_mat().iter().all(|x| *x == 0.0) {
        return Ok(RiccatiParam::Infinite { dim: d });
    }
    let inv = inv
        .to_spd()
        .map_err(|_| Error::Domain("singular but nonzero lower curvature: the w matrix is not defined".into()))?;
    Ok(RiccatiParam::from_inverse(Some(inv), d))
}

/// ```text
/// w0^{-1}     = v_-^{1/2} (chi u_+ chi^T) v_-^{1/2}     w1^{-1}     = u_-^{1/2} (chi^T v_+ chi) u_-^{1/2}
/// w0_bar^{-1} = v_+^{1/2} (chi u_- chi^T) v_+^{1/2}     w1_bar^{-1} = u_+^{1/2} (chi^T v_- chi) u_+^{1/2}
/// ```
/// A zero factor gives the `Infinite` parameter.
pub fn varpi_family(k: &LinearGaussianKernel, spec: &CurvatureSpec) -> Result<VarpiFamily> {
    let d = spec.dim();
    check_dims("varpi_family", d, k.dim())?;
    let chi = k.chi();
    let cht = chi.transpose();
    let umh = spec.u_minus.sqrt(d);
    let vmh = spec.v_minus.sqrt(d);
    let (um, vm) = (spec.u_minus.sym(d), spec.v_minus.sym(d));
    Ok(VarpiFamily {
        varpi0: varpi_from(&vmh, spec.u_plus.sym().congruence(&chi)?, d)?,
        varpi1: varpi_from(&umh, spec.v_plus.sym().congruence(&cht)?, d)?,
        varpi0_bar: varpi_from(spec.v_plus.sqrt().psd(), um.congruence(&chi)?, d)?,
        varpi1_bar: varpi_from(spec.u_plus.sqrt().psd(), vm.congruence(&cht)?, d)?,
    })
}

/// `(A^{-1} + B)^{-1} = A^{1/2} (I + A^{1/2} B A^{1/2})^{-1} A^{1/2}`, valid for PSD `A`.
fn harmonic(a_sqrt: &PsdMatrix, b: &SymMatrix) -> Result<PsdMatrix> {
    let d = a_sqrt.dim();
    let inner = SymMatrix::identity(d).add(&b.congruence(a_sqrt.as_mat())?)?.to_spd()?;
    inner.inverse().sym().congruence(a_sqrt.as_mat())?.to_psd()
}

/// Interleaved covariance bounds: `sigma` from the `u_-, v_-` side, `tau` from the `u_+, v_+` side.
#[derive(Clone, Debug)]
pub struct CurvatureFlow {
    pub sigma: Vec<PsdMatrix>,
    pub tau: Vec<SpdMatrix>,
}

/// ```text
/// sigma_{2n+1}^{-1} = u_-^{-1} + chi^T tau_{2n} chi        tau_{2n+1}^{-1} = u_+^{-1} + chi^T sigma_{2n} chi
/// sigma_{2n+2}^{-1} = v_-^{-1} + chi tau_{2n+1} chi^T      tau_{2n+2}^{-1} = v_+^{-1} + chi sigma_{2n+1} chi^T
/// ```
/// from `sigma_0 = tau_0 = tau`. A zero lower curvature gives the zero matrix.
pub fn curvature_flow(k: &LinearGaussianKernel, spec: &CurvatureSpec, n_max: usize) -> Result<CurvatureFlow> {
    let d = spec.dim();
    check_dims("curvature_flow", d, k.dim())?;
    let chi = k.chi();
    let cht = chi.transpose();
    let (umh, vmh) = (spec.u_minus.sqrt(d), spec.v_minus.sqrt(d));
    let (uph, vph) = (spec.u_plus.sqrt(), spec.v_plus.sqrt());
    let mut sigma = vec![k.tau.psd().clone()];
    let mut tau = vec![k.tau.clone()];
    for n in 0..n_max {
        let (lo, hi, c) = if n % 2 == 0 { (&umh, uph.psd(), &cht) } else { (&vmh, vph.psd(), &chi) };
        let s = harmonic(lo, &tau[n].sym().congruence(c)?)?;
        let t = harmonic(hi, &sigma[n].sym().congruence(c)?)?.sym().to_spd()?;
        sigma.push(s);
        tau.push(t);
    }
    Ok(CurvatureFlow { sigma, tau })
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureFlowCheck {
    pub ordered: bool,
    pub max_tau_riccati_residual: f64,
    /// `None` when a lower curvature is zero and the rescaled `sigma` flow is undefined.
    pub max_sigma_riccati_residual: Option<f64>,
}

impl CurvatureFlow {
    /// `sigma_n <= tau_n`, and the rescaled flows
    /// `tau_bar_{2n} = v_+^{-1/2} tau_{2n} v_+^{-1/2}`, `tau_bar_{2n+1} = u_+^{-1/2} tau_{2n+1} u_+^{-1/2}`
    /// follow `Ricc_{w0_bar}`, `Ricc_{w1_bar}` (and `sigma_bar` follows `Ricc_{w0}`, `Ricc_{w1}`).
    pub fn check(&self, k: &LinearGaussianKernel, spec: &CurvatureSpec) -> Result<CurvatureFlowCheck> {
        let fam = varpi_family(k, spec)?;
        let ordered = self.sigma.iter().zip(&self.tau).all(|(s, t)| loewner_leq(s.sym(), t.sym(), 1e-10));
        let scale = [spec.v_plus.inv_sqrt(), spec.u_plus.inv_sqrt()];
        let bar: Vec<PsdMatrix> = self
            .tau
            .iter()
            .enumerate()
            .map(|(n, t)| t.sym().congruence(scale[n % 2].as_mat()).and_then(|s| s.to_psd()))
            .collect::<Result<_>>()?;
        let tau_res = riccati_residual(&bar, [&fam.varpi0_bar, &fam.varpi1_bar])?;
        let sigma_res = match (spec.v_minus.spd(), spec.u_minus.spd()) {
            (Some(vm), Some(um)) => {
                let sc = [vm.inv_sqrt(), um.inv_sqrt()];
                let sbar: Vec<PsdMatrix> = self
                    .sigma
                    .iter()
                    .enumerate()
                    .map(|(n, s)| s.sym().congruence(sc[n % 2].as_mat()).and_then(|x| x.to_psd()))
                    .collect::<Result<_>>()?;
                Some(riccati_residual(&sbar, [&fam.varpi0, &fam.varpi1])?)
            }
            _ => None,
        };
        Ok(CurvatureFlowCheck { ordered, max_tau_riccati_residual: tau_res, max_sigma_riccati_residual: sigma_res })
    }
}

fn riccati_residual(bar: &[PsdMatrix], params: [&RiccatiParam; 2]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 2..bar.len() {
        let pred = ricc_map(params[n % 2], &bar[n - 2])?;
        let scale = 1.0 + pred.norm2();
        worst = worst.max(pred.sym().sub(bar[n].sym())?.norm2() / scale);
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct XiIota {
    /// `xi_{2p} = |v_+| / |v_+^{1/2} Ricc^p_{w0_bar}(I) v_+^{1/2}|`, `p = 0..=p_max`.
    pub xi_even: Vec<f64>,
    /// `xi_{2p+1} = |u_+| / |u_+^{1/2} Ricc^p_{w1_bar}(I) u_+^{1/2}|`.
    pub xi_odd: Vec<f64>,
    pub iota0: f64,
    pub iota1: f64,
    pub iota: f64,
}

fn xi_sequence(scale: &SpdMatrix, p: &RiccatiParam, p_max: usize) -> Result<(Vec<f64>, f64)> {
    let d = scale.dim();
    let h = scale.sqrt();
    let n = scale.norm2();
    let ratio = |m: &SymMatrix| -> Result<f64> { Ok(n / m.congruence(h.as_mat())?.norm2()) };
    let mut cur = PsdMatrix::identity(d);
    let mut xs = Vec::with_capacity(p_max + 1);
    for _ in 0..=p_max {
        xs.push(ratio(cur.sym())?);
        cur = ricc_map(p, &cur)?.psd().clone();
    }
    Ok((xs, ratio(fixed_point(p).sym())?))
}

pub fn xi_iota(k: &LinearGaussianKernel, spec: &CurvatureSpec, p_max: usize) -> Result<XiIota> {
    let fam = varpi_family(k, spec)?;
    let (xi_even, iota0) = xi_sequence(&spec.v_plus, &fam.varpi0_bar, p_max)?;
    let (xi_odd, iota1) = xi_sequence(&spec.u_plus, &fam.varpi1_bar, p_max)?;
    Ok(XiIota { xi_even, xi_odd, iota0, iota1, iota: iota0.max(iota1) })
}

/// `a = |chi|^2 |tau| |u_+|`, `b = |chi|^2 |tau| |(u_+^{-1} + beta^T tau^{-1} beta)^{-1}|`.
pub fn proximal_rates(k: &LinearGaussianKernel, spec: &CurvatureSpec) -> Result<(f64, f64)> {
    let c = kappa(k).powi(2) * k.tau.norm2();
    let prec = spec
        .u_plus
        .inverse()
        .sym()
        .add(&k.tau.inverse().sym().congruence(&k.beta.transpose())?)?
        .to_spd()?;
    Ok((c * spec.u_plus.norm2(), c * prec.inverse().norm2()))
}

/// The two sides of the claimed equivalence `|u_+| > |v_+|  <=>  (1 + 1/eps)^{-1} < b^2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Crossover {
    pub norm_side: bool,
    pub rate_side: bool,
    pub sinkhorn_rate: f64,
    pub b_squared: f64,
}

impl Crossover {
    pub fn consistent(&self) -> bool {
        self.norm_side == self.rate_side
    }
}

pub fn crossover(k: &LinearGaussianKernel, spec: &CurvatureSpec) -> Result<Crossover> {
    let eps = eps_lg(k, spec);
    let (_, b) = proximal_rates(k, spec)?;
    let sinkhorn_rate = 1.0 / (1.0 + 1.0 / eps);
    Ok(Crossover {
        norm_side: spec.u_plus.norm2() > spec.v_plus.norm2(),
        rate_side: sinkhorn_rate < b * b,
        sinkhorn_rate,
        b_squared: b * b,
    })
}

/// Two-sided bounds on `grad K(I) chi` and `grad K_flat(I) chi^T`:
/// `chi^T v_-^{1/2} r_{w0} v_-^{1/2} chi <= grad chi <= chi^T v_+^{1/2} r_{w0_bar} v_+^{1/2} chi`
/// and the mirrored pair with `(u_-, w1, u_+, w1_bar)`.
#[derive(Clone, Debug)]
pub struct GradientSandwich {
    pub lower: SymMatrix,
    pub middle: DMatrix<f64>,
    pub upper: SymMatrix,
    pub flat_lower: SymMatrix,
    pub flat_middle: DMatrix<f64>,
    pub flat_upper: SymMatrix,
}

impl GradientSandwich {
    /// Largest distance between the three members of either chain.
    pub fn collapse_residual(&self) -> f64 {
        [
            spectral_norm(&(self.lower.as_mat() - &self.middle)),
            spectral_norm(&(self.upper.as_mat() - &self.middle)),
            spectral_norm(&(self.flat_lower.as_mat() - &self.flat_middle)),
            spectral_norm(&(self.flat_upper.as_mat() - &self.flat_middle)),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn ordered(&self, tol: f64) -> bool {
        let sym = |m: &DMatrix<f64>| SymMatrix::new(m.clone());
        match (sym(&self.middle), sym(&self.flat_middle)) {
            (Ok(m), Ok(f)) => {
                loewner_leq(&self.lower, &m, tol)
                    && loewner_leq(&m, &self.upper, tol)
                    && loewner_leq(&self.flat_lower, &f, tol)
                    && loewner_leq(&f, &self.flat_upper, tol)
            }
            _ => false,
        }
    }
}

pub fn gradient_sandwich(k: &LinearGaussianKernel, spec: &CurvatureSpec, bridge: &GaussianBridge) -> Result<GradientSandwich> {
    let d = spec.dim();
    let fam = varpi_family(k, spec)?;
    let chi = k.chi();
    let cht = chi.transpose();
    let side = |outer: &PsdMatrix, p: &RiccatiParam, c: &DMatrix<f64>| -> Result<SymMatrix> {
        fixed_point(p).sym().congruence(outer.as_mat())?.congruence(&c.transpose())
    };
    let grad = crate::gaussian::entropic_map_gradient(&bridge.forward);
    let flat = crate::gaussian::entropic_map_gradient(&bridge.backward);
    Ok(GradientSandwich {
        lower: side(&spec.v_minus.sqrt(d), &fam.varpi0, &chi)?,
        middle: grad * &chi,
        upper: side(spec.v_plus.sqrt().psd(), &fam.varpi0_bar, &chi)?,
        flat_lower: side(&spec.u_minus.sqrt(d), &fam.varpi1, &cht)?,
        flat_middle: flat * &cht,
        flat_upper: side(spec.u_plus.sqrt().psd(), &fam.varpi1_bar, &cht)?,
    })
}

/// `(c, delta)` maxima over `(w0_bar, w1_bar)`; an infinite member contributes 0.
pub fn bar_decay(fam: &VarpiFamily) -> (f64, f64) {
    [&fam.varpi0_bar, &fam.varpi1_bar]
        .iter()
        .filter_map(|p| decay_params(p))
        .fold((0.0, 0.0), |(c, d), dp| (c.max(dp.c_bound), d.max(dp.delta)))
}

pub mod tags {
    pub const ENTROPY_RATE: &str = "sinkhorn-entropy-rate";
    pub const IMPROVED_RATE: &str = "sinkhorn-improved-rate";
    pub const LOG_LYAPUNOV_XI: &str = "log-lyapunov-xi";
    pub const LOG_LYAPUNOV: &str = "log-lyapunov";
    pub const MARGINAL_KL: &str = "marginal-kl-decay";
    pub const MARGINAL_W2: &str = "marginal-w2-decay";
    pub const PROXIMAL_W2: &str = "proximal-w2";
    pub const PROXIMAL_KL: &str = "proximal-kl";
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopePoint {
    pub n: usize,
    pub factor: f64,
}

/// One bound: its constants and the multiplicative envelope per `n`.
#[derive(Clone, Debug, Serialize)]
pub struct TheoremEntry {
    pub statement: String,
    pub constants: BTreeMap<String, f64>,
    pub envelope: Vec<EnvelopePoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub eps: f64,
    pub phi: f64,
    pub rate_order_strict: bool,
    pub xi_iota: XiIota,
    pub theorems: BTreeMap<String, TheoremEntry>,
}

impl BoundReport {
    pub fn factor(&self, tag: &str, n: usize) -> Option<f64> {
        self.theorems.get(tag)?.envelope.iter().find(|p| p.n == n).map(|p| p.factor)
    }
}

/// Rate envelopes (`p` is the offset used by the log-Lyapunov bounds).
pub fn rate_table(k: &LinearGaussianKernel, spec: &CurvatureSpec, n_max: usize, p: usize) -> Result<BoundReport> {
    let p = p.max(1);
    let eps = eps_lg(k, spec);
    let ph = phi(eps);
    let r1 = 1.0 / (1.0 + 1.0 / eps);
    let r2 = (1.0 + ph).powi(-2);
    let fam = varpi_family(k, spec)?;
    let xi = xi_iota(k, spec, p.max(n_max))?;
    let (c_bar, delta_bar) = bar_decay(&fam);
    let (a, b) = proximal_rates(k, spec)?;
    let consts = |pairs: &[(&str, f64)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let env = |range: std::ops::RangeInclusive<usize>, f: &dyn Fn(usize) -> f64| {
        range.map(|n| EnvelopePoint { n, factor: f(n) }).collect::<Vec<_>>()
    };
    let mut th = BTreeMap::new();
    th.insert(
        tags::ENTROPY_RATE.to_string(),
        TheoremEntry {
            statement: "H(P|P_{2(n+p)}) <= (1+1/eps)^{-n} H(P|P_{2p}); same for odd indices".into(),
            constants: consts(&[("eps", eps), ("rate", r1)]),
            envelope: env(0..=n_max, &|n| r1.powi(n as i32)),
        },
    );
    th.insert(
        tags::IMPROVED_RATE.to_string(),
        TheoremEntry {
            statement: "H(P|P_{n+p}) <= (1+phi)^{-(n-2)} H(P|P_p), n >= 2".into(),
            constants: consts(&[("phi", ph), ("rate", 1.0 / (1.0 + ph))]),
            envelope: env(2..=n_max.max(2), &|n| (1.0 + ph).powi(-(n as i32 - 2))),
        },
    );
    let xi_p = xi.xi_even[p].max(xi.xi_odd[p]);
    th.insert(
        tags::LOG_LYAPUNOV_XI.to_string(),
        TheoremEntry {
            statement: "H(P|P_{2(n+1)}) <= (1+max(xi_2p, xi_2p+1)/eps)^{-(n-p)} H(P|P_{2p-1}), n >= p".into(),
            constants: consts(&[("p", p as f64), ("xi", xi_p)]),
            envelope: env(p..=n_max.max(p), &|n| (1.0 + xi_p / eps).powi(-((n - p) as i32))),
        },
    );
    let comp = 1.0 + xi.iota / (eps * (1.0 + c_bar * delta_bar.powi(p as i32)));
    th.insert(
        tags::LOG_LYAPUNOV.to_string(),
        TheoremEntry {
            statement: "H(P|P_{2(n+1)}) <= (1+iota/(eps(1+c delta^p)))^{-(n-p)} H(P|P_{2p-1}), n >= p".into(),
            constants: consts(&[("p", p as f64), ("iota", xi.iota), ("c", c_bar), ("delta", delta_bar)]),
            envelope: env(p..=n_max.max(p), &|n| comp.powi(-((n - p) as i32))),
        },
    );
    th.insert(
        tags::MARGINAL_KL.to_string(),
        TheoremEntry {
            statement: "H(eta|pi_{2(n+p)}) <= eps (1+phi)^{-2(n-1)} H(eta|pi_{2p}), n >= 1".into(),
            constants: consts(&[("eps", eps), ("phi", ph)]),
            envelope: env(1..=n_max.max(1), &|n| eps * (1.0 + ph).powi(-2 * (n as i32 - 1))),
        },
    );
    th.insert(
        tags::MARGINAL_W2.to_string(),
        TheoremEntry {
            statement: "W2(eta, pi_{2(n+p)}) <= eps (1+phi)^{-(n-1)} W2(eta, pi_{2p}), n >= 1".into(),
            constants: consts(&[("eps", eps), ("phi", ph)]),
            envelope: env(1..=n_max.max(1), &|n| eps * (1.0 + ph).powi(-(n as i32 - 1))),
        },
    );
    th.insert(
        tags::PROXIMAL_W2.to_string(),
        TheoremEntry {
            statement: "W2(nu S^n, mu) <= b^n W2(nu, mu)".into(),
            constants: consts(&[("b", b)]),
            envelope: env(0..=n_max, &|n| b.powi(n as i32)),
        },
    );
    th.insert(
        tags::PROXIMAL_KL.to_string(),
        TheoremEntry {
            statement: "H(nu S^{n+1}|mu) <= a b^{2n} H(nu|mu)".into(),
            constants: consts(&[("a", a), ("b", b)]),
            envelope: env(0..=n_max, &|n| a * b.powi(2 * n as i32)),
        },
    );
    Ok(BoundReport { eps, phi: ph, rate_order_strict: r2 < r1, xi_iota: xi, theorems: th })
}

/// Tally of `empirical <= bound (1 + 1e-9) + floor` over every admissible index pair.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub tag: String,
    pub checked: usize,
    pub violations: usize,
    /// Largest `empirical / bound` among bounds above the floor.
    pub worst_ratio: f64,
}

impl BoundCheck {
    fn new(tag: &str) -> Self {
        Self { tag: tag.to_string(), checked: 0, violations: 0, worst_ratio: 0.0 }
    }

    fn record(&mut self, empirical: f64, bound: f64, floor: f64) {
        self.checked += 1;
        if !(empirical <= bound * (1.0 + 1e-9) + floor) {
            self.violations += 1;
        }
        if bound > floor {
            self.worst_ratio = self.worst_ratio.max(empirical / bound);
        }
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Every Sinkhorn envelope of [`rate_table`] against a Gaussian run, for all
/// offsets `p` the trace allows.
pub fn check_sinkhorn_bounds(
    k: &LinearGaussianKernel,
    spec: &CurvatureSpec,
    trace: &crate::gaussian::GaussianTrace,
    floor: f64,
) -> Result<Vec<BoundCheck>> {
    let gap = &trace.kl_gap;
    let last = gap.len() - 1;
    let eps = eps_lg(k, spec);
    let ph = phi(eps);
    let r1 = 1.0 / (1.0 + 1.0 / eps);
    let fam = varpi_family(k, spec)?;
    let xi = xi_iota(k, spec, last / 2 + 1)?;
    let (c_bar, delta_bar) = bar_decay(&fam);

    let mut entropy = BoundCheck::new(tags::ENTROPY_RATE);
    for q in 0..2 {
        for p in 0..=last / 2 {
            for n in 1.. {
                let t = 2 * (n + p) + q;
                if t > last {
                    break;
                }
                entropy.record(gap[t], r1.powi(n as i32) * gap[2 * p + q], floor);
            }
        }
    }
    let mut improved = BoundCheck::new(tags::IMPROVED_RATE);
    for p in 0..=last {
        for n in 2..=last - p {
            improved.record(gap[n + p], (1.0 + ph).powi(-(n as i32 - 2)) * gap[p], floor);
        }
    }
    let mut lyap_xi = BoundCheck::new(tags::LOG_LYAPUNOV_XI);
    let mut lyap = BoundCheck::new(tags::LOG_LYAPUNOV);
    for p in 1..=last / 2 {
        let xp = xi.xi_even[p].max(xi.xi_odd[p]);
        let comp = 1.0 + xi.iota / (eps * (1.0 + c_bar * delta_bar.powi(p as i32)));
        for n in p.. {
            if 2 * (n + 1) > last {
                break;
            }
            let (target, base) = (gap[2 * (n + 1)], gap[2 * p - 1]);
            lyap_xi.record(target, (1.0 + xp / eps).powi(-((n - p) as i32)) * base, floor);
            lyap.record(target, comp.powi(-((n - p) as i32)) * base, floor);
        }
    }
    let mut mkl = BoundCheck::new(tags::MARGINAL_KL);
    let mut mw2 = BoundCheck::new(tags::MARGINAL_W2);
    for q in 0..2 {
        for p in 0..=last / 2 {
            for n in 1.. {
                let t = 2 * (n + p) + q;
                if t > last {
                    break;
                }
                let b = 2 * p + q;
                mkl.record(trace.marginal_kl[t], eps * (1.0 + ph).powi(-2 * (n as i32 - 1)) * trace.marginal_kl[b], floor);
                mw2.record(trace.marginal_w2[t], eps * (1.0 + ph).powi(-(n as i32 - 1)) * trace.marginal_w2[b], floor);
            }
        }
    }
    Ok(vec![entropy, improved, lyap_xi, lyap, mkl, mw2])
}

/// Proximal-sampler envelopes along `run = [nu, nu S, nu S^2, ...]`.
pub fn check_proximal_bounds(
    k: &LinearGaussianKernel,
    spec: &CurvatureSpec,
    mu: &GaussianMeasure,
    run: &[GaussianMeasure],
    floor: f64,
) -> Result<Vec<BoundCheck>> {
    let (a, b) = proximal_rates(k, spec)?;
    let w0 = crate::gaussian::gelbrich_w2(&run[0], mu)?;
    let h0 = crate::gaussian::gaussian_kl(&run[0], mu)?;
    let mut w2 = BoundCheck::new(tags::PROXIMAL_W2);
    let mut kl = BoundCheck::new(tags::PROXIMAL_KL);
    for (n, nu) in run.iter().enumerate() {
        w2.record(crate::gaussian::gelbrich_w2(nu, mu)?, b.powi(n as i32) * w0, floor);
        if n >= 1 {
            kl.record(crate::gaussian::gaussian_kl(nu, mu)?, a * b.powi(2 * (n as i32 - 1)) * h0, floor);
        }
    }
    Ok(vec![w2, kl])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_spec(up: f64, um: f64, vp: f64, vm: f64) -> CurvatureSpec {
        let low = |x: f64| {
            if x == 0.0 {
                LowerCurvature::Zero
            } else {
                LowerCurvature::Matrix(SpdMatrix::scalar(x).unwrap().psd().clone())
            }
        };
        CurvatureSpec::new(SpdMatrix::scalar(up).unwrap(), SpdMatrix::scalar(vp).unwrap(), low(um), low(vm)).unwrap()
    }

    #[test]
    fn phi_examples() {
        assert!((phi(1.0) - 0.618_033_988_7).abs() < 1e-10);
        assert!((phi(0.25) - 1.561_552_812_8).abs() < 1e-10);
        assert!(phi(1e6) < 1e-5);
        assert_eq!(eps_generic(2.0, 0.5, 3.0), 6.0);
    }

    #[test]
    fn zero_lower_curvatures_are_infinite() {
        let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0).unwrap();
        let fam = varpi_family(&k, &scalar_spec(1.0, 0.0, 1.0, 0.0)).unwrap();
        assert!(fam.varpi0_bar.is_infinite() && fam.varpi1.is_infinite());
        let xi = xi_iota(&k, &scalar_spec(1.0, 0.0, 1.0, 0.0), 5).unwrap();
        assert_eq!(xi.iota, 1.0);
        assert!(xi.xi_even.iter().chain(&xi.xi_odd).all(|&x| x == 1.0));
    }

    #[test]
    fn hand_iterated_curvature_flow() {
        let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0).unwrap();
        let spec = scalar_spec(2.0, 1.0, 2.0, 1.0);
        let f = curvature_flow(&k, &spec, 2).unwrap();
        let s: Vec<f64> = f.sigma.iter().map(|m| m.as_mat()[(0, 0)]).collect();
        let t: Vec<f64> = f.tau.iter().map(|m| m.as_mat()[(0, 0)]).collect();
        for (a, b) in s.iter().zip([1.0, 0.5, 0.6]) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in t.iter().zip([1.0, 2.0 / 3.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn proximal_examples() {
        let spec = scalar_spec(1.0, 1.0, 1.0, 1.0);
        let (a, b) = proximal_rates(&LinearGaussianKernel::scalar(0.0, 1.0, 1.0).unwrap(), &spec).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        let (_, b9) = proximal_rates(&LinearGaussianKernel::scalar(0.0, 1.0, 9.0).unwrap(), &spec).unwrap();
        assert!((b9 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn equality_case_matches_sinkhorn() {
        let mut rng = crate::random::rng(3);
        let d = 3;
        let mu = GaussianMeasure::new(crate::random::vector(&mut rng, d, 1.0), crate::random::spd(&mut rng, d, 0.5, 2.0)).unwrap();
        let eta = GaussianMeasure::new(crate::random::vector(&mut rng, d, 1.0), crate::random::spd(&mut rng, d, 0.5, 2.0)).unwrap();
        let k = LinearGaussianKernel::new(
            crate::random::vector(&mut rng, d, 1.0),
            crate::random::invertible(&mut rng, d, 0.5, 1.5),
            crate::random::spd(&mut rng, d, 0.5, 2.0),
        )
        .unwrap();
        let spec = CurvatureSpec::gaussian(&mu, &eta);
        let flow = curvature_flow(&k, &spec, 12).unwrap();
        let states = crate::gaussian::sinkhorn_run(&mu, &eta, &k, 12, 0.0).unwrap();
        for ((s, t), st) in flow.sigma.iter().zip(&flow.tau).zip(&states) {
            assert!((s.as_mat() - st.tau_n.as_mat()).norm() < 1e-10);
            assert!((t.as_mat() - st.tau_n.as_mat()).norm() < 1e-10);
        }
        let chk = flow.check(&k, &spec).unwrap();
        assert!(chk.ordered && chk.max_tau_riccati_residual < 1e-10);
        assert!(chk.max_sigma_riccati_residual.unwrap() < 1e-10);
    }

    #[test]
    fn scalar_equality_iota() {
        let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0).unwrap();
        let spec = scalar_spec(1.0, 1.0, 1.0, 1.0);
        let xi = xi_iota(&k, &spec, 10).unwrap();
        let r = fixed_point(&RiccatiParam::scalar(1.0).unwrap()).as_mat()[(0, 0)];
        assert!((xi.iota - 1.0 / r).abs() < 1e-12);
        for w in xi.xi_even.windows(2) {
            assert!(w[0] <= w[1] && w[1] <= xi.iota + 1e-12);
        }
    }

    #[test]
    fn varpi_scales_with_t_squared() {
        let spec = scalar_spec(2.0, 1.0, 3.0, 0.5);
        let mut base = None;
        for t in [0.1, 1.0, 10.0] {
            let fam = varpi_family(&LinearGaussianKernel::scalar(0.0, 1.0, t).unwrap(), &spec).unwrap();
            let vals: Vec<f64> = [fam.varpi0, fam.varpi1, fam.varpi0_bar, fam.varpi1_bar]
                .iter()
                .map(|p| p.finite().unwrap().as_mat()[(0, 0)] / (t * t))
                .collect();
            let b = base.get_or_insert_with(|| vals.clone());
            for (x, y) in vals.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12 * y.abs());
            }
        }
    }

    #[test]
    fn zero_lower_even_flow_is_identity() {
        let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0).unwrap();
        let spec = scalar_spec(2.0, 0.0, 2.0, 1.0);
        let flow = curvature_flow(&k, &spec, 8).unwrap();
        let chk = flow.check(&k, &spec).unwrap();
        assert!(chk.ordered && chk.max_tau_riccati_residual < 1e-12);
        for n in (2..=8).step_by(2) {
            let bar = flow.tau[n].as_mat()[(0, 0)] / 2.0;
            assert!((bar - 1.0).abs() < 1e-12);
        }
    }
}
