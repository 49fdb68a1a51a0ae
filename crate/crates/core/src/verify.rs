//! The acceptance suite: eleven criteria, each a pass/fail line with a
//! deterministic detail string.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bounds::{
    check_proximal_bounds, check_sinkhorn_bounds, crossover, eps_lg, gradient_sandwich, phi, tags, CurvatureSpec,
    LowerCurvature,
};
use crate::discrete::{
    bridge_oracle, conditional_moments_1d, entropy_report, matrix_scaling_plans, plan_log_density, plan_masses, run,
    spec::DiscreteModelSpec,
};
use crate::error::{Error, Result};
use crate::gaussian::{
    barycentric_residual, bridge_solve, gaussian_trace, ot_limit_map, proximal_run, sinkhorn_plans_by_conditioning,
    GaussianMeasure, LinearGaussianKernel,
};
use crate::random;
use crate::riccati::{decay_params, fixed_point_identities, iterate, psi_residuals, scalar_closed_form, RiccatiParam};
use crate::spd::{spectral_norm, PsdMatrix, SpdMatrix};

pub const SCHEMA: &str = "sinkbridge/v1";

/// Every numeric threshold used by the suite; each can be overridden by key.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Tolerances {
    values: BTreeMap<&'static str, f64>,
}

const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("closed_form", 1e-12),
    ("decay_floor", 1e-14),
    ("discretization_ratio", 3.5),
    ("entropic_map", 1e-10),
    ("exactness", 1e-12),
    ("fixed_point_identity", 1e-9),
    ("fixed_point_map", 1e-10),
    ("kl_floor", 1e-14),
    ("ot_limit_gap", 5e-3),
    ("plan_oracle", 1e-12),
    ("psi", 1e-9),
    ("sigma_limit", 1e-10),
    ("sinkhorn_tol", 1e-10),
];

impl Default for Tolerances {
    fn default() -> Self {
        Self { values: DEFAULT_TOLERANCES.iter().copied().collect() }
    }
}

impl Tolerances {
    pub fn keys() -> impl Iterator<Item = &'static str> {
        DEFAULT_TOLERANCES.iter().map(|(k, _)| *k)
    }

    pub fn get(&self, key: &str) -> f64 {
        self.values[key]
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match self.values.get_mut(key) {
            Some(v) if value.is_finite() && value > 0.0 => {
                *v = value;
                Ok(())
            }
            Some(_) => Err(Error::Config(format!("tolerance {key} must be positive and finite"))),
            None => Err(Error::Config(format!(
                "unknown tolerance key {key:?} (known: {})",
                Self::keys().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    /// Parse `KEY=VAL`.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected KEY=VAL, got {kv:?}")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("not a number in {kv:?}")))?;
        self.set(k.trim(), v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("[{}] {:>2} {:<24} {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub schema: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub criteria: Vec<CriterionResult>,
    pub passed: usize,
    pub failed: usize,
    pub all_passed: bool,
}

impl VerifySummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

type Check = fn(u64, &Tolerances) -> Result<(bool, String)>;

pub const CRITERIA: &[(u32, &str, Check)] = &[
    (1, "riccati-fixed-point", riccati_fixed_point),
    (2, "riccati-decay", riccati_decay),
    (3, "psi-factorization", psi_factorization),
    (4, "gaussian-sinkhorn", gaussian_sinkhorn),
    (5, "improved-rate", improved_rate),
    (6, "entropic-map", entropic_map),
    (7, "ot-limit", ot_limit),
    (8, "proximal-sampler", proximal_sampler),
    (9, "discrete-sinkhorn", discrete_sinkhorn),
    (10, "discretization", discretization),
    (11, "determinism", |_, _| unreachable!("handled by run_suite")),
];

pub const DETERMINISM_ID: u32 = 11;

fn matches(filter: Option<&str>, id: u32, name: &str) -> bool {
    match filter {
        None => true,
        Some(f) => name.contains(f) || f == id.to_string(),
    }
}

fn run_one(id: u32, name: &str, check: Check, seed: u64, tol: &Tolerances) -> CriterionResult {
    let (passed, detail) = match check(seed, tol) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionResult { id, name: name.to_string(), passed, detail }
}

fn run_selected(ids: &[u32], seed: u64, tol: &Tolerances) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .filter(|(id, _, _)| ids.contains(id))
        .map(|&(id, name, check)| run_one(id, name, check, seed, tol))
        .collect()
}

/// Run the criteria whose name contains `filter` (or whose id equals it).
///
/// The determinism criterion reruns the other selected criteria (all of them
/// when it is selected alone) and compares serialized summaries byte for byte.
pub fn run_suite(seed: u64, filter: Option<&str>, tol: &Tolerances) -> VerifySummary {
    let selected: Vec<u32> = CRITERIA
        .iter()
        .filter(|(id, name, _)| matches(filter, *id, name))
        .map(|(id, _, _)| *id)
        .collect();
    let others: Vec<u32> = selected.iter().copied().filter(|&id| id != DETERMINISM_ID).collect();
    let mut criteria = run_selected(&others, seed, tol);
    if selected.contains(&DETERMINISM_ID) {
        let replay_ids: Vec<u32> = if others.is_empty() {
            CRITERIA.iter().map(|c| c.0).filter(|&id| id != DETERMINISM_ID).collect()
        } else {
            others.clone()
        };
        let first = if others.is_empty() { run_selected(&replay_ids, seed, tol) } else { criteria.clone() };
        let second = run_selected(&replay_ids, seed, tol);
        let a = serde_json::to_vec(&first).expect("serializes");
        let b = serde_json::to_vec(&second).expect("serializes");
        criteria.push(CriterionResult {
            id: DETERMINISM_ID,
            name: "determinism".into(),
            passed: a == b,
            detail: format!("{} criteria rerun, {} vs {} bytes, identical={}", replay_ids.len(), a.len(), b.len(), a == b),
        });
    }
    let passed = criteria.iter().filter(|c| c.passed).count();
    VerifySummary {
        schema: SCHEMA,
        command: "verify",
        seed,
        tolerances: tol.clone(),
        failed: criteria.len() - passed,
        all_passed: passed == criteria.len(),
        passed,
        criteria,
    }
}

fn stream(seed: u64, id: u64) -> rand_chacha::ChaCha8Rng {
    random::rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(id))
}

/// Scalars `0.1, 1, 10`, `diag(0.1, 1, 10)` and twenty random SPD matrices with `d <= 8`.
pub fn riccati_family(seed: u64) -> Vec<(String, RiccatiParam)> {
    let mut out: Vec<(String, RiccatiParam)> = [0.1, 1.0, 10.0]
        .iter()
        .map(|&w| (format!("scalar {w}"), RiccatiParam::scalar(w).expect("positive")))
        .collect();
    out.push(("diag(0.1,1,10)".into(), RiccatiParam::Finite(SpdMatrix::from_diagonal(&[0.1, 1.0, 10.0]).expect("spd"))));
    let mut rng = stream(seed, 1);
    for i in 0..20 {
        let d = 1 + i % 8;
        out.push((format!("random #{i} (d={d})"), RiccatiParam::Finite(random::spd(&mut rng, d, 0.05, 20.0))));
    }
    out
}

/// The standard-normal model followed by ten random models with `d <= 4`.
pub fn gaussian_family(seed: u64) -> Vec<(GaussianMeasure, GaussianMeasure, LinearGaussianKernel)> {
    let mut out = vec![(
        GaussianMeasure::standard(1),
        GaussianMeasure::standard(1),
        LinearGaussianKernel::scalar(0.0, 1.0, 1.0).expect("valid"),
    )];
    let mut rng = stream(seed, 4);
    for i in 0..10 {
        let d = 1 + i % 4;
        let mu = GaussianMeasure::new(random::vector(&mut rng, d, 1.0), random::spd(&mut rng, d, 0.5, 2.0)).expect("valid");
        let eta = GaussianMeasure::new(random::vector(&mut rng, d, 1.0), random::spd(&mut rng, d, 0.5, 2.0)).expect("valid");
        let k = LinearGaussianKernel::new(
            random::vector(&mut rng, d, 0.5),
            random::invertible(&mut rng, d, 0.5, 1.5),
            random::spd(&mut rng, d, 0.5, 2.0),
        )
        .expect("valid");
        out.push((mu, eta, k));
    }
    out
}

fn riccati_fixed_point(seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let (mut worst_map, mut worst_id) = (0.0f64, 0.0f64);
    let mut bad = Vec::new();
    let fam = riccati_family(seed);
    for (name, p) in &fam {
        let rep = fixed_point_identities(p)?.expect("finite parameter");
        worst_map = worst_map.max(rep.map_residual);
        worst_id = worst_id.max(rep.identity_residual).max(rep.inverse_residual);
        let strict = rep.lower_strict && rep.upper_strict && rep.chain_strict;
        if !rep.passes(tol.get("fixed_point_map"), tol.get("fixed_point_identity")) || !strict {
            bad.push(name.clone());
        }
    }
    Ok((
        bad.is_empty(),
        format!("{} parameters, max map residual {worst_map:.2e}, max identity residual {worst_id:.2e}{}", fam.len(), failures(&bad)),
    ))
}

fn failures(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!(", failing: {}", bad.join("; "))
    }
}

fn riccati_decay(seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let floor = tol.get("decay_floor");
    let mut bad = Vec::new();
    let mut worst_fit = 0.0f64;
    let fam = riccati_family(seed);
    for (name, p) in &fam {
        let d = p.dim();
        let dp = decay_params(p).expect("finite parameter");
        for (label, r0) in [("0", PsdMatrix::zeros(d)), ("I", PsdMatrix::identity(d))] {
            let flow = iterate(p, &r0, 60)?;
            let errs = flow.errors();
            let ok = errs
                .iter()
                .enumerate()
                .skip(1)
                .all(|(n, e)| *e <= dp.c_bound * dp.delta.powi(n as i32) * errs[0] * (1.0 + 1e-12) + floor);
            if !ok {
                let fit = flow.fitted_constant(floor).unwrap_or(f64::NAN);
                worst_fit = worst_fit.max(fit / dp.c_bound);
                bad.push(format!("{name} r0={label} (c_bound {:.3e}, needed {fit:.3e})", dp.c_bound));
            }
        }
    }
    let mut closed = 0.0f64;
    for w in [0.1, 1.0, 10.0] {
        let p = RiccatiParam::scalar(w)?;
        for r0 in [0.0, 0.5, 1.0] {
            let flow = iterate(&p, &PsdMatrix::new(crate::spd::SymMatrix::scalar(r0))?, 100)?;
            for (n, r) in flow.trajectory.iter().enumerate() {
                closed = closed.max((r.as_mat()[(0, 0)] - scalar_closed_form(w, r0, n)).abs());
            }
        }
    }
    let closed_ok = closed < tol.get("closed_form");
    Ok((
        bad.is_empty() && closed_ok,
        format!(
            "{} flows x 2 starts, {} envelope failures, closed-form max error {closed:.2e}{}",
            fam.len(),
            bad.len(),
            failures(&bad)
        ),
    ))
}

fn psi_factorization(seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let mut rng = stream(seed, 3);
    let (mut comp, mut transport) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let d = 1 + i % 4;
        let g = random::invertible(&mut rng, d, 0.3, 3.0);
        let v = random::spd(&mut rng, d, 0.1, 5.0).psd().clone();
        let r = psi_residuals(&g, &v)?;
        comp = comp.max(r.composition);
        transport = transport.max(r.transport);
    }
    let t = tol.get("psi");
    Ok((comp < t && transport < t, format!("50 gammas, composition {comp:.2e}, transport {transport:.2e}")))
}

const GAUSSIAN_STEPS: usize = 50;

fn gaussian_sinkhorn(seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let floor = tol.get("kl_floor");
    let mut bad = Vec::new();
    let (mut worst_ratio, mut oracle) = (0.0f64, 0.0f64);
    let fam = gaussian_family(seed);
    let mut sigma_err = f64::NAN;
    for (i, (mu, eta, k)) in fam.iter().enumerate() {
        let tr = gaussian_trace(mu, eta, k, GAUSSIAN_STEPS)?;
        if i == 0 {
            let golden = (5f64.sqrt() - 1.0) / 2.0;
            let last = tr.states.last().expect("nonempty").tau_n.as_mat()[(0, 0)];
            let bridge = tr.bridge.sigma().as_mat()[(0, 0)];
            sigma_err = (last - golden).abs().max((bridge - golden).abs());
        }
        let monotone = tr.kl_gap.windows(2).all(|w| w[1] <= w[0] + floor);
        let spec = CurvatureSpec::gaussian(mu, eta);
        let chk = check_sinkhorn_bounds(k, &spec, &tr, floor)?;
        let ent = chk.iter().find(|c| c.tag == tags::ENTROPY_RATE).expect("present");
        worst_ratio = worst_ratio.max(ent.worst_ratio);
        let plans = sinkhorn_plans_by_conditioning(mu, eta, k, GAUSSIAN_STEPS)?;
        for (st, p) in tr.states.iter().zip(&plans) {
            let q = st.plan(mu, eta, k)?;
            let scale = 1.0 + p.cov.norm2();
            oracle = oracle.max(spectral_norm(&(q.cov.as_mat() - p.cov.as_mat())) / scale);
            oracle = oracle.max((&q.mean - &p.mean).norm() / scale);
        }
        if !monotone || !ent.holds() {
            bad.push(format!("model {i} (monotone={monotone}, violations={})", ent.violations));
        }
    }
    let sigma_ok = sigma_err < tol.get("sigma_limit");
    let oracle_ok = oracle < 1e-9;
    Ok((
        bad.is_empty() && sigma_ok && oracle_ok,
        format!(
            "{} models, |sigma_50 - 0.6180339887| = {sigma_err:.2e}, worst gap/envelope {worst_ratio:.3}, riccati vs conditioning {oracle:.2e}{}",
            fam.len(),
            failures(&bad)
        ),
    ))
}

fn improved_rate(seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let floor = tol.get("kl_floor");
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    let fam = gaussian_family(seed);
    for (i, (mu, eta, k)) in fam.iter().enumerate() {
        let spec = CurvatureSpec::gaussian(mu, eta);
        let eps = eps_lg(k, &spec);
        let strict = (1.0 + phi(eps)).powi(-2) < 1.0 / (1.0 + 1.0 / eps);
        let tr = gaussian_trace(mu, eta, k, GAUSSIAN_STEPS)?;
        let chk = check_sinkhorn_bounds(k, &spec, &tr, floor)?;
        let imp = chk.iter().find(|c| c.tag == tags::IMPROVED_RATE).expect("present");
        worst = worst.max(imp.worst_ratio);
        if !strict || !imp.holds() {
            bad.push(format!("model {i} (strict={strict}, violations={})", imp.violations));
        }
    }
    let mut order = true;
    for j in 0..25 {
        let eps = 10f64.powf(-3.0 + 6.0 * j as f64 / 24.0);
        order &= (1.0 + phi(eps)).powi(-2) < 1.0 / (1.0 + 1.0 / eps);
    }
    Ok((
        bad.is_empty() && order,
        format!("{} models, worst gap/envelope {worst:.3}, strict ordering on 25 eps values: {order}{}", fam.len(), failures(&bad)),
    ))
}

fn entropic_map(seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let (mut bary, mut sandwich) = (0.0f64, 0.0f64);
    let mut ordered = true;
    let fam = gaussian_family(seed);
    for (mu, eta, k) in &fam {
        let b = bridge_solve(mu, eta, k)?;
        let chi = k.chi();
        bary = bary.max(barycentric_residual(&b.forward, &chi)?);
        bary = bary.max(barycentric_residual(&b.backward, &chi.transpose())?);
        let gs = gradient_sandwich(k, &CurvatureSpec::gaussian(mu, eta), &b)?;
        sandwich = sandwich.max(gs.collapse_residual());
        ordered &= gs.ordered(1e-10);
    }
    let t = tol.get("entropic_map");
    Ok((
        bary < t && sandwich < t && ordered,
        format!("{} models, barycentric identity {bary:.2e}, two-sided bounds collapse {sandwich:.2e}", fam.len()),
    ))
}

/// Bridge slope along `tau = t` for `u = 4`, `v = 1`, against the limit `1/2`.
pub fn ot_limit_gaps(ts: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mu = GaussianMeasure::scalar(0.0, 4.0)?;
    let eta = GaussianMeasure::scalar(0.0, 1.0)?;
    let one = DMatrix::identity(1, 1);
    let limit = ot_limit_map(&mu, &eta, &SpdMatrix::identity(1), &one)?;
    ts.iter()
        .map(|&t| {
            let k = LinearGaussianKernel::scalar(0.0, 1.0, t)?;
            let b = bridge_solve(&mu, &eta, &k)?;
            Ok((t, spectral_norm(&(&b.forward.slope - &limit.slope))))
        })
        .collect()
}

fn ot_limit(_seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let mu = GaussianMeasure::scalar(0.0, 4.0)?;
    let eta = GaussianMeasure::scalar(0.0, 1.0)?;
    let limit = ot_limit_map(&mu, &eta, &SpdMatrix::identity(1), &DMatrix::identity(1, 1))?.slope[(0, 0)];
    let gaps = ot_limit_gaps(&[1.0, 0.1, 0.01, 0.001])?;
    let monotone = gaps.windows(2).all(|w| w[1].1 < w[0].1);
    let last = gaps.last().expect("nonempty").1;
    let ok = monotone && last < tol.get("ot_limit_gap") && (limit - 0.5).abs() < 1e-14;
    let list: Vec<String> = gaps.iter().map(|(t, g)| format!("{t}:{g:.3e}")).collect();
    Ok((ok, format!("limit slope {limit:.15}, gaps {}, monotone={monotone}", list.join(" "))))
}

fn scalar_spec(u: f64, v: f64) -> Result<CurvatureSpec> {
    let (su, sv) = (SpdMatrix::scalar(u)?, SpdMatrix::scalar(v)?);
    CurvatureSpec::new(su.clone(), sv.clone(), LowerCurvature::Matrix(su.psd().clone()), LowerCurvature::Matrix(sv.psd().clone()))
}

fn proximal_sampler(seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let floor = tol.get("kl_floor");
    let mu = GaussianMeasure::scalar(0.0, 1.0)?;
    let k = LinearGaussianKernel::scalar(0.0, 1.0, 1.0)?;
    let spec = scalar_spec(1.0, 1.0)?;
    let mut starts = vec![GaussianMeasure::scalar(2.0, 0.25)?, GaussianMeasure::scalar(-1.0, 3.0)?];
    let mut rng = stream(seed, 8);
    for _ in 0..3 {
        starts.push(GaussianMeasure::new(random::vector(&mut rng, 1, 2.0), random::spd(&mut rng, 1, 0.1, 5.0))?);
    }
    let (mut viol, mut worst) = (0usize, 0.0f64);
    for nu in &starts {
        let path = proximal_run(nu, &mu, &k, 21)?;
        for c in check_proximal_bounds(&k, &spec, &mu, &path, floor)? {
            viol += c.violations;
            worst = worst.max(c.worst_ratio);
        }
    }
    let mut cross = Vec::new();
    let mut consistent = true;
    for (u, v) in [(2.0, 1.0), (1.0, 2.0)] {
        let c = crossover(&k, &scalar_spec(u, v)?)?;
        consistent &= c.consistent();
        cross.push(format!(
            "(u={u},v={v}: |u|>|v| is {}, (1+1/eps)^-1={:.4} < b^2={:.4} is {})",
            c.norm_side, c.sinkhorn_rate, c.b_squared, c.rate_side
        ));
    }
    Ok((
        viol == 0 && consistent,
        format!(
            "{} starts, n <= 20, {viol} envelope violations, worst ratio {worst:.3}; crossover equivalence {}: {}",
            starts.len(),
            if consistent { "holds" } else { "fails" },
            cross.join(" ")
        ),
    ))
}

pub const DISCRETE_MODELS: &[(&str, &str)] = &[
    ("gaussian-desk", include_str!("../configs/discrete.json")),
    ("gaussian-2d", include_str!("../configs/discrete-2d.json")),
    ("double-well", include_str!("../configs/discrete-double-well.json")),
    ("mixture", include_str!("../configs/discrete-mixture.json")),
    ("constant-kernel", include_str!("../configs/discrete-constant.json")),
];

pub fn embedded_discrete_model(json: &str) -> Result<DiscreteModelSpec> {
    let v: serde_json::Value = serde_json::from_str(json)?;
    Ok(serde_json::from_value(v["model"].clone())?)
}

fn discrete_sinkhorn(_seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let mut bad = Vec::new();
    let (mut plan_err, mut exact, mut tele) = (0.0f64, 0.0f64, 0.0f64);
    for (name, json) in DISCRETE_MODELS {
        let model = embedded_discrete_model(json)?.build(None)?;
        let trace = run(&model, 2000, tol.get("sinkhorn_tol"))?;
        let scaled = matrix_scaling_plans(&model, trace.states.len() - 1);
        let mut model_err = 0.0f64;
        for (st, lin) in trace.states.iter().zip(&scaled) {
            let pot = plan_masses(&model, &plan_log_density(&model, &st.u, &st.v));
            model_err = model_err.max(pot.iter().zip(lin).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        plan_err = plan_err.max(model_err);
        let ex = trace.exactness.iter().copied().fold(0.0, f64::max);
        exact = exact.max(ex);
        let oracle = bridge_oracle(&model, 100_000)?;
        let rep = entropy_report(&model, &trace, &oracle);
        tele = tele.max(rep.max_telescope_error);
        if model_err >= tol.get("plan_oracle") || ex >= tol.get("exactness") || !rep.holds() || !trace.converged {
            bad.push(format!(
                "{name} (plans {model_err:.1e}, exactness {ex:.1e}, converged {}, {})",
                trace.converged,
                rep.violations.first().cloned().unwrap_or_else(|| "chains hold".into())
            ));
        }
    }
    Ok((
        bad.is_empty(),
        format!(
            "{} models, potential vs scaling {plan_err:.2e}, exactness {exact:.2e}, telescoping {tele:.2e}{}",
            DISCRETE_MODELS.len(),
            failures(&bad)
        ),
    ))
}

/// `(points, |Var_grid(y|x) - sigma|)` for the 1-d model `mu = eta = N(0, 1)`, `tau = 0.02`.
pub fn discretization_errors(sizes: &[usize], tol: f64) -> Result<Vec<(usize, f64)>> {
    const T: f64 = 0.02;
    const RADIUS: f64 = 6.0;
    let mu = GaussianMeasure::scalar(0.0, 1.0)?;
    let k = LinearGaussianKernel::scalar(0.0, 1.0, T)?;
    let exact = bridge_solve(&mu, &mu, &k)?.forward.noise_cov.as_mat()[(0, 0)];
    sizes
        .iter()
        .map(|&n| {
            let grid = crate::discrete::Grid::uniform(1, n, RADIUS)?;
            let model = crate::discrete::build_model(
                crate::discrete::quadratic(0.0, 1.0),
                crate::discrete::quadratic(0.0, 1.0),
                crate::discrete::gaussian_cost(0.0, 1.0, T),
                grid,
            )?;
            let trace = run(&model, 5000, tol)?;
            if !trace.converged {
                return Err(Error::NonConvergence { iterations: trace.sweeps, residual: trace.summary().final_residual });
            }
            let st = trace.last();
            let (var, _) = conditional_moments_1d(&model, &plan_log_density(&model, &st.u, &st.v));
            Ok((n, (var - exact).abs()))
        })
        .collect()
}

fn discretization(_seed: u64, tol: &Tolerances) -> Result<(bool, String)> {
    let errs = discretization_errors(&[64, 128], 1e-12)?;
    let ratio = errs[0].1 / errs[1].1;
    Ok((
        ratio >= tol.get("discretization_ratio"),
        format!("conditional variance error {:.3e} (64 pts) -> {:.3e} (128 pts), ratio {ratio:.3e}", errs[0].1, errs[1].1),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let mut t = Tolerances::default();
        t.apply_override("psi=1e-6").unwrap();
        assert_eq!(t.get("psi"), 1e-6);
        assert!(t.apply_override("nope=1").is_err());
        assert!(t.apply_override("psi").is_err());
        assert!(t.apply_override("psi=-1").is_err());
    }

    #[test]
    fn filter_selects_by_substring() {
        assert!(matches(Some("riccati"), 1, "riccati-fixed-point"));
        assert!(!matches(Some("riccati"), 3, "psi-factorization"));
        assert!(matches(Some("3"), 3, "psi-factorization"));
    }
}
