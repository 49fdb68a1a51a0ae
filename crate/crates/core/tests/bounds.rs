use sinkbridge::bounds::{check_proximal_bounds, check_sinkhorn_bounds, tags, CurvatureSpec};
use sinkbridge::gaussian::{gaussian_trace, proximal_run, GaussianMeasure};
use sinkbridge::verify::gaussian_family;

#[test]
fn every_sinkhorn_envelope_dominates_gaussian_traces() {
    for seed in [0, 1, 2] {
        for (i, (mu, eta, k)) in gaussian_family(seed).iter().enumerate() {
            let spec = CurvatureSpec::gaussian(mu, eta);
            let tr = gaussian_trace(mu, eta, k, 40).unwrap();
            let checks = check_sinkhorn_bounds(k, &spec, &tr, 1e-14).unwrap();
            for tag in [tags::ENTROPY_RATE, tags::IMPROVED_RATE, tags::LOG_LYAPUNOV, tags::MARGINAL_KL, tags::MARGINAL_W2] {
                assert!(checks.iter().any(|c| c.tag == tag), "seed {seed} model {i}: {tag} not checked");
            }
            for c in &checks {
                assert!(c.checked > 0, "seed {seed} model {i}: {} empty", c.tag);
                assert!(c.holds(), "seed {seed} model {i}: {c:?}");
            }
        }
    }
}

#[test]
fn proximal_envelopes_hold() {
    for (i, (mu, _, k)) in gaussian_family(5).iter().enumerate() {
        let spec = CurvatureSpec::gaussian(mu, mu);
        let nu = GaussianMeasure::new(mu.mean.map(|x| x + 1.5), mu.cov.clone()).unwrap();
        let run = proximal_run(&nu, mu, k, 20).unwrap();
        for c in check_proximal_bounds(k, &spec, mu, &run, 1e-14).unwrap() {
            assert!(c.holds(), "model {i}: {c:?}");
        }
    }
}
