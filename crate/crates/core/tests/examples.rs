mod riccati_flow {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/riccati_flow.rs"));
}
mod gaussian_bridge {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/gaussian_bridge.rs"));
}
mod ot_limit {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/ot_limit.rs"));
}
mod proximal_sampler {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/proximal_sampler.rs"));
}
mod discrete_sinkhorn {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/discrete_sinkhorn.rs"));
}
mod bounds_report {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/bounds_report.rs"));
}
mod verify {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/verify.rs"));
}

#[test]
fn riccati_flow_runs() {
    riccati_flow::run(0.5).unwrap();
}

#[test]
fn gaussian_bridge_runs() {
    gaussian_bridge::run().unwrap();
}

#[test]
fn ot_limit_runs() {
    ot_limit::run().unwrap();
}

#[test]
fn proximal_sampler_runs() {
    proximal_sampler::run().unwrap();
}

#[test]
fn discrete_sinkhorn_runs() {
    discrete_sinkhorn::run().unwrap();
}

#[test]
fn bounds_report_runs() {
    bounds_report::run().unwrap();
}

#[test]
fn verify_subset_runs() {
    assert!(verify::run(Some("psi")));
}
