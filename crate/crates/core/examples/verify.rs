// The acceptance suite from code; pass a substring to run a subset.
//
// cargo run --release --example verify -- riccati

use sinkbridge::verify::{run_suite, Tolerances};

pub fn run(filter: Option<&str>) -> bool {
    let s = run_suite(0, filter, &Tolerances::default());
    for c in &s.criteria {
        println!("{}", c.line());
    }
    s.all_passed
}

#[allow(dead_code)]
fn main() {
    let filter = std::env::args().nth(1);
    if !run(filter.as_deref()) {
        std::process::exit(1);
    }
}
