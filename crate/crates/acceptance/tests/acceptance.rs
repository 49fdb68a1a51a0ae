//! Acceptance suite at seed 0 with default tolerances: one line per
//! criterion, nonzero exit if any fails.

use sinkbridge::verify::{run_suite, Tolerances, CRITERIA};

fn main() {
    let s = run_suite(0, None, &Tolerances::default());
    assert_eq!(s.criteria.len(), CRITERIA.len());
    println!("\nrunning {} acceptance criteria", s.criteria.len());
    for c in &s.criteria {
        println!("{}", c.line());
    }
    println!("acceptance: {} passed, {} failed\n", s.passed, s.failed);
    if !s.all_passed {
        std::process::exit(1);
    }
}
