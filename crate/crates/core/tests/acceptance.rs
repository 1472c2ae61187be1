//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release -p spincell-core --test acceptance -- --nocapture`.

use spincell_core::acceptance::{run_all, AcceptanceOptions};

#[test]
fn acceptance_criteria() {
    let outcomes = run_all(&AcceptanceOptions::default());
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("{} of {} criteria pass", outcomes.len() - failed.len(), outcomes.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
