//! Runs the full acceptance suite and prints one PASS/FAIL line per
//! criterion (visible with `cargo test -- --nocapture`, or in the assert
//! message on failure).

use degenfd::acceptance::run_all;

#[test]
fn acceptance_suite_passes() {
    let outcome = run_all();
    print!("{}", outcome.render());
    assert!(outcome.all_pass(), "\n{}", outcome.render());
}
